//! CSV, VTK and JSON artifacts of runs and sweeps.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use larche_core::analysis::{NormConstants, RateBound};
use larche_core::grid_fem::Mesh;
use larche_core::schemes::State;
use serde_json::json;

use crate::error::{io_err, HarnessError, Result};
use crate::run::{RunSummary, Snapshot};
use crate::sweep::SweepRow;

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let wrap = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(wrap)?;
    for r in rows {
        w.write_record(&r).map_err(wrap)?;
    }
    w.flush().map_err(io_err(path))
}

/// `step, time, chemical, gradient, elastic, total`, starting with the initial state.
pub fn write_energy_csv(path: &Path, summary: &RunSummary) -> Result<()> {
    let tau = summary.config.model.tau;
    let rows = summary.energies.iter().enumerate().map(|(k, e)| {
        vec![
            k.to_string(),
            format!("{:e}", k as f64 * tau),
            e.chemical.to_string(),
            e.gradient.to_string(),
            e.elastic.to_string(),
            e.total.to_string(),
        ]
    });
    write_rows(path, &["step", "time", "chemical", "gradient", "elastic", "total"], rows)
}

/// `step, strategy, outer_iters, inner_ch_iters, converged`.
pub fn write_iterations_csv(path: &Path, summary: &RunSummary) -> Result<()> {
    let tag = summary.config.strategy_tag().as_str();
    let rows = summary.steps.iter().map(|s| {
        vec![
            s.step.to_string(),
            tag.to_string(),
            s.iterations.to_string(),
            s.inner_iterations.to_string(),
            s.converged.to_string(),
        ]
    });
    write_rows(path, &["step", "strategy", "outer_iters", "inner_ch_iters", "converged"], rows)
}

/// One row per sweep value and strategy; failed runs have an empty average.
pub fn write_sweep_summary(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let data = rows.iter().map(|r| {
        vec![
            r.x.to_string(),
            r.strategy.clone(),
            r.avg_iterations.map_or(String::new(), |v| format!("{v:.3}")),
            r.avg_inner_iterations.map_or(String::new(), |v| format!("{v:.3}")),
            r.converged.to_string(),
            r.completed_steps.to_string(),
            r.failed_step.map_or(String::new(), |s| s.to_string()),
        ]
    });
    write_rows(
        path,
        &["x", "strategy", "avg_iterations", "avg_inner_iterations", "converged", "completed_steps", "failed_step"],
        data,
    )
}

/// Legacy ASCII VTK (3.0) structured grid with `phi`, `mu` and `u` as point data.
pub fn vtk_string(mesh: &Mesh, state: &State, title: &str) -> String {
    let np = mesh.n_per_side() + 1;
    let n = mesh.n_nodes();
    let mut s = String::with_capacity(80 * n);
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "{}", title.replace('\n', " "));
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET STRUCTURED_GRID");
    let _ = writeln!(s, "DIMENSIONS {np} {np} 1");
    let _ = writeln!(s, "POINTS {n} double");
    for p in mesh.coords() {
        let _ = writeln!(s, "{} {} 0", p[0], p[1]);
    }
    let _ = writeln!(s, "POINT_DATA {n}");
    for (name, v) in [("phi", &state.phi), ("mu", &state.mu)] {
        let _ = writeln!(s, "SCALARS {name} double 1");
        let _ = writeln!(s, "LOOKUP_TABLE default");
        for x in v.iter() {
            let _ = writeln!(s, "{x}");
        }
    }
    let _ = writeln!(s, "VECTORS u double");
    for k in 0..n {
        let _ = writeln!(s, "{} {} 0", state.u[k], state.u[n + k]);
    }
    s
}

pub fn write_vtk(path: &Path, mesh: &Mesh, snapshot: &Snapshot) -> Result<()> {
    let title = format!("larche step {} t={:e}", snapshot.step, snapshot.time);
    fs::write(path, vtk_string(mesh, &snapshot.state, &title)).map_err(io_err(path))
}

pub fn constants_json(c: &NormConstants) -> serde_json::Value {
    json!({
        "c_omega": c.c_omega,
        "c_inv": c.c_inv,
        "c_c_min": c.c_c_min,
        "c_c_max": c.c_c_max,
        "l_psi_c": c.l_psi_c,
        "lambda_1": c.lambda_1,
        "lambda_max": c.lambda_max,
        "n_eig": c.n_eig,
    })
}

pub fn bound_json(b: &RateBound) -> serde_json::Value {
    json!({
        "beta_ch": b.beta_ch,
        "beta_e": b.beta_e,
        "l_ch": b.l_ch,
        "contraction": b.contraction,
    })
}

/// Config echo, run statistics and, when given, the norm constants and rate bound.
pub fn run_json(summary: &RunSummary, analysis: Option<(&NormConstants, &RateBound)>) -> serde_json::Value {
    let failure = summary.failure.as_ref().map(|f| {
        json!({ "step": f.step, "error": f.error, "iterations": f.iterations })
    });
    json!({
        "config": &summary.config,
        "strategy": summary.config.strategy_tag().as_str(),
        "completed_steps": summary.completed_steps(),
        "avg_iterations": summary.average_iterations(),
        "avg_inner_iterations": summary.average_inner_iterations(),
        "final_energy": summary.energies.last().map(|e| e.total),
        "mass_drift": summary.mass_drift(),
        "failure": failure,
        "wall_time_s": summary.wall_time.as_secs_f64(),
        "constants": analysis.map(|(c, _)| constants_json(c)),
        "rate_bound": analysis.map(|(_, b)| bound_json(b)),
    })
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

/// Writes `energy.csv`, `iterations.csv`, `run.json` and one `snapshot_<step>.vtk`
/// per snapshot into `dir`. Returns the written paths.
pub fn write_outputs(
    summary: &RunSummary,
    mesh: &Mesh,
    dir: &Path,
    analysis: Option<(&NormConstants, &RateBound)>,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    let p = dir.join("energy.csv");
    write_energy_csv(&p, summary)?;
    written.push(p);
    let p = dir.join("iterations.csv");
    write_iterations_csv(&p, summary)?;
    written.push(p);
    for s in &summary.snapshots {
        let p = dir.join(format!("snapshot_{:06}.vtk", s.step));
        write_vtk(&p, mesh, s)?;
        written.push(p);
    }
    let p = dir.join("run.json");
    write_json(&p, &run_json(summary, analysis))?;
    written.push(p);
    Ok(written)
}
