use larche_core::grid_fem::build_mesh;
use larche_core::schemes::{Discretization, State};
use larche_harness::cases::{init_midsplit, init_random};
use larche_harness::config::{CaseKind, RunConfig, Scheme, Strategy as SolveStrategy};
use larche_harness::output::{vtk_string, write_outputs, write_sweep_summary};
use larche_harness::run::run_simulation;
use larche_harness::sweep::{build_sweep, run_sweep, SweepKind};
use proptest::prelude::*;

fn small(n: usize, steps: usize) -> RunConfig {
    let mut c = RunConfig::default();
    c.mesh.n = n;
    c.model.ell = 0.1;
    c.model.t_final = steps as f64 * c.model.tau;
    c
}

fn l2_diff(disc: &Discretization, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    disc.l2_norm(&d)
}

#[test]
fn defaults_reproduce_reference_parameters() {
    let c = RunConfig::default();
    assert_eq!((c.model.m, c.model.tau, c.model.t_final, c.model.ell, c.model.theta), (1.0, 1e-5, 0.01, 0.02, 2.0));
    assert_eq!(c.mesh.n, 65);
    assert!((std::f64::consts::SQRT_2 / c.mesh.n as f64 - build_mesh(65).unwrap().h() * std::f64::consts::SQRT_2).abs() < 1e-15);
    let r = c.stopping_rule();
    assert_eq!([r.tol_res_abs, r.tol_res_rel, r.tol_inc_abs, r.tol_inc_rel], [1e-6; 4]);
    assert_eq!(c.n_steps(), 1000);
    assert_eq!(RunConfig::random_preset().model.t_final, 0.02);
    c.validate().unwrap();
}

#[test]
fn partial_files_fill_in_defaults_and_typos_are_rejected() {
    let c = RunConfig::from_toml("[model]\ngamma = 10.0\n[solver]\nstrategy = \"mono\"\n").unwrap();
    assert_eq!(c.model.gamma, 10.0);
    assert_eq!(c.solver.strategy, SolveStrategy::Mono);
    assert_eq!(c.mesh.n, 65);
    assert!(RunConfig::from_toml("[model]\ngama = 10.0\n").is_err());
    assert!(RunConfig::from_toml("[model]\ntau = 0.0\n").is_err());
    assert!(RunConfig::from_toml("[case]\namplitude = 1.0\n").is_err());
    assert!(RunConfig::from_toml("[solver]\nscheme = \"homogeneous\"\n").is_err());
    assert!(RunConfig::from_toml("[solver]\nscheme = \"homogeneous\"\n[model]\nheterogeneous = false\n").is_ok());
    assert!(RunConfig::from_toml("[solver]\nmax_iters = 0\n").is_err());
    let mut c = RunConfig::default();
    c.case.seed = u64::MAX;
    assert!(c.validate().is_err());
}

fn arb_config() -> impl Strategy<Value = RunConfig> {
    (
        (0.1f64..10.0, 0.1f64..200.0, 0.005f64..0.2, 1e-7f64..1e-3, 0.0f64..0.1, 1.01f64..5.0, 0.0f64..3.0),
        (any::<bool>(), -1.0f64..1.0, 0usize..6, 1usize..1000, 1e-12f64..1e-2, 0u8..3, any::<bool>()),
        (1usize..100, 0..=i64::MAX as u64, 0.001f64..0.999, any::<bool>(), proptest::collection::vec(0.0f64..1.0, 0..4)),
    )
        .prop_map(|(m, s, o)| {
            let mut c = RunConfig::default();
            (c.model.m, c.model.gamma, c.model.ell, c.model.tau, c.model.t_final, c.model.theta, c.model.xi) = m;
            c.model.heterogeneous = s.0;
            c.model.reaction = s.1;
            c.solver.anderson_depth = s.2;
            c.solver.max_iters = s.3;
            c.solver.tol_inc_rel = s.4;
            c.solver.scheme = [Scheme::Implicit, Scheme::SemiImplicit, Scheme::Homogeneous][s.5 as usize];
            if c.solver.scheme == Scheme::Homogeneous {
                c.model.heterogeneous = false;
            }
            c.solver.strategy = if s.6 { SolveStrategy::Mono } else { SolveStrategy::Split };
            c.mesh.n = o.0;
            c.case.seed = o.1;
            c.case.amplitude = o.2;
            c.case.kind = if o.3 { CaseKind::Random } else { CaseKind::Midsplit };
            c.output.snapshot_times = o.4;
            c
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn config_round_trips(c in arb_config()) {
        c.validate().unwrap();
        let text = c.to_toml().unwrap();
        prop_assert_eq!(RunConfig::from_toml(&text).unwrap(), c);
    }
}

#[test]
fn midsplit_profile() {
    let mesh = build_mesh(64).unwrap();
    let phi = init_midsplit(&mesh, 0.02, false);
    let mid = mesh.node_index(10, 32);
    assert_eq!(phi[mid], 0.0);
    let bottom = mesh.node_index(5, 0);
    assert!((phi[bottom] - 1.0).abs() < 1e-15);
    assert!((phi[mesh.node_index(5, 64)] + 1.0).abs() < 1e-15);
    let mean = phi.iter().sum::<f64>() / phi.len() as f64;
    assert!(mean.abs() <= mesh.h());
    let sharp = init_midsplit(&mesh, 0.02, true);
    assert_eq!(sharp[mid], 0.0);
    assert!(sharp.iter().all(|v| [-1.0, 0.0, 1.0].contains(v)));
}

#[test]
fn random_field_is_seeded_and_bounded() {
    let mesh = build_mesh(65).unwrap();
    let a = init_random(&mesh, 7, 0.05);
    assert_eq!(a, init_random(&mesh, 7, 0.05));
    assert_ne!(a, init_random(&mesh, 8, 0.05));
    assert!(a.iter().all(|v| v.abs() <= 0.05));
    let mean = a.iter().sum::<f64>() / a.len() as f64;
    assert!(mean.abs() <= 3.0 * 0.05 / (a.len() as f64).sqrt());
}

#[test]
fn summary_bookkeeping_and_mass() {
    let c = small(8, 12);
    let s = run_simulation(&c).unwrap();
    assert!(!s.failed());
    assert_eq!(s.completed_steps(), 12);
    assert_eq!(s.energies.len(), s.completed_steps() + 1);
    assert_eq!(s.masses.len(), s.energies.len());
    let total: usize = s.steps.iter().map(|r| r.iterations).sum();
    assert_eq!(s.average_iterations().unwrap(), total as f64 / 12.0);
    assert!(s.mass_drift() <= 12.0 * 1e-9);
    assert!((s.steps[11].time - 12.0 * c.model.tau).abs() < 1e-18);
}

#[test]
fn failed_step_halts_the_run() {
    let mut c = small(8, 5);
    c.solver.max_iters = 1;
    let s = run_simulation(&c).unwrap();
    let f = s.failure.as_ref().unwrap();
    assert_eq!(f.step, 1);
    assert_eq!(s.steps.len(), 1);
    assert!(!s.steps[0].converged);
    assert_eq!(s.completed_steps(), 0);
    assert_eq!(s.average_iterations(), None);
    assert_eq!(s.energies.len(), 1);
}

#[test]
fn config_errors_surface_before_computing() {
    let mut c = small(8, 5);
    c.model.ell = -1.0;
    assert!(run_simulation(&c).is_err());
}

#[test]
fn identical_runs_write_identical_files() {
    let mut c = small(6, 6);
    c.case.kind = CaseKind::Random;
    c.case.seed = 3;
    c.output.snapshot_times = vec![0.0, 3e-5];
    let mesh = build_mesh(6).unwrap();
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let f1 = write_outputs(&run_simulation(&c).unwrap(), &mesh, d1.path(), None).unwrap();
    let f2 = write_outputs(&run_simulation(&c).unwrap(), &mesh, d2.path(), None).unwrap();
    assert_eq!(f1.len(), 5);
    for (a, b) in f1.iter().zip(&f2) {
        if a.extension().is_some_and(|e| e == "json") {
            continue; // carries wall-clock time
        }
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap(), "{}", a.display());
    }
}

#[test]
fn mono_and_split_agree_at_final_time() {
    let disc = Discretization::with_n(8).unwrap();
    for scheme in [Scheme::Implicit, Scheme::SemiImplicit] {
        let mut c = small(8, 10);
        c.solver.scheme = scheme;
        c.solver.strategy = SolveStrategy::Mono;
        let a = run_simulation(&c).unwrap();
        c.solver.strategy = SolveStrategy::Split;
        let b = run_simulation(&c).unwrap();
        let d = l2_diff(&disc, &a.final_state.phi, &b.final_state.phi);
        assert!(d <= 1e-4, "{scheme:?}: {d}");
    }
}

#[test]
fn homogeneous_energy_is_nonincreasing() {
    for tau in [1e-5, 5e-5] {
        let mut c = small(16, 0);
        c.model.heterogeneous = false;
        c.solver.scheme = Scheme::Homogeneous;
        c.solver.strategy = SolveStrategy::Mono;
        c.model.tau = tau;
        c.model.t_final = 20.0 * tau;
        let s = run_simulation(&c).unwrap();
        assert_eq!(s.completed_steps(), 20);
        assert!(s.energy_increases(0.0).is_empty(), "tau={tau}: {:?}", s.energy_increases(0.0));
    }
}

#[test]
fn empty_run_writes_headers_and_the_initial_energy() {
    let c = small(4, 0);
    let s = run_simulation(&c).unwrap();
    assert_eq!(s.steps.len(), 0);
    let dir = tempfile::tempdir().unwrap();
    write_outputs(&s, &build_mesh(4).unwrap(), dir.path(), None).unwrap();
    let it = std::fs::read_to_string(dir.path().join("iterations.csv")).unwrap();
    assert_eq!(it, "step,strategy,outer_iters,inner_ch_iters,converged\n");
    let en = std::fs::read_to_string(dir.path().join("energy.csv")).unwrap();
    assert_eq!(en.lines().count(), 2);
    assert!(en.starts_with("step,time,chemical,gradient,elastic,total\n0,"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(json["completed_steps"], 0);
    assert_eq!(json["config"]["mesh"]["n"], 4);
}

#[test]
fn vtk_of_constant_field() {
    let mesh = build_mesh(5).unwrap();
    let n = mesh.n_nodes();
    let state = State::from_phi(vec![1.0; n]);
    let text = vtk_string(&mesh, &state, "test");
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# vtk DataFile Version 3.0");
    assert_eq!(lines[2], "ASCII");
    assert_eq!(lines[3], "DATASET STRUCTURED_GRID");
    assert_eq!(lines[4], "DIMENSIONS 6 6 1");
    let start = lines.iter().position(|l| *l == "SCALARS phi double 1").unwrap() + 2;
    let values: Vec<f64> = lines[start..start + n].iter().map(|l| l.parse().unwrap()).collect();
    assert_eq!(values, vec![1.0; n]);
    assert_eq!(lines[start + n], "SCALARS mu double 1");
    assert!(lines.contains(&format!("POINT_DATA {n}").as_str()));
}

#[test]
fn gamma_sweep_table_layout() {
    let mut base = small(4, 2);
    base.solver.max_iters = 500;
    let entries = build_sweep(SweepKind::Gamma, &base, &SweepKind::Gamma.default_values(), &SweepKind::Gamma.default_strategies());
    assert_eq!(entries.len(), 20);
    let dir = tempfile::tempdir().unwrap();
    let rows = run_sweep(&entries, Some(dir.path()), 2).unwrap();
    assert_eq!(rows.len(), 20);
    let table = std::fs::read_to_string(dir.path().join("sweep_summary.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 21);
    assert!(lines[1].starts_with("1,imp_mono,"));
    assert!(lines[4].starts_with("1,semi_split,"));
    assert!(lines[20].starts_with("100,semi_split,"));
    assert!(dir.path().join("semi_split_5").join("energy.csv").exists());

    // a failed run keeps its row with an empty average
    let mut failing = base.clone();
    failing.solver.max_iters = 1;
    let e = build_sweep(SweepKind::Xi, &failing, &[2.0], &[(Scheme::Implicit, SolveStrategy::Split)]);
    let r = run_sweep(&e, None, 1).unwrap();
    assert!(!r[0].0.converged && r[0].0.avg_iterations.is_none() && r[0].0.failed_step == Some(1));
    let p = dir.path().join("failed.csv");
    write_sweep_summary(&p, &[r[0].0.clone()]).unwrap();
    assert_eq!(std::fs::read_to_string(p).unwrap().lines().nth(1).unwrap(), "2,imp_split,,,false,0,1");
}

#[test]
fn depth_sweep_runs_at_unit_surface_tension() {
    let base = small(4, 1);
    let e = build_sweep(SweepKind::Depth, &base, &[0.0, 2.0], &SweepKind::Depth.default_strategies());
    assert_eq!(e.len(), 4);
    assert!(e.iter().all(|x| x.config.model.gamma == 1.0));
    assert_eq!(e[2].config.solver.anderson_depth, 2);
}
