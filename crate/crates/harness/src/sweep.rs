//! Parameter sweeps over gamma, xi or the Anderson depth.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use larche_core::schemes::Discretization;

use crate::config::{RunConfig, Scheme, Strategy};
use crate::error::{HarnessError, Result};
use crate::output::{write_outputs, write_sweep_summary};
use crate::run::{run_simulation, RunSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Gamma,
    Xi,
    Depth,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Gamma => "gamma",
            SweepKind::Xi => "xi",
            SweepKind::Depth => "depth",
        }
    }

    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepKind::Gamma => vec![1.0, 5.0, 10.0, 50.0, 100.0],
            SweepKind::Xi => vec![0.01, 0.1, 0.5, 1.0, 1.5, 2.0],
            SweepKind::Depth => (0..=5).map(f64::from).collect(),
        }
    }

    /// Strategies run by default for this sweep.
    pub fn default_strategies(self) -> Vec<(Scheme, Strategy)> {
        match self {
            SweepKind::Gamma | SweepKind::Xi => vec![
                (Scheme::Implicit, Strategy::Mono),
                (Scheme::SemiImplicit, Strategy::Mono),
                (Scheme::Implicit, Strategy::Split),
                (Scheme::SemiImplicit, Strategy::Split),
            ],
            SweepKind::Depth => vec![(Scheme::Implicit, Strategy::Split), (Scheme::SemiImplicit, Strategy::Split)],
        }
    }
}

impl std::str::FromStr for SweepKind {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma" => Ok(SweepKind::Gamma),
            "xi" => Ok(SweepKind::Xi),
            "depth" | "anderson-depth" | "anderson_depth" => Ok(SweepKind::Depth),
            _ => Err(HarnessError::Config(format!("unknown sweep '{s}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub x: f64,
    pub config: RunConfig,
}

impl SweepEntry {
    pub fn label(&self) -> String {
        format!("{}_{}", self.config.strategy_tag().as_str(), self.x)
    }
}

/// Configurations of a sweep: the base config with the swept parameter and strategy
/// substituted. The depth sweep runs at `gamma = 1`.
pub fn build_sweep(kind: SweepKind, base: &RunConfig, values: &[f64], strategies: &[(Scheme, Strategy)]) -> Vec<SweepEntry> {
    let mut out = Vec::new();
    for &x in values {
        for &(scheme, strategy) in strategies {
            let mut c = base.clone();
            c.solver.scheme = scheme;
            c.solver.strategy = strategy;
            match kind {
                SweepKind::Gamma => c.model.gamma = x,
                SweepKind::Xi => c.model.xi = x,
                SweepKind::Depth => {
                    c.model.gamma = 1.0;
                    c.solver.anderson_depth = x as usize;
                }
            }
            out.push(SweepEntry { x, config: c });
        }
    }
    out
}

/// Row of `sweep_summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub x: f64,
    pub strategy: String,
    pub avg_iterations: Option<f64>,
    pub avg_inner_iterations: Option<f64>,
    pub converged: bool,
    pub completed_steps: usize,
    pub failed_step: Option<usize>,
}

impl SweepRow {
    pub fn new(x: f64, s: &RunSummary) -> Self {
        Self {
            x,
            strategy: s.config.strategy_tag().as_str().to_string(),
            avg_iterations: if s.failed() { None } else { s.average_iterations() },
            avg_inner_iterations: if s.failed() { None } else { s.average_inner_iterations() },
            converged: !s.failed(),
            completed_steps: s.completed_steps(),
            failed_step: s.failure.as_ref().map(|f| f.step),
        }
    }
}

/// Runs all entries on `jobs` worker threads. With `out`, each run writes its
/// artifacts to `out/<label>/` and the table goes to `out/sweep_summary.csv`.
pub fn run_sweep(entries: &[SweepEntry], out: Option<&Path>, jobs: usize) -> Result<Vec<(SweepRow, RunSummary)>> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<RunSummary>>>> = Mutex::new((0..entries.len()).map(|_| None).collect());
    let worker = || loop {
        let i = next.fetch_add(1, Ordering::SeqCst);
        if i >= entries.len() {
            break;
        }
        let e = &entries[i];
        let r = run_simulation(&e.config).and_then(|s| {
            if let Some(dir) = out {
                let disc = Discretization::with_n(e.config.mesh.n)?;
                write_outputs(&s, disc.mesh(), &dir.join(e.label()), None)?;
            }
            Ok(s)
        });
        results.lock().expect("no worker panicked")[i] = Some(r);
    };
    std::thread::scope(|scope| {
        for _ in 0..jobs.max(1).min(entries.len().max(1)) {
            scope.spawn(worker);
        }
    });
    let mut rows = Vec::with_capacity(entries.len());
    for (e, r) in entries.iter().zip(results.into_inner().expect("no worker panicked")) {
        let s = r.expect("every entry ran")?;
        rows.push((SweepRow::new(e.x, &s), s));
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(crate::error::io_err(dir))?;
        let table: Vec<SweepRow> = rows.iter().map(|(r, _)| r.clone()).collect();
        write_sweep_summary(&dir.join("sweep_summary.csv"), &table)?;
    }
    Ok(rows)
}
