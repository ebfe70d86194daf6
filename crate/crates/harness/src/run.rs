//! Time loop.

use std::time::{Duration, Instant};

use larche_core::schemes::{free_energy, Discretization, EnergyBreakdown, SchemeContext, State};
use larche_core::solvers::{alternating_minimization, newton_monolithic, SolveReport, SolverWorkspace};

use crate::cases::{init_midsplit, init_random};
use crate::config::{CaseKind, RunConfig, Strategy};
use crate::error::Result;

/// Outcome of one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// 1-based step number.
    pub step: usize,
    pub time: f64,
    pub iterations: usize,
    pub inner_iterations: usize,
    pub converged: bool,
    pub wall_time: Duration,
    pub residual_history: Vec<f64>,
    /// Step potential at the initial guess and after every outer iteration (when recorded).
    pub potential_history: Vec<f64>,
}

impl StepRecord {
    fn from_report(step: usize, time: f64, r: &SolveReport) -> Self {
        Self {
            step,
            time,
            iterations: r.iterations,
            inner_iterations: r.inner_iterations,
            converged: r.converged,
            wall_time: r.wall_time,
            residual_history: r.residual_history.clone(),
            potential_history: r.potential_history.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailureRecord {
    pub step: usize,
    pub error: String,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub state: State,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub config: RunConfig,
    /// One record per attempted step; a failed step is the last entry.
    pub steps: Vec<StepRecord>,
    /// Free energy at `t = 0` and after every completed step.
    pub energies: Vec<EnergyBreakdown>,
    /// `int phi` at `t = 0` and after every completed step.
    pub masses: Vec<f64>,
    pub failure: Option<FailureRecord>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: State,
    pub wall_time: Duration,
}

impl RunSummary {
    pub fn completed_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.converged).count()
    }

    /// Outer iterations per completed step; `None` when no step completed.
    pub fn average_iterations(&self) -> Option<f64> {
        let done: Vec<_> = self.steps.iter().filter(|s| s.converged).collect();
        (!done.is_empty()).then(|| done.iter().map(|s| s.iterations).sum::<usize>() as f64 / done.len() as f64)
    }

    pub fn average_inner_iterations(&self) -> Option<f64> {
        let done: Vec<_> = self.steps.iter().filter(|s| s.converged).collect();
        (!done.is_empty()).then(|| done.iter().map(|s| s.inner_iterations).sum::<usize>() as f64 / done.len() as f64)
    }

    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }

    /// Steps `k` with `E_k > E_{k-1} + slack`.
    pub fn energy_increases(&self, slack: f64) -> Vec<usize> {
        self.energies
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1].total > w[0].total + slack)
            .map(|(k, _)| k + 1)
            .collect()
    }

    /// Largest `|int phi^k - int phi^0|`.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.masses.first().copied().unwrap_or(0.0);
        self.masses.iter().map(|m| (m - m0).abs()).fold(0.0, f64::max)
    }
}

/// Initial state `(phi^0, 0, 0)` for the configured case.
pub fn initial_state(config: &RunConfig, disc: &Discretization) -> State {
    let phi = match config.case.kind {
        CaseKind::Midsplit => init_midsplit(disc.mesh(), config.model.ell, config.case.sharp),
        CaseKind::Random => init_random(disc.mesh(), config.case.seed, config.case.amplitude),
    };
    State::from_phi(phi)
}

fn snapshot_steps(config: &RunConfig, n_steps: usize) -> Vec<usize> {
    let mut s: Vec<usize> = config
        .output
        .snapshot_times
        .iter()
        .map(|t| ((t / config.model.tau).round() as usize).min(n_steps))
        .collect();
    s.sort_unstable();
    s.dedup();
    s
}

/// Runs the configured simulation. Configuration errors are returned before any
/// computation; a failed step ends the run and is recorded in the summary.
pub fn run_simulation(config: &RunConfig) -> Result<RunSummary> {
    config.validate()?;
    let params = config.model_params()?;
    let disc = Discretization::with_n(config.mesh.n)?;
    let n_steps = config.n_steps();
    let rule = config.stopping_rule();
    let split_opts = config.split_options();
    let newton_opts = config.newton_options();
    let kind = config.solver.scheme.kind();
    let tag = config.strategy_tag();
    let snaps = snapshot_steps(config, n_steps);

    let start = Instant::now();
    let mut state = initial_state(config, &disc);
    let mut ctx = SchemeContext::new(kind, params, state.clone())?;
    let mut ws = SolverWorkspace::new();
    let mut summary = RunSummary {
        config: config.clone(),
        steps: Vec::with_capacity(n_steps),
        energies: vec![free_energy(&disc, &state, &params)?],
        masses: vec![disc.integrate(&state.phi)],
        failure: None,
        snapshots: Vec::new(),
        final_state: state.clone(),
        wall_time: Duration::ZERO,
    };
    if snaps.first() == Some(&0) {
        summary.snapshots.push(Snapshot { step: 0, time: 0.0, state: state.clone() });
    }
    log::info!("{} n={} steps={} gamma={} xi={}", tag.as_str(), config.mesh.n, n_steps, params.gamma, params.law.xi);

    for step in 1..=n_steps {
        let time = step as f64 * params.tau;
        ctx.set_prev(state.clone());
        let result = match config.solver.strategy {
            Strategy::Mono => newton_monolithic(&disc, &ctx, &state, &rule, &newton_opts, &mut ws),
            Strategy::Split => alternating_minimization(&disc, &ctx, &state, &rule, &split_opts, &mut ws),
        };
        match result {
            Ok((next, report)) => {
                summary.steps.push(StepRecord::from_report(step, time, &report));
                state = next;
                summary.energies.push(free_energy(&disc, &state, &params)?);
                summary.masses.push(disc.integrate(&state.phi));
                if snaps.binary_search(&step).is_ok() {
                    summary.snapshots.push(Snapshot { step, time, state: state.clone() });
                }
            }
            Err(failure) => {
                let mut rec = StepRecord::from_report(step, time, &failure.report);
                rec.converged = false;
                summary.steps.push(rec);
                log::warn!("{} failed at step {step}: {}", tag.as_str(), failure.error);
                summary.failure = Some(FailureRecord {
                    step,
                    error: failure.error.to_string(),
                    iterations: failure.report.iterations,
                });
                break;
            }
        }
        if step % 100 == 0 {
            log::info!(
                "{} step {step}/{n_steps} avg iterations {:.3} energy {:.6}",
                tag.as_str(),
                summary.average_iterations().unwrap_or(f64::NAN),
                summary.energies.last().map_or(f64::NAN, |e| e.total)
            );
        }
    }
    summary.final_state = state;
    summary.wall_time = start.elapsed();
    Ok(summary)
}
