//! Nonlinear solution strategies for one time step: monolithic Newton and
//! staggered alternating minimization, plus the shared termination test.

mod newton;
mod staggered;

pub use newton::{newton_ch_block, newton_monolithic, NewtonOptions};
pub use staggered::{alternating_minimization, solve_elasticity_block, SplitOptions};

use std::time::Duration;

use crate::analysis::DualNorm;
use crate::error::{Error, Result};
use crate::grid_fem::DirectSolver;
use crate::schemes::{Discretization, State};

/// Four-part termination test. Defaults: all tolerances `1e-6`, at most 500 iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule {
    pub tol_res_abs: f64,
    pub tol_res_rel: f64,
    pub tol_inc_abs: f64,
    pub tol_inc_rel: f64,
    pub max_iters: usize,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            tol_res_abs: 1e-6,
            tol_res_rel: 1e-6,
            tol_inc_abs: 1e-6,
            tol_inc_rel: 1e-6,
            max_iters: 500,
        }
    }
}

impl StoppingRule {
    pub fn with_tolerance(tol: f64, max_iters: usize) -> Self {
        Self {
            tol_res_abs: tol,
            tol_res_rel: tol,
            tol_inc_abs: tol,
            tol_inc_rel: tol,
            max_iters,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let t = [self.tol_res_abs, self.tol_res_rel, self.tol_inc_abs, self.tol_inc_rel];
        if t.iter().any(|&v| !(v > 0.0)) || self.max_iters == 0 {
            return Err(Error::InvalidInput("tolerances must be positive and max_iters at least 1".into()));
        }
        Ok(())
    }
}

/// Residual and increment measures after one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConvergenceMeasures {
    /// Euclidean norm of the coupled residual.
    pub residual_abs: f64,
    /// Residual norm divided by the residual of the initial guess.
    pub residual_rel: f64,
    /// Sum over fields of the `L2` norms of the increment.
    pub increment_abs: f64,
    /// Sum over fields of the increment norm divided by the first-iteration increment norm.
    pub increment_rel: f64,
}

/// `(res_abs <= tol OR res_rel <= tol) AND (inc_abs <= tol OR inc_rel <= tol)`.
pub fn check_stopping(m: &ConvergenceMeasures, rule: &StoppingRule) -> bool {
    (m.residual_abs <= rule.tol_res_abs || m.residual_rel <= rule.tol_res_rel)
        && (m.increment_abs <= rule.tol_inc_abs || m.increment_rel <= rule.tol_inc_rel)
}

/// Builds increment measures from per-field norms, remembering the first iteration.
#[derive(Debug, Clone, Default)]
pub(crate) struct IncrementTracker {
    first: Option<Vec<f64>>,
}

impl IncrementTracker {
    pub(crate) fn measure(&mut self, per_field: &[f64]) -> (f64, f64) {
        let first = self.first.get_or_insert_with(|| per_field.to_vec());
        let abs: f64 = per_field.iter().sum();
        let rel: f64 = per_field
            .iter()
            .zip(first.iter())
            .map(|(&d, &d1)| if d == 0.0 { 0.0 } else if d1 == 0.0 { f64::INFINITY } else { d / d1 })
            .sum();
        (abs, rel)
    }
}

pub(crate) fn relative(value: f64, reference: f64) -> f64 {
    if value == 0.0 {
        0.0
    } else if reference == 0.0 {
        f64::INFINITY
    } else {
        value / reference
    }
}

pub(crate) fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// The four strategies compared in the experiments, plus the homogeneous variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyTag {
    ImpMono,
    SemiMono,
    ImpSplit,
    SemiSplit,
    HomMono,
    HomSplit,
}

impl StrategyTag {
    pub fn as_str(self) -> &'static str {
        match self {
            StrategyTag::ImpMono => "imp_mono",
            StrategyTag::SemiMono => "semi_mono",
            StrategyTag::ImpSplit => "imp_split",
            StrategyTag::SemiSplit => "semi_split",
            StrategyTag::HomMono => "hom_mono",
            StrategyTag::HomSplit => "hom_split",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            StrategyTag::ImpMono => "Imp. Mono.",
            StrategyTag::SemiMono => "Semi-Imp. Mono.",
            StrategyTag::ImpSplit => "Imp. Split.",
            StrategyTag::SemiSplit => "Semi-Imp. Split.",
            StrategyTag::HomMono => "Hom. Mono.",
            StrategyTag::HomSplit => "Hom. Split.",
        }
    }

    pub fn from_parts(kind: crate::schemes::SchemeKind, split: bool) -> Self {
        use crate::schemes::SchemeKind::*;
        match (kind, split) {
            (Implicit, false) => StrategyTag::ImpMono,
            (Implicit, true) => StrategyTag::ImpSplit,
            (SemiImplicit, false) => StrategyTag::SemiMono,
            (SemiImplicit, true) => StrategyTag::SemiSplit,
            (Homogeneous, false) => StrategyTag::HomMono,
            (Homogeneous, true) => StrategyTag::HomSplit,
        }
    }
}

/// Record of one nonlinear solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub strategy: String,
    /// Outer iterations performed.
    pub iterations: usize,
    /// Inner phase-field Newton iterations summed over all outer iterations (split strategies).
    pub inner_iterations: usize,
    pub initial_residual: f64,
    /// Absolute residual after each iteration.
    pub residual_history: Vec<f64>,
    /// Absolute increment after each iteration.
    pub increment_history: Vec<f64>,
    pub measures: Vec<ConvergenceMeasures>,
    pub converged: bool,
    pub wall_time: Duration,
    /// Step potential at the initial guess and after every outer iteration, when one exists.
    pub potential_history: Vec<f64>,
    /// Step potential at the initial guess and after every half step (split strategies).
    pub half_step_potentials: Vec<f64>,
}

impl SolveReport {
    pub fn new(strategy: &str) -> Self {
        Self {
            strategy: strategy.to_string(),
            iterations: 0,
            inner_iterations: 0,
            initial_residual: 0.0,
            residual_history: Vec::new(),
            increment_history: Vec::new(),
            measures: Vec::new(),
            converged: false,
            wall_time: Duration::ZERO,
            potential_history: Vec::new(),
            half_step_potentials: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, m: ConvergenceMeasures) {
        self.iterations += 1;
        self.residual_history.push(m.residual_abs);
        self.increment_history.push(m.increment_abs);
        self.measures.push(m);
    }

    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(self.initial_residual)
    }
}

/// A failed solve: the cause, the report so far and the last iterate.
#[derive(Debug, Clone)]
pub struct SolveFailure {
    pub error: Error,
    pub report: SolveReport,
    pub last_iterate: State,
}

impl std::fmt::Display for SolveFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} after {} iterations", self.error, self.report.iterations)
    }
}

impl std::error::Error for SolveFailure {}

pub type SolveResult<T> = std::result::Result<T, Box<SolveFailure>>;

pub(crate) fn fail<T>(error: Error, report: SolveReport, last: State) -> SolveResult<T> {
    Err(Box::new(SolveFailure {
        error,
        report,
        last_iterate: last,
    }))
}

/// Reusable linear solvers (one per subsystem, so symbolic factorizations stay
/// cached) and the dual-norm operator for potential evaluations.
pub struct SolverWorkspace {
    pub full: DirectSolver,
    pub ch: DirectSolver,
    pub elastic: DirectSolver,
    dual: Option<DualNorm>,
}

impl Default for SolverWorkspace {
    fn default() -> Self {
        Self::new()
    }
}

impl SolverWorkspace {
    pub fn new() -> Self {
        Self {
            full: DirectSolver::new(),
            ch: DirectSolver::new(),
            elastic: DirectSolver::new(),
            dual: None,
        }
    }

    /// Dual-norm operator for mobility `m`, built on first use.
    pub fn dual_norm(&mut self, disc: &Discretization, m: f64) -> Result<&DualNorm> {
        let stale = match &self.dual {
            Some(d) => d.m() != m || d.n() != disc.n_nodes(),
            None => true,
        };
        if stale {
            self.dual = Some(DualNorm::new(disc, m)?);
        }
        Ok(self.dual.as_ref().expect("just built"))
    }
}
