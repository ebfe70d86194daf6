//! Run configuration, read from and written to TOML.
//!
//! ```toml
//! [model]
//! m = 1.0
//! gamma = 5.0
//! ell = 0.02
//! tau = 1e-5
//! t_final = 0.01
//! theta = 2.0
//! xi = 1.0
//! heterogeneous = true
//! reaction = 0.0
//! body_force = [0.0, 0.0]
//! c_minus = [[100.0, 20.0, 0.0], [20.0, 100.0, 0.0], [0.0, 0.0, 200.0]]
//! c_plus = [[1.0, 0.1, 0.0], [0.1, 1.0, 0.0], [0.0, 0.0, 2.0]]
//!
//! [solver]
//! scheme = "semi_implicit"   # implicit | semi_implicit | homogeneous
//! strategy = "split"         # mono | split
//! anderson_depth = 0
//! tol_res_abs = 1e-6
//! tol_res_rel = 1e-6
//! tol_inc_abs = 1e-6
//! tol_inc_rel = 1e-6
//! max_iters = 500
//! backtracking = false
//! record_potential = false
//!
//! [mesh]
//! n = 65
//!
//! [case]
//! kind = "midsplit"          # midsplit | random
//! seed = 0
//! amplitude = 0.05
//! sharp = false
//!
//! [output]
//! dir = "out"
//! snapshot_times = [0.0, 0.01]
//! ```
//!
//! Every key is optional; missing keys take the defaults shown.

use std::path::Path;

use larche_core::materials::{default_c_minus, default_c_plus, DoubleWell, ElasticLaw, ModelParams};
use larche_core::schemes::SchemeKind;
use larche_core::solvers::{NewtonOptions, SplitOptions, StoppingRule, StrategyTag};
use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Implicit,
    SemiImplicit,
    Homogeneous,
}

impl Scheme {
    pub fn kind(self) -> SchemeKind {
        match self {
            Scheme::Implicit => SchemeKind::Implicit,
            Scheme::SemiImplicit => SchemeKind::SemiImplicit,
            Scheme::Homogeneous => SchemeKind::Homogeneous,
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "implicit" | "imp" => Ok(Scheme::Implicit),
            "semi_implicit" | "semi-implicit" | "semi" => Ok(Scheme::SemiImplicit),
            "homogeneous" | "hom" => Ok(Scheme::Homogeneous),
            _ => Err(HarnessError::Config(format!("unknown scheme '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Mono,
    Split,
}

impl std::str::FromStr for Strategy {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mono" | "monolithic" => Ok(Strategy::Mono),
            "split" | "staggered" => Ok(Strategy::Split),
            _ => Err(HarnessError::Config(format!("unknown strategy '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseKind {
    Midsplit,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub m: f64,
    pub gamma: f64,
    pub ell: f64,
    pub tau: f64,
    pub t_final: f64,
    pub theta: f64,
    pub xi: f64,
    pub heterogeneous: bool,
    pub reaction: f64,
    pub body_force: [f64; 2],
    pub c_minus: [[f64; 3]; 3],
    pub c_plus: [[f64; 3]; 3],
}

fn rows(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    let mut r = [[0.0; 3]; 3];
    for (i, row) in r.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = m[(i, j)];
        }
    }
    r
}

fn matrix(r: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| r[i][j])
}

impl Default for ModelSection {
    fn default() -> Self {
        let p = ModelParams::default();
        Self {
            m: p.m,
            gamma: p.gamma,
            ell: p.ell,
            tau: p.tau,
            t_final: p.t_final,
            theta: p.well.theta,
            xi: p.law.xi,
            heterogeneous: p.law.heterogeneous,
            reaction: p.reaction,
            body_force: p.body_force,
            c_minus: rows(&default_c_minus()),
            c_plus: rows(&default_c_plus()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub scheme: Scheme,
    pub strategy: Strategy,
    pub anderson_depth: usize,
    pub tol_res_abs: f64,
    pub tol_res_rel: f64,
    pub tol_inc_abs: f64,
    pub tol_inc_rel: f64,
    pub max_iters: usize,
    /// Backtracking line search in the monolithic Newton solver.
    pub backtracking: bool,
    /// Evaluate the step potential after every iteration of the split solver.
    pub record_potential: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        let r = StoppingRule::default();
        Self {
            scheme: Scheme::SemiImplicit,
            strategy: Strategy::Split,
            anderson_depth: 0,
            tol_res_abs: r.tol_res_abs,
            tol_res_rel: r.tol_res_rel,
            tol_inc_abs: r.tol_inc_abs,
            tol_inc_rel: r.tol_inc_rel,
            max_iters: r.max_iters,
            backtracking: false,
            record_potential: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSection {
    /// Elements per side of the unit square.
    pub n: usize,
}

impl Default for MeshSection {
    fn default() -> Self {
        Self { n: 65 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaseSection {
    pub kind: CaseKind,
    pub seed: u64,
    /// Half-width of the uniform random initial values.
    pub amplitude: f64,
    /// Midsplit with a jump instead of the tanh profile.
    pub sharp: bool,
}

impl Default for CaseSection {
    fn default() -> Self {
        Self {
            kind: CaseKind::Midsplit,
            seed: 0,
            amplitude: 0.05,
            sharp: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    /// Times at which VTK snapshots are written; each is taken at the nearest step.
    pub snapshot_times: Vec<f64>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            snapshot_times: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub solver: SolverSection,
    pub mesh: MeshSection,
    pub case: CaseSection,
    pub output: OutputSection,
}

impl RunConfig {
    /// Spinodal decomposition from random data, run to `t = 0.02`.
    pub fn random_preset() -> Self {
        let mut c = Self::default();
        c.case.kind = CaseKind::Random;
        c.model.t_final = 0.02;
        c
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml(&text)
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        let s = &self.model;
        let p = ModelParams {
            m: s.m,
            gamma: s.gamma,
            ell: s.ell,
            tau: s.tau,
            t_final: s.t_final,
            well: DoubleWell::new(s.theta)?,
            law: ElasticLaw::new(matrix(&s.c_minus), matrix(&s.c_plus), s.xi, s.heterogeneous)?,
            reaction: s.reaction,
            body_force: s.body_force,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn stopping_rule(&self) -> StoppingRule {
        let s = &self.solver;
        StoppingRule {
            tol_res_abs: s.tol_res_abs,
            tol_res_rel: s.tol_res_rel,
            tol_inc_abs: s.tol_inc_abs,
            tol_inc_rel: s.tol_inc_rel,
            max_iters: s.max_iters,
        }
    }

    pub fn split_options(&self) -> SplitOptions {
        SplitOptions {
            anderson_depth: self.solver.anderson_depth,
            record_potential: self.solver.record_potential,
            inner_rule: StoppingRule {
                max_iters: self.solver.max_iters,
                ..self.stopping_rule()
            },
        }
    }

    pub fn newton_options(&self) -> NewtonOptions {
        NewtonOptions {
            backtracking: self.solver.backtracking,
        }
    }

    pub fn strategy_tag(&self) -> StrategyTag {
        StrategyTag::from_parts(self.solver.scheme.kind(), self.solver.strategy == Strategy::Split)
    }

    pub fn n_steps(&self) -> usize {
        (self.model.t_final / self.model.tau - 1e-9).ceil().max(0.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.model_params()?;
        self.stopping_rule().validate()?;
        if self.mesh.n == 0 {
            return Err(HarnessError::Config("mesh.n must be positive".into()));
        }
        if !(self.case.amplitude > 0.0 && self.case.amplitude < 1.0) {
            return Err(HarnessError::Config("case.amplitude must lie in (0, 1)".into()));
        }
        if self.case.seed > i64::MAX as u64 {
            return Err(HarnessError::Config("case.seed must fit in a signed 64-bit TOML integer".into()));
        }
        if self.solver.scheme == Scheme::Homogeneous && p.law.heterogeneous {
            return Err(HarnessError::Config(
                "the homogeneous scheme needs model.heterogeneous = false".into(),
            ));
        }
        if self.output.snapshot_times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(HarnessError::Config("snapshot times must be finite and nonnegative".into()));
        }
        Ok(())
    }
}
