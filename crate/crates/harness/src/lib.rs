//! Experiment driver for the Cahn-Larché solvers: configuration, initial data,
//! the time loop, parameter sweeps and file output.

pub mod cases;
pub mod config;
pub mod error;
pub mod output;
pub mod run;
pub mod sweep;

pub use config::RunConfig;
pub use error::{HarnessError, Result};
pub use run::{run_simulation, RunSummary};

use larche_core::analysis::{estimate_constants, rate_bound_with, BoundForm, NormConstants, RateBound};
use larche_core::grid_fem::build_mesh;

/// Norm constants for the configured mesh and the resulting contraction bound.
pub fn constants_for(config: &RunConfig) -> Result<(NormConstants, RateBound)> {
    let params = config.model_params()?;
    let mesh = build_mesh(config.mesh.n)?;
    let c = estimate_constants(&mesh, &params)?;
    let form = if config.solver.scheme == config::Scheme::Homogeneous {
        BoundForm::Homogeneous
    } else {
        BoundForm::default()
    };
    let b = rate_bound_with(&c, &params, mesh.h(), params.tau, form);
    Ok((c, b))
}
