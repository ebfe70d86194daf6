use std::time::Instant;

use crate::acceleration::AndersonWindow;
use crate::error::{Error, Result};
use crate::grid_fem::{eliminate_dofs, Factorization};
use crate::schemes::{elasticity_matrix, residual, step_potential, Discretization, SchemeContext, SchemeKind, State};

use super::{
    check_stopping, euclid, fail, newton_ch_block, relative, ConvergenceMeasures, IncrementTracker, SolveReport,
    SolveResult, SolverWorkspace, StoppingRule, StrategyTag,
};

/// Options of the staggered loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitOptions {
    /// Anderson depth; 0 disables acceleration.
    pub anderson_depth: usize,
    /// Evaluate the step potential after every half step (schemes with a potential only).
    pub record_potential: bool,
    /// Tolerances of the inner phase-field Newton solve.
    pub inner_rule: StoppingRule,
}

impl Default for SplitOptions {
    fn default() -> Self {
        Self {
            anderson_depth: 0,
            record_potential: false,
            inner_rule: StoppingRule::default(),
        }
    }
}

/// Displacement minimizing the elastic energy for a fixed phase field: one SPD solve.
pub fn solve_elasticity_block(
    disc: &Discretization,
    ctx: &SchemeContext,
    phi_fixed: &[f64],
    ws: &mut SolverWorkspace,
) -> Result<Vec<f64>> {
    let state = State::from_phi(phi_fixed.to_vec());
    let f = factor_elasticity(disc, ctx, &state, ws)?;
    elastic_solve(disc, ctx, phi_fixed, &f)
}

fn factor_elasticity(
    disc: &Discretization,
    ctx: &SchemeContext,
    state: &State,
    ws: &mut SolverWorkspace,
) -> Result<Factorization> {
    let mut e = elasticity_matrix(disc, state, ctx)?;
    let dofs = disc.u_constraints();
    let mut dummy = vec![0.0; e.nrows()];
    eliminate_dofs(&mut e, &mut dummy, &dofs, &vec![0.0; dofs.len()])?;
    ws.elastic.factor(&e, true)
}

fn elastic_solve(disc: &Discretization, ctx: &SchemeContext, phi: &[f64], f: &Factorization) -> Result<Vec<f64>> {
    let n = disc.n_nodes();
    // the displacement equation is affine in u, so its residual at u = 0 is minus the load
    let r = residual(disc, &State::from_phi(phi.to_vec()), ctx)?;
    let mut b: Vec<f64> = r[2 * n..].iter().map(|v| -v).collect();
    for d in disc.u_constraints() {
        b[d] = 0.0;
    }
    f.solve(&b)
}

/// Staggered loop: phase-field block by Newton with frozen displacement, then the
/// elasticity block with the new phase field. For the semi-implicit and homogeneous
/// schemes this is alternating minimization of the step potential.
pub fn alternating_minimization(
    disc: &Discretization,
    ctx: &SchemeContext,
    initial: &State,
    rule: &StoppingRule,
    options: &SplitOptions,
    ws: &mut SolverWorkspace,
) -> SolveResult<(State, SolveReport)> {
    let start = Instant::now();
    let tag = StrategyTag::from_parts(ctx.kind, true);
    let mut report = SolveReport::new(tag.as_str());
    let n = disc.n_nodes();
    let mut x = initial.clone();
    if let Err(e) = rule.validate().and_then(|_| x.check(n)) {
        return fail(e, report, x);
    }
    let r0 = match residual(disc, &x, ctx) {
        Ok(r) => euclid(&r),
        Err(e) => return fail(e, report, x),
    };
    report.initial_residual = r0;

    let with_potential = options.record_potential && ctx.kind.has_potential();
    let potential = |s: &State, ws: &mut SolverWorkspace| -> Result<f64> {
        let dual = ws.dual_norm(disc, ctx.params.m)?;
        step_potential(disc, s, ctx, dual)
    };
    if with_potential {
        match potential(&x, ws) {
            Ok(f) => {
                report.potential_history.push(f);
                report.half_step_potentials.push(f);
            }
            Err(e) => return fail(e, report, x),
        }
    }

    // the stiffness is frozen at the previous level, so one factorization serves the whole step
    let frozen = if ctx.kind == SchemeKind::Implicit {
        None
    } else {
        match factor_elasticity(disc, ctx, &x, ws) {
            Ok(f) => Some(f),
            Err(e) => return fail(e, report, x),
        }
    };

    let mut window = AndersonWindow::new(options.anderson_depth);
    let mut inc = IncrementTracker::default();
    for _ in 0..rule.max_iters {
        let (phi, mu, inner) = match newton_ch_block(disc, ctx, &x.phi, &x.mu, &x.u, &options.inner_rule, ws) {
            Ok(v) => v,
            Err(f) => {
                report.inner_iterations += f.report.iterations;
                report.wall_time = start.elapsed();
                return fail(f.error, report, x);
            }
        };
        report.inner_iterations += inner.iterations;
        if with_potential {
            let half = State {
                phi: phi.clone(),
                mu: mu.clone(),
                u: x.u.clone(),
            };
            match potential(&half, ws) {
                Ok(f) => report.half_step_potentials.push(f),
                Err(e) => return fail(e, report, x),
            }
        }
        let u = match &frozen {
            Some(f) => elastic_solve(disc, ctx, &phi, f),
            None => factor_elasticity(disc, ctx, &State::from_phi(phi.clone()), ws)
                .and_then(|f| elastic_solve(disc, ctx, &phi, &f)),
        };
        let u = match u {
            Ok(u) => u,
            Err(e) => return fail(e, report, x),
        };
        let g = State { phi, mu, u };
        if with_potential {
            match potential(&g, ws) {
                Ok(f) => report.half_step_potentials.push(f),
                Err(e) => return fail(e, report, x),
            }
        }
        let next = if options.anderson_depth == 0 {
            g
        } else {
            let gv = g.to_vector();
            let xv = x.to_vector();
            let f: Vec<f64> = gv.iter().zip(&xv).map(|(a, b)| a - b).collect();
            let acc = window.update(&gv, &f);
            State::from_vector(&acc, n).expect("length preserved")
        };
        let per_field = [
            diff_norm(disc, &next.phi, &x.phi, false),
            diff_norm(disc, &next.mu, &x.mu, false),
            diff_norm(disc, &next.u, &x.u, true),
        ];
        x = next;
        let ra = match residual(disc, &x, ctx) {
            Ok(r) => euclid(&r),
            Err(e) => {
                report.wall_time = start.elapsed();
                return fail(e, report, x);
            }
        };
        if with_potential {
            let f = if options.anderson_depth == 0 {
                report.half_step_potentials.last().copied().ok_or(Error::NonFinite("potential"))
            } else {
                potential(&x, ws)
            };
            match f {
                Ok(f) => report.potential_history.push(f),
                Err(e) => return fail(e, report, x),
            }
        }
        let (ia, ir) = inc.measure(&per_field);
        let m = ConvergenceMeasures {
            residual_abs: ra,
            residual_rel: relative(ra, r0),
            increment_abs: ia,
            increment_rel: ir,
        };
        report.push(m);
        if !ia.is_finite() {
            report.wall_time = start.elapsed();
            return fail(Error::NonFinite("staggered iterate"), report, x);
        }
        if check_stopping(&m, rule) {
            report.converged = true;
            report.wall_time = start.elapsed();
            return Ok((x, report));
        }
    }
    report.wall_time = start.elapsed();
    let err = Error::NonConvergence {
        iterations: report.iterations,
        residual: report.final_residual(),
    };
    fail(err, report, x)
}

fn diff_norm(disc: &Discretization, a: &[f64], b: &[f64], vector: bool) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(p, q)| p - q).collect();
    if vector {
        disc.l2_norm_vector(&d)
    } else {
        disc.l2_norm(&d)
    }
}
