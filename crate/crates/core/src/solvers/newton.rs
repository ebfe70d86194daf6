use std::time::Instant;

use crate::error::Error;
use crate::grid_fem::eliminate_dofs;
use crate::schemes::{
    ch_block_matrix, residual, symmetric_jacobian, symmetrize_residual, Discretization, SchemeContext, State,
};

use super::{
    check_stopping, euclid, fail, relative, ConvergenceMeasures, IncrementTracker, SolveReport, SolveResult,
    SolverWorkspace, StoppingRule, StrategyTag,
};

/// Newton options. Plain full steps unless `backtracking` is set.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NewtonOptions {
    /// Halve the step until the residual norm decreases (at most 10 halvings).
    pub backtracking: bool,
}

fn add(x: &mut [f64], d: &[f64], s: f64) {
    for (a, b) in x.iter_mut().zip(d) {
        *a += s * b;
    }
}

/// Monolithic Newton on the coupled `(phi, mu, u)` system with the exact Jacobian.
pub fn newton_monolithic(
    disc: &Discretization,
    ctx: &SchemeContext,
    initial: &State,
    rule: &StoppingRule,
    options: &NewtonOptions,
    ws: &mut SolverWorkspace,
) -> SolveResult<(State, SolveReport)> {
    let start = Instant::now();
    let tag = StrategyTag::from_parts(ctx.kind, false);
    let mut report = SolveReport::new(tag.as_str());
    let n = disc.n_nodes();
    let mut x = initial.clone();
    if let Err(e) = rule.validate() {
        return fail(e, report, x);
    }
    let mut r = match residual(disc, &x, ctx) {
        Ok(r) => r,
        Err(e) => return fail(e, report, x),
    };
    let r0 = euclid(&r);
    report.initial_residual = r0;
    let mut inc = IncrementTracker::default();
    let constrained = disc.dofs().constrained();
    for _ in 0..rule.max_iters {
        let step = (|| {
            let mut s = symmetric_jacobian(disc, &x, ctx)?;
            let mut rhs = symmetrize_residual(&r, n, ctx.params.tau);
            rhs.iter_mut().for_each(|v| *v = -*v);
            let vals: Vec<f64> = constrained.iter().map(|&d| -x.u[d - 2 * n]).collect();
            eliminate_dofs(&mut s, &mut rhs, constrained, &vals)?;
            ws.full.solve(&s, &rhs, true)
        })();
        let d = match step {
            Ok(d) => d,
            Err(e) => return fail(e, report, x),
        };
        let mut lambda = 1.0;
        let mut trial;
        let mut r_new;
        loop {
            trial = x.clone();
            add(&mut trial.phi, &d[..n], lambda);
            add(&mut trial.mu, &d[n..2 * n], lambda);
            add(&mut trial.u, &d[2 * n..], lambda);
            r_new = residual(disc, &trial, ctx);
            let ok = match &r_new {
                Ok(rn) => euclid(rn) < euclid(&r) || !options.backtracking,
                Err(_) => false,
            };
            if ok || !options.backtracking || lambda < 1e-3 {
                break;
            }
            lambda *= 0.5;
        }
        let r_new = match r_new {
            Ok(v) => v,
            Err(e) => {
                report.wall_time = start.elapsed();
                return fail(e, report, trial);
            }
        };
        let per_field = [
            lambda * disc.l2_norm(&d[..n]),
            lambda * disc.l2_norm(&d[n..2 * n]),
            lambda * disc.l2_norm_vector(&d[2 * n..]),
        ];
        let (ia, ir) = inc.measure(&per_field);
        let ra = euclid(&r_new);
        let m = ConvergenceMeasures {
            residual_abs: ra,
            residual_rel: relative(ra, r0),
            increment_abs: ia,
            increment_rel: ir,
        };
        report.push(m);
        x = trial;
        r = r_new;
        if !ra.is_finite() || !ia.is_finite() {
            report.wall_time = start.elapsed();
            return fail(Error::NonFinite("Newton iterate"), report, x);
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

/// Newton on the `(phi, mu)` block with the displacement frozen. Residuals are the
/// phase-field and chemical-potential blocks of the coupled residual.
pub fn newton_ch_block(
    disc: &Discretization,
    ctx: &SchemeContext,
    phi: &[f64],
    mu: &[f64],
    u_frozen: &[f64],
    rule: &StoppingRule,
    ws: &mut SolverWorkspace,
) -> SolveResult<(Vec<f64>, Vec<f64>, SolveReport)> {
    let start = Instant::now();
    let mut report = SolveReport::new("ch_block");
    let n = disc.n_nodes();
    let mut x = State {
        phi: phi.to_vec(),
        mu: mu.to_vec(),
        u: u_frozen.to_vec(),
    };
    if let Err(e) = rule.validate().and_then(|_| x.check(n)) {
        return fail(e, report, x);
    }
    let mut r = match residual(disc, &x, ctx) {
        Ok(r) => r,
        Err(e) => return fail(e, report, x),
    };
    let r0 = euclid(&r[..2 * n]);
    report.initial_residual = r0;
    let mut inc = IncrementTracker::default();
    for _ in 0..rule.max_iters {
        let step = (|| {
            let s = ch_block_matrix(disc, &x, ctx)?;
            // rows: minus the mu equation, then minus tau times the phi equation
            let mut rhs = vec![0.0; 2 * n];
            for i in 0..n {
                rhs[i] = r[n + i];
                rhs[n + i] = ctx.params.tau * r[i];
            }
            ws.ch.solve(&s, &rhs, true)
        })();
        let d = match step {
            Ok(d) => d,
            Err(e) => return fail(e, report, x),
        };
        add(&mut x.phi, &d[..n], 1.0);
        add(&mut x.mu, &d[n..], 1.0);
        r = match residual(disc, &x, ctx) {
            Ok(r) => r,
            Err(e) => {
                report.wall_time = start.elapsed();
                return fail(e, report, x);
            }
        };
        let per_field = [disc.l2_norm(&d[..n]), disc.l2_norm(&d[n..])];
        let (ia, ir) = inc.measure(&per_field);
        let ra = euclid(&r[..2 * n]);
        let m = ConvergenceMeasures {
            residual_abs: ra,
            residual_rel: relative(ra, r0),
            increment_abs: ia,
            increment_rel: ir,
        };
        report.push(m);
        if !ra.is_finite() || !ia.is_finite() {
            report.wall_time = start.elapsed();
            return fail(Error::NonFinite("phase-field Newton iterate"), report, x);
        }
        if check_stopping(&m, rule) {
            report.converged = true;
            report.wall_time = start.elapsed();
            return Ok((x.phi, x.mu, report));
        }
    }
    report.wall_time = start.elapsed();
    let err = Error::NonConvergence {
        iterations: report.iterations,
        residual: report.final_residual(),
    };
    fail(err, report, x)
}
