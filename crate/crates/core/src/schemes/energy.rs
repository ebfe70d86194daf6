use nalgebra::Vector3;

use crate::analysis::DualNorm;
use crate::error::{check_len, Error, Result};
use crate::grid_fem::{Q1Tabulation, QuadratureRule};
use crate::materials::{voigt_identity, ModelParams};

use super::{Discretization, SchemeContext, SchemeKind, State};

/// Free energy split into its three parts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyBreakdown {
    /// `gamma / ell * int psi(phi)`
    pub chemical: f64,
    /// `gamma ell / 2 * int |grad phi|^2`
    pub gradient: f64,
    /// `int 1/2 (eps(u) - xi phi I) : C(phi) (eps(u) - xi phi I)`
    pub elastic: f64,
    pub total: f64,
}

fn strain_at(g: &[[f64; 2]; 4], nodes: &[usize; 4], u: &[f64], n: usize) -> Vector3<f64> {
    let mut e = Vector3::zeros();
    for a in 0..4 {
        let ux = u[nodes[a]];
        let uy = u[n + nodes[a]];
        e[0] += g[a][0] * ux;
        e[1] += g[a][1] * uy;
        e[2] += g[a][1] * ux + g[a][0] * uy;
    }
    e
}

/// Free energy of `(phi, u)` with the 2 x 2 rule the residuals use.
pub fn free_energy(disc: &Discretization, state: &State, params: &ModelParams) -> Result<EnergyBreakdown> {
    free_energy_on(disc, disc.tabulation(), state, params)
}

/// Free energy evaluated with an arbitrary tensor Gauss rule.
pub fn free_energy_with_rule(
    disc: &Discretization,
    state: &State,
    params: &ModelParams,
    rule: &QuadratureRule,
) -> Result<EnergyBreakdown> {
    let tab = Q1Tabulation::new(rule, disc.mesh().h());
    free_energy_on(disc, &tab, state, params)
}

fn free_energy_on(disc: &Discretization, tab: &Q1Tabulation, state: &State, params: &ModelParams) -> Result<EnergyBreakdown> {
    let n = disc.n_nodes();
    check_len(n, state.phi.len())?;
    check_len(2 * n, state.u.len())?;
    let mut out = EnergyBreakdown::default();
    for nodes in disc.mesh().elements() {
        for q in 0..tab.n_points() {
            let w = tab.weights[q];
            let nv = &tab.values[q];
            let g = &tab.grads[q];
            let mut phi = 0.0;
            let mut gp = [0.0; 2];
            for a in 0..4 {
                let v = state.phi[nodes[a]];
                phi += nv[a] * v;
                gp[0] += g[a][0] * v;
                gp[1] += g[a][1] * v;
            }
            let eps = strain_at(g, nodes, &state.u, n);
            out.chemical += w * params.gamma / params.ell * params.well.psi(phi);
            out.gradient += w * 0.5 * params.gamma * params.ell * (gp[0] * gp[0] + gp[1] * gp[1]);
            out.elastic += w * params.law.energy_density(phi, &eps);
        }
    }
    out.total = out.chemical + out.gradient + out.elastic;
    Ok(out)
}

/// Load vector `(E_si, q)` of the semi-implicit elastic driving force
/// `1/2 e0 : C'(phi_old) e0 - xi I : C(phi_old) (eps(u) - xi phi I)` with
/// `e0 = eps(u_old) - xi phi_old I`, evaluated at `state`.
pub fn semi_implicit_coupling_term(disc: &Discretization, state: &State, ctx: &SchemeContext) -> Result<Vec<f64>> {
    let n = disc.n_nodes();
    state.check(n)?;
    ctx.prev.check(n)?;
    let tab = disc.tabulation();
    let law = &ctx.params.law;
    let id = voigt_identity();
    let mut b = vec![0.0; n];
    for nodes in disc.mesh().elements() {
        for q in 0..tab.n_points() {
            let nv = &tab.values[q];
            let phi0: f64 = (0..4).map(|a| nv[a] * ctx.prev.phi[nodes[a]]).sum();
            let phi: f64 = (0..4).map(|a| nv[a] * state.phi[nodes[a]]).sum();
            let e0 = strain_at(&tab.grads[q], nodes, &ctx.prev.u, n) - id * (law.xi * phi0);
            let e = strain_at(&tab.grads[q], nodes, &state.u, n) - id * (law.xi * phi);
            let d = 0.5 * e0.dot(&(law.tensor_prime(phi0) * e0)) - law.xi * id.dot(&(law.tensor(phi0) * e));
            for a in 0..4 {
                b[nodes[a]] += tab.weights[q] * d * nv[a];
            }
        }
    }
    Ok(b)
}

/// Convex potential minimized by one semi-implicit or homogeneous step, evaluated at
/// the phase field and displacement of `state`:
///
/// ```text
/// |s - phi_old - tau R|^2_{Q*} / (2 tau)
///   + int gamma/ell psi_c(s) + gamma ell/2 |grad s|^2 + 1/2 (eps(w) - xi s I) : C(phi_old) (eps(w) - xi s I)
///   + (E_e, s) - gamma/ell (psi_e'(phi_old), s) - (f, w)
/// ```
///
/// The mean of `s - phi_old - tau R` is projected out before taking the dual norm.
pub fn step_potential(disc: &Discretization, state: &State, ctx: &SchemeContext, dual: &DualNorm) -> Result<f64> {
    if !ctx.kind.has_potential() {
        return Err(Error::InvalidInput("the implicit scheme has no step potential".into()));
    }
    let n = disc.n_nodes();
    state.check(n)?;
    ctx.prev.check(n)?;
    let p = &ctx.params;
    let law = &p.law;
    let id = voigt_identity();
    let tab = disc.tabulation();

    let mut d: Vec<f64> = (0..n)
        .map(|i| state.phi[i] - ctx.prev.phi[i] - p.tau * ctx.reaction[i])
        .collect();
    let mean = disc.integrate(&d);
    for v in d.iter_mut() {
        *v -= mean;
    }
    let dn = dual.norm_unchecked(&d)?;
    let mut f = dn * dn / (2.0 * p.tau);

    for nodes in disc.mesh().elements() {
        for q in 0..tab.n_points() {
            let w = tab.weights[q];
            let nv = &tab.values[q];
            let g = &tab.grads[q];
            let mut s = 0.0;
            let mut s0 = 0.0;
            let mut gs = [0.0; 2];
            let mut fx = 0.0;
            let mut fy = 0.0;
            let mut wx = 0.0;
            let mut wy = 0.0;
            for a in 0..4 {
                let k = nodes[a];
                s += nv[a] * state.phi[k];
                s0 += nv[a] * ctx.prev.phi[k];
                gs[0] += g[a][0] * state.phi[k];
                gs[1] += g[a][1] * state.phi[k];
                fx += nv[a] * ctx.body_force[k];
                fy += nv[a] * ctx.body_force[n + k];
                wx += nv[a] * state.u[k];
                wy += nv[a] * state.u[n + k];
            }
            let c0 = law.tensor(s0);
            let e = strain_at(g, nodes, &state.u, n) - id * (law.xi * s);
            let e0 = strain_at(g, nodes, &ctx.prev.u, n) - id * (law.xi * s0);
            let drive = match ctx.kind {
                SchemeKind::Homogeneous => 0.0,
                _ => 0.5 * e0.dot(&(law.tensor_prime(s0) * e0)),
            };
            f += w
                * (p.gamma / p.ell * p.well.psi_c(s)
                    + 0.5 * p.gamma * p.ell * (gs[0] * gs[0] + gs[1] * gs[1])
                    + 0.5 * e.dot(&(c0 * e))
                    + drive * s
                    - p.gamma / p.ell * p.well.psi_e_prime(s0) * s
                    - (fx * wx + fy * wy));
        }
    }
    Ok(f)
}
