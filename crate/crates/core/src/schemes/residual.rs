use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::grid_fem::{basis_strain, SparseMatrix};
use crate::materials::voigt_identity;

use super::{Discretization, SchemeContext, SchemeKind, State};

/// Nodal data of one element.
struct Local {
    nodes: [usize; 4],
    phi: [f64; 4],
    phi0: [f64; 4],
    mu: [f64; 4],
    ux: [f64; 4],
    uy: [f64; 4],
    ux0: [f64; 4],
    uy0: [f64; 4],
    r: [f64; 4],
    fx: [f64; 4],
    fy: [f64; 4],
}

impl Local {
    fn gather(nodes: [usize; 4], n: usize, s: &State, ctx: &SchemeContext) -> Self {
        let g = |v: &[f64], off: usize| [v[off + nodes[0]], v[off + nodes[1]], v[off + nodes[2]], v[off + nodes[3]]];
        Self {
            nodes,
            phi: g(&s.phi, 0),
            phi0: g(&ctx.prev.phi, 0),
            mu: g(&s.mu, 0),
            ux: g(&s.u, 0),
            uy: g(&s.u, n),
            ux0: g(&ctx.prev.u, 0),
            uy0: g(&ctx.prev.u, n),
            r: g(&ctx.reaction, 0),
            fx: g(&ctx.body_force, 0),
            fy: g(&ctx.body_force, n),
        }
    }
}

#[inline]
fn interp(nv: &[f64; 4], v: &[f64; 4]) -> f64 {
    nv[0] * v[0] + nv[1] * v[1] + nv[2] * v[2] + nv[3] * v[3]
}

#[inline]
fn grad(g: &[[f64; 2]; 4], v: &[f64; 4]) -> [f64; 2] {
    let mut out = [0.0; 2];
    for a in 0..4 {
        out[0] += g[a][0] * v[a];
        out[1] += g[a][1] * v[a];
    }
    out
}

#[inline]
fn strain(g: &[[f64; 2]; 4], ux: &[f64; 4], uy: &[f64; 4]) -> Vector3<f64> {
    let gx = grad(g, ux);
    let gy = grad(g, uy);
    Vector3::new(gx[0], gy[1], gx[1] + gy[0])
}

#[inline]
fn dot3(a: &Vector3<f64>, b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn check_inputs(disc: &Discretization, state: &State, ctx: &SchemeContext) -> Result<()> {
    let n = disc.n_nodes();
    state.check(n)?;
    ctx.prev.check(n)?;
    crate::error::check_len(n, ctx.reaction.len())?;
    crate::error::check_len(2 * n, ctx.body_force.len())
}

/// Coupled residual `(r_phi, r_mu, r_u)`. Constrained displacement rows hold the
/// displacement value itself.
pub fn residual(disc: &Discretization, state: &State, ctx: &SchemeContext) -> Result<Vec<f64>> {
    check_inputs(disc, state, ctx)?;
    let n = disc.n_nodes();
    let p = &ctx.params;
    let law = &p.law;
    let xi = law.xi;
    let id = voigt_identity();
    let tab = disc.tabulation();
    let mut r = vec![0.0; 4 * n];
    for &nodes in disc.mesh().elements() {
        let l = Local::gather(nodes, n, state, ctx);
        for q in 0..tab.n_points() {
            let w = tab.weights[q];
            let nv = &tab.values[q];
            let g = &tab.grads[q];
            let phi = interp(nv, &l.phi);
            let phi0 = interp(nv, &l.phi0);
            let mu = interp(nv, &l.mu);
            let gphi = grad(g, &l.phi);
            let gmu = grad(g, &l.mu);
            let rs = interp(nv, &l.r);
            let f = [interp(nv, &l.fx), interp(nv, &l.fy)];
            let eps = strain(g, &l.ux, &l.uy);
            let e = eps - id * (xi * phi);
            let (sigma, drive) = match ctx.kind {
                SchemeKind::Implicit => {
                    let sigma = law.tensor(phi) * e;
                    (sigma, 0.5 * e.dot(&(law.tensor_prime(phi) * e)) - xi * id.dot(&sigma))
                }
                SchemeKind::SemiImplicit | SchemeKind::Homogeneous => {
                    let e0 = strain(g, &l.ux0, &l.uy0) - id * (xi * phi0);
                    let sigma = law.tensor(phi0) * e;
                    (sigma, 0.5 * e0.dot(&(law.tensor_prime(phi0) * e0)) - xi * id.dot(&sigma))
                }
            };
            let chem = (p.gamma / p.ell) * (p.well.psi_c_prime(phi) - p.well.psi_e_prime(phi0));
            for a in 0..4 {
                let na = nv[a];
                let ga = g[a];
                let k = l.nodes[a];
                r[k] += w * ((phi - phi0) / p.tau * na + p.m * (gmu[0] * ga[0] + gmu[1] * ga[1]) - rs * na);
                r[n + k] += w
                    * (mu * na - p.gamma * p.ell * (gphi[0] * ga[0] + gphi[1] * ga[1]) - chem * na - drive * na);
                r[2 * n + k] += w * (dot3(&sigma, basis_strain(ga, 0)) - f[0] * na);
                r[3 * n + k] += w * (dot3(&sigma, basis_strain(ga, 1)) - f[1] * na);
            }
        }
    }
    for &d in disc.dofs().constrained() {
        r[d] = state.u[d - 2 * n];
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("residual"));
    }
    Ok(r)
}

/// Element contributions of the linearization.
struct ElemJac {
    /// phi-phi block without the `gamma ell K` part.
    a: [[f64; 4]; 4],
    /// `g[a][b][l] = (c . eps(N_b e_l), N_a)`, the phi-row displacement coupling.
    g: [[[f64; 2]; 4]; 4],
    /// `e[a][k][b][l] = (C eps(N_b e_l), eps(N_a e_k))`.
    e: [[[[f64; 2]; 4]; 2]; 4],
}

fn element_jacobian(disc: &Discretization, l: &Local, ctx: &SchemeContext, want_e: bool) -> ElemJac {
    let p = &ctx.params;
    let law = &p.law;
    let xi = law.xi;
    let id = voigt_identity();
    let tab = disc.tabulation();
    let mut out = ElemJac {
        a: [[0.0; 4]; 4],
        g: [[[0.0; 2]; 4]; 4],
        e: [[[[0.0; 2]; 4]; 2]; 4],
    };
    for q in 0..tab.n_points() {
        let w = tab.weights[q];
        let nv = &tab.values[q];
        let gr = &tab.grads[q];
        let phi = interp(nv, &l.phi);
        let phi0 = interp(nv, &l.phi0);
        let (c_hat, c, ddp): (Matrix3<f64>, Vector3<f64>, f64) = match ctx.kind {
            SchemeKind::Implicit => {
                let cm = law.tensor(phi);
                let c1 = law.tensor_prime(phi);
                let c2 = law.tensor_second(phi);
                let e = strain(gr, &l.ux, &l.uy) - id * (xi * phi);
                let cid = cm * id;
                let c1e = c1 * e;
                let ddp = 0.5 * e.dot(&(c2 * e)) - 2.0 * xi * id.dot(&c1e) + xi * xi * id.dot(&cid);
                (cm, c1e - cid * xi, ddp)
            }
            SchemeKind::SemiImplicit | SchemeKind::Homogeneous => {
                let cm = law.tensor(phi0);
                let cid = cm * id;
                (cm, -cid * xi, xi * xi * id.dot(&cid))
            }
        };
        let wa = w * ((p.gamma / p.ell) * p.well.psi_c_second(phi) + ddp);
        let mut strains = [[[0.0; 3]; 2]; 4];
        for b in 0..4 {
            strains[b][0] = basis_strain(gr[b], 0);
            strains[b][1] = basis_strain(gr[b], 1);
        }
        let mut cg = [[0.0; 2]; 4];
        for b in 0..4 {
            for k in 0..2 {
                cg[b][k] = dot3(&c, strains[b][k]);
            }
        }
        for a in 0..4 {
            for b in 0..4 {
                out.a[a][b] += wa * nv[a] * nv[b];
                for k in 0..2 {
                    out.g[a][b][k] += w * nv[a] * cg[b][k];
                }
            }
        }
        if want_e {
            for a in 0..4 {
                for k in 0..2 {
                    let sa = c_hat * Vector3::from(strains[a][k]);
                    for b in 0..4 {
                        for m in 0..2 {
                            out.e[a][k][b][m] += w * dot3(&sa, strains[b][m]);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Symmetric linearization with unknowns `(phi, mu, u)` and rows reordered and scaled:
///
/// ```text
/// [ A    -M       G ]
/// [ -M   -tau m K 0 ]
/// [ G^T   0       E ]
/// ```
///
/// The phi rows are minus the mu-equation rows, the mu rows are `-tau` times the
/// phi-equation rows. Constraints are not applied.
pub fn symmetric_jacobian(disc: &Discretization, state: &State, ctx: &SchemeContext) -> Result<SparseMatrix> {
    check_inputs(disc, state, ctx)?;
    let n = disc.n_nodes();
    let p = &ctx.params;
    let pat = &disc.full_pattern;
    let mut vals = pat.zero_values();
    let gl = p.gamma * p.ell;
    let tm = p.tau * p.m;
    for (e, &nodes) in disc.mesh().elements().iter().enumerate() {
        let l = Local::gather(nodes, n, state, ctx);
        let ej = element_jacobian(disc, &l, ctx, true);
        for a in 0..4 {
            for b in 0..4 {
                let ml = disc.mass_loc[a][b];
                let kl = disc.stiff_loc[a][b];
                vals[pat.position(e, &nodes, 0, a, 0, b)] += ej.a[a][b] + gl * kl;
                vals[pat.position(e, &nodes, 0, a, 1, b)] -= ml;
                vals[pat.position(e, &nodes, 1, a, 0, b)] -= ml;
                vals[pat.position(e, &nodes, 1, a, 1, b)] -= tm * kl;
                for k in 0..2 {
                    vals[pat.position(e, &nodes, 0, a, 2 + k, b)] += ej.g[a][b][k];
                    vals[pat.position(e, &nodes, 2 + k, a, 0, b)] += ej.g[b][a][k];
                    for m in 0..2 {
                        vals[pat.position(e, &nodes, 2 + k, a, 2 + m, b)] += ej.e[a][k][b][m];
                    }
                }
            }
        }
    }
    Ok(pat.matrix(vals))
}

/// The phase field block `[[A, -M], [-M, -tau m K]]` of the symmetric linearization,
/// with the displacement held fixed.
pub fn ch_block_matrix(disc: &Discretization, state: &State, ctx: &SchemeContext) -> Result<SparseMatrix> {
    check_inputs(disc, state, ctx)?;
    let n = disc.n_nodes();
    let p = &ctx.params;
    let pat = &disc.pair_pattern;
    let mut vals = pat.zero_values();
    let gl = p.gamma * p.ell;
    let tm = p.tau * p.m;
    for (e, &nodes) in disc.mesh().elements().iter().enumerate() {
        let l = Local::gather(nodes, n, state, ctx);
        let ej = element_jacobian(disc, &l, ctx, false);
        for a in 0..4 {
            for b in 0..4 {
                let ml = disc.mass_loc[a][b];
                let kl = disc.stiff_loc[a][b];
                vals[pat.position(e, &nodes, 0, a, 0, b)] += ej.a[a][b] + gl * kl;
                vals[pat.position(e, &nodes, 0, a, 1, b)] -= ml;
                vals[pat.position(e, &nodes, 1, a, 0, b)] -= ml;
                vals[pat.position(e, &nodes, 1, a, 1, b)] -= tm * kl;
            }
        }
    }
    Ok(pat.matrix(vals))
}

/// Elasticity matrix `E` for the stiffness the scheme uses at `state`
/// (`C(phi_old)` for the semi-implicit and homogeneous schemes, `C(phi)` otherwise).
/// Constraints are not applied.
pub fn elasticity_matrix(disc: &Discretization, state: &State, ctx: &SchemeContext) -> Result<SparseMatrix> {
    check_inputs(disc, state, ctx)?;
    let n = disc.n_nodes();
    let law = &ctx.params.law;
    let tab = disc.tabulation();
    let pat = &disc.pair_pattern;
    let mut vals = pat.zero_values();
    for (e, &nodes) in disc.mesh().elements().iter().enumerate() {
        let l = Local::gather(nodes, n, state, ctx);
        for q in 0..tab.n_points() {
            let w = tab.weights[q];
            let nv = &tab.values[q];
            let gr = &tab.grads[q];
            let c = match ctx.kind {
                SchemeKind::Implicit => law.tensor(interp(nv, &l.phi)),
                _ => law.tensor(interp(nv, &l.phi0)),
            };
            for a in 0..4 {
                for k in 0..2 {
                    let sa = c * Vector3::from(basis_strain(gr[a], k));
                    for b in 0..4 {
                        for m in 0..2 {
                            vals[pat.position(e, &nodes, k, a, m, b)] += w * dot3(&sa, basis_strain(gr[b], m));
                        }
                    }
                }
            }
        }
    }
    Ok(pat.matrix(vals))
}

/// Applies the row map of [`symmetric_jacobian`] to a coupled residual.
pub fn symmetrize_residual(r: &[f64], n_nodes: usize, tau: f64) -> Vec<f64> {
    let n = n_nodes;
    let mut out = r.to_vec();
    for i in 0..n {
        out[i] = -r[n + i];
        out[n + i] = -tau * r[i];
    }
    out
}

/// Inverse row map: recovers the plain Jacobian rows from the symmetric form.
pub fn unsymmetrize_rows(s: &SparseMatrix, n_nodes: usize, tau: f64) -> SparseMatrix {
    let n = n_nodes;
    let mut trip = Vec::with_capacity(s.nnz());
    for r in 0..s.nrows() {
        let (cols, vals) = s.row(r);
        let (dst, scale) = if r < n {
            (n + r, -1.0)
        } else if r < 2 * n {
            (r - n, -1.0 / tau)
        } else {
            (r, 1.0)
        };
        for (&c, &v) in cols.iter().zip(vals) {
            trip.push((dst, c, scale * v));
        }
    }
    SparseMatrix::from_triplets(s.nrows(), s.ncols(), &trip).expect("indices in range")
}

/// Jacobian of [`residual`]. Constrained displacement rows are identity rows.
pub fn jacobian(disc: &Discretization, state: &State, ctx: &SchemeContext) -> Result<SparseMatrix> {
    let s = symmetric_jacobian(disc, state, ctx)?;
    let j = unsymmetrize_rows(&s, disc.n_nodes(), ctx.params.tau);
    let mut fixed = vec![false; j.nrows()];
    for &d in disc.dofs().constrained() {
        fixed[d] = true;
    }
    let mut trip = Vec::with_capacity(j.nnz());
    for r in 0..j.nrows() {
        if fixed[r] {
            trip.push((r, r, 1.0));
            continue;
        }
        let (cols, vals) = j.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            trip.push((r, c, v));
        }
    }
    SparseMatrix::from_triplets(j.nrows(), j.ncols(), &trip)
}
