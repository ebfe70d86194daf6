use nalgebra::Matrix3;

use crate::error::{Error, Result};

use super::mesh::Mesh;
use super::quadrature::{Q1Tabulation, QuadratureRule};
use super::sparse::{BlockPattern, SparseMatrix};

/// A quadrature point handed to coefficient callbacks.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub element: usize,
    pub index: usize,
    pub x: [f64; 2],
}

fn for_each_point(mesh: &Mesh, tab: &Q1Tabulation, mut f: impl FnMut(usize, &[usize; 4], usize, QuadPoint)) {
    for (e, nodes) in mesh.elements().iter().enumerate() {
        let origin = mesh.element_origin(e);
        for q in 0..tab.n_points() {
            let qp = QuadPoint {
                element: e,
                index: q,
                x: tab.physical_point(origin, q),
            };
            f(e, nodes, q, qp);
        }
    }
}

/// Weighted mass matrix `(c u, v)` with the default 2 x 2 rule.
pub fn assemble_mass(mesh: &Mesh, coefficient: impl Fn(QuadPoint) -> f64) -> SparseMatrix {
    let tab = Q1Tabulation::new(&QuadratureRule::default_rule(), mesh.h());
    let pat = BlockPattern::full(mesh, 1);
    let mut vals = pat.zero_values();
    for_each_point(mesh, &tab, |e, nodes, q, qp| {
        let w = tab.weights[q] * coefficient(qp);
        let n = &tab.values[q];
        for a in 0..4 {
            for b in 0..4 {
                vals[pat.position(e, nodes, 0, a, 0, b)] += w * n[a] * n[b];
            }
        }
    });
    let mut m = pat.matrix(vals);
    m.prune_zeros();
    m
}

/// Weighted stiffness matrix `(c grad u, grad v)` with the default 2 x 2 rule.
pub fn assemble_stiffness(mesh: &Mesh, coefficient: impl Fn(QuadPoint) -> f64) -> SparseMatrix {
    let tab = Q1Tabulation::new(&QuadratureRule::default_rule(), mesh.h());
    let pat = BlockPattern::full(mesh, 1);
    let mut vals = pat.zero_values();
    for_each_point(mesh, &tab, |e, nodes, q, qp| {
        let w = tab.weights[q] * coefficient(qp);
        let g = &tab.grads[q];
        for a in 0..4 {
            for b in 0..4 {
                vals[pat.position(e, nodes, 0, a, 0, b)] += w * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
            }
        }
    });
    let mut m = pat.matrix(vals);
    m.prune_zeros();
    m
}

/// Voigt strain `(e11, e22, 2 e12)` produced by a unit displacement of node `a` in direction `k`.
#[inline]
pub fn basis_strain(grad: [f64; 2], k: usize) -> [f64; 3] {
    if k == 0 {
        [grad[0], 0.0, grad[1]]
    } else {
        [0.0, grad[1], grad[0]]
    }
}

pub(crate) fn check_voigt_tensor(c: &Matrix3<f64>) -> Result<()> {
    if !c.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidMaterial("tensor has non-finite entries".into()));
    }
    let scale = c.amax().max(f64::MIN_POSITIVE);
    if (c - c.transpose()).amax() > 1e-12 * scale {
        return Err(Error::InvalidMaterial("tensor is not symmetric".into()));
    }
    if c.cholesky().is_none() {
        return Err(Error::InvalidMaterial("tensor is not positive definite".into()));
    }
    Ok(())
}

/// Vector elasticity matrix `(C eps(u) : eps(v))` with displacement components blocked:
/// rows `0..N` are `u_x`, rows `N..2N` are `u_y`.
pub fn assemble_vector_elasticity(mesh: &Mesh, tensor: impl Fn(QuadPoint) -> Matrix3<f64>) -> Result<SparseMatrix> {
    let tab = Q1Tabulation::new(&QuadratureRule::default_rule(), mesh.h());
    let pat = BlockPattern::full(mesh, 2);
    let mut vals = pat.zero_values();
    let mut err = None;
    for_each_point(mesh, &tab, |e, nodes, q, qp| {
        let c = tensor(qp);
        if err.is_none() {
            if let Err(x) = check_voigt_tensor(&c) {
                err = Some(x);
            }
        }
        let w = tab.weights[q];
        let g = &tab.grads[q];
        for a in 0..4 {
            for k in 0..2 {
                let sa = basis_strain(g[a], k);
                let ca = c * nalgebra::Vector3::from(sa);
                for b in 0..4 {
                    for l in 0..2 {
                        let sb = basis_strain(g[b], l);
                        let v = ca[0] * sb[0] + ca[1] * sb[1] + ca[2] * sb[2];
                        vals[pat.position(e, nodes, k, a, l, b)] += w * v;
                    }
                }
            }
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let mut m = pat.matrix(vals);
    m.prune_zeros();
    Ok(m)
}

/// Load vector `(f, v)` for a scalar source.
pub fn assemble_load(mesh: &Mesh, source: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
    let tab = Q1Tabulation::new(&QuadratureRule::gauss(3).expect("tabulated"), mesh.h());
    let mut b = vec![0.0; mesh.n_nodes()];
    for_each_point(mesh, &tab, |_, nodes, q, qp| {
        let w = tab.weights[q] * source(qp.x);
        for a in 0..4 {
            b[nodes[a]] += w * tab.values[q][a];
        }
    });
    b
}

/// Load vector `(f, v)` for a vector source, components blocked like the elasticity matrix.
pub fn assemble_vector_load(mesh: &Mesh, source: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
    let tab = Q1Tabulation::new(&QuadratureRule::gauss(3).expect("tabulated"), mesh.h());
    let n = mesh.n_nodes();
    let mut b = vec![0.0; 2 * n];
    for_each_point(mesh, &tab, |_, nodes, q, qp| {
        let f = source(qp.x);
        for a in 0..4 {
            let w = tab.weights[q] * tab.values[q][a];
            b[nodes[a]] += w * f[0];
            b[n + nodes[a]] += w * f[1];
        }
    });
    b
}

/// `L2` norm of the difference between a nodal field and a function, using a 3 x 3 rule.
pub fn l2_error(mesh: &Mesh, nodal: &[f64], exact: impl Fn([f64; 2]) -> f64) -> f64 {
    let tab = Q1Tabulation::new(&QuadratureRule::gauss(3).expect("tabulated"), mesh.h());
    let mut acc = 0.0;
    for_each_point(mesh, &tab, |_, nodes, q, qp| {
        let uh: f64 = (0..4).map(|a| tab.values[q][a] * nodal[nodes[a]]).sum();
        acc += tab.weights[q] * (uh - exact(qp.x)).powi(2);
    });
    acc.sqrt()
}
