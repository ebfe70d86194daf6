//! Time discretizations of the Cahn-Larché system: state, residuals, Jacobians and energies.
//!
//! Global unknown ordering is `(phi, mu, u_x, u_y)`, each a nodal vector of length `N`.

mod energy;
mod residual;

pub use energy::{free_energy, free_energy_with_rule, semi_implicit_coupling_term, step_potential, EnergyBreakdown};
pub use residual::{
    ch_block_matrix, elasticity_matrix, jacobian, residual, symmetric_jacobian, symmetrize_residual,
    unsymmetrize_rows,
};

use crate::error::{check_len, Error, Result};
use crate::grid_fem::{
    build_mesh, BlockPattern, DofMap, Mesh, Q1Tabulation, QuadratureRule, SparseMatrix,
};
use crate::materials::ModelParams;

/// Treatment of the elastic coupling in one time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    /// Elastic driving force evaluated at the new phase field.
    Implicit,
    /// Stiffness frozen at the previous phase field; the swelling term stays implicit.
    SemiImplicit,
    /// Constant stiffness. Requires a homogeneous elastic law.
    Homogeneous,
}

impl SchemeKind {
    /// Whether a step of this scheme minimizes a convex potential.
    pub fn has_potential(self) -> bool {
        !matches!(self, SchemeKind::Implicit)
    }
}

/// Nodal values of phase field, chemical potential and displacement (`u_x` then `u_y`).
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub phi: Vec<f64>,
    pub mu: Vec<f64>,
    pub u: Vec<f64>,
}

impl State {
    pub fn zeros(n_nodes: usize) -> Self {
        Self {
            phi: vec![0.0; n_nodes],
            mu: vec![0.0; n_nodes],
            u: vec![0.0; 2 * n_nodes],
        }
    }

    /// State with the given phase field and zero chemical potential and displacement.
    pub fn from_phi(phi: Vec<f64>) -> Self {
        let n = phi.len();
        Self {
            phi,
            mu: vec![0.0; n],
            u: vec![0.0; 2 * n],
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.phi.len()
    }

    pub fn check(&self, n_nodes: usize) -> Result<()> {
        check_len(n_nodes, self.phi.len())?;
        check_len(n_nodes, self.mu.len())?;
        check_len(2 * n_nodes, self.u.len())
    }

    /// Concatenation `(phi, mu, u_x, u_y)`.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(4 * self.n_nodes());
        v.extend_from_slice(&self.phi);
        v.extend_from_slice(&self.mu);
        v.extend_from_slice(&self.u);
        v
    }

    pub fn from_vector(v: &[f64], n_nodes: usize) -> Result<Self> {
        check_len(4 * n_nodes, v.len())?;
        Ok(Self {
            phi: v[..n_nodes].to_vec(),
            mu: v[n_nodes..2 * n_nodes].to_vec(),
            u: v[2 * n_nodes..].to_vec(),
        })
    }
}

/// Everything a step needs besides the unknowns: scheme, parameters, previous level and sources.
#[derive(Debug, Clone)]
pub struct SchemeContext {
    pub kind: SchemeKind,
    pub params: ModelParams,
    pub prev: State,
    /// Nodal reaction source `R`.
    pub reaction: Vec<f64>,
    /// Nodal body force, `f_x` then `f_y`.
    pub body_force: Vec<f64>,
}

impl SchemeContext {
    /// Context with constant sources taken from `params`.
    pub fn new(kind: SchemeKind, params: ModelParams, prev: State) -> Result<Self> {
        params.validate()?;
        if kind == SchemeKind::Homogeneous && params.law.heterogeneous {
            return Err(Error::InvalidInput(
                "the homogeneous scheme needs a phase independent stiffness".into(),
            ));
        }
        let n = prev.n_nodes();
        prev.check(n)?;
        let mut body_force = vec![params.body_force[0]; n];
        body_force.extend(std::iter::repeat(params.body_force[1]).take(n));
        Ok(Self {
            kind,
            params,
            reaction: vec![params.reaction; n],
            body_force,
            prev,
        })
    }

    /// Advances the previous level.
    pub fn set_prev(&mut self, prev: State) {
        self.prev = prev;
    }
}

/// Mesh plus precomputed operators shared by all scheme evaluations.
#[derive(Debug, Clone)]
pub struct Discretization {
    mesh: Mesh,
    tab: Q1Tabulation,
    dofs: DofMap,
    mass: SparseMatrix,
    stiffness: SparseMatrix,
    mass_loc: [[f64; 4]; 4],
    stiff_loc: [[f64; 4]; 4],
    full_pattern: BlockPattern,
    pair_pattern: BlockPattern,
}

impl Discretization {
    pub fn new(mesh: Mesh) -> Self {
        let tab = Q1Tabulation::new(&QuadratureRule::default_rule(), mesh.h());
        let mut mass_loc = [[0.0; 4]; 4];
        let mut stiff_loc = [[0.0; 4]; 4];
        for q in 0..tab.n_points() {
            let w = tab.weights[q];
            let (nv, g) = (&tab.values[q], &tab.grads[q]);
            for a in 0..4 {
                for b in 0..4 {
                    mass_loc[a][b] += w * nv[a] * nv[b];
                    stiff_loc[a][b] += w * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                }
            }
        }
        let t = true;
        let f = false;
        let full_pattern = BlockPattern::new(
            &mesh,
            4,
            &[vec![t, t, t, t], vec![t, t, f, f], vec![t, f, t, t], vec![t, f, t, t]],
        );
        let pair_pattern = BlockPattern::full(&mesh, 2);
        let mass = crate::grid_fem::assemble_mass(&mesh, |_| 1.0);
        let stiffness = crate::grid_fem::assemble_stiffness(&mesh, |_| 1.0);
        let dofs = DofMap::new(&mesh);
        Self {
            mesh,
            tab,
            dofs,
            mass,
            stiffness,
            mass_loc,
            stiff_loc,
            full_pattern,
            pair_pattern,
        }
    }

    pub fn with_n(n: usize) -> Result<Self> {
        Ok(Self::new(build_mesh(n)?))
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn tabulation(&self) -> &Q1Tabulation {
        &self.tab
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn n_nodes(&self) -> usize {
        self.mesh.n_nodes()
    }

    pub fn mass(&self) -> &SparseMatrix {
        &self.mass
    }

    pub fn stiffness(&self) -> &SparseMatrix {
        &self.stiffness
    }

    /// `L2` norm of a nodal scalar field.
    pub fn l2_norm(&self, v: &[f64]) -> f64 {
        self.mass.bilinear(v, v).max(0.0).sqrt()
    }

    /// `L2` norm of a nodal vector field stored component-blocked.
    pub fn l2_norm_vector(&self, u: &[f64]) -> f64 {
        let n = self.n_nodes();
        (self.mass.bilinear(&u[..n], &u[..n]) + self.mass.bilinear(&u[n..], &u[n..]))
            .max(0.0)
            .sqrt()
    }

    /// `(v, 1)`.
    pub fn integrate(&self, v: &[f64]) -> f64 {
        self.mass.matvec(v).iter().sum()
    }

    /// Constrained displacement dofs, numbered within the displacement block.
    pub fn u_constraints(&self) -> Vec<usize> {
        self.dofs.constrained_in_u_block()
    }
}
