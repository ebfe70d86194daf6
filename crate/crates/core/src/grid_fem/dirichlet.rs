use crate::error::{Error, Result};

use super::mesh::Mesh;
use super::sparse::SparseMatrix;

/// The four nodal fields of the coupled system, in global order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Phi,
    Mu,
    Ux,
    Uy,
}

impl Field {
    pub const ALL: [Field; 4] = [Field::Phi, Field::Mu, Field::Ux, Field::Uy];

    pub fn index(self) -> usize {
        match self {
            Field::Phi => 0,
            Field::Mu => 1,
            Field::Ux => 2,
            Field::Uy => 3,
        }
    }
}

/// Global numbering of `(phi, mu, u_x, u_y)` with homogeneous Dirichlet
/// constraints on the displacement at boundary nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    n_nodes: usize,
    constrained: Vec<usize>,
    values: Vec<f64>,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Self {
        let n = mesh.n_nodes();
        let mut constrained = Vec::with_capacity(2 * mesh.boundary_nodes().len());
        for f in [Field::Ux, Field::Uy] {
            constrained.extend(mesh.boundary_nodes().iter().map(|&k| f.index() * n + k));
        }
        constrained.sort_unstable();
        let values = vec![0.0; constrained.len()];
        Self {
            n_nodes: n,
            constrained,
            values,
        }
    }

    /// Custom constraint set, validated against the displacement block.
    pub fn with_constraints(n_nodes: usize, constrained: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if constrained.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: constrained.len(),
                got: values.len(),
            });
        }
        let map = Self {
            n_nodes,
            constrained,
            values,
        };
        for &d in &map.constrained {
            if !map.u_block().contains(&d) {
                return Err(Error::InvalidConstraint { dof: d });
            }
        }
        Ok(map)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_dofs(&self) -> usize {
        4 * self.n_nodes
    }

    pub fn offset(&self, f: Field) -> usize {
        f.index() * self.n_nodes
    }

    pub fn dof(&self, f: Field, node: usize) -> usize {
        self.offset(f) + node
    }

    pub fn u_block(&self) -> std::ops::Range<usize> {
        2 * self.n_nodes..4 * self.n_nodes
    }

    pub fn constrained(&self) -> &[usize] {
        &self.constrained
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Constrained dofs relative to the start of the displacement block.
    pub fn constrained_in_u_block(&self) -> Vec<usize> {
        self.constrained.iter().map(|d| d - 2 * self.n_nodes).collect()
    }
}

/// Symmetric elimination of the constrained dofs of the coupled system.
/// Fails if a constraint lies outside the displacement block.
pub fn apply_dirichlet(matrix: &mut SparseMatrix, rhs: &mut [f64], dofmap: &DofMap) -> Result<()> {
    for &d in dofmap.constrained() {
        if !dofmap.u_block().contains(&d) {
            return Err(Error::InvalidConstraint { dof: d });
        }
    }
    eliminate_dofs(matrix, rhs, dofmap.constrained(), dofmap.values())
}

/// Symmetric elimination of arbitrary dofs: constrained rows and columns are
/// zeroed, the diagonal set to one, and the right-hand side corrected so the
/// solution takes the prescribed values.
pub fn eliminate_dofs(matrix: &mut SparseMatrix, rhs: &mut [f64], dofs: &[usize], values: &[f64]) -> Result<()> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::InvalidInput("elimination needs a square matrix".into()));
    }
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: rhs.len(),
        });
    }
    if dofs.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: dofs.len(),
            got: values.len(),
        });
    }
    let mut fixed = vec![None; n];
    for (&d, &v) in dofs.iter().zip(values) {
        if d >= n {
            return Err(Error::InvalidConstraint { dof: d });
        }
        fixed[d] = Some(v);
    }
    for &d in dofs {
        if matrix.row(d).0.binary_search(&d).is_err() {
            return Err(Error::InvalidInput(format!("row {d} has no stored diagonal")));
        }
    }
    let row_ptr = matrix.row_ptr().to_vec();
    let cols = matrix.col_idx().to_vec();
    let vals = matrix.values_mut();
    for r in 0..n {
        for k in row_ptr[r]..row_ptr[r + 1] {
            let c = cols[k];
            if fixed[r].is_some() {
                vals[k] = if c == r { 1.0 } else { 0.0 };
            } else if let Some(g) = fixed[c] {
                rhs[r] -= vals[k] * g;
                vals[k] = 0.0;
            }
        }
    }
    for (&d, &v) in dofs.iter().zip(values) {
        rhs[d] = v;
    }
    Ok(())
}
