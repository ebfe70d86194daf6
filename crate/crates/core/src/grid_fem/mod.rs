//! Structured Q1 meshes, quadrature, sparse storage, assembly and linear solves.

pub mod assembly;
pub mod dirichlet;
pub mod linsolve;
pub mod mesh;
pub mod quadrature;
pub mod sparse;

pub use assembly::{
    assemble_load, assemble_mass, assemble_stiffness, assemble_vector_elasticity, assemble_vector_load,
    basis_strain, l2_error, QuadPoint,
};
pub use dirichlet::{apply_dirichlet, eliminate_dofs, DofMap, Field};
pub use linsolve::{conjugate_gradient, solve_linear, solve_linear_with, Backend, DirectSolver, Factorization, LinearSolverOptions};
pub use mesh::{build_mesh, Mesh};
pub use quadrature::{q1_shape, q1_shape_grad, Q1Tabulation, QuadratureRule};
pub use sparse::{BlockPattern, SparseMatrix};
