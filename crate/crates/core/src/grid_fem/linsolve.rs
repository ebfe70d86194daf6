//! Sparse direct and iterative linear solvers backed by `faer`.

use std::sync::Arc;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::solvers::SolveCore;
use faer::perm::PermRef;
use faer::sparse::linalg::cholesky::{factorize_symbolic_cholesky, IntranodeLbltRef, SymbolicCholesky, SymmetricOrdering};
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, Mat, Par, Side};

use crate::error::{Error, Result};

use super::sparse::SparseMatrix;

/// Which solver handles a system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Symmetric indefinite `L B L^T` with AMD ordering; falls back to LU.
    SymmetricIndefinite,
    /// General sparse LU.
    Lu,
    /// Jacobi preconditioned conjugate gradients, for SPD systems.
    ConjugateGradient,
}

#[derive(Debug, Clone, Copy)]
pub struct LinearSolverOptions {
    pub backend: Backend,
    /// Accepted relative residual `|A x - b| / |b|`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for LinearSolverOptions {
    fn default() -> Self {
        Self {
            backend: Backend::Lu,
            tolerance: 1e-8,
            max_iterations: 10_000,
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn relative_residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let r: f64 = ax.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    let bn = norm(b);
    if bn == 0.0 {
        r
    } else {
        r / bn
    }
}

/// Solves `A x = b` with sparse LU and a residual check.
pub fn solve_linear(matrix: &SparseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    solve_linear_with(matrix, rhs, &LinearSolverOptions::default())
}

pub fn solve_linear_with(matrix: &SparseMatrix, rhs: &[f64], options: &LinearSolverOptions) -> Result<Vec<f64>> {
    if matrix.nrows() != matrix.ncols() {
        return Err(Error::InvalidInput("linear solve needs a square matrix".into()));
    }
    crate::error::check_len(matrix.nrows(), rhs.len())?;
    match options.backend {
        Backend::ConjugateGradient => conjugate_gradient(matrix, rhs, options.tolerance, options.max_iterations),
        Backend::Lu => DirectSolver::with_tolerance(options.tolerance).factor(matrix, false)?.solve(rhs),
        Backend::SymmetricIndefinite => DirectSolver::with_tolerance(options.tolerance).factor(matrix, true)?.solve(rhs),
    }
}

/// Jacobi preconditioned CG. Errors carry the achieved relative residual.
pub fn conjugate_gradient(a: &SparseMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = b.len();
    let bn = norm(b);
    let mut x = vec![0.0; n];
    if bn == 0.0 {
        return Ok(x);
    }
    let dinv: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    for _ in 0..max_iter {
        a.matvec_into(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::SingularMatrix {
                achieved_residual: norm(&r) / bn,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(&r) <= tol * bn {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * dinv[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::LinearSolveNotConverged {
        achieved_residual: norm(&r) / bn,
        tolerance: tol,
    })
}

struct SymmetricCache {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    symbolic: Arc<SymbolicCholesky<usize>>,
}

struct LuCache {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    symbolic: SymbolicLu<usize>,
}

/// Direct solver that keeps symbolic factorizations keyed by sparsity pattern,
/// so repeated solves with a fixed pattern only pay for the numeric phase.
pub struct DirectSolver {
    tolerance: f64,
    sym: Option<SymmetricCache>,
    lu: Option<LuCache>,
}

impl Default for DirectSolver {
    fn default() -> Self {
        Self::new()
    }
}

enum Factor {
    Lblt {
        symbolic: Arc<SymbolicCholesky<usize>>,
        l_values: Vec<f64>,
        subdiag: Vec<f64>,
        perm_fwd: Vec<usize>,
        perm_inv: Vec<usize>,
    },
    // factor of the transpose: the CSR arrays are read as CSC
    LuT(Lu<usize, f64>),
}

/// A numeric factorization together with the matrix it came from.
pub struct Factorization {
    matrix: SparseMatrix,
    factor: Factor,
    tolerance: f64,
}

impl DirectSolver {
    pub fn new() -> Self {
        Self::with_tolerance(1e-8)
    }

    pub fn with_tolerance(tolerance: f64) -> Self {
        Self {
            tolerance,
            sym: None,
            lu: None,
        }
    }

    fn symbolic_sym(&mut self, a: &SparseMatrix) -> Result<Arc<SymbolicCholesky<usize>>> {
        if let Some(c) = &self.sym {
            if c.row_ptr == a.row_ptr() && c.col_idx == a.col_idx() {
                return Ok(c.symbolic.clone());
            }
        }
        let n = a.nrows();
        let pat = SymbolicSparseColMatRef::new_checked(n, n, a.row_ptr(), None, a.col_idx());
        let s = factorize_symbolic_cholesky(pat, Side::Lower, SymmetricOrdering::Amd, Default::default())
            .map_err(|e| Error::InvalidInput(format!("symbolic factorization failed: {e:?}")))?;
        let s = Arc::new(s);
        self.sym = Some(SymmetricCache {
            row_ptr: a.row_ptr().to_vec(),
            col_idx: a.col_idx().to_vec(),
            symbolic: s.clone(),
        });
        Ok(s)
    }

    fn symbolic_lu(&mut self, a: &SparseMatrix) -> Result<SymbolicLu<usize>> {
        if let Some(c) = &self.lu {
            if c.row_ptr == a.row_ptr() && c.col_idx == a.col_idx() {
                return Ok(c.symbolic.clone());
            }
        }
        let n = a.nrows();
        let pat = SymbolicSparseColMatRef::new_checked(n, n, a.row_ptr(), None, a.col_idx());
        let s = SymbolicLu::try_new(pat).map_err(|e| Error::InvalidInput(format!("symbolic LU failed: {e:?}")))?;
        self.lu = Some(LuCache {
            row_ptr: a.row_ptr().to_vec(),
            col_idx: a.col_idx().to_vec(),
            symbolic: s.clone(),
        });
        Ok(s)
    }

    fn factor_lu(&mut self, a: &SparseMatrix) -> Result<Factorization> {
        let n = a.nrows();
        let symbolic = self.symbolic_lu(a)?;
        let pat = SymbolicSparseColMatRef::new_checked(n, n, a.row_ptr(), None, a.col_idx());
        let mat = SparseColMatRef::new(pat, a.values());
        let lu = Lu::try_new_with_symbolic(symbolic, mat).map_err(|_| Error::SingularMatrix {
            achieved_residual: f64::INFINITY,
        })?;
        Ok(Factorization {
            matrix: a.clone(),
            factor: Factor::LuT(lu),
            tolerance: self.tolerance,
        })
    }

    /// Numeric factorization. `symmetric` selects `L B L^T`, which only reads the
    /// lower triangle; otherwise LU is used.
    pub fn factor(&mut self, a: &SparseMatrix, symmetric: bool) -> Result<Factorization> {
        if a.nrows() != a.ncols() {
            return Err(Error::InvalidInput("factorization needs a square matrix".into()));
        }
        if !a.values().iter().all(|v| v.is_finite()) {
            return Err(Error::SingularMatrix {
                achieved_residual: f64::NAN,
            });
        }
        if !symmetric {
            return self.factor_lu(a);
        }
        let n = a.nrows();
        let symbolic = self.symbolic_sym(a)?;
        let pat = SymbolicSparseColMatRef::new_checked(n, n, a.row_ptr(), None, a.col_idx());
        let mat = SparseColMatRef::new(pat, a.values());
        let mut l_values = vec![0.0; symbolic.len_val()];
        let mut subdiag = vec![0.0; n];
        let mut perm_fwd = vec![0usize; n];
        let mut perm_inv = vec![0usize; n];
        let mut mem = MemBuffer::new(symbolic.factorize_numeric_intranode_lblt_scratch::<f64>(Par::Seq, Default::default()));
        symbolic.factorize_numeric_intranode_lblt(
            &mut l_values,
            &mut subdiag,
            &mut perm_fwd,
            &mut perm_inv,
            mat,
            Side::Lower,
            Par::Seq,
            MemStack::new(&mut mem),
            Default::default(),
        );
        let f = Factorization {
            matrix: a.clone(),
            factor: Factor::Lblt {
                symbolic,
                l_values,
                subdiag,
                perm_fwd,
                perm_inv,
            },
            tolerance: self.tolerance,
        };
        Ok(f)
    }

    /// Factor and solve in one call. A symmetric solve that fails its residual
    /// check is retried with LU.
    pub fn solve(&mut self, a: &SparseMatrix, b: &[f64], symmetric: bool) -> Result<Vec<f64>> {
        let f = self.factor(a, symmetric)?;
        match f.solve(b) {
            Ok(x) => Ok(x),
            Err(e) if symmetric => {
                log::debug!("symmetric solve rejected ({e}), retrying with LU");
                self.factor_lu(a)?.solve(b)
            }
            Err(e) => Err(e),
        }
    }
}

impl Factorization {
    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    fn apply(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut x = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
        match &self.factor {
            Factor::Lblt {
                symbolic,
                l_values,
                subdiag,
                perm_fwd,
                perm_inv,
            } => {
                let perm = PermRef::new_checked(perm_fwd, perm_inv, n);
                let f = IntranodeLbltRef::new(symbolic, l_values, subdiag, perm);
                let mut mem = MemBuffer::new(symbolic.solve_in_place_scratch::<f64>(1, Par::Seq));
                f.solve_in_place_with_conj(Conj::No, x.as_mut(), Par::Seq, MemStack::new(&mut mem));
            }
            Factor::LuT(lu) => {
                lu.solve_transpose_in_place_with_conj(Conj::No, x.as_mut());
            }
        }
        (0..n).map(|i| x[(i, 0)]).collect()
    }

    /// Solves with up to three steps of iterative refinement. Errors carry the
    /// achieved relative residual.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        crate::error::check_len(self.matrix.nrows(), b.len())?;
        if norm(b) == 0.0 {
            return Ok(vec![0.0; b.len()]);
        }
        let mut x = self.apply(b);
        let mut res = relative_residual(&self.matrix, &x, b);
        let mut k = 0;
        while res.is_finite() && res > self.tolerance && k < 3 {
            let ax = self.matrix.matvec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
            let dx = self.apply(&r);
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(p, q)| p + q).collect();
            let tres = relative_residual(&self.matrix, &trial, b);
            if !(tres < res) {
                break;
            }
            x = trial;
            res = tres;
            k += 1;
        }
        if !res.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularMatrix { achieved_residual: res });
        }
        if res > self.tolerance {
            return Err(Error::LinearSolveNotConverged {
                achieved_residual: res,
                tolerance: self.tolerance,
            });
        }
        Ok(x)
    }
}
