//! Discrete dual norm, norm-equivalence constants, contraction bounds and observed rates.

use nalgebra::DMatrix;

use crate::error::{check_len, Error, Result};
use crate::grid_fem::{assemble_mass, assemble_stiffness, build_mesh, DirectSolver, Factorization, Mesh, SparseMatrix};
use crate::materials::{voigt_identity, ModelParams};
use crate::schemes::Discretization;

/// Solver for the weighted mean-zero Poisson problem behind `|s|_{Q*}`.
///
/// Finds `v` with `(m grad v, grad q) = (s, q)` for all `q` and `(v, 1) = 0`,
/// the mean constraint enforced by a Lagrange multiplier row.
pub struct DualNorm {
    m: f64,
    n: usize,
    mass: SparseMatrix,
    stiffness: SparseMatrix,
    factor: Factorization,
}

impl DualNorm {
    pub fn new(disc: &Discretization, m: f64) -> Result<Self> {
        Self::from_operators(disc.mass().clone(), disc.stiffness().clone(), m)
    }

    pub fn from_operators(mass: SparseMatrix, stiffness: SparseMatrix, m: f64) -> Result<Self> {
        if !(m > 0.0) {
            return Err(Error::InvalidInput("mobility must be positive".into()));
        }
        let n = mass.nrows();
        let c = mass.matvec(&vec![1.0; n]);
        let mut trip = Vec::with_capacity(stiffness.nnz() + 2 * n);
        for r in 0..n {
            let (cols, vals) = stiffness.row(r);
            for (&cc, &v) in cols.iter().zip(vals) {
                trip.push((r, cc, m * v));
            }
            trip.push((r, n, c[r]));
            trip.push((n, r, c[r]));
        }
        let a = SparseMatrix::from_triplets(n + 1, n + 1, &trip)?;
        let factor = DirectSolver::with_tolerance(1e-10).factor(&a, false)?;
        Ok(Self {
            m,
            n,
            mass,
            stiffness,
            factor,
        })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check_mean(&self, s: &[f64]) -> Result<()> {
        let ms = self.mass.matvec(s);
        let mean: f64 = ms.iter().sum();
        let l2 = s.iter().zip(&ms).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt();
        if mean.abs() > 1e-8 * l2 + 1e-14 {
            return Err(Error::InvalidInput(format!(
                "dual norm needs a mean-zero argument, (s, 1) = {mean:e}"
            )));
        }
        Ok(())
    }

    /// Riesz representative `v`.
    pub fn riesz(&self, s: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, s.len())?;
        let mut rhs = self.mass.matvec(s);
        rhs.push(0.0);
        let mut v = self.factor.solve(&rhs)?;
        v.truncate(self.n);
        Ok(v)
    }

    /// `|m^{1/2} grad v|_{L2}`.
    pub fn norm(&self, s: &[f64]) -> Result<f64> {
        self.check_mean(s)?;
        self.norm_unchecked(s)
    }

    /// Same as [`DualNorm::norm`] without the mean check.
    pub fn norm_unchecked(&self, s: &[f64]) -> Result<f64> {
        let v = self.riesz(s)?;
        Ok((self.m * self.stiffness.bilinear(&v, &v)).max(0.0).sqrt())
    }

    /// `<s, s>^{1/2}` computed as `(s, v)^{1/2}`.
    pub fn norm_by_pairing(&self, s: &[f64]) -> Result<f64> {
        self.check_mean(s)?;
        let v = self.riesz(s)?;
        Ok(self.mass.bilinear(s, &v).max(0.0).sqrt())
    }
}

/// `|s|_{Q*}` for a mean-zero nodal vector on `mesh` with mobility `m`.
pub fn dual_norm(s: &[f64], mesh: &Mesh, m: f64) -> Result<f64> {
    let mass = assemble_mass(mesh, |_| 1.0);
    let stiffness = assemble_stiffness(mesh, |_| 1.0);
    DualNorm::from_operators(mass, stiffness, m)?.norm(s)
}

/// Constants entering the contraction bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormConstants {
    /// Poincaré constant for mean-zero functions.
    pub c_omega: f64,
    /// Inverse inequality constant: `|s| <= C_inv h^-1 |s|_{Q*}`.
    pub c_inv: f64,
    /// Smallest eigenvalue of `C(phi)` over `[-1, 1]`.
    pub c_c_min: f64,
    /// Largest eigenvalue of `C(phi)` over `[-1, 1]`.
    pub c_c_max: f64,
    /// Measured Lipschitz constant of `psi_c'`.
    pub l_psi_c: f64,
    /// Smallest nonzero generalized eigenvalue of `(K, M)`.
    pub lambda_1: f64,
    /// Largest generalized eigenvalue of `(K, M)`.
    pub lambda_max: f64,
    /// Cells per side of the mesh the eigenproblems were solved on.
    pub n_eig: usize,
}

fn mass_inner(mass: &SparseMatrix) -> impl Fn(&[f64], &[f64]) -> f64 + '_ {
    move |a, b| mass.bilinear(a, b)
}

/// Largest eigenvalue of an operator self-adjoint in `inner`, by Lanczos with full
/// reorthogonalization. Returns the Ritz value and its residual estimate.
fn lanczos_max(
    mut apply: impl FnMut(&[f64]) -> Result<Vec<f64>>,
    inner: impl Fn(&[f64], &[f64]) -> f64,
    project: impl Fn(&mut Vec<f64>),
    n: usize,
    max_k: usize,
    tol: f64,
) -> Result<(f64, f64)> {
    let mut v: Vec<f64> = (0..n).map(|i| ((i as f64 * 12.9898 + 1.0).sin() * 43758.5453).fract()).collect();
    project(&mut v);
    let nv = inner(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= nv);
    let mut basis: Vec<Vec<f64>> = vec![v];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut last = (0.0, f64::INFINITY);
    for k in 0..max_k.min(n) {
        let mut w = apply(&basis[k])?;
        project(&mut w);
        let a = inner(&w, &basis[k]);
        alpha.push(a);
        // two passes of Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for b in &basis {
                let c = inner(&w, b);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let bn = inner(&w, &w).max(0.0).sqrt();
        let m = alpha.len();
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = t.symmetric_eigen();
        let (imax, theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc });
        let res = bn * eig.eigenvectors[(m - 1, imax)].abs();
        last = (theta, res);
        if res <= tol * theta.abs() || bn <= 1e-14 * theta.abs() {
            return Ok(last);
        }
        beta.push(bn);
        w.iter_mut().for_each(|x| *x /= bn);
        basis.push(w);
    }
    if last.1 <= 1e-6 * last.0.abs() {
        Ok(last)
    } else {
        Err(Error::EigenSolverFailed { residual: last.1 })
    }
}

/// Extreme generalized eigenvalues `(lambda_1, lambda_max)` of the Neumann pair `(K, M)`,
/// `lambda_1` restricted to mean-zero vectors.
pub fn neumann_eigenvalues(mesh: &Mesh) -> Result<(f64, f64)> {
    let mass = assemble_mass(mesh, |_| 1.0);
    let stiff = assemble_stiffness(mesh, |_| 1.0);
    let n = mass.nrows();
    let ones = vec![1.0; n];
    let m1 = mass.matvec(&ones);
    let area: f64 = m1.iter().sum();
    let project = |v: &mut Vec<f64>| {
        let c: f64 = v.iter().zip(&m1).map(|(a, b)| a * b).sum::<f64>() / area;
        v.iter_mut().for_each(|x| *x -= c);
    };
    let inner = mass_inner(&mass);

    let mut solver = DirectSolver::with_tolerance(1e-10);
    let mfac = solver.factor(&mass, true)?;
    let (lmax, _) = lanczos_max(|v| mfac.solve(&stiff.matvec(v)), &inner, project, n, 300, 1e-10)?;

    let sigma = 1.0;
    let mut trip = Vec::with_capacity(mass.nnz() + stiff.nnz());
    for (a, scale) in [(&mass, sigma), (&stiff, 1.0)] {
        for r in 0..n {
            let (cols, vals) = a.row(r);
            trip.extend(cols.iter().zip(vals).map(|(&c, &v)| (r, c, scale * v)));
        }
    }
    let shifted = SparseMatrix::from_triplets(n, n, &trip)?;
    let sfac = DirectSolver::with_tolerance(1e-10).factor(&shifted, true)?;
    let (mu, _) = lanczos_max(|v| sfac.solve(&mass.matvec(v)), &inner, project, n, 300, 1e-12)?;
    let lambda_1 = 1.0 / mu - sigma;
    Ok((lambda_1, lmax))
}

/// Largest difference quotient of `psi_c'` over `[-3, 3]`.
pub fn measured_lipschitz(params: &ModelParams) -> f64 {
    let k = 6000;
    let x = |i: usize| -3.0 + 6.0 * i as f64 / k as f64;
    (0..k)
        .map(|i| {
            let (a, b) = (x(i), x(i + 1));
            (params.well.psi_c_prime(b) - params.well.psi_c_prime(a)).abs() / (b - a)
        })
        .fold(0.0, f64::max)
}

/// Estimates the constants, solving the eigenproblems on at most 32 cells per side.
pub fn estimate_constants(mesh: &Mesh, params: &ModelParams) -> Result<NormConstants> {
    estimate_constants_at(mesh.n_per_side().min(32), params)
}

/// Estimates the constants with the eigenproblems solved on an `n_eig` mesh.
pub fn estimate_constants_at(n_eig: usize, params: &ModelParams) -> Result<NormConstants> {
    let mesh = build_mesh(n_eig)?;
    let (lambda_1, lambda_max) = neumann_eigenvalues(&mesh)?;
    let (c_c_min, c_c_max) = params.law.eigen_bounds();
    Ok(NormConstants {
        c_omega: 1.0 / lambda_1.sqrt(),
        c_inv: mesh.h() * (params.m * lambda_max).sqrt(),
        c_c_min,
        c_c_max,
        l_psi_c: measured_lipschitz(params),
        lambda_1,
        lambda_max,
        n_eig,
    })
}

/// Contraction bound of alternating minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBound {
    pub beta_ch: f64,
    pub beta_e: f64,
    pub l_ch: f64,
    /// `(1 - beta_ch / L_ch) (1 - beta_e)`
    pub contraction: f64,
}

/// Which elastic quantity enters the bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundForm {
    /// Heterogeneous form with `I:I C_max` and `I:I C_min`; the value is `I:I`.
    Extremes { identity_contraction: f64 },
    /// Homogeneous form with `I : C I` for the given law (stiffness at `phi = -1`).
    Homogeneous,
}

impl Default for BoundForm {
    fn default() -> Self {
        BoundForm::Extremes {
            identity_contraction: 2.0,
        }
    }
}

/// Bound with `I:I = 2` and `L_psi = gamma / ell * L_psi_c`.
pub fn rate_bound(constants: &NormConstants, params: &ModelParams, h: f64, tau: f64) -> RateBound {
    rate_bound_with(constants, params, h, tau, BoundForm::default())
}

pub fn rate_bound_with(constants: &NormConstants, params: &ModelParams, h: f64, tau: f64, form: BoundForm) -> RateBound {
    let xi2 = params.law.xi * params.law.xi;
    let (upper, lower) = match form {
        BoundForm::Extremes { identity_contraction } => {
            (identity_contraction * constants.c_c_max, identity_contraction * constants.c_c_min)
        }
        BoundForm::Homogeneous => {
            let id = voigt_identity();
            let v = id.dot(&(params.law.c_minus * id));
            (v, v)
        }
    };
    let ci2 = constants.c_inv * constants.c_inv;
    let co2 = constants.c_omega * constants.c_omega;
    let gl = params.gamma * params.ell;
    let beta = if xi2 * upper == 0.0 {
        1.0
    } else {
        1.0 - 1.0 / (h * h / (tau * ci2 * xi2 * upper) + gl / (co2 * xi2 * upper) + 1.0)
    };
    let l_psi = params.gamma / params.ell * constants.l_psi_c;
    let l_ch = 1.0 + l_psi / (h * h / (tau * ci2) + gl / co2 + xi2 * lower);
    let contraction = ((1.0 - beta / l_ch) * (1.0 - beta)).clamp(0.0, 1.0);
    RateBound {
        beta_ch: beta,
        beta_e: beta,
        l_ch,
        contraction,
    }
}

/// Gaps below this are treated as converged and ignored.
pub const GAP_NOISE_FLOOR: f64 = 1e-12;

/// Geometric mean of successive potential-gap ratios `d_{i+1} / d_i` with
/// `d_i = F_i - reference`. Fails when the gaps increase beyond round-off.
pub fn observed_rate(potentials: &[f64], reference: f64) -> Result<f64> {
    let gaps: Vec<f64> = potentials.iter().map(|f| f - reference).collect();
    for i in 1..gaps.len() {
        if gaps[i] > gaps[i - 1] + GAP_NOISE_FLOOR + 1e-12 * reference.abs() {
            return Err(Error::NonMonotoneGaps { index: i });
        }
    }
    let live: Vec<f64> = gaps.iter().copied().take_while(|&d| d > GAP_NOISE_FLOOR).collect();
    if live.len() < 2 {
        return Ok(0.0);
    }
    let k = (live.len() - 1) as f64;
    Ok((live[live.len() - 1] / live[0]).powf(1.0 / k))
}

/// Per-iteration ratios `d_{i+1} / d_i` above the noise floor.
pub fn gap_ratios(potentials: &[f64], reference: f64) -> Vec<f64> {
    let gaps: Vec<f64> = potentials.iter().map(|f| f - reference).collect();
    gaps.windows(2)
        .filter(|w| w[0] > GAP_NOISE_FLOOR && w[1] > GAP_NOISE_FLOOR)
        .map(|w| w[1] / w[0])
        .collect()
}
