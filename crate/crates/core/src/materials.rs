//! Double-well potential, phase interpolation and the elasticity law.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::grid_fem::assembly::check_voigt_tensor;

/// Voigt identity `(1, 1, 0)`.
pub fn voigt_identity() -> Vector3<f64> {
    Vector3::new(1.0, 1.0, 0.0)
}

/// Voigt double contraction of two strains stored as `(e11, e22, 2 e12)` and
/// `(s11, s22, s12)`: plain dot product.
#[inline]
pub fn contract(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.dot(b)
}

/// Truncated quartic double well with a convex-concave split.
///
/// Inside `(-theta, theta)`: `psi = (1 - phi^2)^2`, `psi_c = phi^4 + 1`, `psi_e = 2 phi^2`.
/// Outside the convex part continues quadratically with matching value and slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleWell {
    pub theta: f64,
}

impl Default for DoubleWell {
    fn default() -> Self {
        Self { theta: 2.0 }
    }
}

impl DoubleWell {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta > 1.0) || !theta.is_finite() {
            return Err(Error::InvalidInput(format!("truncation threshold must exceed 1, got {theta}")));
        }
        Ok(Self { theta })
    }

    fn inside(&self, phi: f64) -> bool {
        phi.abs() < self.theta
    }

    pub fn psi(&self, phi: f64) -> f64 {
        let t2 = self.theta * self.theta;
        if self.inside(phi) {
            (1.0 - phi * phi).powi(2)
        } else {
            2.0 * (t2 - 1.0) * phi * phi - (t2 * t2 - 1.0)
        }
    }

    pub fn psi_c(&self, phi: f64) -> f64 {
        let t2 = self.theta * self.theta;
        if self.inside(phi) {
            phi.powi(4) + 1.0
        } else {
            2.0 * t2 * phi * phi - (t2 * t2 - 1.0)
        }
    }

    pub fn psi_c_prime(&self, phi: f64) -> f64 {
        if self.inside(phi) {
            4.0 * phi.powi(3)
        } else {
            4.0 * self.theta * self.theta * phi
        }
    }

    pub fn psi_c_second(&self, phi: f64) -> f64 {
        if self.inside(phi) {
            12.0 * phi * phi
        } else {
            4.0 * self.theta * self.theta
        }
    }

    pub fn psi_e(&self, phi: f64) -> f64 {
        2.0 * phi * phi
    }

    pub fn psi_e_prime(&self, phi: f64) -> f64 {
        4.0 * phi
    }

    pub fn psi_e_second(&self, _phi: f64) -> f64 {
        4.0
    }

    /// Lipschitz constant of `psi_c'` as given in the model assumptions, `2 theta^2`.
    pub fn lipschitz_stated(&self) -> f64 {
        2.0 * self.theta * self.theta
    }

    /// Actual supremum of `psi_c''`, reached just inside `|phi| = theta`: `12 theta^2`.
    pub fn lipschitz_measured(&self) -> f64 {
        12.0 * self.theta * self.theta
    }
}

/// Cubic interpolation between the phases, clamped to `[0, 1]` outside `[-1, 1]`.
pub fn pi_interp(phi: f64) -> f64 {
    if phi <= -1.0 {
        0.0
    } else if phi >= 1.0 {
        1.0
    } else {
        (-phi.powi(3) + 3.0 * phi + 2.0) / 4.0
    }
}

pub fn pi_interp_prime(phi: f64) -> f64 {
    if phi.abs() >= 1.0 {
        0.0
    } else {
        0.75 * (1.0 - phi * phi)
    }
}

pub fn pi_interp_second(phi: f64) -> f64 {
    if phi.abs() >= 1.0 {
        0.0
    } else {
        -1.5 * phi
    }
}

/// Phase dependent stiffness `C(phi) = C_-1 + pi(phi) (C_1 - C_-1)` with eigenstrain `xi phi I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticLaw {
    pub c_minus: Matrix3<f64>,
    pub c_plus: Matrix3<f64>,
    pub xi: f64,
    /// When false the stiffness is `C_-1` everywhere.
    pub heterogeneous: bool,
}

/// Stiffness of the `phi = -1` phase used in the experiments.
pub fn default_c_minus() -> Matrix3<f64> {
    Matrix3::new(100.0, 20.0, 0.0, 20.0, 100.0, 0.0, 0.0, 0.0, 200.0)
}

/// Stiffness of the `phi = 1` phase used in the experiments.
pub fn default_c_plus() -> Matrix3<f64> {
    Matrix3::new(1.0, 0.1, 0.0, 0.1, 1.0, 0.0, 0.0, 0.0, 2.0)
}

impl ElasticLaw {
    pub fn new(c_minus: Matrix3<f64>, c_plus: Matrix3<f64>, xi: f64, heterogeneous: bool) -> Result<Self> {
        check_voigt_tensor(&c_minus)?;
        check_voigt_tensor(&c_plus)?;
        if !xi.is_finite() {
            return Err(Error::InvalidMaterial("swelling coefficient must be finite".into()));
        }
        Ok(Self {
            c_minus,
            c_plus,
            xi,
            heterogeneous,
        })
    }

    pub fn homogeneous(c: Matrix3<f64>, xi: f64) -> Result<Self> {
        Self::new(c, c, xi, false)
    }

    pub fn tensor(&self, phi: f64) -> Matrix3<f64> {
        if self.heterogeneous {
            let p = pi_interp(phi);
            self.c_minus * (1.0 - p) + self.c_plus * p
        } else {
            self.c_minus
        }
    }

    pub fn tensor_prime(&self, phi: f64) -> Matrix3<f64> {
        if self.heterogeneous {
            (self.c_plus - self.c_minus) * pi_interp_prime(phi)
        } else {
            Matrix3::zeros()
        }
    }

    pub fn tensor_second(&self, phi: f64) -> Matrix3<f64> {
        if self.heterogeneous {
            (self.c_plus - self.c_minus) * pi_interp_second(phi)
        } else {
            Matrix3::zeros()
        }
    }

    /// Elastic strain `eps - xi phi I`.
    pub fn elastic_strain(&self, phi: f64, strain: &Vector3<f64>) -> Vector3<f64> {
        strain - voigt_identity() * (self.xi * phi)
    }

    pub fn stress(&self, phi: f64, strain: &Vector3<f64>) -> Vector3<f64> {
        self.tensor(phi) * self.elastic_strain(phi, strain)
    }

    /// Elastic energy density `1/2 (eps - xi phi I) : C(phi) (eps - xi phi I)`.
    pub fn energy_density(&self, phi: f64, strain: &Vector3<f64>) -> f64 {
        let e = self.elastic_strain(phi, strain);
        0.5 * e.dot(&(self.tensor(phi) * e))
    }

    /// Smallest and largest eigenvalues of `C(phi)` over `phi` in `[-1, 1]`, sampled.
    pub fn eigen_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..=200 {
            let phi = -1.0 + 2.0 * k as f64 / 200.0;
            let ev = self.tensor(phi).symmetric_eigenvalues();
            lo = lo.min(ev.min());
            hi = hi.max(ev.max());
        }
        (lo, hi)
    }
}

/// Model parameters shared by every scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Mobility.
    pub m: f64,
    /// Surface tension.
    pub gamma: f64,
    /// Interface width.
    pub ell: f64,
    /// Time step.
    pub tau: f64,
    pub t_final: f64,
    pub well: DoubleWell,
    pub law: ElasticLaw,
    /// Constant reaction source `R`.
    pub reaction: f64,
    /// Constant body force `f`.
    pub body_force: [f64; 2],
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("m", self.m), ("gamma", self.gamma), ("ell", self.ell), ("tau", self.tau)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.t_final >= 0.0) {
            return Err(Error::InvalidInput("final time must be nonnegative".into()));
        }
        check_voigt_tensor(&self.law.c_minus)?;
        check_voigt_tensor(&self.law.c_plus)?;
        Ok(())
    }

    /// Number of time steps to reach `t_final`.
    pub fn n_steps(&self) -> usize {
        (self.t_final / self.tau - 1e-9).ceil().max(0.0) as usize
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            m: 1.0,
            gamma: 5.0,
            ell: 0.02,
            tau: 1e-5,
            t_final: 0.01,
            well: DoubleWell::default(),
            law: ElasticLaw {
                c_minus: default_c_minus(),
                c_plus: default_c_plus(),
                xi: 1.0,
                heterogeneous: true,
            },
            reaction: 0.0,
            body_force: [0.0, 0.0],
        }
    }
}
