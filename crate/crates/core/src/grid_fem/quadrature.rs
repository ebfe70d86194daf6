use crate::error::{Error, Result};

/// Tensor Gauss rule on the reference square `[0, 1]^2`. Weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    points: Vec<[f64; 2]>,
    weights: Vec<f64>,
}

fn gauss_1d(k: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    // nodes and weights on [-1, 1]
    let (x, w): (Vec<f64>, Vec<f64>) = match k {
        1 => (vec![0.0], vec![2.0]),
        2 => {
            let a = 1.0 / 3f64.sqrt();
            (vec![-a, a], vec![1.0, 1.0])
        }
        3 => {
            let a = (3.0f64 / 5.0).sqrt();
            (vec![-a, 0.0, a], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        4 => {
            let s = (6.0f64 / 5.0).sqrt() * 2.0 / 7.0;
            let a = (3.0 / 7.0 - s).sqrt();
            let b = (3.0 / 7.0 + s).sqrt();
            let wa = (18.0 + 30f64.sqrt()) / 36.0;
            let wb = (18.0 - 30f64.sqrt()) / 36.0;
            (vec![-b, -a, a, b], vec![wb, wa, wa, wb])
        }
        _ => {
            return Err(Error::InvalidInput(format!(
                "Gauss rule with {k} points per direction is not tabulated"
            )))
        }
    };
    Ok((
        x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
        w.iter().map(|t| 0.5 * t).collect(),
    ))
}

impl QuadratureRule {
    /// `k` x `k` Gauss-Legendre rule, exact for polynomials of degree `2k - 1` in each variable.
    pub fn gauss(k: usize) -> Result<Self> {
        let (x, w) = gauss_1d(k)?;
        let mut points = Vec::with_capacity(k * k);
        let mut weights = Vec::with_capacity(k * k);
        for j in 0..k {
            for i in 0..k {
                points.push([x[i], x[j]]);
                weights.push(w[i] * w[j]);
            }
        }
        Ok(Self { points, weights })
    }

    /// The 2 x 2 rule used throughout the solver.
    pub fn default_rule() -> Self {
        Self::gauss(2).expect("2-point rule is tabulated")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Bilinear shape functions on the reference square, counterclockwise from `(0, 0)`.
pub fn q1_shape(p: [f64; 2]) -> [f64; 4] {
    let [x, y] = p;
    [(1.0 - x) * (1.0 - y), x * (1.0 - y), x * y, (1.0 - x) * y]
}

/// Reference gradients of the bilinear shape functions.
pub fn q1_shape_grad(p: [f64; 2]) -> [[f64; 2]; 4] {
    let [x, y] = p;
    [
        [-(1.0 - y), -(1.0 - x)],
        [1.0 - y, -x],
        [y, x],
        [-y, 1.0 - x],
    ]
}

/// Shape values, physical gradients and physical weights at each quadrature point
/// of an axis-aligned square element of side `h`.
#[derive(Debug, Clone)]
pub struct Q1Tabulation {
    pub h: f64,
    pub ref_points: Vec<[f64; 2]>,
    pub values: Vec<[f64; 4]>,
    pub grads: Vec<[[f64; 2]; 4]>,
    pub weights: Vec<f64>,
}

impl Q1Tabulation {
    pub fn new(rule: &QuadratureRule, h: f64) -> Self {
        let inv_h = 1.0 / h;
        let values = rule.points().iter().map(|&p| q1_shape(p)).collect();
        let grads = rule
            .points()
            .iter()
            .map(|&p| {
                let mut g = q1_shape_grad(p);
                for ga in g.iter_mut() {
                    ga[0] *= inv_h;
                    ga[1] *= inv_h;
                }
                g
            })
            .collect();
        let weights = rule.weights().iter().map(|w| w * h * h).collect();
        Self {
            h,
            ref_points: rule.points().to_vec(),
            values,
            grads,
            weights,
        }
    }

    pub fn n_points(&self) -> usize {
        self.weights.len()
    }

    /// Physical location of quadrature point `q` in an element with lower-left corner `origin`.
    pub fn physical_point(&self, origin: [f64; 2], q: usize) -> [f64; 2] {
        let p = self.ref_points[q];
        [origin[0] + self.h * p[0], origin[1] + self.h * p[1]]
    }
}
