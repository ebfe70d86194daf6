//! Type-II Anderson acceleration for fixed-point loops.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

/// Sliding window of the last `depth + 1` fixed-point values `g_j = G(x_j)` and
/// residuals `r_j = G(x_j) - x_j`.
#[derive(Debug, Clone)]
pub struct AndersonWindow {
    depth: usize,
    values: VecDeque<Vec<f64>>,
    residuals: VecDeque<Vec<f64>>,
    /// Regularization relative to the largest eigenvalue of the residual Gram matrix.
    pub epsilon: f64,
    /// Clear the history every this many updates. Off by default.
    pub restart_every: Option<usize>,
    updates: usize,
    last_alpha: Vec<f64>,
}

impl AndersonWindow {
    pub fn new(depth: usize) -> Self {
        Self {
            depth,
            values: VecDeque::with_capacity(depth + 1),
            residuals: VecDeque::with_capacity(depth + 1),
            epsilon: 1e-12,
            restart_every: None,
            updates: 0,
            last_alpha: Vec::new(),
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Mixing coefficients of the most recent update.
    pub fn last_alpha(&self) -> &[f64] {
        &self.last_alpha
    }

    pub fn clear(&mut self) {
        self.values.clear();
        self.residuals.clear();
    }

    /// Pushes `(g, r)` and returns `sum alpha_j g_j` where `alpha` minimizes
    /// `|sum alpha_j r_j|` subject to `sum alpha_j = 1`.
    pub fn update(&mut self, new_iterate: &[f64], new_residual: &[f64]) -> Vec<f64> {
        assert_eq!(new_iterate.len(), new_residual.len(), "iterate and residual lengths differ");
        if self.depth == 0 {
            self.last_alpha = vec![1.0];
            return new_iterate.to_vec();
        }
        if let Some(k) = self.restart_every {
            if k > 0 && self.updates > 0 && self.updates % k == 0 {
                self.clear();
            }
        }
        self.updates += 1;
        if let Some(prev) = self.values.front() {
            assert_eq!(prev.len(), new_iterate.len(), "vector length changed inside the window");
        }
        self.values.push_back(new_iterate.to_vec());
        self.residuals.push_back(new_residual.to_vec());
        while self.values.len() > self.depth + 1 {
            self.values.pop_front();
            self.residuals.pop_front();
        }
        let m = self.values.len();
        let alpha = mixing_coefficients(&self.residuals, self.epsilon).unwrap_or_else(|| {
            let mut a = vec![0.0; m];
            a[m - 1] = 1.0;
            a
        });
        let mut out = vec![0.0; new_iterate.len()];
        for (a, g) in alpha.iter().zip(&self.values) {
            for (o, v) in out.iter_mut().zip(g) {
                *o += a * v;
            }
        }
        self.last_alpha = alpha;
        out
    }
}

fn mixing_coefficients(residuals: &VecDeque<Vec<f64>>, eps_rel: f64) -> Option<Vec<f64>> {
    let m = residuals.len();
    if m == 1 {
        return Some(vec![1.0]);
    }
    let gram: DMatrix<f64> = DMatrix::from_fn(m, m, |i, j| residuals[i].iter().zip(&residuals[j]).map(|(a, b)| a * b).sum());
    let lmax = gram.clone().symmetric_eigenvalues().max();
    if !(lmax > 0.0) || !lmax.is_finite() {
        return None;
    }
    let reg = &gram + DMatrix::identity(m, m) * (eps_rel * lmax);
    let ones = DVector::from_element(m, 1.0);
    let y = match reg.clone().cholesky() {
        Some(c) => c.solve(&ones),
        None => reg.lu().solve(&ones)?,
    };
    let s: f64 = y.sum();
    if !s.is_finite() || s == 0.0 {
        return None;
    }
    let alpha: Vec<f64> = y.iter().map(|v| v / s).collect();
    alpha.iter().all(|a| a.is_finite()).then_some(alpha)
}

/// Free-function form of [`AndersonWindow::update`].
pub fn aa_update(window: &mut AndersonWindow, new_iterate: &[f64], new_residual: &[f64]) -> Vec<f64> {
    window.update(new_iterate, new_residual)
}
