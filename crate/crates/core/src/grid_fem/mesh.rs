use crate::error::{Error, Result};

/// Structured quadrilateral mesh of the unit square with `n` cells per side.
///
/// Node `(i, j)` sits at `(i h, j h)` and has index `i + j (n + 1)`.
/// Element nodes are listed counterclockwise starting at the lower-left corner.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    n: usize,
    h: f64,
    coords: Vec<[f64; 2]>,
    elements: Vec<[usize; 4]>,
    boundary: Vec<usize>,
    on_boundary: Vec<bool>,
}

pub fn build_mesh(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidMesh("need at least one cell per side".into()));
    }
    let np = n + 1;
    let h = 1.0 / n as f64;
    let mut coords = Vec::with_capacity(np * np);
    let mut on_boundary = Vec::with_capacity(np * np);
    let mut boundary = Vec::new();
    for j in 0..np {
        for i in 0..np {
            coords.push([i as f64 * h, j as f64 * h]);
            let b = i == 0 || j == 0 || i == n || j == n;
            if b {
                boundary.push(i + j * np);
            }
            on_boundary.push(b);
        }
    }
    let mut elements = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let ll = i + j * np;
            elements.push([ll, ll + 1, ll + 1 + np, ll + np]);
        }
    }
    Ok(Mesh {
        n,
        h,
        coords,
        elements,
        boundary,
        on_boundary,
    })
}

impl Mesh {
    pub fn n_per_side(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        i + j * (self.n + 1)
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn node(&self, k: usize) -> [f64; 2] {
        self.coords[k]
    }

    pub fn elements(&self) -> &[[usize; 4]] {
        &self.elements
    }

    pub fn element(&self, e: usize) -> [usize; 4] {
        self.elements[e]
    }

    /// Lower-left corner of element `e`.
    pub fn element_origin(&self, e: usize) -> [f64; 2] {
        self.coords[self.elements[e][0]]
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_boundary(&self, k: usize) -> bool {
        self.on_boundary[k]
    }

    /// Sorted list of nodes sharing an element with each node (the node itself included).
    pub fn node_neighbors(&self) -> Vec<Vec<usize>> {
        let np = self.n + 1;
        let mut out = Vec::with_capacity(self.n_nodes());
        for j in 0..np {
            for i in 0..np {
                let mut nb = Vec::with_capacity(9);
                for jj in j.saturating_sub(1)..=(j + 1).min(self.n) {
                    for ii in i.saturating_sub(1)..=(i + 1).min(self.n) {
                        nb.push(ii + jj * np);
                    }
                }
                out.push(nb);
            }
        }
        out
    }
}
