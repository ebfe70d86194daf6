use std::fmt::Write as _;

use crate::error::{Error, Result};

use super::mesh::Mesh;

/// Compressed sparse row matrix with sorted column indices in every row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are summed and
    /// entries that sum to exactly zero are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::InvalidInput(format!(
                    "triplet ({r}, {c}) outside a {nrows} x {ncols} matrix"
                )));
            }
            t.push((r, c, v));
        }
        t.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(t.len());
        let mut values = Vec::with_capacity(t.len());
        let mut k = 0;
        while k < t.len() {
            let (r, c, mut v) = t[k];
            k += 1;
            while k < t.len() && t[k].0 == r && t[k].1 == c {
                v += t[k].2;
                k += 1;
            }
            if v != 0.0 {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Wraps raw CSR arrays after validating them.
    pub fn from_csr(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != nrows + 1 || row_ptr[0] != 0 || col_idx.len() != values.len() {
            return Err(Error::InvalidInput("malformed CSR arrays".into()));
        }
        if *row_ptr.last().unwrap() != col_idx.len() {
            return Err(Error::InvalidInput("row pointer does not match entry count".into()));
        }
        for r in 0..nrows {
            if row_ptr[r] > row_ptr[r + 1] {
                return Err(Error::InvalidInput("row pointer is not monotone".into()));
            }
            let cols = &col_idx[row_ptr[r]..row_ptr[r + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) || cols.iter().any(|&c| c >= ncols) {
                return Err(Error::InvalidInput(format!("row {r} has unsorted or invalid columns")));
            }
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let s = self.row_ptr[r];
        let e = self.row_ptr[r + 1];
        (&self.col_idx[s..e], &self.values[s..e])
    }

    /// Entry `(r, c)`, zero when not stored.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for r in 0..self.nrows {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let ay = self.matvec(y);
        x.iter().zip(&ay).map(|(a, b)| a * b).sum()
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for c in 0..self.ncols {
            counts[c + 1] += counts[c];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                let dst = next[c];
                next[c] += 1;
                col_idx[dst] = r;
                values[dst] = self.values[k];
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry.
    pub fn symmetry_defect(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst / scale
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.symmetry_defect() <= rel_tol
    }

    /// Removes stored entries that are exactly zero.
    pub fn prune_zeros(&mut self) {
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut w = 0;
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.values[k] != 0.0 {
                    self.col_idx[w] = self.col_idx[k];
                    self.values[w] = self.values[k];
                    w += 1;
                }
            }
            row_ptr[r + 1] = w;
        }
        self.col_idx.truncate(w);
        self.values.truncate(w);
        self.row_ptr = row_ptr;
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    /// Dense copy, intended for small matrices in tests and diagnostics.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                d[r][c] = v;
            }
        }
        d
    }

    /// Plain text coordinate listing: a header line `nrows ncols nnz`, then one
    /// `row col value` line per stored entry (zero based).
    pub fn to_coo_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {} {}", self.nrows, self.ncols, self.nnz());
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let _ = writeln!(s, "{r} {c} {v:.17e}");
            }
        }
        s
    }
}

/// Fixed sparsity pattern for a system with `n_fields` nodal fields on one mesh.
///
/// Field `f` occupies rows `f N .. (f + 1) N`. A field pair is present only when
/// `coupling[f][g]` is set, so absent blocks are never stored.
#[derive(Debug, Clone)]
pub struct BlockPattern {
    n_nodes: usize,
    n_fields: usize,
    slot: Vec<Option<usize>>,
    degree: Vec<usize>,
    elem_rank: Vec<[[usize; 4]; 4]>,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl BlockPattern {
    pub fn new(mesh: &Mesh, n_fields: usize, coupling: &[Vec<bool>]) -> Self {
        assert_eq!(coupling.len(), n_fields);
        let n_nodes = mesh.n_nodes();
        let nb = mesh.node_neighbors();
        let degree: Vec<usize> = nb.iter().map(|v| v.len()).collect();
        let mut slot = vec![None; n_fields * n_fields];
        for f in 0..n_fields {
            let mut s = 0;
            for g in 0..n_fields {
                if coupling[f][g] {
                    slot[f * n_fields + g] = Some(s);
                    s += 1;
                }
            }
        }
        let mut row_ptr = Vec::with_capacity(n_fields * n_nodes + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for f in 0..n_fields {
            for a in 0..n_nodes {
                for g in 0..n_fields {
                    if coupling[f][g] {
                        col_idx.extend(nb[a].iter().map(|&b| g * n_nodes + b));
                    }
                }
                row_ptr.push(col_idx.len());
            }
        }
        let elem_rank = mesh
            .elements()
            .iter()
            .map(|nodes| {
                let mut r = [[0usize; 4]; 4];
                for a in 0..4 {
                    for b in 0..4 {
                        r[a][b] = nb[nodes[a]].binary_search(&nodes[b]).expect("element nodes are neighbours");
                    }
                }
                r
            })
            .collect();
        Self {
            n_nodes,
            n_fields,
            slot,
            degree,
            elem_rank,
            row_ptr,
            col_idx,
        }
    }

    /// All field pairs coupled.
    pub fn full(mesh: &Mesh, n_fields: usize) -> Self {
        Self::new(mesh, n_fields, &vec![vec![true; n_fields]; n_fields])
    }

    pub fn n_dofs(&self) -> usize {
        self.n_nodes * self.n_fields
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Storage position of the entry coupling local node `a` of element `e` in field
    /// `f` with local node `b` in field `g`.
    #[inline]
    pub fn position(&self, e: usize, nodes: &[usize; 4], f: usize, a: usize, g: usize, b: usize) -> usize {
        let s = self.slot[f * self.n_fields + g].expect("field pair is part of the pattern");
        let na = nodes[a];
        self.row_ptr[f * self.n_nodes + na] + s * self.degree[na] + self.elem_rank[e][a][b]
    }

    pub fn zero_values(&self) -> Vec<f64> {
        vec![0.0; self.nnz()]
    }

    /// Matrix on this pattern with the given values (entries kept even when zero).
    pub fn matrix(&self, values: Vec<f64>) -> SparseMatrix {
        assert_eq!(values.len(), self.nnz());
        SparseMatrix {
            nrows: self.n_dofs(),
            ncols: self.n_dofs(),
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values,
        }
    }
}
