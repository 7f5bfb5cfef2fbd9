//! Compressed sparse row storage and the handful of dense vector kernels the
//! solver needs. All reductions run in a fixed sequential order so that
//! iteration traces are bitwise reproducible.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: vec![1.0; n],
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let triplets: Vec<_> = diag
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, &v)| (i, i, v))
            .collect();
        Self::from_triplets(diag.len(), diag.len(), &triplets)
            .expect("diagonal indices are in range")
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are summed
    /// and explicit zeros produced by summation are kept so the sparsity
    /// pattern reflects the input.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::InvalidProblem(format!(
                    "entry ({i}, {j}) outside {nrows}x{ncols} matrix"
                )));
            }
            sorted.push((i, j, v));
        }
        sorted.sort_by_key(|&(i, j, _)| (i, j));

        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut data: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *data.last_mut().unwrap() += v;
                continue;
            }
            indices.push(j);
            data.push(v);
            indptr[i + 1] += 1;
            last = Some((i, j));
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        })
    }

    /// Row-major dense input; zeros are dropped.
    pub fn from_dense(nrows: usize, ncols: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), nrows * ncols);
        let mut triplets = Vec::new();
        for i in 0..nrows {
            for j in 0..ncols {
                let v = values[i * ncols + j];
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(nrows, ncols, &triplets).expect("indices in range")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.indptr[i]..self.indptr[i + 1];
        self.indices[range.clone()]
            .iter()
            .copied()
            .zip(self.data[range].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    /// `out = A x`
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(out.len(), self.nrows);
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.data[k] * x[self.indices[k]];
            }
            *o = acc;
        }
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0usize; self.nnz()];
        let mut data = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                let j = self.indices[k];
                let dst = next[j];
                indices[dst] = i;
                data[dst] = self.data[k];
                next[j] += 1;
            }
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr,
            indices,
            data,
        }
    }

    /// `A <- diag(row) * A * diag(col)`
    pub fn scale(&mut self, row: &[f64], col: &[f64]) {
        debug_assert_eq!(row.len(), self.nrows);
        debug_assert_eq!(col.len(), self.ncols);
        for (i, r) in row.iter().enumerate() {
            for k in self.indptr[i]..self.indptr[i + 1] {
                self.data[k] *= r * col[self.indices[k]];
            }
        }
    }

    pub fn row_inf_norms(&self) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| self.row(i).fold(0.0f64, |m, (_, v)| m.max(v.abs())))
            .collect()
    }

    pub fn col_inf_norms(&self) -> Vec<f64> {
        let mut out = vec![0.0f64; self.ncols];
        for (_, j, v) in self.triplets() {
            out[j] = out[j].max(v.abs());
        }
        out
    }

    /// Row sums of `|a_ij|^p`.
    pub fn row_abs_pow_sums(&self, p: f64) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| self.row(i).map(|(_, v)| abs_pow(v, p)).sum())
            .collect()
    }

    /// Column sums of `|a_ij|^p`.
    pub fn col_abs_pow_sums(&self, p: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols];
        for (_, j, v) in self.triplets() {
            out[j] += abs_pow(v, p);
        }
        out
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        // both operands keep column indices sorted per row, so rows can be
        // merged in a single pass
        let t = self.transpose();
        let close = |a: f64, b: f64| (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()));
        (0..self.nrows).all(|i| {
            let (mut p, mut q) = (self.row(i).peekable(), t.row(i).peekable());
            loop {
                match (p.peek().copied(), q.peek().copied()) {
                    (None, None) => return true,
                    (Some((ja, va)), Some((jb, vb))) if ja == jb => {
                        if !close(va, vb) {
                            return false;
                        }
                        p.next();
                        q.next();
                    }
                    (Some((ja, va)), Some((jb, _))) if ja < jb => {
                        if !close(va, 0.0) {
                            return false;
                        }
                        p.next();
                    }
                    (Some((_, va)), None) => {
                        if !close(va, 0.0) {
                            return false;
                        }
                        p.next();
                    }
                    (_, Some((_, vb))) => {
                        if !close(0.0, vb) {
                            return false;
                        }
                        q.next();
                    }
                }
            }
        })
    }

    /// Row-major dense copy, mainly for tests and small oracles.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows * self.ncols];
        for (i, j, v) in self.triplets() {
            out[i * self.ncols + j] += v;
        }
        out
    }
}

// |0|^0 is taken as 0 so structural zeros never contribute.
fn abs_pow(v: f64, p: f64) -> f64 {
    let a = v.abs();
    if a == 0.0 {
        0.0
    } else if p == 1.0 {
        a
    } else if p == 2.0 {
        a * a
    } else {
        a.powf(p)
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// `y += a * x`
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}
