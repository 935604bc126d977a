use nalgebra::{DMatrix, DVector};

/// Row-compressed sparse matrix; entries within a row are sorted by column.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed, explicit zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut rows = Vec::with_capacity(sorted.len());
        for (r, c, v) in sorted {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            if let (Some(&lr), Some(&lc)) = (rows.last(), col_idx.last()) {
                if lr == r && lc == c {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            col_idx.push(c);
            values.push(v);
        }
        let keep: Vec<bool> = values.iter().map(|&v| v != 0.0).collect();
        let mut ci = Vec::new();
        let mut vs = Vec::new();
        for i in 0..values.len() {
            if keep[i] {
                row_ptr[rows[i] + 1] += 1;
                ci.push(col_idx[i]);
                vs.push(values[i]);
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { nrows, ncols, row_ptr, col_idx: ci, values: vs }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut t = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if m[(r, c)] != 0.0 {
                    t.push((r, c, m[(r, c)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), &t)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
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

    /// Nonzero `(column, value)` entries of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(j, _)| j == c).map_or(0.0, |(_, v)| v)
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.ncols);
        DVector::from_iterator(self.nrows, (0..self.nrows).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()))
    }

    /// `self^T y`.
    pub fn tr_mul_vec(&self, y: &DVector<f64>) -> DVector<f64> {
        assert_eq!(y.len(), self.nrows);
        let mut out = DVector::zeros(self.ncols);
        for r in 0..self.nrows {
            let yr = y[r];
            if yr != 0.0 {
                for (c, v) in self.row(r) {
                    out[c] += v * yr;
                }
            }
        }
        out
    }
}
