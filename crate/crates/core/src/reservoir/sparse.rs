use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Compressed sparse row storage with a fixed link pattern.
///
/// Entries are addressed as `(row, col)` = link from `col` into `row`. A
/// stored entry is a link even when its value is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SparseMatrix<T> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> SparseMatrix<T> {
    pub fn empty(n: usize) -> Self {
        Self { n, row_ptr: vec![0; n + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    /// Builds from per-row `(col, value)` lists. Columns within a row must be
    /// strictly increasing.
    pub fn from_rows(n: usize, rows: Vec<Vec<(usize, T)>>) -> Self {
        assert_eq!(rows.len(), n);
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in rows {
            let mut last = None;
            for (j, v) in row {
                assert!(j < n && last.map_or(true, |l| j > l), "columns must increase");
                last = Some(j);
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self { n, row_ptr, col_idx, values }
    }

    /// Checks the CSR invariants; used on deserialized data.
    pub fn check_structure(&self) -> Result<(), String> {
        if self.row_ptr.len() != self.n + 1 || self.row_ptr[0] != 0 {
            return Err("row pointer length".into());
        }
        if self.row_ptr.windows(2).any(|w| w[1] < w[0]) {
            return Err("row pointers decrease".into());
        }
        let nnz = self.row_ptr[self.n];
        if self.col_idx.len() != nnz || self.values.len() != nnz {
            return Err("entry count does not match row pointers".into());
        }
        for i in 0..self.n {
            let cols = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
            if cols.iter().any(|&j| j >= self.n) || cols.windows(2).any(|w| w[1] <= w[0]) {
                return Err(format!("bad column indices in row {i}"));
            }
        }
        Ok(())
    }

    /// Every nonzero entry of `dense` becomes a link.
    pub fn from_dense(dense: &Array2<T>) -> Self {
        let n = dense.nrows();
        assert_eq!(n, dense.ncols(), "connectivity must be square");
        let rows = dense
            .outer_iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != T::zero())
                    .map(|(j, &v)| (j, v))
                    .collect()
            })
            .collect();
        Self::from_rows(n, rows)
    }

    pub fn to_dense(&self) -> Array2<T> {
        let mut out = Array2::zeros((self.n, self.n));
        for (i, j, v) in self.iter() {
            out[(i, j)] = v;
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn row_values_mut(&mut self, i: usize) -> &mut [T] {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        &mut self.values[span]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|k| vals[k]).unwrap_or_else(|_| T::zero())
    }

    pub fn has_link(&self, i: usize, j: usize) -> bool {
        self.row(i).0.binary_search(&j).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn row_sum(&self, i: usize) -> T {
        self.row(i).1.iter().copied().sum()
    }

    /// `Σ_j A[i,j] x[j]`.
    #[inline]
    pub fn row_dot(&self, i: usize, x: &[T]) -> T {
        let (cols, vals) = self.row(i);
        let mut acc = T::zero();
        for (&j, &w) in cols.iter().zip(vals) {
            acc += w * x[j];
        }
        acc
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}
