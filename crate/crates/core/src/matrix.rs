//! Minimal row-major matrix used for feature tables and network activations.

use crate::error::{Error, Result};

/// Dense row-major `f64` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            data: vec![0.0; rows * cols],
            rows,
            cols,
        }
    }

    pub fn from_vec(data: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "expected {rows}x{cols} = {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { data, rows, cols })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::Shape(format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { data, rows: n, cols })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// New matrix containing the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            data,
            rows: indices.len(),
            cols: self.cols,
        }
    }

    /// New matrix keeping only the first `k` columns of every row.
    pub fn left_cols(&self, k: usize) -> Result<Matrix> {
        if k == 0 || k > self.cols {
            return Err(Error::Shape(format!(
                "cannot take {k} leading columns of a {}-column matrix",
                self.cols
            )));
        }
        let mut data = Vec::with_capacity(self.rows * k);
        for r in 0..self.rows {
            data.extend_from_slice(&self.row(r)[..k]);
        }
        Ok(Matrix { data, rows: self.rows, cols: k })
    }

    /// Column mean (arithmetic).
    pub fn col_mean(&self, c: usize) -> f64 {
        let mut s = 0.0;
        for r in 0..self.rows {
            s += self.row(r)[c];
        }
        s / self.rows as f64
    }

    /// Population standard deviation of a column.
    pub fn col_std(&self, c: usize) -> f64 {
        let mean = self.col_mean(c);
        let mut ss = 0.0;
        for r in 0..self.rows {
            let d = self.row(r)[c] - mean;
            ss += d * d;
        }
        (ss / self.rows as f64).sqrt()
    }
}
