//! Dense matrices and the two preference matrices of a market.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows; all rows must have equal length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::InvalidInput(format!(
                    "ragged matrix: row {i} has {} entries, row 0 has {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on a zero chunk size
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter_rows().map(<[f64]>::to_vec).collect()
    }

    /// Largest absolute entrywise difference; `None` on shape mismatch.
    pub fn max_abs_diff(&self, other: &Matrix) -> Option<f64> {
        if self.shape() != other.shape() {
            return None;
        }
        Some(self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// The platform's estimated preferences on both sides of the market.
///
/// `p_cj[(c, j)]` is candidate `c`'s score for employer `j`; `p_jc[(j, c)]` is
/// employer `j`'s score for candidate `c`. Scores are probabilities in
/// `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceMatrices {
    p_cj: Matrix,
    p_jc: Matrix,
}

impl PreferenceMatrices {
    pub fn new(p_cj: Matrix, p_jc: Matrix) -> Result<Self> {
        let (nc, nj) = p_cj.shape();
        if nc == 0 || nj == 0 {
            return Err(Error::InvalidInput("preference matrices must be non-empty".into()));
        }
        if p_jc.shape() != (nj, nc) {
            return Err(Error::Shape { expected: (nj, nc), found: p_jc.shape() });
        }
        for (name, m) in [("p_cj", &p_cj), ("p_jc", &p_jc)] {
            if let Some(bad) = m.as_slice().iter().find(|x| !(0.0..=1.0).contains(*x)) {
                return Err(Error::InvalidInput(format!("{name} entry {bad} outside [0, 1]")));
            }
        }
        Ok(Self { p_cj, p_jc })
    }

    pub fn from_rows<R: AsRef<[f64]>, S: AsRef<[f64]>>(p_cj: &[R], p_jc: &[S]) -> Result<Self> {
        Self::new(Matrix::from_rows(p_cj)?, Matrix::from_rows(p_jc)?)
    }

    #[inline]
    pub fn num_candidates(&self) -> usize {
        self.p_cj.rows()
    }

    #[inline]
    pub fn num_jobs(&self) -> usize {
        self.p_cj.cols()
    }

    /// Candidate-side scores, `|C| x |J|`.
    #[inline]
    pub fn p_cj(&self) -> &Matrix {
        &self.p_cj
    }

    /// Employer-side scores, `|J| x |C|`.
    #[inline]
    pub fn p_jc(&self) -> &Matrix {
        &self.p_jc
    }

    /// The same market with the two sides' score roles exchanged: candidate
    /// scores become `p_jc` transposed and vice versa.
    pub fn swapped_scores(&self) -> Self {
        Self { p_cj: self.p_jc.transpose(), p_jc: self.p_cj.transpose() }
    }
}
