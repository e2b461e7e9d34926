//! Dense row-major f64 tensors sized for the extractive model: a few
//! hundred rows at most, so plain loops beat any BLAS detour and keep the
//! arithmetic bit-reproducible.

use serde::{Deserialize, Serialize};

use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Uniform init in [-scale, scale), consuming the RNG in row-major
    /// order so layouts are reproducible.
    pub fn uniform(rng: &mut SplitMix64, rows: usize, cols: usize, scale: f64) -> Self {
        let data = (0..rows * cols).map(|_| rng.next_symmetric(scale)).collect();
        Self { rows, cols, data }
    }

    pub fn scalar(value: f64) -> Self {
        Self {
            rows: 1,
            cols: 1,
            data: vec![value],
        }
    }

    pub fn item(&self) -> f64 {
        debug_assert_eq!(self.data.len(), 1);
        self.data[0]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// As a flat vector; only meaningful for single-column tensors.
    pub fn as_vec(&self) -> &[f64] {
        debug_assert_eq!(self.cols, 1);
        &self.data
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// y = A^T x
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut y = vec![0.0; self.cols];
        for (row, xr) in self.data.chunks_exact(self.cols).zip(x) {
            for (yc, a) in y.iter_mut().zip(row) {
                *yc += a * xr;
            }
        }
        y
    }

    /// A += scale * a b^T
    pub fn add_outer(&mut self, scale: f64, a: &[f64], b: &[f64]) {
        debug_assert_eq!(a.len(), self.rows);
        debug_assert_eq!(b.len(), self.cols);
        for (row, av) in self.data.chunks_exact_mut(self.cols).zip(a) {
            let coeff = scale * av;
            for (cell, bv) in row.iter_mut().zip(b) {
                *cell += coeff * bv;
            }
        }
    }

    /// A += scale * other (same shape)
    pub fn add_scaled(&mut self, scale: f64, other: &Tensor) {
        debug_assert_eq!(self.rows, other.rows);
        debug_assert_eq!(self.cols, other.cols);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }

    /// Column vector += scale * v
    pub fn add_scaled_vec(&mut self, scale: f64, v: &[f64]) {
        debug_assert_eq!(self.cols, 1);
        debug_assert_eq!(self.rows, v.len());
        for (a, b) in self.data.iter_mut().zip(v) {
            *a += scale * b;
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn add_scaled_in_place(target: &mut [f64], scale: f64, v: &[f64]) {
    debug_assert_eq!(target.len(), v.len());
    for (t, x) in target.iter_mut().zip(v) {
        *t += scale * x;
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
