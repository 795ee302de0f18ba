//! Symmetric 1×1 and 2×2 matrices.
//!
//! Only the upper triangle is stored, so symmetry holds by construction.
//! For `n = 1` the fields `a12` and `a22` are always zero.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    n: usize,
    a11: f64,
    a12: f64,
    a22: f64,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n == 1 || n == 2, "only n = 1, 2 are supported");
        SymMatrix { n, a11: 0.0, a12: 0.0, a22: 0.0 }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, 1.0)
    }

    pub fn scalar(n: usize, s: f64) -> Self {
        let mut m = Self::zeros(n);
        m.a11 = s;
        if n == 2 {
            m.a22 = s;
        }
        m
    }

    pub fn one(a: f64) -> Self {
        SymMatrix { n: 1, a11: a, a12: 0.0, a22: 0.0 }
    }

    pub fn two(a11: f64, a12: f64, a22: f64) -> Self {
        SymMatrix { n: 2, a11, a12, a22 }
    }

    pub fn diag(d: &[f64]) -> Self {
        match d {
            [a] => Self::one(*a),
            [a, b] => Self::two(*a, 0.0, *b),
            _ => panic!("diag expects 1 or 2 entries"),
        }
    }

    /// Builds a matrix from `n*n` row-major entries, rejecting asymmetric input.
    pub fn from_row_major(n: usize, entries: &[f64]) -> Result<Self> {
        if !(n == 1 || n == 2) || entries.len() != n * n {
            return Err(Error::InvalidOperator(format!(
                "matrix needs {} row-major entries for n={n}, got {}",
                n * n,
                entries.len()
            )));
        }
        if n == 1 {
            return Ok(Self::one(entries[0]));
        }
        let (a12, a21) = (entries[1], entries[2]);
        if (a12 - a21).abs() > 1e-14 * (1.0 + a12.abs()) {
            return Err(Error::InvalidOperator(format!("matrix {entries:?} is not symmetric")));
        }
        Ok(Self::two(entries[0], a12, entries[3]))
    }

    /// `e ⊗ e` for a vector of length `n`.
    pub fn outer(e: &[f64]) -> Self {
        match e {
            [a] => Self::one(a * a),
            [a, b] => Self::two(a * a, a * b, b * b),
            _ => panic!("outer expects 1 or 2 entries"),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i, j) {
            (0, 0) => self.a11,
            (0, 1) | (1, 0) => self.a12,
            (1, 1) => self.a22,
            _ => panic!("index ({i},{j}) out of range"),
        }
    }

    pub fn a11(&self) -> f64 {
        self.a11
    }
    pub fn a12(&self) -> f64 {
        self.a12
    }
    pub fn a22(&self) -> f64 {
        self.a22
    }

    /// Row-major entries, `n*n` of them.
    pub fn row_major(&self) -> Vec<f64> {
        if self.n == 1 {
            vec![self.a11]
        } else {
            vec![self.a11, self.a12, self.a12, self.a22]
        }
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    /// `trace(self · other)`.
    pub fn trace_mul(&self, other: &SymMatrix) -> f64 {
        self.a11 * other.a11 + 2.0 * self.a12 * other.a12 + self.a22 * other.a22
    }

    pub fn frobenius(&self) -> f64 {
        self.trace_mul(self).sqrt()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.a11.abs().max(self.a12.abs()).max(self.a22.abs())
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigen().0
    }

    /// Eigenvalues (ascending) and matching unit eigenvectors.
    pub fn eigen(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        if self.n == 1 {
            return (vec![self.a11], vec![vec![1.0]]);
        }
        let half_tr = 0.5 * (self.a11 + self.a22);
        let half_diff = 0.5 * (self.a11 - self.a22);
        let rad = half_diff.hypot(self.a12);
        let (lo, hi) = (half_tr - rad, half_tr + rad);
        if rad == 0.0 {
            return (vec![lo, hi], vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        }
        // rotation angle of the eigenbasis
        let theta = 0.5 * self.a12.atan2(half_diff);
        let (s, c) = theta.sin_cos();
        (vec![lo, hi], vec![vec![-s, c], vec![c, s]])
    }

    /// `Q diag(values) Qᵀ` for orthonormal columns `vectors`.
    pub fn from_eigen(values: &[f64], vectors: &[Vec<f64>]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n);
        for (v, q) in values.iter().zip(vectors) {
            m = m + Self::outer(q) * *v;
        }
        m
    }

    fn check_dim(&self, other: &SymMatrix) {
        assert_eq!(self.n, other.n, "matrix dimension mismatch");
    }
}

impl Add for SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: SymMatrix) -> SymMatrix {
        self.check_dim(&rhs);
        SymMatrix { n: self.n, a11: self.a11 + rhs.a11, a12: self.a12 + rhs.a12, a22: self.a22 + rhs.a22 }
    }
}

impl Sub for SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: SymMatrix) -> SymMatrix {
        self + (-rhs)
    }
}

impl Neg for SymMatrix {
    type Output = SymMatrix;
    fn neg(self) -> SymMatrix {
        self * -1.0
    }
}

impl Mul<f64> for SymMatrix {
    type Output = SymMatrix;
    fn mul(self, s: f64) -> SymMatrix {
        SymMatrix { n: self.n, a11: self.a11 * s, a12: self.a12 * s, a22: self.a22 * s }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_reconstructs() {
        let m = SymMatrix::two(0.3, -1.2, 2.5);
        let (vals, vecs) = m.eigen();
        assert!(vals[0] <= vals[1]);
        let back = SymMatrix::from_eigen(&vals, &vecs);
        assert!((back - m).max_abs_entry() < 1e-14);
    }

    #[test]
    fn rejects_asymmetric() {
        assert!(SymMatrix::from_row_major(2, &[1.0, 2.0, 3.0, 4.0]).is_err());
        assert!(SymMatrix::from_row_major(2, &[1.0, 2.0, 2.0, 4.0]).is_ok());
        assert!(SymMatrix::from_row_major(1, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn trace_mul_matches_full_product() {
        let a = SymMatrix::two(1.0, 0.5, -2.0);
        let b = SymMatrix::two(3.0, -1.0, 4.0);
        let (ra, rb) = (a.row_major(), b.row_major());
        let full: f64 = (0..2).map(|i| (0..2).map(|k| ra[i * 2 + k] * rb[k * 2 + i]).sum::<f64>()).sum();
        assert!((a.trace_mul(&b) - full).abs() < 1e-15);
    }
}
