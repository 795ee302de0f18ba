use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::matrix::SymMatrix;
use crate::ops::Operator;

/// `P(x, t) = a0 + b0·x + ½⟨M0 x, x⟩ + c0·t`.
///
/// `M0` is stored as the Hessian of `P`, so `D̃²P = (M0, c0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParabolicPolynomial {
    pub a0: f64,
    pub b0: [f64; 2],
    pub m0: SymMatrix,
    pub c0: f64,
}

impl ParabolicPolynomial {
    pub fn zero(n: usize) -> Self {
        ParabolicPolynomial { a0: 0.0, b0: [0.0; 2], m0: SymMatrix::zeros(n), c0: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.m0.dim()
    }

    pub fn eval(&self, x: [f64; 2], t: f64) -> f64 {
        let m = &self.m0;
        let quad = if m.dim() == 1 {
            m.a11() * x[0] * x[0]
        } else {
            m.a11() * x[0] * x[0] + 2.0 * m.a12() * x[0] * x[1] + m.a22() * x[1] * x[1]
        };
        let lin = self.b0[0] * x[0] + if m.dim() == 2 { self.b0[1] * x[1] } else { 0.0 };
        self.a0 + lin + 0.5 * quad + self.c0 * t
    }

    /// `H(P) = F(M0) − c0`.
    pub fn residual(&self, op: &Operator) -> Result<f64> {
        op.eval_h(&self.m0, self.c0)
    }

    /// Euclidean norm of `(M0, c0)` in `ℝ^{n²+1}`.
    pub fn tilde_norm(&self) -> f64 {
        (self.m0.trace_mul(&self.m0) + self.c0 * self.c0).sqrt()
    }

    /// `√(|D²u − M0|² + (∂ₜu − c0)²)`.
    pub fn tilde_distance(&self, hess: &SymMatrix, ut: f64) -> f64 {
        let d = *hess - self.m0;
        (d.trace_mul(&d) + (ut - self.c0).powi(2)).sqrt()
    }

    /// `y ↦ P(r y, r² τ)/r²`, which keeps `M0` and `c0`.
    pub fn rescaled(&self, r: f64) -> Self {
        ParabolicPolynomial { a0: self.a0 / (r * r), b0: [self.b0[0] / r, self.b0[1] / r], m0: self.m0, c0: self.c0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_rescale() {
        let p = ParabolicPolynomial { a0: 1.0, b0: [2.0, -1.0], m0: SymMatrix::two(2.0, 0.5, -1.0), c0: 3.0 };
        let x = [0.3, -0.2];
        let expected = 1.0 + 0.6 + 0.2 + 0.5 * (2.0 * 0.09 + 2.0 * 0.5 * 0.3 * -0.2 - 0.04) + 3.0 * 0.1;
        assert!((p.eval(x, 0.1) - expected).abs() < 1e-14);
        let r = 0.25;
        let q = p.rescaled(r);
        let y = [0.8, 0.4];
        assert!((q.eval(y, -0.5) - p.eval([r * y[0], r * y[1]], r * r * -0.5) / (r * r)).abs() < 1e-12);
        assert!((p.tilde_norm() - (4.0f64 + 0.5 + 1.0 + 9.0).sqrt()).abs() < 1e-14);
    }
}
