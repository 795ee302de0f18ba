//! Uniformly elliptic operators `F` and the heat-type operator `H(u) = F(D²u) − ∂ₜu`.
//!
//! Four kinds are supported: a constant-coefficient linear operator
//! `trace(A·M)`, a Bellman family `max_j trace(A_j·M)`, and the two Pucci
//! extremal operators with ellipticity constants `λ₀ ≤ λ₁`:
//!
//! ```text
//! P⁺(M) = λ₁ Σ eᵢ⁺ − λ₀ Σ eᵢ⁻        P⁻(M) = λ₀ Σ eᵢ⁺ − λ₁ Σ eᵢ⁻
//! ```
//!
//! where `eᵢ` are the eigenvalues of `M`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;

/// Slack for algebraic identities evaluated in floating point.
pub const ALGEBRAIC_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum OperatorKind {
    Linear(SymMatrix),
    Bellman(Vec<SymMatrix>),
    PucciPlus,
    PucciMinus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Operator {
    kind: OperatorKind,
    n: usize,
    lambda0: f64,
    lambda1: f64,
}

pub fn pucci_plus(lambda0: f64, lambda1: f64, m: &SymMatrix) -> f64 {
    m.eigenvalues().iter().map(|&e| if e > 0.0 { lambda1 * e } else { lambda0 * e }).sum()
}

pub fn pucci_minus(lambda0: f64, lambda1: f64, m: &SymMatrix) -> f64 {
    m.eigenvalues().iter().map(|&e| if e > 0.0 { lambda0 * e } else { lambda1 * e }).sum()
}

impl Operator {
    /// Checks structural validity: positive ordered constants, matching
    /// dimensions and a non-empty family. Eigenvalue bounds of the supplied
    /// matrices are left to [`Operator::validate`].
    pub fn new(kind: OperatorKind, n: usize, lambda0: f64, lambda1: f64) -> Result<Self> {
        if !(n == 1 || n == 2) {
            return Err(Error::InvalidOperator(format!("n must be 1 or 2, got {n}")));
        }
        if !(lambda0.is_finite() && lambda1.is_finite() && lambda0 > 0.0) {
            return Err(Error::InvalidOperator(format!("lambda0={lambda0} must be positive and finite")));
        }
        if lambda0 > lambda1 {
            return Err(Error::InvalidOperator(format!("lambda0={lambda0} exceeds lambda1={lambda1}")));
        }
        match &kind {
            OperatorKind::Linear(a) if a.dim() != n => {
                return Err(Error::DimensionMismatch { expected: n, got: a.dim() })
            }
            OperatorKind::Bellman(family) => {
                if family.is_empty() {
                    return Err(Error::InvalidOperator("Bellman family is empty".into()));
                }
                if let Some(a) = family.iter().find(|a| a.dim() != n) {
                    return Err(Error::DimensionMismatch { expected: n, got: a.dim() });
                }
            }
            _ => {}
        }
        Ok(Operator { kind, n, lambda0, lambda1 })
    }

    pub fn linear(a: SymMatrix, lambda0: f64, lambda1: f64) -> Result<Self> {
        let n = a.dim();
        Self::new(OperatorKind::Linear(a), n, lambda0, lambda1)
    }

    /// The Laplacian, `A = Id`, with `λ₀ = λ₁ = 1`.
    pub fn laplacian(n: usize) -> Self {
        Self::new(OperatorKind::Linear(SymMatrix::identity(n)), n, 1.0, 1.0).expect("identity is valid")
    }

    pub fn bellman(family: Vec<SymMatrix>, lambda0: f64, lambda1: f64) -> Result<Self> {
        let n = family.first().map(|a| a.dim()).unwrap_or(1);
        Self::new(OperatorKind::Bellman(family), n, lambda0, lambda1)
    }

    pub fn pucci_plus(n: usize, lambda0: f64, lambda1: f64) -> Result<Self> {
        Self::new(OperatorKind::PucciPlus, n, lambda0, lambda1)
    }

    pub fn pucci_minus(n: usize, lambda0: f64, lambda1: f64) -> Result<Self> {
        Self::new(OperatorKind::PucciMinus, n, lambda0, lambda1)
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }
    pub fn dim(&self) -> usize {
        self.n
    }
    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }
    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn eval_f(&self, m: &SymMatrix) -> Result<f64> {
        if m.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: m.dim() });
        }
        Ok(match &self.kind {
            OperatorKind::Linear(a) => a.trace_mul(m),
            OperatorKind::Bellman(family) => family.iter().map(|a| a.trace_mul(m)).fold(f64::NEG_INFINITY, f64::max),
            OperatorKind::PucciPlus => pucci_plus(self.lambda0, self.lambda1, m),
            OperatorKind::PucciMinus => pucci_minus(self.lambda0, self.lambda1, m),
        })
    }

    /// `H = F(M) − ut`.
    pub fn eval_h(&self, m: &SymMatrix, ut: f64) -> Result<f64> {
        Ok(self.eval_f(m)? - ut)
    }

    /// Whether the kind is convex by construction (`Linear` is both).
    pub fn is_convex(&self) -> bool {
        !matches!(self.kind, OperatorKind::PucciMinus)
    }

    /// `F_R(M) = F(R²M)/R²`. Every shipped kind is positively 1-homogeneous,
    /// so the wrapper coincides with `F`.
    pub fn rescaled(&self, _r: f64) -> Operator {
        self.clone()
    }

    /// Randomised check of (H0) `F(0)=0`, (H1) the Pucci sandwich and (H2)
    /// convexity or concavity by midpoint tests.
    pub fn validate(&self, sample_count: usize, seed: u64) -> ValidationReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.n;
        let f = |m: &SymMatrix| self.eval_f(m).expect("dimension fixed by construction");

        let f0 = f(&SymMatrix::zeros(n));
        let h0 = HypothesisCheck { pass: f0 == 0.0, worst_margin: -f0.abs() };

        let mut h1_margin = f64::INFINITY;
        let mut convex_margin = f64::INFINITY;
        let mut concave_margin = f64::INFINITY;
        let mut h1_ok = true;
        let mut convex_ok = true;
        let mut concave_ok = true;
        for _ in 0..sample_count.max(1) {
            let p1 = random_sym(&mut rng, n);
            let p2 = random_sym(&mut rng, n);
            let (f1, f2) = (f(&p1), f(&p2));
            let scale = 1.0 + f1.abs() + f2.abs();
            let slack = ALGEBRAIC_TOL * scale;

            let diff = f1 - f2;
            let d = p1 - p2;
            let lo = pucci_minus(self.lambda0, self.lambda1, &d);
            let hi = pucci_plus(self.lambda0, self.lambda1, &d);
            let margin = (diff - lo).min(hi - diff);
            h1_margin = h1_margin.min(margin);
            h1_ok &= margin >= -slack;

            let mid = f(&((p1 + p2) * 0.5));
            let avg = 0.5 * (f1 + f2);
            convex_margin = convex_margin.min(avg - mid);
            concave_margin = concave_margin.min(mid - avg);
            convex_ok &= avg - mid >= -slack;
            concave_ok &= mid - avg >= -slack;
        }

        // exact eigenvalue bounds of the coefficient matrices
        let coefficient_margin = match &self.kind {
            OperatorKind::Linear(a) => self.coefficient_margin(std::slice::from_ref(a)),
            OperatorKind::Bellman(family) => self.coefficient_margin(family),
            _ => 0.0,
        };
        if coefficient_margin < -ALGEBRAIC_TOL {
            h1_ok = false;
            h1_margin = h1_margin.min(coefficient_margin);
        }

        ValidationReport {
            samples: sample_count.max(1),
            h0,
            h1: HypothesisCheck { pass: h1_ok, worst_margin: h1_margin },
            convex: HypothesisCheck { pass: convex_ok, worst_margin: convex_margin },
            concave: HypothesisCheck { pass: concave_ok, worst_margin: concave_margin },
        }
    }

    fn coefficient_margin(&self, family: &[SymMatrix]) -> f64 {
        family
            .iter()
            .flat_map(|a| a.eigenvalues())
            .map(|e| (e - self.lambda0).min(self.lambda1 - e))
            .fold(f64::INFINITY, f64::min)
    }

    /// The coefficient `γ` with `F(γ e⊗e) = 1`, found by bisection.
    pub fn halfspace_gamma(&self, e: &[f64]) -> Result<f64> {
        if e.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: e.len() });
        }
        let norm = e.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Precondition(format!("direction {e:?} is not a unit vector")));
        }
        let ee = SymMatrix::outer(e);
        let g = |gamma: f64| self.eval_f(&(ee * gamma)).map(|v| v - 1.0);
        let (mut lo, mut hi) = (0.5 / self.lambda1, 2.0 / self.lambda0);
        let (g_lo, g_hi) = (g(lo)?, g(hi)?);
        if !(g_lo < 0.0 && g_hi > 0.0) {
            return Err(Error::BracketFailure { lo, hi, f_lo: g_lo, f_hi: g_hi });
        }
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..200 {
            mid = 0.5 * (lo + hi);
            let v = g(mid)?;
            if v == 0.0 || hi - lo <= f64::EPSILON * mid {
                break;
            }
            if v < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let slack = ALGEBRAIC_TOL;
        if mid < 1.0 / self.lambda1 - slack || mid > 1.0 / self.lambda0 + slack {
            return Err(Error::InvalidOperator(format!(
                "gamma={mid} outside [1/lambda1, 1/lambda0] = [{}, {}]",
                1.0 / self.lambda1,
                1.0 / self.lambda0
            )));
        }
        Ok(mid)
    }
}

/// Finite Bellman approximation of `P⁺`: all diagonal matrices whose entries
/// are drawn from `m` equispaced samples of `[λ₀, λ₁]`. Exact when the
/// argument is diagonal in the grid axes.
pub fn pucci_net(n: usize, lambda0: f64, lambda1: f64, m: usize) -> Result<Operator> {
    if m < 2 {
        return Err(Error::InvalidOperator(format!("pucci_net needs m >= 2, got {m}")));
    }
    let samples: Vec<f64> = (0..m).map(|i| lambda0 + (lambda1 - lambda0) * i as f64 / (m - 1) as f64).collect();
    let family = match n {
        1 => samples.iter().map(|&a| SymMatrix::one(a)).collect(),
        2 => samples.iter().flat_map(|&a| samples.iter().map(move |&b| SymMatrix::two(a, 0.0, b))).collect(),
        _ => return Err(Error::InvalidOperator(format!("n must be 1 or 2, got {n}"))),
    };
    Operator::new(OperatorKind::Bellman(family), n, lambda0, lambda1)
}

/// Brute-force sup/inf of trace(N M) over N = Q diag(ν) Qᵀ with ν on a
/// `points`-per-axis net of [λ₀, λ₁] in the eigenbasis of M.
pub fn brute_pucci(l0: f64, l1: f64, m: &SymMatrix, points: usize) -> (f64, f64) {
    let (_, vecs) = m.eigen();
    let net: Vec<f64> = (0..points).map(|i| l0 + (l1 - l0) * i as f64 / (points - 1) as f64).collect();
    let mut best = (f64::NEG_INFINITY, f64::INFINITY);
    let mut visit = |nu: &[f64]| {
        let n_mat = SymMatrix::from_eigen(nu, &vecs);
        let v = n_mat.trace_mul(m);
        best.0 = best.0.max(v);
        best.1 = best.1.min(v);
    };
    if m.dim() == 1 {
        for &a in &net {
            visit(&[a]);
        }
    } else {
        for &a in &net {
            for &b in &net {
                visit(&[a, b]);
            }
        }
    }
    best
}

fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
    let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
    let mut entry = || rng.gen_range(-1.0..1.0) * scale;
    if n == 1 {
        SymMatrix::one(entry())
    } else {
        SymMatrix::two(entry(), entry(), entry())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HypothesisCheck {
    pub pass: bool,
    /// Smallest observed margin; negative values are violations.
    pub worst_margin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub samples: usize,
    pub h0: HypothesisCheck,
    pub h1: HypothesisCheck,
    pub convex: HypothesisCheck,
    pub concave: HypothesisCheck,
}

impl ValidationReport {
    /// (H2): convex or concave.
    pub fn h2_pass(&self) -> bool {
        self.convex.pass || self.concave.pass
    }

    pub fn all_pass(&self) -> bool {
        self.h0.pass && self.h1.pass && self.h2_pass()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pucci_zero_and_identity() {
        let pp = Operator::pucci_plus(2, 1.0, 2.0).unwrap();
        let pm = Operator::pucci_minus(2, 1.0, 2.0).unwrap();
        for op in [&pp, &pm, &Operator::laplacian(2)] {
            assert_eq!(op.eval_f(&SymMatrix::zeros(2)).unwrap(), 0.0);
        }
        assert_eq!(pp.eval_f(&SymMatrix::identity(2)).unwrap(), 4.0);
        assert_eq!(pm.eval_f(&SymMatrix::identity(2)).unwrap(), 2.0);
    }

    #[test]
    fn pucci_indefinite_matches_brute_force() {
        let m = SymMatrix::diag(&[1.0, -1.0]);
        let pp = Operator::pucci_plus(2, 1.0, 2.0).unwrap();
        let pm = Operator::pucci_minus(2, 1.0, 2.0).unwrap();
        let (sup, inf) = brute_pucci(1.0, 2.0, &m, 50);
        assert!((sup - 1.0).abs() < 1e-12 && (inf + 1.0).abs() < 1e-12);
        assert!((pp.eval_f(&m).unwrap() - 1.0).abs() < 1e-15);
        assert!((pm.eval_f(&m).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn closed_form_matches_net_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let m = random_sym(&mut rng, 2);
            let (sup, inf) = brute_pucci(0.5, 3.0, &m, 50);
            assert!((pucci_plus(0.5, 3.0, &m) - sup).abs() <= 1e-10 * (1.0 + sup.abs()));
            assert!((pucci_minus(0.5, 3.0, &m) - inf).abs() <= 1e-10 * (1.0 + inf.abs()));
        }
    }

    #[test]
    fn eval_h_examples() {
        let lap = Operator::laplacian(1);
        assert_eq!(lap.eval_h(&SymMatrix::one(1.0), 1.0).unwrap(), 0.0);
        assert_eq!(lap.eval_h(&SymMatrix::one(-1.0), -2.0).unwrap(), 1.0);
        let bell =
            Operator::bellman(vec![SymMatrix::diag(&[1.0, 1.0]), SymMatrix::diag(&[2.0, 1.0])], 1.0, 2.0).unwrap();
        assert_eq!(bell.eval_h(&SymMatrix::diag(&[1.0, -1.0]), 0.0).unwrap(), 1.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let lap = Operator::laplacian(2);
        assert!(matches!(lap.eval_f(&SymMatrix::one(1.0)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn constructor_rejects_bad_constants() {
        assert!(Operator::pucci_plus(1, 2.0, 1.0).is_err());
        assert!(Operator::pucci_plus(1, 0.0, 1.0).is_err());
        assert!(Operator::bellman(vec![], 1.0, 1.0).is_err());
    }

    #[test]
    fn validate_examples() {
        let lap = Operator::laplacian(2).validate(500, 1);
        assert!(lap.all_pass() && lap.convex.pass && lap.concave.pass);

        let bell = Operator::bellman(vec![SymMatrix::identity(2), SymMatrix::scalar(2, 2.0)], 1.0, 2.0)
            .unwrap()
            .validate(500, 2);
        assert!(bell.h0.pass && bell.h1.pass && bell.convex.pass);

        let bad = Operator::linear(SymMatrix::diag(&[3.0, 1.0]), 1.0, 2.0).unwrap().validate(500, 3);
        assert!(!bad.h1.pass);

        let pm = Operator::pucci_minus(2, 1.0, 2.0).unwrap().validate(500, 4);
        assert!(pm.h1.pass && !pm.convex.pass && pm.concave.pass && pm.h2_pass());
    }

    #[test]
    fn halfspace_gamma_examples() {
        let e = [0.6, 0.8];
        assert!((Operator::laplacian(2).halfspace_gamma(&e).unwrap() - 1.0).abs() < 1e-12);
        let pp = Operator::pucci_plus(2, 1.0, 2.0).unwrap();
        assert!((pp.halfspace_gamma(&e).unwrap() - 0.5).abs() < 1e-12);
        let pm = Operator::pucci_minus(1, 0.5, 1.0).unwrap();
        assert!((pm.halfspace_gamma(&[1.0]).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn halfspace_gamma_bracket_failure() {
        // declared constants far from the actual coefficient
        let op = Operator::linear(SymMatrix::one(100.0), 1.0, 1.0).unwrap();
        assert!(matches!(op.halfspace_gamma(&[1.0]), Err(Error::BracketFailure { .. })));
    }

    #[test]
    fn pucci_net_examples() {
        assert!(pucci_net(1, 1.0, 2.0, 1).is_err());
        let net1 = pucci_net(1, 1.0, 2.0, 2).unwrap();
        assert_eq!(net1.kind(), &OperatorKind::Bellman(vec![SymMatrix::one(1.0), SymMatrix::one(2.0)]));
        for m in [-3.0, -0.5, 0.0, 0.7, 4.0] {
            let m = SymMatrix::one(m);
            assert_eq!(net1.eval_f(&m).unwrap(), pucci_plus(1.0, 2.0, &m));
        }
        let net2 = pucci_net(2, 1.0, 2.0, 2).unwrap();
        assert_eq!(net2.eval_f(&SymMatrix::diag(&[1.0, -1.0])).unwrap(), 1.0);
        let rotated = SymMatrix::two(0.0, 1.0, 0.0);
        assert_eq!(net2.eval_f(&rotated).unwrap(), 0.0);
        assert!((pucci_plus(1.0, 2.0, &rotated) - 1.0).abs() < 1e-15);
    }
}
