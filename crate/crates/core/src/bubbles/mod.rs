//! The explicit entire solutions ("bubbles") of `σ_k(λ(A^u)) = 1`,
//!
//! ```text
//! u(x) = c(n,k) (a / (1 + a²|x − x̄|²))^{(n−2)/2},
//! c(n,k) = 2^{(n−2)/4} C(n,k)^{(n−2)/(4k)},
//! ```
//!
//! residual verification of candidate solutions, and the Harnack product
//! functional.

mod harnack;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::conformal::field::check_input;
use crate::conformal::{schouten_flat, Domain, Jet2, ScalarField};
use crate::error::{Error, Result};
use crate::exec::{map_slice, ExecPolicy};
use crate::symfun::{binomial, cone_margin, elementary_symmetric, MIN_DIM};

pub use harnack::{
    harnack_product, harnack_sweep, HarnackConfig, HarnackReport, SweepOptions, SweepRow,
    SweepTable,
};

fn check_nk(n: usize, k: usize) -> Result<()> {
    if n < MIN_DIM {
        return Err(Error::InvalidParameter(format!(
            "n = {n} must be at least {MIN_DIM}"
        )));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "k = {k} must satisfy 1 <= k <= n = {n}"
        )));
    }
    Ok(())
}

/// `c(n,k) = 2^{(n−2)/4} C(n,k)^{(n−2)/(4k)}`.
pub fn c_constant(n: usize, k: usize) -> Result<f64> {
    check_nk(n, k)?;
    let e = (n as f64 - 2.0) / 4.0;
    Ok(2f64.powf(e) * binomial(n, k).powf(e / k as f64))
}

/// The common eigenvalue `C(n,k)^{−1/k}` of `A^u` for every bubble.
pub fn bubble_eigenvalue(n: usize, k: usize) -> f64 {
    binomial(n, k).powf(-1.0 / k as f64)
}

/// Parameters `(n, k, a, x̄)` of a bubble.
#[derive(Debug, Clone, PartialEq)]
pub struct BubbleSpec {
    n: usize,
    k: usize,
    a: f64,
    center: DVector<f64>,
}

impl BubbleSpec {
    pub fn new(n: usize, k: usize, a: f64, center: DVector<f64>) -> Result<Self> {
        check_nk(n, k)?;
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bubble scale a = {a} must be positive"
            )));
        }
        if center.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: center.len(),
            });
        }
        Ok(Self { n, k, a, center })
    }

    pub fn centered(n: usize, k: usize, a: f64) -> Result<Self> {
        Self::new(n, k, a, DVector::zeros(n))
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    /// Scale `a` of the centered bubble with `u(0) = u0`.
    pub fn scale_for_peak(n: usize, k: usize, u0: f64) -> Result<f64> {
        let c = c_constant(n, k)?;
        Ok((u0 / c).powf(2.0 / (n as f64 - 2.0)))
    }

    /// Radial profile `u(r)` with `r = |x − x̄|`.
    pub fn profile(&self, r: f64) -> f64 {
        let m = (self.n as f64 - 2.0) / 2.0;
        let c = c_constant(self.n, self.k).expect("validated");
        c * (self.a / (1.0 + self.a * self.a * r * r)).powf(m)
    }

    /// `(u, u′, u″)` of the radial profile.
    pub fn profile_derivs(&self, r: f64) -> (f64, f64, f64) {
        let m = (self.n as f64 - 2.0) / 2.0;
        let a2 = self.a * self.a;
        let s = 1.0 + a2 * r * r;
        let u = self.profile(r);
        let du = -2.0 * m * a2 * u * r / s;
        let d2u = -(2.0 * m * a2 * u / s) * (1.0 - (2.0 * m + 2.0) * a2 * r * r / s);
        (u, du, d2u)
    }
}

/// Closed-form bubble field with analytic jets.
#[derive(Debug, Clone)]
pub struct BubbleField {
    spec: BubbleSpec,
    c: f64,
}

impl BubbleField {
    pub fn spec(&self) -> &BubbleSpec {
        &self.spec
    }
}

pub fn bubble_field(spec: &BubbleSpec) -> BubbleField {
    BubbleField {
        spec: spec.clone(),
        c: c_constant(spec.n, spec.k).expect("validated spec"),
    }
}

impl ScalarField for BubbleField {
    fn dim(&self) -> usize {
        self.spec.n
    }

    fn domain(&self) -> Domain {
        Domain::Everywhere
    }

    fn jet(&self, x: &DVector<f64>) -> Result<Jet2> {
        let n = self.spec.n;
        check_input(n, &Domain::Everywhere, x)?;
        let m = (n as f64 - 2.0) / 2.0;
        let a = self.spec.a;
        let a2 = a * a;
        let d = x - &self.spec.center;
        let s = 1.0 + a2 * d.norm_squared();
        let u = self.c * (a / s).powf(m);
        let grad = &d * (-2.0 * m * a2 * u / s);
        let hess = (DMatrix::identity(n, n) - &d * d.transpose() * ((2.0 * m + 2.0) * a2 / s))
            * (-2.0 * m * a2 * u / s);
        Jet2::new(x.clone(), u, grad, hess)
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        check_input(self.spec.n, &Domain::Everywhere, x)?;
        let d2 = (x - &self.spec.center).norm_squared();
        Ok(self.c
            * (self.spec.a / (1.0 + self.spec.a * self.spec.a * d2))
                .powf((self.spec.n as f64 - 2.0) / 2.0))
    }

    fn tag(&self) -> Option<String> {
        Some(format!(
            "bubble(n={}, k={}, a={})",
            self.spec.n, self.spec.k, self.spec.a
        ))
    }
}

/// Residual of `σ_k(λ(A^u)) = 1` and the `Γ_k` margin at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointCheck {
    pub residual: f64,
    pub margin: f64,
}

pub fn check_point(u: &dyn ScalarField, k: usize, x: &DVector<f64>) -> Result<PointCheck> {
    let a = schouten_flat(&u.jet(x)?)?;
    let ev = a.eigenvalues()?;
    Ok(PointCheck {
        residual: (elementary_symmetric(ev.values(), k) - 1.0).abs(),
        margin: cone_margin(ev.values(), k),
    })
}

/// Output of [`verify_solution`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub samples: usize,
    pub max_residual: f64,
    pub worst_point: Vec<f64>,
    pub min_margin: f64,
    pub min_margin_point: Vec<f64>,
    /// Points where the spectrum is not strictly inside `Γ_k`.
    pub cone_violations: usize,
    pub first_violation: Option<Vec<f64>>,
}

impl VerifyReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual <= tol && self.cone_violations == 0 && self.min_margin > 0.0
    }
}

/// Evaluates `|σ_k(λ(A^u)) − 1|` and the `Γ_k` margin at every sample point
/// from analytic jets. Cone violations are counted, not raised.
pub fn verify_solution(
    u: &dyn ScalarField,
    n: usize,
    k: usize,
    points: &[DVector<f64>],
    policy: ExecPolicy,
) -> Result<VerifyReport> {
    check_nk(n, k)?;
    if u.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: u.dim(),
        });
    }
    let checks = map_slice(policy, points, |x| check_point(u, k, x));
    let mut rep = VerifyReport {
        samples: points.len(),
        max_residual: 0.0,
        worst_point: Vec::new(),
        min_margin: f64::INFINITY,
        min_margin_point: Vec::new(),
        cone_violations: 0,
        first_violation: None,
    };
    for (x, c) in points.iter().zip(checks) {
        let c = c?;
        if c.residual > rep.max_residual || rep.worst_point.is_empty() {
            rep.max_residual = c.residual;
            rep.worst_point = x.as_slice().to_vec();
        }
        if c.margin < rep.min_margin {
            rep.min_margin = c.margin;
            rep.min_margin_point = x.as_slice().to_vec();
        }
        if !(c.margin > 0.0) {
            rep.cone_violations += 1;
            rep.first_violation
                .get_or_insert_with(|| x.as_slice().to_vec());
        }
    }
    Ok(rep)
}
