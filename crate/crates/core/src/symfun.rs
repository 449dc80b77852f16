//! Elementary symmetric functions, the cones `Γ_k`, and the homotopy family
//! `f_t(λ) = σ_k(tλ + (1 − t) σ_1(λ) w)` that links the `σ_1` problem to the
//! `σ_k` problem.
//!
//! `σ_k` is evaluated with the product recurrence
//! `e_j(λ_1..λ_m) = e_j(λ_1..λ_{m−1}) + λ_m e_{j−1}(λ_1..λ_{m−1})`, which has
//! no divisions and stays accurate near the cone boundary. Cone membership is
//! decided by the sign of `σ_1, …, σ_k`; the minimum of those values is
//! returned as a margin so callers can backtrack against the boundary.

use serde::Serialize;

use crate::error::{Error, Result};

/// Smallest ambient dimension for which the conformal machinery makes sense.
pub const MIN_DIM: usize = 3;

/// An ordered list of `n ≥ 3` finite eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenVec {
    values: Vec<f64>,
}

impl EigenVec {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < MIN_DIM {
            return Err(Error::InvalidParameter(format!(
                "eigenvalue vector needs n >= {MIN_DIM}, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite eigenvalue".into()));
        }
        Ok(Self { values })
    }

    /// `n` copies of `value`.
    pub fn isotropic(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Cone index `k` together with the ambient dimension it was validated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConeId {
    k: usize,
    n: usize,
}

impl ConeId {
    pub fn new(k: usize, n: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidParameter(format!(
                "cone index k = {k} must satisfy 1 <= k <= n = {n}"
            )));
        }
        Ok(Self { k, n })
    }

    pub fn k(self) -> usize {
        self.k
    }

    pub fn n(self) -> usize {
        self.n
    }

    fn check(self, lambda: &EigenVec) -> Result<()> {
        if lambda.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: lambda.n(),
            });
        }
        Ok(())
    }
}

/// Result of a cone membership test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConeTest {
    pub inside: bool,
    /// `min_{1≤j≤k} σ_j`; positive exactly when `inside`.
    pub margin: f64,
}

impl ConeTest {
    fn from_margin(margin: f64) -> Self {
        Self {
            inside: margin > 0.0,
            margin,
        }
    }
}

/// Binomial coefficient as a float; exact for the dimensions used here.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// `[e_0, e_1, …, e_top]` of `values`, with `e_0 = 1` and `top ≤ len`.
pub fn elementary_symmetric_upto(values: &[f64], top: usize) -> Vec<f64> {
    let top = top.min(values.len());
    let mut e = vec![0.0; top + 1];
    e[0] = 1.0;
    for (m, &x) in values.iter().enumerate() {
        // descending j so e[j-1] still holds the previous stage
        for j in (1..=top.min(m + 1)).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e
}

/// `e_k(values)` for any length, `e_0 = 1` and `e_k = 0` for `k > len`.
pub fn elementary_symmetric(values: &[f64], k: usize) -> f64 {
    if k > values.len() {
        return 0.0;
    }
    elementary_symmetric_upto(values, k)[k]
}

/// `min_{1≤j≤k} e_j(values)`.
pub fn cone_margin(values: &[f64], k: usize) -> f64 {
    let e = elementary_symmetric_upto(values, k);
    e[1..].iter().copied().fold(f64::INFINITY, f64::min)
}

/// `∂σ_k/∂λ_i = σ_{k−1}(λ with entry i removed)`, for any length.
pub fn elementary_gradient(values: &[f64], k: usize) -> Vec<f64> {
    let mut rest = Vec::with_capacity(values.len().saturating_sub(1));
    (0..values.len())
        .map(|i| {
            rest.clear();
            rest.extend(
                values
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &v)| v),
            );
            if k == 0 {
                0.0
            } else {
                elementary_symmetric(&rest, k - 1)
            }
        })
        .collect()
}

pub fn sigma(lambda: &EigenVec, k: ConeId) -> Result<f64> {
    k.check(lambda)?;
    Ok(elementary_symmetric(lambda.values(), k.k()))
}

pub fn sigma_gradient(lambda: &EigenVec, k: ConeId) -> Result<EigenVec> {
    k.check(lambda)?;
    EigenVec::new(elementary_gradient(lambda.values(), k.k()))
}

pub fn in_gamma_k(lambda: &EigenVec, k: ConeId) -> Result<ConeTest> {
    k.check(lambda)?;
    Ok(ConeTest::from_margin(cone_margin(lambda.values(), k.k())))
}

/// Parameters of the homotopy operator `f_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    n: usize,
    k: usize,
    t: f64,
    weight: Vec<f64>,
}

impl OperatorSpec {
    /// Homotopy operator with the isotropic weight `(1/n, …, 1/n)`.
    pub fn new(n: usize, k: usize, t: f64) -> Result<Self> {
        Self::with_weight(n, k, t, vec![1.0 / n as f64; n])
    }

    pub fn with_weight(n: usize, k: usize, t: f64, weight: Vec<f64>) -> Result<Self> {
        if n < MIN_DIM {
            return Err(Error::InvalidParameter(format!("n = {n} < {MIN_DIM}")));
        }
        ConeId::new(k, n)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidParameter(format!("t = {t} outside [0, 1]")));
        }
        if weight.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: weight.len(),
            });
        }
        if weight.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::InvalidParameter("weights must be positive".into()));
        }
        let total: f64 = weight.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { n, k, t, weight })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    /// Same operator at a different homotopy parameter.
    pub fn at(&self, t: f64) -> Result<Self> {
        Self::with_weight(self.n, self.k, t, self.weight.clone())
    }

    fn check(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: values.len(),
            });
        }
        Ok(())
    }

    /// `Λ_t(λ) = tλ + (1 − t) σ_1(λ) w`. Preserves `σ_1`.
    pub fn deform(&self, values: &[f64]) -> Vec<f64> {
        let trace: f64 = values.iter().sum();
        let s = (1.0 - self.t) * trace;
        values
            .iter()
            .zip(&self.weight)
            .map(|(&l, &w)| self.t * l + s * w)
            .collect()
    }

    /// `σ_k(Λ_t(λ))` without any cone check.
    pub fn value(&self, values: &[f64]) -> f64 {
        elementary_symmetric(&self.deform(values), self.k)
    }

    /// Gradient of [`OperatorSpec::value`] with respect to `λ`.
    pub fn gradient(&self, values: &[f64]) -> Vec<f64> {
        let g = elementary_gradient(&self.deform(values), self.k);
        let mixed: f64 = g.iter().zip(&self.weight).map(|(a, b)| a * b).sum();
        g.iter()
            .map(|&gi| self.t * gi + (1.0 - self.t) * mixed)
            .collect()
    }

    /// Cone margin of `Λ_t(λ)` in `Γ_k`.
    pub fn margin(&self, values: &[f64]) -> f64 {
        cone_margin(&self.deform(values), self.k)
    }
}

/// `σ_k(Λ_t(λ))`, rejecting arguments whose image leaves `Γ_k`.
pub fn f_homotopy(lambda: &EigenVec, spec: &OperatorSpec) -> Result<f64> {
    spec.check(lambda.values())?;
    let margin = spec.margin(lambda.values());
    if !(margin > 0.0) {
        return Err(Error::DomainViolation { margin });
    }
    Ok(spec.value(lambda.values()))
}

/// Membership in `(Γ_k)_t = {λ : Λ_t(λ) ∈ Γ_k}`.
pub fn in_gamma_t(lambda: &EigenVec, spec: &OperatorSpec) -> Result<ConeTest> {
    spec.check(lambda.values())?;
    Ok(ConeTest::from_margin(spec.margin(lambda.values())))
}

/// Smallest partial derivative `min_i ∂f_t/∂λ_i`; positive certifies
/// ellipticity at `λ`.
pub fn check_ellipticity(spec: &OperatorSpec, lambda: &EigenVec) -> Result<f64> {
    spec.check(lambda.values())?;
    let margin = spec.margin(lambda.values());
    if !(margin > 0.0) {
        return Err(Error::DomainViolation { margin });
    }
    Ok(spec
        .gradient(lambda.values())
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

/// Midpoint concavity of `σ_k^{1/k}` on the segment `[λ, μ]`, with slack 1e-12.
pub fn check_concavity(k: ConeId, lambda: &EigenVec, mu: &EigenVec) -> Result<bool> {
    k.check(lambda)?;
    k.check(mu)?;
    for v in [lambda, mu] {
        let margin = cone_margin(v.values(), k.k());
        if !(margin > 0.0) {
            return Err(Error::DomainViolation { margin });
        }
    }
    let root = |v: &[f64]| elementary_symmetric(v, k.k()).powf(1.0 / k.k() as f64);
    let mid: Vec<f64> = lambda
        .values()
        .iter()
        .zip(mu.values())
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    let lhs = root(&mid);
    let rhs = 0.5 * (root(lambda.values()) + root(mu.values()));
    Ok(lhs >= rhs - 1e-12)
}
