//! Pointwise conformal geometry over the flat background.
//!
//! A conformal factor `u > 0` defines the metric `u^{4/(n−2)} g_flat`, whose
//! Schouten tensor in coordinates is `u^{4/(n−2)} A^u` with
//!
//! ```text
//! A^u = −(2/(n−2)) u^{−(n+2)/(n−2)} ∇²u
//!       + (2n/(n−2)²) u^{−2n/(n−2)} ∇u⊗∇u
//!       − (2/(n−2)²)  u^{−2n/(n−2)} |∇u|² I.
//! ```
//!
//! The spectrum of `A^u` is invariant under the Möbius action
//! `u ↦ u_ψ = |J_ψ|^{(n−2)/(2n)} (u∘ψ)`, which is what [`mobius`] and
//! [`field::transform_field`] implement.

pub mod field;
pub mod kelvin;
pub mod mobius;

use nalgebra::{DMatrix, DVector};

use crate::error::{fmt_point, Error, Result};
use crate::linalg::{eigenvalues_wrt_metric, symmetric_eigenvalues, symmetrize, symmetry_defect};
use crate::symfun::{EigenVec, MIN_DIM};

pub use field::{
    transform_field, ConstantField, Domain, FieldRef, OscillatoryField, PolyGaussField, PowerField,
    ScalarField, TransformedField,
};
pub use kelvin::{
    geometric_radii, kelvin_regularity_probe, KelvinReport, KelvinSample, KELVIN_THRESHOLD,
};
pub use mobius::{MobiusAtom, MobiusMap};

const SYMMETRY_TOL: f64 = 1e-12;

/// Pointwise 2-jet `(u, ∇u, ∇²u)` of a positive scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub point: DVector<f64>,
    pub u: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

impl Jet2 {
    /// Builds a jet; the Hessian is symmetrized.
    pub fn new(
        point: DVector<f64>,
        u: f64,
        grad: DVector<f64>,
        hess: DMatrix<f64>,
    ) -> Result<Self> {
        let n = point.len();
        if grad.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: grad.len(),
            });
        }
        if hess.nrows() != n || hess.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: hess.nrows(),
            });
        }
        if !(u > 0.0) || !u.is_finite() {
            return Err(Error::NonPositive {
                value: u,
                location: fmt_point(point.as_slice()),
            });
        }
        Ok(Self {
            point,
            u,
            grad,
            hess: symmetrize(&hess),
        })
    }

    pub fn n(&self) -> usize {
        self.point.len()
    }
}

/// A symmetric `n × n` matrix in the role of a Schouten tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct SchoutenMatrix {
    matrix: DMatrix<f64>,
}

impl SchoutenMatrix {
    /// Wraps `m`, rejecting asymmetry beyond 1e-12 and then symmetrizing.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                actual: m.ncols(),
            });
        }
        let defect = symmetry_defect(&m);
        if defect > SYMMETRY_TOL * (1.0 + m.amax()) {
            return Err(Error::Asymmetric { defect });
        }
        Ok(Self {
            matrix: symmetrize(&m),
        })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(n, n),
        }
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Sorted spectrum with respect to the Euclidean metric.
    pub fn eigenvalues(&self) -> Result<EigenVec> {
        EigenVec::new(symmetric_eigenvalues(&self.matrix))
    }

    /// Sorted spectrum of `g⁻¹ A` (indices raised with `g`).
    pub fn eigenvalues_wrt(&self, g: &DMatrix<f64>) -> Result<EigenVec> {
        EigenVec::new(eigenvalues_wrt_metric(&self.matrix, g)?)
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n < MIN_DIM {
        return Err(Error::InvalidParameter(format!(
            "dimension n = {n} < {MIN_DIM}"
        )));
    }
    Ok(())
}

/// `A^u` at the jet's point.
pub fn schouten_flat(jet: &Jet2) -> Result<SchoutenMatrix> {
    let n = jet.n();
    check_dim(n)?;
    if !(jet.u > 0.0) {
        return Err(Error::NonPositive {
            value: jet.u,
            location: fmt_point(jet.point.as_slice()),
        });
    }
    let nf = n as f64;
    let d = nf - 2.0;
    let u_hess = jet.u.powf(-(nf + 2.0) / d);
    let u_grad = jet.u.powf(-2.0 * nf / d);
    let g2 = jet.grad.norm_squared();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut v = -(2.0 / d) * u_hess * jet.hess[(i, j)]
                + (2.0 * nf / (d * d)) * u_grad * jet.grad[i] * jet.grad[j];
            if i == j {
                v -= (2.0 / (d * d)) * u_grad * g2;
            }
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    Ok(SchoutenMatrix { matrix: a })
}

/// Background data for [`schouten_conformal_change`]: the metric `g0` at the
/// point and its Schouten tensor `A_{g0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Background {
    pub metric: DMatrix<f64>,
    pub schouten: SchoutenMatrix,
}

impl Background {
    pub fn flat(n: usize) -> Self {
        Self {
            metric: DMatrix::identity(n, n),
            schouten: SchoutenMatrix::zeros(n),
        }
    }

    /// Round unit sphere in a chart where the metric is `g0`: `A = g0/2`.
    pub fn round(metric: DMatrix<f64>) -> Result<Self> {
        let schouten = SchoutenMatrix::new(&metric * 0.5)?;
        Ok(Self { metric, schouten })
    }
}

/// Schouten tensor of `u^{4/(n−2)} g0`, given the `g0`-covariant jet of `u`
/// (`jet.grad = ∇u`, `jet.hess = ∇²_{g0} u`).
pub fn schouten_conformal_change(jet: &Jet2, background: &Background) -> Result<SchoutenMatrix> {
    let n = jet.n();
    check_dim(n)?;
    let g0 = &background.metric;
    if g0.nrows() != n || background.schouten.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: g0.nrows(),
        });
    }
    let defect = symmetry_defect(g0);
    if defect > SYMMETRY_TOL * (1.0 + g0.amax()) {
        return Err(Error::Asymmetric { defect });
    }
    if !(jet.u > 0.0) {
        return Err(Error::NonPositive {
            value: jet.u,
            location: fmt_point(jet.point.as_slice()),
        });
    }
    let ginv = g0
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidParameter("singular background metric".into()))?;
    let grad_sq = (jet.grad.transpose() * &ginv * &jet.grad)[(0, 0)];
    let nf = n as f64;
    let d = nf - 2.0;
    let u = jet.u;
    let m = &jet.hess * (-(2.0 / d) / u)
        + (&jet.grad * jet.grad.transpose()) * ((2.0 * nf / (d * d)) / (u * u))
        - g0 * ((2.0 / (d * d)) * grad_sq / (u * u))
        + background.schouten.matrix();
    SchoutenMatrix::new(symmetrize(&m))
}
