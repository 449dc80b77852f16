//! Numerical evidence for regularity at infinity.
//!
//! The Kelvin image `v(y) = |y|^{2−n} u(y/|y|²)` turns the behaviour of `u`
//! at infinity into behaviour of `v` near the origin. A finite sample cannot
//! certify that `v` extends as a positive `C²` function, so the probe only
//! reports evidence: bounds on `v` and the decay of `|y||∇v(y)|` along a
//! shrinking sequence of radii.

use std::sync::Arc;

use nalgebra::DVector;
use serde::Serialize;

use super::field::{transform_field, FieldRef, ScalarField};
use super::MobiusMap;
use crate::error::{Error, Result};

/// Threshold on `|y||∇v(y)| / v(y)` at the smallest probe radius.
pub const KELVIN_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KelvinSample {
    pub radius: f64,
    pub v_min: f64,
    pub v_max: f64,
    /// max of `|y||∇v(y)|` over the probe directions.
    pub gradient_measure: f64,
    /// max of `|y||∇v(y)| / v(y)`; invariant under dilations of `u`.
    pub relative_measure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KelvinReport {
    /// One entry per radius, largest radius first.
    pub samples: Vec<KelvinSample>,
    pub v_inf: f64,
    pub v_sup: f64,
    /// The gradient measure never increases as the radius shrinks.
    pub monotone: bool,
    pub below_threshold: bool,
    pub plausibly_regular: bool,
}

/// Probe directions: the `2n` coordinate directions and four diagonals.
fn directions(n: usize) -> Vec<DVector<f64>> {
    let mut dirs = Vec::with_capacity(2 * n + 4);
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut e = DVector::zeros(n);
            e[i] = s;
            dirs.push(e);
        }
    }
    let inv = 1.0 / (n as f64).sqrt();
    // sign flips on the first two coordinates
    for pattern in 0..4usize {
        dirs.push(DVector::from_fn(n, |i, _| {
            if i < 2 && (pattern >> i) & 1 == 1 {
                -inv
            } else {
                inv
            }
        }));
    }
    dirs
}

/// Samples the Kelvin image of `u` on spheres of the given radii.
pub fn kelvin_regularity_probe(u: FieldRef, radii: &[f64]) -> Result<KelvinReport> {
    if radii.is_empty() || radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidParameter(
            "probe radii must be positive and finite".into(),
        ));
    }
    let n = u.dim();
    let v = transform_field(Arc::clone(&u), &MobiusMap::inversion(n))?;
    let mut radii = radii.to_vec();
    radii.sort_by(|a, b| b.total_cmp(a));
    let dirs = directions(n);

    let mut samples = Vec::with_capacity(radii.len());
    for &r in &radii {
        let mut s = KelvinSample {
            radius: r,
            v_min: f64::INFINITY,
            v_max: 0.0,
            gradient_measure: 0.0,
            relative_measure: 0.0,
        };
        for d in &dirs {
            let y = d * r;
            let jet = v.jet(&y)?;
            let g = r * jet.grad.norm();
            s.v_min = s.v_min.min(jet.u);
            s.v_max = s.v_max.max(jet.u);
            s.gradient_measure = s.gradient_measure.max(g);
            s.relative_measure = s.relative_measure.max(g / jet.u);
        }
        samples.push(s);
    }

    let v_inf = samples
        .iter()
        .map(|s| s.v_min)
        .fold(f64::INFINITY, f64::min);
    let v_sup = samples.iter().map(|s| s.v_max).fold(0.0, f64::max);
    let monotone = samples
        .windows(2)
        .all(|w| w[1].relative_measure <= w[0].relative_measure * (1.0 + 1e-9) + 1e-14);
    let below_threshold = samples
        .last()
        .is_some_and(|s| s.relative_measure < KELVIN_THRESHOLD);
    Ok(KelvinReport {
        samples,
        v_inf,
        v_sup,
        monotone,
        below_threshold,
        plausibly_regular: v_inf > 0.0 && monotone && below_threshold,
    })
}

/// `radius_max · ratio^j`, `count` terms.
pub fn geometric_radii(radius_max: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|j| radius_max * ratio.powi(j as i32))
        .collect()
}
