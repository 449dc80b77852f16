//! The Harnack product `(max_{B_R} u)(min_{B_{2R}} u) R^{n−2}` and sweeps of
//! it over the bubble family.
//!
//! Extrema are taken on deterministic polar grids, one per coordinate plane
//! through the ball's center, followed by a single polish step on the best
//! grid point.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DVector;
use rand::SeedableRng;
use serde::Serialize;

use super::{bubble_field, check_nk, verify_solution, BubbleSpec};
use crate::conformal::{transform_field, FieldRef, MobiusMap, ScalarField};
use crate::error::{fmt_point, Error, Result};
use crate::exec::{map_range, map_slice, ExecPolicy};
use crate::sampling::halton_points;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarnackConfig {
    /// Radial levels per plane grid.
    pub radial: usize,
    /// Angular samples per plane grid.
    pub angular: usize,
    pub policy: ExecPolicy,
    /// When set, also check `σ_k(λ(A^u)) = 1` inside `B_{2R}`.
    pub check_k: Option<usize>,
}

impl Default for HarnackConfig {
    fn default() -> Self {
        Self {
            radial: 64,
            angular: 64,
            policy: ExecPolicy::Parallel,
            check_k: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarnackReport {
    pub radius: f64,
    pub max_br: f64,
    pub min_2br: f64,
    pub product_scaled: f64,
    pub argmax: Vec<f64>,
    pub argmin: Vec<f64>,
    /// Max residual of the equation on sample points in `B_{2R}`, when
    /// requested. Large values flag inputs the inequality says nothing about.
    pub equation_residual: Option<f64>,
}

impl HarnackReport {
    pub fn solves_equation(&self) -> Option<bool> {
        self.equation_residual.map(|r| r <= 1e-6)
    }
}

const POLISH_ROUNDS: usize = 40;

fn plane_grid(
    center: &DVector<f64>,
    radius: f64,
    radial: usize,
    angular: usize,
) -> Vec<DVector<f64>> {
    let n = center.len();
    let mut pts = vec![center.clone()];
    for i in 0..n {
        for j in (i + 1)..n {
            for l in 1..=radial {
                let r = radius * l as f64 / radial as f64;
                for a in 0..angular {
                    let (s, c) = (2.0 * PI * a as f64 / angular as f64).sin_cos();
                    let mut p = center.clone();
                    p[i] += r * c;
                    p[j] += r * s;
                    pts.push(p);
                }
            }
        }
    }
    pts
}

/// Best of `sign · u` on the closed ball: grid search, then local polish
/// (Newton inside, great-circle ascent on the sphere).
fn extremum(
    u: &dyn ScalarField,
    center: &DVector<f64>,
    radius: f64,
    sign: f64,
    cfg: &HarnackConfig,
) -> Result<(f64, DVector<f64>)> {
    let grid = plane_grid(center, radius, cfg.radial.max(1), cfg.angular.max(4));
    let values = map_slice(cfg.policy, &grid, |x| u.value(x));
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (i, v) in values.into_iter().enumerate() {
        let v = v?;
        if !(v > 0.0) {
            return Err(Error::NonPositive {
                value: v,
                location: fmt_point(grid[i].as_slice()),
            });
        }
        if sign * v > best.0 {
            best = (sign * v, i);
        }
    }
    let mut point = grid[best.1].clone();
    let mut score = best.0;
    let objective = |x: &DVector<f64>| u.value(x).map(|v| sign * v);

    let on_boundary = (&point - center).norm() >= radius * (1.0 - 1e-12);
    for _ in 0..POLISH_ROUNDS {
        let jet = u.jet(&point)?;
        let cand = if on_boundary {
            // golden-section search along the great circle in the ascent direction
            let d = (&point - center) / radius;
            let g = &jet.grad * sign;
            let tangential = &g - &d * g.dot(&d);
            let tn = tangential.norm();
            if !(tn > 0.0) {
                break;
            }
            let e = tangential / tn;
            let arc = |theta: f64| center + (&d * theta.cos() + &e * theta.sin()) * radius;
            let (mut lo, mut hi) = (0.0, PI);
            let phi = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..80 {
                let t1 = hi - phi * (hi - lo);
                let t2 = lo + phi * (hi - lo);
                if objective(&arc(t1))? >= objective(&arc(t2))? {
                    hi = t2;
                } else {
                    lo = t1;
                }
            }
            arc(0.5 * (lo + hi))
        } else {
            // Newton step on ∇u = 0
            match jet.hess.clone().try_inverse() {
                Some(inv) => &point - inv * &jet.grad,
                None => break,
            }
        };
        if (&cand - center).norm() > radius * (1.0 + 1e-12) {
            break;
        }
        let s = objective(&cand)?;
        if !(s > score) {
            break;
        }
        score = s;
        point = cand;
    }
    Ok((sign * score, point))
}

/// `(max_{B_R} u)(min_{B_{2R}} u) R^{n−2}` around `center`.
pub fn harnack_product(
    u: &dyn ScalarField,
    radius: f64,
    center: &DVector<f64>,
    cfg: &HarnackConfig,
) -> Result<HarnackReport> {
    let n = u.dim();
    if center.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: center.len(),
        });
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "radius {radius} must be positive"
        )));
    }
    let (max_br, argmax) = extremum(u, center, radius, 1.0, cfg)?;
    let (min_2br, argmin) = extremum(u, center, 2.0 * radius, -1.0, cfg)?;
    let equation_residual = match cfg.check_k {
        Some(k) => {
            let pts: Vec<DVector<f64>> = halton_points(n, 64, 1)
                .into_iter()
                .map(|h| {
                    center
                        + DVector::from_fn(n, |i, _| {
                            (2.0 * h[i] - 1.0) * radius * 2.0 / (n as f64).sqrt()
                        })
                })
                .collect();
            Some(verify_solution(u, n, k, &pts, cfg.policy)?.max_residual)
        }
        None => None,
    };
    Ok(HarnackReport {
        radius,
        max_br,
        min_2br,
        product_scaled: max_br * min_2br * radius.powi(n as i32 - 2),
        argmax: argmax.as_slice().to_vec(),
        argmin: argmin.as_slice().to_vec(),
        equation_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepOptions {
    pub config: HarnackConfig,
    /// Random Möbius images of each bubble added to the table.
    pub images: usize,
    pub seed: u64,
}

/// One row of the sweep table; serializes to the CSV columns
/// `n,k,a,R,maxBR,min2BR,product_scaled`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub k: usize,
    pub a: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "maxBR")]
    pub max_br: f64,
    #[serde(rename = "min2BR")]
    pub min_2br: f64,
    pub product_scaled: f64,
    /// `None` for the centered bubble, `Some(j)` for its `j`-th Möbius image.
    #[serde(skip)]
    pub image: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Supremum of `product_scaled` over centered bubbles.
    pub sup_centered: Option<f64>,
    /// Supremum over all rows; an empirical lower bound for the optimal `C(n)`.
    pub sup_all: Option<f64>,
}

/// Harnack products over `a_grid × r_grid` (a-major order). Cells run in
/// parallel under the configured policy; the table is assembled in index
/// order.
pub fn harnack_sweep(
    n: usize,
    k: usize,
    a_grid: &[f64],
    r_grid: &[f64],
    opts: &SweepOptions,
) -> Result<SweepTable> {
    check_nk(n, k)?;
    if a_grid
        .iter()
        .chain(r_grid)
        .any(|&v| !(v > 0.0 && v.is_finite()))
    {
        return Err(Error::InvalidParameter(
            "grid values must be positive and finite".into(),
        ));
    }
    let per_cell = 1 + opts.images;
    let cells = a_grid.len() * r_grid.len();
    let mut inner = opts.config;
    inner.policy = ExecPolicy::Sequential;
    let origin = DVector::zeros(n);

    let results = map_range(
        opts.config.policy,
        cells * per_cell,
        |idx| -> Result<SweepRow> {
            let cell = idx / per_cell;
            let image = idx % per_cell;
            let (a, r) = (a_grid[cell / r_grid.len()], r_grid[cell % r_grid.len()]);
            let bubble = bubble_field(&BubbleSpec::centered(n, k, a)?);
            let rep = if image == 0 {
                harnack_product(&bubble, r, &origin, &inner)?
            } else {
                let mut rng = rand::rngs::StdRng::seed_from_u64(
                    opts.seed ^ ((cell as u64) << 20) ^ image as u64,
                );
                let psi = random_image_map(n, r, &mut rng);
                let field = transform_field(Arc::new(bubble) as FieldRef, &psi)?;
                harnack_product(&field, r, &origin, &inner)?
            };
            Ok(SweepRow {
                n,
                k,
                a,
                r,
                max_br: rep.max_br,
                min_2br: rep.min_2br,
                product_scaled: rep.product_scaled,
                image: (image > 0).then_some(image),
            })
        },
    );
    let rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    let sup = |it: &mut dyn Iterator<Item = &SweepRow>| {
        it.map(|r| r.product_scaled)
            .fold(None, |acc: Option<f64>, v| {
                Some(acc.map_or(v, |a| a.max(v)))
            })
    };
    Ok(SweepTable {
        sup_centered: sup(&mut rows.iter().filter(|r| r.image.is_none())),
        sup_all: sup(&mut rows.iter()),
        rows,
    })
}

/// Random similarity (rotation, dilation, translation by up to `3R`).
fn random_image_map<R: rand::Rng>(n: usize, radius: f64, rng: &mut R) -> MobiusMap {
    use crate::conformal::MobiusAtom;
    let shift =
        DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)) * (3.0 * radius / (n as f64).sqrt());
    let word = vec![
        MobiusAtom::Rotate(MobiusMap::random_rotation(n, rng)),
        MobiusAtom::Dilate(rng.gen_range(0.5..2.0)),
        MobiusAtom::Translate(shift),
    ];
    MobiusMap::new(n, word).expect("generated atoms are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubbles::c_constant;
    use crate::conformal::ConstantField;
    use approx::assert_relative_eq;

    fn analytic_centered(n: usize, k: usize, a: f64, r: f64) -> f64 {
        let c = c_constant(n, k).unwrap();
        let m = (n as f64 - 2.0) / 2.0;
        c * c * (a * a * r * r / (1.0 + 4.0 * a * a * r * r)).powf(m)
    }

    #[test]
    fn centered_bubble_matches_closed_form() {
        for (n, k, a) in [(3, 1, 0.3), (4, 2, 1.0), (5, 5, 7.0)] {
            let f = bubble_field(&BubbleSpec::centered(n, k, a).unwrap());
            let rep =
                harnack_product(&f, 1.0, &DVector::zeros(n), &HarnackConfig::default()).unwrap();
            assert_relative_eq!(
                rep.product_scaled,
                analytic_centered(n, k, a, 1.0),
                max_relative = 1e-12
            );
            let limit = c_constant(n, k).unwrap().powi(2) * 2f64.powi(2 - n as i32);
            assert!(rep.product_scaled <= limit);
        }
    }

    #[test]
    fn off_center_bubble_matches_segment_extrema() {
        let n = 3;
        let r = 1.0;
        let center = DVector::from_vec(vec![4.0 * r, 0.0, 0.0]);
        let spec = BubbleSpec::new(n, 2, 1.5, center).unwrap();
        let f = bubble_field(&spec);
        let rep = harnack_product(&f, r, &DVector::zeros(n), &HarnackConfig::default()).unwrap();
        // nearest point of B_R to x̄ is at distance 3R, farthest point of B_2R at 6R
        assert_relative_eq!(rep.max_br, spec.profile(3.0 * r), max_relative = 1e-12);
        assert_relative_eq!(rep.min_2br, spec.profile(6.0 * r), max_relative = 1e-12);
    }

    #[test]
    fn off_axis_center_is_polished() {
        let n = 4;
        let center = DVector::from_vec(vec![2.1, 1.7, -2.2, 0.9]);
        let dist = center.norm();
        let spec = BubbleSpec::new(n, 1, 0.8, center).unwrap();
        let f = bubble_field(&spec);
        let rep = harnack_product(&f, 1.0, &DVector::zeros(n), &HarnackConfig::default()).unwrap();
        assert_relative_eq!(rep.max_br, spec.profile(dist - 1.0), max_relative = 1e-3);
        assert_relative_eq!(rep.min_2br, spec.profile(dist + 2.0), max_relative = 1e-3);
    }

    #[test]
    fn constant_field_is_flagged() {
        let u = ConstantField { n: 3, value: 2.0 };
        let cfg = HarnackConfig {
            check_k: Some(1),
            ..HarnackConfig::default()
        };
        for r in [1.0, 10.0] {
            let rep = harnack_product(&u, r, &DVector::zeros(3), &cfg).unwrap();
            assert_relative_eq!(rep.product_scaled, 4.0 * r, max_relative = 1e-14);
            assert_eq!(rep.solves_equation(), Some(false));
        }
    }

    #[test]
    fn empty_grid_gives_empty_table() {
        let t = harnack_sweep(3, 1, &[], &[1.0], &SweepOptions::default()).unwrap();
        assert!(t.rows.is_empty());
        assert_eq!(t.sup_all, None);
    }

    #[test]
    fn sweep_is_deterministic_across_policies() {
        let a: Vec<f64> = vec![0.1, 1.0, 10.0];
        let mut opts = SweepOptions {
            images: 2,
            seed: 3,
            ..SweepOptions::default()
        };
        opts.config.radial = 8;
        opts.config.angular = 16;
        let par = harnack_sweep(4, 2, &a, &[1.0, 2.0], &opts).unwrap();
        opts.config.policy = ExecPolicy::Sequential;
        let seq = harnack_sweep(4, 2, &a, &[1.0, 2.0], &opts).unwrap();
        assert_eq!(par, seq);
        assert_eq!(par.rows.len(), 18);
    }
}
