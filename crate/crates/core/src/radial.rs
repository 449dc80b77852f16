//! Radial reduction of `σ_k(λ(A^u)) = 1`.
//!
//! For `u = u(r)`, `∇²u = u″ x̂⊗x̂ + (u′/r)(I − x̂⊗x̂)`, so `A^u` has one radial
//! eigenvalue and an `(n−1)`-fold tangential one:
//!
//! ```text
//! λ_rad = −(2/(n−2)) u^{−(n+2)/(n−2)} u″ + (2(n−1)/(n−2)²) u^{−2n/(n−2)} u′²
//! λ_tan = −(2/(n−2)) u^{−(n+2)/(n−2)} u′/r − (2/(n−2)²) u^{−2n/(n−2)} u′²
//! ```
//!
//! `σ_k` of that spectrum is `C(n−1,k−1) λ_tan^{k−1} λ_rad + C(n−1,k) λ_tan^k`,
//! linear in `λ_rad` and hence in `u″`. The equation is therefore an explicit
//! second-order ODE, integrated outward from the origin by [`shoot`].

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::bubbles::BubbleSpec;
use crate::conformal::field::check_input;
use crate::conformal::{
    kelvin_regularity_probe, schouten_flat, Domain, FieldRef, Jet2, KelvinReport, ScalarField,
};
use crate::error::{Error, Result};
use crate::symfun::{binomial, elementary_symmetric, MIN_DIM};

/// Cone margin below which integration stops.
pub const CONE_STOP: f64 = 1e-10;

/// Upper bound on the number of fixed steps in one shot.
pub const MAX_FIXED_STEPS: f64 = 1e8;

fn check_nk(n: usize, k: usize) -> Result<()> {
    if n < MIN_DIM || k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "need n >= 3 and 1 <= k <= n, got n = {n}, k = {k}"
        )));
    }
    Ok(())
}

/// Exponents and coefficients of `A^u` that the radial formulas share.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Coeffs {
    /// `2/(n−2)`
    pub alpha: f64,
    /// `2(n−1)/(n−2)²`
    pub beta: f64,
    /// `2/(n−2)²`
    pub gamma: f64,
    /// `(n+2)/(n−2)`
    pub p: f64,
    /// `2n/(n−2)`
    pub q: f64,
}

impl Coeffs {
    pub fn new(n: usize) -> Self {
        let nf = n as f64;
        let d = nf - 2.0;
        Self {
            alpha: 2.0 / d,
            beta: 2.0 * (nf - 1.0) / (d * d),
            gamma: 2.0 / (d * d),
            p: (nf + 2.0) / d,
            q: 2.0 * nf / d,
        }
    }
}

/// Spectrum of `A^u` for a radial `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenPair {
    /// Radial eigenvalue (multiplicity 1).
    pub rad: f64,
    /// Tangential eigenvalue (multiplicity `n − 1`).
    pub tan: f64,
}

impl EigenPair {
    pub fn spectrum(&self, n: usize) -> Vec<f64> {
        let mut v = vec![self.tan; n];
        v[0] = self.rad;
        v
    }

    /// `σ_j` of the spectrum.
    pub fn sigma(&self, n: usize, j: usize) -> f64 {
        if j == 0 {
            return 1.0;
        }
        binomial(n - 1, j - 1) * self.tan.powi(j as i32 - 1) * self.rad
            + binomial(n - 1, j) * self.tan.powi(j as i32)
    }

    pub fn margin(&self, n: usize, k: usize) -> f64 {
        (1..=k)
            .map(|j| self.sigma(n, j))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Radial and tangential eigenvalues of `A^u`. At `r = 0` the quotient
/// `u′/r` is replaced by its limit `u″`.
pub fn radial_eigenvalues(u: f64, du: f64, d2u: f64, r: f64, n: usize) -> Result<EigenPair> {
    if n < MIN_DIM {
        return Err(Error::InvalidParameter(format!("n = {n} < {MIN_DIM}")));
    }
    if !(u > 0.0) {
        return Err(Error::NonPositive {
            value: u,
            location: format!("r = {r}"),
        });
    }
    let c = Coeffs::new(n);
    let up = u.powf(-c.p);
    let uq = u.powf(-c.q);
    let slope = if r > 0.0 { du / r } else { d2u };
    Ok(EigenPair {
        rad: -c.alpha * up * d2u + c.beta * uq * du * du,
        tan: -c.alpha * up * slope - c.gamma * uq * du * du,
    })
}

/// Solves `σ_k(λ(A^u)) = rhs` for `u″` given `(u, u′, r)`. Returns `u″` and
/// the `Γ_k` margin of the resulting spectrum.
pub fn solve_for_u2(u: f64, du: f64, r: f64, n: usize, k: usize, rhs: f64) -> Result<(f64, f64)> {
    check_nk(n, k)?;
    if !(u > 0.0) {
        return Err(Error::NonPositive {
            value: u,
            location: format!("r = {r}"),
        });
    }
    let c = Coeffs::new(n);
    let up = u.powf(-c.p);
    let uq = u.powf(-c.q);
    if r == 0.0 {
        // isotropic: C(n,k) λ^k = rhs on the positive branch
        if rhs < 0.0 {
            return Err(Error::ConeBoundary { r, margin: rhs });
        }
        let lam = (rhs / binomial(n, k)).powf(1.0 / k as f64);
        let u2 = -lam / (c.alpha * up);
        let margin = EigenPair { rad: lam, tan: lam }.margin(n, k);
        return Ok((u2, margin));
    }
    let tan = -c.alpha * up * du / r - c.gamma * uq * du * du;
    let coef = binomial(n - 1, k - 1) * tan.powi(k as i32 - 1);
    if k >= 2 && !(tan > 0.0) || coef == 0.0 || !coef.is_finite() {
        return Err(Error::ConeBoundary {
            r,
            margin: tan.min(0.0),
        });
    }
    let rad = (rhs - binomial(n - 1, k) * tan.powi(k as i32)) / coef;
    let u2 = (rad - c.beta * uq * du * du) / (-c.alpha * up);
    let pair = EigenPair { rad, tan };
    let margin = pair.margin(n, k);
    let scale = (1..=k)
        .map(|j| pair.sigma(n, j).abs())
        .fold(1.0f64, f64::max);
    if margin < -1e-12 * scale {
        return Err(Error::ConeBoundary { r, margin });
    }
    Ok((u2, margin))
}

/// Solution samples on a radial mesh starting at `r = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub n: usize,
    pub k: usize,
    pub mesh: Vec<f64>,
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
    pub second: Vec<f64>,
}

impl RadialProfile {
    pub fn new(
        n: usize,
        k: usize,
        mesh: Vec<f64>,
        values: Vec<f64>,
        derivs: Vec<f64>,
        second: Vec<f64>,
    ) -> Result<Self> {
        check_nk(n, k)?;
        let len = mesh.len();
        if len < 2 || values.len() != len || derivs.len() != len || second.len() != len {
            return Err(Error::InvalidParameter(
                "profile arrays must have equal length >= 2".into(),
            ));
        }
        if mesh[0] != 0.0 || mesh.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "mesh must start at 0 and increase strictly".into(),
            ));
        }
        if derivs[0] != 0.0 {
            return Err(Error::InvalidParameter("u'(0) must vanish".into()));
        }
        if let Some(i) = values.iter().position(|&u| !(u > 0.0)) {
            return Err(Error::NonPositive {
                value: values[i],
                location: format!("r = {}", mesh[i]),
            });
        }
        Ok(Self {
            n,
            k,
            mesh,
            values,
            derivs,
            second,
        })
    }

    /// Profile from nodal values, with derivatives by second-order finite
    /// differences (one-sided at the outer end) and `u′(0) = 0`.
    pub fn from_values(n: usize, k: usize, mesh: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let len = mesh.len();
        if len < 3 || values.len() != len {
            return Err(Error::InvalidParameter("need at least 3 nodes".into()));
        }
        let mut derivs = vec![0.0; len];
        let mut second = vec![0.0; len];
        second[0] = 2.0 * (values[1] - values[0]) / (mesh[1] * mesh[1]);
        for i in 1..len {
            // quadratic through three neighbouring nodes, differentiated at node i
            let j = if i + 1 < len { i - 1 } else { i - 2 };
            let (x0, x1, x2) = (mesh[j], mesh[j + 1], mesh[j + 2]);
            let (y0, y1, y2) = (values[j], values[j + 1], values[j + 2]);
            let d01 = (y1 - y0) / (x1 - x0);
            let d12 = (y2 - y1) / (x2 - x1);
            let curv = 2.0 * (d12 - d01) / (x2 - x0);
            let x = mesh[i];
            derivs[i] = d01 + 0.5 * curv * ((x - x0) + (x - x1));
            second[i] = curv;
        }
        Self::new(n, k, mesh, values, derivs, second)
    }

    pub fn r_max(&self) -> f64 {
        *self.mesh.last().unwrap()
    }

    pub fn eigenpair(&self, i: usize) -> Result<EigenPair> {
        radial_eigenvalues(
            self.values[i],
            self.derivs[i],
            self.second[i],
            self.mesh[i],
            self.n,
        )
    }

    /// `Γ_k` margin at every node.
    pub fn margins(&self) -> Result<Vec<f64>> {
        (0..self.mesh.len())
            .map(|i| Ok(self.eigenpair(i)?.margin(self.n, self.k)))
            .collect()
    }

    /// `|σ_k(λ(A^u)) − 1|` at every node, recomputed through the full
    /// `n × n` matrix path (jet, `A^u`, symmetric eigensolver).
    pub fn sigma_residuals(&self, rhs: f64) -> Result<Vec<f64>> {
        let field = ProfileField::new(Arc::new(self.clone()));
        (0..self.mesh.len())
            .map(|i| {
                let mut x = DVector::zeros(self.n);
                x[0] = self.mesh[i];
                let ev = schouten_flat(&field.jet(&x)?)?.eigenvalues()?;
                Ok((elementary_symmetric(ev.values(), self.k) - rhs).abs())
            })
            .collect()
    }
}

/// How [`shoot`] chooses steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepControl {
    /// Step doubling on classical RK4 with mixed tolerance `atol + rtol |y|`.
    Adaptive { rtol: f64, atol: f64 },
    /// Constant step `h` after the series start.
    Fixed { h: f64 },
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl::Adaptive {
            rtol: 1e-12,
            atol: 0.0,
        }
    }
}

struct Rhs {
    n: usize,
    k: usize,
    rhs: f64,
}

impl Rhs {
    fn eval(&self, r: f64, y: [f64; 2]) -> Result<[f64; 2]> {
        if !(y[0] > 0.0) {
            return Err(Error::PositivityLoss { r });
        }
        let (u2, _) = solve_for_u2(y[0], y[1], r, self.n, self.k, self.rhs)?;
        Ok([y[1], u2])
    }

    fn rk4(&self, r: f64, y: [f64; 2], h: f64) -> Result<[f64; 2]> {
        let add = |y: [f64; 2], k: [f64; 2], s: f64| [y[0] + s * k[0], y[1] + s * k[1]];
        let k1 = self.eval(r, y)?;
        let k2 = self.eval(r + 0.5 * h, add(y, k1, 0.5 * h))?;
        let k3 = self.eval(r + 0.5 * h, add(y, k2, 0.5 * h))?;
        let k4 = self.eval(r + h, add(y, k3, h))?;
        Ok([
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ])
    }
}

/// Integrates the radial equation from `u(0) = u0`, `u′(0) = 0` to `r_max`.
///
/// The first node after the origin comes from the Taylor start
/// `u ≈ u0 + ½u″(0)r²` at `r_s = 10⁻⁴ L`, with `L = (u0/|u″(0)|)^{1/2}`.
/// Integration stops with an error when the cone margin drops below
/// [`CONE_STOP`], when `u` loses positivity, or when the step underflows.
pub fn shoot(
    u0: f64,
    n: usize,
    k: usize,
    r_max: f64,
    control: StepControl,
) -> Result<RadialProfile> {
    check_nk(n, k)?;
    if !(u0 > 0.0 && u0.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "u0 = {u0} must be positive"
        )));
    }
    if !(r_max > 0.0 && r_max.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "r_max = {r_max} must be positive"
        )));
    }
    let sys = Rhs { n, k, rhs: 1.0 };
    let (u2_0, _) = solve_for_u2(u0, 0.0, 0.0, n, k, 1.0)?;
    let length = (u0 / u2_0.abs()).sqrt();
    let r_start = (1e-4 * length).min(0.5 * r_max);

    let mut mesh = vec![0.0];
    let mut values = vec![u0];
    let mut derivs = vec![0.0];
    let mut second = vec![u2_0];
    let mut push = |r: f64, y: [f64; 2]| -> Result<()> {
        let (u2, margin) = solve_for_u2(y[0], y[1], r, n, k, 1.0)?;
        if margin < CONE_STOP {
            return Err(Error::ConeBoundary { r, margin });
        }
        mesh.push(r);
        values.push(y[0]);
        derivs.push(y[1]);
        second.push(u2);
        Ok(())
    };

    let mut r = r_start;
    let mut y = [u0 + 0.5 * u2_0 * r * r, u2_0 * r];
    push(r, y)?;

    match control {
        StepControl::Fixed { h } => {
            if !(h > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "step h = {h:e} must be positive"
                )));
            }
            if r_max / h > MAX_FIXED_STEPS {
                return Err(Error::InvalidParameter(format!(
                    "step h = {h:e} needs more than {MAX_FIXED_STEPS:e} steps"
                )));
            }
            while r < r_max {
                let step = h.min(r_max - r);
                y = sys.rk4(r, y, step)?;
                r = if r_max - r <= h { r_max } else { r + step };
                push(r, y)?;
            }
        }
        StepControl::Adaptive { rtol, atol } => {
            if !(rtol > 0.0) || atol < 0.0 {
                return Err(Error::InvalidParameter(
                    "tolerances must be positive".into(),
                ));
            }
            let h_min = 1e-14 * r_max.max(length);
            let mut h = 1e-2 * length;
            while r < r_max {
                let mut step = h.min(r_max - r);
                if step < h_min && r_max - r > h_min {
                    return Err(Error::StepUnderflow { r });
                }
                let full = sys.rk4(r, y, step);
                let half = sys
                    .rk4(r, y, 0.5 * step)
                    .and_then(|mid| sys.rk4(r + 0.5 * step, mid, 0.5 * step));
                let (full, fine) = match (full, half) {
                    (Ok(a), Ok(b)) => (a, b),
                    // a stage left the admissible set: retry with a smaller step
                    (Err(e), _) | (_, Err(e)) => {
                        if step <= h_min {
                            return Err(e);
                        }
                        h = 0.25 * step;
                        continue;
                    }
                };
                let err = (0..2)
                    .map(|i| (fine[i] - full[i]).abs() / (15.0 * (atol + rtol * fine[i].abs())))
                    .fold(0.0f64, f64::max);
                if err <= 1.0 {
                    let landing = r_max - r <= step;
                    r = if landing { r_max } else { r + step };
                    y = fine;
                    push(r, y)?;
                }
                let factor = if err == 0.0 {
                    4.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 4.0)
                };
                step *= factor;
                h = step;
            }
        }
    }
    RadialProfile::new(n, k, mesh, values, derivs, second)
}

/// A [`RadialProfile`] extended to a field on the ball of radius `r_max`:
/// cubic Hermite in `u`, linear in `u″`, exact at nodes.
#[derive(Debug, Clone)]
pub struct ProfileField {
    profile: Arc<RadialProfile>,
}

impl ProfileField {
    pub fn new(profile: Arc<RadialProfile>) -> Self {
        Self { profile }
    }

    /// `(u, u′, u″)` at radius `r`.
    pub fn radial(&self, r: f64) -> (f64, f64, f64) {
        let p = &self.profile;
        let i = p.mesh.partition_point(|&m| m < r);
        let node = |j: usize| (p.values[j], p.derivs[j], p.second[j]);
        if i < p.mesh.len() && (p.mesh[i] - r).abs() <= 1e-12 * p.mesh[i] {
            return node(i);
        }
        if i > 0 && (r - p.mesh[i - 1]).abs() <= 1e-12 * p.mesh[i - 1] {
            return node(i - 1);
        }
        if i == 0 {
            return node(0);
        }
        let i = i.min(p.mesh.len() - 1);
        let (r0, r1) = (p.mesh[i - 1], p.mesh[i]);
        let h = r1 - r0;
        let s = (r - r0) / h;
        let (u0, d0, s0) = node(i - 1);
        let (u1, d1, s1) = node(i);
        let h00 = 2.0 * s * s * s - 3.0 * s * s + 1.0;
        let h10 = s * s * s - 2.0 * s * s + s;
        let h01 = -2.0 * s * s * s + 3.0 * s * s;
        let h11 = s * s * s - s * s;
        let u = h00 * u0 + h10 * h * d0 + h01 * u1 + h11 * h * d1;
        let du = ((6.0 * s * s - 6.0 * s) * u0
            + (3.0 * s * s - 4.0 * s + 1.0) * h * d0
            + (-6.0 * s * s + 6.0 * s) * u1
            + (3.0 * s * s - 2.0 * s) * h * d1)
            / h;
        (u, du, (1.0 - s) * s0 + s * s1)
    }
}

/// Full jet of a radial function from `(u, u′, u″)` at `x`.
pub fn radial_jet(x: &DVector<f64>, u: f64, du: f64, d2u: f64) -> Result<Jet2> {
    let n = x.len();
    let r = x.norm();
    if r == 0.0 {
        return Jet2::new(
            x.clone(),
            u,
            DVector::zeros(n),
            DMatrix::identity(n, n) * d2u,
        );
    }
    let xh = x / r;
    let outer = &xh * xh.transpose();
    let hess = &outer * d2u + (DMatrix::identity(n, n) - &outer) * (du / r);
    Jet2::new(x.clone(), u, &xh * du, hess)
}

impl ScalarField for ProfileField {
    fn dim(&self) -> usize {
        self.profile.n
    }

    fn domain(&self) -> Domain {
        Domain::Ball {
            center: DVector::zeros(self.profile.n),
            radius: self.profile.r_max(),
        }
    }

    fn jet(&self, x: &DVector<f64>) -> Result<Jet2> {
        check_input(self.profile.n, &self.domain(), x)?;
        let (u, du, d2u) = self.radial(x.norm());
        radial_jet(x, u, du, d2u)
    }

    fn tag(&self) -> Option<String> {
        Some("radial-profile".into())
    }
}

/// Tail evidence for regularity at infinity.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TailEvidence {
    /// The mesh does not reach far enough past the bubble's core scale
    /// (`a · r_max <` [`MIN_TAIL`]).
    InsufficientTail {
        a_times_rmax: f64,
    },
    Probe(KelvinReport),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiouvilleReport {
    /// Scale fitted to the profile's shape, see [`fit_scale`].
    pub fitted_a: f64,
    /// Scale predicted by the peak value, `(u(0)/c(n,k))^{2/(n−2)}`.
    pub law_a: f64,
    pub max_rel_deviation: f64,
    pub worst_r: f64,
    pub tail: TailEvidence,
}

/// Minimum `a · r_max` before the Kelvin probe is attempted. The bubble's
/// measure at the innermost probe radius is `1/(1 + a²r_max²)`, below the
/// probe threshold only once `a · r_max > 32`.
pub const MIN_TAIL: f64 = 40.0;

/// Least-squares bubble scale from the profile shape alone. A centered
/// bubble satisfies `(u(0)/u(r))^{2/(n−2)} − 1 = a² r²`; the fit uses nodes
/// with `u ≥ u(0)/20`.
pub fn fit_scale(profile: &RadialProfile) -> Result<f64> {
    let m = (profile.n as f64 - 2.0) / 2.0;
    let u0 = profile.values[0];
    let (mut num, mut den) = (0.0, 0.0);
    for (&r, &u) in profile.mesh.iter().zip(&profile.values).skip(1) {
        if u < 0.05 * u0 {
            break;
        }
        let y = (u0 / u).powf(1.0 / m) - 1.0;
        num += y * r * r;
        den += r.powi(4);
    }
    if !(num > 0.0 && den > 0.0) {
        return Err(Error::InvalidParameter(
            "profile has no decay to fit a bubble scale".into(),
        ));
    }
    Ok((num / den).sqrt())
}

/// Compares a profile with the bubble that has the same `u(0)`, and probes the
/// tail through the Kelvin transform at mesh nodes in `[r_max/4, r_max]`.
pub fn liouville_report(profile: &RadialProfile) -> Result<LiouvilleReport> {
    let (n, k) = (profile.n, profile.k);
    let law_a = BubbleSpec::scale_for_peak(n, k, profile.values[0])?;
    let fitted_a = fit_scale(profile)?;
    let bubble = BubbleSpec::centered(n, k, law_a)?;
    let mut max_rel_deviation = 0.0;
    let mut worst_r = 0.0;
    for (&r, &u) in profile.mesh.iter().zip(&profile.values) {
        let b = bubble.profile(r);
        let dev = (u - b).abs() / b;
        if dev > max_rel_deviation {
            max_rel_deviation = dev;
            worst_r = r;
        }
    }
    let r_max = profile.r_max();
    let reach = law_a * r_max;
    let tail_nodes: Vec<f64> = profile
        .mesh
        .iter()
        .copied()
        .filter(|&r| r >= 0.25 * r_max)
        .collect();
    let tail = if reach < MIN_TAIL || tail_nodes.len() < 3 {
        TailEvidence::InsufficientTail {
            a_times_rmax: reach,
        }
    } else {
        let picks = 8.min(tail_nodes.len());
        let radii: Vec<f64> = (0..picks)
            .map(|j| 1.0 / tail_nodes[j * (tail_nodes.len() - 1) / (picks - 1)])
            .collect();
        let field: FieldRef = Arc::new(ProfileField::new(Arc::new(profile.clone())));
        TailEvidence::Probe(kelvin_regularity_probe(field, &radii)?)
    };
    Ok(LiouvilleReport {
        fitted_a,
        law_a,
        max_rel_deviation,
        worst_r,
        tail,
    })
}
