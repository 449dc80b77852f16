//! Radial Dirichlet problem `f_t(λ(A^u)) = rhs` on `[0, R_b]` and homotopy
//! continuation in `t`.
//!
//! Unknowns are nodal values `U_i = u(i h)`, `h = R_b/m`. Interior rows use
//! central differences. Row 0 applies the equation at the origin with the
//! even reflection `U_{−1} = U_1`, which imposes `u′(0) = 0` and gives
//! `u″(0) ≈ 2(U_1 − U_0)/h²`. Row `m` is `U_m − u_b`. The Jacobian is
//! tridiagonal.

use serde::Serialize;

use crate::bubbles::{c_constant, BubbleSpec};
use crate::error::{Error, Result};
use crate::radial::{Coeffs, RadialProfile};
use crate::symfun::{binomial, OperatorSpec};

/// Which normalization of the operator the residual uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualForm {
    /// `f_t − rhs`.
    #[default]
    Polynomial,
    /// `f_t^{1/k} − rhs^{1/k}`.
    KthRoot,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Newton stops once the residual ∞-norm drops below this.
    pub residual: f64,
    pub max_iterations: usize,
    /// Maximal number of halvings of one `t`-step.
    pub max_bisections: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: 1e-10,
            max_iterations: 30,
            max_bisections: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BvpSpec {
    pub n: usize,
    pub k: usize,
    pub t_path: Vec<f64>,
    pub r_b: f64,
    pub u_b: f64,
    pub m: usize,
    /// Right-hand side of the equation, 1 unless stated otherwise.
    pub rhs: f64,
    pub form: ResidualForm,
    pub tolerances: Tolerances,
}

impl BvpSpec {
    pub fn new(n: usize, k: usize, t_path: Vec<f64>, r_b: f64, u_b: f64, m: usize) -> Result<Self> {
        let spec = Self {
            n,
            k,
            t_path,
            r_b,
            u_b,
            m,
            rhs: 1.0,
            form: ResidualForm::Polynomial,
            tolerances: Tolerances::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `steps` uniform intervals from 0 to 1.
    pub fn uniform_path(steps: usize) -> Vec<f64> {
        let steps = steps.max(1);
        (0..=steps).map(|i| i as f64 / steps as f64).collect()
    }

    /// Boundary value taken from the centered bubble with scale `a`.
    pub fn from_bubble(
        n: usize,
        k: usize,
        a: f64,
        r_b: f64,
        m: usize,
        steps: usize,
    ) -> Result<Self> {
        let u_b = BubbleSpec::centered(n, k, a)?.profile(r_b);
        Self::new(n, k, Self::uniform_path(steps), r_b, u_b, m)
    }

    pub fn validate(&self) -> Result<()> {
        OperatorSpec::new(self.n, self.k, 1.0)?;
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.m < 16 {
            return bad(format!("mesh size m = {} < 16", self.m));
        }
        if !(self.r_b > 0.0 && self.r_b.is_finite()) {
            return bad(format!("R_b = {} must be positive", self.r_b));
        }
        if !(self.u_b > 0.0 && self.u_b.is_finite()) {
            return bad(format!("u_b = {} must be positive", self.u_b));
        }
        if !(self.rhs > 0.0 && self.rhs.is_finite()) {
            return bad(format!("rhs = {} must be positive", self.rhs));
        }
        let p = &self.t_path;
        if p.len() < 2
            || p[0] != 0.0
            || *p.last().unwrap() != 1.0
            || p.windows(2).any(|w| !(w[1] > w[0]))
        {
            return bad("t path must increase strictly from 0 to 1".into());
        }
        let tol = &self.tolerances;
        if !(tol.residual > 0.0) || tol.max_iterations == 0 {
            return bad("Newton tolerances must be positive".into());
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        self.r_b / self.m as f64
    }

    pub fn mesh(&self) -> Vec<f64> {
        let h = self.h();
        (0..=self.m)
            .map(|i| if i == self.m { self.r_b } else { i as f64 * h })
            .collect()
    }
}

/// Residual row and its three Jacobian entries at one node.
#[derive(Debug, Clone, Copy)]
struct Row {
    value: f64,
    lower: f64,
    diag: f64,
    upper: f64,
    margin: f64,
    ellipticity: f64,
}

/// Node-local quantities shared by residual and Jacobian.
struct Discrete<'a> {
    spec: &'a BvpSpec,
    op: OperatorSpec,
    c: Coeffs,
    h: f64,
}

impl<'a> Discrete<'a> {
    fn new(spec: &'a BvpSpec, t: f64) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            spec,
            op: OperatorSpec::new(spec.n, spec.k, t)?,
            c: Coeffs::new(spec.n),
            h: spec.h(),
        })
    }

    fn check_values(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.spec.m + 1 {
            return Err(Error::DimensionMismatch {
                expected: self.spec.m + 1,
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|&u| !(u > 0.0 && u.is_finite())) {
            return Err(Error::NonPositive {
                value: values[i],
                location: format!("node {i}"),
            });
        }
        Ok(())
    }

    /// Row `i < m`. `(rad, tan)` and their partials in `(u, u′, u″)` are
    /// pushed through the finite-difference stencil.
    fn row(&self, values: &[f64], i: usize) -> Row {
        let (n, k) = (self.spec.n, self.spec.k);
        let Coeffs {
            alpha,
            beta,
            gamma,
            p,
            q,
        } = self.c;
        let h = self.h;
        let u = values[i];
        let up = u.powf(-p);
        let uq = u.powf(-q);

        // d(rad)/d(U_{i-1}, U_i, U_{i+1}) and likewise for tan
        let (rad, tan, d_rad, d_tan) = if i == 0 {
            let d2 = 2.0 * (values[1] - u) / (h * h);
            let lam = -alpha * up * d2;
            let du = alpha * p * up / u * d2 + alpha * up * 2.0 / (h * h);
            let du1 = -alpha * up * 2.0 / (h * h);
            (lam, lam, [0.0, du, du1], [0.0, du, du1])
        } else {
            let r = i as f64 * h;
            let (um, uf) = (values[i - 1], values[i + 1]);
            let d1 = (uf - um) / (2.0 * h);
            let d2 = (uf - 2.0 * u + um) / (h * h);
            let rad = -alpha * up * d2 + beta * uq * d1 * d1;
            let tan = -alpha * up * d1 / r - gamma * uq * d1 * d1;
            let rad_u = alpha * p * up / u * d2 - beta * q * uq / u * d1 * d1;
            let rad_d1 = 2.0 * beta * uq * d1;
            let rad_d2 = -alpha * up;
            let tan_u = alpha * p * up / u * d1 / r + gamma * q * uq / u * d1 * d1;
            let tan_d1 = -alpha * up / r - 2.0 * gamma * uq * d1;
            let s1 = 1.0 / (2.0 * h);
            let s2 = 1.0 / (h * h);
            (
                rad,
                tan,
                [
                    -rad_d1 * s1 + rad_d2 * s2,
                    rad_u - 2.0 * rad_d2 * s2,
                    rad_d1 * s1 + rad_d2 * s2,
                ],
                [-tan_d1 * s1, tan_u, tan_d1 * s1],
            )
        };

        let mut spectrum = vec![tan; n];
        spectrum[0] = rad;
        let f = self.op.value(&spectrum);
        let g = self.op.gradient(&spectrum);
        let f_rad = g[0];
        let f_tan: f64 = g[1..].iter().sum();
        let ellipticity = g.iter().copied().fold(f64::INFINITY, f64::min);
        let margin = self.op.margin(&spectrum);

        let (value, scale) = match self.spec.form {
            ResidualForm::Polynomial => (f - self.spec.rhs, 1.0),
            ResidualForm::KthRoot => {
                let kf = k as f64;
                let root = f.max(0.0).powf(1.0 / kf);
                (root - self.spec.rhs.powf(1.0 / kf), root / (kf * f))
            }
        };
        let entry = |j: usize| scale * (f_rad * d_rad[j] + f_tan * d_tan[j]);
        Row {
            value,
            lower: entry(0),
            diag: entry(1),
            upper: entry(2),
            margin,
            ellipticity,
        }
    }

    fn rows(&self, values: &[f64]) -> Vec<Row> {
        (0..self.spec.m).map(|i| self.row(values, i)).collect()
    }

    fn boundary(&self, values: &[f64]) -> f64 {
        values[self.spec.m] - self.spec.u_b
    }
}

fn check_profile(profile: &RadialProfile, spec: &BvpSpec) -> Result<()> {
    if profile.n != spec.n || profile.k != spec.k {
        return Err(Error::InvalidParameter(format!(
            "profile is for (n, k) = ({}, {}), spec for ({}, {})",
            profile.n, profile.k, spec.n, spec.k
        )));
    }
    let mesh = spec.mesh();
    if profile.mesh.len() != mesh.len()
        || profile
            .mesh
            .iter()
            .zip(&mesh)
            .any(|(a, b)| (a - b).abs() > 1e-12 * spec.r_b)
    {
        return Err(Error::InvalidParameter(
            "profile mesh does not match the spec mesh".into(),
        ));
    }
    Ok(())
}

/// Residual on nodal values. Errors when a node lies strictly outside the
/// closed cone `(Γ_k)_t`.
pub fn residual_values(values: &[f64], spec: &BvpSpec, t: f64) -> Result<Vec<f64>> {
    let d = Discrete::new(spec, t)?;
    d.check_values(values)?;
    let mut out = Vec::with_capacity(values.len());
    for row in d.rows(values) {
        if row.margin < 0.0 {
            return Err(Error::DomainViolation { margin: row.margin });
        }
        out.push(row.value);
    }
    out.push(d.boundary(values));
    Ok(out)
}

/// Residual of the discrete problem at parameter `t` for a profile on the
/// spec's mesh.
pub fn assemble_residual(profile: &RadialProfile, spec: &BvpSpec, t: f64) -> Result<Vec<f64>> {
    check_profile(profile, spec)?;
    residual_values(&profile.values, spec, t)
}

/// Tridiagonal Jacobian `(lower, diag, upper)` of [`residual_values`];
/// `lower[i]` couples row `i` to node `i − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    /// Thomas algorithm.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let len = self.diag.len();
        let mut c = vec![0.0; len];
        let mut d = vec![0.0; len];
        for i in 0..len {
            let denom = self.diag[i] - if i > 0 { self.lower[i] * c[i - 1] } else { 0.0 };
            if !(denom.abs() > 1e-300) || !denom.is_finite() {
                return Err(Error::SingularJacobian { row: i });
            }
            c[i] = self.upper[i] / denom;
            d[i] = (rhs[i] - if i > 0 { self.lower[i] * d[i - 1] } else { 0.0 }) / denom;
        }
        for i in (0..len.saturating_sub(1)).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }

    /// Dense `i, j` entry.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match j as isize - i as isize {
            -1 => self.lower[i],
            0 => self.diag[i],
            1 => self.upper[i],
            _ => 0.0,
        }
    }
}

pub fn jacobian(values: &[f64], spec: &BvpSpec, t: f64) -> Result<Tridiagonal> {
    let d = Discrete::new(spec, t)?;
    d.check_values(values)?;
    let len = spec.m + 1;
    let mut jac = Tridiagonal {
        lower: vec![0.0; len],
        diag: vec![0.0; len],
        upper: vec![0.0; len],
    };
    for (i, row) in d.rows(values).into_iter().enumerate() {
        if !(row.margin > 0.0) {
            return Err(Error::DomainViolation { margin: row.margin });
        }
        jac.lower[i] = row.lower;
        jac.diag[i] = row.diag;
        jac.upper[i] = row.upper;
    }
    // the origin row has no left neighbour; its reflected coupling is folded into upper
    jac.lower[0] = 0.0;
    jac.diag[len - 1] = 1.0;
    Ok(jac)
}

/// Summary of one Newton solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonStats {
    pub iterations: usize,
    pub residual: f64,
    /// Rounding floor of the residual evaluation, see [`NOISE_FACTOR`].
    pub noise_floor: f64,
    pub cone_margin: f64,
    pub ellipticity: f64,
}

/// Newton also stops once the residual is within this factor of its rounding
/// floor `ε Σ_j |J_ij| |U_j|`. The floor grows like `h⁻²` and exceeds the
/// residual tolerance on fine meshes.
pub const NOISE_FACTOR: f64 = 10.0;

struct State {
    residual: Vec<f64>,
    norm: f64,
    floor: f64,
    margin: f64,
    ellipticity: f64,
}

fn evaluate(d: &Discrete, values: &[f64]) -> Option<State> {
    if d.check_values(values).is_err() {
        return None;
    }
    let rows = d.rows(values);
    let margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    let ellipticity = rows
        .iter()
        .map(|r| r.ellipticity)
        .fold(f64::INFINITY, f64::min);
    if !(margin > 0.0 && ellipticity > 0.0) {
        return None;
    }
    let floor = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let left = if i > 0 {
                r.lower.abs() * values[i - 1]
            } else {
                0.0
            };
            f64::EPSILON * (left + r.diag.abs() * values[i] + r.upper.abs() * values[i + 1])
        })
        .fold(f64::EPSILON * values[values.len() - 1], f64::max);
    let mut residual: Vec<f64> = rows.iter().map(|r| r.value).collect();
    residual.push(d.boundary(values));
    let norm = residual.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    norm.is_finite().then_some(State {
        residual,
        norm,
        floor,
        margin,
        ellipticity,
    })
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
}

/// Damped Newton on the discrete problem at parameter `t`. Every accepted
/// iterate is positive, strictly inside `(Γ_k)_t` at all nodes and has a
/// positive ellipticity certificate.
pub fn newton_solve(
    initial: &RadialProfile,
    spec: &BvpSpec,
    t: f64,
) -> Result<(RadialProfile, NewtonStats)> {
    check_profile(initial, spec)?;
    let d = Discrete::new(spec, t)?;
    let mut values = initial.values.clone();
    d.check_values(&values)?;
    let mut state = match evaluate(&d, &values) {
        Some(s) => s,
        None => {
            let margin = d
                .rows(&values)
                .iter()
                .map(|r| r.margin)
                .fold(f64::INFINITY, f64::min);
            return Err(Error::DomainViolation { margin });
        }
    };
    let tol = spec.tolerances;
    let target = |s: &State| tol.residual.max(NOISE_FACTOR * s.floor);
    let mut iterations = 0;
    while state.norm >= target(&state) {
        if iterations == tol.max_iterations {
            return Err(Error::MaxIterations {
                iterations,
                residual: state.norm,
            });
        }
        iterations += 1;
        let jac = jacobian(&values, spec, t)?;
        let rhs: Vec<f64> = state.residual.iter().map(|r| -r).collect();
        let step = jac.solve(&rhs)?;
        let mut lambda = 1.0;
        let accepted = loop {
            let trial: Vec<f64> = values
                .iter()
                .zip(&step)
                .map(|(u, s)| u + lambda * s)
                .collect();
            if let Some(next) = evaluate(&d, &trial) {
                if next.norm <= (1.0 - 1e-4 * lambda) * state.norm || next.norm < target(&next) {
                    break Some((trial, next));
                }
            }
            lambda *= 0.5;
            if lambda < 1e-9 {
                break None;
            }
        };
        match accepted {
            Some((trial, next)) => {
                let moved = inf_norm(&step) * lambda;
                values = trial;
                state = next;
                // the update is at roundoff level of the solution: nothing left to gain
                if moved <= 1e-15 * inf_norm(&values) && state.norm >= target(&state) {
                    return Err(Error::NoAdmissibleStep {
                        residual: state.norm,
                    });
                }
            }
            None => {
                return Err(Error::NoAdmissibleStep {
                    residual: state.norm,
                })
            }
        }
    }
    let stats = NewtonStats {
        iterations,
        residual: state.norm,
        noise_floor: state.floor,
        cone_margin: state.margin,
        ellipticity: state.ellipticity,
    };
    Ok((
        RadialProfile::from_values(spec.n, spec.k, spec.mesh(), values)?,
        stats,
    ))
}

/// One converged point on the continuation path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub t: f64,
    pub converged: bool,
    pub iters: usize,
    pub residual: f64,
    pub cone_margin: f64,
    pub ellipticity: f64,
    pub noise_floor: f64,
    /// Step halvings spent reaching this `t`.
    pub bisections: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
#[serde(transparent)]
pub struct ContinuationTrace {
    pub records: Vec<TraceRecord>,
}

impl ContinuationTrace {
    pub fn total_bisections(&self) -> usize {
        self.records.iter().map(|r| r.bisections).sum()
    }

    pub fn last_t(&self) -> Option<f64> {
        self.records.last().map(|r| r.t)
    }
}

/// Centered bubble scale `a` with `c(n,k)(a/(1 + a²R²))^{(n−2)/2} = u_b`, on
/// the branch `aR ≥ 1`. Values above the maximum `u_b` the family can attain
/// fall back to `aR = 1`.
pub fn bubble_scale_through(n: usize, k: usize, r_b: f64, u_b: f64) -> Result<f64> {
    let c = c_constant(n, k)?;
    let s = (u_b / c).powf(2.0 / (n as f64 - 2.0));
    let disc = (1.0 - 4.0 * s * s * r_b * r_b).max(0.0);
    Ok((1.0 + disc.sqrt()) / (2.0 * s * r_b * r_b))
}

/// Initial guess at `t = 0`: the bubble through `(R_b, u_b)`. Its spectrum is
/// `C(n,k)^{−1/k} I`, so it solves the `t = 0` equation
/// `C(n,k)(σ_1/n)^k = 1` up to discretization error.
pub fn initial_guess(spec: &BvpSpec) -> Result<RadialProfile> {
    spec.validate()?;
    // rhs ≠ 1 rescales the spectrum: C(n,k)(σ_1/n)^k = rhs
    let lam = (spec.rhs / binomial(spec.n, spec.k)).powf(1.0 / spec.k as f64);
    let ratio = lam * binomial(spec.n, spec.k).powf(1.0 / spec.k as f64);
    // A^{μu} = μ^{−4/(n−2)} A^u
    let mu = ratio.powf(-(spec.n as f64 - 2.0) / 4.0);
    let a = bubble_scale_through(spec.n, spec.k, spec.r_b, spec.u_b / mu)?;
    let bubble = BubbleSpec::centered(spec.n, spec.k, a)?;
    let mesh = spec.mesh();
    let values: Vec<f64> = mesh.iter().map(|&r| mu * bubble.profile(r)).collect();
    RadialProfile::from_values(spec.n, spec.k, mesh, values)
}

/// Marches along `spec.t_path`, warm-starting each Newton solve from the
/// previous solution and halving a failed step up to
/// `tolerances.max_bisections` times.
pub fn continue_path(spec: &BvpSpec) -> Result<(RadialProfile, ContinuationTrace)> {
    spec.validate()?;
    let mut trace = ContinuationTrace::default();
    let guess = initial_guess(spec)?;
    let (mut current, stats) =
        newton_solve(&guess, spec, 0.0).map_err(|_| Error::PathFailure { last_good_t: None })?;
    trace.records.push(record(0.0, stats, 0));

    let mut t_cur = 0.0;
    for &target in &spec.t_path[1..] {
        let mut step = target - t_cur;
        let mut halvings = 0;
        while t_cur < target {
            let t_try = if t_cur + step >= target {
                target
            } else {
                t_cur + step
            };
            match newton_solve(&current, spec, t_try) {
                Ok((next, stats)) => {
                    current = next;
                    t_cur = t_try;
                    trace.records.push(record(t_try, stats, halvings));
                    halvings = 0;
                }
                Err(_) => {
                    halvings += 1;
                    if halvings > spec.tolerances.max_bisections {
                        return Err(Error::PathFailure {
                            last_good_t: Some(t_cur),
                        });
                    }
                    step *= 0.5;
                }
            }
        }
    }
    Ok((current, trace))
}

fn record(t: f64, stats: NewtonStats, bisections: usize) -> TraceRecord {
    TraceRecord {
        t,
        converged: true,
        iters: stats.iterations,
        residual: stats.residual,
        cone_margin: stats.cone_margin,
        ellipticity: stats.ellipticity,
        noise_floor: stats.noise_floor,
        bisections,
    }
}
