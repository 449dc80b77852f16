//! Independent oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use std::ops::{Add, Div, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Second-order forward-mode number: value, gradient and Hessian in `n` inputs.
#[derive(Debug, Clone)]
pub struct Ad {
    pub v: f64,
    pub g: DVector<f64>,
    pub h: DMatrix<f64>,
}

impl Ad {
    pub fn constant(n: usize, v: f64) -> Self {
        Self {
            v,
            g: DVector::zeros(n),
            h: DMatrix::zeros(n, n),
        }
    }

    pub fn variable(n: usize, i: usize, v: f64) -> Self {
        let mut g = DVector::zeros(n);
        g[i] = 1.0;
        Self {
            v,
            g,
            h: DMatrix::zeros(n, n),
        }
    }

    pub fn variables(x: &DVector<f64>) -> Vec<Ad> {
        (0..x.len())
            .map(|i| Ad::variable(x.len(), i, x[i]))
            .collect()
    }

    /// `φ(self)` given `φ, φ′, φ″` at the value.
    fn chain(&self, f: f64, d1: f64, d2: f64) -> Self {
        Self {
            v: f,
            g: &self.g * d1,
            h: &self.h * d1 + &self.g * self.g.transpose() * d2,
        }
    }

    pub fn powf(&self, p: f64) -> Self {
        let v = self.v;
        self.chain(
            v.powf(p),
            p * v.powf(p - 1.0),
            p * (p - 1.0) * v.powf(p - 2.0),
        )
    }

    pub fn exp(&self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn recip(&self) -> Self {
        let v = self.v;
        self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            v: self.v * s,
            g: &self.g * s,
            h: &self.h * s,
        }
    }

    pub fn shift(&self, s: f64) -> Self {
        Self {
            v: self.v + s,
            g: self.g.clone(),
            h: self.h.clone(),
        }
    }
}

impl Add for Ad {
    type Output = Ad;
    fn add(self, o: Ad) -> Ad {
        Ad {
            v: self.v + o.v,
            g: self.g + o.g,
            h: self.h + o.h,
        }
    }
}

impl Sub for Ad {
    type Output = Ad;
    fn sub(self, o: Ad) -> Ad {
        Ad {
            v: self.v - o.v,
            g: self.g - o.g,
            h: self.h - o.h,
        }
    }
}

impl Neg for Ad {
    type Output = Ad;
    fn neg(self) -> Ad {
        self.scale(-1.0)
    }
}

impl Mul for Ad {
    type Output = Ad;
    fn mul(self, o: Ad) -> Ad {
        let cross = &self.g * o.g.transpose();
        Ad {
            v: self.v * o.v,
            g: &self.g * o.v + &o.g * self.v,
            h: &self.h * o.v + &o.h * self.v + &cross + cross.transpose(),
        }
    }
}

impl Div for Ad {
    type Output = Ad;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Ad) -> Ad {
        self * o.recip()
    }
}

pub fn sum_sq(xs: &[Ad]) -> Ad {
    let n = xs[0].g.len();
    xs.iter()
        .fold(Ad::constant(n, 0.0), |acc, x| acc + x.clone() * x.clone())
}

/// Bubble `c (a / (1 + a²|x − x̄|²))^{(n−2)/2}` written directly in `Ad`,
/// with `c` computed from its closed form.
pub fn bubble_ad(n: usize, k: usize, a: f64, center: &DVector<f64>, x: &DVector<f64>) -> Ad {
    let vars = Ad::variables(x);
    let shifted: Vec<Ad> = vars
        .iter()
        .enumerate()
        .map(|(i, v)| v.shift(-center[i]))
        .collect();
    let denom = sum_sq(&shifted).scale(a * a).shift(1.0);
    let m = (n as f64 - 2.0) / 2.0;
    denom.recip().scale(a).powf(m).scale(bubble_constant(n, k))
}

pub fn binom(n: usize, k: usize) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// `2^{(n−2)/4} C(n,k)^{(n−2)/(4k)}`.
pub fn bubble_constant(n: usize, k: usize) -> f64 {
    let e = (n as f64 - 2.0) / 4.0;
    2f64.powf(e) * binom(n, k).powf(e / k as f64)
}

/// `A^u` from `w = u^{−2/(n−2)}` as `w ∇²w − ½ |∇w|² I`, with the jet of `w`
/// obtained by differentiating `w` itself.
pub fn schouten_via_w(n: usize, u: &Ad) -> DMatrix<f64> {
    let w = u.powf(-2.0 / (n as f64 - 2.0));
    &w.h * w.v - DMatrix::identity(n, n) * (0.5 * w.g.norm_squared())
}

pub fn sorted_eigs(m: &DMatrix<f64>) -> Vec<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let mut e: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// `σ_k` by summing products over all `k`-subsets.
pub fn subset_sigma(values: &[f64], k: usize) -> f64 {
    let n = values.len();
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    let mut total = 0.0;
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize == k {
            let mut p = 1.0;
            for (i, v) in values.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    p *= v;
                }
            }
            total += p;
        }
    }
    total
}

/// Membership in the component of `{σ_k > 0}` containing `(1, …, 1)`:
/// `σ_k` stays positive on the segment from `(1, …, 1)` to `λ`.
pub fn segment_in_cone(values: &[f64], k: usize, samples: usize) -> bool {
    (0..=samples).all(|s| {
        let t = s as f64 / samples as f64;
        let p: Vec<f64> = values.iter().map(|&v| (1.0 - t) + t * v).collect();
        subset_sigma(&p, k) > 0.0
    })
}

pub fn random_vector<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

/// Rejection sample of `Γ_k` around `(1, …, 1)`, by the segment oracle.
pub fn sample_gamma_k<R: Rng>(rng: &mut R, n: usize, k: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = random_vector(rng, n, -1.5, 2.5);
        if (1..=k).all(|j| subset_sigma(&v, j) > 1e-6) {
            return v;
        }
    }
}

/// Central-difference gradient.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut p = x.to_vec();
            let mut m = x.to_vec();
            p[i] += h;
            m[i] -= h;
            (f(&p) - f(&m)) / (2.0 * h)
        })
        .collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
