//! Deterministic sample sets: Halton points and the log-radial clouds used
//! by residual checks.

use nalgebra::DVector;

/// The first `count` primes, by trial division.
fn first_primes(count: usize) -> Vec<u64> {
    let mut primes: Vec<u64> = Vec::with_capacity(count);
    let mut c = 2u64;
    while primes.len() < count {
        if primes
            .iter()
            .take_while(|&&p| p * p <= c)
            .all(|&p| !c.is_multiple_of(p))
        {
            primes.push(c);
        }
        c += 1;
    }
    primes
}

/// Radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += (index % base) as f64 * f;
        index /= base;
        f *= inv;
    }
    r
}

/// The `index`-th Halton point in `[0, 1)^dim`.
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    first_primes(dim)
        .into_iter()
        .map(|p| radical_inverse(index, p))
        .collect()
}

/// `count` Halton points, skipping the first `skip` (index 0 is the origin).
pub fn halton_points(dim: usize, count: usize, skip: u64) -> Vec<Vec<f64>> {
    let primes = first_primes(dim);
    (0..count as u64)
        .map(|i| {
            primes
                .iter()
                .map(|&p| radical_inverse(i + skip, p))
                .collect()
        })
        .collect()
}

/// Halton points in the cube `center + [−half, half]^n`.
pub fn halton_box(center: &DVector<f64>, half: f64, count: usize) -> Vec<DVector<f64>> {
    let n = center.len();
    halton_points(n, count, 1)
        .into_iter()
        .map(|h| DVector::from_fn(n, |i, _| center[i] + half * (2.0 * h[i] - 1.0)))
        .collect()
}

/// Points `center + r·θ` with `log10 r` uniform in `[log10 r_min, log10 r_max]`
/// and direction `θ` from the remaining Halton coordinates, projected from
/// the cube onto the sphere.
pub fn halton_log_radial(
    center: &DVector<f64>,
    r_min: f64,
    r_max: f64,
    count: usize,
) -> Vec<DVector<f64>> {
    let n = center.len();
    let (lo, hi) = (r_min.log10(), r_max.log10());
    halton_points(n + 1, count, 1)
        .into_iter()
        .map(|h| {
            let r = 10f64.powf(lo + (hi - lo) * h[0]);
            let mut dir = DVector::from_fn(n, |i, _| 2.0 * h[i + 1] - 1.0);
            let norm = dir.norm();
            if norm < 1e-3 {
                dir = DVector::zeros(n);
                dir[0] = 1.0;
            } else {
                dir /= norm;
            }
            center + dir * r
        })
        .collect()
}
