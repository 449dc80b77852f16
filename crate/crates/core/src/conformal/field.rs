//! Positive scalar fields with analytic 2-jets.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{Jet2, MobiusMap};
use crate::error::{fmt_point, Error, Result};

/// Where a field is defined.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Everywhere,
    /// `R^n` minus one point.
    Punctured {
        center: DVector<f64>,
    },
    /// Closed ball.
    Ball {
        center: DVector<f64>,
        radius: f64,
    },
    /// Complement of the closed ball.
    Exterior {
        center: DVector<f64>,
        radius: f64,
    },
    /// Pull-back of another field's domain; checked at evaluation.
    Pullback,
}

impl Domain {
    pub fn contains(&self, x: &DVector<f64>) -> bool {
        match self {
            Domain::Everywhere | Domain::Pullback => true,
            Domain::Punctured { center } => (x - center).norm_squared() > 0.0,
            Domain::Ball { center, radius } => (x - center).norm() <= radius * (1.0 + 1e-12),
            Domain::Exterior { center, radius } => (x - center).norm() > *radius,
        }
    }
}

/// A positive `C²` field evaluated through its 2-jet. Implementations must be
/// callable concurrently.
pub trait ScalarField: Send + Sync {
    fn dim(&self) -> usize;

    fn domain(&self) -> Domain;

    /// 2-jet at `x`; errors outside the domain or where `u ≤ 0`.
    fn jet(&self, x: &DVector<f64>) -> Result<Jet2>;

    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.jet(x)?.u)
    }

    /// Name of the closed form, when there is one.
    fn tag(&self) -> Option<String> {
        None
    }
}

pub type FieldRef = Arc<dyn ScalarField>;

pub(crate) fn check_input(n: usize, domain: &Domain, x: &DVector<f64>) -> Result<()> {
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: x.len(),
        });
    }
    if !domain.contains(x) {
        return Err(Error::OutsideDomain(fmt_point(x.as_slice())));
    }
    Ok(())
}

/// `u ≡ value`.
#[derive(Debug, Clone)]
pub struct ConstantField {
    pub n: usize,
    pub value: f64,
}

impl ScalarField for ConstantField {
    fn dim(&self) -> usize {
        self.n
    }
    fn domain(&self) -> Domain {
        Domain::Everywhere
    }
    fn jet(&self, x: &DVector<f64>) -> Result<Jet2> {
        check_input(self.n, &Domain::Everywhere, x)?;
        Jet2::new(
            x.clone(),
            self.value,
            DVector::zeros(self.n),
            DMatrix::zeros(self.n, self.n),
        )
    }
    fn tag(&self) -> Option<String> {
        Some(format!("constant({})", self.value))
    }
}

/// `u(x) = scale · |x − center|^{2−n}`, the fundamental solution.
#[derive(Debug, Clone)]
pub struct PowerField {
    pub center: DVector<f64>,
    pub scale: f64,
}

impl ScalarField for PowerField {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn domain(&self) -> Domain {
        Domain::Punctured {
            center: self.center.clone(),
        }
    }
    fn jet(&self, x: &DVector<f64>) -> Result<Jet2> {
        let n = self.dim();
        check_input(n, &self.domain(), x)?;
        let m = (n as f64 - 2.0) / 2.0;
        let d = x - &self.center;
        let rho = d.norm_squared();
        let u = self.scale * rho.powf(-m);
        let grad = &d * (-2.0 * m * u / rho);
        let hess = (DMatrix::identity(n, n) - &d * d.transpose() * ((2.0 * m + 2.0) / rho))
            * (-2.0 * m * u / rho);
        Jet2::new(x.clone(), u, grad, hess)
    }
    fn tag(&self) -> Option<String> {
        Some("fundamental".into())
    }
}

/// `u(x) = base + α|x − p|² + β exp(−|x − q|²/w²)`, positive everywhere.
#[derive(Debug, Clone)]
pub struct PolyGaussField {
    pub base: f64,
    pub alpha: f64,
    pub p: DVector<f64>,
    pub beta: f64,
    pub q: DVector<f64>,
    pub width: f64,
}

impl PolyGaussField {
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self {
            base: rng.gen_range(0.5..2.0),
            alpha: rng.gen_range(0.05..0.5),
            p: DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)),
            beta: rng.gen_range(0.1..1.0),
            q: DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)),
            width: rng.gen_range(0.5..2.0),
        }
    }
}

impl ScalarField for PolyGaussField {
    fn dim(&self) -> usize {
        self.p.len()
    }
    fn domain(&self) -> Domain {
        Domain::Everywhere
    }
    fn jet(&self, x: &DVector<f64>) -> Result<Jet2> {
        let n = self.dim();
        check_input(n, &Domain::Everywhere, x)?;
        let dp = x - &self.p;
        let dq = x - &self.q;
        let w2 = self.width * self.width;
        let e = self.beta * (-dq.norm_squared() / w2).exp();
        let u = self.base + self.alpha * dp.norm_squared() + e;
        let grad = &dp * (2.0 * self.alpha) - &dq * (2.0 * e / w2);
        let eye = DMatrix::<f64>::identity(n, n);
        let hess = &eye * (2.0 * self.alpha)
            + (&dq * dq.transpose() * (4.0 / (w2 * w2)) - &eye * (2.0 / w2)) * e;
        Jet2::new(x.clone(), u, grad, hess)
    }
}

/// `u(x) = |x|^{2−n} (2 + amp · sin |x|²)`; its Kelvin image is
/// `2 + amp · sin(1/|y|²)`, which has no limit at the origin.
#[derive(Debug, Clone)]
pub struct OscillatoryField {
    pub n: usize,
    pub amp: f64,
}

impl ScalarField for OscillatoryField {
    fn dim(&self) -> usize {
        self.n
    }
    fn domain(&self) -> Domain {
        Domain::Punctured {
            center: DVector::zeros(self.n),
        }
    }
    fn jet(&self, x: &DVector<f64>) -> Result<Jet2> {
        check_input(self.n, &self.domain(), x)?;
        let m = (self.n as f64 - 2.0) / 2.0;
        let rho = x.norm_squared();
        let (s, c) = rho.sin_cos();
        let h = 2.0 + self.amp * s;
        let h1 = self.amp * c;
        let h2 = -self.amp * s;
        let p0 = rho.powf(-m);
        let p1 = -m * rho.powf(-m - 1.0);
        let p2 = m * (m + 1.0) * rho.powf(-m - 2.0);
        // u = G(ρ), ∇u = 2G'x, ∇²u = 2G' I + 4G'' x xᵀ
        let g = p0 * h;
        let g1 = p1 * h + p0 * h1;
        let g2 = p2 * h + 2.0 * p1 * h1 + p0 * h2;
        let grad = x * (2.0 * g1);
        let hess =
            DMatrix::<f64>::identity(self.n, self.n) * (2.0 * g1) + x * x.transpose() * (4.0 * g2);
        Jet2::new(x.clone(), g, grad, hess)
    }
}

/// `u_ψ = |J_ψ|^{(n−2)/(2n)} (u∘ψ)`.
#[derive(Clone)]
pub struct TransformedField {
    inner: FieldRef,
    map: MobiusMap,
}

impl TransformedField {
    pub fn inner(&self) -> &FieldRef {
        &self.inner
    }

    pub fn map(&self) -> &MobiusMap {
        &self.map
    }
}

impl ScalarField for TransformedField {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn domain(&self) -> Domain {
        Domain::Pullback
    }
    fn jet(&self, x: &DVector<f64>) -> Result<Jet2> {
        let inner = &self.inner;
        self.map.pull_back_jet(x, |y| inner.jet(y))
    }
    fn tag(&self) -> Option<String> {
        self.inner.tag().map(|t| format!("mobius({t})"))
    }
}

/// Builds `u_ψ`.
pub fn transform_field(u: FieldRef, psi: &MobiusMap) -> Result<TransformedField> {
    if u.dim() != psi.n() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            actual: psi.n(),
        });
    }
    Ok(TransformedField {
        inner: u,
        map: psi.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    /// Central-difference gradient and Hessian of the field's values.
    fn fd_jet(f: &dyn ScalarField, x: &DVector<f64>, h: f64) -> (DVector<f64>, DMatrix<f64>) {
        let n = x.len();
        let val = |y: &DVector<f64>| f.value(y).unwrap();
        let mut g = DVector::zeros(n);
        let mut hm = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut e = DVector::zeros(n);
            e[i] = h;
            g[i] = (val(&(x + &e)) - val(&(x - &e))) / (2.0 * h);
            for j in 0..n {
                let mut e2 = DVector::zeros(n);
                e2[j] = h;
                hm[(i, j)] = (val(&(x + &e + &e2)) - val(&(x + &e - &e2)) - val(&(x - &e + &e2))
                    + val(&(x - &e - &e2)))
                    / (4.0 * h * h);
            }
        }
        (g, hm)
    }

    fn assert_jet_matches_fd(f: &dyn ScalarField, x: &DVector<f64>) {
        let jet = f.jet(x).unwrap();
        let (g, h) = fd_jet(f, x, 1e-4);
        let scale = 1.0 + jet.u.abs() + jet.grad.amax() + jet.hess.amax();
        assert!(
            (&jet.grad - g).amax() <= 1e-5 * scale,
            "gradient mismatch at {x}"
        );
        assert!(
            (&jet.hess - h).amax() <= 1e-5 * scale,
            "hessian mismatch at {x}"
        );
    }

    #[test]
    fn closed_form_jets_match_fd() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for n in 3..=5 {
            let pg = PolyGaussField::random(n, &mut rng);
            let pw = PowerField {
                center: DVector::from_element(n, 0.1),
                scale: 1.7,
            };
            let osc = OscillatoryField { n, amp: 0.5 };
            for _ in 0..10 {
                let x = DVector::from_fn(n, |_, _| rng.gen_range(0.4..1.2));
                assert_jet_matches_fd(&pg, &x);
                assert_jet_matches_fd(&pw, &x);
                assert_jet_matches_fd(&osc, &x);
            }
        }
    }

    #[test]
    fn transformed_jets_match_fd() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let mut checked = 0;
        while checked < 40 {
            let n = 3 + checked % 3;
            let u: FieldRef = Arc::new(PolyGaussField::random(n, &mut rng));
            let psi = MobiusMap::random(n, 1 + checked % 5, &mut rng);
            let x = DVector::from_fn(n, |_, _| rng.gen_range(-1.5..1.5));
            // keep away from poles so the stencil stays smooth
            let Ok(orbit) = psi.orbit(&x) else { continue };
            if orbit.iter().any(|p| p.norm() < 0.3) {
                continue;
            }
            let f = transform_field(u, &psi).unwrap();
            assert_jet_matches_fd(&f, &x);
            checked += 1;
        }
    }

    #[test]
    fn identity_transform_is_noop() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(9);
        let u: FieldRef = Arc::new(PolyGaussField::random(4, &mut rng));
        let f = transform_field(u.clone(), &MobiusMap::identity(4)).unwrap();
        let x = DVector::from_vec(vec![0.2, 0.1, -0.7, 1.0]);
        assert_eq!(f.jet(&x).unwrap(), u.jet(&x).unwrap());
    }

    #[test]
    fn domain_checks() {
        let pw = PowerField {
            center: DVector::zeros(3),
            scale: 1.0,
        };
        assert!(matches!(
            pw.jet(&DVector::zeros(3)),
            Err(Error::OutsideDomain(_))
        ));
        let c = ConstantField { n: 3, value: -1.0 };
        assert!(matches!(
            c.jet(&DVector::zeros(3)),
            Err(Error::NonPositive { .. })
        ));
        assert!(transform_field(Arc::new(pw), &MobiusMap::identity(4)).is_err());
        let ball = Domain::Ball {
            center: DVector::zeros(3),
            radius: 1.0,
        };
        assert!(ball.contains(&DVector::from_vec(vec![1.0, 0.0, 0.0])));
        assert!(!ball.contains(&DVector::from_vec(vec![1.1, 0.0, 0.0])));
    }
}
