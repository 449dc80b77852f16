//! Möbius transformations of `R^n ∪ {∞}` as words in the generators
//! translation, rotation, dilation and the unit inversion `x ↦ x/|x|²`.
//!
//! A word `[a_1, …, a_m]` is the map `x ↦ a_m(⋯ a_1(x))`. Jets of
//! `u_ψ = |J_ψ|^{(n−2)/(2n)} (u∘ψ)` are pulled back one atom at a time using
//! `u_{β∘α} = (u_β)_α`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::Jet2;
use crate::error::{Error, Result};

/// One generator of the Möbius group.
#[derive(Debug, Clone, PartialEq)]
pub enum MobiusAtom {
    Translate(DVector<f64>),
    Rotate(DMatrix<f64>),
    Dilate(f64),
    Invert,
}

impl MobiusAtom {
    fn dim(&self) -> Option<usize> {
        match self {
            MobiusAtom::Translate(b) => Some(b.len()),
            MobiusAtom::Rotate(o) => Some(o.nrows()),
            _ => None,
        }
    }

    fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(match self {
            MobiusAtom::Translate(b) => x + b,
            MobiusAtom::Rotate(o) => o * x,
            MobiusAtom::Dilate(s) => x * *s,
            MobiusAtom::Invert => {
                let rho = x.norm_squared();
                if !(rho >= f64::MIN_POSITIVE) {
                    return Err(Error::InversionPole);
                }
                x / rho
            }
        })
    }

    /// `|det Dψ|` of this atom at `x`.
    fn jacobian(&self, x: &DVector<f64>) -> f64 {
        let n = x.len() as i32;
        match self {
            MobiusAtom::Translate(_) | MobiusAtom::Rotate(_) => 1.0,
            MobiusAtom::Dilate(s) => s.powi(n),
            MobiusAtom::Invert => x.norm_squared().powi(-n),
        }
    }

    /// Jet of `f_a(x) = |J_a(x)|^{(n−2)/(2n)} f(a(x))` at `x`, from the jet of
    /// `f` at `a(x)`.
    fn pull_back(&self, x: &DVector<f64>, image: &Jet2) -> Result<Jet2> {
        let n = x.len();
        let m = (n as f64 - 2.0) / 2.0;
        let (u, grad, hess) = match self {
            MobiusAtom::Translate(_) => (image.u, image.grad.clone(), image.hess.clone()),
            MobiusAtom::Rotate(o) => {
                let ot = o.transpose();
                (image.u, &ot * &image.grad, &ot * &image.hess * o)
            }
            MobiusAtom::Dilate(s) => {
                let f = s.powf(m);
                (
                    f * image.u,
                    &image.grad * (f * s),
                    &image.hess * (f * s * s),
                )
            }
            MobiusAtom::Invert => {
                let rho = x.norm_squared();
                if !(rho >= f64::MIN_POSITIVE) {
                    return Err(Error::InversionPole);
                }
                let eye = DMatrix::<f64>::identity(n, n);
                let xxt = x * x.transpose();
                // Dy for y = x/ρ, symmetric
                let dy = (&eye - &xxt * (2.0 / rho)) / rho;
                let phi = rho.powf(-m);
                let dphi = x * (-2.0 * m * rho.powf(-m - 1.0));
                let ddphi = &eye * (-2.0 * m * rho.powf(-m - 1.0))
                    + &xxt * (4.0 * m * (m + 1.0) * rho.powf(-m - 2.0));
                let g = &image.grad;
                let grad_f = &dy * g;
                let gx = g.dot(x);
                let second = (g * x.transpose() + x * g.transpose() + &eye * gx)
                    * (-2.0 / (rho * rho))
                    + &xxt * (8.0 * gx / (rho * rho * rho));
                let hess_f = &dy * &image.hess * &dy + second;
                let u = phi * image.u;
                let grad = &dphi * image.u + &grad_f * phi;
                let hess = &ddphi * image.u
                    + &dphi * grad_f.transpose()
                    + &grad_f * dphi.transpose()
                    + hess_f * phi;
                (u, grad, hess)
            }
        };
        Jet2::new(x.clone(), u, grad, hess)
    }
}

/// A Möbius transformation as a composition word.
#[derive(Debug, Clone, PartialEq)]
pub struct MobiusMap {
    n: usize,
    word: Vec<MobiusAtom>,
}

impl MobiusMap {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            word: Vec::new(),
        }
    }

    pub fn new(n: usize, word: Vec<MobiusAtom>) -> Result<Self> {
        for atom in &word {
            if let Some(d) = atom.dim() {
                if d != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        actual: d,
                    });
                }
            }
            match atom {
                MobiusAtom::Rotate(o) => {
                    let defect = (o.transpose() * o - DMatrix::<f64>::identity(n, n)).amax();
                    if defect > 1e-12 {
                        return Err(Error::InvalidParameter(format!(
                            "rotation is not orthogonal (defect {defect:e})"
                        )));
                    }
                }
                MobiusAtom::Dilate(s) if !(*s > 0.0 && s.is_finite()) => {
                    return Err(Error::InvalidParameter(format!(
                        "dilation scale {s} must be positive"
                    )));
                }
                _ => {}
            }
        }
        Ok(Self { n, word })
    }

    pub fn inversion(n: usize) -> Self {
        Self {
            n,
            word: vec![MobiusAtom::Invert],
        }
    }

    pub fn dilation(n: usize, s: f64) -> Result<Self> {
        Self::new(n, vec![MobiusAtom::Dilate(s)])
    }

    pub fn translation(b: DVector<f64>) -> Self {
        Self {
            n: b.len(),
            word: vec![MobiusAtom::Translate(b)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn word(&self) -> &[MobiusAtom] {
        &self.word
    }

    /// The map "apply `self`, then `next`".
    pub fn then(&self, next: &MobiusMap) -> MobiusMap {
        let mut word = self.word.clone();
        word.extend(next.word.iter().cloned());
        MobiusMap { n: self.n, word }
    }

    /// `outer ∘ inner`.
    pub fn compose(outer: &MobiusMap, inner: &MobiusMap) -> MobiusMap {
        inner.then(outer)
    }

    fn check_point(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Points `x_0 = x, x_1 = a_1(x_0), …, x_m = ψ(x)`.
    pub fn orbit(&self, x: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
        self.check_point(x)?;
        let mut pts = Vec::with_capacity(self.word.len() + 1);
        pts.push(x.clone());
        for atom in &self.word {
            let next = atom.apply(pts.last().unwrap())?;
            pts.push(next);
        }
        Ok(pts)
    }

    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.orbit(x)?.pop().unwrap())
    }

    /// `|det Dψ(x)|`.
    pub fn jacobian_det(&self, x: &DVector<f64>) -> Result<f64> {
        let pts = self.orbit(x)?;
        Ok(self
            .word
            .iter()
            .zip(&pts)
            .map(|(a, p)| a.jacobian(p))
            .product())
    }

    /// Jet of `u_ψ` at `x`, given a jet evaluator for `u`.
    pub fn pull_back_jet<F>(&self, x: &DVector<f64>, eval: F) -> Result<Jet2>
    where
        F: FnOnce(&DVector<f64>) -> Result<Jet2>,
    {
        let pts = self.orbit(x)?;
        let mut jet = eval(pts.last().unwrap())?;
        for (atom, p) in self.word.iter().zip(&pts).rev() {
            jet = atom.pull_back(p, &jet)?;
        }
        Ok(jet)
    }

    /// Random rotation built from Givens rotations in every coordinate plane.
    pub fn random_rotation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
        let mut o = DMatrix::<f64>::identity(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let theta: f64 = rng.gen_range(0.0..2.0 * PI);
                let (s, c) = theta.sin_cos();
                let mut g = DMatrix::<f64>::identity(n, n);
                g[(i, i)] = c;
                g[(j, j)] = c;
                g[(i, j)] = -s;
                g[(j, i)] = s;
                o = g * o;
            }
        }
        o
    }

    /// Random word of `len` atoms with translations in `[−1, 1]^n`, scales in
    /// `[0.5, 2]`, random rotations, and inversions.
    pub fn random<R: Rng + ?Sized>(n: usize, len: usize, rng: &mut R) -> MobiusMap {
        let word = (0..len)
            .map(|_| match rng.gen_range(0..4) {
                0 => MobiusAtom::Translate(DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))),
                1 => MobiusAtom::Rotate(Self::random_rotation(n, rng)),
                2 => MobiusAtom::Dilate(rng.gen_range(0.5..2.0)),
                _ => MobiusAtom::Invert,
            })
            .collect();
        MobiusMap { n, word }
    }
}
