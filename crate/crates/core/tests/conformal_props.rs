mod common;

use std::sync::Arc;

use common::{bubble_ad, schouten_via_w, sorted_eigs, sum_sq, Ad};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sigmak_core::bubbles::{bubble_field, BubbleSpec};
use sigmak_core::conformal::{
    geometric_radii, kelvin_regularity_probe, schouten_flat, transform_field, FieldRef, Jet2,
    MobiusAtom, MobiusMap, OscillatoryField, PolyGaussField, ScalarField,
};

fn poly_gauss_ad(f: &PolyGaussField, x: &DVector<f64>) -> Ad {
    let vars = Ad::variables(x);
    let dp: Vec<Ad> = vars
        .iter()
        .enumerate()
        .map(|(i, v)| v.shift(-f.p[i]))
        .collect();
    let dq: Vec<Ad> = vars
        .iter()
        .enumerate()
        .map(|(i, v)| v.shift(-f.q[i]))
        .collect();
    let gauss = sum_sq(&dq)
        .scale(-1.0 / (f.width * f.width))
        .exp()
        .scale(f.beta);
    sum_sq(&dp).scale(f.alpha).shift(f.base) + gauss
}

fn assert_jet_close(jet: &Jet2, ad: &Ad, tol: f64) {
    let scale = 1.0 + ad.v.abs();
    assert!((jet.u - ad.v).abs() <= tol * scale);
    assert!((&jet.grad - &ad.g).amax() <= tol * (scale + ad.g.amax()));
    assert!((&jet.hess - &ad.h).amax() <= tol * (scale + ad.h.amax()));
}

/// Whether every inversion in the word sees a point well away from its pole.
fn clear_of_poles(psi: &MobiusMap, x: &DVector<f64>, min_norm: f64) -> bool {
    let Ok(orbit) = psi.orbit(x) else {
        return false;
    };
    psi.word()
        .iter()
        .zip(&orbit)
        .all(|(atom, p)| !matches!(atom, MobiusAtom::Invert) || p.norm() > min_norm)
}

#[test]
fn poly_gauss_jet_matches_ad() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in 3..=6 {
        for _ in 0..10 {
            let f = PolyGaussField::random(n, &mut rng);
            let x = DVector::from_fn(n, |i, _| 0.3 * i as f64 - 0.7);
            assert_jet_close(&f.jet(&x).unwrap(), &poly_gauss_ad(&f, &x), 1e-12);
        }
    }
}

#[test]
fn bubble_jet_matches_ad() {
    for n in 3..=6 {
        for k in 1..=n {
            let center = DVector::from_fn(n, |i, _| 0.1 * i as f64);
            let spec = BubbleSpec::new(n, k, 1.7, center.clone()).unwrap();
            let f = bubble_field(&spec);
            for x in [
                DVector::zeros(n),
                DVector::from_element(n, 0.6),
                DVector::from_fn(n, |i, _| -(i as f64)),
            ] {
                assert_jet_close(
                    &f.jet(&x).unwrap(),
                    &bubble_ad(n, k, 1.7, &center, &x),
                    1e-12,
                );
            }
        }
    }
}

#[test]
fn schouten_matches_w_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 3..=6 {
        for _ in 0..10 {
            let f = PolyGaussField::random(n, &mut rng);
            let x = DVector::from_fn(n, |i, _| 0.5 - 0.2 * i as f64);
            let ours = schouten_flat(&f.jet(&x).unwrap()).unwrap();
            let oracle = schouten_via_w(n, &poly_gauss_ad(&f, &x));
            assert!((ours.matrix() - &oracle).amax() <= 1e-12 * (1.0 + oracle.amax()));
        }
    }
}

#[test]
fn constant_multiple_rescales_schouten() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 5;
    let f = PolyGaussField::random(n, &mut rng);
    let x = DVector::from_element(n, 0.2);
    let jet = f.jet(&x).unwrap();
    let mu = 3.0;
    let scaled = Jet2::new(x.clone(), mu * jet.u, &jet.grad * mu, &jet.hess * mu).unwrap();
    let a = schouten_flat(&jet).unwrap();
    let b = schouten_flat(&scaled).unwrap();
    let factor = mu.powf(-4.0 / (n as f64 - 2.0));
    assert!((b.matrix() - a.matrix() * factor).amax() < 1e-12);
}

fn invariance_defect(n: usize, seed: u64, word_len: usize) -> Option<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u: FieldRef = Arc::new(PolyGaussField::random(n, &mut rng));
    let psi = MobiusMap::random(n, word_len, &mut rng);
    let x = DVector::from_fn(n, |_, _| rand::Rng::gen_range(&mut rng, -1.5..1.5));
    if !clear_of_poles(&psi, &x, 0.05) {
        return None;
    }
    let pulled = transform_field(Arc::clone(&u), &psi).unwrap();
    let lhs = sorted_eigs(schouten_flat(&pulled.jet(&x).unwrap()).unwrap().matrix());
    let rhs = sorted_eigs(
        schouten_flat(&u.jet(&psi.apply(&x).unwrap()).unwrap())
            .unwrap()
            .matrix(),
    );
    Some(common::max_abs_diff(&lhs, &rhs) / (1.0 + rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn spectra_are_mobius_invariant(n in 3usize..=5, seed in any::<u64>(), len in 1usize..=6) {
        if let Some(defect) = invariance_defect(n, seed, len) {
            prop_assert!(defect < 1e-9, "defect {}", defect);
        }
    }

    #[test]
    fn composition_matches_nested_pullback(n in 3usize..=5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u: FieldRef = Arc::new(PolyGaussField::random(n, &mut rng));
        let beta = MobiusMap::random(n, 3, &mut rng);
        let alpha = MobiusMap::random(n, 3, &mut rng);
        let x = DVector::from_fn(n, |_, _| rand::Rng::gen_range(&mut rng, -1.0..1.0));
        let both = MobiusMap::compose(&beta, &alpha);
        prop_assume!(clear_of_poles(&both, &x, 0.05));
        let nested = transform_field(Arc::new(transform_field(Arc::clone(&u), &beta).unwrap()), &alpha).unwrap();
        let direct = transform_field(u, &both).unwrap();
        let a = nested.jet(&x).unwrap();
        let b = direct.jet(&x).unwrap();
        let tol = 1e-9 * (1.0 + b.u.abs() + b.grad.amax() + b.hess.amax());
        prop_assert!((a.u - b.u).abs() < tol);
        prop_assert!((&a.grad - &b.grad).amax() < tol);
        prop_assert!((&a.hess - &b.hess).amax() < tol);
    }

    #[test]
    fn inversion_is_an_involution_on_fields(n in 3usize..=5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u: FieldRef = Arc::new(PolyGaussField::random(n, &mut rng));
        let inv = MobiusMap::inversion(n);
        let twice = transform_field(Arc::new(transform_field(Arc::clone(&u), &inv).unwrap()), &inv).unwrap();
        let x = DVector::from_fn(n, |_, _| rand::Rng::gen_range(&mut rng, 0.3..1.5));
        let a = twice.jet(&x).unwrap();
        let b = u.jet(&x).unwrap();
        prop_assert!((a.u - b.u).abs() < 1e-12 * (1.0 + b.u));
        prop_assert!((&a.hess - &b.hess).amax() < 1e-9 * (1.0 + b.hess.amax()));
    }
}

#[test]
fn bubble_images_are_bubbles() {
    // the pullback of a bubble by any Möbius map still solves the equation
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 3..=5 {
        let u: FieldRef = Arc::new(bubble_field(
            &BubbleSpec::centered(n, 2.min(n), 0.8).unwrap(),
        ));
        for _ in 0..5 {
            let psi = MobiusMap::random(n, 4, &mut rng);
            let x = DVector::from_element(n, 0.37);
            if !clear_of_poles(&psi, &x, 0.05) {
                continue;
            }
            let pulled = transform_field(Arc::clone(&u), &psi).unwrap();
            let ev = sorted_eigs(schouten_flat(&pulled.jet(&x).unwrap()).unwrap().matrix());
            let expect = sigmak_core::bubbles::bubble_eigenvalue(n, 2);
            assert!(ev.iter().all(|e| (e - expect).abs() < 1e-9), "{ev:?}");
        }
    }
}

#[test]
fn kelvin_probe_separates_regular_from_oscillating() {
    let bubble: FieldRef = Arc::new(bubble_field(&BubbleSpec::centered(4, 2, 1.0).unwrap()));
    let rep = kelvin_regularity_probe(bubble, &geometric_radii(0.1, 0.5, 8)).unwrap();
    assert!(rep.plausibly_regular, "{rep:?}");
    let bad: FieldRef = Arc::new(OscillatoryField { n: 4, amp: 0.5 });
    let rep = kelvin_regularity_probe(bad, &geometric_radii(0.1, 0.5, 8)).unwrap();
    assert!(!rep.plausibly_regular);
}
