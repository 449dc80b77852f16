mod common;

use common::{fd_gradient, segment_in_cone, subset_sigma};
use proptest::prelude::*;
use sigmak_core::symfun::{
    check_concavity, check_ellipticity, cone_margin, elementary_gradient, elementary_symmetric,
    f_homotopy, in_gamma_k, in_gamma_t, sigma, ConeId, EigenVec, OperatorSpec,
};

fn vec_nk() -> impl Strategy<Value = (Vec<f64>, usize)> {
    (3usize..=8).prop_flat_map(|n| (prop::collection::vec(-3.0f64..3.0, n), 1..=n))
}

proptest! {
    #[test]
    fn matches_subset_enumeration((v, k) in vec_nk()) {
        let fast = elementary_symmetric(&v, k);
        let slow = subset_sigma(&v, k);
        let scale: f64 = common::subset_sigma(&v.iter().map(|x| x.abs()).collect::<Vec<_>>(), k);
        prop_assert!((fast - slow).abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn permutation_invariant((v, k) in vec_nk(), seed in any::<u64>()) {
        use rand::{seq::SliceRandom, SeedableRng};
        let mut w = v.clone();
        w.shuffle(&mut rand::rngs::StdRng::seed_from_u64(seed));
        let a = elementary_symmetric(&v, k);
        let b = elementary_symmetric(&w, k);
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn homogeneous_of_degree_k((v, k) in vec_nk(), s in 0.1f64..4.0) {
        let scaled: Vec<f64> = v.iter().map(|x| s * x).collect();
        let a = elementary_symmetric(&scaled, k);
        let b = s.powi(k as i32) * elementary_symmetric(&v, k);
        let bound: f64 = subset_sigma(&scaled.iter().map(|x| x.abs()).collect::<Vec<_>>(), k);
        prop_assert!((a - b).abs() <= 1e-12 * bound.max(1.0));
    }

    #[test]
    fn gradient_matches_fd((v, k) in vec_nk()) {
        let g = elementary_gradient(&v, k);
        let fd = fd_gradient(|x| elementary_symmetric(x, k), &v, 1e-5);
        for (a, b) in g.iter().zip(&fd) {
            prop_assert!((a - b).abs() <= 1e-6 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn cones_are_nested((v, k) in vec_nk()) {
        let n = v.len();
        prop_assume!(k < n);
        if cone_margin(&v, k + 1) > 0.0 {
            prop_assert!(cone_margin(&v, k) > 0.0);
        }
    }

    #[test]
    fn membership_matches_segment_oracle(v in prop::collection::vec(-2.0f64..3.0, 3..=6), k in 1usize..=6) {
        let n = v.len();
        prop_assume!(k <= n);
        let margin = cone_margin(&v, k);
        // stay clear of the boundary, where a sampled segment cannot decide
        prop_assume!(margin.abs() > 1e-3);
        prop_assert_eq!(margin > 0.0, segment_in_cone(&v, k, 400));
    }

    #[test]
    fn gradient_positive_inside(
        (v, k) in (3usize..=8).prop_flat_map(|n| (prop::collection::vec(-0.5f64..3.0, n), 1..=n)),
    ) {
        prop_assume!(cone_margin(&v, k) > 0.0);
        prop_assert!(elementary_gradient(&v, k).iter().all(|&g| g > 0.0));
    }

    #[test]
    fn homotopy_preserves_trace((v, k) in vec_nk(), t in 0.0f64..=1.0) {
        let spec = OperatorSpec::new(v.len(), k, t).unwrap();
        let d = spec.deform(&v);
        let (a, b): (f64, f64) = (v.iter().sum(), d.iter().sum());
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn homotopy_endpoints((v, k) in vec_nk()) {
        let n = v.len();
        let one = OperatorSpec::new(n, k, 1.0).unwrap();
        let zero = OperatorSpec::new(n, k, 0.0).unwrap();
        let s1: f64 = v.iter().sum();
        let exact = elementary_symmetric(&v, k);
        prop_assert!((one.value(&v) - exact).abs() <= 1e-12 * (1.0 + exact.abs()));
        let at_zero = common::binom(n, k) * (s1 / n as f64).powi(k as i32);
        prop_assert!((zero.value(&v) - at_zero).abs() <= 1e-10 * (1.0 + at_zero.abs()));
    }

    #[test]
    fn homotopy_gradient_matches_fd((v, k) in vec_nk(), t in 0.0f64..=1.0) {
        let spec = OperatorSpec::new(v.len(), k, t).unwrap();
        let g = spec.gradient(&v);
        let fd = fd_gradient(|x| spec.value(x), &v, 1e-5);
        for (a, b) in g.iter().zip(&fd) {
            prop_assert!((a - b).abs() <= 1e-6 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn homotopy_elliptic_in_its_cone((v, k) in vec_nk(), t in 0.0f64..=1.0) {
        let spec = OperatorSpec::new(v.len(), k, t).unwrap();
        let lam = EigenVec::new(v.clone()).unwrap();
        prop_assume!(in_gamma_t(&lam, &spec).unwrap().inside);
        prop_assert!(check_ellipticity(&spec, &lam).unwrap() > 0.0);
        prop_assert!(f_homotopy(&lam, &spec).unwrap() > 0.0);
    }

    #[test]
    fn root_is_midpoint_concave(
        a in prop::collection::vec(-1.0f64..3.0, 4),
        b in prop::collection::vec(-1.0f64..3.0, 4),
        k in 1usize..=4,
    ) {
        prop_assume!(cone_margin(&a, k) > 0.0 && cone_margin(&b, k) > 0.0);
        let cone = ConeId::new(k, 4).unwrap();
        prop_assert!(check_concavity(cone, &EigenVec::new(a).unwrap(), &EigenVec::new(b).unwrap()).unwrap());
    }
}

#[test]
fn small_dimensions_through_slices() {
    assert_eq!(elementary_symmetric(&[5.0], 1), 5.0);
    assert_eq!(elementary_symmetric(&[2.0, 3.0], 2), 6.0);
    assert_eq!(elementary_symmetric(&[2.0, 3.0], 1), 5.0);
    assert!(EigenVec::new(vec![1.0, 2.0]).is_err());
}

#[test]
fn typed_api_agrees_with_slices() {
    let lam = EigenVec::new(vec![1.0, 2.0, 3.0]).unwrap();
    let k = ConeId::new(2, 3).unwrap();
    assert_eq!(sigma(&lam, k).unwrap(), 11.0);
    assert!(in_gamma_k(&lam, k).unwrap().inside);
    let spec = OperatorSpec::new(3, 2, 0.0).unwrap();
    assert!((f_homotopy(&lam, &spec).unwrap() - 12.0).abs() < 1e-12);
}
