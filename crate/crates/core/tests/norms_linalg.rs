mod common;

use argen_core::linalg::{smallest_eigenpair, spectral_norm, symmetric_eigen};
use argen_core::norms::induced_quadratic_norm_estimate;
use argen_core::Norm;
use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn vector(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    // Mix in exact zeros and repeated magnitudes to exercise ties.
    let entry = prop_oneof![
        4 => -10.0f64..10.0,
        1 => Just(0.0),
        1 => prop_oneof![Just(1.5), Just(-1.5)],
    ];
    prop::collection::vec(entry, 1..=max_len)
}

fn nonzero_vector(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    vector(max_len).prop_filter("nonzero", |v| v.iter().any(|x| *x != 0.0))
}

fn symmetric(max_n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (2..=max_n).prop_flat_map(|n| {
        prop::collection::vec(-5.0f64..5.0, n * n).prop_map(move |a| {
            let a = DMatrix::from_vec(n, n, a);
            (&a + a.transpose()) * 0.5
        })
    })
}

fn norm() -> impl Strategy<Value = Norm> {
    prop::sample::select(Norm::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn values_match_oracle(v in vector(12), nm in norm()) {
        let dv = DVector::from_vec(v.clone());
        prop_assert!((nm.value(&dv) - norm_of(nm, &v)).abs() <= 1e-12 * (1.0 + l1(&v)));
        prop_assert!((nm.dual_norm(&dv) - dual_of(nm, &v)).abs() <= 1e-12 * (1.0 + l1(&v)));
        prop_assert_eq!(nm.dual().dual(), nm);
    }

    #[test]
    fn descent_direction_is_tight(g in nonzero_vector(12), nm in norm()) {
        let gv = DVector::from_vec(g.clone());
        let d = nm.descent_direction(&gv).unwrap();
        prop_assert!((norm_of(nm, d.as_slice()) - 1.0).abs() <= 1e-12);
        let inner = dot(&g, d.as_slice());
        prop_assert!((inner + dual_of(nm, &g)).abs() <= 1e-12 * (1.0 + l1(&g)));
    }

    #[test]
    fn witness_is_tight(s in nonzero_vector(12), nm in norm()) {
        let sv = DVector::from_vec(s.clone());
        let w = nm.subgradient_witness(&sv).unwrap();
        prop_assert!((dual_of(nm, w.as_slice()) - 1.0).abs() <= 1e-12);
        prop_assert!((dot(w.as_slice(), &s) - norm_of(nm, &s)).abs() <= 1e-12 * (1.0 + l1(&s)));
    }

    #[test]
    fn cauchy_schwarz(pair in (1usize..12).prop_flat_map(|n| (prop::collection::vec(-10.0f64..10.0, n), prop::collection::vec(-10.0f64..10.0, n))), nm in norm()) {
        let (a, b) = pair;
        let lhs = dot(&a, &b).abs();
        let rhs = nm.value(&DVector::from_vec(a)) * nm.dual_norm(&DVector::from_vec(b));
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn euclidean_ratio_bounds_squares(v in nonzero_vector(12), nm in norm()) {
        let r = norm_of(nm, &v);
        prop_assert!(dot(&v, &v) <= nm.euclidean_square_ratio(v.len()) * r * r * (1.0 + 1e-12));
    }

    #[test]
    fn zero_and_nonfinite_inputs_rejected(n in 1usize..6, nm in norm()) {
        let z = DVector::zeros(n);
        prop_assert!(nm.descent_direction(&z).is_err());
        prop_assert!(nm.subgradient_witness(&z).is_err());
        let mut bad = DVector::from_element(n, 1.0);
        bad[0] = f64::NAN;
        prop_assert!(nm.try_value(&bad).is_err());
        prop_assert!(nm.try_dual_norm(&bad).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn induced_estimate_sandwich(h in symmetric(4), nm in norm(), probe in prop::collection::vec(-1.0f64..1.0, 4)) {
        let (lo, hi) = induced_quadratic_norm_estimate(nm, &h, 500).unwrap();
        prop_assert!(lo <= hi * (1.0 + 1e-12));
        let n = h.nrows();
        let s = DVector::from_column_slice(&probe[..n]);
        let r = nm.value(&s);
        prop_assume!(r > 1e-6);
        // Any probe lower-bounds the induced norm, hence stays below `hi`.
        prop_assert!((s.dot(&(&h * &s)) / (r * r)).abs() <= hi * (1.0 + 1e-12));
        if n == 2 {
            let sampled = induced_norm_2d(nm, &h);
            prop_assert!(lo <= sampled * (1.0 + 1e-9) + 1e-12);
            prop_assert!(sampled <= hi * (1.0 + 1e-9) + 1e-12);
        }
    }

    #[test]
    fn smallest_eigenpair_residual(h in symmetric(20)) {
        let ep = smallest_eigenpair(&h).unwrap();
        let norm2 = spectral_norm(&h).unwrap();
        let res = (&h * &ep.u - &ep.u * ep.lambda_min).norm();
        prop_assert!(res <= 1e-10 * (1.0 + norm2));
        prop_assert!((ep.u.norm() - 1.0).abs() <= 1e-12);
        let n = h.nrows() as f64;
        prop_assert!(ep.lambda_min <= h.trace() / n + 1e-12 * (1.0 + norm2));
        prop_assert!((ep.lambda_min - lambda_min(&h)).abs() <= 1e-10 * (1.0 + norm2));
    }

    #[test]
    fn smallest_eigenvalue_below_rayleigh(h in symmetric(10), v in prop::collection::vec(-1.0f64..1.0, 10)) {
        let n = h.nrows();
        let x = DVector::from_column_slice(&v[..n]);
        prop_assume!(x.norm() > 1e-6);
        let ep = smallest_eigenpair(&h).unwrap();
        let rq = x.dot(&(&h * &x)) / x.dot(&x);
        prop_assert!(ep.lambda_min <= rq + 1e-12 * (1.0 + rq.abs()));
    }

    #[test]
    fn full_spectrum_sorted_and_orthonormal(h in symmetric(12)) {
        let e = symmetric_eigen(&h).unwrap();
        prop_assert!(e.values.as_slice().windows(2).all(|w| w[0] <= w[1]));
        let n = h.nrows();
        let gram = e.vectors.transpose() * &e.vectors;
        prop_assert!((gram - DMatrix::identity(n, n)).abs().max() <= 1e-10);
    }
}

#[test]
fn asymmetric_and_nonfinite_matrices_rejected() {
    let mut h = DMatrix::identity(3, 3);
    h[(0, 1)] = 1.0;
    assert!(smallest_eigenpair(&h).is_err());
    let mut h = DMatrix::identity(3, 3);
    h[(2, 2)] = f64::INFINITY;
    assert!(smallest_eigenpair(&h).is_err());
    assert!(smallest_eigenpair(&DMatrix::zeros(2, 3)).is_err());
}

#[test]
fn reflection_spectrum() {
    let h = reflection(&[5.0, 1.0]);
    let ep = smallest_eigenpair(&h).unwrap();
    assert!((ep.lambda_min + 1.0).abs() <= 1e-12);
    let u = DVector::from_vec(vec![5.0, 1.0]).normalize();
    assert!((ep.u.dot(&u).abs() - 1.0).abs() <= 1e-12);
    assert!((spectral_norm(&h).unwrap() - 1.0).abs() <= 1e-12);
}
