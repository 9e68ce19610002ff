mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use common::*;
use nmf2::exact::{
    alpha_nmf, alpha_nmf_midpoint, exact_factors_unchecked, exact_nmf, is_nonnegative_rank2, is_unique, ratio_stats,
    staircase_check, tbox, to_angular,
};
use nmf2::svd::svd2_default;
use nmf2::threeway::{gram_defect, minimize_defects, threeway_nmf, ParamBounds, ThreeWayParams};
use nmf2::{AngularForm, DenseMatrix, Nmf2Error, RatioStats, ScaledSvd2};
use proptest::prelude::*;
use rand::Rng;

fn angular_strategy() -> impl Strategy<Value = AngularForm> {
    (2usize..10, 2usize..10, any::<u64>()).prop_map(|(m, n, seed)| feasible_angular(m, n, &mut rng(seed)))
}

#[test]
fn forty_five_degree_construction() {
    let s = ScaledSvd2 {
        u1_hat: vec![1.0, 1.0],
        u2_hat: vec![1.0, -1.0],
        v1_hat: vec![1.0, 1.0],
        v2_hat: vec![1.0, -1.0],
        sigma1: 2.0,
        sigma2: 2.0,
    };
    let a = to_angular(&s).unwrap();
    assert!((a.psi[0] - FRAC_PI_4).abs() < 1e-15 && (a.psi[1] + FRAC_PI_4).abs() < 1e-15);
    assert!(a.d_u.iter().all(|&d| (d - 2f64.sqrt()).abs() < 1e-15));
}

#[test]
fn violated_product_is_not_nonnegative() {
    let st = RatioStats { min_u: -1.0, max_u: 1.5, min_v: -1.0, max_v: 0.5 };
    assert!(!is_nonnegative_rank2(&st));
    assert!(tbox(&st).is_none());
}

#[test]
fn identity_is_unique() {
    let s = svd2_default(&DenseMatrix::identity(2)).unwrap();
    let st = ratio_stats(&s).unwrap();
    assert!(is_unique(&st, 1e-10));
    assert!(tbox(&st).unwrap().is_degenerate(1e-10));
}

#[test]
fn diagonal_submatrix_gives_unique_factors() {
    // Rows 0, 1 and columns 0, 1 form a diagonal block.
    let l = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 2.0], [1.0, 1.0], [0.5, 3.0]]).unwrap();
    let r = DenseMatrix::from_rows(&[[2.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
    let n = l.matmul_t(&r);
    let s = svd2_default(&n).unwrap();
    let st = ratio_stats(&s).unwrap();
    assert!(is_unique(&st, 1e-9));
    let b = tbox(&st).unwrap();
    let (t1, t2) = b.midpoint();
    let f = exact_nmf(&s, t1, t2).unwrap();
    // Same columns as the construction up to scaling and order.
    let cosine = |a: &[f64], b: &[f64]| nmf2::matrix::dot(a, b) / (nmf2::matrix::norm2(a) * nmf2::matrix::norm2(b));
    for c in 0..2 {
        let best = (0..2).map(|k| cosine(&f.l.column(c), &l.column(k))).fold(0.0, f64::max);
        assert!(best > 1.0 - 1e-9, "column {c}: {best}");
    }
}

#[test]
fn positive_matrix_box_is_open() {
    let mut rng = rng(9);
    let n = feasible_angular(6, 5, &mut rng).reconstruct();
    assert!(n.min_entry() > 0.0);
    let st = ratio_stats(&svd2_default(&n).unwrap()).unwrap();
    assert!(!is_unique(&st, 1e-9));
}

#[test]
fn out_of_box_is_an_error() {
    let n = feasible_rank2(&mut rng(4));
    let s = svd2_default(&n).unwrap();
    let b = tbox(&ratio_stats(&s).unwrap()).unwrap();
    assert!(matches!(exact_nmf(&s, b.t1_lo - 1.0, b.t2_lo), Err(Nmf2Error::OutOfBox { .. })));
}

#[test]
fn alpha_endpoints_touch_zero() {
    let a = feasible_angular(8, 7, &mut rng(5));
    let iv = a.alpha_intervals();
    let f = alpha_nmf(&a, iv.a1_lo, iv.a2_lo).unwrap();
    assert!(f.min_entry().abs() < 1e-12);
    assert!(rel_err(&f.product(), &a.reconstruct()) < 1e-10);
    assert!(matches!(alpha_nmf(&a, iv.a1_lo - 0.1, iv.a2_lo), Err(Nmf2Error::InfeasibleAlpha(_))));
}

#[test]
fn staircase_on_signed_construction() {
    // One ψ−φ gap exceeds π/2, so the product has a negative corner.
    let a = AngularForm {
        psi: vec![1.2, 0.5, -0.3],
        phi: vec![0.9, 0.0, -0.6],
        d_u: vec![1.0, 2.0, 1.5],
        d_v: vec![1.0, 1.0, 0.5],
    };
    let m2 = a.reconstruct();
    assert!(m2.min_entry() < 0.0);
    assert!(staircase_check(&m2, &a).unwrap());
}

#[test]
fn box_corners_are_the_worked_example_bounds() {
    let r = 50f64.sqrt();
    let l = DenseMatrix::from_rows(&[[4.0 / r, 0.5], [3.0 / r, 0.5], [3.0 / r, -0.5], [4.0 / r, -0.5]]).unwrap();
    let m = DenseMatrix::from_rows(&[[6.0, 2.0], [2.0, 3.0]]).unwrap();
    let s = svd2_default(&l.matmul(&m).matmul_t(&l)).unwrap();
    let st = ratio_stats(&s).unwrap();
    // The sign of the second pair is a convention; the spread is not.
    let (lo, hi) = if st.max_u > 1.0 { (-st.min_u, 1.0 / st.max_u) } else { (st.max_u, -1.0 / st.min_u) };
    assert!((lo - 0.2282).abs() < 1e-3 && (hi - 0.4578).abs() < 1e-3, "{lo} {hi}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn box_membership_matches_entrywise_sign(a in angular_strategy(), u in 0.0f64..1.0, v in 0.0f64..1.0, out in -2.0f64..3.0) {
        let n = a.reconstruct();
        let s = svd2_default(&n).unwrap();
        let b = tbox(&ratio_stats(&s).unwrap()).unwrap();
        let t1 = b.t1_lo + u * (b.t1_hi - b.t1_lo);
        let t2 = b.t2_lo + v * (b.t2_hi - b.t2_lo);
        let (l, r) = exact_factors_unchecked(&s, t1, t2);
        prop_assert!(l.min_entry() >= -1e-12 && r.min_entry() >= -1e-12);
        prop_assert!(rel_err(&l.matmul_t(&r), &n) <= 1e-10);
        // Move t1 out of its interval.
        let t1_out = if out < 0.5 {
            b.t1_lo - (0.5 - out) * 1e-2 * (1.0 + b.t1_lo.abs())
        } else {
            b.t1_hi + (out - 0.5) * 1e-2 * (1.0 + b.t1_hi.abs())
        };
        let (l, r) = exact_factors_unchecked(&s, t1_out, t2);
        prop_assert!(l.min_entry().min(r.min_entry()) < 0.0);
    }

    #[test]
    fn midpoint_alpha_is_valid(a in angular_strategy()) {
        let f = alpha_nmf_midpoint(&a).unwrap();
        prop_assert!(f.is_nonnegative());
        prop_assert!(rel_err(&f.product(), &a.reconstruct()) <= 1e-10);
        prop_assert!(staircase_check(&a.reconstruct(), &a).unwrap());
    }

    #[test]
    fn nonnegativity_test_agrees_with_entries(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let m = rng.random_range(2..8);
        let n = rng.random_range(2..8);
        let a = AngularForm {
            psi: (0..m).map(|_| rng.random_range(-FRAC_PI_2 + 0.01..FRAC_PI_2 - 0.01)).collect(),
            phi: (0..n).map(|_| rng.random_range(-FRAC_PI_2 + 0.01..FRAC_PI_2 - 0.01)).collect(),
            d_u: (0..m).map(|_| rng.random_range(0.5..2.0)).collect(),
            d_v: (0..n).map(|_| rng.random_range(0.5..2.0)).collect(),
        };
        let m2 = a.reconstruct();
        let s = match svd2_default(&m2) {
            Ok(s) => s,
            Err(_) => return Ok(()),
        };
        let st = match ratio_stats(&s) {
            Ok(st) => st,
            Err(_) => return Ok(()),
        };
        // Skip draws within rounding distance of the boundary.
        prop_assume!(m2.min_entry().abs() > 1e-8 * m2.max_abs());
        prop_assert_eq!(is_nonnegative_rank2(&st), m2.min_entry() >= 0.0);
    }

    #[test]
    fn threeway_reconstructs_and_corner_wins(a in angular_strategy(), x in proptest::array::uniform4(0.0f64..1.0)) {
        let n = a.reconstruct();
        let s = svd2_default(&n).unwrap();
        let b = ParamBounds::from_stats(&ratio_stats(&s).unwrap());
        let pick = |lo: f64, hi: f64, u: f64, w: f64| (lo + u.min(w) * (hi - lo), lo + u.max(w) * (hi - lo));
        let (t1_lo, t1_hi) = pick(b.t1_min, b.t1_max, x[0], x[1]);
        let (t2_lo, t2_hi) = pick(b.t2_min, b.t2_max, x[2], x[3]);
        let tw = threeway_nmf(&s, &ThreeWayParams { t1_lo, t1_hi, t2_lo, t2_hi }).unwrap();
        prop_assert!(tw.min_entry() >= -1e-12);
        prop_assert!(rel_err(&tw.product(), &n) <= 1e-10);
        let best = threeway_nmf(&s, &minimize_defects(&s).unwrap().params).unwrap();
        prop_assert!(gram_defect(&best.l) <= gram_defect(&tw.l) + 1e-12);
        prop_assert!(gram_defect(&best.r) <= gram_defect(&tw.r) + 1e-12);
    }
}
