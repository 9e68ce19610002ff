mod common;

use std::f64::consts::FRAC_PI_2;

use common::*;
use nmf2::exact::to_angular;
use nmf2::qdr::{clip, qdr, qdr_detailed, solve_theta, solve_thetas, ClipProblem, QdrConfig, QdrPath};
use nmf2::svd::svd2_default;
use nmf2::DenseMatrix;
use proptest::prelude::*;
use rand::Rng;

/// Independent derivative of the clipping objective.
fn derivative(p: &ClipProblem, theta: f64) -> f64 {
    let lower: f64 = p
        .psi
        .iter()
        .zip(&p.d_u)
        .filter(|(&s, _)| theta - FRAC_PI_2 - s > 0.0)
        .map(|(&s, &d)| d * d * (2.0 * (theta - FRAC_PI_2 - s)).sin())
        .sum();
    let upper: f64 = p
        .phi
        .iter()
        .zip(&p.d_v)
        .filter(|(&f, _)| f - theta > 0.0)
        .map(|(&f, &d)| -d * d * (2.0 * (f - theta)).sin())
        .sum();
    lower + upper
}

fn small_problem(seed: u64) -> ClipProblem {
    let mut rng = rng(seed);
    let m = rng.random_range(1..6);
    let n = rng.random_range(1..6);
    let mut angle = |_| rng.random_range(-FRAC_PI_2 + 1e-6..FRAC_PI_2 - 1e-6);
    let psi = (0..m).map(&mut angle).collect();
    let phi = (0..n).map(&mut angle).collect();
    let d_u = (0..m).map(|_| rng.random_range(0.1..2.0)).collect();
    let d_v = (0..n).map(|_| rng.random_range(0.1..2.0)).collect();
    ClipProblem { psi, phi, d_u, d_v }
}

#[test]
fn matches_a_million_point_grid() {
    for seed in 0..5 {
        let p = small_problem(seed);
        let h = solve_theta(&p);
        let (t, f) = full_grid(&p, 1_000_001);
        assert!(h.f_value <= f + 1e-12, "seed {seed}: {} > {f}", h.f_value);
        if p.flat_band().is_none() {
            assert!((h.theta - t).abs() <= 1e-6, "seed {seed}: {} vs {t}", h.theta);
        }
    }
}

#[test]
fn flat_band_takes_the_midpoint() {
    let p = ClipProblem { psi: vec![0.2, 0.4], phi: vec![0.1, 0.3], d_u: vec![1.0; 2], d_v: vec![1.0; 2] };
    let h = solve_theta(&p);
    assert_eq!(h.f_value, 0.0);
    assert!((h.theta - 0.5 * (0.3 + FRAC_PI_2)).abs() < 1e-15);
}

#[test]
fn lower_bound_on_lognormal_data() {
    let mut rng = rng(8);
    for _ in 0..20 {
        let n = nmf2::bench::gen::gen_lognormal(30, 25, &mut rng).unwrap();
        let s = svd2_default(&n).unwrap();
        let trunc = s.truncation();
        let out = qdr_detailed(&n, &QdrConfig::default()).unwrap();
        assert!(out.nmf.is_nonnegative());
        let e = out.nmf.objective(&n);
        let e2 = trunc.frobenius_distance(&n);
        if trunc.min_entry() >= 0.0 {
            assert!((e - e2).abs() <= 1e-10 * n.frobenius_norm());
        } else {
            assert_eq!(out.path, QdrPath::Clipped);
            assert!(e > e2);
        }
    }
}

#[test]
fn reducible_input_has_nonnegative_factors() {
    let n = DenseMatrix::from_rows(&[
        [3.0, 1.0, 0.0, 0.0],
        [1.0, 2.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 4.0],
    ])
    .unwrap();
    let out = qdr_detailed(&n, &QdrConfig::default()).unwrap();
    assert_eq!(out.path, QdrPath::Reducible);
    assert!(out.nmf.is_nonnegative());
    assert_eq!(out.nmf.l.row(2), &[0.0, 0.0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn objective_is_unimodal(seed in any::<u64>()) {
        let p = small_problem(seed);
        prop_assume!(p.flat_band().is_none());
        prop_assert!(derivative(&p, 0.0) < 0.0);
        prop_assert!(derivative(&p, FRAC_PI_2) > 0.0);
        let mut changes = 0;
        let mut prev = derivative(&p, 0.0);
        for k in 1..=2000 {
            let d = derivative(&p, FRAC_PI_2 * k as f64 / 2000.0);
            if d.abs() > 1e-12 && prev.abs() > 1e-12 && d.signum() != prev.signum() {
                changes += 1;
            }
            if d.abs() > 1e-12 {
                prev = d;
            }
        }
        prop_assert_eq!(changes, 1);
        let h = solve_theta(&p);
        prop_assert!(h.intervals_scanned <= p.psi.len() + p.phi.len() + 1);
        prop_assert!(derivative(&p, h.theta).abs() <= 1e-9 * (p.d_u.len() + p.d_v.len()) as f64 * 4.0);
    }

    #[test]
    fn clipped_angles_lie_in_the_band(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let n = random_positive(rng.random_range(2..12), rng.random_range(2..12), &mut rng);
        let s = svd2_default(&n).unwrap();
        prop_assume!(s.sigma2 > 1e-9 * s.sigma1);
        let a = to_angular(&s).unwrap();
        let t = solve_thetas(&a);
        let c = clip(&a, t.theta1, t.theta2);
        prop_assert!(c.psi.iter().all(|&x| x >= t.theta1 - FRAC_PI_2 - 1e-15 && x <= t.theta2 + 1e-15));
        prop_assert!(c.phi.iter().all(|&x| x >= t.theta2 - FRAC_PI_2 - 1e-15 && x <= t.theta1 + 1e-15));
        prop_assert!(c.reconstruct().min_entry() >= -1e-12);
        let f = qdr(&n, &QdrConfig::default()).unwrap();
        prop_assert!(f.is_nonnegative());
        prop_assert!(f.objective(&n) >= s.truncation().frobenius_distance(&n) - 1e-12);
    }
}
