#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use nmf2::qdr::ClipProblem;
use nmf2::{AngularForm, DenseMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn to_na(a: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.rows(), a.cols(), a.data())
}

/// All singular values, descending.
pub fn singular_values(a: &DenseMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = to_na(a).singular_values().iter().cloned().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    s
}

pub fn random_positive(m: usize, n: usize, rng: &mut impl Rng) -> DenseMatrix {
    DenseMatrix::from_fn(m, n, |_, _| rng.random_range(0.01..1.0))
}

/// Nonnegative rank-2 matrix `d_u[i]·cos(ψᵢ − φⱼ)·d_v[j]` with every angle in
/// one band of width at most π/2.
pub fn feasible_angular(m: usize, n: usize, rng: &mut impl Rng) -> AngularForm {
    let width = rng.random_range(0.3..FRAC_PI_2);
    let start = rng.random_range(-FRAC_PI_2 + 1e-3..FRAC_PI_2 - width - 1e-3);
    let mut angle = |_| start + width * rng.random::<f64>();
    let psi: Vec<f64> = (0..m).map(&mut angle).collect();
    let phi: Vec<f64> = (0..n).map(&mut angle).collect();
    let d_u = (0..m).map(|_| rng.random_range(0.5..2.0)).collect();
    let d_v = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    AngularForm { psi, phi, d_u, d_v }
}

pub fn feasible_rank2(rng: &mut impl Rng) -> DenseMatrix {
    let m = rng.random_range(3..30);
    let n = rng.random_range(3..30);
    feasible_angular(m, n, rng).reconstruct()
}

/// Clipping problem of size up to 200 × 200. Half of the draws have every
/// angle in a band a little wider than π/2, so the optimum is near zero.
pub fn clip_problem(rng: &mut impl Rng) -> ClipProblem {
    let m = rng.random_range(1..=200);
    let n = rng.random_range(1..=200);
    let (lo, hi) = if rng.random::<bool>() {
        (-FRAC_PI_2 + 1e-6, FRAC_PI_2 - 1e-6)
    } else {
        let w = FRAC_PI_2 * rng.random_range(1.0..1.3);
        let s = rng.random_range(-FRAC_PI_2..FRAC_PI_2 - w);
        (s, s + w)
    };
    let mut angle = |_| rng.random_range(lo..hi);
    let psi = (0..m).map(&mut angle).collect();
    let phi = (0..n).map(&mut angle).collect();
    let d_u = (0..m).map(|_| rng.random_range(0.1..2.0)).collect();
    let d_v = (0..n).map(|_| rng.random_range(0.1..2.0)).collect();
    ClipProblem { psi, phi, d_u, d_v }
}

fn scan(p: &ClipProblem, lo: f64, hi: f64, points: usize) -> Vec<(f64, f64)> {
    (0..points)
        .map(|k| {
            let t = lo + (hi - lo) * k as f64 / (points - 1) as f64;
            (t, p.objective(t))
        })
        .collect()
}

/// Naive grid search on `[0, π/2]` with `points` evenly spaced samples.
pub fn full_grid(p: &ClipProblem, points: usize) -> (f64, f64) {
    scan(p, 0.0, FRAC_PI_2, points).into_iter().min_by(|a, b| a.1.partial_cmp(&b.1).unwrap()).unwrap()
}

/// Grid search with the resolution of a 10⁶-point grid: 1001 coarse samples,
/// then 2001 samples across the two cells around each of the three best
/// coarse points.
pub fn fine_grid(p: &ClipProblem) -> (f64, f64) {
    let h = FRAC_PI_2 / 1000.0;
    let mut coarse = scan(p, 0.0, FRAC_PI_2, 1001);
    coarse.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    coarse
        .iter()
        .take(3)
        .flat_map(|&(t, _)| scan(p, (t - h).max(0.0), (t + h).min(FRAC_PI_2), 2001))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap()
}

/// `min ‖Lx − b‖` over a grid on `[0, hi]²`, refined twice around the best point.
pub fn nnls_grid(l: &DenseMatrix, b: &[f64], hi: f64) -> ([f64; 2], f64) {
    let cost = |x: [f64; 2]| {
        (0..l.rows())
            .map(|i| {
                let r = l[(i, 0)] * x[0] + l[(i, 1)] * x[1] - b[i];
                r * r
            })
            .sum::<f64>()
    };
    let mut center = [hi / 2.0, hi / 2.0];
    let mut half = hi / 2.0;
    let mut best = (center, cost(center));
    for _ in 0..4 {
        for a in 0..=200 {
            for c in 0..=200 {
                let x = [
                    (center[0] - half + 2.0 * half * a as f64 / 200.0).max(0.0),
                    (center[1] - half + 2.0 * half * c as f64 / 200.0).max(0.0),
                ];
                let f = cost(x);
                if f < best.1 {
                    best = (x, f);
                }
            }
        }
        center = best.0;
        half /= 50.0;
    }
    best
}

pub fn rel_err(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.frobenius_distance(b) / b.frobenius_norm()
}
