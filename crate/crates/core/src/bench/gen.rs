//! Random test matrices: heavy-tailed lognormal, noisy rank-2 on the
//! nonnegativity boundary, and uniform 4×4 integer compositions.

use std::f64::consts::FRAC_PI_2;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};

use crate::error::{Nmf2Error, Result};
use crate::exact::AngularForm;
use crate::matrix::DenseMatrix;
use crate::svd::svd2_default;

/// Default noise scale of [`gen_boundary_noise`] relative to the clean mean.
pub const DEFAULT_NOISE_FACTOR: f64 = 0.5;

/// Resampling cap for the filtered generators.
pub const MAX_REJECTIONS: usize = 1000;

/// Whether the best rank-2 approximation of `n` is already nonnegative.
///
/// Entries above `−1e−10·max|N|` count as nonnegative.
pub fn is_trivial(n: &DenseMatrix) -> Result<bool> {
    let s = svd2_default(n)?;
    Ok(s.truncation().min_entry() >= -1e-10 * n.max_abs())
}

fn has_zero_line(n: &DenseMatrix) -> bool {
    (0..n.rows()).any(|i| n.row(i).iter().all(|&x| x == 0.0))
        || (0..n.cols()).any(|j| (0..n.rows()).all(|i| n[(i, j)] == 0.0))
}

/// I.i.d. entries `exp(√(ln m)·z)` with `z` standard normal.
pub fn gen_lognormal<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Result<DenseMatrix> {
    if m < 2 || n < 2 {
        return Err(Nmf2Error::InvalidParameter(format!("lognormal needs m, n >= 2, got {m}×{n}")));
    }
    let dist = LogNormal::new(0.0, (m as f64).ln().sqrt()).map_err(|e| Nmf2Error::InvalidParameter(e.to_string()))?;
    Ok(DenseMatrix::from_fn(m, n, |_, _| dist.sample(rng)))
}

/// Clean boundary matrix `D_u cos(Ψ1ᵀ − 1Φᵀ) D_v`: the first `n/2` column
/// angles are 0, the last `m − m/2 + 1` row angles sit just below `π/2`, and
/// the rest are uniform on `[0, π/2]`. Weights are uniform on `[0, 1]`.
pub fn boundary_rank2<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> AngularForm {
    let top = FRAC_PI_2 - 1e-9;
    let first_pinned_row = (m / 2).saturating_sub(1);
    let psi: Vec<f64> =
        (0..m).map(|i| if i >= first_pinned_row { top } else { rng.random_range(0.0..=FRAC_PI_2) }).collect();
    let phi: Vec<f64> = (0..n).map(|j| if j < n / 2 { 0.0 } else { rng.random_range(0.0..=FRAC_PI_2) }).collect();
    let d_u: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
    let d_v: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    AngularForm { psi, phi, d_u, d_v }
}

/// Boundary matrix with folded-normal entries `|clean + scale·z|`, resampled
/// until its best rank-2 approximation has a negative entry. The default scale
/// is half the clean matrix mean. A zero scale returns the clean matrix.
pub fn gen_boundary_noise<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    noise_scale: Option<f64>,
    rng: &mut R,
) -> Result<DenseMatrix> {
    if m < 2 || n < 2 {
        return Err(Nmf2Error::InvalidParameter(format!("boundary needs m, n >= 2, got {m}×{n}")));
    }
    if let Some(s) = noise_scale {
        if !(s >= 0.0) {
            return Err(Nmf2Error::InvalidParameter(format!("noise scale must be nonnegative, got {s}")));
        }
    }
    for _ in 0..MAX_REJECTIONS {
        let clean = boundary_rank2(m, n, rng).reconstruct().clamp_nonneg();
        let scale = noise_scale.unwrap_or(DEFAULT_NOISE_FACTOR * clean.sum() / (m * n) as f64);
        if scale == 0.0 {
            if has_zero_line(&clean) {
                continue;
            }
            return Ok(clean);
        }
        let noisy =
            DenseMatrix::from_fn(m, n, |i, j| (clean[(i, j)] + scale * rng.sample::<f64, _>(StandardNormal)).abs());
        if has_zero_line(&noisy) {
            continue;
        }
        match is_trivial(&noisy) {
            Ok(false) => return Ok(noisy),
            Ok(true) | Err(_) => continue,
        }
    }
    Err(Nmf2Error::RejectionLimit(MAX_REJECTIONS))
}

/// Uniform 4×4 nonnegative integer matrix with entries summing to `total`,
/// via a uniform 15-subset of `{0, …, total + 14}` (stars and bars).
pub fn sample_integer4x4<R: Rng + ?Sized>(total: u32, rng: &mut R) -> DenseMatrix {
    let slots = total as usize + 15;
    let mut bars = sample(rng, slots, 15).into_vec();
    bars.sort_unstable();
    let mut vals = Vec::with_capacity(16);
    let mut prev = 0usize;
    for &b in &bars {
        vals.push((b - prev) as f64);
        prev = b + 1;
    }
    vals.push((slots - prev) as f64);
    DenseMatrix::new(4, 4, vals).expect("16 entries")
}

/// [`sample_integer4x4`] with trivial draws and draws with zero lines rejected.
pub fn gen_integer4x4<R: Rng + ?Sized>(total: u32, rng: &mut R) -> Result<DenseMatrix> {
    if total < 16 {
        return Err(Nmf2Error::InvalidParameter(format!("total must be at least 16, got {total}")));
    }
    for _ in 0..MAX_REJECTIONS {
        let n = sample_integer4x4(total, rng);
        if has_zero_line(&n) {
            continue;
        }
        if let Ok(false) = is_trivial(&n) {
            return Ok(n);
        }
    }
    Err(Nmf2Error::RejectionLimit(MAX_REJECTIONS))
}
