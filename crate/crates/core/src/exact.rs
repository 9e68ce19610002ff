//! Exact nonnegative rank-2 factorizations of a rank-2 matrix given by its
//! scaled SVD: extremal ratios, the feasible `(t₁, t₂)` box, the angular form
//! and the sign-pattern validators.

use std::cmp::Ordering;
use std::f64::consts::FRAC_PI_2;

use crate::error::{Nmf2Error, Result};
use crate::matrix::DenseMatrix;
use crate::svd::ScaledSvd2;

/// Absolute slack used for box and interval membership.
pub const BOX_SLACK: f64 = 1e-12;

/// Nonnegative factors `L` (m×2) and `R` (n×2).
#[derive(Debug, Clone, PartialEq)]
pub struct Rank2Nmf {
    pub l: DenseMatrix,
    pub r: DenseMatrix,
}

impl Rank2Nmf {
    /// Builds the pair, clamping entries above `-tol` to zero. Anything more
    /// negative is kept so that callers can detect infeasibility.
    pub fn new_clamped(mut l: DenseMatrix, mut r: DenseMatrix, tol: f64) -> Rank2Nmf {
        for m in [&mut l, &mut r] {
            for i in 0..m.rows() {
                for x in m.row_mut(i) {
                    if *x < 0.0 && *x >= -tol {
                        *x = 0.0;
                    }
                }
            }
        }
        Rank2Nmf { l, r }
    }

    pub fn product(&self) -> DenseMatrix {
        self.l.matmul_t(&self.r)
    }

    /// `‖N − LRᵀ‖_F`.
    pub fn objective(&self, n: &DenseMatrix) -> f64 {
        n.frobenius_distance(&self.product())
    }

    pub fn min_entry(&self) -> f64 {
        self.l.min_entry().min(self.r.min_entry())
    }

    pub fn is_nonnegative(&self) -> bool {
        self.min_entry() >= 0.0
    }
}

/// Extremal ratios `û_{i,2}/û_{i,1}` and `v̂_{j,2}/v̂_{j,1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioStats {
    pub min_u: f64,
    pub max_u: f64,
    pub min_v: f64,
    pub max_v: f64,
}

/// The rectangle of admissible `(t₁, t₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TBox {
    pub t1_lo: f64,
    pub t1_hi: f64,
    pub t2_lo: f64,
    pub t2_hi: f64,
}

impl TBox {
    pub fn contains(&self, t1: f64, t2: f64) -> bool {
        t1 >= self.t1_lo - BOX_SLACK
            && t1 <= self.t1_hi + BOX_SLACK
            && t2 >= self.t2_lo - BOX_SLACK
            && t2 <= self.t2_hi + BOX_SLACK
    }

    /// Box midpoint; an unbounded side uses `max(2·lo, lo + 1)`.
    pub fn midpoint(&self) -> (f64, f64) {
        let mid = |lo: f64, hi: f64| {
            if hi.is_finite() {
                0.5 * (lo + hi)
            } else {
                (2.0 * lo).max(lo + 1.0)
            }
        };
        (mid(self.t1_lo, self.t1_hi), mid(self.t2_lo, self.t2_hi))
    }

    /// Whether both intervals have collapsed to points.
    pub fn is_degenerate(&self, tol: f64) -> bool {
        (self.t1_hi - self.t1_lo).abs() <= tol && (self.t2_hi - self.t2_lo).abs() <= tol
    }
}

fn ratio_extrema(num: &[f64], den: &[f64]) -> (f64, f64) {
    num.iter().zip(den).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| {
        let q = a / b;
        (lo.min(q), hi.max(q))
    })
}

fn check_positive_dominant(s: &ScaledSvd2) -> Result<()> {
    if s.u1_hat.iter().chain(&s.v1_hat).any(|&x| !(x > 0.0)) {
        return Err(Nmf2Error::NonpositiveDominant);
    }
    Ok(())
}

pub fn ratio_stats(s: &ScaledSvd2) -> Result<RatioStats> {
    check_positive_dominant(s)?;
    let (min_u, max_u) = ratio_extrema(&s.u2_hat, &s.u1_hat);
    let (min_v, max_v) = ratio_extrema(&s.v2_hat, &s.v1_hat);
    Ok(RatioStats { min_u, max_u, min_v, max_v })
}

/// Nonnegativity of `M₂` read off the extremal ratios.
pub fn is_nonnegative_rank2(stats: &RatioStats) -> bool {
    stats.max_u * stats.min_v >= -1.0 - 1e-12 && stats.min_u * stats.max_v >= -1.0 - 1e-12
}

/// `-1/x` for a nonpositive `x`, with `+∞` at zero.
fn neg_recip(x: f64) -> f64 {
    if x < 0.0 {
        -1.0 / x
    } else {
        f64::INFINITY
    }
}

/// The admissible box, or `None` when `M₂` has a negative entry.
pub fn tbox(stats: &RatioStats) -> Option<TBox> {
    if !is_nonnegative_rank2(stats) {
        return None;
    }
    let b =
        TBox { t1_lo: stats.max_v, t1_hi: neg_recip(stats.min_u), t2_lo: stats.max_u, t2_hi: neg_recip(stats.min_v) };
    // Products within the 1e-12 tolerance can leave hi marginally below lo.
    Some(TBox { t1_hi: b.t1_hi.max(b.t1_lo), t2_hi: b.t2_hi.max(b.t2_lo), ..b })
}

/// Uniqueness of the exact NMF up to scaling and permutation: both intervals collapse.
pub fn is_unique(stats: &RatioStats, tol: f64) -> bool {
    (stats.max_u * stats.min_v + 1.0).abs() <= tol && (stats.max_v * stats.min_u + 1.0).abs() <= tol
}

/// Exact NMF `L = Û T`, `R = V̂ T⁻ᵀ` with `T = [[1, t₂], [t₁, −1]]`.
pub fn exact_nmf(s: &ScaledSvd2, t1: f64, t2: f64) -> Result<Rank2Nmf> {
    let stats = ratio_stats(s)?;
    let b = tbox(&stats).ok_or(Nmf2Error::OutOfBox { t1, t2 })?;
    if !b.contains(t1, t2) {
        return Err(Nmf2Error::OutOfBox { t1, t2 });
    }
    let (l, r) = exact_factors_unchecked(s, t1, t2);
    let tol = 1e-12 * (s.sigma1 + s.sigma2).sqrt();
    Ok(Rank2Nmf::new_clamped(l, r, tol))
}

/// The transformation of [`exact_nmf`] without box or sign checks.
pub fn exact_factors_unchecked(s: &ScaledSvd2, t1: f64, t2: f64) -> (DenseMatrix, DenseMatrix) {
    let det = 1.0 + t1 * t2;
    let l = DenseMatrix::from_fn(s.rows(), 2, |i, c| {
        let (a, b) = (s.u1_hat[i], s.u2_hat[i]);
        if c == 0 {
            a + t1 * b
        } else {
            t2 * a - b
        }
    });
    let r = DenseMatrix::from_fn(s.cols(), 2, |j, c| {
        let (a, b) = (s.v1_hat[j], s.v2_hat[j]);
        if c == 0 {
            (a + t2 * b) / det
        } else {
            (t1 * a - b) / det
        }
    });
    (l, r)
}

/// `(Ψ, Φ, D_u, D_v)` with `M₂[i,j] = d_u[i]·cos(ψᵢ − φⱼ)·d_v[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularForm {
    pub psi: Vec<f64>,
    pub phi: Vec<f64>,
    pub d_u: Vec<f64>,
    pub d_v: Vec<f64>,
}

/// Closed angle intervals for `α₁` and `α₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaIntervals {
    pub a1_lo: f64,
    pub a1_hi: f64,
    pub a2_lo: f64,
    pub a2_hi: f64,
}

impl AlphaIntervals {
    pub fn is_empty(&self) -> bool {
        self.a1_lo > self.a1_hi + BOX_SLACK || self.a2_lo > self.a2_hi + BOX_SLACK
    }

    pub fn midpoints(&self) -> (f64, f64) {
        (0.5 * (self.a1_lo + self.a1_hi), 0.5 * (self.a2_lo + self.a2_hi))
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

impl AngularForm {
    pub fn rows(&self) -> usize {
        self.psi.len()
    }

    pub fn cols(&self) -> usize {
        self.phi.len()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.rows(), self.cols(), |i, j| {
            self.d_u[i] * (self.psi[i] - self.phi[j]).cos() * self.d_v[j]
        })
    }

    /// `α₁ ∈ [max φ, min ψ + π/2]`, `α₂ ∈ [max ψ, min φ + π/2]`.
    pub fn alpha_intervals(&self) -> AlphaIntervals {
        let (psi_lo, psi_hi) = min_max(&self.psi);
        let (phi_lo, phi_hi) = min_max(&self.phi);
        AlphaIntervals { a1_lo: phi_hi, a1_hi: psi_lo + FRAC_PI_2, a2_lo: psi_hi, a2_hi: phi_lo + FRAC_PI_2 }
    }

    /// Nonnegativity of the represented matrix.
    pub fn is_nonnegative(&self) -> bool {
        !self.alpha_intervals().is_empty()
    }

    /// The factors `D_u [cos Ψ, sin Ψ]` and `D_v [cos Φ, sin Φ]` (signed in general).
    pub fn signed_factors(&self) -> (DenseMatrix, DenseMatrix) {
        let l = DenseMatrix::from_fn(self.rows(), 2, |i, c| {
            self.d_u[i] * if c == 0 { self.psi[i].cos() } else { self.psi[i].sin() }
        });
        let r = DenseMatrix::from_fn(self.cols(), 2, |j, c| {
            self.d_v[j] * if c == 0 { self.phi[j].cos() } else { self.phi[j].sin() }
        });
        (l, r)
    }

    /// The transposed representation (roles of rows and columns swapped).
    pub fn transposed(&self) -> AngularForm {
        AngularForm { psi: self.phi.clone(), phi: self.psi.clone(), d_u: self.d_v.clone(), d_v: self.d_u.clone() }
    }
}

pub fn to_angular(s: &ScaledSvd2) -> Result<AngularForm> {
    check_positive_dominant(s)?;
    let angles = |a: &[f64], b: &[f64]| -> (Vec<f64>, Vec<f64>) {
        a.iter().zip(b).map(|(&x, &y)| (y.atan2(x), x.hypot(y))).unzip()
    };
    let (psi, d_u) = angles(&s.u1_hat, &s.u2_hat);
    let (phi, d_v) = angles(&s.v1_hat, &s.v2_hat);
    Ok(AngularForm { psi, phi, d_u, d_v })
}

/// `L = D_u[cos(α₁−Ψ), sin(α₂−Ψ)]/√cos(α₂−α₁)`, `R = D_v[cos(α₂−Φ), sin(α₁−Φ)]/√cos(α₂−α₁)`.
pub fn alpha_nmf(a: &AngularForm, alpha1: f64, alpha2: f64) -> Result<Rank2Nmf> {
    let iv = a.alpha_intervals();
    if iv.is_empty() {
        return Err(Nmf2Error::InfeasibleAlpha(format!(
            "empty intervals: alpha1 in [{}, {}], alpha2 in [{}, {}]",
            iv.a1_lo, iv.a1_hi, iv.a2_lo, iv.a2_hi
        )));
    }
    let inside = |x: f64, lo: f64, hi: f64| x >= lo - BOX_SLACK && x <= hi + BOX_SLACK;
    if !inside(alpha1, iv.a1_lo, iv.a1_hi) || !inside(alpha2, iv.a2_lo, iv.a2_hi) {
        return Err(Nmf2Error::InfeasibleAlpha(format!(
            "({alpha1}, {alpha2}) outside [{}, {}] x [{}, {}]",
            iv.a1_lo, iv.a1_hi, iv.a2_lo, iv.a2_hi
        )));
    }
    let c = (alpha2 - alpha1).cos();
    if !(c > 0.0) {
        return Err(Nmf2Error::InfeasibleAlpha(format!("cos(alpha2 - alpha1) = {c} is not positive")));
    }
    let w = 1.0 / c.sqrt();
    let l = DenseMatrix::from_fn(a.rows(), 2, |i, col| {
        let p = a.psi[i];
        w * a.d_u[i] * if col == 0 { (alpha1 - p).cos() } else { (alpha2 - p).sin() }
    });
    let r = DenseMatrix::from_fn(a.cols(), 2, |j, col| {
        let f = a.phi[j];
        w * a.d_v[j] * if col == 0 { (alpha2 - f).cos() } else { (alpha1 - f).sin() }
    });
    let scale = a.d_u.iter().chain(&a.d_v).fold(0.0_f64, |m, &x| m.max(x));
    Ok(Rank2Nmf::new_clamped(l, r, 1e-12 * scale.max(1.0) * w))
}

/// [`alpha_nmf`] at the interval midpoints.
pub fn alpha_nmf_midpoint(a: &AngularForm) -> Result<Rank2Nmf> {
    let (a1, a2) = a.alpha_intervals().midpoints();
    alpha_nmf(a, a1, a2)
}

/// Maps box parameters to angles (`α = arctan t`).
pub fn t_to_alpha(t1: f64, t2: f64) -> (f64, f64) {
    (t1.atan(), t2.atan())
}

/// Maps angles to box parameters (`t = tan α`).
pub fn alpha_to_t(alpha1: f64, alpha2: f64) -> (f64, f64) {
    (alpha1.tan(), alpha2.tan())
}

fn descending(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].partial_cmp(&v[a]).unwrap_or(Ordering::Equal));
    idx
}

/// Validates the sign structure of a rank-2 matrix against its angular form.
///
/// Rows are sorted by `ψ` and columns by `φ`, both descending. Negative entries
/// must fill the upper-right corner (where `ψᵢ − φⱼ > π/2`) and the lower-left
/// corner (`φⱼ − ψᵢ > π/2`) as monotone staircases. When the matrix is
/// nonnegative the zero entries must form two corner rectangles and every other
/// entry must be positive. Returns `Err(NotRank2)` when `a` does not reproduce `m2`.
pub fn staircase_check(m2: &DenseMatrix, a: &AngularForm) -> Result<bool> {
    if m2.shape() != (a.rows(), a.cols()) {
        return Err(Nmf2Error::Shape("angular form does not match matrix shape".into()));
    }
    let scale = m2.max_abs().max(f64::MIN_POSITIVE);
    let mismatch = m2.frobenius_distance(&a.reconstruct());
    if mismatch > 1e-8 * m2.frobenius_norm().max(f64::MIN_POSITIVE) {
        return Err(Nmf2Error::NotRank2(mismatch));
    }
    let tol = 1e-10 * scale;
    let rows = descending(&a.psi);
    let cols = descending(&a.phi);
    let s = m2.select(&rows, &cols);
    let psi: Vec<f64> = rows.iter().map(|&i| a.psi[i]).collect();
    let phi: Vec<f64> = cols.iter().map(|&j| a.phi[j]).collect();
    let (m, n) = s.shape();
    let upper_right = |i: usize, j: usize| psi[i] > phi[j];

    if s.min_entry() < -tol {
        for i in 0..m {
            for j in 0..n {
                if s[(i, j)] >= -tol {
                    continue;
                }
                // Neighbours further into the corner must not be clearly positive.
                let ok = if upper_right(i, j) {
                    (i == 0 || s[(i - 1, j)] < tol) && (j + 1 == n || s[(i, j + 1)] < tol)
                } else {
                    (i + 1 == m || s[(i + 1, j)] < tol) && (j == 0 || s[(i, j - 1)] < tol)
                };
                if !ok {
                    return Ok(false);
                }
            }
        }
        return Ok(true);
    }

    // Nonnegative: zeros form corner rectangles, all else positive.
    for corner in [true, false] {
        let zeros: Vec<(usize, usize)> = (0..m)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| s[(i, j)] <= tol && upper_right(i, j) == corner)
            .collect();
        if zeros.is_empty() {
            continue;
        }
        let r_lo = zeros.iter().map(|z| z.0).min().unwrap();
        let r_hi = zeros.iter().map(|z| z.0).max().unwrap();
        let c_lo = zeros.iter().map(|z| z.1).min().unwrap();
        let c_hi = zeros.iter().map(|z| z.1).max().unwrap();
        let anchored = if corner { r_lo == 0 && c_hi == n - 1 } else { r_hi == m - 1 && c_lo == 0 };
        if !anchored || zeros.len() != (r_hi - r_lo + 1) * (c_hi - c_lo + 1) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn svd_from(u1: &[f64], u2: &[f64], v1: &[f64], v2: &[f64]) -> ScaledSvd2 {
        let s1: f64 = u1.iter().map(|x| x * x).sum();
        let s2: f64 = u2.iter().map(|x| x * x).sum();
        ScaledSvd2 {
            u1_hat: u1.to_vec(),
            u2_hat: u2.to_vec(),
            v1_hat: v1.to_vec(),
            v2_hat: v2.to_vec(),
            sigma1: s1,
            sigma2: s2,
        }
    }

    #[test]
    fn angular_45_degrees() {
        let s = svd_from(&[1.0, 1.0], &[1.0, -1.0], &[1.0, 1.0], &[1.0, -1.0]);
        let a = to_angular(&s).unwrap();
        assert!((a.psi[0] - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert!((a.psi[1] + std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert!((a.d_u[0] - 2f64.sqrt()).abs() < 1e-15);
        assert!(a.reconstruct().frobenius_distance(&s.truncation()) < 1e-14);
    }

    #[test]
    fn rank_one_direction_stats() {
        let s = svd_from(&[1.0, 2.0], &[0.0, 0.0], &[3.0], &[0.0]);
        let st = ratio_stats(&s).unwrap();
        assert_eq!((st.min_u, st.max_u), (0.0, 0.0));
        let b = tbox(&st).unwrap();
        assert!(b.t1_hi.is_infinite());
    }

    #[test]
    fn violated_condition() {
        let st = RatioStats { min_u: -1.0, max_u: 1.5, min_v: -1.0, max_v: 0.5 };
        assert!(!is_nonnegative_rank2(&st));
        assert!(tbox(&st).is_none());
    }

    #[test]
    fn nonpositive_dominant_rejected() {
        let s = svd_from(&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0], &[1.0, -1.0]);
        assert_eq!(to_angular(&s).unwrap_err(), Nmf2Error::NonpositiveDominant);
    }

    #[test]
    fn out_of_box() {
        // M₂ = [[2,0],[0,2]] from û = v̂ = [[1,1],[1,-1]]: box is the single point (1,1).
        let s = svd_from(&[1.0, 1.0], &[1.0, -1.0], &[1.0, 1.0], &[1.0, -1.0]);
        let st = ratio_stats(&s).unwrap();
        assert!(is_unique(&st, 1e-12));
        let f = exact_nmf(&s, 1.0, 1.0).unwrap();
        assert!(f.product().frobenius_distance(&s.truncation()) < 1e-14);
        assert!(matches!(exact_nmf(&s, 1.5, 1.0), Err(Nmf2Error::OutOfBox { .. })));
    }

    #[test]
    fn staircase_on_negative_corner() {
        let a = AngularForm {
            psi: vec![1.2, 0.3, -0.2],
            phi: vec![-0.6, 0.1, 0.9],
            d_u: vec![1.0, 2.0, 1.5],
            d_v: vec![1.0, 0.5, 2.0],
        };
        let m2 = a.reconstruct();
        assert!(m2.min_entry() < 0.0);
        assert!(staircase_check(&m2, &a).unwrap());
        let mut bad = m2.clone();
        bad[(0, 0)] += 1.0;
        assert!(matches!(staircase_check(&bad, &a), Err(Nmf2Error::NotRank2(_))));
    }
}
