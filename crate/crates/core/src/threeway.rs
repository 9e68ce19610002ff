//! Three-way factorizations `N₂ = L·M·Rᵀ` with nonnegative `L`, `M`, `R`,
//! their orthogonality defects and the symmetric specialization.

use crate::error::{Nmf2Error, Result};
use crate::exact::{ratio_stats, AngularForm, RatioStats, BOX_SLACK};
use crate::matrix::DenseMatrix;
use crate::svd::{ScaledSvd2, SymmetricEig2};

/// `(t̲₁, t̄₁, t̲₂, t̄₂)`.
///
/// Feasible when `max_v ≤ t̲₁ ≤ t̄₁ ≤ −1/min_u` and `max_u ≤ t̲₂ ≤ t̄₂ ≤ −1/min_v`.
/// `L` uses `(t̄₁, t̲₂)` and `R` uses `(t̄₂, t̲₁)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeWayParams {
    pub t1_lo: f64,
    pub t1_hi: f64,
    pub t2_lo: f64,
    pub t2_hi: f64,
}

impl ThreeWayParams {
    /// `t̲ = t̄` on both sides.
    pub fn collapsed(t1: f64, t2: f64) -> ThreeWayParams {
        ThreeWayParams { t1_lo: t1, t1_hi: t1, t2_lo: t2, t2_hi: t2 }
    }

    /// The symmetric case uses a single pair `(t̲, t̄)` for both sides.
    pub fn symmetric(t_lo: f64, t_hi: f64) -> ThreeWayParams {
        ThreeWayParams { t1_lo: t_lo, t1_hi: t_hi, t2_lo: t_lo, t2_hi: t_hi }
    }
}

/// Closed bounds on the parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBounds {
    pub t1_min: f64,
    pub t1_max: f64,
    pub t2_min: f64,
    pub t2_max: f64,
}

impl ParamBounds {
    pub fn from_stats(st: &RatioStats) -> ParamBounds {
        let nr = |x: f64| if x < 0.0 { -1.0 / x } else { f64::INFINITY };
        ParamBounds { t1_min: st.max_v, t1_max: nr(st.min_u), t2_min: st.max_u, t2_max: nr(st.min_v) }
    }

    pub fn check(&self, p: &ThreeWayParams) -> Result<()> {
        let ordered = |name: &str, a: f64, lo: f64, hi: f64, b: f64| -> Result<()> {
            let ok = a >= lo - BOX_SLACK && b <= hi + BOX_SLACK && a <= b + BOX_SLACK;
            if ok {
                Ok(())
            } else {
                Err(Nmf2Error::InfeasibleParams(format!("need {lo} <= {name}_lo ({a}) <= {name}_hi ({b}) <= {hi}")))
            }
        };
        ordered("t1", p.t1_lo, self.t1_min, self.t1_max, p.t1_hi)?;
        ordered("t2", p.t2_lo, self.t2_min, self.t2_max, p.t2_hi)
    }

    /// Default choice: both sides collapsed at the midpoint of their range.
    pub fn midpoint(&self) -> ThreeWayParams {
        let mid = |lo: f64, hi: f64| {
            if hi.is_finite() {
                0.5 * (lo + hi)
            } else {
                (2.0 * lo).max(lo + 1.0)
            }
        };
        ThreeWayParams::collapsed(mid(self.t1_min, self.t1_max), mid(self.t2_min, self.t2_max))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThreeWayNmf {
    pub l: DenseMatrix,
    pub m_mid: DenseMatrix,
    pub r: DenseMatrix,
    pub params: ThreeWayParams,
    /// Set when `R = L` and `M` is symmetric.
    pub symmetric: bool,
}

impl ThreeWayNmf {
    /// `L·M·Rᵀ`; the symmetric case fills the upper triangle and mirrors it.
    pub fn product(&self) -> DenseMatrix {
        let lm = self.l.matmul(&self.m_mid);
        if !self.symmetric {
            return lm.matmul_t(&self.r);
        }
        let n = self.l.rows();
        let mut out = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = lm[(i, 0)] * self.l[(j, 0)] + lm[(i, 1)] * self.l[(j, 1)];
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }

    pub fn min_entry(&self) -> f64 {
        self.l.min_entry().min(self.m_mid.min_entry()).min(self.r.min_entry())
    }

    /// Rescales `L` and `R` to unit-norm columns, absorbing the scaling in `M`.
    pub fn normalized(&self) -> ThreeWayNmf {
        let norms = |f: &DenseMatrix| [crate::matrix::norm2(&f.column(0)), crate::matrix::norm2(&f.column(1))];
        let nl = norms(&self.l);
        let nr = norms(&self.r);
        let inv = |x: f64| if x > 0.0 { 1.0 / x } else { 0.0 };
        let l = DenseMatrix::from_fn(self.l.rows(), 2, |i, c| self.l[(i, c)] * inv(nl[c]));
        let r = DenseMatrix::from_fn(self.r.rows(), 2, |j, c| self.r[(j, c)] * inv(nr[c]));
        let m_mid = DenseMatrix::from_fn(2, 2, |a, b| nl[a] * self.m_mid[(a, b)] * nr[b]);
        ThreeWayNmf { l, m_mid, r, params: self.params, symmetric: self.symmetric }
    }
}

/// Orthogonality defects of `L` and `R` after unit-diagonal normalization of their Gram matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefectReport {
    pub def_l: f64,
    pub def_r: f64,
}

/// `|cos θ|` between the two columns of an m×2 factor.
pub fn gram_defect(f: &DenseMatrix) -> f64 {
    let g = f.t_matmul(f);
    let d = (g[(0, 0)] * g[(1, 1)]).sqrt();
    if d > 0.0 {
        (g[(0, 1)] / d).abs()
    } else {
        0.0
    }
}

fn cos2(s1: f64, s2: f64, hi: f64, lo: f64) -> f64 {
    let num = s1 * lo - s2 * hi;
    num * num / ((s1 + s2 * hi * hi) * (s2 + s1 * lo * lo))
}

/// Closed-form defects from the parameters and the two leading singular values.
pub fn defects_closed(p: &ThreeWayParams, sigma1: f64, sigma2: f64) -> DefectReport {
    DefectReport {
        def_l: cos2(sigma1, sigma2, p.t1_hi, p.t2_lo).sqrt(),
        def_r: cos2(sigma1, sigma2, p.t2_hi, p.t1_lo).sqrt(),
    }
}

/// Defects of a factorization built by [`threeway_nmf`] from `s`.
pub fn defects(t: &ThreeWayNmf, s: &ScaledSvd2) -> DefectReport {
    defects_closed(&t.params, s.sigma1, s.sigma2)
}

fn scaled_t(hi: f64, lo: f64) -> [[f64; 2]; 2] {
    let w = 1.0 / (hi * lo + 1.0).sqrt();
    [[w, lo * w], [hi * w, -w]]
}

fn apply(u1: &[f64], u2: &[f64], t: &[[f64; 2]; 2]) -> DenseMatrix {
    DenseMatrix::from_fn(u1.len(), 2, |i, c| u1[i] * t[0][c] + u2[i] * t[1][c])
}

fn clamp_tiny(m: &mut DenseMatrix, tol: f64) {
    for i in 0..m.rows() {
        for x in m.row_mut(i) {
            if *x < 0.0 && *x >= -tol {
                *x = 0.0;
            }
        }
    }
}

/// `L = Û T_L`, `R = V̂ T_R`, `M = T_L T_Rᵀ` with
/// `T_L = [[1, t̲₂], [t̄₁, −1]]/√(t̄₁t̲₂+1)` and `T_R = [[1, t̲₁], [t̄₂, −1]]/√(t̲₁t̄₂+1)`.
pub fn threeway_nmf(s: &ScaledSvd2, p: &ThreeWayParams) -> Result<ThreeWayNmf> {
    let st = ratio_stats(s)?;
    ParamBounds::from_stats(&st).check(p)?;
    let tl = scaled_t(p.t1_hi, p.t2_lo);
    let tr = scaled_t(p.t2_hi, p.t1_lo);
    let mut l = apply(&s.u1_hat, &s.u2_hat, &tl);
    let mut r = apply(&s.v1_hat, &s.v2_hat, &tr);
    let w = 1.0 / ((p.t1_hi * p.t2_lo + 1.0).sqrt() * (p.t1_lo * p.t2_hi + 1.0).sqrt());
    let mut m_mid = DenseMatrix::from_rows(&[
        [(1.0 + p.t2_lo * p.t1_lo) * w, (p.t2_hi - p.t2_lo) * w],
        [(p.t1_hi - p.t1_lo) * w, (1.0 + p.t1_hi * p.t2_hi) * w],
    ])?;
    let tol = 1e-12 * (s.sigma1 + s.sigma2).sqrt().max(1.0);
    clamp_tiny(&mut l, tol);
    clamp_tiny(&mut r, tol);
    clamp_tiny(&mut m_mid, 1e-12);
    Ok(ThreeWayNmf { l, m_mid, r, params: *p, symmetric: false })
}

/// Parameters minimizing both defects, with flags for exact orthogonality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinDefect {
    pub params: ThreeWayParams,
    pub report: DefectReport,
    pub zero_l: bool,
    pub zero_r: bool,
}

/// The defect-minimizing corner: `t̄₁ = −1/min_u`, `t̲₂ = max_u` for `L` and
/// `t̄₂ = −1/min_v`, `t̲₁ = max_v` for `R`.
pub fn minimize_defects(s: &ScaledSvd2) -> Result<MinDefect> {
    let st = ratio_stats(s)?;
    let b = ParamBounds::from_stats(&st);
    if !b.t1_max.is_finite() || !b.t2_max.is_finite() {
        return Err(Nmf2Error::InfeasibleParams("second singular vectors have no negative entry".into()));
    }
    let params = ThreeWayParams { t1_lo: b.t1_min, t1_hi: b.t1_max, t2_lo: b.t2_min, t2_hi: b.t2_max };
    b.check(&params)?;
    let report = defects_closed(&params, s.sigma1, s.sigma2);
    Ok(MinDefect { params, report, zero_l: report.def_l <= 1e-10, zero_r: report.def_r <= 1e-10 })
}

/// Angle form: `L = D_u[cos(ᾱ₁−Ψ), sin(α̲₂−Ψ)]`, `R = D_v[cos(ᾱ₂−Φ), sin(α̲₁−Φ)]`, and
/// `M` the inverse of `[[cos(ᾱ₂−ᾱ₁), sin(α̲₂−ᾱ₂)], [sin(α̲₁−ᾱ₁), cos(α̲₂−α̲₁)]]`.
pub fn alpha_threeway(a: &AngularForm, a1_lo: f64, a1_hi: f64, a2_lo: f64, a2_hi: f64) -> Result<ThreeWayNmf> {
    let iv = a.alpha_intervals();
    let ok =
        |lo: f64, hi: f64, min: f64, max: f64| lo >= min - BOX_SLACK && hi <= max + BOX_SLACK && lo <= hi + BOX_SLACK;
    if !ok(a1_lo, a1_hi, iv.a1_lo, iv.a1_hi) || !ok(a2_lo, a2_hi, iv.a2_lo, iv.a2_hi) {
        return Err(Nmf2Error::InfeasibleAlpha(format!(
            "need {} <= {a1_lo} <= {a1_hi} <= {} and {} <= {a2_lo} <= {a2_hi} <= {}",
            iv.a1_lo, iv.a1_hi, iv.a2_lo, iv.a2_hi
        )));
    }
    let det = (a2_hi - a1_lo).cos() * (a2_lo - a1_hi).cos();
    if !(det > 0.0) {
        return Err(Nmf2Error::InfeasibleAlpha(format!("middle factor is singular (det {det})")));
    }
    let mut l = DenseMatrix::from_fn(a.rows(), 2, |i, c| {
        let p = a.psi[i];
        a.d_u[i] * if c == 0 { (a1_hi - p).cos() } else { (a2_lo - p).sin() }
    });
    let mut r = DenseMatrix::from_fn(a.cols(), 2, |j, c| {
        let f = a.phi[j];
        a.d_v[j] * if c == 0 { (a2_hi - f).cos() } else { (a1_lo - f).sin() }
    });
    let mut m_mid = DenseMatrix::from_rows(&[
        [(a2_lo - a1_lo).cos() / det, (a2_hi - a2_lo).sin() / det],
        [(a1_hi - a1_lo).sin() / det, (a2_hi - a1_hi).cos() / det],
    ])?;
    let scale = a.d_u.iter().chain(&a.d_v).fold(1.0_f64, |m, &x| m.max(x));
    clamp_tiny(&mut l, 1e-12 * scale);
    clamp_tiny(&mut r, 1e-12 * scale);
    clamp_tiny(&mut m_mid, 1e-12);
    let params = ThreeWayParams { t1_lo: a1_lo.tan(), t1_hi: a1_hi.tan(), t2_lo: a2_lo.tan(), t2_hi: a2_hi.tan() };
    Ok(ThreeWayNmf { l, m_mid, r, params, symmetric: false })
}

/// Admissible `(t̲, t̄)` range for a symmetric decomposition:
/// `max_u ≤ t̲ ≤ t̄ ≤ −1/min_u`, and additionally `t̲ ≤ 1 ≤ t̄` when indefinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricBounds {
    pub t_min: f64,
    pub t_max: f64,
    pub indefinite: bool,
}

impl SymmetricBounds {
    pub fn from_eig(e: &SymmetricEig2) -> Result<SymmetricBounds> {
        if e.u1_hat.iter().any(|&x| !(x > 0.0)) {
            return Err(Nmf2Error::NonpositiveDominant);
        }
        let (lo, hi) = e.ratios().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &q| (a.min(q), b.max(q)));
        let t_max = if lo < 0.0 { -1.0 / lo } else { f64::INFINITY };
        Ok(SymmetricBounds { t_min: hi, t_max, indefinite: !e.is_semidefinite() })
    }

    pub fn check(&self, t_lo: f64, t_hi: f64) -> Result<()> {
        let mut ok = t_lo >= self.t_min - BOX_SLACK && t_hi <= self.t_max + BOX_SLACK && t_lo <= t_hi + BOX_SLACK;
        if self.indefinite {
            ok &= t_lo <= 1.0 + BOX_SLACK && t_hi >= 1.0 - BOX_SLACK;
        }
        if ok {
            Ok(())
        } else {
            Err(Nmf2Error::InfeasibleParams(format!(
                "(t_lo, t_hi) = ({t_lo}, {t_hi}) outside [{}, {}]{}",
                self.t_min,
                self.t_max,
                if self.indefinite { " with t_lo <= 1 <= t_hi" } else { "" }
            )))
        }
    }

    /// Collapsed default: the midpoint, or `t = 1` in the indefinite case.
    pub fn default_t(&self) -> f64 {
        if self.indefinite {
            1.0
        } else if self.t_max.is_finite() {
            0.5 * (self.t_min + self.t_max)
        } else {
            (2.0 * self.t_min).max(self.t_min + 1.0)
        }
    }
}

/// `L = Û T`, `M = (Tᵀ S T)⁻¹` with `T = [[1, t̲], [t̄, −1]]/√(t̄t̲+1)`; output `R = L`.
pub fn threeway_symmetric(e: &SymmetricEig2, t_lo: f64, t_hi: f64) -> Result<ThreeWayNmf> {
    let b = SymmetricBounds::from_eig(e)?;
    b.check(t_lo, t_hi)?;
    let t = scaled_t(t_hi, t_lo);
    let mut l = apply(&e.u1_hat, &e.u2_hat, &t);
    let w = 1.0 / (t_hi * t_lo + 1.0);
    let (m11, m12, m22) = if b.indefinite {
        ((1.0 - t_lo * t_lo) * w, (t_lo + t_hi) * w, (t_hi * t_hi - 1.0) * w)
    } else {
        ((1.0 + t_lo * t_lo) * w, (t_hi - t_lo) * w, (1.0 + t_hi * t_hi) * w)
    };
    let mut m_mid = DenseMatrix::from_rows(&[[m11, m12], [m12, m22]])?;
    let tol = 1e-12 * (e.lambda1 + e.lambda2.abs()).sqrt().max(1.0);
    clamp_tiny(&mut l, tol);
    clamp_tiny(&mut m_mid, 1e-12);
    Ok(ThreeWayNmf { r: l.clone(), l, m_mid, params: ThreeWayParams::symmetric(t_lo, t_hi), symmetric: true })
}

/// Corner `(t̲, t̄) = (max_u, −1/min_u)` minimizing the defect in the semidefinite case.
pub fn minimize_defect_symmetric(e: &SymmetricEig2) -> Result<(f64, f64)> {
    let b = SymmetricBounds::from_eig(e)?;
    if !b.t_max.is_finite() {
        return Err(Nmf2Error::InfeasibleParams("second eigenvector has no negative entry".into()));
    }
    if b.indefinite {
        Ok((b.t_min.min(1.0), b.t_max.max(1.0)))
    } else {
        Ok((b.t_min, b.t_max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ScaledSvd2 {
        // Positive 3×3 rank-2 matrix.
        let n = DenseMatrix::from_rows(&[[3.0, 1.0, 2.0], [1.0, 2.0, 1.5], [2.0, 1.0, 1.5]]).unwrap();
        crate::svd::svd2_default(&n).unwrap()
    }

    #[test]
    fn collapsed_params_give_diagonal_middle() {
        let s = sample();
        let st = ratio_stats(&s).unwrap();
        let b = ParamBounds::from_stats(&st);
        let p = b.midpoint();
        let t = threeway_nmf(&s, &p).unwrap();
        assert_eq!(t.m_mid[(0, 1)], 0.0);
        assert_eq!(t.m_mid[(1, 0)], 0.0);
        assert!(t.product().frobenius_distance(&s.truncation()) < 1e-12);
    }

    #[test]
    fn infeasible_ordering() {
        let s = sample();
        let st = ratio_stats(&s).unwrap();
        let b = ParamBounds::from_stats(&st);
        let p = ThreeWayParams { t1_lo: b.t1_max, t1_hi: b.t1_min, t2_lo: b.t2_min, t2_hi: b.t2_min };
        if b.t1_max > b.t1_min + 1e-9 {
            assert!(matches!(threeway_nmf(&s, &p), Err(Nmf2Error::InfeasibleParams(_))));
        }
    }

    #[test]
    fn closed_defect_matches_gram() {
        let s = sample();
        let md = minimize_defects(&s).unwrap();
        let t = threeway_nmf(&s, &md.params).unwrap();
        assert!((gram_defect(&t.l) - md.report.def_l).abs() < 1e-10);
        assert!((gram_defect(&t.r) - md.report.def_r).abs() < 1e-10);
    }
}
