//! Quadrant (QDR) approximation: clip the angular form of the rank-2
//! truncation into a nonnegative band, rescale, and factor exactly.

use std::cmp::Ordering;
use std::f64::consts::FRAC_PI_2;

use crate::error::{Nmf2Error, Result};
use crate::exact::{alpha_nmf_midpoint, to_angular, AngularForm, Rank2Nmf};
use crate::matrix::DenseMatrix;
use crate::preprocess::{preprocess, Preprocessed, DEFAULT_ZERO_RTOL};
use crate::svd::{svd2, ScaledSvd2, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// One half of the clipping problem: minimize `f₁(θ; Ψ, Φ, D_u, D_v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipProblem {
    pub psi: Vec<f64>,
    pub phi: Vec<f64>,
    pub d_u: Vec<f64>,
    pub d_v: Vec<f64>,
}

impl ClipProblem {
    /// The problem for `θ₁`.
    pub fn first(a: &AngularForm) -> ClipProblem {
        ClipProblem { psi: a.psi.clone(), phi: a.phi.clone(), d_u: a.d_u.clone(), d_v: a.d_v.clone() }
    }

    /// The problem for `θ₂`, i.e. `f₂(θ; Ψ, Φ, D_u, D_v) = f₁(θ; Φ, Ψ, D_v, D_u)`.
    pub fn second(a: &AngularForm) -> ClipProblem {
        ClipProblem { psi: a.phi.clone(), phi: a.psi.clone(), d_u: a.d_v.clone(), d_v: a.d_u.clone() }
    }

    /// `Σᵢ d_u² sin²(max(0, θ − π/2 − ψᵢ)) + Σⱼ d_v² sin²(max(0, φⱼ − θ))`.
    pub fn objective(&self, theta: f64) -> f64 {
        let lower: f64 = self
            .psi
            .iter()
            .zip(&self.d_u)
            .map(|(&p, &d)| {
                let x = (theta - FRAC_PI_2 - p).max(0.0);
                (d * x.sin()).powi(2)
            })
            .sum();
        let upper: f64 = self
            .phi
            .iter()
            .zip(&self.d_v)
            .map(|(&f, &d)| {
                let x = (f - theta).max(0.0);
                (d * x.sin()).powi(2)
            })
            .sum();
        lower + upper
    }

    /// `θ` range where the objective vanishes, if any.
    pub fn flat_band(&self) -> Option<(f64, f64)> {
        let psi_min = self.psi.iter().cloned().fold(f64::INFINITY, f64::min);
        let phi_max = self.phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = phi_max.max(0.0);
        let hi = (psi_min + FRAC_PI_2).min(FRAC_PI_2);
        (lo <= hi).then_some((lo, hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaHalf {
    pub theta: f64,
    pub f_value: f64,
    pub intervals_scanned: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaSolution {
    pub theta1: f64,
    pub theta2: f64,
    pub f_value: f64,
    pub intervals_scanned: usize,
}

#[derive(Clone, Copy)]
enum Event {
    /// `θ` passes `ψᵢ + π/2`: the lower clip of row `i` becomes active.
    Lower(usize),
    /// `θ` passes `φⱼ`: the upper clip of column `j` becomes inactive.
    Upper(usize),
}

/// Global minimizer of `f₁` on `[0, π/2]`.
///
/// On each piece between consecutive breakpoints the objective is
/// `const + ½(a cos 2θ + b sin 2θ)`, whose minimizer is `atan2(−b, −a)/2`.
/// `a` and `b` are updated in O(1) per breakpoint, and the scan stops at the
/// first piece containing its own minimizer (the objective is unimodal).
pub fn solve_theta(p: &ClipProblem) -> ThetaHalf {
    if let Some((lo, hi)) = p.flat_band() {
        let theta = 0.5 * (lo + hi);
        return ThetaHalf { theta, f_value: p.objective(theta), intervals_scanned: 0 };
    }
    let psi_min = p.psi.iter().cloned().fold(f64::INFINITY, f64::min);
    let phi_max = p.phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = psi_min + FRAC_PI_2;
    let hi = phi_max;

    let mut a = 0.0;
    let mut b = 0.0;
    let mut events: Vec<(f64, Event)> = Vec::new();
    for (i, (&psi, &d)) in p.psi.iter().zip(&p.d_u).enumerate() {
        let at = psi + FRAC_PI_2;
        if at <= lo {
            let w = d * d;
            a += w * (2.0 * psi).cos();
            b += w * (2.0 * psi).sin();
        } else if at < hi {
            events.push((at, Event::Lower(i)));
        }
    }
    for (j, (&phi, &d)) in p.phi.iter().zip(&p.d_v).enumerate() {
        if phi >= hi {
            let w = d * d;
            a -= w * (2.0 * phi).cos();
            b -= w * (2.0 * phi).sin();
        } else if phi > lo {
            let w = d * d;
            a -= w * (2.0 * phi).cos();
            b -= w * (2.0 * phi).sin();
            events.push((phi, Event::Upper(j)));
        }
    }
    events.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(Ordering::Equal));

    let mut left = lo;
    let mut scanned = 0;
    let mut boundaries: Vec<f64> = vec![lo];
    for k in 0..=events.len() {
        let right = if k < events.len() { events[k].0 } else { hi };
        scanned += 1;
        if right > left {
            let cand = if a == 0.0 && b == 0.0 { 0.5 * (left + right) } else { 0.5 * (-b).atan2(-a) };
            if cand >= left && cand <= right {
                return ThetaHalf { theta: cand, f_value: p.objective(cand), intervals_scanned: scanned };
            }
        }
        if k < events.len() {
            match events[k].1 {
                Event::Lower(i) => {
                    let w = p.d_u[i] * p.d_u[i];
                    a += w * (2.0 * p.psi[i]).cos();
                    b += w * (2.0 * p.psi[i]).sin();
                }
                Event::Upper(j) => {
                    let w = p.d_v[j] * p.d_v[j];
                    a += w * (2.0 * p.phi[j]).cos();
                    b += w * (2.0 * p.phi[j]).sin();
                }
            }
            boundaries.push(right);
        }
        left = right;
    }
    // Rounding pushed the stationary point just across a breakpoint; take the best breakpoint.
    boundaries.push(hi);
    let (theta, f_value) = boundaries
        .iter()
        .map(|&t| (t, p.objective(t)))
        .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap_or(Ordering::Equal))
        .expect("at least one boundary");
    ThetaHalf { theta, f_value, intervals_scanned: scanned }
}

/// Both clipping angles for an angular form.
pub fn solve_thetas(a: &AngularForm) -> ThetaSolution {
    let h1 = solve_theta(&ClipProblem::first(a));
    let h2 = solve_theta(&ClipProblem::second(a));
    ThetaSolution {
        theta1: h1.theta,
        theta2: h2.theta,
        f_value: h1.f_value + h2.f_value,
        intervals_scanned: h1.intervals_scanned + h2.intervals_scanned,
    }
}

/// Clips the angles into the band defined by `(θ₁, θ₂)` and rescales the weights by `cos(Ψ − Ψ̂)`.
pub fn clip(a: &AngularForm, theta1: f64, theta2: f64) -> AngularForm {
    let clip_side = |angles: &[f64], w: &[f64], lo: f64, hi: f64| -> (Vec<f64>, Vec<f64>) {
        angles
            .iter()
            .zip(w)
            .map(|(&x, &d)| {
                let c = x.max(lo).min(hi);
                (c, d * (x - c).cos())
            })
            .unzip()
    };
    let (psi, d_u) = clip_side(&a.psi, &a.d_u, theta1 - FRAC_PI_2, theta2);
    let (phi, d_v) = clip_side(&a.phi, &a.d_v, theta2 - FRAC_PI_2, theta1);
    AngularForm { psi, phi, d_u, d_v }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QdrConfig {
    pub svd_tol: f64,
    pub svd_max_iter: usize,
    /// Zero-line threshold relative to the largest entry.
    pub zero_rtol: f64,
}

impl Default for QdrConfig {
    fn default() -> Self {
        QdrConfig { svd_tol: DEFAULT_TOL, svd_max_iter: DEFAULT_MAX_ITER, zero_rtol: DEFAULT_ZERO_RTOL }
    }
}

/// How the factorization was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QdrPath {
    /// The rank-2 truncation was already nonnegative.
    Exact,
    /// `σ₂ = 0`.
    RankOne,
    /// Angles were clipped.
    Clipped,
    /// The input was a direct sum of several blocks.
    Reducible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QdrOutput {
    pub nmf: Rank2Nmf,
    pub path: QdrPath,
    pub theta: Option<ThetaSolution>,
}

/// QDR on a nonnegative matrix; see [`qdr_detailed`].
pub fn qdr(n: &DenseMatrix, cfg: &QdrConfig) -> Result<Rank2Nmf> {
    qdr_detailed(n, cfg).map(|o| o.nmf)
}

/// QDR with the path taken and the clipping angles.
///
/// Zero lines are removed first and get zero factor rows. A reducible input
/// keeps the better of two candidates: rank-one factors on the two blocks with
/// the largest singular values, or QDR on the single block where it removes
/// the most error.
pub fn qdr_detailed(n: &DenseMatrix, cfg: &QdrConfig) -> Result<QdrOutput> {
    let pre = preprocess(n, cfg.zero_rtol * n.max_abs())?;
    let out = if pre.is_irreducible() { qdr_core(&pre.core, cfg)? } else { qdr_reducible(&pre, cfg)? };
    let (l, r) = pre.lift_factors(&out.nmf.l, &out.nmf.r);
    Ok(QdrOutput { nmf: Rank2Nmf { l, r }, ..out })
}

/// QDR from an already computed decomposition of an irreducible matrix.
pub fn qdr_from_svd(s: &ScaledSvd2) -> Result<QdrOutput> {
    if s.is_rank_one() {
        let l = DenseMatrix::from_columns(&[s.u1_hat.clone(), vec![0.0; s.rows()]])?;
        let r = DenseMatrix::from_columns(&[s.v1_hat.clone(), vec![0.0; s.cols()]])?;
        return Ok(QdrOutput { nmf: Rank2Nmf { l, r }, path: QdrPath::RankOne, theta: None });
    }
    let a = to_angular(s)?;
    if a.is_nonnegative() {
        return Ok(QdrOutput { nmf: alpha_nmf_midpoint(&a)?, path: QdrPath::Exact, theta: None });
    }
    let th = solve_thetas(&a);
    let clipped = clip(&a, th.theta1, th.theta2);
    Ok(QdrOutput { nmf: alpha_nmf_midpoint(&clipped)?, path: QdrPath::Clipped, theta: Some(th) })
}

fn qdr_core(core: &DenseMatrix, cfg: &QdrConfig) -> Result<QdrOutput> {
    let s = svd2(core, cfg.svd_tol, cfg.svd_max_iter)?;
    qdr_from_svd(&s)
}

fn qdr_reducible(pre: &Preprocessed, cfg: &QdrConfig) -> Result<QdrOutput> {
    let (m, n) = pre.core.shape();
    struct Block {
        rows: Vec<usize>,
        cols: Vec<usize>,
        u1: Vec<f64>,
        v1: Vec<f64>,
        sigma1: f64,
        qdr: Rank2Nmf,
        gain: f64,
    }
    let mut blocks = Vec::with_capacity(pre.blocks.len());
    for (b, (rows, cols)) in pre.blocks.iter().enumerate() {
        let sub = pre.block_matrix(b);
        let s = svd2(&sub, cfg.svd_tol, cfg.svd_max_iter)?;
        let q = qdr_from_svd(&s)?.nmf;
        let norm2 = sub.frobenius_norm().powi(2);
        let gain = norm2 - q.objective(&sub).powi(2);
        let u1 = s.u1_hat.clone();
        let v1 = s.v1_hat.clone();
        blocks.push(Block { rows: rows.clone(), cols: cols.clone(), u1, v1, sigma1: s.sigma1, qdr: q, gain });
    }

    let mut order: Vec<usize> = (0..blocks.len()).collect();
    order.sort_by(|&x, &y| blocks[y].sigma1.partial_cmp(&blocks[x].sigma1).unwrap_or(Ordering::Equal));
    let rank_one_gain: f64 = order.iter().take(2).map(|&k| blocks[k].sigma1 * blocks[k].sigma1).sum();
    let best_qdr = (0..blocks.len())
        .max_by(|&x, &y| blocks[x].gain.partial_cmp(&blocks[y].gain).unwrap_or(Ordering::Equal))
        .ok_or(Nmf2Error::EmptyMatrix)?;

    let mut l = DenseMatrix::zeros(m, 2);
    let mut r = DenseMatrix::zeros(n, 2);
    if rank_one_gain >= blocks[best_qdr].gain {
        for (c, &k) in order.iter().take(2).enumerate() {
            let bl = &blocks[k];
            for (a, &i) in bl.rows.iter().enumerate() {
                l[(i, c)] = bl.u1[a];
            }
            for (a, &j) in bl.cols.iter().enumerate() {
                r[(j, c)] = bl.v1[a];
            }
        }
    } else {
        let bl = &blocks[best_qdr];
        for (a, &i) in bl.rows.iter().enumerate() {
            l.row_mut(i).copy_from_slice(bl.qdr.l.row(a));
        }
        for (a, &j) in bl.cols.iter().enumerate() {
            r.row_mut(j).copy_from_slice(bl.qdr.r.row(a));
        }
    }
    Ok(QdrOutput { nmf: Rank2Nmf { l, r }, path: QdrPath::Reducible, theta: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_band_returns_midpoint() {
        let p = ClipProblem { psi: vec![0.2, 0.4], phi: vec![0.1, 0.3], d_u: vec![1.0; 2], d_v: vec![1.0; 2] };
        let h = solve_theta(&p);
        assert_eq!(h.f_value, 0.0);
        assert!((h.theta - 0.5 * (0.3 + FRAC_PI_2)).abs() < 1e-15);
    }

    #[test]
    fn single_offending_pair_matches_scan() {
        // ψ + π/2 < φ forces a compromise.
        let p = ClipProblem { psi: vec![-1.3], phi: vec![1.2], d_u: vec![1.0], d_v: vec![2.0] };
        let h = solve_theta(&p);
        let grid = (0..=200_000)
            .map(|k| k as f64 * FRAC_PI_2 / 200_000.0)
            .map(|t| (t, p.objective(t)))
            .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap();
        assert!((h.theta - grid.0).abs() < 1e-5, "{} vs {}", h.theta, grid.0);
        assert!(h.f_value <= grid.1 + 1e-14);
    }

    #[test]
    fn clipping_lands_in_band() {
        let a = AngularForm {
            psi: vec![1.4, -1.2, 0.3],
            phi: vec![-1.1, 1.3, 0.0],
            d_u: vec![1.0, 0.5, 2.0],
            d_v: vec![0.7, 1.1, 1.5],
        };
        let th = solve_thetas(&a);
        let c = clip(&a, th.theta1, th.theta2);
        assert!(c.is_nonnegative());
        assert!(c.reconstruct().min_entry() >= -1e-12);
    }
}
