//! Dominant rank-2 singular and symmetric eigen decompositions.
//!
//! Both solvers run block subspace iteration on a small block (up to
//! [`BLOCK`] vectors) with a Rayleigh–Ritz step at every iteration, and stop
//! once the residuals of the two leading Ritz pairs fall below `tol·σ₁`.
//! The Ritz step uses one-sided Jacobi (SVD) or cyclic Jacobi (symmetric
//! eigenproblem) on the projected block, so small inputs are solved exactly.

use std::cmp::Ordering;

use crate::error::{Nmf2Error, Result};
use crate::matrix::{dot, norm2, DenseMatrix};

/// Width of the iteration block. Extra vectors beyond the two wanted ones speed
/// up convergence from `σ₃/σ₂` to `σ_{BLOCK+1}/σ₂` per step.
pub const BLOCK: usize = 10;

/// Default relative residual tolerance.
pub const DEFAULT_TOL: f64 = 1e-13;

/// Default iteration cap.
pub const DEFAULT_MAX_ITER: usize = 20_000;

/// `σ₂ ≤ RANK_TOL·σ₁` is reported as an exact zero.
pub const RANK_TOL: f64 = 1e-12;

/// Relative gap under which the two leading singular values count as tied.
pub const TIE_TOL: f64 = 1e-10;

/// Scaled dominant singular pair: `û_k = u_k σ_k^{1/2}`, `v̂_k = v_k σ_k^{1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledSvd2 {
    pub u1_hat: Vec<f64>,
    pub u2_hat: Vec<f64>,
    pub v1_hat: Vec<f64>,
    pub v2_hat: Vec<f64>,
    pub sigma1: f64,
    pub sigma2: f64,
}

impl ScaledSvd2 {
    pub fn rows(&self) -> usize {
        self.u1_hat.len()
    }

    pub fn cols(&self) -> usize {
        self.v1_hat.len()
    }

    pub fn is_rank_one(&self) -> bool {
        self.sigma2 == 0.0
    }

    /// The rank-2 truncation `û₁v̂₁ᵀ + û₂v̂₂ᵀ`.
    pub fn truncation(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.rows(), self.cols(), |i, j| {
            self.u1_hat[i] * self.v1_hat[j] + self.u2_hat[i] * self.v2_hat[j]
        })
    }

    /// `[û₁ û₂]` as an m×2 matrix.
    pub fn u_hat(&self) -> DenseMatrix {
        DenseMatrix::from_columns(&[&self.u1_hat, &self.u2_hat]).expect("equal lengths")
    }

    /// `[v̂₁ v̂₂]` as an n×2 matrix.
    pub fn v_hat(&self) -> DenseMatrix {
        DenseMatrix::from_columns(&[&self.v1_hat, &self.v2_hat]).expect("equal lengths")
    }

    /// Swaps the roles of rows and columns (the decomposition of `Nᵀ`).
    pub fn transposed(&self) -> ScaledSvd2 {
        ScaledSvd2 {
            u1_hat: self.v1_hat.clone(),
            u2_hat: self.v2_hat.clone(),
            v1_hat: self.u1_hat.clone(),
            v2_hat: self.u2_hat.clone(),
            sigma1: self.sigma1,
            sigma2: self.sigma2,
        }
    }
}

/// Scaled dominant eigenpairs of a symmetric matrix: `N₂ = [û₁ û₂] S [û₁ û₂]ᵀ`
/// with `û_k = u_k |λ_k|^{1/2}` and `S = diag(1, sign λ₂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEig2 {
    pub u1_hat: Vec<f64>,
    pub u2_hat: Vec<f64>,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl SymmetricEig2 {
    pub fn len(&self) -> usize {
        self.u1_hat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u1_hat.is_empty()
    }

    /// `true` when `λ₂ ≥ 0`, i.e. `S = I₂`.
    pub fn is_semidefinite(&self) -> bool {
        self.lambda2 >= 0.0
    }

    /// Sign of the second diagonal entry of `S`.
    pub fn s2(&self) -> f64 {
        if self.is_semidefinite() {
            1.0
        } else {
            -1.0
        }
    }

    pub fn truncation(&self) -> DenseMatrix {
        let s2 = self.s2();
        let n = self.len();
        DenseMatrix::from_fn(n, n, |i, j| self.u1_hat[i] * self.u1_hat[j] + s2 * self.u2_hat[i] * self.u2_hat[j])
    }

    /// Ratios `û_{i,2}/û_{i,1}`.
    pub fn ratios(&self) -> Vec<f64> {
        self.u2_hat.iter().zip(&self.u1_hat).map(|(b, a)| b / a).collect()
    }
}

/// Scaled dominant two singular triplets of a nonnegative matrix.
///
/// The first pair is made entrywise nonnegative. A matrix whose dominant
/// pair keeps mixed signs is reported as [`Nmf2Error::ReducibleInput`].
pub fn svd2(n: &DenseMatrix, tol: f64, max_iter: usize) -> Result<ScaledSvd2> {
    let (m, k) = n.shape();
    let p = BLOCK.min(m.min(k));
    let mut q = start_block(n, p);
    let scale = n.frobenius_norm();
    if scale == 0.0 {
        return Err(Nmf2Error::EmptyMatrix);
    }

    let mut last_res = f64::INFINITY;
    for _ in 0..max_iter.max(1) {
        // Rayleigh–Ritz: W = N Q = U_w S Yᵀ, Ritz pairs (U_w, Q Y, S).
        let w = mul_cols(n, &q);
        let (uw, s, y) = jacobi_svd_cols(&w);
        let v = combine(&q, &y);
        let z = t_mul_cols(n, &uw);
        let res = (0..2.min(p))
            .map(|c| {
                let d: Vec<f64> = z[c].iter().zip(&v[c]).map(|(a, b)| a - s[c] * b).collect();
                norm2(&d)
            })
            .fold(0.0_f64, f64::max)
            / s[0].max(f64::MIN_POSITIVE);
        last_res = res;
        if res <= tol || p == m.min(k) && res <= tol.max(1e-12) {
            return finish_svd(uw, v, s);
        }
        q = orthonormalize(z);
    }
    Err(Nmf2Error::NoConvergence { iters: max_iter, residual: last_res })
}

/// [`svd2`] with default tolerance and iteration cap.
pub fn svd2_default(n: &DenseMatrix) -> Result<ScaledSvd2> {
    svd2(n, DEFAULT_TOL, DEFAULT_MAX_ITER)
}

fn finish_svd(uw: Vec<Vec<f64>>, v: Vec<Vec<f64>>, s: Vec<f64>) -> Result<ScaledSvd2> {
    let mut u1 = uw[0].clone();
    let mut v1 = v[0].clone();
    let sigma1 = s[0];
    let (mut u2, mut v2, mut sigma2) =
        if s.len() > 1 { (uw[1].clone(), v[1].clone(), s[1]) } else { (vec![0.0; u1.len()], vec![0.0; v1.len()], 0.0) };
    if sigma2 <= RANK_TOL * sigma1 {
        sigma2 = 0.0;
        u2.iter_mut().for_each(|x| *x = 0.0);
        v2.iter_mut().for_each(|x| *x = 0.0);
    }

    if sigma2 > 0.0 && sigma1 - sigma2 <= TIE_TOL * sigma1 {
        // Any rotation of the dominant plane is a valid SVD; pick the one
        // that makes the first pair as positive as possible.
        if let Some(beta) = positive_rotation(&[(&u1, &u2), (&v1, &v2)]) {
            let (c, sn) = (beta.cos(), beta.sin());
            rotate_pair(&mut u1, &mut u2, c, sn);
            rotate_pair(&mut v1, &mut v2, c, sn);
        }
    }

    fix_nonnegative_pair(&mut u1, &mut v1)?;
    orient_second(&mut u2, &mut v2);

    let r1 = sigma1.sqrt();
    let r2 = sigma2.sqrt();
    Ok(ScaledSvd2 {
        u1_hat: u1.iter().map(|x| x * r1).collect(),
        u2_hat: u2.iter().map(|x| x * r2).collect(),
        v1_hat: v1.iter().map(|x| x * r1).collect(),
        v2_hat: v2.iter().map(|x| x * r2).collect(),
        sigma1,
        sigma2,
    })
}

/// Flips `(u, v)` jointly so that both are nonnegative; tiny negative noise is clamped.
fn fix_nonnegative_pair(u: &mut [f64], v: &mut [f64]) -> Result<()> {
    let su: f64 = u.iter().sum::<f64>() + v.iter().sum::<f64>();
    if su < 0.0 {
        u.iter_mut().for_each(|x| *x = -*x);
        v.iter_mut().for_each(|x| *x = -*x);
    }
    for vec in [u, v] {
        let big = vec.iter().fold(0.0_f64, |a, &x| a.max(x.abs()));
        let thresh = 1e-9 * big;
        if vec.iter().any(|&x| x < -thresh) {
            return Err(Nmf2Error::ReducibleInput);
        }
        vec.iter_mut().for_each(|x| *x = x.max(0.0));
    }
    Ok(())
}

/// Deterministic sign convention for the second pair: the largest-magnitude entry of `u` is positive.
fn orient_second(u: &mut [f64], v: &mut [f64]) {
    let idx = u
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap_or(Ordering::Equal))
        .map(|(i, _)| i);
    if let Some(i) = idx {
        if u[i] < 0.0 {
            u.iter_mut().for_each(|x| *x = -*x);
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn rotate_pair(a: &mut [f64], b: &mut [f64], c: f64, s: f64) {
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xa, yb) = (*x, *y);
        *x = c * xa + s * yb;
        *y = -s * xa + c * yb;
    }
}

/// Angle `β` maximizing the margin of `cos β·a_i + sin β·b_i ≥ 0` over all rows of all pairs.
///
/// Each row with `(a_i, b_i) ≠ 0` admits the half circle centred at
/// `atan2(b_i, a_i)`; the intersection is centred in the shortest arc
/// containing all those centres.
fn positive_rotation(pairs: &[(&Vec<f64>, &Vec<f64>)]) -> Option<f64> {
    let mut centres: Vec<f64> = Vec::new();
    for (a, b) in pairs {
        for (&x, &y) in a.iter().zip(b.iter()) {
            if x.hypot(y) > 0.0 {
                centres.push(y.atan2(x).rem_euclid(std::f64::consts::TAU));
            }
        }
    }
    if centres.is_empty() {
        return None;
    }
    centres.sort_by(|x, y| x.partial_cmp(y).unwrap());
    // Largest circular gap between consecutive centres.
    let mut best_gap = centres[0] + std::f64::consts::TAU - centres[centres.len() - 1];
    let mut start = centres[0];
    for w in centres.windows(2) {
        let gap = w[1] - w[0];
        if gap > best_gap {
            best_gap = gap;
            start = w[1];
        }
    }
    let width = std::f64::consts::TAU - best_gap;
    if width > std::f64::consts::PI {
        return None;
    }
    Some(start + width / 2.0)
}

/// Top-2 (by magnitude) eigenpairs of a symmetric matrix with `û₁ ≥ 0`.
pub fn sym_eig2(n: &DenseMatrix, tol: f64, max_iter: usize) -> Result<SymmetricEig2> {
    if !n.is_square() {
        return Err(Nmf2Error::Shape("symmetric eigensolver needs a square matrix".into()));
    }
    let scale = n.max_abs().max(f64::MIN_POSITIVE);
    let asym = n.asymmetry();
    if asym > 1e-10 * scale {
        return Err(Nmf2Error::NotSymmetric(asym));
    }
    if n.max_abs() == 0.0 {
        return Err(Nmf2Error::EmptyMatrix);
    }
    let dim = n.rows();
    let p = BLOCK.min(dim);
    let mut q = start_block(n, p);
    let mut last_res = f64::INFINITY;
    for _ in 0..max_iter.max(1) {
        let w = mul_cols(n, &q);
        let h = DenseMatrix::from_fn(p, p, |a, b| 0.5 * (dot(&q[a], &w[b]) + dot(&q[b], &w[a])));
        let (lam, y) = jacobi_eig(&h);
        let x = combine(&q, &y);
        let ax = combine(&w, &y);
        let res = (0..2.min(p))
            .map(|c| {
                let d: Vec<f64> = ax[c].iter().zip(&x[c]).map(|(a, b)| a - lam[c] * b).collect();
                norm2(&d)
            })
            .fold(0.0_f64, f64::max)
            / lam[0].abs().max(f64::MIN_POSITIVE);
        last_res = res;
        if res <= tol || p == dim && res <= tol.max(1e-12) {
            return finish_eig(x, lam);
        }
        q = orthonormalize(ax);
    }
    Err(Nmf2Error::NoConvergence { iters: max_iter, residual: last_res })
}

pub fn sym_eig2_default(n: &DenseMatrix) -> Result<SymmetricEig2> {
    sym_eig2(n, DEFAULT_TOL, DEFAULT_MAX_ITER)
}

fn finish_eig(x: Vec<Vec<f64>>, lam: Vec<f64>) -> Result<SymmetricEig2> {
    let mut u1 = x[0].clone();
    let mut lambda1 = lam[0];
    let (mut u2, mut lambda2) = if lam.len() > 1 { (x[1].clone(), lam[1]) } else { (vec![0.0; u1.len()], 0.0) };
    if lambda1 < 0.0 {
        // A nonnegative matrix has its spectral radius as an eigenvalue; on a
        // ±ρ tie the ordering may put the negative one first.
        if lambda2 > 0.0 && (lambda2 - lambda1.abs()).abs() <= TIE_TOL * lambda2 {
            std::mem::swap(&mut u1, &mut u2);
            std::mem::swap(&mut lambda1, &mut lambda2);
        } else {
            return Err(Nmf2Error::ReducibleInput);
        }
    }
    if lambda2.abs() <= RANK_TOL * lambda1 {
        lambda2 = 0.0;
        u2.iter_mut().for_each(|v| *v = 0.0);
    }
    if lambda2 > 0.0 && lambda1 - lambda2 <= TIE_TOL * lambda1 {
        if let Some(beta) = positive_rotation(&[(&u1, &u2)]) {
            let mut dummy_a = u1.clone();
            let mut dummy_b = u2.clone();
            rotate_pair(&mut dummy_a, &mut dummy_b, beta.cos(), beta.sin());
            u1 = dummy_a;
            u2 = dummy_b;
        }
    }
    if u1.iter().sum::<f64>() < 0.0 {
        u1.iter_mut().for_each(|v| *v = -*v);
    }
    let big = u1.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
    if u1.iter().any(|&v| v < -1e-9 * big) {
        return Err(Nmf2Error::ReducibleInput);
    }
    u1.iter_mut().for_each(|v| *v = v.max(0.0));
    let mut dummy = u2.clone();
    orient_second(&mut u2, &mut dummy);

    let r1 = lambda1.sqrt();
    let r2 = lambda2.abs().sqrt();
    Ok(SymmetricEig2 {
        u1_hat: u1.iter().map(|v| v * r1).collect(),
        u2_hat: u2.iter().map(|v| v * r2).collect(),
        lambda1,
        lambda2,
    })
}

/// Deterministic starting block: `Nᵀ1` (close to the Perron vector) followed by
/// smooth cosine profiles.
fn start_block(n: &DenseMatrix, p: usize) -> Vec<Vec<f64>> {
    let k = n.cols();
    let mut cols = Vec::with_capacity(p);
    cols.push(n.t_mul_vec(&vec![1.0; n.rows()]));
    for c in 1..p {
        cols.push(
            (0..k)
                .map(|j| {
                    ((c as f64 + 0.5) * (j as f64 + 0.5) * std::f64::consts::PI / k as f64).cos()
                        + 1e-3 * ((j * 7 + c * 13) % 17) as f64
                })
                .collect(),
        );
    }
    orthonormalize(cols)
}

/// `N Q` for a block stored as columns.
fn mul_cols(n: &DenseMatrix, q: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; n.rows()]; q.len()];
    for i in 0..n.rows() {
        let row = n.row(i);
        for (o, qc) in out.iter_mut().zip(q) {
            o[i] = dot(row, qc);
        }
    }
    out
}

/// `Nᵀ U` for a block stored as columns.
fn t_mul_cols(n: &DenseMatrix, u: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; n.cols()]; u.len()];
    for i in 0..n.rows() {
        let row = n.row(i);
        for (o, uc) in out.iter_mut().zip(u) {
            let w = uc[i];
            if w != 0.0 {
                for (x, &a) in o.iter_mut().zip(row) {
                    *x += a * w;
                }
            }
        }
    }
    out
}

/// `Q Y` where `Y` is p×p (column `c` of the result is `Σ_a Y[a,c] q_a`).
fn combine(q: &[Vec<f64>], y: &DenseMatrix) -> Vec<Vec<f64>> {
    let len = q[0].len();
    (0..y.cols())
        .map(|c| {
            let mut col = vec![0.0; len];
            for (a, qa) in q.iter().enumerate() {
                let w = y[(a, c)];
                if w != 0.0 {
                    for (x, &v) in col.iter_mut().zip(qa) {
                        *x += w * v;
                    }
                }
            }
            col
        })
        .collect()
}

/// Modified Gram–Schmidt with re-orthogonalization; rank-deficient columns
/// are replaced by canonical vectors outside the current span.
pub(crate) fn orthonormalize(mut cols: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let len = cols.first().map(Vec::len).unwrap_or(0);
    let mut next_canonical = 0usize;
    for c in 0..cols.len() {
        let orig = norm2(&cols[c]);
        for _ in 0..2 {
            for prev in 0..c {
                let (head, tail) = cols.split_at_mut(c);
                let proj = dot(&head[prev], &tail[0]);
                for (x, &b) in tail[0].iter_mut().zip(&head[prev]) {
                    *x -= proj * b;
                }
            }
        }
        if norm2(&cols[c]) <= 1e-12 * orig || orig == 0.0 {
            cols[c] = vec![0.0; len];
            while next_canonical < len {
                let mut e = vec![0.0; len];
                e[next_canonical] = 1.0;
                next_canonical += 1;
                for _ in 0..2 {
                    for prev in 0..c {
                        let proj = dot(&cols[prev], &e);
                        for (x, &b) in e.iter_mut().zip(&cols[prev]) {
                            *x -= proj * b;
                        }
                    }
                }
                if norm2(&e) > 1e-8 {
                    cols[c] = e;
                    break;
                }
            }
        }
        let nrm = norm2(&cols[c]);
        if nrm > 0.0 {
            cols[c].iter_mut().for_each(|x| *x /= nrm);
        }
    }
    cols
}

/// One-sided Jacobi SVD of a tall block `W` (columns): returns `(U, s, Y)` with
/// `W = U diag(s) Yᵀ`, singular values in decreasing order.
fn jacobi_svd_cols(w: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<f64>, DenseMatrix) {
    let p = w.len();
    let mut a: Vec<Vec<f64>> = w.to_vec();
    let mut y = DenseMatrix::identity(p);
    for _sweep in 0..80 {
        let mut rotated = false;
        for i in 0..p {
            for j in (i + 1)..p {
                let alpha = dot(&a[i], &a[i]);
                let beta = dot(&a[j], &a[j]);
                let gamma = dot(&a[i], &a[j]);
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = a.split_at_mut(j);
                for (x, z) in left[i].iter_mut().zip(right[0].iter_mut()) {
                    let (xi, zj) = (*x, *z);
                    *x = c * xi - s * zj;
                    *z = s * xi + c * zj;
                }
                for r in 0..p {
                    let (yi, yj) = (y[(r, i)], y[(r, j)]);
                    y[(r, i)] = c * yi - s * yj;
                    y[(r, j)] = s * yi + c * yj;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..p).collect();
    let norms: Vec<f64> = a.iter().map(|c| norm2(c)).collect();
    order.sort_by(|&x, &z| norms[z].partial_cmp(&norms[x]).unwrap_or(Ordering::Equal));
    let s: Vec<f64> = order.iter().map(|&k| norms[k]).collect();
    let u: Vec<Vec<f64>> = order
        .iter()
        .map(|&k| {
            let nk = norms[k];
            if nk > 0.0 {
                a[k].iter().map(|x| x / nk).collect()
            } else {
                vec![0.0; a[k].len()]
            }
        })
        .collect();
    let y_sorted = DenseMatrix::from_fn(p, p, |r, c| y[(r, order[c])]);
    (u, s, y_sorted)
}

/// Cyclic Jacobi eigendecomposition of a small symmetric matrix; eigenpairs are
/// sorted by decreasing magnitude, positive first on ties.
pub(crate) fn jacobi_eig(h: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let p = h.rows();
    let mut a = h.clone();
    let mut v = DenseMatrix::identity(p);
    for _sweep in 0..100 {
        let off: f64 = (0..p)
            .flat_map(|i| (0..p).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        let diag: f64 = (0..p).map(|i| a[(i, i)] * a[(i, i)]).sum();
        if off <= 1e-32 * diag || off == 0.0 {
            break;
        }
        for i in 0..p {
            for j in (i + 1)..p {
                let aij = a[(i, j)];
                if aij == 0.0 {
                    continue;
                }
                let theta = (a[(j, j)] - a[(i, i)]) / (2.0 * aij);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..p {
                    let (aki, akj) = (a[(k, i)], a[(k, j)]);
                    a[(k, i)] = c * aki - s * akj;
                    a[(k, j)] = s * aki + c * akj;
                }
                for k in 0..p {
                    let (aik, ajk) = (a[(i, k)], a[(j, k)]);
                    a[(i, k)] = c * aik - s * ajk;
                    a[(j, k)] = s * aik + c * ajk;
                }
                for k in 0..p {
                    let (vki, vkj) = (v[(k, i)], v[(k, j)]);
                    v[(k, i)] = c * vki - s * vkj;
                    v[(k, j)] = s * vki + c * vkj;
                }
            }
        }
    }
    let lam: Vec<f64> = (0..p).map(|i| a[(i, i)]).collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&x, &y| {
        lam[y]
            .abs()
            .partial_cmp(&lam[x].abs())
            .unwrap_or(Ordering::Equal)
            .then(lam[y].partial_cmp(&lam[x]).unwrap_or(Ordering::Equal))
    });
    let sorted = order.iter().map(|&k| lam[k]).collect();
    let vs = DenseMatrix::from_fn(p, p, |r, c| v[(r, order[c])]);
    (sorted, vs)
}
