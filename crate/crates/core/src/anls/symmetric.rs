//! ANLS for `N ≈ L·M·Lᵀ` with `M` fixed: each row of `L` is refitted against
//! the matching column of `N` and then replaced by the average of its old and
//! new values.

use super::{check_nonnegative, factor_residual, AnlsConfig};
use crate::error::{Nmf2Error, Result};
use crate::matrix::DenseMatrix;
use crate::nnls::nnls2_gram;
use crate::threeway::ThreeWayNmf;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymmetricConfig {
    pub anls: AnlsConfig,
    /// Refit `M` by nonnegative least squares after every pass.
    pub refit_middle: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricAnlsResult {
    /// Always symmetric, with `r == l`.
    pub factors: ThreeWayNmf,
    pub iters: usize,
    pub final_residual: f64,
    pub objective_history: Vec<f64>,
    pub converged: bool,
    pub init_objective: f64,
}

fn sym_objective(n: &DenseMatrix, l: &DenseMatrix, m: &DenseMatrix) -> f64 {
    let mut total = 0.0;
    let lm = l.matmul(m);
    for i in 0..n.rows() {
        for j in 0..n.cols() {
            let p = lm[(i, 0)] * l[(j, 0)] + lm[(i, 1)] * l[(j, 1)];
            let d = n[(i, j)] - p;
            total += d * d;
        }
    }
    total.sqrt()
}

pub fn anls_symmetric(n: &DenseMatrix, init: &ThreeWayNmf, cfg: &SymmetricConfig) -> Result<SymmetricAnlsResult> {
    cfg.anls.validate()?;
    check_nonnegative(n)?;
    if !n.is_square() {
        return Err(Nmf2Error::Shape(format!("symmetric ANLS needs a square matrix, got {}×{}", n.rows(), n.cols())));
    }
    let asym = n.asymmetry();
    if asym > 1e-12 * n.max_abs() {
        return Err(Nmf2Error::NotSymmetric(asym));
    }
    let k = n.rows();
    if init.l.shape() != (k, 2) || init.m_mid.shape() != (2, 2) {
        return Err(Nmf2Error::Shape("initial factors do not fit the matrix".into()));
    }
    if init.l.min_entry() < 0.0 || init.m_mid.min_entry() < 0.0 || init.m_mid.asymmetry() > 0.0 {
        return Err(Nmf2Error::InvalidParameter("initial L and M must be nonnegative and M symmetric".into()));
    }

    let mut l = init.l.clone();
    let mut m = init.m_mid.clone();
    let init_objective = sym_objective(n, &l, &m);
    let mut history = Vec::new();
    if cfg.anls.record_history {
        history.push(init_objective);
    }
    let mut iters = 0;
    let mut final_residual = f64::INFINITY;
    let mut converged = false;

    while iters < cfg.anls.max_iters {
        let prev = l.clone();
        sweep(n, &mut l, &m)?;
        if cfg.refit_middle {
            m = refit_middle(n, &l)?;
        }
        iters += 1;
        let obj = sym_objective(n, &l, &m);
        if cfg.anls.record_history {
            history.push(obj);
        }
        final_residual = factor_residual(&prev, &l);
        if final_residual < cfg.anls.epsilon {
            converged = true;
            break;
        }
        if let Some(c) = (0..2).find(|&c| (0..k).all(|i| l[(i, c)] == 0.0)) {
            if obj > 1e-12 * n.frobenius_norm() {
                return Err(Nmf2Error::DegenerateFactor { column: c });
            }
        }
    }

    let factors = ThreeWayNmf { r: l.clone(), l, m_mid: m, params: init.params, symmetric: true };
    Ok(SymmetricAnlsResult { factors, iters, final_residual, objective_history: history, converged, init_objective })
}

/// One pass over the rows of `L` in natural order.
fn sweep(n: &DenseMatrix, l: &mut DenseMatrix, m: &DenseMatrix) -> Result<()> {
    let k = n.rows();
    let mut a = l.matmul(m);
    let mut g = [[0.0; 2]; 2];
    for j in 0..k {
        let r = a.row(j);
        g[0][0] += r[0] * r[0];
        g[0][1] += r[0] * r[1];
        g[1][1] += r[1] * r[1];
    }
    g[1][0] = g[0][1];
    for i in 0..k {
        let col = n.row(i);
        let mut c = [0.0; 2];
        for j in 0..k {
            c[0] += a[(j, 0)] * col[j];
            c[1] += a[(j, 1)] * col[j];
        }
        let xhat = nnls2_gram(&g, &c)?;
        let x = [l[(i, 0)], l[(i, 1)]];
        let new = [0.5 * (x[0] + xhat[0]), 0.5 * (x[1] + xhat[1])];
        l.row_mut(i).copy_from_slice(&new);
        let old_a = [a[(i, 0)], a[(i, 1)]];
        let new_a = [new[0] * m[(0, 0)] + new[1] * m[(1, 0)], new[0] * m[(0, 1)] + new[1] * m[(1, 1)]];
        for p in 0..2 {
            for q in 0..2 {
                g[p][q] += new_a[p] * new_a[q] - old_a[p] * old_a[q];
            }
        }
        a.row_mut(i).copy_from_slice(&new_a);
    }
    Ok(())
}

/// Nonnegative symmetric `M` minimizing `‖N − L·M·Lᵀ‖_F` for fixed `L`.
///
/// The three unknowns `(m₁₁, m₁₂, m₂₂)` are found by trying every active set.
pub fn refit_middle(n: &DenseMatrix, l: &DenseMatrix) -> Result<DenseMatrix> {
    let g = l.t_matmul(l);
    let (g11, g12, g22) = (g[(0, 0)], g[(0, 1)], g[(1, 1)]);
    // Basis l₁l₁ᵀ, l₁l₂ᵀ + l₂l₁ᵀ, l₂l₂ᵀ.
    let h = [
        [g11 * g11, 2.0 * g11 * g12, g12 * g12],
        [2.0 * g11 * g12, 2.0 * (g11 * g22 + g12 * g12), 2.0 * g12 * g22],
        [g12 * g12, 2.0 * g12 * g22, g22 * g22],
    ];
    let nl = n.matmul(l);
    let lnl = l.t_matmul(&nl);
    let b = [lnl[(0, 0)], lnl[(0, 1)] + lnl[(1, 0)], lnl[(1, 1)]];
    let obj = |x: &[f64; 3]| {
        let mut v = 0.0;
        for p in 0..3 {
            for q in 0..3 {
                v += x[p] * h[p][q] * x[q];
            }
            v -= 2.0 * b[p] * x[p];
        }
        v
    };

    let mut best = [0.0; 3];
    let mut best_val = 0.0;
    for mask in 1u8..8 {
        let idx: Vec<usize> = (0..3).filter(|&p| mask & (1 << p) != 0).collect();
        let Some(sol) = solve_sub(&h, &b, &idx) else {
            continue;
        };
        let mut x = [0.0; 3];
        for (&p, &v) in idx.iter().zip(&sol) {
            x[p] = v;
        }
        if x.iter().any(|&v| v < 0.0) {
            continue;
        }
        let v = obj(&x);
        if v < best_val {
            best = x;
            best_val = v;
        }
    }
    DenseMatrix::from_rows(&[[best[0], best[1]], [best[1], best[2]]])
}

fn solve_sub(h: &[[f64; 3]; 3], b: &[f64; 3], idx: &[usize]) -> Option<Vec<f64>> {
    let k = idx.len();
    let mut a: Vec<Vec<f64>> = idx.iter().map(|&p| idx.iter().map(|&q| h[p][q]).chain([b[p]]).collect()).collect();
    let scale = idx.iter().map(|&p| h[p][p]).fold(0.0, f64::max);
    for col in 0..k {
        let piv = (col..k).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() <= 1e-13 * scale {
            return None;
        }
        a.swap(col, piv);
        for row in 0..k {
            if row != col {
                let f = a[row][col] / a[col][col];
                for c in col..=k {
                    a[row][c] -= f * a[col][c];
                }
            }
        }
    }
    Some((0..k).map(|r| a[r][k] / a[r][r]).collect())
}
