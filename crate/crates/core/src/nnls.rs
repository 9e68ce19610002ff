//! Two-variable nonnegative least squares by active-set enumeration.

use crate::error::{Nmf2Error, Result};
use crate::matrix::DenseMatrix;

/// `min ‖L x − b‖₂` over `x ≥ 0` for an m×2 matrix `L`.
pub fn nnls2(l: &DenseMatrix, b: &[f64]) -> Result<[f64; 2]> {
    if l.cols() != 2 || l.rows() != b.len() {
        return Err(Nmf2Error::Shape(format!(
            "nnls2 needs an m×2 matrix and an m-vector, got {}×{} and {}",
            l.rows(),
            l.cols(),
            b.len()
        )));
    }
    let mut g = [[0.0; 2]; 2];
    let mut c = [0.0; 2];
    for (i, &bi) in b.iter().enumerate() {
        let row = l.row(i);
        g[0][0] += row[0] * row[0];
        g[0][1] += row[0] * row[1];
        g[1][1] += row[1] * row[1];
        c[0] += row[0] * bi;
        c[1] += row[1] * bi;
    }
    g[1][0] = g[0][1];
    nnls2_gram(&g, &c)
}

/// Same problem stated through the Gram matrix `G = LᵀL` and `c = Lᵀb`.
///
/// The constant `‖b‖²` is irrelevant, so candidates are compared on
/// `xᵀGx − 2cᵀx`.
pub fn nnls2_gram(g: &[[f64; 2]; 2], c: &[f64; 2]) -> Result<[f64; 2]> {
    let (g11, g12, g22) = (g[0][0], g[0][1], g[1][1]);
    if g11 <= 0.0 && g22 <= 0.0 {
        return Err(Nmf2Error::DegenerateColumns);
    }
    let det = g11 * g22 - g12 * g12;
    if det > 1e-14 * g11 * g22 {
        let x1 = (g22 * c[0] - g12 * c[1]) / det;
        let x2 = (g11 * c[1] - g12 * c[0]) / det;
        if x1 >= 0.0 && x2 >= 0.0 {
            return Ok([x1, x2]);
        }
    }
    let obj = |x: [f64; 2]| {
        g11 * x[0] * x[0] + 2.0 * g12 * x[0] * x[1] + g22 * x[1] * x[1] - 2.0 * (c[0] * x[0] + c[1] * x[1])
    };
    let mut best = [0.0, 0.0];
    let mut best_val = 0.0;
    if g11 > 0.0 {
        let cand = [(c[0] / g11).max(0.0), 0.0];
        let v = obj(cand);
        if v < best_val {
            best = cand;
            best_val = v;
        }
    }
    if g22 > 0.0 {
        let cand = [0.0, (c[1] / g22).max(0.0)];
        if obj(cand) < best_val {
            best = cand;
        }
    }
    Ok(best)
}
