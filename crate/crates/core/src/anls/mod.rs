//! Alternating nonnegative least squares for `N ≈ L·Rᵀ` with two columns.
//!
//! A sweep updates every row of `R` with `L` fixed, then every row of `L`
//! with the new `R`. Each row is an independent two-variable NNLS problem
//! solved exactly, so the Frobenius error never increases.

mod init;
mod symmetric;

use std::fmt;
use std::str::FromStr;

pub use init::{init_nndsvd, init_random, init_spa, initialize, SpaInit};
pub use symmetric::{anls_symmetric, refit_middle, SymmetricAnlsResult, SymmetricConfig};

use crate::error::{Nmf2Error, Result};
use crate::exact::Rank2Nmf;
use crate::matrix::{norm2, DenseMatrix};
use crate::nnls::nnls2_gram;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnlsConfig {
    /// Stop once the relative step size of a sweep falls below this.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Keep the per-sweep objective values.
    pub record_history: bool,
}

impl Default for AnlsConfig {
    fn default() -> Self {
        AnlsConfig { epsilon: 1e-3, max_iters: 1000, record_history: true }
    }
}

impl AnlsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Nmf2Error::InvalidParameter(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_iters == 0 {
            return Err(Nmf2Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// Starting point for [`anls`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitMethod {
    Qdr,
    Spa,
    Nndsvd,
    Random(u64),
}

impl InitMethod {
    /// Short lowercase name, without the seed.
    pub fn name(&self) -> &'static str {
        match self {
            InitMethod::Qdr => "qdr",
            InitMethod::Spa => "spa",
            InitMethod::Nndsvd => "nndsvd",
            InitMethod::Random(_) => "random",
        }
    }
}

impl fmt::Display for InitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses `qdr`, `spa`, `nndsvd`, `random` (seed 0) or `random:<seed>`.
impl FromStr for InitMethod {
    type Err = Nmf2Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "qdr" => Ok(InitMethod::Qdr),
            "spa" => Ok(InitMethod::Spa),
            "nndsvd" => Ok(InitMethod::Nndsvd),
            "random" | "rand" => Ok(InitMethod::Random(0)),
            other => match other.strip_prefix("random:") {
                Some(seed) => seed
                    .parse()
                    .map(InitMethod::Random)
                    .map_err(|_| Nmf2Error::InvalidParameter(format!("bad seed in {s:?}"))),
                None => Err(Nmf2Error::InvalidParameter(format!("unknown init method {s:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnlsResult {
    pub nmf: Rank2Nmf,
    /// Completed full sweeps.
    pub iters: usize,
    pub final_residual: f64,
    /// `‖N − LRᵀ‖_F` at the start and after every sweep (empty unless recorded).
    pub objective_history: Vec<f64>,
    pub converged: bool,
    pub init_objective: f64,
    /// A collapsed factor column was reseeded during the run.
    pub reseeded: bool,
}

impl AnlsResult {
    pub fn final_objective(&self, n: &DenseMatrix) -> f64 {
        self.nmf.objective(n)
    }
}

/// Sum over all rows of both factors of `‖next_row − prev_row‖ / ‖next_row‖`.
///
/// Rows of `next` with zero norm contribute nothing.
pub fn residual(prev: &Rank2Nmf, next: &Rank2Nmf) -> f64 {
    factor_residual(&prev.l, &next.l) + factor_residual(&prev.r, &next.r)
}

pub(crate) fn factor_residual(prev: &DenseMatrix, next: &DenseMatrix) -> f64 {
    let mut total = 0.0;
    for i in 0..next.rows() {
        let a = prev.row(i);
        let b = next.row(i);
        let nb = norm2(b);
        if nb > 0.0 {
            let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
            total += norm2(&diff) / nb;
        }
    }
    total
}

pub(crate) fn check_nonnegative(n: &DenseMatrix) -> Result<()> {
    if n.rows() == 0 || n.cols() == 0 {
        return Err(Nmf2Error::Shape("empty matrix".into()));
    }
    for i in 0..n.rows() {
        for (j, &x) in n.row(i).iter().enumerate() {
            if x < 0.0 {
                return Err(Nmf2Error::NegativeInput { row: i, col: j, value: x });
            }
        }
    }
    if n.max_abs() == 0.0 {
        return Err(Nmf2Error::EmptyMatrix);
    }
    Ok(())
}

/// ANLS from one of the built-in starting points.
pub fn anls(n: &DenseMatrix, init: InitMethod, cfg: &AnlsConfig) -> Result<AnlsResult> {
    let start = initialize(n, init)?;
    anls_from(n, start, cfg)
}

/// ANLS from given nonnegative factors.
pub fn anls_from(n: &DenseMatrix, start: Rank2Nmf, cfg: &AnlsConfig) -> Result<AnlsResult> {
    cfg.validate()?;
    check_nonnegative(n)?;
    let (m, k) = n.shape();
    if start.l.shape() != (m, 2) || start.r.shape() != (k, 2) {
        return Err(Nmf2Error::Shape(format!(
            "factors {}×{} and {}×{} do not fit a {m}×{k} matrix",
            start.l.rows(),
            start.l.cols(),
            start.r.rows(),
            start.r.cols()
        )));
    }
    if start.min_entry() < 0.0 {
        return Err(Nmf2Error::InvalidParameter("starting factors must be nonnegative".into()));
    }

    let norm_n = n.frobenius_norm();
    let init_objective = start.objective(n);
    let mut history = Vec::new();
    if cfg.record_history {
        history.push(init_objective);
    }
    let mut cur = start;
    let mut reseeded = false;
    let mut final_residual = f64::INFINITY;
    let mut converged = false;
    let mut iters = 0;
    let nt = n.transpose();

    while iters < cfg.max_iters {
        let prev = cur.clone();
        let r_new = update_rows(&nt, &cur.l)?;
        cur.r = r_new;
        if let Some(c) = collapsed_column(&cur.r) {
            if cur.objective(n) <= 1e-12 * norm_n {
                // Rank one fits exactly; nothing left for the second column.
                cur.l = update_rows(n, &cur.r)?;
                iters += 1;
                final_residual = residual(&prev, &cur);
                push(&mut history, cfg, cur.objective(n));
                converged = true;
                break;
            }
            if reseeded {
                return Err(Nmf2Error::DegenerateFactor { column: c });
            }
            reseed(n, &mut cur, Side::R, c);
            reseeded = true;
        }
        cur.l = update_rows(n, &cur.r)?;
        iters += 1;
        let obj = cur.objective(n);
        push(&mut history, cfg, obj);
        final_residual = residual(&prev, &cur);
        if final_residual < cfg.epsilon {
            converged = true;
            break;
        }
        if let Some(c) = collapsed_column(&cur.l) {
            if obj <= 1e-12 * norm_n {
                converged = true;
                break;
            }
            if reseeded {
                return Err(Nmf2Error::DegenerateFactor { column: c });
            }
            if iters < cfg.max_iters {
                reseed(n, &mut cur, Side::L, c);
                reseeded = true;
            }
        }
    }

    Ok(AnlsResult { nmf: cur, iters, final_residual, objective_history: history, converged, init_objective, reseeded })
}

fn push(history: &mut Vec<f64>, cfg: &AnlsConfig, v: f64) {
    if cfg.record_history {
        history.push(v);
    }
}

/// Solves `min_{X ≥ 0} ‖A − X·Fᵀ‖_F` row by row; `a` has one row per output row.
pub(crate) fn update_rows(a: &DenseMatrix, f: &DenseMatrix) -> Result<DenseMatrix> {
    let gram = f.t_matmul(f);
    let g = [[gram[(0, 0)], gram[(0, 1)]], [gram[(1, 0)], gram[(1, 1)]]];
    let c = a.matmul(f);
    let mut out = DenseMatrix::zeros(a.rows(), 2);
    for i in 0..a.rows() {
        let x = nnls2_gram(&g, &[c[(i, 0)], c[(i, 1)]])?;
        out.row_mut(i).copy_from_slice(&x);
    }
    Ok(out)
}

fn collapsed_column(f: &DenseMatrix) -> Option<usize> {
    (0..2).find(|&c| (0..f.rows()).all(|i| f[(i, c)] == 0.0))
}

#[derive(Clone, Copy)]
enum Side {
    L,
    R,
}

/// Refills column `c` of one factor with the positive part of the dominant
/// rank-one term of the current residual. The other factor's next exact
/// update can always fall back to a zero column, so the objective cannot rise.
fn reseed(n: &DenseMatrix, cur: &mut Rank2Nmf, side: Side, c: usize) {
    let e = n.sub(&cur.product());
    let (u, v, sigma) = dominant_pair(&e);
    let pos = |x: &[f64]| x.iter().map(|&t| t.max(0.0)).collect::<Vec<_>>();
    let neg = |x: &[f64]| x.iter().map(|&t| (-t).max(0.0)).collect::<Vec<_>>();
    let (up, vp) = (pos(&u), pos(&v));
    let (un, vn) = (neg(&u), neg(&v));
    let (uu, vv) = if norm2(&up) * norm2(&vp) >= norm2(&un) * norm2(&vn) { (up, vp) } else { (un, vn) };
    let s = sigma.sqrt();
    match side {
        Side::L => {
            let col: Vec<f64> = uu.iter().map(|x| x * s).collect();
            cur.l.set_column(c, &col);
        }
        Side::R => {
            let col: Vec<f64> = vv.iter().map(|x| x * s).collect();
            cur.r.set_column(c, &col);
        }
    }
}

/// Power iteration for the leading singular triple of a general matrix.
fn dominant_pair(e: &DenseMatrix) -> (Vec<f64>, Vec<f64>, f64) {
    let k = e.cols();
    let mut v: Vec<f64> = (0..k).map(|j| 1.0 + (j % 7) as f64 * 0.1).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut u = vec![0.0; e.rows()];
    let mut sigma = 0.0;
    for _ in 0..500 {
        u = e.mul_vec(&v);
        let nu = norm2(&u);
        if nu == 0.0 {
            break;
        }
        u.iter_mut().for_each(|x| *x /= nu);
        let w = e.t_mul_vec(&u);
        let s = norm2(&w);
        if s == 0.0 {
            break;
        }
        v = w.into_iter().map(|x| x / s).collect();
        let done = (s - sigma).abs() <= 1e-12 * s;
        sigma = s;
        if done {
            break;
        }
    }
    (u, v, sigma)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rank2() -> (DenseMatrix, Rank2Nmf) {
        let l = DenseMatrix::from_rows(&[[1.0, 0.0], [0.5, 0.5], [0.0, 2.0], [1.0, 1.0]]).unwrap();
        let r = DenseMatrix::from_rows(&[[2.0, 0.1], [0.0, 1.0], [1.0, 1.0]]).unwrap();
        let f = Rank2Nmf { l, r };
        (f.product(), f)
    }

    #[test]
    fn residual_of_doubling() {
        let (_, f) = rank2();
        let g = Rank2Nmf { l: f.l.scale(2.0), r: f.r.scale(2.0) };
        assert_eq!(residual(&f, &f), 0.0);
        assert!((residual(&f, &g) - 3.5).abs() < 1e-14);
    }

    #[test]
    fn fixed_point() {
        let (n, f) = rank2();
        let res = anls_from(&n, f.clone(), &AnlsConfig::default()).unwrap();
        assert_eq!(res.iters, 1);
        assert!(res.converged);
        assert!(res.nmf.l.frobenius_distance(&f.l) < 1e-12);
        assert!(res.final_objective(&n) < 1e-12);
    }

    #[test]
    fn parse_methods() {
        assert_eq!("QDR".parse::<InitMethod>().unwrap(), InitMethod::Qdr);
        assert_eq!("random:9".parse::<InitMethod>().unwrap(), InitMethod::Random(9));
        assert!("hals".parse::<InitMethod>().is_err());
    }

    #[test]
    fn collapsed_start_is_reseeded() {
        let (n, f) = rank2();
        let mut l = f.l.clone();
        l.set_column(1, &[0.0; 4]);
        let cfg = AnlsConfig { epsilon: 1e-12, max_iters: 5000, record_history: true };
        let res = anls_from(&n, Rank2Nmf { l, r: f.r }, &cfg).unwrap();
        assert!(res.reseeded);
        assert!(res.final_objective(&n) < res.init_objective);
        for w in res.objective_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-15);
        }
    }

    #[test]
    fn rank_one_input() {
        let n = DenseMatrix::from_fn(3, 3, |i, j| (i + 1) as f64 * (j + 2) as f64);
        let res = anls(&n, InitMethod::Random(3), &AnlsConfig::default()).unwrap();
        assert!(res.final_objective(&n) < 1e-6 * n.frobenius_norm());
    }
}
