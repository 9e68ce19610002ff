//! Browser bindings for the static demo page in `www/`.
//!
//! Each exported function takes a matrix as CSV text and returns JSON. The
//! `*_impl` functions hold the logic so they can be tested natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use nmf2::anls::{anls, AnlsConfig, InitMethod};
use nmf2::exact::{exact_nmf, ratio_stats, tbox};
use nmf2::io::parse_csv;
use nmf2::qdr::{qdr_detailed, QdrConfig};
use nmf2::svd::svd2_default;
use nmf2::DenseMatrix;

#[derive(Serialize)]
struct Factors {
    l: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
    product: Vec<Vec<f64>>,
    objective: f64,
}

impl Factors {
    fn new(n: &DenseMatrix, l: &DenseMatrix, r: &DenseMatrix) -> Factors {
        let p = l.matmul_t(r);
        Factors { l: rows(l), r: rows(r), objective: p.frobenius_distance(n), product: rows(&p) }
    }
}

fn rows(a: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..a.rows()).map(|i| a.row(i).to_vec()).collect()
}

#[derive(Serialize)]
struct QdrReply {
    factors: Factors,
    path: String,
    theta: Option<[f64; 2]>,
    /// `√(Σ_{k≥3} σ_k²)`, the error of the unconstrained rank-2 truncation.
    svd_error: Option<f64>,
}

#[derive(Serialize)]
struct AnlsReply {
    factors: Factors,
    iters: usize,
    converged: bool,
    history: Vec<f64>,
}

#[derive(Serialize)]
struct ExactReply {
    factors: Factors,
    /// `[t1_lo, t1_hi, t2_lo, t2_hi]`; an unbounded end is `null`.
    t_box: [Option<f64>; 4],
    t: [f64; 2],
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

pub fn qdr_impl(csv: &str) -> Result<String, String> {
    let n = parse_csv(csv).map_err(|e| e.to_string())?;
    let out = qdr_detailed(&n, &QdrConfig::default()).map_err(|e| e.to_string())?;
    let svd_error = svd2_default(&n).ok().map(|s| s.truncation().frobenius_distance(&n));
    to_json(&QdrReply {
        factors: Factors::new(&n, &out.nmf.l, &out.nmf.r),
        path: format!("{:?}", out.path),
        theta: out.theta.map(|t| [t.theta1, t.theta2]),
        svd_error,
    })
}

pub fn anls_impl(csv: &str, init: &str, seed: u64, epsilon: f64, max_iters: usize) -> Result<String, String> {
    let n = parse_csv(csv).map_err(|e| e.to_string())?;
    let method = match init.parse::<InitMethod>().map_err(|e| e.to_string())? {
        InitMethod::Random(_) => InitMethod::Random(seed),
        m => m,
    };
    let cfg = AnlsConfig { epsilon, max_iters, record_history: true };
    let res = anls(&n, method, &cfg).map_err(|e| e.to_string())?;
    to_json(&AnlsReply {
        factors: Factors::new(&n, &res.nmf.l, &res.nmf.r),
        iters: res.iters,
        converged: res.converged,
        history: res.objective_history,
    })
}

/// `s1, s2 ∈ [0, 1]` select a point of the admissible box; an unbounded side
/// is mapped through `lo + s/(1 − s)`.
pub fn exact_impl(csv: &str, s1: f64, s2: f64) -> Result<String, String> {
    let n = parse_csv(csv).map_err(|e| e.to_string())?;
    let s = svd2_default(&n).map_err(|e| e.to_string())?;
    let rel = s.truncation().frobenius_distance(&n) / n.frobenius_norm();
    if rel > 1e-8 {
        return Err(format!("matrix is not of rank two (relative residual {rel:.2e})"));
    }
    let stats = ratio_stats(&s).map_err(|e| e.to_string())?;
    let b = tbox(&stats).ok_or("rank-2 truncation has negative entries")?;
    let pick = |lo: f64, hi: f64, x: f64| {
        let x = x.clamp(0.0, 1.0);
        if hi.is_finite() {
            lo + x * (hi - lo)
        } else {
            lo + x / (1.0 - x).max(1e-9)
        }
    };
    let t1 = pick(b.t1_lo, b.t1_hi, s1);
    let t2 = pick(b.t2_lo, b.t2_hi, s2);
    let f = exact_nmf(&s, t1, t2).map_err(|e| e.to_string())?;
    to_json(&ExactReply {
        factors: Factors::new(&n, &f.l, &f.r),
        t_box: [b.t1_lo, b.t1_hi, b.t2_lo, b.t2_hi].map(|x| x.is_finite().then_some(x)),
        t: [t1, t2],
    })
}

#[wasm_bindgen]
pub fn qdr(csv: &str) -> Result<String, JsError> {
    qdr_impl(csv).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn anls_run(csv: &str, init: &str, seed: u64, epsilon: f64, max_iters: usize) -> Result<String, JsError> {
    anls_impl(csv, init, seed, epsilon, max_iters).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn exact(csv: &str, s1: f64, s2: f64) -> Result<String, JsError> {
    exact_impl(csv, s1, s2).map_err(|e| JsError::new(&e))
}
