use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_nonnegative, InitMethod};
use crate::error::Result;
use crate::exact::Rank2Nmf;
use crate::matrix::{dot, norm2, DenseMatrix};
use crate::nnls::nnls2;
use crate::qdr::{qdr, QdrConfig};
use crate::svd::svd2_default;

/// Builds the starting factors for `init`.
pub fn initialize(n: &DenseMatrix, init: InitMethod) -> Result<Rank2Nmf> {
    match init {
        InitMethod::Qdr => qdr(n, &QdrConfig::default()),
        InitMethod::Spa => init_spa(n).map(|s| s.nmf),
        InitMethod::Nndsvd => init_nndsvd(n),
        InitMethod::Random(seed) => init_random(n, seed),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaInit {
    pub nmf: Rank2Nmf,
    /// Column indices of `N` used as the columns of `L`.
    pub anchors: Vec<usize>,
    /// The second projected residual vanished; `L` has a zero second column.
    pub rank_one: bool,
}

/// Successive projection: the two anchor columns become `L`, and each row of
/// `R` is the NNLS fit of the matching column of `N`.
pub fn init_spa(n: &DenseMatrix) -> Result<SpaInit> {
    check_nonnegative(n)?;
    let (m, k) = n.shape();
    let cols: Vec<Vec<f64>> = (0..k).map(|j| n.column(j)).collect();
    let norms: Vec<f64> = cols.iter().map(|c| norm2(c)).collect();
    let j1 = argmax(&norms);
    let a = &cols[j1];
    let aa = dot(a, a);
    let resid: Vec<f64> = cols
        .iter()
        .map(|c| {
            let p = dot(a, c) / aa;
            let r: Vec<f64> = c.iter().zip(a).map(|(x, y)| x - p * y).collect();
            norm2(&r)
        })
        .collect();
    let j2 = argmax(&resid);
    let rank_one = resid[j2] <= 1e-12 * norms[j1];

    let mut l = DenseMatrix::zeros(m, 2);
    l.set_column(0, a);
    let mut anchors = vec![j1];
    if !rank_one {
        l.set_column(1, &cols[j2]);
        anchors.push(j2);
    }
    let mut r = DenseMatrix::zeros(k, 2);
    for (j, c) in cols.iter().enumerate() {
        let x = if rank_one { [(dot(a, c) / aa).max(0.0), 0.0] } else { nnls2(&l, c)? };
        r.row_mut(j).copy_from_slice(&x);
    }
    Ok(SpaInit { nmf: Rank2Nmf { l, r }, anchors, rank_one })
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// NNDSVD: the Perron pair gives the first column of each factor, the larger
/// sign section of the second pair gives the second, scaled so that the
/// second rank-one term has Frobenius norm `σ₂`.
pub fn init_nndsvd(n: &DenseMatrix) -> Result<Rank2Nmf> {
    check_nonnegative(n)?;
    let s = svd2_default(n)?;
    let (m, k) = n.shape();
    let mut l = DenseMatrix::zeros(m, 2);
    let mut r = DenseMatrix::zeros(k, 2);
    l.set_column(0, &s.u1_hat);
    r.set_column(0, &s.v1_hat);
    if !s.is_rank_one() {
        let pos = |x: &[f64]| x.iter().map(|&t| t.max(0.0)).collect::<Vec<_>>();
        let neg = |x: &[f64]| x.iter().map(|&t| (-t).max(0.0)).collect::<Vec<_>>();
        let (up, vp) = (pos(&s.u2_hat), pos(&s.v2_hat));
        let (un, vn) = (neg(&s.u2_hat), neg(&s.v2_hat));
        let mp = norm2(&up) * norm2(&vp);
        let mn = norm2(&un) * norm2(&vn);
        let (u, v) = if mp >= mn { (up, vp) } else { (un, vn) };
        let (nu, nv) = (norm2(&u), norm2(&v));
        if nu > 0.0 && nv > 0.0 {
            let root = s.sigma2.sqrt();
            l.set_column(1, &u.iter().map(|x| x * root / nu).collect::<Vec<_>>());
            r.set_column(1, &v.iter().map(|x| x * root / nv).collect::<Vec<_>>());
        }
    }
    Ok(Rank2Nmf { l, r })
}

/// Uniform `[0, 1)` factors from ChaCha8 seeded with `seed`, scaled so that
/// `‖LRᵀ‖_F = ‖N‖_F`.
pub fn init_random(n: &DenseMatrix, seed: u64) -> Result<Rank2Nmf> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, k) = n.shape();
    let l = DenseMatrix::from_fn(m, 2, |_, _| rng.random::<f64>());
    let r = DenseMatrix::from_fn(k, 2, |_, _| rng.random::<f64>());
    let p = l.matmul_t(&r).frobenius_norm();
    let target = n.frobenius_norm();
    if p == 0.0 || target == 0.0 {
        return Ok(Rank2Nmf { l, r });
    }
    let c = (target / p).sqrt();
    Ok(Rank2Nmf { l: l.scale(c), r: r.scale(c) })
}
