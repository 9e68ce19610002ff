//! Zero-line removal and splitting into irreducible diagonal blocks.
//!
//! Two lines of a nonnegative matrix belong to the same block when they are
//! linked through a chain of nonzero entries, i.e. blocks are the connected
//! components of the bipartite row/column graph of the nonzero pattern.

use crate::error::{Nmf2Error, Result};
use crate::matrix::DenseMatrix;

/// Relative factor applied to the largest entry to obtain the default zero threshold.
pub const DEFAULT_ZERO_RTOL: f64 = 1e-12;

/// A nonnegative matrix with its zero lines stripped and its block structure recorded.
#[derive(Debug, Clone)]
pub struct Preprocessed {
    /// The matrix without zero rows or columns.
    pub core: DenseMatrix,
    /// `row_map[i]` is the original index of core row `i`.
    pub row_map: Vec<usize>,
    /// `col_map[j]` is the original index of core column `j`.
    pub col_map: Vec<usize>,
    pub dropped_rows: Vec<usize>,
    pub dropped_cols: Vec<usize>,
    /// Irreducible diagonal blocks as (core row indices, core column indices).
    pub blocks: Vec<(Vec<usize>, Vec<usize>)>,
    original_shape: (usize, usize),
    /// Sub-threshold nonzero values that lived in dropped lines.
    dropped_entries: Vec<(usize, usize, f64)>,
}

/// Default absolute zero threshold for `n`.
pub fn default_tol(n: &DenseMatrix) -> f64 {
    DEFAULT_ZERO_RTOL * n.max_abs()
}

/// Strips zero lines (max entry `<= tol`) and partitions the rest into irreducible blocks.
pub fn preprocess(n: &DenseMatrix, tol: f64) -> Result<Preprocessed> {
    let (m, k) = n.shape();
    for i in 0..m {
        for j in 0..k {
            let x = n[(i, j)];
            if x < -tol {
                return Err(Nmf2Error::NegativeInput { row: i, col: j, value: x });
            }
        }
    }
    let significant = |x: f64| x > tol;

    let row_map: Vec<usize> = (0..m).filter(|&i| n.row(i).iter().any(|&x| significant(x))).collect();
    let col_map: Vec<usize> = (0..k).filter(|&j| (0..m).any(|i| significant(n[(i, j)]))).collect();
    if row_map.is_empty() {
        return Err(Nmf2Error::EmptyMatrix);
    }
    let dropped_rows: Vec<usize> = (0..m).filter(|i| !row_map.contains(i)).collect();
    let dropped_cols: Vec<usize> = (0..k).filter(|j| !col_map.contains(j)).collect();

    let mut dropped_entries = Vec::new();
    for i in 0..m {
        for j in 0..k {
            let x = n[(i, j)];
            if x != 0.0 && (dropped_rows.contains(&i) || dropped_cols.contains(&j)) {
                dropped_entries.push((i, j, x));
            }
        }
    }

    let core = n.select(&row_map, &col_map);
    let blocks = connected_blocks(&core, tol);

    Ok(Preprocessed {
        core,
        row_map,
        col_map,
        dropped_rows,
        dropped_cols,
        blocks,
        original_shape: (m, k),
        dropped_entries,
    })
}

/// [`preprocess`] with the default threshold.
pub fn preprocess_default(n: &DenseMatrix) -> Result<Preprocessed> {
    preprocess(n, default_tol(n))
}

impl Preprocessed {
    pub fn original_shape(&self) -> (usize, usize) {
        self.original_shape
    }

    pub fn is_irreducible(&self) -> bool {
        self.blocks.len() == 1
    }

    /// The original matrix, rebuilt from the core and the recorded dropped lines.
    pub fn reconstruct(&self) -> DenseMatrix {
        let (m, k) = self.original_shape;
        let mut out = DenseMatrix::zeros(m, k);
        for (ci, &i) in self.row_map.iter().enumerate() {
            for (cj, &j) in self.col_map.iter().enumerate() {
                out[(i, j)] = self.core[(ci, cj)];
            }
        }
        for &(i, j, x) in &self.dropped_entries {
            out[(i, j)] = x;
        }
        out
    }

    /// Lifts core-sized factors back to the original shape, with zero rows for dropped lines.
    pub fn lift_factors(&self, l: &DenseMatrix, r: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
        let (m, k) = self.original_shape;
        let mut big_l = DenseMatrix::zeros(m, l.cols());
        for (ci, &i) in self.row_map.iter().enumerate() {
            big_l.row_mut(i).copy_from_slice(l.row(ci));
        }
        let mut big_r = DenseMatrix::zeros(k, r.cols());
        for (cj, &j) in self.col_map.iter().enumerate() {
            big_r.row_mut(j).copy_from_slice(r.row(cj));
        }
        (big_l, big_r)
    }

    /// Submatrix of the core induced by block `b`.
    pub fn block_matrix(&self, b: usize) -> DenseMatrix {
        let (rows, cols) = &self.blocks[b];
        self.core.select(rows, cols)
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn connected_blocks(core: &DenseMatrix, tol: f64) -> Vec<(Vec<usize>, Vec<usize>)> {
    let (m, k) = core.shape();
    let mut parent: Vec<usize> = (0..m + k).collect();
    for i in 0..m {
        for j in 0..k {
            if core[(i, j)] > tol {
                let a = find(&mut parent, i);
                let b = find(&mut parent, m + j);
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    // Blocks are ordered by their smallest row index.
    let mut roots: Vec<usize> = Vec::new();
    let mut blocks: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for node in 0..m + k {
        let root = find(&mut parent, node);
        let slot = match roots.iter().position(|&r| r == root) {
            Some(s) => s,
            None => {
                roots.push(root);
                blocks.push((Vec::new(), Vec::new()));
                roots.len() - 1
            }
        };
        if node < m {
            blocks[slot].0.push(node);
        } else {
            blocks[slot].1.push(node - m);
        }
    }
    blocks
}
