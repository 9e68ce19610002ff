//! Exact and approximate nonnegative matrix factorization of rank two.
//!
//! The entry points are [`qdr::qdr`] for the angle-clipping approximation,
//! [`anls::anls`] for alternating nonnegative least squares, [`exact`] for the
//! complete family of exact factorizations of a nonnegative rank-2 matrix and
//! [`threeway`] for `L·M·Rᵀ` factorizations.

pub mod anls;
pub mod bench;
pub mod error;
pub mod exact;
pub mod io;
pub mod matrix;
pub mod nnls;
pub mod preprocess;
pub mod qdr;
pub mod svd;
pub mod threeway;

pub use anls::{AnlsConfig, AnlsResult, InitMethod};
pub use error::{Nmf2Error, Result};
pub use exact::{AngularForm, Rank2Nmf, RatioStats, TBox};
pub use matrix::DenseMatrix;
pub use svd::{ScaledSvd2, SymmetricEig2};
