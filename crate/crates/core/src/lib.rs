//! Shift-and-invert (SAI) Krylov evaluation of `exp(-tA)v` for large sparse
//! matrices, together with two strategies for choosing the shift `γ` when the
//! action has to be computed for many starting vectors.
//!
//! The crate is organised bottom-up:
//!
//! * [`sparse`] and [`lu`]: CSR storage and a reusable sparse LU of `I + γA`.
//! * [`dense`]: small dense kernels (Padé matrix exponential, Hessenberg inverse).
//! * [`krylov`]: the SAI Arnoldi process with time-sampled residual stopping.
//! * [`derivative`]: a twin recursion estimating `d‖r‖/dγ` from one factorization.
//! * [`shift`]: Brent-based "optimize-and-run" and the incremental bisection driver.
//! * [`problems`]: finite-difference test operators and Gaussian initial states.
//! * [`mtx`]: Matrix Market and flat vector I/O.

pub mod dense;
pub mod derivative;
mod error;
pub mod krylov;
pub mod lu;
pub mod mtx;
pub mod problems;
pub mod shift;
pub mod sparse;

pub use dense::{expm, hessenberg_inverse, DenseMatrix};
pub use derivative::{sai_expmv_with_derivative, sai_expmv_with_derivative_factored, DerivativeParams, PrimedNormSource};
pub use error::{Error, Result};
pub use krylov::{residual_samples, sai_expmv, sai_expmv_factored, KrylovOutcome, KrylovState, SaiParams};
pub use lu::{lu_solve, shifted_lu, LuFactorization};
pub use sparse::{csr_from_triplets, spmv, SparseMatrix};

/// Euclidean norm.
pub(crate) fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}
