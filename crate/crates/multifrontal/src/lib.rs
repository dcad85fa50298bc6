//! Sparse direct solves for finite element systems.
//!
//! The crate provides a CSR matrix type, geometric nested dissection over a
//! block graph, and a multifrontal LU factorization that pivots within the
//! fully summed part of every front. It is aimed at unsymmetric matrices with a
//! symmetric sparsity pattern, which is what mixed finite element schemes
//! usually produce.

mod csr;
mod lu;
mod ordering;

pub use csr::CsrMatrix;
pub use lu::{solve_refined, FactorStats, LuFactors};
pub use ordering::{nested_dissection, DissectionOptions, EliminationTree, TreeNode};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FactorError {
    #[error("matrix must be square, got {nrows}x{ncols}")]
    NotSquare { nrows: usize, ncols: usize },
    #[error("entry ({row}, {col}) outside a {nrows}x{ncols} matrix")]
    IndexOutOfBounds {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },
    #[error("expected length {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid sparsity pattern: {0}")]
    InvalidPattern(String),
    #[error("invalid elimination tree: {0}")]
    InvalidTree(String),
    #[error("zero pivot in front {node} while eliminating variable {var}")]
    SingularPivot { node: usize, var: usize },
}
