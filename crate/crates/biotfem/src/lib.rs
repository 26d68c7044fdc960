//! Finite element library for Biot's consolidation model in its three-field
//! form: displacement, total pressure, and pore pressure.
//!
//! The library provides
//!
//! * structured triangulations of the unit square with edge topology and
//!   boundary-partition tagging ([`mesh`]),
//! * P0/P1/P2 reference elements, triangle quadrature, and dof maps ([`fem`]),
//! * assembly of all bilinear forms of the coupled static system, including
//!   the pressure-jump and pressure-gradient stabilizations ([`forms`]),
//! * sparse kernels: CSR matrices, reverse Cuthill-McKee ordering, skyline
//!   LDL^T / Cholesky factorization, MinRes, and the 3x3 block-diagonal
//!   preconditioner ([`sparse`], [`solver`]),
//! * the model layer: static step system, backward-Euler time stepping,
//!   compatible initial data, the manufactured convergence problem, error
//!   norms, energy-decay and inf-sup diagnostics ([`biot`]),
//! * an experiment driver with `converge`, `precond`, `energy`, and `infsup`
//!   subcommands emitting CSV and markdown reports ([`cli`]).
//!
//! The `examples/` directory contains one runnable example per capability;
//! `cargo run --release -- --help` shows the experiment CLI.

pub mod biot;
pub mod cli;
pub mod fem;
pub mod forms;
pub mod mesh;
pub mod rng;
pub mod solver;
pub mod sparse;

use thiserror::Error;

/// Errors produced by mesh construction, assembly, and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("matrix is not positive definite (non-positive pivot at row {row}: {pivot})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("zero pivot in LDL^T factorization at row {0}")]
    ZeroPivot(usize),
    #[error("iterative solver did not converge: {0}")]
    NoConvergence(String),
    #[error("numerical breakdown: {0}")]
    Breakdown(String),
    #[error("singular pore-pressure block: s0 = 0, 1/lambda = 0, and no pressure Dirichlet boundary")]
    SingularPressureBlock,
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
