//! Sparse linear algebra: reverse Cuthill-McKee ordering, skyline LDL^T and
//! Cholesky factorization, preconditioned MinRes, and block-diagonal
//! preconditioners.

pub mod ldlt;
pub mod minres;
pub mod precond;
pub mod rcm;

pub use ldlt::SkylineLdlt;
pub use minres::{minres, SolveReport};
pub use precond::{BlockDiagPrecond, IdentityPrecond, InnerSolver, JacobiPrecond, Preconditioner};
pub use rcm::rcm_order;
