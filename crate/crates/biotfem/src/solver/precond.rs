//! Preconditioners for MinRes: identity, Jacobi, and the block-diagonal
//! composition of per-field inner solvers.

use crate::solver::ldlt::SkylineLdlt;
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

/// Symmetric positive definite approximation of an inverse, applied as
/// `z = M r`.
pub trait Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

/// No preconditioning.
pub struct IdentityPrecond;

impl Preconditioner for IdentityPrecond {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

/// Diagonal (Jacobi) preconditioner of a matrix with positive diagonal.
pub struct JacobiPrecond {
    inv_diag: Vec<f64>,
}

impl JacobiPrecond {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let d = a.diagonal();
        if let Some(row) = d.iter().position(|&v| v <= 0.0) {
            return Err(Error::NotPositiveDefinite { row, pivot: d[row] });
        }
        Ok(JacobiPrecond { inv_diag: d.into_iter().map(|v| 1.0 / v).collect() })
    }
}

impl Preconditioner for JacobiPrecond {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for i in 0..r.len() {
            z[i] = self.inv_diag[i] * r[i];
        }
    }
}

/// Inner solver for one diagonal block.
pub enum InnerSolver {
    /// Exact solve from a Cholesky-checked factorization.
    Direct(SkylineLdlt),
    /// Diagonal scaling.
    Jacobi(JacobiPrecond),
}

impl InnerSolver {
    /// Factors the block exactly; fails if it is not positive definite.
    pub fn direct(block: &CsrMatrix) -> Result<Self> {
        Ok(InnerSolver::Direct(SkylineLdlt::factor_spd(block, true)?))
    }

    pub fn jacobi(block: &CsrMatrix) -> Result<Self> {
        Ok(InnerSolver::Jacobi(JacobiPrecond::new(block)?))
    }

    fn dim(&self) -> usize {
        match self {
            InnerSolver::Direct(f) => f.dim(),
            InnerSolver::Jacobi(j) => j.inv_diag.len(),
        }
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            InnerSolver::Direct(f) => z.copy_from_slice(&f.solve(r)),
            InnerSolver::Jacobi(j) => j.apply(r, z),
        }
    }
}

/// Block-diagonal preconditioner: consecutive slices of the vector are
/// handled by independent inner solvers.
pub struct BlockDiagPrecond {
    inners: Vec<InnerSolver>,
    offsets: Vec<usize>,
}

impl BlockDiagPrecond {
    pub fn new(inners: Vec<InnerSolver>) -> Self {
        let mut offsets = Vec::with_capacity(inners.len() + 1);
        offsets.push(0);
        for inner in &inners {
            offsets.push(offsets.last().unwrap() + inner.dim());
        }
        BlockDiagPrecond { inners, offsets }
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }
}

impl Preconditioner for BlockDiagPrecond {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        debug_assert_eq!(r.len(), self.dim());
        for (k, inner) in self.inners.iter().enumerate() {
            let range = self.offsets[k]..self.offsets[k + 1];
            inner.apply(&r[range.clone()], &mut z[range]);
        }
    }
}
