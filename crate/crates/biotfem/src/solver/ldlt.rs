//! Skyline (envelope) LDL^T factorization for sparse symmetric matrices.
//!
//! One routine serves both the indefinite step systems, which are symmetric
//! quasi-definite and therefore admit an unpivoted LDL^T, and the positive
//! definite preconditioner blocks, where a sign check on D turns the
//! factorization into a Cholesky decomposition.

use crate::solver::rcm::{permute_symmetric, rcm_order};
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

/// LDL^T factors in skyline storage, optionally behind a fill-reducing
/// reverse Cuthill-McKee permutation.
#[derive(Debug, Clone)]
pub struct SkylineLdlt {
    n: usize,
    /// `perm[new] = old` when a reordering is in effect.
    perm: Option<Vec<usize>>,
    /// First stored column of each row of L.
    first: Vec<usize>,
    /// Start of each row in `vals`; row `i` holds columns `first[i]..i`.
    starts: Vec<usize>,
    /// Strictly lower envelope entries of L, row-major.
    vals: Vec<f64>,
    diag: Vec<f64>,
}

impl SkylineLdlt {
    /// Factors a sparse symmetric matrix as L D L^T without pivoting,
    /// reordering by reverse Cuthill-McKee when `reorder` is set. Fails with
    /// [`Error::ZeroPivot`] on a vanishing pivot.
    pub fn factor_symmetric(a: &CsrMatrix, reorder: bool) -> Result<Self> {
        assert_eq!(a.nrows, a.ncols);
        debug_assert!(
            a.asymmetry() <= 1e-12 * a.values.iter().fold(1.0f64, |m, v| m.max(v.abs())),
            "skyline LDL^T requires a symmetric matrix"
        );
        let (matrix, perm);
        let work: &CsrMatrix = if reorder {
            let p = rcm_order(a);
            matrix = permute_symmetric(a, &p);
            perm = Some(p);
            &matrix
        } else {
            perm = None;
            a
        };
        Self::factor_inner(work, perm)
    }

    /// Factors a sparse symmetric positive definite matrix; equivalent to a
    /// Cholesky decomposition. Fails with [`Error::NotPositiveDefinite`] if
    /// any pivot of D is not positive.
    pub fn factor_spd(a: &CsrMatrix, reorder: bool) -> Result<Self> {
        let f = Self::factor_symmetric(a, reorder)?;
        for (row, &pivot) in f.diag.iter().enumerate() {
            if pivot <= 0.0 {
                return Err(Error::NotPositiveDefinite { row, pivot });
            }
        }
        Ok(f)
    }

    fn factor_inner(a: &CsrMatrix, perm: Option<Vec<usize>>) -> Result<Self> {
        let n = a.nrows;
        // envelope: first stored column per row, from the lower profile
        let mut first = vec![0usize; n];
        for i in 0..n {
            let (cs, _) = a.row(i);
            first[i] = cs.first().copied().unwrap_or(i).min(i);
        }
        let mut starts = Vec::with_capacity(n + 1);
        starts.push(0);
        for i in 0..n {
            starts.push(starts[i] + (i - first[i]));
        }
        let mut vals = vec![0.0; starts[n]];
        let mut diag = vec![0.0; n];
        // dense scratch for the current row of A
        let mut w = vec![0.0; n];
        let scale: f64 = {
            let d = a.diagonal();
            let m = d.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
            if m > 0.0 {
                m
            } else {
                1.0
            }
        };
        for i in 0..n {
            let fi = first[i];
            for k in fi..=i {
                w[k] = 0.0;
            }
            let (cs, vs) = a.row(i);
            for (&j, &v) in cs.iter().zip(vs) {
                if j <= i {
                    w[j] = v;
                }
            }
            let row_start = starts[i];
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let mut s = w[j];
                let lrow = &vals[row_start..row_start + (j - fi)];
                let jrow = &vals[starts[j]..starts[j + 1]];
                for k in lo..j {
                    s -= lrow[k - fi] * diag[k] * jrow[k - fj];
                }
                if diag[j] == 0.0 {
                    return Err(Error::ZeroPivot(j));
                }
                vals[row_start + (j - fi)] = s / diag[j];
            }
            let mut d = w[i];
            let lrow = &vals[row_start..starts[i + 1]];
            for k in fi..i {
                d -= lrow[k - fi] * lrow[k - fi] * diag[k];
            }
            if d.abs() < 1e-300 * scale {
                return Err(Error::ZeroPivot(i));
            }
            diag[i] = d;
        }
        Ok(SkylineLdlt { n, perm, first, starts, vals, diag })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` from the stored factors.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut x = match &self.perm {
            Some(p) => p.iter().map(|&old| b[old]).collect::<Vec<f64>>(),
            None => b.to_vec(),
        };
        // forward: L y = b
        for i in 0..self.n {
            let fi = self.first[i];
            let row = &self.vals[self.starts[i]..self.starts[i + 1]];
            let mut s = x[i];
            for k in fi..i {
                s -= row[k - fi] * x[k];
            }
            x[i] = s;
        }
        // diagonal
        for i in 0..self.n {
            x[i] /= self.diag[i];
        }
        // backward: L^T x = y
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let row = &self.vals[self.starts[i]..self.starts[i + 1]];
            let xi = x[i];
            for k in fi..i {
                x[k] -= row[k - fi] * xi;
            }
        }
        match &self.perm {
            Some(p) => {
                let mut out = vec![0.0; self.n];
                for (new, &old) in p.iter().enumerate() {
                    out[old] = x[new];
                }
                out
            }
            None => x,
        }
    }

    /// Solves `A x = b` with iterative refinement against the original
    /// matrix. An unpivoted LDL^T of an ill-scaled indefinite system can lose
    /// digits; one or two residual corrections recover them.
    pub fn solve_refined(&self, a: &CsrMatrix, b: &[f64]) -> Vec<f64> {
        let mut x = self.solve(b);
        let bnorm = b.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        for _ in 0..3 {
            let mut r = b.to_vec();
            a.mul_vec_add(-1.0, &x, &mut r);
            let rnorm = r.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if rnorm <= 1e-14 * bnorm {
                break;
            }
            let dx = self.solve(&r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
        }
        x
    }
}
