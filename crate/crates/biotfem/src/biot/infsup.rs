//! Estimation of the smallest singular value of the preconditioned static
//! operator: the stability constant of the discretization measured in the
//! norm induced by the block-diagonal preconditioner. A dense eigenvalue
//! oracle cross-checks the iterative estimate on small meshes.

use crate::biot::{build_norm_blocks, build_static_system, BiotProblem, StaticMatrices, TransientData};
use crate::forms::concat_blocks;
use crate::rng::SplitMix64;
use crate::solver::SkylineLdlt;
use crate::sparse::CsrMatrix;
use crate::{Error, Result};
use nalgebra::DMatrix;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Smallest absolute generalized eigenvalue of `A x = lambda P x` for a
/// symmetric `A` and a symmetric positive definite `P`, computed by power
/// iteration on the inverse squared operator `(A^{-1} P)^2`, which is
/// self-adjoint and positive in the `P` inner product.
pub fn smallest_singular_value(a: &CsrMatrix, p: &CsrMatrix, reorder: bool) -> Result<f64> {
    assert_eq!(a.nrows, p.nrows);
    let n = a.nrows;
    let factor = SkylineLdlt::factor_symmetric(a, reorder)?;
    let mut rng = SplitMix64::new(0x5EED);
    let mut x = rng.uniform_vec(n);
    let mut px = vec![0.0; n];
    let mut theta_old = f64::NAN;
    let max_iter = 50_000;
    for it in 0..max_iter {
        p.mul_vec(&x, &mut px);
        let norm = dot(&x, &px).sqrt();
        if norm == 0.0 {
            return Err(Error::Breakdown("zero iterate in inf-sup power iteration".into()));
        }
        for (xi, pi) in x.iter_mut().zip(px.iter_mut()) {
            *xi /= norm;
            *pi /= norm;
        }
        let y = factor.solve_refined(a, &px);
        let mut py = vec![0.0; n];
        p.mul_vec(&y, &mut py);
        let z = factor.solve_refined(a, &py);
        // Rayleigh quotient of the squared inverse in the P inner product
        let theta = dot(&z, &px);
        if theta <= 0.0 {
            return Err(Error::Breakdown(format!("non-positive Rayleigh quotient {theta}")));
        }
        if it > 0 && (theta - theta_old).abs() <= 1e-13 * theta {
            return Ok(1.0 / theta.sqrt());
        }
        theta_old = theta;
        x = z;
    }
    Err(Error::NoConvergence(format!("inf-sup power iteration reached {max_iter} iterations")))
}

/// The Dirichlet-eliminated static operator of `problem` and the matching
/// block-diagonal norm matrix, with homogeneous boundary conditions.
pub fn infsup_system(problem: &BiotProblem, mats: &StaticMatrices) -> Result<(CsrMatrix, CsrMatrix)> {
    let data = TransientData::zero();
    let sets = problem.dirichlet_sets(&data, 0.0);
    let system = build_static_system(problem, mats, sets)?;
    let blocks = build_norm_blocks(problem, mats, &system.sets)?;
    let ff = system.reduced.field_free;
    let p = concat_blocks(
        [
            [Some(&blocks[0]), None, None],
            [None, Some(&blocks[1]), None],
            [None, None, Some(&blocks[2])],
        ],
        ff,
    );
    Ok((system.reduced.matrix, p))
}

/// Stability constant of the discretized problem in the preconditioner norm.
pub fn infsup_estimate(problem: &BiotProblem, mats: &StaticMatrices) -> Result<f64> {
    let (a, p) = infsup_system(problem, mats)?;
    smallest_singular_value(&a, &p, problem.params.inv_lambda > 0.0)
}

fn to_dense(m: &CsrMatrix) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(m.nrows, m.ncols);
    for i in 0..m.nrows {
        let (cs, vs) = m.row(i);
        for (&j, &v) in cs.iter().zip(vs) {
            d[(i, j)] = v;
        }
    }
    d
}

/// Dense eigenvalue oracle for [`smallest_singular_value`]: transforms the
/// pencil with the Cholesky factor of `P` and takes the smallest absolute
/// eigenvalue of the symmetric result. Meant for small systems only.
pub fn infsup_dense(a: &CsrMatrix, p: &CsrMatrix) -> Result<f64> {
    let ad = to_dense(a);
    let pd = to_dense(p);
    let chol = nalgebra::Cholesky::new(pd)
        .ok_or_else(|| Error::InvalidArgument("norm matrix is not positive definite".into()))?;
    let l = chol.l();
    let la = l
        .solve_lower_triangular(&ad)
        .ok_or_else(|| Error::Breakdown("singular Cholesky factor".into()))?;
    let m = l
        .solve_lower_triangular(&la.transpose())
        .ok_or_else(|| Error::Breakdown("singular Cholesky factor".into()))?;
    let sym = (&m + m.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(sym);
    Ok(eig.eigenvalues.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min))
}
