//! Preconditioned MinRes for symmetric (possibly indefinite) systems with a
//! symmetric positive definite preconditioner.

use crate::solver::precond::Preconditioner;
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

/// Outcome of one MinRes solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    /// Preconditioned residual norm after each iteration, starting with the
    /// initial residual.
    pub residuals: Vec<f64>,
}

/// Solves `A x = b` with zero initial guess by MinRes, measuring convergence
/// in the preconditioner norm: stops when `|r|_M <= rtol |b|_M` where
/// `M` approximates `A^{-1}`.
pub fn minres(
    a: &CsrMatrix,
    m: &dyn Preconditioner,
    b: &[f64],
    rtol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = b.len();
    assert_eq!(a.nrows, n);
    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut y = vec![0.0; n];
    m.apply(&r1, &mut y);
    let beta1sq = dot(&r1, &y);
    if beta1sq < 0.0 {
        return Err(Error::Breakdown("preconditioner is not positive definite".into()));
    }
    let beta1 = beta1sq.sqrt();
    let mut report = SolveReport { iterations: 0, converged: true, residuals: vec![beta1] };
    if beta1 == 0.0 {
        return Ok((x, report));
    }

    let mut r2 = r1.clone();
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut av = vec![0.0; n];

    for itn in 1..=max_iter {
        let s = 1.0 / beta;
        for i in 0..n {
            v[i] = s * y[i];
        }
        a.mul_vec(&v, &mut av);
        if itn >= 2 {
            let c = beta / oldb;
            for i in 0..n {
                av[i] -= c * r1[i];
            }
        }
        let alfa = dot(&v, &av);
        let c = alfa / beta;
        for i in 0..n {
            av[i] -= c * r2[i];
        }
        std::mem::swap(&mut r1, &mut r2);
        std::mem::swap(&mut r2, &mut av);
        m.apply(&r2, &mut y);
        oldb = beta;
        let betasq = dot(&r2, &y);
        if betasq < 0.0 {
            return Err(Error::Breakdown("preconditioner is not positive definite".into()));
        }
        beta = betasq.sqrt();

        // plane rotation of the tridiagonal projection
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = (gbar * gbar + beta * beta).sqrt().max(f64::MIN_POSITIVE);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        for i in 0..n {
            let wi = (v[i] - oldeps * w[i] - delta * w2[i]) / gamma;
            w[i] = w2[i];
            w2[i] = wi;
            x[i] += phi * wi;
        }
        report.iterations = itn;
        report.residuals.push(phibar);
        if phibar <= rtol * beta1 {
            return Ok((x, report));
        }
    }
    report.converged = false;
    Err(Error::NoConvergence(format!(
        "MinRes reached {max_iter} iterations with relative residual {:.3e}",
        phibar / beta1
    )))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
