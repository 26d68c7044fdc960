//! Closed-form transient solution used for the convergence experiments,
//! together with the forcing, source, traction, and boundary data it
//! induces, and a driver that runs one full backward-Euler simulation.
//!
//! The exact fields are
//! `u = (sin(pi x) sin(1 + t), sin(y) sin(t))`, `p_p = x^2 y^2 cos(t)`
//! with `mu = 10`, `lambda = 15`, `alpha = 1`, `s0 = 1`, `kappa = 1`,
//! displacement fixed on the left and right sides and pore pressure on the
//! whole boundary.

use crate::biot::errors::{error_norms, ErrorNorms};
use crate::biot::{
    assemble_matrices, build_static_system, compatible_initial_data, step, BiotProblem, Discretization,
    StepSolver, TransientData,
};
use crate::forms::ModelParams;
use crate::Result;
use std::f64::consts::PI;

/// The manufactured problem: exact fields, induced data, and coefficients.
#[derive(Debug, Clone, Copy)]
pub struct ManufacturedProblem {
    pub params: ModelParams,
    /// Finite Lame parameter `lambda = 1 / inv_lambda`.
    pub lambda: f64,
}

impl ManufacturedProblem {
    pub fn new(dt: f64) -> Self {
        ManufacturedProblem { params: ModelParams::manufactured(dt), lambda: 15.0 }
    }

    /// Same exact fields with a different stabilization parameter.
    pub fn with_gamma2(dt: f64, gamma2: f64) -> Self {
        let mut mp = Self::new(dt);
        mp.params.gamma2 = gamma2;
        mp
    }

    pub fn u(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        [(PI * x[0]).sin() * (1.0 + t).sin(), x[1].sin() * t.sin()]
    }

    /// Row `i` holds the gradient of displacement component `i`.
    pub fn grad_u(&self, x: [f64; 2], t: f64) -> [[f64; 2]; 2] {
        [
            [PI * (PI * x[0]).cos() * (1.0 + t).sin(), 0.0],
            [0.0, x[1].cos() * t.sin()],
        ]
    }

    pub fn div_u(&self, x: [f64; 2], t: f64) -> f64 {
        PI * (PI * x[0]).cos() * (1.0 + t).sin() + x[1].cos() * t.sin()
    }

    pub fn pp(&self, x: [f64; 2], t: f64) -> f64 {
        x[0] * x[0] * x[1] * x[1] * t.cos()
    }

    pub fn grad_pp(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        [2.0 * x[0] * x[1] * x[1] * t.cos(), 2.0 * x[0] * x[0] * x[1] * t.cos()]
    }

    /// Total pressure `p_t = lambda div u - alpha p_p`.
    pub fn pt(&self, x: [f64; 2], t: f64) -> f64 {
        self.lambda * self.div_u(x, t) - self.params.alpha * self.pp(x, t)
    }

    /// Momentum forcing `f = -div(2 mu eps(u)) - grad p_t`.
    pub fn f(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let p = &self.params;
        let c = 2.0 * p.mu + self.lambda;
        let a = p.alpha;
        [
            c * PI * PI * (PI * x[0]).sin() * (1.0 + t).sin() + 2.0 * a * x[0] * x[1] * x[1] * t.cos(),
            c * x[1].sin() * t.sin() + 2.0 * a * x[0] * x[0] * x[1] * t.cos(),
        ]
    }

    /// Fluid source `g = s0 dp/dt + alpha d(div u)/dt - kappa lap(p_p)`.
    pub fn g(&self, x: [f64; 2], t: f64) -> f64 {
        let p = &self.params;
        -p.s0 * x[0] * x[0] * x[1] * x[1] * t.sin()
            + p.alpha * (PI * (PI * x[0]).cos() * (1.0 + t).cos() + x[1].cos() * t.cos())
            - p.kappa * 2.0 * (x[0] * x[0] + x[1] * x[1]) * t.cos()
    }

    /// Normal effective stress on the traction boundary (bottom and top
    /// sides). The stress tensor `2 mu eps(u) + p_t I` is diagonal for these
    /// fields, so only its yy entry enters.
    pub fn traction(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let syy = 2.0 * self.params.mu * x[1].cos() * t.sin() + self.pt(x, t);
        if x[1] > 0.5 {
            [0.0, syy]
        } else {
            [0.0, -syy]
        }
    }

    /// Runs a callback with the transient data bundle of this problem. The
    /// closures live only for the duration of the call.
    pub fn with_data<R>(&self, run: impl FnOnce(&TransientData) -> R) -> R {
        let f = |x: [f64; 2], t: f64| self.f(x, t);
        let g = |x: [f64; 2], t: f64| self.g(x, t);
        let traction = |x: [f64; 2], t: f64| self.traction(x, t);
        let bc_u = |x: [f64; 2], t: f64, c: usize| self.u(x, t)[c];
        let bc_pp = |x: [f64; 2], t: f64| self.pp(x, t);
        run(&TransientData { f: &f, g: &g, traction: Some(&traction), bc_u: &bc_u, bc_pp: &bc_pp })
    }
}

/// Outcome of one manufactured convergence run.
#[derive(Debug, Clone)]
pub struct ConvergenceCase {
    pub n: usize,
    pub steps: usize,
    pub errors: ErrorNorms,
    pub seconds: f64,
}

/// Runs the manufactured problem on the `n x n` mesh with `dt = h^2` to
/// `t = 0.5` and returns the error norms at the final time. Each step reuses
/// one factorization of the step operator.
pub fn run_convergence_case(disc: Discretization, n: usize, gamma2: f64) -> Result<ConvergenceCase> {
    let start = std::time::Instant::now();
    let h = 1.0 / n as f64;
    let dt = h * h;
    let steps = (0.5 / dt).round() as usize;
    let mp = ManufacturedProblem::with_gamma2(dt, gamma2);
    let problem = BiotProblem::standard(n, disc, mp.params)?;
    let mats = assemble_matrices(&problem)?;
    let errors = mp.with_data(|data| -> Result<ErrorNorms> {
        let mut state =
            compatible_initial_data(&problem, &mats, data, &|x| mp.pt(x, 0.0), &|x| mp.grad_pp(x, 0.0))?;
        let sets = problem.dirichlet_sets(data, 0.0);
        let mut system = build_static_system(&problem, &mats, sets)?;
        let solver = StepSolver::direct(&system, &problem)?;
        for _ in 0..steps {
            let (next, _) = step(&problem, &mut system, &mats, &solver, data, &state)?;
            state = next;
        }
        Ok(error_norms(&problem, &mp, &state))
    })?;
    Ok(ConvergenceCase { n, steps, errors, seconds: start.elapsed().as_secs_f64() })
}
