//! The three-field consolidation model: discretization choices, assembly of
//! the coupled step system, backward-Euler time stepping, compatible initial
//! data, and the building blocks of the norm preconditioner.

pub mod energy;
pub mod errors;
pub mod infsup;
pub mod manufactured;

use crate::fem::{build_dofmap, dirichlet_set, refresh_dirichlet_values, DirichletSet, DofMap, ElementKind};
use crate::forms::{
    apply_dirichlet, assemble_div_coupling, assemble_elasticity, assemble_loads, assemble_stab_gradgrad,
    assemble_stab_jump, assemble_stab_rhs, assemble_weighted_mass, concat_blocks, ModelParams, ReducedSystem,
};
use crate::mesh::{build_edges, tag_boundary, unit_square_mesh, BoundaryTags, EdgeTopology, FlowTag, MechTag, Mesh,
    PartitionSpec, SideSet};
use crate::solver::{minres, BlockDiagPrecond, InnerSolver, SkylineLdlt, SolveReport};
use crate::sparse::{add_scaled, CsrMatrix};
use crate::{Error, Result};

/// The three discretizations of the displacement / total-pressure /
/// pore-pressure system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Discretization {
    /// P2 displacement, continuous P1 pressures; inf-sup stable without
    /// stabilization.
    TaylorHood,
    /// Equal-order P1 with the pressure-gradient stabilization on the total
    /// pressure.
    BrezziPitkaranta,
    /// P1 displacement, piecewise-constant total pressure with the
    /// pressure-jump stabilization, P1 pore pressure.
    P1P0,
}

impl Discretization {
    pub const ALL: [Discretization; 3] =
        [Discretization::TaylorHood, Discretization::BrezziPitkaranta, Discretization::P1P0];

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "taylor-hood" | "th" => Ok(Discretization::TaylorHood),
            "brezzi-pitkaranta" | "bp" => Ok(Discretization::BrezziPitkaranta),
            "p1-p0" | "p1p0" => Ok(Discretization::P1P0),
            other => Err(Error::Config(format!(
                "unknown method '{other}' (expected taylor-hood, brezzi-pitkaranta, p1-p0)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Discretization::TaylorHood => "taylor-hood",
            Discretization::BrezziPitkaranta => "brezzi-pitkaranta",
            Discretization::P1P0 => "p1-p0",
        }
    }

    pub fn displacement_kind(&self) -> ElementKind {
        match self {
            Discretization::TaylorHood => ElementKind::P2_VEC,
            _ => ElementKind::P1_VEC,
        }
    }

    pub fn total_pressure_kind(&self) -> ElementKind {
        match self {
            Discretization::P1P0 => ElementKind::P0,
            _ => ElementKind::P1,
        }
    }

    pub fn pore_pressure_kind(&self) -> ElementKind {
        ElementKind::P1
    }

    pub fn is_stabilized(&self) -> bool {
        !matches!(self, Discretization::TaylorHood)
    }
}

impl std::fmt::Display for Discretization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Discrete state at one time level: full (unreduced) dof vectors.
#[derive(Debug, Clone)]
pub struct BiotState {
    pub t: f64,
    pub u: Vec<f64>,
    pub pt: Vec<f64>,
    pub pp: Vec<f64>,
}

impl BiotState {
    pub fn zero(problem: &BiotProblem) -> Self {
        BiotState {
            t: 0.0,
            u: vec![0.0; problem.map_u.count],
            pt: vec![0.0; problem.map_pt.count],
            pp: vec![0.0; problem.map_pp.count],
        }
    }
}

/// Problem data as closures of space and time; `traction` is the prescribed
/// normal stress on the traction part of the boundary.
pub struct TransientData<'a> {
    pub f: &'a dyn Fn([f64; 2], f64) -> [f64; 2],
    pub g: &'a dyn Fn([f64; 2], f64) -> f64,
    pub traction: Option<&'a dyn Fn([f64; 2], f64) -> [f64; 2]>,
    pub bc_u: &'a dyn Fn([f64; 2], f64, usize) -> f64,
    pub bc_pp: &'a dyn Fn([f64; 2], f64) -> f64,
}

fn zero_vec2(_: [f64; 2], _: f64) -> [f64; 2] {
    [0.0, 0.0]
}
fn zero_scalar(_: [f64; 2], _: f64) -> f64 {
    0.0
}
fn zero_bc(_: [f64; 2], _: f64, _: usize) -> f64 {
    0.0
}

impl TransientData<'static> {
    /// Zero forcing with homogeneous boundary conditions.
    pub fn zero() -> Self {
        TransientData { f: &zero_vec2, g: &zero_scalar, traction: None, bc_u: &zero_bc, bc_pp: &zero_scalar }
    }
}

/// Mesh, spaces, and boundary setup of one discretized problem.
pub struct BiotProblem {
    pub mesh: Mesh,
    pub edges: EdgeTopology,
    pub tags: BoundaryTags,
    pub disc: Discretization,
    pub params: ModelParams,
    pub map_u: DofMap,
    pub map_pt: DofMap,
    pub map_pp: DofMap,
    /// Boundary edges where displacement is prescribed.
    pub mech_edges: Vec<usize>,
    /// Boundary edges where pore pressure is prescribed.
    pub flow_edges: Vec<usize>,
}

impl BiotProblem {
    /// Builds the problem on the uniform `n x n` triangulation with the given
    /// boundary partitions.
    pub fn new(
        n: usize,
        disc: Discretization,
        params: ModelParams,
        mech_dirichlet: SideSet,
        flow_dirichlet: SideSet,
    ) -> Result<Self> {
        params.validate()?;
        let mesh = unit_square_mesh(n)?;
        let edges = build_edges(&mesh);
        let tags = tag_boundary(
            &mesh,
            &edges,
            &PartitionSpec::with_complement(mech_dirichlet),
            &PartitionSpec::with_complement(flow_dirichlet),
        )?;
        let map_u = build_dofmap(&mesh, &edges, disc.displacement_kind());
        let map_pt = build_dofmap(&mesh, &edges, disc.total_pressure_kind());
        let map_pp = build_dofmap(&mesh, &edges, disc.pore_pressure_kind());
        let mech_edges: Vec<usize> =
            (0..edges.edges.len()).filter(|&e| tags.mech(e) == Some(MechTag::Dirichlet)).collect();
        let flow_edges: Vec<usize> =
            (0..edges.edges.len()).filter(|&e| tags.flow(e) == Some(FlowTag::Pressure)).collect();
        Ok(BiotProblem { mesh, edges, tags, disc, params, map_u, map_pt, map_pp, mech_edges, flow_edges })
    }

    /// The standard setup of the transient experiments: displacement fixed on
    /// the left and right sides, pore pressure on the whole boundary.
    pub fn standard(n: usize, disc: Discretization, params: ModelParams) -> Result<Self> {
        Self::new(n, disc, params, SideSet { left: true, right: true, ..SideSet::none() }, SideSet::all())
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.map_u.count, self.map_pt.count, self.map_pp.count]
    }

    /// Dirichlet sets for the three fields with values from `data` at time `t`.
    pub fn dirichlet_sets(&self, data: &TransientData, t: f64) -> [DirichletSet; 3] {
        let bc_pp = |x: [f64; 2], t: f64, _c: usize| (data.bc_pp)(x, t);
        [
            dirichlet_set(&self.map_u, &self.edges, &self.mech_edges, data.bc_u, t),
            DirichletSet::default(),
            dirichlet_set(&self.map_pp, &self.edges, &self.flow_edges, &bc_pp, t),
        ]
    }
}

/// Full-size (pre-elimination) matrices of every bilinear form in the
/// system. Masses and the pore stiffness are stored unweighted so that
/// parameter scalings can be applied per use.
pub struct StaticMatrices {
    /// `(2 mu eps(u), eps(v))`.
    pub a_u: CsrMatrix,
    /// `(q_t, div v)`; rows total pressure, columns displacement.
    pub b_div: CsrMatrix,
    pub b_div_t: CsrMatrix,
    /// Stabilization `s_h`; empty for the mixed method.
    pub stab: CsrMatrix,
    /// Unweighted masses: total pressure, cross, pore pressure.
    pub m_t: CsrMatrix,
    pub m_tp: CsrMatrix,
    pub m_tp_t: CsrMatrix,
    pub m_p: CsrMatrix,
    /// Unweighted pore-pressure stiffness `(grad p, grad q)`.
    pub k_p: CsrMatrix,
}

/// Assembles every bilinear form once.
pub fn assemble_matrices(problem: &BiotProblem) -> Result<StaticMatrices> {
    let (mesh, edges) = (&problem.mesh, &problem.edges);
    let p = &problem.params;
    let a_u = assemble_elasticity(mesh, &problem.map_u, p);
    let b_div = assemble_div_coupling(mesh, &problem.map_u, &problem.map_pt);
    let stab = match problem.disc {
        Discretization::TaylorHood => CsrMatrix::zeros(problem.map_pt.count, problem.map_pt.count),
        Discretization::BrezziPitkaranta => assemble_stab_gradgrad(mesh, &problem.map_pt, p)?,
        Discretization::P1P0 => assemble_stab_jump(mesh, edges, &problem.map_pt, p)?,
    };
    let m_t = assemble_weighted_mass(mesh, &problem.map_pt, &problem.map_pt, 1.0);
    let m_tp = assemble_weighted_mass(mesh, &problem.map_pt, &problem.map_pp, 1.0);
    let m_p = assemble_weighted_mass(mesh, &problem.map_pp, &problem.map_pp, 1.0);
    let mut k_p_params = *p;
    k_p_params.kappa = 1.0;
    k_p_params.dt = 1.0;
    let k_p = crate::forms::assemble_pressure_stiffness(mesh, &problem.map_pp, &k_p_params);
    Ok(StaticMatrices {
        b_div_t: b_div.transpose(),
        m_tp_t: m_tp.transpose(),
        a_u,
        b_div,
        stab,
        m_t,
        m_tp,
        m_p,
        k_p,
    })
}

/// The Dirichlet-eliminated coupled step operator together with its
/// constraint bookkeeping.
pub struct StaticSystem {
    pub reduced: ReducedSystem,
    pub sets: [DirichletSet; 3],
}

/// Builds the monolithic symmetric step operator
/// `[[A, B^T, 0], [B, -(S + M/lambda), -alpha M_x / lambda],
///   [0, -alpha M_x^T / lambda, -((s0 + alpha^2/lambda) M_p + kappa dt K_p)]]`
/// and eliminates the Dirichlet constraints of `sets`.
pub fn build_static_system(
    problem: &BiotProblem,
    mats: &StaticMatrices,
    sets: [DirichletSet; 3],
) -> Result<StaticSystem> {
    let p = &problem.params;
    let al = p.alpha * p.inv_lambda;
    let block_tt = add_scaled(&[(-1.0, &mats.stab), (-p.inv_lambda, &mats.m_t)]);
    let block_tp = mats.m_tp.scaled(-al);
    let block_pt = mats.m_tp_t.scaled(-al);
    let block_pp = add_scaled(&[(-p.pp_mass_coeff(), &mats.m_p), (-p.kappa * p.dt, &mats.k_p)]);
    let dims = problem.dims();
    let full = concat_blocks(
        [
            [Some(&mats.a_u), Some(&mats.b_div_t), None],
            [Some(&mats.b_div), Some(&block_tt), Some(&block_tp)],
            [None, Some(&block_pt), Some(&block_pp)],
        ],
        dims,
    );
    let reduced = apply_dirichlet(&full, dims, [&sets[0], &sets[1], &sets[2]])?;
    Ok(StaticSystem { reduced, sets })
}

impl StaticSystem {
    /// Refreshes the prescribed boundary values at a new time.
    pub fn refresh_bc(&mut self, problem: &BiotProblem, data: &TransientData, t: f64) {
        refresh_dirichlet_values(&mut self.sets[0], &problem.map_u, data.bc_u, t);
        let bc_pp = |x: [f64; 2], t: f64, _c: usize| (data.bc_pp)(x, t);
        refresh_dirichlet_values(&mut self.sets[2], &problem.map_pp, &bc_pp, t);
    }

    pub fn constrained_values(&self) -> Vec<f64> {
        self.reduced.constrained_values([&self.sets[0], &self.sets[1], &self.sets[2]])
    }
}

/// Sorted free indices of one field given its constraint set.
fn free_indices(dim: usize, set: &DirichletSet) -> Vec<usize> {
    let mut constrained = vec![false; dim];
    for &i in &set.indices {
        constrained[i] = true;
    }
    (0..dim).filter(|&i| !constrained[i]).collect()
}

/// The three Dirichlet-eliminated norm (Riesz-map) matrices behind the block
/// preconditioner: `(2 mu eps, eps)`, `((2 mu)^{-1} p_t, q_t) [+ s_h]`, and
/// `((s0 + alpha^2/lambda) p_p, q_p) + (kappa dt grad p_p, grad q_p)`.
/// The stabilization enters only for the stabilized discretizations.
pub fn build_norm_blocks(
    problem: &BiotProblem,
    mats: &StaticMatrices,
    sets: &[DirichletSet; 3],
) -> Result<[CsrMatrix; 3]> {
    let p = &problem.params;
    if p.pp_mass_coeff() == 0.0 && sets[2].is_empty() {
        return Err(Error::SingularPressureBlock);
    }
    let free_u = free_indices(problem.map_u.count, &sets[0]);
    let p_u = mats.a_u.submatrix(&free_u, &free_u);
    let mut pt_terms = vec![(1.0 / (2.0 * p.mu), &mats.m_t)];
    if problem.disc.is_stabilized() {
        pt_terms.push((1.0, &mats.stab));
    }
    let p_pt = add_scaled(&pt_terms);
    let free_p = free_indices(problem.map_pp.count, &sets[2]);
    let p_pp_full = add_scaled(&[(p.pp_mass_coeff(), &mats.m_p), (p.kappa * p.dt, &mats.k_p)]);
    let p_pp = p_pp_full.submatrix(&free_p, &free_p);
    Ok([p_u, p_pt, p_pp])
}

/// Factors the norm blocks into the block-diagonal preconditioner. The total
/// pressure block of the mixed method uses diagonal scaling of its mass
/// matrix; every other block is solved exactly.
pub fn build_preconditioner(
    problem: &BiotProblem,
    blocks: &[CsrMatrix; 3],
) -> Result<BlockDiagPrecond> {
    let inner_pt = if problem.disc.is_stabilized() {
        InnerSolver::direct(&blocks[1])?
    } else {
        InnerSolver::jacobi(&blocks[1])?
    };
    Ok(BlockDiagPrecond::new(vec![
        InnerSolver::direct(&blocks[0])?,
        inner_pt,
        InnerSolver::direct(&blocks[2]).map_err(|e| match e {
            Error::NotPositiveDefinite { .. } => Error::SingularPressureBlock,
            other => other,
        })?,
    ]))
}

/// Per-step linear solver of the time stepper.
pub enum StepSolver {
    /// One factorization of the reduced operator, two triangular solves per
    /// step.
    Direct(SkylineLdlt),
    /// MinRes with the norm preconditioner.
    Iterative { precond: BlockDiagPrecond, rtol: f64, max_iter: usize },
}

impl StepSolver {
    /// Factors the reduced step operator once.
    pub fn direct(system: &StaticSystem, problem: &BiotProblem) -> Result<Self> {
        // the (2,2) block is positive definite only when 1/lambda > 0; in the
        // limit case keep the field ordering so that elimination stays stable
        let reorder = problem.params.inv_lambda > 0.0;
        Ok(StepSolver::Direct(SkylineLdlt::factor_symmetric(&system.reduced.matrix, reorder)?))
    }

    pub fn iterative(system: &StaticSystem, problem: &BiotProblem, mats: &StaticMatrices, rtol: f64) -> Result<Self> {
        let blocks = build_norm_blocks(problem, mats, &system.sets)?;
        Ok(StepSolver::Iterative { precond: build_preconditioner(problem, &blocks)?, rtol, max_iter: 500 })
    }

    pub fn solve(&self, system: &StaticSystem, rhs: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
        match self {
            StepSolver::Direct(f) => Ok((
                f.solve_refined(&system.reduced.matrix, rhs),
                SolveReport { iterations: 0, converged: true, residuals: Vec::new() },
            )),
            StepSolver::Iterative { precond, rtol, max_iter } => {
                minres(&system.reduced.matrix, precond, rhs, *rtol, *max_iter)
            }
        }
    }
}

/// Assembles the full right-hand side of one backward-Euler step ending at
/// `t_next`, including the history terms from the previous state.
pub fn step_rhs(
    problem: &BiotProblem,
    mats: &StaticMatrices,
    data: &TransientData,
    state: &BiotState,
    t_next: f64,
) -> Vec<f64> {
    let p = &problem.params;
    let (bu, mut bt, mut bp) = assemble_loads(
        &problem.mesh,
        &problem.edges,
        &problem.tags,
        &problem.map_u,
        &problem.map_pt,
        &problem.map_pp,
        data.f,
        data.g,
        data.traction,
        p,
        t_next,
    );
    if problem.disc == Discretization::BrezziPitkaranta {
        let stab_rhs = assemble_stab_rhs(&problem.mesh, &problem.map_pt, data.f, p, t_next);
        for (b, s) in bt.iter_mut().zip(&stab_rhs) {
            *b += s;
        }
    }
    // history terms of the pore-pressure row
    mats.m_tp_t.mul_vec_add(-p.alpha * p.inv_lambda, &state.pt, &mut bp);
    mats.m_p.mul_vec_add(-p.pp_mass_coeff(), &state.pp, &mut bp);
    let mut full = bu;
    full.extend_from_slice(&bt);
    full.extend_from_slice(&bp);
    full
}

/// Advances the state by one backward-Euler step.
pub fn step(
    problem: &BiotProblem,
    system: &mut StaticSystem,
    mats: &StaticMatrices,
    solver: &StepSolver,
    data: &TransientData,
    state: &BiotState,
) -> Result<(BiotState, SolveReport)> {
    let t_next = state.t + problem.params.dt;
    let full_rhs = step_rhs(problem, mats, data, state, t_next);
    system.refresh_bc(problem, data, t_next);
    let xc = system.constrained_values();
    let rhs = system.reduced.reduce_rhs(&full_rhs, &xc);
    let (x, report) = solver.solve(system, &rhs)?;
    let full = system.reduced.expand(&x, &xc);
    let [u, pt, pp] = system.reduced.split_fields(&full);
    Ok((BiotState { t: t_next, u, pt, pp }, report))
}

/// Solves the compatible initial-data system: the two algebraic rows of the
/// semidiscrete system at `t = 0` plus a consistency equation tying the
/// initial discrete pressures to the given initial fields. The third row is
/// scaled by `1/alpha` so the system stays symmetric for every `alpha > 0`.
pub fn compatible_initial_data(
    problem: &BiotProblem,
    mats: &StaticMatrices,
    data: &TransientData,
    pt0: &dyn Fn([f64; 2]) -> f64,
    pp0_grad: &dyn Fn([f64; 2]) -> [f64; 2],
) -> Result<BiotState> {
    let p = &problem.params;
    let rhs_pt = crate::forms::assemble_scalar_load(&problem.mesh, &problem.map_pp, pt0, -p.alpha * p.inv_lambda);
    let rhs_grad = crate::forms::assemble_grad_load(&problem.mesh, &problem.map_pp, pp0_grad, -p.kappa / p.alpha);
    let mut rhs3 = rhs_pt;
    for (a, b) in rhs3.iter_mut().zip(&rhs_grad) {
        *a += b;
    }
    initial_data_inner(problem, mats, data, rhs3)
}

/// Compatible initial data from given coefficient vectors of the initial
/// total and pore pressures, with zero forcing and homogeneous boundary
/// conditions. Used to project random initial data onto the discrete
/// constraint manifold.
pub fn compatible_initial_data_from_vectors(
    problem: &BiotProblem,
    mats: &StaticMatrices,
    pt0: &[f64],
    pp0: &[f64],
) -> Result<BiotState> {
    let p = &problem.params;
    let mut rhs3 = vec![0.0; problem.map_pp.count];
    mats.m_tp_t.mul_vec_add(-p.alpha * p.inv_lambda, pt0, &mut rhs3);
    mats.k_p.mul_vec_add(-p.kappa / p.alpha, pp0, &mut rhs3);
    initial_data_inner(problem, mats, &TransientData::zero(), rhs3)
}

fn initial_data_inner(
    problem: &BiotProblem,
    mats: &StaticMatrices,
    data: &TransientData,
    rhs3: Vec<f64>,
) -> Result<BiotState> {
    let p = &problem.params;
    let al = p.alpha * p.inv_lambda;
    let block_tt = add_scaled(&[(-1.0, &mats.stab), (-p.inv_lambda, &mats.m_t)]);
    let block_tp = mats.m_tp.scaled(-al);
    let block_pt = mats.m_tp_t.scaled(-al);
    let block_pp = mats.k_p.scaled(-p.kappa / p.alpha);
    let dims = problem.dims();
    let full = concat_blocks(
        [
            [Some(&mats.a_u), Some(&mats.b_div_t), None],
            [Some(&mats.b_div), Some(&block_tt), Some(&block_tp)],
            [None, Some(&block_pt), Some(&block_pp)],
        ],
        dims,
    );
    let sets = problem.dirichlet_sets(data, 0.0);
    let reduced = apply_dirichlet(&full, dims, [&sets[0], &sets[1], &sets[2]])?;

    let (bu, mut bt, _) = assemble_loads(
        &problem.mesh,
        &problem.edges,
        &problem.tags,
        &problem.map_u,
        &problem.map_pt,
        &problem.map_pp,
        data.f,
        data.g,
        data.traction,
        p,
        0.0,
    );
    if problem.disc == Discretization::BrezziPitkaranta {
        let stab_rhs = assemble_stab_rhs(&problem.mesh, &problem.map_pt, data.f, p, 0.0);
        for (b, s) in bt.iter_mut().zip(&stab_rhs) {
            *b += s;
        }
    }
    let mut full_rhs = bu;
    full_rhs.extend_from_slice(&bt);
    full_rhs.extend_from_slice(&rhs3);

    let xc = reduced.constrained_values([&sets[0], &sets[1], &sets[2]]);
    let b = reduced.reduce_rhs(&full_rhs, &xc);
    let factor = SkylineLdlt::factor_symmetric(&reduced.matrix, p.inv_lambda > 0.0)?;
    let x = factor.solve_refined(&reduced.matrix, &b);
    let full_x = reduced.expand(&x, &xc);
    let [u, pt, pp] = reduced.split_fields(&full_x);
    Ok(BiotState { t: 0.0, u, pt, pp })
}

/// Maximum free-dof residual of the two algebraic (non-dynamic) rows of the
/// semidiscrete system at the state's time. A compatible state drives this
/// to solver precision.
pub fn algebraic_residual(
    problem: &BiotProblem,
    mats: &StaticMatrices,
    data: &TransientData,
    state: &BiotState,
) -> f64 {
    let p = &problem.params;
    let (bu, mut bt, _) = assemble_loads(
        &problem.mesh,
        &problem.edges,
        &problem.tags,
        &problem.map_u,
        &problem.map_pt,
        &problem.map_pp,
        data.f,
        data.g,
        data.traction,
        p,
        state.t,
    );
    if problem.disc == Discretization::BrezziPitkaranta {
        let stab_rhs = assemble_stab_rhs(&problem.mesh, &problem.map_pt, data.f, p, state.t);
        for (b, s) in bt.iter_mut().zip(&stab_rhs) {
            *b += s;
        }
    }
    // row u: A u + B^T p_t - b_u
    let mut ru = vec![0.0; problem.map_u.count];
    mats.a_u.mul_vec(&state.u, &mut ru);
    mats.b_div_t.mul_vec_add(1.0, &state.pt, &mut ru);
    for (r, b) in ru.iter_mut().zip(&bu) {
        *r -= b;
    }
    // row p_t: B u - (S + M/lambda) p_t - alpha/lambda M_x p_p - b_t
    let mut rt = vec![0.0; problem.map_pt.count];
    mats.b_div.mul_vec(&state.u, &mut rt);
    mats.stab.mul_vec_add(-1.0, &state.pt, &mut rt);
    mats.m_t.mul_vec_add(-p.inv_lambda, &state.pt, &mut rt);
    mats.m_tp.mul_vec_add(-p.alpha * p.inv_lambda, &state.pp, &mut rt);
    for (r, b) in rt.iter_mut().zip(&bt) {
        *r -= b;
    }
    // ignore constrained displacement rows; p_t rows are all free
    let sets = problem.dirichlet_sets(data, state.t);
    let mut constrained = vec![false; problem.map_u.count];
    for &i in &sets[0].indices {
        constrained[i] = true;
    }
    let max_u = ru
        .iter()
        .enumerate()
        .filter(|(i, _)| !constrained[*i])
        .map(|(_, r)| r.abs())
        .fold(0.0, f64::max);
    let max_t = rt.iter().map(|r| r.abs()).fold(0.0, f64::max);
    max_u.max(max_t)
}
