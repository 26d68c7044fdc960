//! Assembly of the bilinear and linear forms of the coupled static system:
//! elasticity, divergence coupling, weighted masses, pore-pressure
//! stiffness, the two pressure stabilizations, load vectors, and symmetric
//! Dirichlet elimination.

use crate::fem::{edge_gauss, quadrature_rule, reference_basis, BasisEval, DirichletSet, DofMap, ElementKind, QuadratureRule};
use crate::mesh::{BoundaryTags, EdgeTopology, MechTag, Mesh};
use crate::sparse::{CsrBuilder, CsrMatrix};
use crate::{Error, Result};

/// Default quadrature degree for volume integrals and error norms: exact for
/// every element matrix in use and accurate for the transcendental
/// manufactured data.
pub const DEFAULT_QUAD_DEGREE: usize = 5;

/// Constant model coefficients of the three-field Biot system.
#[derive(Debug, Clone, Copy)]
pub struct ModelParams {
    /// Shear modulus, > 0.
    pub mu: f64,
    /// Inverse of the Lame parameter lambda; 0 encodes the incompressible
    /// limit lambda = +infinity.
    pub inv_lambda: f64,
    /// Biot-Willis coupling constant, close to 1.
    pub alpha: f64,
    /// Constrained specific storage coefficient, >= 0.
    pub s0: f64,
    /// Scalar hydraulic conductivity, > 0.
    pub kappa: f64,
    /// Pressure-stabilization parameter, > 0.
    pub gamma2: f64,
    /// Time step, > 0.
    pub dt: f64,
}

impl ModelParams {
    /// Coefficients of the manufactured convergence experiment with the time
    /// step left to the caller.
    pub fn manufactured(dt: f64) -> Self {
        ModelParams { mu: 10.0, inv_lambda: 1.0 / 15.0, alpha: 1.0, s0: 1.0, kappa: 1.0, gamma2: 1.0, dt }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.mu > 0.0
            && self.inv_lambda >= 0.0
            && self.s0 >= 0.0
            && self.kappa > 0.0
            && self.gamma2 > 0.0
            && self.dt > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid model parameters: {self:?}")))
        }
    }

    /// Coefficient of the pore-pressure mass term, `s0 + alpha^2 / lambda`.
    pub fn pp_mass_coeff(&self) -> f64 {
        self.s0 + self.alpha * self.alpha * self.inv_lambda
    }
}

pub(crate) struct CellGeom {
    /// Row-major inverse transpose of the affine Jacobian.
    pub(crate) inv_jt: [[f64; 2]; 2],
    pub(crate) det: f64,
    pub(crate) verts: [[f64; 2]; 3],
}

pub(crate) fn cell_geometry(mesh: &Mesh, t: usize) -> CellGeom {
    let [a, b, c] = mesh.triangles[t];
    let v0 = mesh.vertices[a];
    let v1 = mesh.vertices[b];
    let v2 = mesh.vertices[c];
    let det = (v1[0] - v0[0]) * (v2[1] - v0[1]) - (v1[1] - v0[1]) * (v2[0] - v0[0]);
    let inv = [
        [(v2[1] - v0[1]) / det, -(v2[0] - v0[0]) / det],
        [-(v1[1] - v0[1]) / det, (v1[0] - v0[0]) / det],
    ];
    // inv_jt[r] dotted with a reference gradient gives physical component r
    let inv_jt = [[inv[0][0], inv[1][0]], [inv[0][1], inv[1][1]]];
    CellGeom { inv_jt, det, verts: [v0, v1, v2] }
}

impl CellGeom {
    pub(crate) fn physical_grad(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.inv_jt[0][0] * g[0] + self.inv_jt[0][1] * g[1],
            self.inv_jt[1][0] * g[0] + self.inv_jt[1][1] * g[1],
        ]
    }

    pub(crate) fn point(&self, bary: [f64; 3]) -> [f64; 2] {
        [
            bary[0] * self.verts[0][0] + bary[1] * self.verts[1][0] + bary[2] * self.verts[2][0],
            bary[0] * self.verts[0][1] + bary[1] * self.verts[1][1] + bary[2] * self.verts[2][1],
        ]
    }
}

pub(crate) fn basis_table(kind: ElementKind, rule: &QuadratureRule) -> Vec<BasisEval> {
    rule.points
        .iter()
        .map(|&p| reference_basis(kind.scalar(), p).expect("quadrature point inside triangle"))
        .collect()
}

/// Stiffness matrix `weight * (grad u, grad v)` for a scalar dof map, with a
/// per-cell weight factor.
fn scalar_stiffness(mesh: &Mesh, dofmap: &DofMap, cell_weight: &dyn Fn(usize) -> f64) -> CsrMatrix {
    let rule = quadrature_rule((2 * (dofmap.kind.order.max(1) as usize - 1)).max(1)).unwrap();
    let table = basis_table(dofmap.kind, &rule);
    let nl = dofmap.local_dofs();
    let mut b = CsrBuilder::new(dofmap.scalar_count, dofmap.scalar_count);
    let mut local = vec![0.0; nl * nl];
    for t in 0..mesh.triangles.len() {
        let geom = cell_geometry(mesh, t);
        let w_cell = cell_weight(t);
        if w_cell == 0.0 {
            continue;
        }
        local.iter_mut().for_each(|v| *v = 0.0);
        for (q, eval) in table.iter().enumerate() {
            let w = rule.weights[q] * geom.det * w_cell;
            let grads: Vec<[f64; 2]> = eval.gradients.iter().map(|&g| geom.physical_grad(g)).collect();
            for i in 0..nl {
                for j in 0..nl {
                    local[i * nl + j] += w * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                }
            }
        }
        let dofs = dofmap.cell(t);
        for i in 0..nl {
            for j in 0..nl {
                b.add(dofs[i], dofs[j], local[i * nl + j]);
            }
        }
    }
    b.finish()
}

/// Elasticity stiffness `(2 mu eps(u), eps(v))` for a 2-vector dof map.
/// Symmetric positive semidefinite with the rigid motions as kernel.
pub fn assemble_elasticity(mesh: &Mesh, dofmap_u: &DofMap, params: &ModelParams) -> CsrMatrix {
    assert_eq!(dofmap_u.kind.components, 2, "elasticity needs a 2-vector dof map");
    let rule = quadrature_rule(DEFAULT_QUAD_DEGREE).unwrap();
    let table = basis_table(dofmap_u.kind, &rule);
    let nl = dofmap_u.local_dofs();
    let two_mu = 2.0 * params.mu;
    let mut b = CsrBuilder::new(dofmap_u.count, dofmap_u.count);
    // local ordering: [all x-components | all y-components]
    let mut local = vec![0.0; 4 * nl * nl];
    for t in 0..mesh.triangles.len() {
        let geom = cell_geometry(mesh, t);
        local.iter_mut().for_each(|v| *v = 0.0);
        for (q, eval) in table.iter().enumerate() {
            let w = rule.weights[q] * geom.det * two_mu;
            let grads: Vec<[f64; 2]> = eval.gradients.iter().map(|&g| geom.physical_grad(g)).collect();
            for i in 0..nl {
                let (gix, giy) = (grads[i][0], grads[i][1]);
                for j in 0..nl {
                    let (gjx, gjy) = (grads[j][0], grads[j][1]);
                    // eps((phi_i, 0)) : eps((phi_j, 0)) etc.; gradient
                    // products are grouped first so the matrix comes out
                    // bitwise symmetric
                    local[i * 2 * nl + j] += w * (gix * gjx + 0.5 * (giy * gjy));
                    local[i * 2 * nl + nl + j] += w * 0.5 * (giy * gjx);
                    local[(nl + i) * 2 * nl + j] += w * 0.5 * (gix * gjy);
                    local[(nl + i) * 2 * nl + nl + j] += w * (giy * gjy + 0.5 * (gix * gjx));
                }
            }
        }
        let dofs = dofmap_u.cell(t);
        for ic in 0..2 * nl {
            let gi = dofmap_u.global(dofs[ic % nl], ic / nl);
            for jc in 0..2 * nl {
                let gj = dofmap_u.global(dofs[jc % nl], jc / nl);
                b.add(gi, gj, local[ic * 2 * nl + jc]);
            }
        }
    }
    b.finish()
}

/// Divergence coupling `B[q, v] = (q, div v)`; rows are total-pressure dofs,
/// columns displacement dofs.
pub fn assemble_div_coupling(mesh: &Mesh, dofmap_u: &DofMap, dofmap_pt: &DofMap) -> CsrMatrix {
    assert_eq!(dofmap_u.kind.components, 2);
    let rule = quadrature_rule(DEFAULT_QUAD_DEGREE).unwrap();
    let table_u = basis_table(dofmap_u.kind, &rule);
    let table_p = basis_table(dofmap_pt.kind, &rule);
    let (nu, np) = (dofmap_u.local_dofs(), dofmap_pt.local_dofs());
    let mut b = CsrBuilder::new(dofmap_pt.count, dofmap_u.count);
    let mut local = vec![0.0; np * 2 * nu];
    for t in 0..mesh.triangles.len() {
        let geom = cell_geometry(mesh, t);
        local.iter_mut().for_each(|v| *v = 0.0);
        for q in 0..rule.points.len() {
            let w = rule.weights[q] * geom.det;
            let grads: Vec<[f64; 2]> = table_u[q].gradients.iter().map(|&g| geom.physical_grad(g)).collect();
            for i in 0..np {
                let pv = w * table_p[q].values[i];
                for j in 0..nu {
                    local[i * 2 * nu + j] += pv * grads[j][0];
                    local[i * 2 * nu + nu + j] += pv * grads[j][1];
                }
            }
        }
        let pdofs = dofmap_pt.cell(t);
        let udofs = dofmap_u.cell(t);
        for i in 0..np {
            for jc in 0..2 * nu {
                let gj = dofmap_u.global(udofs[jc % nu], jc / nu);
                b.add(pdofs[i], gj, local[i * 2 * nu + jc]);
            }
        }
    }
    b.finish()
}

/// Weighted mass matrix `weight * (p, q)` between two scalar dof maps on the
/// same mesh (rows from `dofmap_row`, columns from `dofmap_col`).
pub fn assemble_weighted_mass(mesh: &Mesh, dofmap_row: &DofMap, dofmap_col: &DofMap, weight: f64) -> CsrMatrix {
    assert!(weight >= 0.0, "mass weight must be nonnegative");
    let mut b = CsrBuilder::new(dofmap_row.count, dofmap_col.count);
    if weight == 0.0 {
        return b.finish();
    }
    let rule = quadrature_rule(DEFAULT_QUAD_DEGREE).unwrap();
    let table_r = basis_table(dofmap_row.kind, &rule);
    let table_c = basis_table(dofmap_col.kind, &rule);
    let (nr, nc) = (dofmap_row.local_dofs(), dofmap_col.local_dofs());
    let mut local = vec![0.0; nr * nc];
    for t in 0..mesh.triangles.len() {
        let geom = cell_geometry(mesh, t);
        local.iter_mut().for_each(|v| *v = 0.0);
        for q in 0..rule.points.len() {
            let w = rule.weights[q] * geom.det * weight;
            for i in 0..nr {
                for j in 0..nc {
                    // the inner product is grouped first so the matrix comes
                    // out bitwise symmetric
                    local[i * nc + j] += w * (table_r[q].values[i] * table_c[q].values[j]);
                }
            }
        }
        let rd = dofmap_row.cell(t);
        let cd = dofmap_col.cell(t);
        for i in 0..nr {
            for j in 0..nc {
                b.add(rd[i], cd[j], local[i * nc + j]);
            }
        }
    }
    b.finish()
}

/// Pore-pressure stiffness `(kappa dt grad p, grad q)` on a scalar P1 map.
pub fn assemble_pressure_stiffness(mesh: &Mesh, dofmap_pp: &DofMap, params: &ModelParams) -> CsrMatrix {
    let coeff = params.kappa * params.dt;
    scalar_stiffness(mesh, dofmap_pp, &|_| coeff)
}

/// Pressure-jump stabilization of the P1-P0 pair:
/// `(gamma2 / 2 mu) sum_e h_e^{-1} <[p], [q]>_e` over interior edges.
pub fn assemble_stab_jump(mesh: &Mesh, edges: &EdgeTopology, dofmap_pt: &DofMap, params: &ModelParams) -> Result<CsrMatrix> {
    if dofmap_pt.kind != ElementKind::P0 {
        return Err(Error::InvalidArgument("jump stabilization requires a P0 total-pressure map".into()));
    }
    let _ = mesh;
    let coeff = params.gamma2 / (2.0 * params.mu);
    let mut b = CsrBuilder::new(dofmap_pt.count, dofmap_pt.count);
    for inc in &edges.incidence {
        let Some(second) = inc.second else { continue };
        // piecewise constants: <[p],[q]>_e = h_e (p1 - p2)(q1 - q2), so the
        // h_e^{-1} weight cancels the edge length
        let (c1, c2) = (inc.first.0, second.0);
        b.add(c1, c1, coeff);
        b.add(c2, c2, coeff);
        b.add(c1, c2, -coeff);
        b.add(c2, c1, -coeff);
    }
    Ok(b.finish())
}

/// Pressure-gradient (Brezzi-Pitkaranta) stabilization:
/// `(gamma2 / 2 mu) sum_T h_T^2 (grad p, grad q)_T` on a continuous P1 map.
pub fn assemble_stab_gradgrad(mesh: &Mesh, dofmap_pt: &DofMap, params: &ModelParams) -> Result<CsrMatrix> {
    if dofmap_pt.kind != ElementKind::P1 {
        return Err(Error::InvalidArgument("gradient stabilization requires a continuous P1 total-pressure map".into()));
    }
    let coeff = params.gamma2 / (2.0 * params.mu);
    Ok(scalar_stiffness(mesh, dofmap_pt, &|t| {
        let h = mesh.cell_diameter(t);
        coeff * h * h
    }))
}

/// Stabilization right-hand side of the Brezzi-Pitkaranta method:
/// `-(gamma2 / 2 mu) sum_T h_T^2 (f, grad q)_T`.
pub fn assemble_stab_rhs(
    mesh: &Mesh,
    dofmap_pt: &DofMap,
    f: &dyn Fn([f64; 2], f64) -> [f64; 2],
    params: &ModelParams,
    t_time: f64,
) -> Vec<f64> {
    let coeff = -params.gamma2 / (2.0 * params.mu);
    let rule = quadrature_rule(DEFAULT_QUAD_DEGREE).unwrap();
    let table = basis_table(dofmap_pt.kind, &rule);
    let nl = dofmap_pt.local_dofs();
    let mut out = vec![0.0; dofmap_pt.count];
    for t in 0..mesh.triangles.len() {
        let geom = cell_geometry(mesh, t);
        let h = mesh.cell_diameter(t);
        let cw = coeff * h * h;
        let dofs = dofmap_pt.cell(t);
        for (q, eval) in table.iter().enumerate() {
            let w = rule.weights[q] * geom.det * cw;
            let x = geom.point(rule.points[q]);
            let fv = f(x, t_time);
            for i in 0..nl {
                let g = geom.physical_grad(eval.gradients[i]);
                out[dofs[i]] += w * (fv[0] * g[0] + fv[1] * g[1]);
            }
        }
    }
    out
}

/// Linear functional `weight * (f, q)` on a scalar dof map.
pub fn assemble_scalar_load(
    mesh: &Mesh,
    dofmap: &DofMap,
    f: &dyn Fn([f64; 2]) -> f64,
    weight: f64,
) -> Vec<f64> {
    let rule = quadrature_rule(DEFAULT_QUAD_DEGREE).unwrap();
    let table = basis_table(dofmap.kind, &rule);
    let nl = dofmap.local_dofs();
    let mut out = vec![0.0; dofmap.count];
    for t in 0..mesh.triangles.len() {
        let geom = cell_geometry(mesh, t);
        let dofs = dofmap.cell(t);
        for (q, eval) in table.iter().enumerate() {
            let w = rule.weights[q] * geom.det * weight;
            let fv = f(geom.point(rule.points[q]));
            for i in 0..nl {
                out[dofs[i]] += w * fv * eval.values[i];
            }
        }
    }
    out
}

/// Linear functional `weight * (grad_f, grad q)` on a scalar dof map, with
/// the gradient of the data given in closed form.
pub fn assemble_grad_load(
    mesh: &Mesh,
    dofmap: &DofMap,
    grad_f: &dyn Fn([f64; 2]) -> [f64; 2],
    weight: f64,
) -> Vec<f64> {
    let rule = quadrature_rule(DEFAULT_QUAD_DEGREE).unwrap();
    let table = basis_table(dofmap.kind, &rule);
    let nl = dofmap.local_dofs();
    let mut out = vec![0.0; dofmap.count];
    for t in 0..mesh.triangles.len() {
        let geom = cell_geometry(mesh, t);
        let dofs = dofmap.cell(t);
        for (q, eval) in table.iter().enumerate() {
            let w = rule.weights[q] * geom.det * weight;
            let gv = grad_f(geom.point(rule.points[q]));
            for i in 0..nl {
                let g = geom.physical_grad(eval.gradients[i]);
                out[dofs[i]] += w * (gv[0] * g[0] + gv[1] * g[1]);
            }
        }
    }
    out
}

/// Load vectors of the static step at time `t`:
/// momentum `(f, v) + <sigma n, v>_{Gamma_t}`, an empty total-pressure load
/// (the stabilization right-hand side is added separately), and the pore
/// load `-dt (g, q_p)`. History terms are added by the time stepper.
#[allow(clippy::too_many_arguments)]
pub fn assemble_loads(
    mesh: &Mesh,
    edges: &EdgeTopology,
    tags: &BoundaryTags,
    dofmap_u: &DofMap,
    dofmap_pt: &DofMap,
    dofmap_pp: &DofMap,
    f: &dyn Fn([f64; 2], f64) -> [f64; 2],
    g: &dyn Fn([f64; 2], f64) -> f64,
    traction: Option<&dyn Fn([f64; 2], f64) -> [f64; 2]>,
    params: &ModelParams,
    t_time: f64,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let rule = quadrature_rule(DEFAULT_QUAD_DEGREE).unwrap();
    let table_u = basis_table(dofmap_u.kind, &rule);
    let table_pp = basis_table(dofmap_pp.kind, &rule);
    let nu = dofmap_u.local_dofs();
    let npp = dofmap_pp.local_dofs();
    let mut bu = vec![0.0; dofmap_u.count];
    let bt = vec![0.0; dofmap_pt.count];
    let mut bp = vec![0.0; dofmap_pp.count];
    for t in 0..mesh.triangles.len() {
        let geom = cell_geometry(mesh, t);
        let udofs = dofmap_u.cell(t);
        let pdofs = dofmap_pp.cell(t);
        for q in 0..rule.points.len() {
            let w = rule.weights[q] * geom.det;
            let x = geom.point(rule.points[q]);
            let fv = f(x, t_time);
            let gv = g(x, t_time);
            for i in 0..nu {
                let v = w * table_u[q].values[i];
                bu[dofmap_u.global(udofs[i], 0)] += v * fv[0];
                bu[dofmap_u.global(udofs[i], 1)] += v * fv[1];
            }
            for i in 0..npp {
                bp[pdofs[i]] -= params.dt * w * gv * table_pp[q].values[i];
            }
        }
    }
    if let Some(traction) = traction {
        add_traction_load(mesh, edges, tags, dofmap_u, traction, t_time, &mut bu);
    }
    (bu, bt, bp)
}

/// Adds `<sigma n, v>` over the traction part of the boundary.
fn add_traction_load(
    mesh: &Mesh,
    edges: &EdgeTopology,
    tags: &BoundaryTags,
    dofmap_u: &DofMap,
    traction: &dyn Fn([f64; 2], f64) -> [f64; 2],
    t_time: f64,
    out: &mut [f64],
) {
    let (gp, gw) = edge_gauss();
    let nl = dofmap_u.local_dofs();
    for (e, key) in edges.edges.iter().enumerate() {
        if tags.mech(e) != Some(MechTag::Traction) {
            continue;
        }
        let (cell, local_edge) = edges.incidence[e].first;
        let tri = mesh.triangles[cell];
        // barycentric unit vectors of the edge endpoints within the cell
        let la = tri.iter().position(|&v| v == key[0]).unwrap();
        let lb = tri.iter().position(|&v| v == key[1]).unwrap();
        debug_assert!(la != local_edge && lb != local_edge);
        let pa = mesh.vertices[key[0]];
        let pb = mesh.vertices[key[1]];
        let len = edges.lengths[e];
        let dofs = dofmap_u.cell(cell);
        for (s, w) in gp.iter().zip(&gw) {
            let mut bary = [0.0; 3];
            bary[la] = 1.0 - s;
            bary[lb] = *s;
            let eval = reference_basis(dofmap_u.kind.scalar(), bary).unwrap();
            let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            let tv = traction(x, t_time);
            for i in 0..nl {
                let v = w * len * eval.values[i];
                out[dofmap_u.global(dofs[i], 0)] += v * tv[0];
                out[dofmap_u.global(dofs[i], 1)] += v * tv[1];
            }
        }
    }
}

/// Concatenates a 3x3 array of optional blocks into one monolithic CSR
/// matrix; `dims` are the per-field full sizes.
pub fn concat_blocks(blocks: [[Option<&CsrMatrix>; 3]; 3], dims: [usize; 3]) -> CsrMatrix {
    let total: usize = dims.iter().sum();
    let offsets = [0, dims[0], dims[0] + dims[1]];
    let mut b = CsrBuilder::new(total, total);
    for (bi, row) in blocks.iter().enumerate() {
        for (bj, blk) in row.iter().enumerate() {
            let Some(m) = blk else { continue };
            assert_eq!((m.nrows, m.ncols), (dims[bi], dims[bj]), "block ({bi},{bj}) has wrong dimensions");
            for i in 0..m.nrows {
                let (cs, vs) = m.row(i);
                for (&j, &v) in cs.iter().zip(vs) {
                    if v != 0.0 {
                        b.add(offsets[bi] + i, offsets[bj] + j, v);
                    }
                }
            }
        }
    }
    b.finish()
}

/// Symmetric Dirichlet elimination of a monolithic system.
///
/// The reduced operator keeps only free rows and columns; the stored
/// free-by-constrained coupling block reconstructs the right-hand side lift
/// `b_f - A_fc x_c` for time-dependent prescribed values.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    /// Reduced symmetric operator on the free dofs.
    pub matrix: CsrMatrix,
    /// Free rows by constrained columns coupling block.
    pub lift: CsrMatrix,
    /// Sorted free global indices (monolithic numbering).
    pub free: Vec<usize>,
    /// Sorted constrained global indices (monolithic numbering).
    pub constrained: Vec<usize>,
    /// Per-field number of free dofs.
    pub field_free: [usize; 3],
    /// Per-field full sizes.
    pub dims: [usize; 3],
}

/// Eliminates the per-field Dirichlet sets from the monolithic matrix.
/// Constraint indices are field-local and mapped by the field offsets.
pub fn apply_dirichlet(matrix: &CsrMatrix, dims: [usize; 3], sets: [&DirichletSet; 3]) -> Result<ReducedSystem> {
    let total: usize = dims.iter().sum();
    assert_eq!(matrix.nrows, total);
    let offsets = [0, dims[0], dims[0] + dims[1]];
    let mut is_constrained = vec![false; total];
    let mut field_free = [0usize; 3];
    for (fi, set) in sets.iter().enumerate() {
        for &i in &set.indices {
            if i >= dims[fi] {
                return Err(Error::InvalidArgument(format!(
                    "constraint index {i} out of range for field {fi} of size {}",
                    dims[fi]
                )));
            }
            is_constrained[offsets[fi] + i] = true;
        }
        field_free[fi] = dims[fi] - set.indices.len();
    }
    let free: Vec<usize> = (0..total).filter(|&i| !is_constrained[i]).collect();
    let constrained: Vec<usize> = (0..total).filter(|&i| is_constrained[i]).collect();
    let reduced = matrix.submatrix(&free, &free);
    let lift = matrix.submatrix(&free, &constrained);
    Ok(ReducedSystem { matrix: reduced, lift, free, constrained, field_free, dims })
}

impl ReducedSystem {
    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    /// Concatenates the per-field prescribed values into the constrained
    /// vector layout.
    pub fn constrained_values(&self, sets: [&DirichletSet; 3]) -> Vec<f64> {
        let offsets = [0, self.dims[0], self.dims[0] + self.dims[1]];
        let mut by_global: Vec<(usize, f64)> = Vec::with_capacity(self.constrained.len());
        for (fi, set) in sets.iter().enumerate() {
            for (&i, &v) in set.indices.iter().zip(&set.values) {
                by_global.push((offsets[fi] + i, v));
            }
        }
        by_global.sort_unstable_by_key(|&(g, _)| g);
        debug_assert!(by_global.iter().map(|&(g, _)| g).eq(self.constrained.iter().copied()));
        by_global.into_iter().map(|(_, v)| v).collect()
    }

    /// Reduces a full right-hand side: `b_f - A_fc x_c`.
    pub fn reduce_rhs(&self, full_rhs: &[f64], constrained_values: &[f64]) -> Vec<f64> {
        let mut b: Vec<f64> = self.free.iter().map(|&i| full_rhs[i]).collect();
        self.lift.mul_vec_add(-1.0, constrained_values, &mut b);
        b
    }

    /// Expands a free-dof solution back to the full monolithic vector,
    /// inserting the prescribed values on constrained dofs.
    pub fn expand(&self, x_free: &[f64], constrained_values: &[f64]) -> Vec<f64> {
        let total: usize = self.dims.iter().sum();
        let mut full = vec![0.0; total];
        for (k, &i) in self.free.iter().enumerate() {
            full[i] = x_free[k];
        }
        for (k, &i) in self.constrained.iter().enumerate() {
            full[i] = constrained_values[k];
        }
        full
    }

    /// Splits a full monolithic vector into per-field vectors.
    pub fn split_fields(&self, full: &[f64]) -> [Vec<f64>; 3] {
        let o1 = self.dims[0];
        let o2 = self.dims[0] + self.dims[1];
        [full[..o1].to_vec(), full[o1..o2].to_vec(), full[o2..].to_vec()]
    }

    /// Extracts the free-dof diagonal block of one field from the reduced
    /// operator numbering.
    pub fn field_range(&self, field: usize) -> std::ops::Range<usize> {
        let start: usize = self.field_free[..field].iter().sum();
        start..start + self.field_free[field]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{build_dofmap, dirichlet_set, DirichletSet, ElementKind};
    use crate::mesh::{build_edges, tag_boundary, unit_square_mesh, FlowTag, PartitionSpec, SideSet};
    use approx::assert_abs_diff_eq;

    fn single_triangle() -> Mesh {
        // the reference triangle itself
        Mesh {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2]],
            n: 1,
        }
    }

    fn params() -> ModelParams {
        ModelParams { mu: 0.5, inv_lambda: 1.0, alpha: 1.0, s0: 1.0, kappa: 1.0, gamma2: 1.0, dt: 1.0 }
    }

    #[test]
    fn reference_triangle_p1_stiffness() {
        let mesh = single_triangle();
        let e = build_edges(&mesh);
        let map = build_dofmap(&mesh, &e, ElementKind::P1);
        let k = scalar_stiffness(&mesh, &map, &|_| 1.0);
        let expected = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            let (cs, vs) = k.row(i);
            for (&j, &v) in cs.iter().zip(vs) {
                assert_abs_diff_eq!(v, expected[i][j], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn reference_triangle_p1_mass() {
        let mesh = single_triangle();
        let e = build_edges(&mesh);
        let map = build_dofmap(&mesh, &e, ElementKind::P1);
        let m = assemble_weighted_mass(&mesh, &map, &map, 1.0);
        // area A = 1/2: (A/12) [[2,1,1],[1,2,1],[1,1,2]]
        let a = 0.5;
        for i in 0..3 {
            let (cs, vs) = m.row(i);
            for (&j, &v) in cs.iter().zip(vs) {
                let expect = a / 12.0 * if i == j { 2.0 } else { 1.0 };
                assert_abs_diff_eq!(v, expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn mass_weight_zero_and_total() {
        let mesh = unit_square_mesh(3).unwrap();
        let e = build_edges(&mesh);
        let map = build_dofmap(&mesh, &e, ElementKind::P1);
        assert_eq!(assemble_weighted_mass(&mesh, &map, &map, 0.0).nnz(), 0);
        let w = 3.25;
        let m = assemble_weighted_mass(&mesh, &map, &map, w);
        let ones = vec![1.0; map.count];
        let mut y = vec![0.0; map.count];
        m.mul_vec(&ones, &mut y);
        let total: f64 = y.iter().sum();
        assert_abs_diff_eq!(total, w, epsilon = 1e-12);
    }

    #[test]
    fn elasticity_kernel_contains_rigid_motions() {
        let mesh = unit_square_mesh(3).unwrap();
        let e = build_edges(&mesh);
        let map = build_dofmap(&mesh, &e, ElementKind::P2_VEC);
        let a = assemble_elasticity(&mesh, &map, &params());
        assert!(a.asymmetry() <= 1e-14);
        let mut y = vec![0.0; map.count];
        // constant translation
        let mut v = vec![0.0; map.count];
        for i in 0..map.scalar_count {
            v[map.global(i, 0)] = 1.0;
        }
        a.mul_vec(&v, &mut y);
        assert!(y.iter().all(|&t| t.abs() < 1e-12));
        // rotation (-y, x)
        for i in 0..map.scalar_count {
            v[map.global(i, 0)] = -map.coords[i][1];
            v[map.global(i, 1)] = map.coords[i][0];
        }
        a.mul_vec(&v, &mut y);
        assert!(y.iter().all(|&t| t.abs() < 1e-12));
    }

    #[test]
    fn elasticity_linear_in_mu() {
        let mesh = unit_square_mesh(2).unwrap();
        let e = build_edges(&mesh);
        let map = build_dofmap(&mesh, &e, ElementKind::P1_VEC);
        let mut p = params();
        let a1 = assemble_elasticity(&mesh, &map, &p);
        p.mu *= 2.0;
        let a2 = assemble_elasticity(&mesh, &map, &p);
        for (x, y) in a1.values.iter().zip(&a2.values) {
            assert_abs_diff_eq!(2.0 * x, *y, epsilon = 1e-13);
        }
    }

    #[test]
    fn div_coupling_against_known_fields() {
        let mesh = unit_square_mesh(4).unwrap();
        let e = build_edges(&mesh);
        let map_u = build_dofmap(&mesh, &e, ElementKind::P2_VEC);
        let map_pt = build_dofmap(&mesh, &e, ElementKind::P1);
        let b = assemble_div_coupling(&mesh, &map_u, &map_pt);

        // v = (x, 0): div v = 1, sum over q_t == 1 gives |Omega| = 1
        let mut v = vec![0.0; map_u.count];
        for i in 0..map_u.scalar_count {
            v[map_u.global(i, 0)] = map_u.coords[i][0];
        }
        let mut y = vec![0.0; map_pt.count];
        b.mul_vec(&v, &mut y);
        assert_abs_diff_eq!(y.iter().sum::<f64>(), 1.0, epsilon = 1e-12);

        // rotation is divergence free
        for i in 0..map_u.scalar_count {
            v[map_u.global(i, 0)] = -map_u.coords[i][1];
            v[map_u.global(i, 1)] = map_u.coords[i][0];
        }
        b.mul_vec(&v, &mut y);
        assert!(y.iter().all(|&t| t.abs() < 1e-12));

        // v = (x^2, 0): integral of div v over Omega is 1 (P2 represents x^2 exactly)
        for i in 0..map_u.scalar_count {
            v[map_u.global(i, 0)] = map_u.coords[i][0] * map_u.coords[i][0];
            v[map_u.global(i, 1)] = 0.0;
        }
        b.mul_vec(&v, &mut y);
        assert_abs_diff_eq!(y.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pressure_stiffness_scaling_and_energy() {
        let n = 3;
        let mesh = unit_square_mesh(n).unwrap();
        let e = build_edges(&mesh);
        let map = build_dofmap(&mesh, &e, ElementKind::P1);
        let mut p = params();
        let k1 = assemble_pressure_stiffness(&mesh, &map, &p);
        // constant field in the kernel
        let ones = vec![1.0; map.count];
        let mut y = vec![0.0; map.count];
        k1.mul_vec(&ones, &mut y);
        assert!(y.iter().all(|&t| t.abs() < 1e-13));
        // p = x: energy = kappa dt * 1
        let px: Vec<f64> = map.coords.iter().map(|c| c[0]).collect();
        k1.mul_vec(&px, &mut y);
        let energy: f64 = px.iter().zip(&y).map(|(a, b)| a * b).sum();
        assert_abs_diff_eq!(energy, 1.0, epsilon = 1e-12);
        // doubling kappa dt doubles the matrix
        p.kappa = 2.0;
        let k2 = assemble_pressure_stiffness(&mesh, &map, &p);
        for (a, b) in k1.values.iter().zip(&k2.values) {
            assert_abs_diff_eq!(2.0 * a, *b, epsilon = 1e-13);
        }
    }

    #[test]
    fn jump_stabilization_two_cells() {
        let mesh = unit_square_mesh(1).unwrap();
        let e = build_edges(&mesh);
        let map = build_dofmap(&mesh, &e, ElementKind::P0);
        let p = params(); // gamma2 / 2 mu = 1
        let s = assemble_stab_jump(&mesh, &e, &map, &p).unwrap();
        assert!(s.asymmetry() <= 1e-15);
        let v = vec![1.0, 0.0];
        let mut y = vec![0.0; 2];
        s.mul_vec(&v, &mut y);
        let energy: f64 = v.iter().zip(&y).map(|(a, b)| a * b).sum();
        assert_abs_diff_eq!(energy, 1.0, epsilon = 1e-14);
        // constants in the kernel
        s.mul_vec(&[1.0, 1.0], &mut y);
        assert!(y.iter().all(|&t| t.abs() < 1e-15));
        // doubling gamma2 doubles the matrix
        let mut p2 = p;
        p2.gamma2 = 2.0;
        let s2 = assemble_stab_jump(&mesh, &e, &map, &p2).unwrap();
        for (a, b) in s.values.iter().zip(&s2.values) {
            assert_abs_diff_eq!(2.0 * a, *b, epsilon = 1e-15);
        }
        // rejects non-P0 maps
        let p1map = build_dofmap(&mesh, &e, ElementKind::P1);
        assert!(assemble_stab_jump(&mesh, &e, &p1map, &p).is_err());
    }

    #[test]
    fn gradgrad_stabilization_energy() {
        let n = 4;
        let mesh = unit_square_mesh(n).unwrap();
        let e = build_edges(&mesh);
        let map = build_dofmap(&mesh, &e, ElementKind::P1);
        let p = params(); // gamma2 / 2 mu = 1
        let s = assemble_stab_gradgrad(&mesh, &map, &p).unwrap();
        // p = x, uniform h_T = sqrt(2)/n: energy = h_T^2 * 1 = 2/n^2
        let px: Vec<f64> = map.coords.iter().map(|c| c[0]).collect();
        let mut y = vec![0.0; map.count];
        s.mul_vec(&px, &mut y);
        let energy: f64 = px.iter().zip(&y).map(|(a, b)| a * b).sum();
        assert_abs_diff_eq!(energy, 2.0 / (n * n) as f64, epsilon = 1e-13);
        // constants in the kernel
        s.mul_vec(&vec![1.0; map.count], &mut y);
        assert!(y.iter().all(|&t| t.abs() < 1e-13));
        // rejects P0
        let p0map = build_dofmap(&mesh, &e, ElementKind::P0);
        assert!(assemble_stab_gradgrad(&mesh, &p0map, &p).is_err());
    }

    #[test]
    fn stab_rhs_constant_forcing() {
        let n = 2;
        let mesh = unit_square_mesh(n).unwrap();
        let e = build_edges(&mesh);
        let map = build_dofmap(&mesh, &e, ElementKind::P1);
        let p = params(); // gamma2 / 2 mu = 1
        let zero = assemble_stab_rhs(&mesh, &map, &|_, _| [0.0, 0.0], &p, 0.0);
        assert!(zero.iter().all(|&v| v == 0.0));
        // f constant, q = x: sum_i q_i rhs_i = -(h_T^2) f_x * int dq/dx = -2/n^2 f_x
        let fx = 3.0;
        let rhs = assemble_stab_rhs(&mesh, &map, &|_, _| [fx, 0.0], &p, 0.0);
        let qx: Vec<f64> = map.coords.iter().map(|c| c[0]).collect();
        let total: f64 = qx.iter().zip(&rhs).map(|(a, b)| a * b).sum();
        assert_abs_diff_eq!(total, -2.0 / (n * n) as f64 * fx, epsilon = 1e-13);
    }

    #[test]
    fn loads_simple_cases() {
        let mesh = unit_square_mesh(2).unwrap();
        let e = build_edges(&mesh);
        let tags = tag_boundary(
            &mesh,
            &e,
            &PartitionSpec::with_complement(SideSet::parse("left|right").unwrap()),
            &PartitionSpec::with_complement(SideSet::all()),
        )
        .unwrap();
        let map_u = build_dofmap(&mesh, &e, ElementKind::P2_VEC);
        let map_pt = build_dofmap(&mesh, &e, ElementKind::P1);
        let map_pp = build_dofmap(&mesh, &e, ElementKind::P1);
        let p = params();

        let (bu, bt, bp) = assemble_loads(
            &mesh, &e, &tags, &map_u, &map_pt, &map_pp,
            &|_, _| [0.0, 0.0], &|_, _| 0.0, None, &p, 0.0,
        );
        assert!(bu.iter().chain(&bt).chain(&bp).all(|&v| v == 0.0));

        // f = (1, 0): sum of x-component load = |Omega| = 1
        let (bu, _, bp) = assemble_loads(
            &mesh, &e, &tags, &map_u, &map_pt, &map_pp,
            &|_, _| [1.0, 0.0],
            &|x, _| 9.0 * x[0] * x[0] * x[1] * x[1],
            None, &p, 0.0,
        );
        let sum_x: f64 = (0..map_u.scalar_count).map(|i| bu[map_u.global(i, 0)]).sum();
        assert_abs_diff_eq!(sum_x, 1.0, epsilon = 1e-12);
        // g = 9 x^2 y^2 against q == 1: -dt * 9/9 = -1
        assert_abs_diff_eq!(bp.iter().sum::<f64>(), -1.0, epsilon = 1e-6);
    }

    #[test]
    fn traction_on_top_and_bottom() {
        let mesh = unit_square_mesh(2).unwrap();
        let e = build_edges(&mesh);
        let tags = tag_boundary(
            &mesh,
            &e,
            &PartitionSpec::with_complement(SideSet::parse("left|right").unwrap()),
            &PartitionSpec::with_complement(SideSet::all()),
        )
        .unwrap();
        let map_u = build_dofmap(&mesh, &e, ElementKind::P2_VEC);
        let mut bu = vec![0.0; map_u.count];
        // constant traction (0, 1) on Gamma_t = bottom + top: total length 2
        add_traction_load(&mesh, &e, &tags, &map_u, &|_, _| [0.0, 1.0], 0.0, &mut bu);
        let sum_y: f64 = (0..map_u.scalar_count).map(|i| bu[map_u.global(i, 1)]).sum();
        assert_abs_diff_eq!(sum_y, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn dirichlet_elimination_identity_and_symmetry() {
        // P1 Laplacian on N=2 with the boundary eliminated
        let mesh = unit_square_mesh(2).unwrap();
        let e = build_edges(&mesh);
        let map = build_dofmap(&mesh, &e, ElementKind::P1);
        let k = scalar_stiffness(&mesh, &map, &|_| 1.0);
        let boundary: Vec<usize> = (0..map.count)
            .filter(|&i| {
                let c = map.coords[i];
                c[0] == 0.0 || c[0] == 1.0 || c[1] == 0.0 || c[1] == 1.0
            })
            .collect();
        let set = DirichletSet { indices: boundary.clone(), values: vec![0.0; boundary.len()] };
        let empty = DirichletSet::default();
        let mono = concat_blocks([[Some(&k), None, None], [None, None, None], [None, None, None]], [map.count, 0, 0]);
        let red = apply_dirichlet(&mono, [map.count, 0, 0], [&set, &empty, &empty]).unwrap();
        assert_eq!(red.n_free(), 1);
        assert_eq!(red.matrix.asymmetry(), 0.0);
        // homogeneous constraints, zero rhs -> zero solution
        let b = red.reduce_rhs(&vec![0.0; map.count], &vec![0.0; boundary.len()]);
        assert!(b.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dirichlet_lifting_three_dof_chain() {
        // 1D analog: -u'' on 3 dofs, u(0) = 1 prescribed on dof 0
        let mut b = CsrBuilder::new(3, 3);
        let vals = [[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]];
        for i in 0..3 {
            for j in 0..3 {
                if vals[i][j] != 0.0 {
                    b.add(i, j, vals[i][j]);
                }
            }
        }
        let a = b.finish();
        let set = DirichletSet { indices: vec![0], values: vec![1.0] };
        let empty = DirichletSet::default();
        let red = apply_dirichlet(&a, [3, 0, 0], [&set, &empty, &empty]).unwrap();
        let rhs = red.reduce_rhs(&[0.0, 0.0, 0.0], &[1.0]);
        // lift adds +1 to the dof adjacent to the constrained one
        assert_eq!(rhs, vec![1.0, 0.0]);
        let full = red.expand(&[2.0 / 3.0, 1.0 / 3.0], &[1.0]);
        assert_eq!(full[0], 1.0);
        // exact solution of the reduced system: linear decay 1, 2/3, 1/3
        assert_abs_diff_eq!(full[1], 2.0 / 3.0);
    }

    #[test]
    fn dirichlet_rejects_out_of_range() {
        let a = CsrMatrix::identity(3);
        let set = DirichletSet { indices: vec![5], values: vec![0.0] };
        let empty = DirichletSet::default();
        assert!(apply_dirichlet(&a, [3, 0, 0], [&set, &empty, &empty]).is_err());
    }
}
