//! Error norms of a discrete state against closed-form fields, evaluated by
//! quadrature at the state's time. The displacement and total-pressure
//! errors are measured in the parameter-weighted norms of the stability
//! analysis, `(2 mu eps(v), eps(v))^{1/2}` and `((2 mu)^{-1} q, q)^{1/2}`;
//! the pore pressure in L2 and in the conductivity-weighted H1 seminorm.

use crate::biot::manufactured::ManufacturedProblem;
use crate::biot::{BiotProblem, BiotState};
use crate::fem::quadrature_rule;
use crate::forms::{basis_table, cell_geometry, DEFAULT_QUAD_DEGREE};

/// Error norms of one state at one time.
#[derive(Debug, Clone, Copy)]
pub struct ErrorNorms {
    /// Total-pressure error in `((2 mu)^{-1} q, q)^{1/2}`.
    pub pt_l2: f64,
    /// L2 error of the pore pressure.
    pub pp_l2: f64,
    /// Displacement error in the energy norm `(2 mu eps(v), eps(v))^{1/2}`.
    pub u_h1: f64,
    /// `sqrt(kappa)` times the H1-seminorm error of the pore pressure.
    pub pp_1k: f64,
}

/// Error norms of `state` against arbitrary exact fields at a fixed time.
/// The gradient of the displacement is row-major: row `i` is `grad u_i`.
#[allow(clippy::too_many_arguments)]
pub fn error_norms_against(
    problem: &BiotProblem,
    state: &BiotState,
    grad_u: &dyn Fn([f64; 2]) -> [[f64; 2]; 2],
    pt: &dyn Fn([f64; 2]) -> f64,
    pp: &dyn Fn([f64; 2]) -> f64,
    grad_pp: &dyn Fn([f64; 2]) -> [f64; 2],
) -> ErrorNorms {
    let rule = quadrature_rule(DEFAULT_QUAD_DEGREE).unwrap();
    let (map_u, map_pt, map_pp) = (&problem.map_u, &problem.map_pt, &problem.map_pp);
    let table_u = basis_table(map_u.kind, &rule);
    let table_pt = basis_table(map_pt.kind, &rule);
    let table_pp = basis_table(map_pp.kind, &rule);
    let (nu, nt, np) = (map_u.local_dofs(), map_pt.local_dofs(), map_pp.local_dofs());
    let (mut e_pt, mut e_pp, mut e_u_eps, mut e_pp_h1) = (0.0, 0.0, 0.0, 0.0);
    for t in 0..problem.mesh.triangles.len() {
        let geom = cell_geometry(&problem.mesh, t);
        let udofs = map_u.cell(t);
        let tdofs = map_pt.cell(t);
        let pdofs = map_pp.cell(t);
        for q in 0..rule.points.len() {
            let w = rule.weights[q] * geom.det;
            let x = geom.point(rule.points[q]);

            let mut guh = [[0.0; 2]; 2];
            for i in 0..nu {
                let g = geom.physical_grad(table_u[q].gradients[i]);
                for c in 0..2 {
                    let coef = state.u[map_u.global(udofs[i], c)];
                    guh[c][0] += coef * g[0];
                    guh[c][1] += coef * g[1];
                }
            }
            let mut pth = 0.0;
            for i in 0..nt {
                pth += state.pt[tdofs[i]] * table_pt[q].values[i];
            }
            let mut pph = 0.0;
            let mut gpph = [0.0; 2];
            for i in 0..np {
                let coef = state.pp[pdofs[i]];
                pph += coef * table_pp[q].values[i];
                let g = geom.physical_grad(table_pp[q].gradients[i]);
                gpph[0] += coef * g[0];
                gpph[1] += coef * g[1];
            }

            let gue = grad_u(x);
            let g = [
                [guh[0][0] - gue[0][0], guh[0][1] - gue[0][1]],
                [guh[1][0] - gue[1][0], guh[1][1] - gue[1][1]],
            ];
            let e01 = 0.5 * (g[0][1] + g[1][0]);
            e_u_eps += w * (g[0][0] * g[0][0] + g[1][1] * g[1][1] + 2.0 * e01 * e01);
            let dt = pth - pt(x);
            e_pt += w * dt * dt;
            let dp = pph - pp(x);
            e_pp += w * dp * dp;
            let gpe = grad_pp(x);
            for d in 0..2 {
                let dg = gpph[d] - gpe[d];
                e_pp_h1 += w * dg * dg;
            }
        }
    }
    let two_mu = 2.0 * problem.params.mu;
    ErrorNorms {
        pt_l2: (e_pt / two_mu).sqrt(),
        pp_l2: e_pp.sqrt(),
        u_h1: (two_mu * e_u_eps).sqrt(),
        pp_1k: (problem.params.kappa * e_pp_h1).sqrt(),
    }
}

/// Error norms against the manufactured fields at the state's time.
pub fn error_norms(problem: &BiotProblem, mp: &ManufacturedProblem, state: &BiotState) -> ErrorNorms {
    let t = state.t;
    error_norms_against(
        problem,
        state,
        &|x| mp.grad_u(x, t),
        &|x| mp.pt(x, t),
        &|x| mp.pp(x, t),
        &|x| mp.grad_pp(x, t),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biot::Discretization;
    use crate::forms::ModelParams;
    use approx::assert_abs_diff_eq;

    #[test]
    fn nodal_interpolant_of_affine_fields_is_exact() {
        for disc in Discretization::ALL {
            let problem = BiotProblem::standard(3, disc, ModelParams::manufactured(0.1)).unwrap();
            let mut state = BiotState::zero(&problem);
            state.t = 0.0;
            // u = (x + 2y, 3 - y), p_t = 2 - x + y, p_p = x + y
            for i in 0..problem.map_u.scalar_count {
                let c = problem.map_u.coords[i];
                state.u[problem.map_u.global(i, 0)] = c[0] + 2.0 * c[1];
                state.u[problem.map_u.global(i, 1)] = 3.0 - c[1];
            }
            match disc.total_pressure_kind().order {
                0 => {
                    // cell averages represent an affine field at the centroid
                    for t in 0..problem.mesh.triangles.len() {
                        let geom = cell_geometry(&problem.mesh, t);
                        let c = geom.point([1.0 / 3.0; 3]);
                        state.pt[problem.map_pt.cell(t)[0]] = 2.0 - c[0] + c[1];
                    }
                }
                _ => {
                    for i in 0..problem.map_pt.count {
                        let c = problem.map_pt.coords[i];
                        state.pt[i] = 2.0 - c[0] + c[1];
                    }
                }
            }
            for i in 0..problem.map_pp.count {
                let c = problem.map_pp.coords[i];
                state.pp[i] = c[0] + c[1];
            }
            let pt_exact: Box<dyn Fn([f64; 2]) -> f64> = if disc == Discretization::P1P0 {
                // compare the P0 field to itself; affine exact data is tested
                // on the continuous spaces
                Box::new(|_| 0.0)
            } else {
                Box::new(|x: [f64; 2]| 2.0 - x[0] + x[1])
            };
            let e = error_norms_against(
                &problem,
                &state,
                &|_| [[1.0, 2.0], [0.0, -1.0]],
                &pt_exact,
                &|x| x[0] + x[1],
                &|_| [1.0, 1.0],
            );
            if disc != Discretization::P1P0 {
                assert!(e.pt_l2 < 1e-12, "{disc}: pt {}", e.pt_l2);
            }
            assert!(e.pp_l2 < 1e-12, "{disc}: pp {}", e.pp_l2);
            assert!(e.u_h1 < 1e-11, "{disc}: u {}", e.u_h1);
            assert!(e.pp_1k < 1e-12, "{disc}: pp seminorm {}", e.pp_1k);
        }
    }

    #[test]
    fn zero_state_recovers_field_norms() {
        // against the zero state the errors are the norms of the exact
        // fields; for p_p = x^2 y^2 these are 1/5 in L2 and sqrt(8/15) in the
        // H1 seminorm (kappa = 1)
        let mp = ManufacturedProblem::new(0.1);
        let problem = BiotProblem::standard(8, Discretization::TaylorHood, mp.params).unwrap();
        let state = BiotState::zero(&problem);
        let e = error_norms(&problem, &mp, &state);
        assert_abs_diff_eq!(e.pp_l2, 0.2, epsilon = 1e-6);
        assert_abs_diff_eq!(e.pp_1k, (8.0f64 / 15.0).sqrt(), epsilon = 1e-6);
        assert!(e.pt_l2 > 1.0 && e.u_h1 > 1.0);
    }
}
