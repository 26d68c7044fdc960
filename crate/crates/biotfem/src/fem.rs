//! Reference elements (P0, P1, P2; scalar and 2-vector), triangle and edge
//! quadrature, degree-of-freedom maps, and Dirichlet constraint sets.
//!
//! The reference triangle has vertices (0,0), (1,0), (0,1); points are given
//! in barycentric coordinates `(l0, l1, l2)` with `l0 = 1 - x - y`, `l1 = x`,
//! `l2 = y`. Local edge `k` of a cell is the edge opposite local vertex `k`.

use crate::mesh::{EdgeTopology, Mesh};
use crate::{Error, Result};

/// Continuity of a finite element space across cell boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Continuity {
    Discontinuous,
    Continuous,
}

/// Lagrange element family: polynomial order 0..=2 with 1 or 2 components.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ElementKind {
    pub order: u8,
    pub components: u8,
}

impl ElementKind {
    pub const P0: ElementKind = ElementKind { order: 0, components: 1 };
    pub const P1: ElementKind = ElementKind { order: 1, components: 1 };
    pub const P2: ElementKind = ElementKind { order: 2, components: 1 };
    pub const P1_VEC: ElementKind = ElementKind { order: 1, components: 2 };
    pub const P2_VEC: ElementKind = ElementKind { order: 2, components: 2 };

    /// P0 is discontinuous, P1 and P2 are continuous Lagrange elements.
    pub fn continuity(&self) -> Continuity {
        if self.order == 0 {
            Continuity::Discontinuous
        } else {
            Continuity::Continuous
        }
    }

    /// Scalar basis functions per cell.
    pub fn local_dofs(&self) -> usize {
        match self.order {
            0 => 1,
            1 => 3,
            _ => 6,
        }
    }

    pub fn scalar(&self) -> ElementKind {
        ElementKind { order: self.order, components: 1 }
    }
}

/// Values and reference-coordinate gradients of the scalar basis functions
/// at one point.
#[derive(Debug, Clone)]
pub struct BasisEval {
    pub values: Vec<f64>,
    pub gradients: Vec<[f64; 2]>,
}

const GRAD_L: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

/// Evaluates the scalar reference basis of `kind` at a barycentric point.
/// Rejects points outside the closed reference triangle beyond 1e-12.
pub fn reference_basis(kind: ElementKind, bary: [f64; 3]) -> Result<BasisEval> {
    let sum: f64 = bary.iter().sum();
    if bary.iter().any(|&l| l < -1e-12) || (sum - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "barycentric point {bary:?} is outside the reference triangle"
        )));
    }
    let l = bary;
    match kind.order {
        0 => Ok(BasisEval { values: vec![1.0], gradients: vec![[0.0, 0.0]] }),
        1 => Ok(BasisEval {
            values: l.to_vec(),
            gradients: GRAD_L.to_vec(),
        }),
        2 => {
            let mut values = Vec::with_capacity(6);
            let mut gradients = Vec::with_capacity(6);
            for i in 0..3 {
                values.push(l[i] * (2.0 * l[i] - 1.0));
                let c = 4.0 * l[i] - 1.0;
                gradients.push([c * GRAD_L[i][0], c * GRAD_L[i][1]]);
            }
            for k in 0..3 {
                let i = (k + 1) % 3;
                let j = (k + 2) % 3;
                values.push(4.0 * l[i] * l[j]);
                gradients.push([
                    4.0 * (l[i] * GRAD_L[j][0] + l[j] * GRAD_L[i][0]),
                    4.0 * (l[i] * GRAD_L[j][1] + l[j] * GRAD_L[i][1]),
                ]);
            }
            Ok(BasisEval { values, gradients })
        }
        o => Err(Error::InvalidArgument(format!("unsupported polynomial order {o}"))),
    }
}

/// Symmetric quadrature rule on the reference triangle. Weights sum to the
/// reference area 1/2.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Returns a rule exact for polynomials up to `degree` (supported: 1..=6).
pub fn quadrature_rule(degree: usize) -> Result<QuadratureRule> {
    let (points, weights): (Vec<[f64; 3]>, Vec<f64>) = match degree {
        0 | 1 => (vec![[1.0 / 3.0; 3]], vec![0.5]),
        2 => (
            perm3(2.0 / 3.0, 1.0 / 6.0),
            vec![1.0 / 6.0; 3],
        ),
        3 => {
            let mut p = vec![[1.0 / 3.0; 3]];
            p.extend(perm3(0.6, 0.2));
            (p, vec![-27.0 / 96.0, 25.0 / 96.0, 25.0 / 96.0, 25.0 / 96.0])
        }
        4 => {
            let mut p = perm3(0.108_103_018_168_070, 0.445_948_490_915_965);
            p.extend(perm3(0.816_847_572_980_459, 0.091_576_213_509_771));
            let mut w = vec![0.223_381_589_678_011 / 2.0; 3];
            w.extend(vec![0.109_951_743_655_322 / 2.0; 3]);
            (p, w)
        }
        5 => {
            let mut p = vec![[1.0 / 3.0; 3]];
            p.extend(perm3(0.059_715_871_789_770, 0.470_142_064_105_115));
            p.extend(perm3(0.797_426_985_353_087, 0.101_286_507_323_456));
            let mut w = vec![0.225 / 2.0];
            w.extend(vec![0.132_394_152_788_506 / 2.0; 3]);
            w.extend(vec![0.125_939_180_544_827 / 2.0; 3]);
            (p, w)
        }
        6 => {
            let mut p = perm3(0.873_821_971_016_996, 0.063_089_014_491_502);
            p.extend(perm3(0.501_426_509_658_179, 0.249_286_745_170_910));
            p.extend(perm3_full(0.636_502_499_121_399, 0.310_352_451_033_785, 0.053_145_049_844_816));
            let mut w = vec![0.050_844_906_370_207 / 2.0; 3];
            w.extend(vec![0.116_786_275_726_379 / 2.0; 3]);
            w.extend(vec![0.082_851_075_618_374 / 2.0; 6]);
            (p, w)
        }
        d => {
            return Err(Error::InvalidArgument(format!(
                "unsupported quadrature degree {d} (supported: 1..=6)"
            )))
        }
    };
    Ok(QuadratureRule { points, weights, degree: degree.max(1) })
}

fn perm3(a: f64, b: f64) -> Vec<[f64; 3]> {
    vec![[a, b, b], [b, a, b], [b, b, a]]
}

fn perm3_full(a: f64, b: f64, c: f64) -> Vec<[f64; 3]> {
    vec![[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]]
}

/// 3-point Gauss rule on [0,1], exact to degree 5. Used for edge integrals.
pub fn edge_gauss() -> (Vec<f64>, Vec<f64>) {
    let s = (0.6f64).sqrt();
    (
        vec![0.5 * (1.0 - s), 0.5, 0.5 * (1.0 + s)],
        vec![5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0],
    )
}

/// Global degree-of-freedom map for one field.
///
/// Scalar dof layout: P1 dofs are vertex indices, P2 dofs are vertices
/// followed by edges, P0 dofs are cell indices. Vector dofs are blocked by
/// component: global dof = `component * scalar_count + scalar_dof`.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub kind: ElementKind,
    /// Dofs per component.
    pub scalar_count: usize,
    /// Total dofs over all components.
    pub count: usize,
    /// Flat per-cell scalar dof table, `local_dofs()` entries per cell.
    pub cell_dofs: Vec<usize>,
    /// Nodal coordinates per scalar dof (cell centroids for P0).
    pub coords: Vec<[f64; 2]>,
    /// Vertex count of the underlying mesh, for locating edge dofs.
    pub n_vertices: usize,
}

impl DofMap {
    pub fn local_dofs(&self) -> usize {
        self.kind.local_dofs()
    }

    /// Scalar dofs of cell `t`.
    pub fn cell(&self, t: usize) -> &[usize] {
        let nl = self.local_dofs();
        &self.cell_dofs[t * nl..(t + 1) * nl]
    }

    /// Global dof index for a scalar dof and component.
    pub fn global(&self, scalar_dof: usize, component: usize) -> usize {
        component * self.scalar_count + scalar_dof
    }
}

/// Builds the dof map for `kind` on the given mesh.
pub fn build_dofmap(mesh: &Mesh, edges: &EdgeTopology, kind: ElementKind) -> DofMap {
    let nv = mesh.vertices.len();
    let (scalar_count, cell_dofs, coords) = match kind.order {
        0 => {
            let coords: Vec<[f64; 2]> = (0..mesh.triangles.len())
                .map(|t| {
                    let [a, b, c] = mesh.triangles[t];
                    let (pa, pb, pc) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
                    [(pa[0] + pb[0] + pc[0]) / 3.0, (pa[1] + pb[1] + pc[1]) / 3.0]
                })
                .collect();
            let cell_dofs: Vec<usize> = (0..mesh.triangles.len()).collect();
            (mesh.triangles.len(), cell_dofs, coords)
        }
        1 => {
            let mut cell_dofs = Vec::with_capacity(3 * mesh.triangles.len());
            for tri in &mesh.triangles {
                cell_dofs.extend_from_slice(tri);
            }
            (nv, cell_dofs, mesh.vertices.clone())
        }
        _ => {
            let ne = edges.edges.len();
            let mut coords = mesh.vertices.clone();
            for key in &edges.edges {
                let (pa, pb) = (mesh.vertices[key[0]], mesh.vertices[key[1]]);
                coords.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
            }
            let mut cell_dofs = Vec::with_capacity(6 * mesh.triangles.len());
            for (t, tri) in mesh.triangles.iter().enumerate() {
                cell_dofs.extend_from_slice(tri);
                for k in 0..3 {
                    cell_dofs.push(nv + edges.cell_edges[t][k]);
                }
            }
            (nv + ne, cell_dofs, coords)
        }
    };
    DofMap {
        kind,
        scalar_count,
        count: scalar_count * kind.components as usize,
        cell_dofs,
        coords,
        n_vertices: nv,
    }
}

/// Constrained global dofs with prescribed values.
#[derive(Debug, Clone, Default)]
pub struct DirichletSet {
    /// Sorted, unique global dof indices.
    pub indices: Vec<usize>,
    /// Prescribed value per constrained dof.
    pub values: Vec<f64>,
}

impl DirichletSet {
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }
}

/// Constrains every dof whose node lies on one of `tagged_edges` to the
/// nodal interpolant of `value_fn(x, t, component)` at time `t`.
pub fn dirichlet_set(
    dofmap: &DofMap,
    edges: &EdgeTopology,
    tagged_edges: &[usize],
    value_fn: &dyn Fn([f64; 2], f64, usize) -> f64,
    t: f64,
) -> DirichletSet {
    let mut scalar_dofs: Vec<usize> = Vec::new();
    for &e in tagged_edges {
        let key = edges.edges[e];
        match dofmap.kind.order {
            0 => {} // P0 dofs are interior to cells; never constrained
            1 => scalar_dofs.extend_from_slice(&key),
            _ => {
                scalar_dofs.extend_from_slice(&key);
                scalar_dofs.push(dofmap.n_vertices + e);
            }
        }
    }
    scalar_dofs.sort_unstable();
    scalar_dofs.dedup();
    let mut indices = Vec::new();
    let mut values = Vec::new();
    for comp in 0..dofmap.kind.components as usize {
        for &sd in &scalar_dofs {
            indices.push(dofmap.global(sd, comp));
            values.push(value_fn(dofmap.coords[sd], t, comp));
        }
    }
    DirichletSet { indices, values }
}

/// Refreshes the prescribed values of an existing set at a new time, keeping
/// the constrained index set fixed.
pub fn refresh_dirichlet_values(
    set: &mut DirichletSet,
    dofmap: &DofMap,
    value_fn: &dyn Fn([f64; 2], f64, usize) -> f64,
    t: f64,
) {
    for (k, &g) in set.indices.iter().enumerate() {
        let comp = g / dofmap.scalar_count;
        let sd = g % dofmap.scalar_count;
        set.values[k] = value_fn(dofmap.coords[sd], t, comp);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_edges, tag_boundary, unit_square_mesh, FlowTag, PartitionSpec, SideSet};
    use approx::assert_abs_diff_eq;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    /// Exact integral of x^a y^b over the reference triangle.
    fn monomial_integral(a: usize, b: usize) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    #[test]
    fn p1_is_nodal() {
        let verts = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        for (i, &v) in verts.iter().enumerate() {
            let eval = reference_basis(ElementKind::P1, v).unwrap();
            for j in 0..3 {
                assert_abs_diff_eq!(eval.values[j], if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn p2_at_barycenter() {
        let eval = reference_basis(ElementKind::P2, [1.0 / 3.0; 3]).unwrap();
        for j in 0..3 {
            assert_abs_diff_eq!(eval.values[j], -1.0 / 9.0, epsilon = 1e-15);
            assert_abs_diff_eq!(eval.values[3 + j], 4.0 / 9.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn p2_is_nodal() {
        // node k of edge e (opposite vertex e) is the midpoint of the other two vertices
        let nodes = [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.5, 0.5],
            [0.5, 0.0, 0.5],
            [0.5, 0.5, 0.0],
        ];
        for (i, &p) in nodes.iter().enumerate() {
            let eval = reference_basis(ElementKind::P2, p).unwrap();
            for j in 0..6 {
                assert_abs_diff_eq!(eval.values[j], if i == j { 1.0 } else { 0.0 }, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn p0_constant() {
        let eval = reference_basis(ElementKind::P0, [0.2, 0.5, 0.3]).unwrap();
        assert_eq!(eval.values, vec![1.0]);
        assert_eq!(eval.gradients, vec![[0.0, 0.0]]);
    }

    #[test]
    fn rejects_outside_points() {
        assert!(reference_basis(ElementKind::P1, [-1e-6, 0.5, 0.5 + 1e-6]).is_err());
        assert!(reference_basis(ElementKind::P1, [0.5, 0.5, 0.5]).is_err());
    }

    #[test]
    fn partition_of_unity_and_gradient_sum() {
        // deterministic pseudo-random interior points
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let (mut x, mut y) = (next(), next());
            if x + y > 1.0 {
                (x, y) = (1.0 - x, 1.0 - y);
            }
            let bary = [1.0 - x - y, x, y];
            for kind in [ElementKind::P1, ElementKind::P2] {
                let eval = reference_basis(kind, bary).unwrap();
                let sum: f64 = eval.values.iter().sum();
                assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-13);
                let gx: f64 = eval.gradients.iter().map(|g| g[0]).sum();
                let gy: f64 = eval.gradients.iter().map(|g| g[1]).sum();
                assert_abs_diff_eq!(gx, 0.0, epsilon = 1e-13);
                assert_abs_diff_eq!(gy, 0.0, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn quadrature_exact_for_monomials() {
        for degree in 1..=6 {
            let rule = quadrature_rule(degree).unwrap();
            for a in 0..=degree {
                for b in 0..=(degree - a) {
                    let mut sum = 0.0;
                    for (p, w) in rule.points.iter().zip(&rule.weights) {
                        let (x, y) = (p[1], p[2]);
                        sum += w * x.powi(a as i32) * y.powi(b as i32);
                    }
                    assert_abs_diff_eq!(sum, monomial_integral(a, b), epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn quadrature_spot_checks() {
        // constant: reference area
        let r1 = quadrature_rule(1).unwrap();
        assert_abs_diff_eq!(r1.weights.iter().sum::<f64>(), 0.5, epsilon = 1e-15);
        // degree 2 applied to x^2 -> 1/12
        let r2 = quadrature_rule(2).unwrap();
        let s2: f64 = r2.points.iter().zip(&r2.weights).map(|(p, w)| w * p[1] * p[1]).sum();
        assert_abs_diff_eq!(s2, 1.0 / 12.0, epsilon = 1e-15);
        // degree 5 applied to x^2 y^2 -> 1/180
        let r5 = quadrature_rule(5).unwrap();
        let s5: f64 = r5
            .points
            .iter()
            .zip(&r5.weights)
            .map(|(p, w)| w * p[1] * p[1] * p[2] * p[2])
            .sum();
        assert_abs_diff_eq!(s5, 1.0 / 180.0, epsilon = 1e-15);
        assert!(quadrature_rule(7).is_err());
    }

    #[test]
    fn edge_gauss_degree_five() {
        let (pts, wts) = edge_gauss();
        for d in 0..=5 {
            let s: f64 = pts.iter().zip(&wts).map(|(p, w)| w * p.powi(d)).sum();
            assert_abs_diff_eq!(s, 1.0 / (d + 1) as f64, epsilon = 1e-15);
        }
    }

    #[test]
    fn dof_counts_n2() {
        let m = unit_square_mesh(2).unwrap();
        let e = build_edges(&m);
        assert_eq!(build_dofmap(&m, &e, ElementKind::P2).count, 25);
        assert_eq!(build_dofmap(&m, &e, ElementKind::P1).count, 9);
        assert_eq!(build_dofmap(&m, &e, ElementKind::P0).count, 8);
        assert_eq!(build_dofmap(&m, &e, ElementKind::P2_VEC).count, 50);
    }

    #[test]
    fn cell_dofs_injective_and_cover() {
        let m = unit_square_mesh(3).unwrap();
        let e = build_edges(&m);
        for kind in [ElementKind::P0, ElementKind::P1, ElementKind::P2] {
            let map = build_dofmap(&m, &e, kind);
            let mut seen = vec![false; map.count];
            for t in 0..m.triangles.len() {
                let cell = map.cell(t);
                let mut local: Vec<usize> = cell.to_vec();
                local.sort_unstable();
                local.dedup();
                assert_eq!(local.len(), map.local_dofs(), "cell-local dofs not injective");
                for &d in cell {
                    assert!(d < map.count);
                    seen[d] = true;
                }
            }
            assert!(seen.iter().all(|&b| b), "dofs not a bijection onto 0..count");
        }
    }

    #[test]
    fn dirichlet_counts_and_values() {
        let m = unit_square_mesh(2).unwrap();
        let e = build_edges(&m);
        let mech = PartitionSpec::with_complement(SideSet::parse("left|right").unwrap());
        let flow = PartitionSpec::with_complement(SideSet::all());
        let tags = tag_boundary(&m, &e, &mech, &flow).unwrap();
        let pressure_edges: Vec<usize> = (0..e.edges.len())
            .filter(|&i| tags.flow(i) == Some(FlowTag::Pressure))
            .collect();
        let map = build_dofmap(&m, &e, ElementKind::P1);

        let zero = dirichlet_set(&map, &e, &pressure_edges, &|_, _, _| 0.0, 0.0);
        assert_eq!(zero.len(), 8);
        assert!(zero.values.iter().all(|&v| v == 0.0));

        let manufactured = |x: [f64; 2], t: f64, _c: usize| x[0] * x[0] * x[1] * x[1] * t.cos();
        let set = dirichlet_set(&map, &e, &pressure_edges, &manufactured, 0.0);
        let corner = map.coords.iter().position(|&p| p == [1.0, 1.0]).unwrap();
        let k = set.indices.iter().position(|&i| i == corner).unwrap();
        assert_abs_diff_eq!(set.values[k], 1.0);

        let empty = dirichlet_set(&map, &e, &[], &manufactured, 0.0);
        assert!(empty.is_empty());
    }

    #[test]
    fn p0_never_constrained() {
        let m = unit_square_mesh(2).unwrap();
        let e = build_edges(&m);
        let map = build_dofmap(&m, &e, ElementKind::P0);
        let all_edges: Vec<usize> = (0..e.edges.len()).collect();
        let set = dirichlet_set(&map, &e, &all_edges, &|_, _, _| 1.0, 0.0);
        assert!(set.is_empty());
    }
}
