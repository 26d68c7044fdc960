//! Structured triangulations of the unit square with edge topology and
//! boundary-partition tagging.
//!
//! Meshes are immutable after construction. Vertices are numbered row-major,
//! each grid square is split along its lower-left to upper-right diagonal,
//! and edge keys are sorted vertex pairs, so all derived data is
//! deterministic.

use crate::{Error, Result};
use std::collections::BTreeMap;
use std::io::Write;

/// Triangulation of the unit square into `2 n^2` triangles.
#[derive(Debug, Clone)]
pub struct Mesh {
    /// Vertex coordinates in `[0,1]^2`, row-major: vertex `j (n+1) + i` is
    /// `(i/n, j/n)`.
    pub vertices: Vec<[f64; 2]>,
    /// Counterclockwise vertex index triples.
    pub triangles: Vec<[usize; 3]>,
    /// Subdivision count per side; the mesh size is `h = 1/n`.
    pub n: usize,
}

/// Uniform `n x n` triangulation of the unit square. Each square is split
/// along the diagonal from its lower-left to its upper-right corner.
pub fn unit_square_mesh(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidArgument("mesh subdivision count must be >= 1".into()));
    }
    let nv = (n + 1) * (n + 1);
    let mut vertices = Vec::with_capacity(nv);
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    for j in 0..n {
        for i in 0..n {
            let a = idx(i, j);
            let b = idx(i + 1, j);
            let c = idx(i + 1, j + 1);
            let d = idx(i, j + 1);
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    Ok(Mesh { vertices, triangles, n })
}

impl Mesh {
    /// Twice the signed area of triangle `t` (positive for counterclockwise).
    pub fn double_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let pa = self.vertices[a];
        let pb = self.vertices[b];
        let pc = self.vertices[c];
        (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0])
    }

    /// Longest edge of triangle `t`, used as the cell diameter `h_T`.
    pub fn cell_diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let d = |p: [f64; 2], q: [f64; 2]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        let pa = self.vertices[a];
        let pb = self.vertices[b];
        let pc = self.vertices[c];
        d(pa, pb).max(d(pb, pc)).max(d(pc, pa))
    }

    /// Plain-text dump for debugging: one vertex per line, then one triangle
    /// per line.
    pub fn dump_text<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "vertices {}", self.vertices.len())?;
        for v in &self.vertices {
            writeln!(w, "{} {}", v[0], v[1])?;
        }
        writeln!(w, "triangles {}", self.triangles.len())?;
        for t in &self.triangles {
            writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

/// Cells incident to an edge: one for boundary edges, two for interior ones.
/// Each entry is `(cell index, local edge index)` where local edge `k` of a
/// triangle is the edge opposite its vertex `k`.
#[derive(Debug, Clone, Copy)]
pub struct EdgeIncidence {
    pub first: (usize, usize),
    pub second: Option<(usize, usize)>,
}

/// Unique undirected edges of a mesh with incidence and length data.
#[derive(Debug, Clone)]
pub struct EdgeTopology {
    /// Sorted vertex index pairs, in lexicographic order.
    pub edges: Vec<[usize; 2]>,
    pub incidence: Vec<EdgeIncidence>,
    /// Euclidean edge lengths `h_e`.
    pub lengths: Vec<f64>,
    pub interior: Vec<bool>,
    /// Per-cell global edge indices; entry `k` is the edge opposite local
    /// vertex `k`.
    pub cell_edges: Vec<[usize; 3]>,
}

impl EdgeTopology {
    pub fn num_interior(&self) -> usize {
        self.interior.iter().filter(|&&b| b).count()
    }
}

/// Extracts the unique edges of the mesh with interior/boundary
/// classification and edge lengths.
pub fn build_edges(mesh: &Mesh) -> EdgeTopology {
    let mut map: BTreeMap<[usize; 2], Vec<(usize, usize)>> = BTreeMap::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        // local edge k joins the two vertices other than local vertex k
        for k in 0..3 {
            let a = tri[(k + 1) % 3];
            let b = tri[(k + 2) % 3];
            let key = if a < b { [a, b] } else { [b, a] };
            map.entry(key).or_default().push((t, k));
        }
    }
    let mut edges = Vec::with_capacity(map.len());
    let mut incidence = Vec::with_capacity(map.len());
    let mut lengths = Vec::with_capacity(map.len());
    let mut interior = Vec::with_capacity(map.len());
    let mut cell_edges = vec![[usize::MAX; 3]; mesh.triangles.len()];
    for (key, cells) in map {
        let e = edges.len();
        debug_assert!(cells.len() <= 2);
        for &(t, k) in &cells {
            cell_edges[t][k] = e;
        }
        incidence.push(EdgeIncidence {
            first: cells[0],
            second: cells.get(1).copied(),
        });
        let pa = mesh.vertices[key[0]];
        let pb = mesh.vertices[key[1]];
        lengths.push(((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt());
        interior.push(cells.len() == 2);
        edges.push(key);
    }
    EdgeTopology { edges, incidence, lengths, interior, cell_edges }
}

/// A set of sides of the unit square, used as the geometric predicate naming
/// one part of a boundary partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SideSet {
    pub left: bool,
    pub right: bool,
    pub bottom: bool,
    pub top: bool,
}

impl SideSet {
    pub fn all() -> Self {
        SideSet { left: true, right: true, bottom: true, top: true }
    }

    pub fn none() -> Self {
        SideSet::default()
    }

    /// Parses `"left|right"`, `"all"`, `"none"`, etc.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("all") {
            return Ok(SideSet::all());
        }
        if s.eq_ignore_ascii_case("none") || s.is_empty() {
            return Ok(SideSet::none());
        }
        let mut set = SideSet::none();
        for part in s.split('|') {
            match part.trim().to_ascii_lowercase().as_str() {
                "left" => set.left = true,
                "right" => set.right = true,
                "bottom" => set.bottom = true,
                "top" => set.top = true,
                other => {
                    return Err(Error::Config(format!(
                        "unknown boundary side '{other}' (expected left, right, bottom, top, all, none)"
                    )))
                }
            }
        }
        Ok(set)
    }

    fn contains_edge(&self, mesh: &Mesh, edge: [usize; 2]) -> bool {
        let a = mesh.vertices[edge[0]];
        let b = mesh.vertices[edge[1]];
        (self.left && a[0] == 0.0 && b[0] == 0.0)
            || (self.right && a[0] == 1.0 && b[0] == 1.0)
            || (self.bottom && a[1] == 0.0 && b[1] == 0.0)
            || (self.top && a[1] == 1.0 && b[1] == 1.0)
    }
}

impl std::fmt::Display for SideSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if *self == SideSet::all() {
            return write!(f, "all");
        }
        let names = [(self.left, "left"), (self.right, "right"), (self.bottom, "bottom"), (self.top, "top")];
        let parts: Vec<&str> = names.iter().filter(|(b, _)| *b).map(|(_, n)| *n).collect();
        if parts.is_empty() {
            write!(f, "none")
        } else {
            write!(f, "{}", parts.join("|"))
        }
    }
}

/// Names the two parts of one boundary partition. When `secondary` is
/// omitted it defaults to the complement of `primary` on the boundary.
#[derive(Debug, Clone, Copy)]
pub struct PartitionSpec {
    pub primary: SideSet,
    pub secondary: Option<SideSet>,
}

impl PartitionSpec {
    pub fn with_complement(primary: SideSet) -> Self {
        PartitionSpec { primary, secondary: None }
    }
}

/// Tag of a boundary edge in the mechanics partition of the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MechTag {
    /// Displacement Dirichlet part.
    Dirichlet,
    /// Traction part.
    Traction,
}

/// Tag of a boundary edge in the flow partition of the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowTag {
    /// Pore-pressure Dirichlet part.
    Pressure,
    /// No-flux / given-flux part.
    Flux,
}

/// Per-boundary-edge tags for the two boundary partitions.
#[derive(Debug, Clone)]
pub struct BoundaryTags {
    /// Indexed by edge id; `None` for interior edges.
    pub tags: Vec<Option<(MechTag, FlowTag)>>,
}

impl BoundaryTags {
    pub fn mech(&self, edge: usize) -> Option<MechTag> {
        self.tags[edge].map(|(m, _)| m)
    }

    pub fn flow(&self, edge: usize) -> Option<FlowTag> {
        self.tags[edge].map(|(_, f)| f)
    }

    pub fn count_mech(&self, tag: MechTag) -> usize {
        self.tags.iter().flatten().filter(|(m, _)| *m == tag).count()
    }

    pub fn count_flow(&self, tag: FlowTag) -> usize {
        self.tags.iter().flatten().filter(|(_, f)| *f == tag).count()
    }
}

/// Assigns every boundary edge one tag per partition. `mech` names the
/// displacement-Dirichlet part, `flow` the pressure-Dirichlet part.
pub fn tag_boundary(
    mesh: &Mesh,
    edges: &EdgeTopology,
    mech: &PartitionSpec,
    flow: &PartitionSpec,
) -> Result<BoundaryTags> {
    let mut tags = vec![None; edges.edges.len()];
    for (e, &key) in edges.edges.iter().enumerate() {
        if edges.interior[e] {
            continue;
        }
        let m = classify(mesh, key, mech, "displacement", e)?;
        let f = classify(mesh, key, flow, "pressure", e)?;
        tags[e] = Some((
            if m { MechTag::Dirichlet } else { MechTag::Traction },
            if f { FlowTag::Pressure } else { FlowTag::Flux },
        ));
    }
    Ok(BoundaryTags { tags })
}

fn classify(mesh: &Mesh, key: [usize; 2], spec: &PartitionSpec, what: &str, e: usize) -> Result<bool> {
    let in_primary = spec.primary.contains_edge(mesh, key);
    match spec.secondary {
        None => Ok(in_primary),
        Some(sec) => {
            let in_secondary = sec.contains_edge(mesh, key);
            match (in_primary, in_secondary) {
                (true, false) => Ok(true),
                (false, true) => Ok(false),
                (false, false) => Err(Error::InvalidArgument(format!(
                    "boundary edge {e} is untagged by the {what} partition spec"
                ))),
                (true, true) => Err(Error::InvalidArgument(format!(
                    "boundary edge {e} is tagged by both parts of the {what} partition spec"
                ))),
            }
        }
    }
}
