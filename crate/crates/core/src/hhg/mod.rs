//! Hierarchical hybrid grids: structured lattices over every macro triangle.
//!
//! Each macro element carries a full triangular lattice per level, including
//! copies of the nodes it shares with neighbours. The node on a shared
//! primitive (macro vertex or macro edge) is owned by the adjacent macro with
//! the lowest id; all other macros hold copies that [`GridFunction`] keeps in
//! sync.

mod function;
mod lattice;
mod vtk;

pub use function::{GridFunction, SyncMode};
pub use lattice::Lattice;
pub(crate) use lattice::incident;
pub use vtk::write_vtk;

use crate::error::{Error, Result};
use crate::mesh::{Edge, MacroMesh};
use std::collections::BTreeMap;

/// Copy of a macro edge inside one macro's lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct EdgeCopy {
    pub macro_id: usize,
    pub local: usize,
    /// Lattice parameter runs from the higher vertex id to the lower one.
    pub reversed: bool,
}

#[derive(Clone, Debug)]
pub(crate) struct EdgeInfo {
    pub boundary: bool,
    pub copies: Vec<EdgeCopy>,
}

#[derive(Clone, Debug)]
pub(crate) struct MacroInfo {
    pub vertices: [usize; 3],
    pub edges: [usize; 3],
    pub points: [[f64; 2]; 3],
    pub area: f64,
    /// Element stiffness matrix of the macro triangle, shared by every fine
    /// triangle at every level.
    pub stiffness: [[f64; 3]; 3],
    pub owns_corner: [bool; 3],
    pub owns_edge: [bool; 3],
    pub boundary_corner: [bool; 3],
    pub boundary_edge: [bool; 3],
}

impl MacroInfo {
    /// `(owned, boundary)` flags of a lattice node of this macro.
    #[inline]
    pub fn node_flags(&self, n: usize, i: usize, j: usize) -> (bool, bool) {
        if let Some(c) = corner_at(n, i, j) {
            (self.owns_corner[c], self.boundary_corner[c])
        } else if let Some((e, _)) = edge_at(n, i, j) {
            (self.owns_edge[e], self.boundary_edge[e])
        } else {
            (true, false)
        }
    }

    /// Lattice coordinates of Dirichlet nodes.
    pub fn boundary_nodes(&self, lat: Lattice) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for c in 0..3 {
            if self.boundary_corner[c] {
                out.push(lat.corner(c));
            }
        }
        for e in 0..3 {
            if self.boundary_edge[e] {
                for t in 1..lat.n {
                    out.push(lat.edge_node(e, t));
                }
            }
        }
        out
    }
}

/// The primitive that owns a lattice node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Primitive {
    Vertex(usize),
    /// Macro edge id and parameter `1..n` counted from the lower vertex id.
    Edge(usize, usize),
    Face(usize),
}

#[derive(Clone, Debug)]
pub struct GridHierarchy {
    mesh: MacroMesh,
    max_level: usize,
    pub(crate) macros: Vec<MacroInfo>,
    pub(crate) edges: Vec<EdgeInfo>,
    /// For each mesh vertex, the `(macro, corner)` copies in macro order.
    pub(crate) vertex_copies: Vec<Vec<(usize, usize)>>,
}

/// Builds the lattice hierarchy up to `max_level` over a planar mesh.
pub fn build_hierarchy(mesh: &MacroMesh, max_level: usize) -> Result<GridHierarchy> {
    if mesh.dim != 2 {
        return Err(Error::structural("structured lattices are implemented for planar meshes only"));
    }
    if max_level > 20 {
        return Err(Error::Resource {
            level: max_level,
            message: "lattice size overflows".into(),
        });
    }
    let mut edge_ids: BTreeMap<Edge, usize> = BTreeMap::new();
    for el in &mesh.elements {
        for e in el.edges() {
            let next = edge_ids.len();
            edge_ids.entry(e).or_insert(next);
        }
    }
    // renumber edges in sorted order for a deterministic layout
    for (k, v) in edge_ids.values_mut().enumerate() {
        *v = k;
    }
    let boundary = mesh.boundary_edges();
    let mut edges: Vec<EdgeInfo> = edge_ids
        .keys()
        .map(|&e| EdgeInfo {
            boundary: boundary.contains(&e),
            copies: Vec::new(),
        })
        .collect();
    let mut vertex_copies = vec![Vec::new(); mesh.num_vertices()];
    let mut macros = Vec::with_capacity(mesh.num_elements());
    for (m, el) in mesh.elements.iter().enumerate() {
        let v = [el.vertices[0], el.vertices[1], el.vertices[2]];
        let points = v.map(|id| {
            let c = mesh.point(id);
            [c[0], c[1]]
        });
        for (c, &id) in v.iter().enumerate() {
            vertex_copies[id].push((m, c));
        }
        let local_edges = [(v[0], v[1]), (v[1], v[2]), (v[0], v[2])];
        let mut ids = [0; 3];
        for (local, &(a, b)) in local_edges.iter().enumerate() {
            let id = edge_ids[&crate::mesh::edge(a, b)];
            ids[local] = id;
            edges[id].copies.push(EdgeCopy {
                macro_id: m,
                local,
                reversed: a > b,
            });
        }
        let area = mesh.element_volume(m);
        if area <= 0.0 {
            return Err(Error::structural(format!("macro {m} has no area")));
        }
        macros.push(MacroInfo {
            vertices: v,
            edges: ids,
            points,
            area,
            stiffness: p1_stiffness(&points),
            owns_corner: [false; 3],
            owns_edge: [false; 3],
            boundary_corner: v.map(|id| mesh.vertices[id].boundary),
            boundary_edge: [false; 3],
        });
    }
    for copies in &vertex_copies {
        if let Some(&(m, c)) = copies.first() {
            macros[m].owns_corner[c] = true;
        }
    }
    for e in &edges {
        macros[e.copies[0].macro_id].owns_edge[e.copies[0].local] = true;
        for c in &e.copies {
            macros[c.macro_id].boundary_edge[c.local] = e.boundary;
        }
    }
    for (id, e) in edges.iter().enumerate() {
        if e.copies.len() > 2 || (e.copies.len() == 1) != e.boundary {
            return Err(Error::structural(format!("macro edge {id} has inconsistent adjacency")));
        }
    }
    let h = GridHierarchy {
        mesh: mesh.clone(),
        max_level,
        macros,
        edges,
        vertex_copies,
    };
    // probe the finest level once so that exhaustion is reported up front
    let total = h
        .num_macros()
        .checked_mul(Lattice::new(max_level).num_nodes())
        .ok_or(Error::Resource {
            level: max_level,
            message: "node count overflows".into(),
        })?;
    let mut probe: Vec<f64> = Vec::new();
    probe.try_reserve_exact(total).map_err(|e| Error::Resource {
        level: max_level,
        message: e.to_string(),
    })?;
    Ok(h)
}

/// P1 stiffness matrix of a triangle: `area * grad(l_a) . grad(l_b)`.
pub(crate) fn p1_stiffness(p: &[[f64; 2]; 3]) -> [[f64; 3]; 3] {
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]);
    // gradient of barycentric k is the rotated opposite edge over det
    let g: Vec<[f64; 2]> = (0..3)
        .map(|k| {
            let (a, b) = (p[(k + 1) % 3], p[(k + 2) % 3]);
            [(a[1] - b[1]) / det, (b[0] - a[0]) / det]
        })
        .collect();
    let area = 0.5 * det.abs();
    let mut k = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            k[a][b] = area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
        }
    }
    k
}

impl GridHierarchy {
    pub fn mesh(&self) -> &MacroMesh {
        &self.mesh
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    pub fn num_macros(&self) -> usize {
        self.macros.len()
    }

    pub fn lattice(&self, level: usize) -> Lattice {
        Lattice::new(level)
    }

    pub fn dof_map(&self, level: usize) -> DofMap<'_> {
        DofMap { h: self, lat: Lattice::new(level) }
    }

    pub fn macro_area(&self, m: usize) -> f64 {
        self.macros[m].area
    }

    /// Physical position of a lattice node.
    pub fn node_coordinates(&self, macro_id: usize, level: usize, idx: usize) -> Result<[f64; 2]> {
        let lat = Lattice::new(level);
        let info = self
            .macros
            .get(macro_id)
            .ok_or_else(|| Error::structural(format!("macro {macro_id} out of range")))?;
        let (i, j) = lat
            .coords_of(idx)
            .ok_or_else(|| Error::structural(format!("lattice index {idx} out of range on level {level}")))?;
        Ok(lattice_point(&info.points, lat.n, i as f64, j as f64))
    }
}

/// Affine image of lattice coordinates `(i, j)` (possibly fractional).
#[inline(always)]
pub(crate) fn lattice_point(p: &[[f64; 2]; 3], n: usize, i: f64, j: f64) -> [f64; 2] {
    let (s, t) = (i / n as f64, j / n as f64);
    [
        p[0][0] + s * (p[1][0] - p[0][0]) + t * (p[2][0] - p[0][0]),
        p[0][1] + s * (p[1][1] - p[0][1]) + t * (p[2][1] - p[0][1]),
    ]
}

/// Degrees of freedom of one level.
#[derive(Clone, Copy)]
pub struct DofMap<'a> {
    h: &'a GridHierarchy,
    lat: Lattice,
}

impl DofMap<'_> {
    pub fn level(&self) -> usize {
        self.lat.level
    }

    /// Number of distinct nodes, boundary included.
    pub fn num_nodes(&self) -> usize {
        let n = self.lat.n;
        self.h.vertex_copies.len() + self.h.edges.len() * (n - 1) + self.h.macros.len() * face_interior(n)
    }

    /// Number of distinct nodes off the Dirichlet boundary.
    pub fn num_free(&self) -> usize {
        let n = self.lat.n;
        let bv = self.h.mesh.vertices.iter().filter(|v| v.boundary).count();
        let be = self.h.edges.iter().filter(|e| e.boundary).count();
        self.num_nodes() - bv - be * (n - 1)
    }

    pub fn owner(&self, macro_id: usize, i: usize, j: usize) -> Primitive {
        let n = self.lat.n;
        let info = &self.h.macros[macro_id];
        if let Some(c) = corner_at(n, i, j) {
            return Primitive::Vertex(info.vertices[c]);
        }
        if let Some((e, t)) = edge_at(n, i, j) {
            let id = info.edges[e];
            let copy = self.h.edges[id].copies.iter().find(|c| c.macro_id == macro_id).expect("edge copy");
            let s = if copy.reversed { n - t } else { t };
            return Primitive::Edge(id, s);
        }
        Primitive::Face(macro_id)
    }

    pub fn is_boundary(&self, macro_id: usize, i: usize, j: usize) -> bool {
        match self.owner(macro_id, i, j) {
            Primitive::Vertex(v) => self.h.mesh.vertices[v].boundary,
            Primitive::Edge(e, _) => self.h.edges[e].boundary,
            Primitive::Face(_) => false,
        }
    }

    /// Whether this copy is the owning one (lowest adjacent macro id).
    pub fn is_owner(&self, macro_id: usize, i: usize, j: usize) -> bool {
        match self.owner(macro_id, i, j) {
            Primitive::Vertex(v) => self.h.vertex_copies[v][0].0 == macro_id,
            Primitive::Edge(e, _) => self.h.edges[e].copies[0].macro_id == macro_id,
            Primitive::Face(_) => true,
        }
    }

    /// Global node number: vertices, then edge interiors, then faces.
    pub fn global_index(&self, macro_id: usize, i: usize, j: usize) -> usize {
        let n = self.lat.n;
        let nv = self.h.vertex_copies.len();
        match self.owner(macro_id, i, j) {
            Primitive::Vertex(v) => v,
            Primitive::Edge(e, s) => nv + e * (n - 1) + s - 1,
            Primitive::Face(m) => {
                let row_start = |jj: usize| (1..jj).map(|r| n - 1 - r).sum::<usize>();
                nv + self.h.edges.len() * (n - 1) + m * face_interior(n) + row_start(j) + i - 1
            }
        }
    }
}

pub(crate) fn face_interior(n: usize) -> usize {
    if n < 3 {
        0
    } else {
        (n - 1) * (n - 2) / 2
    }
}

pub(crate) fn corner_at(n: usize, i: usize, j: usize) -> Option<usize> {
    match (i, j) {
        (0, 0) => Some(0),
        (a, 0) if a == n => Some(1),
        (0, b) if b == n => Some(2),
        _ => None,
    }
}

/// Local edge and parameter of a non-corner lattice-boundary node.
pub(crate) fn edge_at(n: usize, i: usize, j: usize) -> Option<(usize, usize)> {
    if corner_at(n, i, j).is_some() {
        None
    } else if j == 0 {
        Some((0, i))
    } else if i + j == n {
        Some((1, j))
    } else if i == 0 {
        Some((2, j))
    } else {
        None
    }
}
