//! Unstructured macro meshes and conforming red-green refinement.
//!
//! A [`MacroMesh`] is a simplicial triangulation in two or three dimensions.
//! Refinement never searches geometrically: every vertex created by a split
//! is recorded in an edge-to-midpoint registry, and hanging nodes are found
//! by walking that registry.

mod builders;
mod io;
mod quality;
mod red_green;

pub use builders::{box_mesh, lshape_mesh, unit_square_mesh};
pub use io::{format_mesh, parse_marks, parse_mesh, read_marks, read_mesh, write_marks, write_mesh};
pub use quality::{distance_to, element_diameter, mesh_quality, ElementQuality};
pub use red_green::{
    conformity_check, mark_top_fraction, red_refine_without_closure, refine_rg, refine_rg_2d,
    refine_rg_3d, revert_green, revert_green_mapped, HangingNode,
};

use crate::error::{Error, Result};
use std::collections::{BTreeMap, BTreeSet};

pub type VertexId = usize;
pub type ElementId = usize;
/// Sorted vertex pair.
pub type Edge = (VertexId, VertexId);

pub(crate) fn edge(a: VertexId, b: VertexId) -> Edge {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MacroVertex {
    /// Coordinates; the third component is zero for planar meshes.
    pub coords: [f64; 3],
    pub boundary: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GreenType {
    /// Planar closure: one bisected edge.
    Bisection,
    /// One bisected edge of a tetrahedron, two children.
    G1,
    /// Two opposite bisected edges, four children.
    G2,
    /// Three bisected edges of one face, four children.
    G3,
}

impl GreenType {
    pub fn children(self) -> usize {
        match self {
            GreenType::Bisection | GreenType::G1 => 2,
            GreenType::G2 | GreenType::G3 => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ElementState {
    Unrefined,
    RedChild,
    GreenChild(GreenType),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MacroElement {
    pub vertices: Vec<VertexId>,
    pub state: ElementState,
    /// For green children: index into [`MacroMesh::green_parents`].
    pub parent: Option<usize>,
}

impl MacroElement {
    pub fn new(vertices: Vec<VertexId>) -> Self {
        Self {
            vertices,
            state: ElementState::Unrefined,
            parent: None,
        }
    }

    pub fn is_green(&self) -> bool {
        matches!(self.state, ElementState::GreenChild(_))
    }

    pub fn edges(&self) -> Vec<Edge> {
        let v = &self.vertices;
        let mut out = Vec::with_capacity(6);
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                out.push(edge(v[i], v[j]));
            }
        }
        out
    }

    /// Facets as sorted vertex lists (edges in 2-d, triangles in 3-d).
    pub fn facets(&self) -> Vec<Vec<VertexId>> {
        let n = self.vertices.len();
        (0..n)
            .map(|skip| {
                let mut f: Vec<_> = (0..n)
                    .filter(|&i| i != skip)
                    .map(|i| self.vertices[i])
                    .collect();
                f.sort_unstable();
                f
            })
            .collect()
    }
}

/// Archived parent of a green group, restored by green reversion.
#[derive(Clone, Debug, PartialEq)]
pub struct GreenParent {
    pub element: MacroElement,
    pub boundary_facets: Vec<Vec<VertexId>>,
}

/// Set of element ids selected for red refinement.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MarkSet(pub BTreeSet<ElementId>);

impl MarkSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: ElementId) -> bool {
        self.0.contains(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = ElementId> + '_ {
        self.0.iter().copied()
    }
}

impl FromIterator<ElementId> for MarkSet {
    fn from_iter<I: IntoIterator<Item = ElementId>>(iter: I) -> Self {
        MarkSet(iter.into_iter().collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MacroMesh {
    pub dim: usize,
    pub vertices: Vec<MacroVertex>,
    pub elements: Vec<MacroElement>,
    /// Number of adaptive refinement steps applied so far.
    pub generation: usize,
    pub(crate) midpoints: BTreeMap<Edge, VertexId>,
    pub(crate) boundary_facets: BTreeSet<Vec<VertexId>>,
    pub(crate) green_parents: Vec<GreenParent>,
}

impl MacroMesh {
    /// Builds a mesh from raw vertices and elements. Boundary facets are the
    /// facets referenced by exactly one element, so the input must be
    /// conforming. Signed volumes are normalized to be positive.
    pub fn new(dim: usize, vertices: Vec<MacroVertex>, elements: Vec<Vec<VertexId>>) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::structural(format!("unsupported dimension {dim}")));
        }
        for (i, v) in vertices.iter().enumerate() {
            if v.coords.iter().any(|c| !c.is_finite()) {
                return Err(Error::structural(format!("vertex {i} has non-finite coordinates")));
            }
        }
        let mut mesh = MacroMesh {
            dim,
            vertices,
            elements: Vec::with_capacity(elements.len()),
            generation: 0,
            midpoints: BTreeMap::new(),
            boundary_facets: BTreeSet::new(),
            green_parents: Vec::new(),
        };
        for (id, verts) in elements.into_iter().enumerate() {
            if verts.len() != dim + 1 {
                return Err(Error::structural(format!(
                    "element {id} has {} vertices, expected {}",
                    verts.len(),
                    dim + 1
                )));
            }
            if let Some(&bad) = verts.iter().find(|&&v| v >= mesh.vertices.len()) {
                return Err(Error::structural(format!("element {id} references missing vertex {bad}")));
            }
            let mut sorted = verts.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != verts.len() {
                return Err(Error::structural(format!("element {id} repeats a vertex")));
            }
            let mut el = MacroElement::new(verts);
            mesh.orient(&mut el);
            if mesh.signed_volume(&el.vertices) == 0.0 {
                return Err(Error::structural(format!("element {id} is degenerate")));
            }
            mesh.elements.push(el);
        }
        let mut count: BTreeMap<Vec<VertexId>, usize> = BTreeMap::new();
        for el in &mesh.elements {
            for f in el.facets() {
                *count.entry(f).or_default() += 1;
            }
        }
        for (f, c) in count {
            match c {
                1 => {
                    mesh.boundary_facets.insert(f);
                }
                2 => {}
                _ => {
                    return Err(Error::structural(format!("facet {f:?} shared by {c} elements")));
                }
            }
        }
        Ok(mesh)
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn point(&self, v: VertexId) -> [f64; 3] {
        self.vertices[v].coords
    }

    /// Signed area (2-d) or signed volume (3-d) of a simplex.
    pub fn signed_volume(&self, verts: &[VertexId]) -> f64 {
        let p: Vec<[f64; 3]> = verts.iter().map(|&v| self.point(v)).collect();
        signed_volume(self.dim, &p)
    }

    pub fn element_volume(&self, id: ElementId) -> f64 {
        self.signed_volume(&self.elements[id].vertices).abs()
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.elements.len()).map(|i| self.element_volume(i)).sum()
    }

    pub fn barycenter(&self, id: ElementId) -> [f64; 3] {
        let verts = &self.elements[id].vertices;
        let mut c = [0.0; 3];
        for &v in verts {
            let p = self.point(v);
            for k in 0..3 {
                c[k] += p[k];
            }
        }
        c.map(|x| x / verts.len() as f64)
    }

    pub fn num_green(&self) -> usize {
        self.elements.iter().filter(|e| e.is_green()).count()
    }

    /// Current boundary facets as sorted vertex lists.
    pub fn boundary_facets(&self) -> impl Iterator<Item = &Vec<VertexId>> {
        self.boundary_facets.iter()
    }

    /// Edges lying on the domain boundary.
    pub fn boundary_edges(&self) -> BTreeSet<Edge> {
        let mut out = BTreeSet::new();
        for f in &self.boundary_facets {
            for i in 0..f.len() {
                for j in i + 1..f.len() {
                    out.insert(edge(f[i], f[j]));
                }
            }
        }
        out
    }

    pub fn midpoint_of(&self, a: VertexId, b: VertexId) -> Option<VertexId> {
        self.midpoints.get(&edge(a, b)).copied()
    }

    pub(crate) fn orient(&self, el: &mut MacroElement) {
        if self.signed_volume(&el.vertices) < 0.0 {
            let n = el.vertices.len();
            el.vertices.swap(n - 2, n - 1);
        }
    }
}

pub(crate) fn signed_volume(dim: usize, p: &[[f64; 3]]) -> f64 {
    let d = |i: usize, k: usize| p[i][k] - p[0][k];
    if dim == 2 {
        0.5 * (d(1, 0) * d(2, 1) - d(1, 1) * d(2, 0))
    } else {
        let (a, b, c) = (
            [d(1, 0), d(1, 1), d(1, 2)],
            [d(2, 0), d(2, 1), d(2, 2)],
            [d(3, 0), d(3, 1), d(3, 2)],
        );
        (a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
            + a[2] * (b[0] * c[1] - b[1] * c[0]))
            / 6.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_and_overshared() {
        let v = |x: f64, y: f64| MacroVertex {
            coords: [x, y, 0.0],
            boundary: true,
        };
        let verts = vec![v(0.0, 0.0), v(1.0, 0.0), v(2.0, 0.0)];
        assert!(MacroMesh::new(2, verts, vec![vec![0, 1, 2]]).is_err());

        // edge (0,2) shared by three triangles
        let verts = vec![v(0.0, 0.0), v(1.0, 0.0), v(0.0, 1.0), v(-1.0, 0.5), v(-1.0, -0.5)];
        let r = MacroMesh::new(2, verts, vec![vec![0, 1, 2], vec![0, 2, 3], vec![0, 2, 4]]);
        assert!(matches!(r, Err(Error::Structural(_))));
    }

    #[test]
    fn orientation_is_normalized() {
        let v = |x: f64, y: f64| MacroVertex {
            coords: [x, y, 0.0],
            boundary: true,
        };
        let m = MacroMesh::new(2, vec![v(0.0, 0.0), v(0.0, 1.0), v(1.0, 0.0)], vec![vec![0, 1, 2]]).unwrap();
        assert!(m.signed_volume(&m.elements[0].vertices) > 0.0);
        assert_eq!(m.boundary_facets().count(), 3);
    }
}
