//! Red-green refinement in two and three dimensions.
//!
//! Hanging nodes are counted through the midpoint registry: a vertex hangs
//! on an element if it is a (possibly nested) midpoint of one of the
//! element's edges, or lies inside a face whose three edges are all split.
//! With this count the planar and the tetrahedral closure loops share one
//! engine; the tetrahedral variant adds the face loop that forces every
//! face to follow the planar rules.

use super::{
    edge, ElementId, ElementState, GreenParent, GreenType, MacroElement, MacroMesh, MacroVertex, MarkSet,
    VertexId,
};
use crate::error::{Error, Result};
use std::collections::{BTreeMap, BTreeSet};

/// A vertex lying in the relative interior of an edge (or face) of an element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct HangingNode {
    pub vertex: VertexId,
    pub element: ElementId,
}

/// Selects the `ceil(fraction * #elements)` elements with the largest
/// indicator; ties go to the lower element id.
pub fn mark_top_fraction(mesh: &MacroMesh, indicator: &[f64], fraction: f64) -> Result<MarkSet> {
    if indicator.len() != mesh.num_elements() {
        return Err(Error::structural(format!(
            "indicator has {} entries for {} elements",
            indicator.len(),
            mesh.num_elements()
        )));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::domain(format!("mark fraction {fraction} outside (0, 1]")));
    }
    if let Some(i) = indicator.iter().position(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::structural(format!("indicator {i} is negative or not finite")));
    }
    let count = ((fraction * indicator.len() as f64).ceil() as usize).min(indicator.len());
    let mut order: Vec<usize> = (0..indicator.len()).collect();
    order.sort_by(|&a, &b| indicator[b].total_cmp(&indicator[a]).then(a.cmp(&b)));
    Ok(order.into_iter().take(count).collect())
}

/// Replaces every green group by its archived parent. Returns the new mesh
/// and, for every old element id, the id it maps to.
pub fn revert_green_mapped(mesh: &MacroMesh) -> Result<(MacroMesh, Vec<ElementId>)> {
    let mut out = mesh.clone();
    out.elements.clear();
    out.green_parents.clear();
    let mut map = Vec::with_capacity(mesh.num_elements());
    let mut restored: BTreeMap<usize, ElementId> = BTreeMap::new();
    for (id, el) in mesh.elements.iter().enumerate() {
        if !el.is_green() {
            map.push(out.elements.len());
            out.elements.push(el.clone());
            continue;
        }
        let p = el
            .parent
            .filter(|&p| p < mesh.green_parents.len())
            .ok_or_else(|| Error::structural(format!("green element {id} has no recorded parent")))?;
        for f in el.facets() {
            out.boundary_facets.remove(&f);
        }
        match restored.get(&p) {
            Some(&new_id) => map.push(new_id),
            None => {
                let parent = &mesh.green_parents[p];
                if parent.element.is_green() {
                    return Err(Error::structural(format!("green parent {p} is itself green")));
                }
                restored.insert(p, out.elements.len());
                map.push(out.elements.len());
                out.elements.push(parent.element.clone());
            }
        }
    }
    for &p in restored.keys() {
        for f in &mesh.green_parents[p].boundary_facets {
            out.boundary_facets.insert(f.clone());
        }
    }
    Ok((out, map))
}

/// Removes all green elements, restoring their parents. Marks on green
/// children move to the restored parent.
pub fn revert_green(mesh: &MacroMesh, marks: &MarkSet) -> Result<(MacroMesh, MarkSet)> {
    let (out, map) = revert_green_mapped(mesh)?;
    let mut new_marks = MarkSet::new();
    for id in marks.iter() {
        let &m = map
            .get(id)
            .ok_or_else(|| Error::structural(format!("mark {id} out of range")))?;
        new_marks.0.insert(m);
    }
    Ok((out, new_marks))
}

/// Conforming red-green refinement of a triangle mesh.
pub fn refine_rg_2d(mesh: &MacroMesh, marks: &MarkSet) -> Result<MacroMesh> {
    if mesh.dim != 2 {
        return Err(Error::structural("refine_rg_2d needs a planar mesh"));
    }
    Engine::start(mesh, marks)?.run(marks)
}

/// Conforming red-green refinement of a tetrahedral mesh.
pub fn refine_rg_3d(mesh: &MacroMesh, marks: &MarkSet) -> Result<MacroMesh> {
    if mesh.dim != 3 {
        return Err(Error::structural("refine_rg_3d needs a tetrahedral mesh"));
    }
    Engine::start(mesh, marks)?.run(marks)
}

/// One adaptive step: revert greens (moving marks to parents), then
/// refine with closure.
pub fn refine_rg(mesh: &MacroMesh, marks: &MarkSet) -> Result<MacroMesh> {
    let (reverted, marks) = revert_green(mesh, marks)?;
    Engine::start(&reverted, &marks)?.run(&marks)
}

/// Red-refines the marked elements and stops, leaving hanging nodes behind.
pub fn red_refine_without_closure(mesh: &MacroMesh, marks: &MarkSet) -> Result<MacroMesh> {
    let mut engine = Engine::start(mesh, marks)?;
    for id in marks.iter() {
        engine.red_split(id);
    }
    Ok(engine.finish())
}

/// Lists every hanging node. Empty exactly when the mesh is conforming.
pub fn conformity_check(mesh: &MacroMesh) -> Vec<HangingNode> {
    let reg = Registry(&mesh.midpoints);
    let mut out = BTreeSet::new();
    for (id, el) in mesh.elements.iter().enumerate() {
        for (a, b) in el.edges() {
            reg.collect_edge(a, b, id, &mut out);
        }
        if mesh.dim == 3 {
            for f in el.facets() {
                reg.collect_face_interior(f[0], f[1], f[2], id, &mut out);
            }
        }
    }
    out.into_iter().collect()
}

struct Registry<'a>(&'a BTreeMap<(VertexId, VertexId), VertexId>);

impl Registry<'_> {
    fn mid(&self, a: VertexId, b: VertexId) -> Option<VertexId> {
        self.0.get(&edge(a, b)).copied()
    }

    fn edge_nodes(&self, a: VertexId, b: VertexId) -> usize {
        match self.mid(a, b) {
            Some(m) => 1 + self.edge_nodes(a, m) + self.edge_nodes(m, b),
            None => 0,
        }
    }

    fn face_interior_nodes(&self, a: VertexId, b: VertexId, c: VertexId) -> usize {
        let (Some(ab), Some(bc), Some(ca)) = (self.mid(a, b), self.mid(b, c), self.mid(c, a)) else {
            return 0;
        };
        self.edge_nodes(ab, bc)
            + self.edge_nodes(bc, ca)
            + self.edge_nodes(ca, ab)
            + self.face_interior_nodes(a, ab, ca)
            + self.face_interior_nodes(ab, b, bc)
            + self.face_interior_nodes(ca, bc, c)
            + self.face_interior_nodes(ab, bc, ca)
    }

    fn collect_edge(&self, a: VertexId, b: VertexId, el: ElementId, out: &mut BTreeSet<HangingNode>) {
        if let Some(m) = self.mid(a, b) {
            out.insert(HangingNode { vertex: m, element: el });
            self.collect_edge(a, m, el, out);
            self.collect_edge(m, b, el, out);
        }
    }

    fn collect_face_interior(&self, a: VertexId, b: VertexId, c: VertexId, el: ElementId, out: &mut BTreeSet<HangingNode>) {
        let (Some(ab), Some(bc), Some(ca)) = (self.mid(a, b), self.mid(b, c), self.mid(c, a)) else {
            return;
        };
        self.collect_edge(ab, bc, el, out);
        self.collect_edge(bc, ca, el, out);
        self.collect_edge(ca, ab, el, out);
        self.collect_face_interior(a, ab, ca, el, out);
        self.collect_face_interior(ab, b, bc, el, out);
        self.collect_face_interior(ca, bc, c, el, out);
        self.collect_face_interior(ab, bc, ca, el, out);
    }
}

struct Slot {
    el: MacroElement,
    children: Vec<usize>,
}

struct Engine {
    mesh: MacroMesh,
    slots: Vec<Slot>,
    roots: usize,
    boundary_edges: BTreeSet<(VertexId, VertexId)>,
}

impl Engine {
    fn start(mesh: &MacroMesh, marks: &MarkSet) -> Result<Self> {
        if mesh.num_green() > 0 {
            return Err(Error::structural("green elements must be reverted before refinement"));
        }
        if let Some(bad) = marks.iter().find(|&id| id >= mesh.num_elements()) {
            return Err(Error::structural(format!("mark {bad} out of range")));
        }
        let mut work = mesh.clone();
        let slots = std::mem::take(&mut work.elements)
            .into_iter()
            .map(|el| Slot { el, children: Vec::new() })
            .collect::<Vec<_>>();
        let roots = slots.len();
        work.green_parents.clear();
        Ok(Engine {
            boundary_edges: mesh.boundary_edges(),
            mesh: work,
            slots,
            roots,
        })
    }

    fn reg(&self) -> Registry<'_> {
        Registry(&self.mesh.midpoints)
    }

    fn alive(&self, s: usize) -> bool {
        self.slots[s].children.is_empty()
    }

    fn midpoint(&mut self, a: VertexId, b: VertexId) -> VertexId {
        let e = edge(a, b);
        if let Some(&m) = self.mesh.midpoints.get(&e) {
            return m;
        }
        let (pa, pb) = (self.mesh.point(e.0), self.mesh.point(e.1));
        let boundary = self.boundary_edges.contains(&e);
        let m = self.mesh.vertices.len();
        self.mesh.vertices.push(MacroVertex {
            coords: [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1]), 0.5 * (pa[2] + pb[2])],
            boundary,
        });
        self.mesh.midpoints.insert(e, m);
        if boundary {
            self.boundary_edges.insert(edge(e.0, m));
            self.boundary_edges.insert(edge(m, e.1));
        }
        m
    }

    fn hanging(&self, s: usize) -> usize {
        let el = &self.slots[s].el;
        let reg = self.reg();
        let mut n: usize = el.edges().into_iter().map(|(a, b)| reg.edge_nodes(a, b)).sum();
        if self.mesh.dim == 3 {
            n += el
                .facets()
                .into_iter()
                .map(|f| reg.face_interior_nodes(f[0], f[1], f[2]))
                .sum::<usize>();
        }
        n
    }

    /// Replaces slot `s` by `children`, carrying boundary facets over.
    fn replace(&mut self, s: usize, children: Vec<MacroElement>) {
        let parent_facets: Vec<Vec<VertexId>> = self.slots[s]
            .el
            .facets()
            .into_iter()
            .filter(|f| self.mesh.boundary_facets.contains(f))
            .collect();
        for f in &parent_facets {
            self.mesh.boundary_facets.remove(f);
        }
        let closures: Vec<BTreeSet<VertexId>> = parent_facets
            .iter()
            .map(|f| {
                let mut c: BTreeSet<VertexId> = f.iter().copied().collect();
                for i in 0..f.len() {
                    for j in i + 1..f.len() {
                        if let Some(m) = self.reg().mid(f[i], f[j]) {
                            c.insert(m);
                        }
                    }
                }
                c
            })
            .collect();
        let mut ids = Vec::with_capacity(children.len());
        for mut child in children {
            self.mesh.orient(&mut child);
            for f in child.facets() {
                if closures.iter().any(|c| f.iter().all(|v| c.contains(v))) {
                    for i in 0..f.len() {
                        for j in i + 1..f.len() {
                            self.boundary_edges.insert(edge(f[i], f[j]));
                        }
                    }
                    self.mesh.boundary_facets.insert(f);
                }
            }
            ids.push(self.slots.len());
            self.slots.push(Slot {
                el: child,
                children: Vec::new(),
            });
        }
        self.slots[s].children = ids;
    }

    fn red_split(&mut self, s: usize) {
        if !self.alive(s) {
            return;
        }
        let v = self.slots[s].el.vertices.clone();
        let children = if self.mesh.dim == 2 {
            let (ab, bc, ca) = (self.midpoint(v[0], v[1]), self.midpoint(v[1], v[2]), self.midpoint(v[2], v[0]));
            vec![
                vec![v[0], ab, ca],
                vec![ab, v[1], bc],
                vec![ca, bc, v[2]],
                vec![ab, bc, ca],
            ]
        } else {
            self.red_children_3d([v[0], v[1], v[2], v[3]])
        };
        let children = children
            .into_iter()
            .map(|vertices| MacroElement {
                vertices,
                state: ElementState::RedChild,
                parent: None,
            })
            .collect();
        self.replace(s, children);
    }

    /// Regular split into four corner tetrahedra and four around the
    /// shortest diagonal of the inner octahedron.
    fn red_children_3d(&mut self, v: [VertexId; 4]) -> Vec<Vec<VertexId>> {
        let mut m = [[0usize; 4]; 4];
        for i in 0..4 {
            for j in i + 1..4 {
                let x = self.midpoint(v[i], v[j]);
                m[i][j] = x;
                m[j][i] = x;
            }
        }
        let mut out = vec![
            vec![v[0], m[0][1], m[0][2], m[0][3]],
            vec![m[0][1], v[1], m[1][2], m[1][3]],
            vec![m[0][2], m[1][2], v[2], m[2][3]],
            vec![m[0][3], m[1][3], m[2][3], v[3]],
        ];
        let dist2 = |a: VertexId, b: VertexId| {
            let (p, q) = (self.mesh.point(a), self.mesh.point(b));
            (0..3).map(|k| (p[k] - q[k]).powi(2)).sum::<f64>()
        };
        let diagonals = [((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))];
        let key = |d: &((usize, usize), (usize, usize))| {
            let (a, b) = (m[d.0 .0][d.0 .1], m[d.1 .0][d.1 .1]);
            (dist2(a, b), edge(a, b))
        };
        let (p, q) = *diagonals
            .iter()
            .min_by(|x, y| {
                let (kx, ky) = (key(x), key(y));
                kx.0.total_cmp(&ky.0).then(kx.1.cmp(&ky.1))
            })
            .expect("three diagonals");
        let complement = |(i, j): (usize, usize)| -> (usize, usize) {
            let rest: Vec<usize> = (0..4).filter(|&k| k != i && k != j).collect();
            (rest[0], rest[1])
        };
        let others: Vec<(usize, usize)> = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
            .into_iter()
            .filter(|&e| e != p && e != q)
            .collect();
        let e0 = others[0];
        let opp = complement(e0);
        let side: Vec<(usize, usize)> = others.iter().copied().filter(|&e| e != e0 && e != opp).collect();
        let ring = [e0, side[0], opp, side[1]];
        let (pm, qm) = (m[p.0][p.1], m[q.0][q.1]);
        for k in 0..4 {
            let (a, b) = (ring[k], ring[(k + 1) % 4]);
            out.push(vec![pm, qm, m[a.0][a.1], m[b.0][b.1]]);
        }
        out
    }

    fn green_split(&mut self, s: usize) -> Result<()> {
        let el = self.slots[s].el.clone();
        let v = el.vertices.clone();
        let reg = self.reg();
        let split: Vec<(usize, usize, VertexId)> = (0..v.len())
            .flat_map(|i| (i + 1..v.len()).map(move |j| (i, j)))
            .filter_map(|(i, j)| reg.mid(v[i], v[j]).map(|m| (i, j, m)))
            .collect();
        let bad = |what: &str| {
            Error::Internal(format!(
                "element {:?} left the closure loop with {what} ({} split edges)",
                v,
                split.len()
            ))
        };
        if split.iter().any(|&(i, j, m)| reg.edge_nodes(v[i], m) + reg.edge_nodes(m, v[j]) > 0) {
            return Err(bad("a nested hanging node"));
        }
        let (kind, children) = match (self.mesh.dim, split.as_slice()) {
            (2, [(i, j, m)]) => {
                let k = 3 - i - j;
                (GreenType::Bisection, vec![vec![v[*i], *m, v[k]], vec![*m, v[*j], v[k]]])
            }
            (3, [(i, j, m)]) => {
                let rest: Vec<usize> = (0..4).filter(|k| k != i && k != j).collect();
                let (c, d) = (v[rest[0]], v[rest[1]]);
                (GreenType::G1, vec![vec![v[*i], *m, c, d], vec![*m, v[*j], c, d]])
            }
            (3, [(i1, j1, m1), (i2, j2, m2)]) if [i1, j1].iter().all(|&x| x != i2 && x != j2) => {
                let (a, b, c, d) = (v[*i1], v[*j1], v[*i2], v[*j2]);
                (
                    GreenType::G2,
                    vec![vec![a, *m1, c, *m2], vec![a, *m1, *m2, d], vec![*m1, b, c, *m2], vec![*m1, b, *m2, d]],
                )
            }
            (3, [_, _, _]) => {
                let mut used: Vec<usize> = split.iter().flat_map(|&(i, j, _)| [i, j]).collect();
                used.sort_unstable();
                used.dedup();
                if used.len() != 3 {
                    return Err(bad("three split edges not bounding one face"));
                }
                let apex = v[(0..4).find(|k| !used.contains(k)).expect("apex")];
                let (a, b, c) = (v[used[0]], v[used[1]], v[used[2]]);
                let (ab, bc, ca) = (
                    reg.mid(a, b).expect("split"),
                    reg.mid(b, c).expect("split"),
                    reg.mid(c, a).expect("split"),
                );
                if reg.face_interior_nodes(a, b, c) > 0 {
                    return Err(bad("a node inside the split face"));
                }
                (
                    GreenType::G3,
                    vec![
                        vec![a, ab, ca, apex],
                        vec![ab, b, bc, apex],
                        vec![ca, bc, c, apex],
                        vec![ab, bc, ca, apex],
                    ],
                )
            }
            _ => return Err(bad("an inadmissible pattern")),
        };
        let boundary_facets = el
            .facets()
            .into_iter()
            .filter(|f| self.mesh.boundary_facets.contains(f))
            .collect();
        let parent = self.mesh.green_parents.len();
        self.mesh.green_parents.push(GreenParent {
            element: el,
            boundary_facets,
        });
        let children = children
            .into_iter()
            .map(|vertices| MacroElement {
                vertices,
                state: ElementState::GreenChild(kind),
                parent: Some(parent),
            })
            .collect();
        self.replace(s, children);
        Ok(())
    }

    fn alive_slots(&self) -> Vec<usize> {
        (0..self.slots.len()).filter(|&s| self.alive(s)).collect()
    }

    fn run(mut self, marks: &MarkSet) -> Result<MacroMesh> {
        let dim = self.mesh.dim;
        let threshold = if dim == 2 { 1 } else { 3 };
        let mut red: Vec<usize> = marks.iter().collect();
        let mut rounds = 0usize;
        loop {
            rounds += 1;
            if rounds > 64 + self.slots.len() {
                return Err(Error::Internal("red closure did not reach a fixpoint".into()));
            }
            for &s in &red {
                self.red_split(s);
            }
            if dim == 3 {
                self.close_faces();
            }
            red = self
                .alive_slots()
                .into_iter()
                .filter(|&s| self.hanging(s) > threshold)
                .collect();
            if red.is_empty() {
                break;
            }
        }
        for s in self.alive_slots() {
            if self.hanging(s) > 0 {
                self.green_split(s)?;
            }
        }
        let mut mesh = self.finish();
        mesh.generation += 1;
        Ok(mesh)
    }

    /// Splits all edges of every face carrying more than one hanging node on
    /// its boundary, until no such face is left.
    fn close_faces(&mut self) {
        loop {
            let reg = self.reg();
            let mut faces = BTreeSet::new();
            for s in self.alive_slots() {
                for f in self.slots[s].el.facets() {
                    let (a, b, c) = (f[0], f[1], f[2]);
                    let fully = reg.mid(a, b).is_some() && reg.mid(b, c).is_some() && reg.mid(c, a).is_some();
                    if !fully && reg.edge_nodes(a, b) + reg.edge_nodes(b, c) + reg.edge_nodes(c, a) > 1 {
                        faces.insert(f);
                    }
                }
            }
            if faces.is_empty() {
                return;
            }
            for f in faces {
                self.midpoint(f[0], f[1]);
                self.midpoint(f[1], f[2]);
                self.midpoint(f[2], f[0]);
            }
        }
    }

    fn finish(mut self) -> MacroMesh {
        let mut order = Vec::new();
        let mut stack: Vec<usize> = (0..self.roots).rev().collect();
        while let Some(s) = stack.pop() {
            if self.slots[s].children.is_empty() {
                order.push(s);
            } else {
                stack.extend(self.slots[s].children.iter().rev());
            }
        }
        let mut slots: Vec<Option<Slot>> = self.slots.into_iter().map(Some).collect();
        self.mesh.elements = order
            .into_iter()
            .map(|s| slots[s].take().expect("leaf visited once").el)
            .collect();
        self.mesh
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{box_mesh, unit_square_mesh};

    fn two_triangles() -> MacroMesh {
        unit_square_mesh(1)
    }

    fn single_tet() -> MacroMesh {
        let v = |x: f64, y: f64, z: f64| MacroVertex {
            coords: [x, y, z],
            boundary: true,
        };
        MacroMesh::new(
            3,
            vec![v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(0.0, 1.0, 0.0), v(0.0, 0.0, 1.0)],
            vec![vec![0, 1, 2, 3]],
        )
        .unwrap()
    }

    fn two_tets() -> MacroMesh {
        let v = |x: f64, y: f64, z: f64| MacroVertex {
            coords: [x, y, z],
            boundary: true,
        };
        MacroMesh::new(
            3,
            vec![
                v(0.0, 0.0, 0.0),
                v(1.0, 0.0, 0.0),
                v(0.0, 1.0, 0.0),
                v(0.0, 0.0, 1.0),
                v(1.0, 1.0, 1.0),
            ],
            vec![vec![0, 1, 2, 3], vec![1, 2, 3, 4]],
        )
        .unwrap()
    }

    fn marks(ids: &[usize]) -> MarkSet {
        ids.iter().copied().collect()
    }

    #[test]
    fn top_fraction_examples() {
        let m = unit_square_mesh(5); // 50 elements; use first 10 via a smaller mesh
        let _ = m;
        let mesh = {
            // 10 triangles: a strip of 5 squares
            let v = |x: f64, y: f64| MacroVertex {
                coords: [x, y, 0.0],
                boundary: true,
            };
            let mut verts = Vec::new();
            for i in 0..6 {
                verts.push(v(i as f64, 0.0));
                verts.push(v(i as f64, 1.0));
            }
            let mut els = Vec::new();
            for i in 0..5 {
                let (a, b, c, d) = (2 * i, 2 * i + 2, 2 * i + 3, 2 * i + 1);
                els.push(vec![a, b, c]);
                els.push(vec![a, c, d]);
            }
            MacroMesh::new(2, verts, els).unwrap()
        };
        let ind = [5.0, 4.0, 3.0, 2.0, 1.0, 0.5, 0.2, 0.1, 0.05, 0.01];
        assert_eq!(mark_top_fraction(&mesh, &ind, 0.10).unwrap(), marks(&[0]));
        assert_eq!(mark_top_fraction(&mesh, &[1.0; 10], 0.10).unwrap(), marks(&[0]));
        assert_eq!(mark_top_fraction(&mesh, &ind, 1.0).unwrap().len(), 10);
        assert!(matches!(mark_top_fraction(&mesh, &ind[..9], 0.1), Err(Error::Structural(_))));
        // ceiling: 0.15 of 10 -> 2
        assert_eq!(mark_top_fraction(&mesh, &ind, 0.15).unwrap(), marks(&[0, 1]));
    }

    #[test]
    fn single_triangle_red() {
        let v = |x: f64, y: f64| MacroVertex {
            coords: [x, y, 0.0],
            boundary: true,
        };
        let m = MacroMesh::new(2, vec![v(0.0, 0.0), v(1.0, 0.0), v(0.0, 1.0)], vec![vec![0, 1, 2]]).unwrap();
        let r = refine_rg_2d(&m, &marks(&[0])).unwrap();
        assert_eq!(r.num_elements(), 4);
        assert_eq!(r.num_vertices(), 6);
        assert!(conformity_check(&r).is_empty());
        assert!(r.vertices[3..].iter().all(|v| v.boundary));
        assert_eq!(r.boundary_facets().count(), 6);
    }

    #[test]
    fn square_one_marked_gives_six() {
        let m = two_triangles();
        let r = refine_rg_2d(&m, &marks(&[0])).unwrap();
        assert_eq!(r.num_elements(), 6);
        assert!(conformity_check(&r).is_empty());
        let greens = r.elements.iter().filter(|e| e.is_green()).count();
        assert_eq!(greens, 2);
        assert!((r.total_volume() - 1.0).abs() < 1e-15);
        // the diagonal midpoint is interior
        let diag_mid = r.midpoint_of(0, 3).unwrap();
        assert!(!r.vertices[diag_mid].boundary);
    }

    #[test]
    fn empty_marks_leave_mesh_unchanged() {
        let m = two_triangles();
        let r = refine_rg_2d(&m, &MarkSet::new()).unwrap();
        assert_eq!(r.elements, m.elements);
        assert_eq!(r.vertices, m.vertices);
        let t = single_tet();
        let r = refine_rg_3d(&t, &MarkSet::new()).unwrap();
        assert_eq!(r.elements, t.elements);
    }

    #[test]
    fn revert_identity_without_greens() {
        let m = two_triangles();
        let (r, mk) = revert_green(&m, &marks(&[1])).unwrap();
        assert_eq!(r, m);
        assert_eq!(mk, marks(&[1]));
    }

    #[test]
    fn revert_exposes_hanging_node_and_keeps_marks() {
        let m = refine_rg_2d(&two_triangles(), &marks(&[0])).unwrap();
        let red_child = m
            .elements
            .iter()
            .position(|e| e.state == ElementState::RedChild)
            .unwrap();
        let (r, mk) = revert_green(&m, &marks(&[red_child])).unwrap();
        assert_eq!(r.num_elements(), 5);
        assert_eq!(r.num_green(), 0);
        assert_eq!(mk.len(), 1);
        assert_eq!(r.elements[mk.iter().next().unwrap()].state, ElementState::RedChild);
        let hanging = conformity_check(&r);
        assert_eq!(hanging.len(), 1);
        assert!((r.total_volume() - 1.0).abs() < 1e-15);
        // marking a green child transfers the mark to its parent
        let green = m.elements.iter().position(|e| e.is_green()).unwrap();
        let (r2, mk2) = revert_green(&m, &marks(&[green])).unwrap();
        let p = mk2.iter().next().unwrap();
        assert_eq!(r2.elements[p].state, ElementState::Unrefined);
    }

    #[test]
    fn broken_genealogy_is_reported() {
        let mut m = refine_rg_2d(&two_triangles(), &marks(&[0])).unwrap();
        for e in &mut m.elements {
            if e.is_green() {
                e.parent = None;
            }
        }
        assert!(matches!(revert_green_mapped(&m), Err(Error::Structural(_))));
    }

    #[test]
    fn single_tet_red_has_eight_children() {
        let r = refine_rg_3d(&single_tet(), &marks(&[0])).unwrap();
        assert_eq!(r.num_elements(), 8);
        assert_eq!(r.num_vertices(), 10);
        assert!(conformity_check(&r).is_empty());
        assert!((r.total_volume() - 1.0 / 6.0).abs() < 1e-15);
        for i in 0..8 {
            assert!(r.signed_volume(&r.elements[i].vertices) > 0.0);
            assert!((r.element_volume(i) - 1.0 / 48.0).abs() < 1e-15);
        }
        // every child face on the parent boundary is a boundary facet: 4 * 4
        assert_eq!(r.boundary_facets().count(), 16);
    }

    #[test]
    fn two_tets_one_marked_gives_g3_closure() {
        let m = two_tets();
        let r = refine_rg_3d(&m, &marks(&[0])).unwrap();
        assert_eq!(r.num_elements(), 12);
        assert!(conformity_check(&r).is_empty());
        let g3 = r
            .elements
            .iter()
            .filter(|e| e.state == ElementState::GreenChild(GreenType::G3))
            .count();
        assert_eq!(g3, 4);
        let vol: f64 = m.total_volume();
        assert!((r.total_volume() - vol).abs() < 1e-14 * vol);
    }

    #[test]
    fn red_without_closure_leaves_three_hanging_on_face() {
        let r = red_refine_without_closure(&two_tets(), &marks(&[0])).unwrap();
        let h = conformity_check(&r);
        assert_eq!(h.len(), 3);
        assert!(h.iter().all(|n| r.elements[n.element].vertices.contains(&4)));
    }

    #[test]
    fn g3_reverts_to_parent_with_three_hanging_nodes() {
        let r = refine_rg_3d(&two_tets(), &marks(&[0])).unwrap();
        let vol = r.total_volume();
        let (back, _) = revert_green_mapped(&r).unwrap();
        assert_eq!(back.num_elements(), 9);
        assert_eq!(conformity_check(&back).len(), 3);
        assert!((back.total_volume() - vol).abs() < 1e-14 * vol);
    }

    #[test]
    fn box_refinement_is_conforming() {
        let m = box_mesh(2);
        let r = refine_rg_3d(&m, &marks(&[0, 7, 20, 33])).unwrap();
        assert!(conformity_check(&r).is_empty());
        assert!((r.total_volume() - 1.0).abs() < 1e-13);
        let r2 = refine_rg(&r, &marks(&[1, 2, 50])).unwrap();
        assert!(conformity_check(&r2).is_empty());
        assert!((r2.total_volume() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn repeated_planar_refinement_around_a_corner() {
        let mut m = unit_square_mesh(2);
        for _ in 0..6 {
            let ind: Vec<f64> = (0..m.num_elements())
                .map(|i| {
                    let c = m.barycenter(i);
                    1.0 / (1e-3 + c[0] * c[0] + c[1] * c[1]) * m.element_volume(i)
                })
                .collect();
            let mk = mark_top_fraction(&m, &ind, 0.2).unwrap();
            m = refine_rg(&m, &mk).unwrap();
            assert!(conformity_check(&m).is_empty());
            assert!((m.total_volume() - 1.0).abs() < 1e-13);
            for e in &m.elements {
                if let Some(p) = e.parent {
                    assert!(!m.green_parents[p].element.is_green());
                }
            }
        }
    }
}
