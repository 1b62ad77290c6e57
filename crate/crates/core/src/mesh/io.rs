//! Plain-text mesh and mark-set files.
//!
//! ```text
//! dim 2
//! vertices 3
//! 0 0 0 1
//! 1 1 0 1
//! 2 0 1 1
//! elements 1
//! 0 0 1 2
//! ```
//!
//! Vertex lines carry `id x y [z] boundary` with `boundary` 0 or 1. Blank
//! lines and lines starting with `#` are ignored. Coordinates are written in
//! shortest round-trip form, so a write/read cycle is lossless.

use super::{conformity_check, edge, MacroMesh, MacroVertex, MarkSet};
use crate::error::{Error, Result};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

pub fn format_mesh(mesh: &MacroMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "dim {}", mesh.dim);
    let _ = writeln!(s, "vertices {}", mesh.num_vertices());
    for (i, v) in mesh.vertices.iter().enumerate() {
        let _ = write!(s, "{i}");
        for c in &v.coords[..mesh.dim] {
            let _ = write!(s, " {c:?}");
        }
        let _ = writeln!(s, " {}", u8::from(v.boundary));
    }
    let _ = writeln!(s, "elements {}", mesh.num_elements());
    for (i, e) in mesh.elements.iter().enumerate() {
        let _ = write!(s, "{i}");
        for v in &e.vertices {
            let _ = write!(s, " {v}");
        }
        s.push('\n');
    }
    s
}

pub fn write_mesh(mesh: &MacroMesh, path: &Path) -> Result<()> {
    std::fs::write(path, format_mesh(mesh)).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn read_mesh(path: &Path) -> Result<MacroMesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    parse_mesh(&text)
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn header(line: Option<(usize, &str)>, key: &str) -> Result<usize> {
    let (no, l) = line.ok_or_else(|| Error::structural(format!("missing `{key}` header")))?;
    let mut it = l.split_whitespace();
    match (it.next(), it.next().map(str::parse::<usize>), it.next()) {
        (Some(k), Some(Ok(n)), None) if k == key => Ok(n),
        _ => Err(Error::structural(format!("line {no}: expected `{key} <count>`"))),
    }
}

fn ids(no: usize, l: &str, expected: usize, what: &str) -> Result<Vec<String>> {
    let parts: Vec<String> = l.split_whitespace().map(str::to_owned).collect();
    if parts.len() != expected {
        return Err(Error::structural(format!(
            "line {no}: {what} needs {expected} fields, found {}",
            parts.len()
        )));
    }
    Ok(parts)
}

fn num<T: std::str::FromStr>(no: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::structural(format!("line {no}: cannot parse `{s}`")))
}

/// Parses a mesh and rejects it if any vertex sits exactly at the midpoint
/// of an element edge (a hanging node).
pub fn parse_mesh(text: &str) -> Result<MacroMesh> {
    let mut lines = content_lines(text);
    let dim = header(lines.next(), "dim")?;
    if dim != 2 && dim != 3 {
        return Err(Error::structural(format!("unsupported dimension {dim}")));
    }
    let nv = header(lines.next(), "vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for k in 0..nv {
        let (no, l) = lines.next().ok_or_else(|| Error::structural("vertex list truncated"))?;
        let p = ids(no, l, dim + 2, "vertex")?;
        if num::<usize>(no, &p[0])? != k {
            return Err(Error::structural(format!("line {no}: vertex ids must be 0..{nv} in order")));
        }
        let mut coords = [0.0; 3];
        for d in 0..dim {
            coords[d] = num(no, &p[1 + d])?;
        }
        let boundary = match p[dim + 1].as_str() {
            "0" => false,
            "1" => true,
            other => return Err(Error::structural(format!("line {no}: boundary flag `{other}`"))),
        };
        vertices.push(MacroVertex { coords, boundary });
    }
    let ne = header(lines.next(), "elements")?;
    let mut elements = Vec::with_capacity(ne);
    for k in 0..ne {
        let (no, l) = lines.next().ok_or_else(|| Error::structural("element list truncated"))?;
        let p = ids(no, l, dim + 2, "element")?;
        if num::<usize>(no, &p[0])? != k {
            return Err(Error::structural(format!("line {no}: element ids must be 0..{ne} in order")));
        }
        elements.push(p[1..].iter().map(|s| num(no, s)).collect::<Result<Vec<usize>>>()?);
    }
    if let Some((no, _)) = lines.next() {
        return Err(Error::structural(format!("line {no}: trailing content")));
    }
    let mut mesh = MacroMesh::new(dim, vertices, elements)?;

    let key = |c: [f64; 3]| c.map(f64::to_bits);
    let by_coords: HashMap<[u64; 3], usize> = mesh
        .vertices
        .iter()
        .enumerate()
        .map(|(i, v)| (key(v.coords), i))
        .collect();
    let mut found = Vec::new();
    for el in &mesh.elements {
        for (a, b) in el.edges() {
            let (pa, pb) = (mesh.point(a), mesh.point(b));
            let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1]), 0.5 * (pa[2] + pb[2])];
            if let Some(&m) = by_coords.get(&key(mid)) {
                found.push((edge(a, b), m));
            }
        }
    }
    mesh.midpoints.extend(found);
    let hanging = conformity_check(&mesh);
    if let Some(h) = hanging.first() {
        return Err(Error::structural(format!(
            "mesh is not conforming: vertex {} hangs on element {} ({} hanging nodes)",
            h.vertex,
            h.element,
            hanging.len()
        )));
    }
    Ok(mesh)
}

/// One element id per whitespace-separated token; `#` starts a comment.
pub fn parse_marks(text: &str) -> Result<MarkSet> {
    let mut out = MarkSet::new();
    for (no, l) in text.lines().enumerate() {
        let l = l.split('#').next().unwrap_or("");
        for tok in l.split_whitespace() {
            out.0.insert(num(no + 1, tok)?);
        }
    }
    Ok(out)
}

pub fn read_marks(path: &Path) -> Result<MarkSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    parse_marks(&text)
}

pub fn write_marks(marks: &MarkSet, path: &Path) -> Result<()> {
    let mut s = String::new();
    for id in marks.iter() {
        let _ = writeln!(s, "{id}");
    }
    std::fs::write(path, s).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}
