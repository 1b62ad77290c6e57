//! Legacy VTK export with 17 significant digits.

use super::{GridFunction, GridHierarchy, Lattice};
use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

/// Writes the level-`level` triangulation and any number of nodal fields.
pub fn write_vtk(h: &GridHierarchy, level: usize, fields: &[(&str, &GridFunction)], path: &Path) -> Result<()> {
    for (name, f) in fields {
        f.check_level(level)?;
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::structural(format!("invalid VTK field name `{name}`")));
        }
    }
    std::fs::write(path, format_vtk(h, level, fields))
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub(crate) fn format_vtk(h: &GridHierarchy, level: usize, fields: &[(&str, &GridFunction)]) -> String {
    let lat = Lattice::new(level);
    let dm = h.dof_map(level);
    let np = dm.num_nodes();
    let mut points = vec![[0.0; 2]; np];
    let mut values = vec![vec![0.0; np]; fields.len()];
    let mut global = vec![0usize; lat.num_nodes()];
    let mut cells = Vec::with_capacity(h.num_macros() * lat.num_triangles());
    for m in 0..h.num_macros() {
        let info = &h.macros[m];
        for j in 0..=lat.n {
            for i in 0..=lat.n - j {
                let k = lat.idx(i, j);
                let g = dm.global_index(m, i, j);
                global[k] = g;
                if info.node_flags(lat.n, i, j).0 {
                    points[g] = super::lattice_point(&info.points, lat.n, i as f64, j as f64);
                    for (v, (_, f)) in values.iter_mut().zip(fields) {
                        v[g] = f.macro_values(m)[k];
                    }
                }
            }
        }
        for j in 0..lat.n {
            for i in 0..lat.n - j {
                cells.push([global[lat.idx(i, j)], global[lat.idx(i + 1, j)], global[lat.idx(i, j + 1)]]);
                if i + j + 1 < lat.n {
                    cells.push([
                        global[lat.idx(i + 1, j + 1)],
                        global[lat.idx(i, j + 1)],
                        global[lat.idx(i + 1, j)],
                    ]);
                }
            }
        }
    }
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\nklref level {level}\nASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {np} double");
    for p in &points {
        let _ = writeln!(s, "{:.16e} {:.16e} 0", p[0], p[1]);
    }
    let _ = writeln!(s, "CELLS {} {}", cells.len(), 4 * cells.len());
    for c in &cells {
        let _ = writeln!(s, "3 {} {} {}", c[0], c[1], c[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {}", cells.len());
    for _ in &cells {
        s.push_str("5\n");
    }
    if !fields.is_empty() {
        let _ = writeln!(s, "POINT_DATA {np}");
        for ((name, _), v) in fields.iter().zip(&values) {
            let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for x in v {
                let _ = writeln!(s, "{x:.16e}");
            }
        }
    }
    s
}
