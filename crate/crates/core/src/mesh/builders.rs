use super::{MacroMesh, MacroVertex};
use std::collections::BTreeMap;

/// `n × n` squares on the unit square, each cut along its SW–NE diagonal.
pub fn unit_square_mesh(n: usize) -> MacroMesh {
    let h = 1.0 / n as f64;
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(MacroVertex {
                coords: [i as f64 * h, j as f64 * h, 0.0],
                boundary: i == 0 || j == 0 || i == n || j == n,
            });
        }
    }
    let mut elements = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (sw, se, ne, nw) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            elements.push(vec![sw, se, ne]);
            elements.push(vec![sw, ne, nw]);
        }
    }
    MacroMesh::new(2, vertices, elements).expect("unit square mesh is valid")
}

/// The L-shaped domain `(-1,1)² \ [0,1]×[-1,0]` with `n × n` squares per
/// quadrant, each cut along its SW–NE diagonal. `n = 2` gives 24 triangles.
pub fn lshape_mesh(n: usize) -> MacroMesh {
    let h = 1.0 / n as f64;
    let inside = |i: usize, j: usize| !(i > n && j < n);
    let mut index = BTreeMap::new();
    let mut vertices = Vec::new();
    for j in 0..=2 * n {
        for i in 0..=2 * n {
            if !inside(i, j) {
                continue;
            }
            let boundary = i == 0 || j == 0 || i == 2 * n || j == 2 * n || (i >= n && j == n) || (i == n && j <= n);
            index.insert((i, j), vertices.len());
            vertices.push(MacroVertex {
                coords: [-1.0 + i as f64 * h, -1.0 + j as f64 * h, 0.0],
                boundary,
            });
        }
    }
    let mut elements = Vec::new();
    for j in 0..2 * n {
        for i in 0..2 * n {
            // skip squares of the removed quadrant x > 0, y < 0
            if i >= n && j < n {
                continue;
            }
            let (sw, se, ne, nw) = (index[&(i, j)], index[&(i + 1, j)], index[&(i + 1, j + 1)], index[&(i, j + 1)]);
            elements.push(vec![sw, se, ne]);
            elements.push(vec![sw, ne, nw]);
        }
    }
    MacroMesh::new(2, vertices, elements).expect("L-shape mesh is valid")
}

/// `n × n × n` cubes on the unit cube, each split into six tetrahedra
/// around its main diagonal (Kuhn subdivision, conforming across cubes).
pub fn box_mesh(n: usize) -> MacroMesh {
    let h = 1.0 / n as f64;
    let id = |i: usize, j: usize, k: usize| (k * (n + 1) + j) * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1).pow(3));
    for k in 0..=n {
        for j in 0..=n {
            for i in 0..=n {
                let b = |c: usize| c == 0 || c == n;
                vertices.push(MacroVertex {
                    coords: [i as f64 * h, j as f64 * h, k as f64 * h],
                    boundary: b(i) || b(j) || b(k),
                });
            }
        }
    }
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut elements = Vec::with_capacity(6 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for p in PERMS {
                    let mut c = [i, j, k];
                    let mut tet = vec![id(c[0], c[1], c[2])];
                    for axis in p {
                        c[axis] += 1;
                        tet.push(id(c[0], c[1], c[2]));
                    }
                    elements.push(tet);
                }
            }
        }
    }
    MacroMesh::new(3, vertices, elements).expect("box mesh is valid")
}
