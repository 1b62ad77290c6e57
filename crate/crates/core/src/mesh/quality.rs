use super::{ElementId, MacroMesh};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementQuality {
    /// Smallest interior angle (triangles) or dihedral angle (tetrahedra),
    /// in radians. Zero for degenerate elements.
    pub min_angle: f64,
    /// Longest edge.
    pub h: f64,
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn angle(a: [f64; 3], b: [f64; 3]) -> f64 {
    let n = (dot(a, a) * dot(b, b)).sqrt();
    if n == 0.0 {
        return 0.0;
    }
    (dot(a, b) / n).clamp(-1.0, 1.0).acos()
}

/// Longest edge length `h_T`.
pub fn element_diameter(mesh: &MacroMesh, id: ElementId) -> f64 {
    mesh.elements[id]
        .edges()
        .into_iter()
        .map(|(a, b)| {
            let d = sub(mesh.point(a), mesh.point(b));
            dot(d, d).sqrt()
        })
        .fold(0.0, f64::max)
}

/// Distance `r_T` from the element barycenter to `point`.
pub fn distance_to(mesh: &MacroMesh, id: ElementId, point: [f64; 3]) -> f64 {
    let d = sub(mesh.barycenter(id), point);
    dot(d, d).sqrt()
}

pub fn mesh_quality(mesh: &MacroMesh) -> Vec<ElementQuality> {
    (0..mesh.num_elements())
        .map(|id| {
            let p: Vec<[f64; 3]> = mesh.elements[id].vertices.iter().map(|&v| mesh.point(v)).collect();
            let mut min_angle = PI;
            if mesh.dim == 2 {
                for i in 0..3 {
                    let (a, b, c) = (p[i], p[(i + 1) % 3], p[(i + 2) % 3]);
                    min_angle = min_angle.min(angle(sub(b, a), sub(c, a)));
                }
            } else {
                for i in 0..4 {
                    for j in i + 1..4 {
                        let rest: Vec<usize> = (0..4).filter(|&k| k != i && k != j).collect();
                        let e = sub(p[j], p[i]);
                        let n1 = cross(e, sub(p[rest[0]], p[i]));
                        let n2 = cross(e, sub(p[rest[1]], p[i]));
                        min_angle = min_angle.min(angle(n1, n2));
                    }
                }
            }
            if mesh.element_volume(id) == 0.0 {
                min_angle = 0.0;
            }
            ElementQuality {
                min_angle,
                h: element_diameter(mesh, id),
            }
        })
        .collect()
}
