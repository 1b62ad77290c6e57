use crate::error::Result;
use crate::hhg::{lattice_point, GridFunction, GridHierarchy};
use crate::par;
use crate::problems::ProblemSpec;

/// Symmetric 6-point rule of degree 4: barycentric points and weights
/// relative to the triangle area.
pub const QUAD6: [([f64; 3], f64); 6] = {
    const A1: f64 = 0.445_948_490_915_965;
    const B1: f64 = 1.0 - 2.0 * A1;
    const W1: f64 = 0.223_381_589_678_011;
    const A2: f64 = 0.091_576_213_509_771;
    const B2: f64 = 1.0 - 2.0 * A2;
    const W2: f64 = 0.109_951_743_655_322;
    [
        ([A1, A1, B1], W1),
        ([A1, B1, A1], W1),
        ([B1, A1, A1], W1),
        ([A2, A2, B2], W2),
        ([A2, B2, A2], W2),
        ([B2, A2, A2], W2),
    ]
};

/// Per-macro `sqrt(∫ f²)` for the piecewise linear `f`; squares sum to the
/// square of [`l2_norm`].
pub fn local_l2_norms(h: &GridHierarchy, f: &GridFunction) -> Vec<f64> {
    let lat = f.lattice();
    let n = lat.n;
    par::map_range(h.num_macros(), |m| {
        let x = f.macro_values(m);
        let mut s = 0.0;
        for j in 0..n {
            let (r, up) = (lat.row(j), n + 1 - j);
            for i in 0..n - j {
                let k = r + i;
                let (a, b, c) = (x[k], x[k + 1], x[k + up]);
                s += a * a + b * b + c * c + (a + b + c) * (a + b + c);
                if i + j + 2 <= n {
                    let d = x[k + up + 1];
                    s += d * d + b * b + c * c + (d + b + c) * (d + b + c);
                }
            }
        }
        (s * h.macro_area(m) / (n * n) as f64 / 12.0).sqrt()
    })
}

pub fn l2_norm(h: &GridHierarchy, f: &GridFunction) -> f64 {
    local_l2_norms(h, f).iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Default minimum level of the error quadrature: plain 6-point rule on
/// every fine triangle. Raise it through [`exact_error_norm_at`] to check
/// that coarse errors of oscillatory problems are resolved.
pub const ERROR_QUADRATURE_LEVEL: usize = 0;

/// [`QUAD6`] on the `4^s` triangles of `s` uniform subdivisions.
pub fn composite_quad6(s: usize) -> Vec<([f64; 3], f64)> {
    let m = 1usize << s;
    let inv = 1.0 / m as f64;
    let scale = inv * inv;
    let mut out = Vec::with_capacity(6 * m * m);
    let mut push = |v: [[f64; 2]; 3]| {
        for (b, w) in QUAD6 {
            let x = b[0] * v[0][0] + b[1] * v[1][0] + b[2] * v[2][0];
            let y = b[0] * v[0][1] + b[1] * v[1][1] + b[2] * v[2][1];
            out.push(([1.0 - x - y, x, y], w * scale));
        }
    };
    for bj in 0..m {
        for ai in 0..m - bj {
            let (a, b) = (ai as f64 * inv, bj as f64 * inv);
            push([[a, b], [a + inv, b], [a, b + inv]]);
            if ai + bj + 2 <= m {
                push([[a + inv, b + inv], [a, b + inv], [a + inv, b]]);
            }
        }
    }
    out
}

/// `‖u - u_h‖` over the domain and per macro by [`QUAD6`] on every fine
/// triangle.
pub fn exact_error_norm(h: &GridHierarchy, p: &dyn ProblemSpec, uh: &GridFunction) -> Result<(f64, Vec<f64>)> {
    exact_error_norm_at(h, p, uh, ERROR_QUADRATURE_LEVEL)
}

/// As [`exact_error_norm`] with an explicit minimum quadrature level.
pub fn exact_error_norm_at(
    h: &GridHierarchy,
    p: &dyn ProblemSpec,
    uh: &GridFunction,
    min_level: usize,
) -> Result<(f64, Vec<f64>)> {
    let lat = uh.lattice();
    let n = lat.n;
    let rule = composite_quad6(min_level.saturating_sub(uh.level()));
    let locals = par::map_range(h.num_macros(), |m| {
        let pts = &h.macros[m].points;
        let x = uh.macro_values(m);
        let o = lattice_point(pts, n, 0.0, 0.0);
        let dx = {
            let q = lattice_point(pts, n, 1.0, 0.0);
            [q[0] - o[0], q[1] - o[1]]
        };
        let dy = {
            let q = lattice_point(pts, n, 0.0, 1.0);
            [q[0] - o[0], q[1] - o[1]]
        };
        // quadrature offsets relative to node (i, j) for up and down triangles
        let off = |l: [f64; 2]| [l[0] * dx[0] + l[1] * dy[0], l[0] * dx[1] + l[1] * dy[1]];
        let up_off: Vec<[f64; 2]> = rule.iter().map(|(b, _)| off([b[1], b[2]])).collect();
        let down_off: Vec<[f64; 2]> = rule.iter().map(|(b, _)| off([b[0] + b[2], b[0] + b[1]])).collect();
        let mut s = 0.0;
        for j in 0..n {
            let (r, up) = (lat.row(j), n + 1 - j);
            for i in 0..n - j {
                let k = r + i;
                let base = [
                    o[0] + i as f64 * dx[0] + j as f64 * dy[0],
                    o[1] + i as f64 * dx[1] + j as f64 * dy[1],
                ];
                let (a, b, c) = (x[k], x[k + 1], x[k + up]);
                for (q, (bary, w)) in rule.iter().enumerate() {
                    let uh = bary[0] * a + bary[1] * b + bary[2] * c;
                    let e = p.exact([base[0] + up_off[q][0], base[1] + up_off[q][1]]) - uh;
                    s += w * e * e;
                }
                if i + j + 2 <= n {
                    let d = x[k + up + 1];
                    for (q, (bary, w)) in rule.iter().enumerate() {
                        let uh = bary[0] * d + bary[1] * c + bary[2] * b;
                        let e = p.exact([base[0] + down_off[q][0], base[1] + down_off[q][1]]) - uh;
                        s += w * e * e;
                    }
                }
            }
        }
        (s * h.macro_area(m) / (n * n) as f64).sqrt()
    });
    let global = locals.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok((global, locals))
}
