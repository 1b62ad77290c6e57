use super::*;
use crate::hhg::{build_hierarchy, SyncMode};
use crate::mesh::{lshape_mesh, unit_square_mesh, MacroMesh};
use crate::problems::{Affine, LShape, ProblemSpec, Quadratic, Waves};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Dense reference assembly straight from fine-triangle coordinates.
struct Dense {
    n: usize,
    a: Vec<Vec<f64>>,
    m: Vec<Vec<f64>>,
    tris: Vec<[usize; 3]>,
    pts: Vec<[f64; 2]>,
}

fn dense(h: &GridHierarchy, level: usize) -> Dense {
    let dm = h.dof_map(level);
    let lat = h.lattice(level);
    let n = dm.num_nodes();
    let mut pts = vec![[0.0; 2]; n];
    let mut tris = Vec::new();
    for mac in 0..h.num_macros() {
        let g = |i: usize, j: usize| dm.global_index(mac, i, j);
        for j in 0..=lat.n {
            for i in 0..=lat.n - j {
                pts[g(i, j)] = h.node_coordinates(mac, level, lat.idx(i, j)).unwrap();
            }
        }
        for j in 0..lat.n {
            for i in 0..lat.n - j {
                tris.push([g(i, j), g(i + 1, j), g(i, j + 1)]);
                if i + j + 2 <= lat.n {
                    tris.push([g(i + 1, j + 1), g(i, j + 1), g(i + 1, j)]);
                }
            }
        }
    }
    let mut a = vec![vec![0.0; n]; n];
    let mut m = vec![vec![0.0; n]; n];
    for t in &tris {
        let p = t.map(|k| pts[k]);
        let (b, c) = ([p[1][0] - p[0][0], p[1][1] - p[0][1]], [p[2][0] - p[0][0], p[2][1] - p[0][1]]);
        let area = 0.5 * (b[0] * c[1] - b[1] * c[0]).abs();
        // gradients via the inverse transpose of the Jacobian
        let det = b[0] * c[1] - b[1] * c[0];
        let g1 = [c[1] / det, -c[0] / det];
        let g2 = [-b[1] / det, b[0] / det];
        let g = [[-g1[0] - g2[0], -g1[1] - g2[1]], g1, g2];
        for r in 0..3 {
            for s in 0..3 {
                a[t[r]][t[s]] += area * (g[r][0] * g[s][0] + g[r][1] * g[s][1]);
                m[t[r]][t[s]] += area / 12.0 * if r == s { 2.0 } else { 1.0 };
            }
        }
    }
    Dense { n, a, m, tris, pts }
}

fn from_global(h: &GridHierarchy, level: usize, v: &[f64]) -> GridFunction {
    let dm = h.dof_map(level);
    let lat = h.lattice(level);
    let mut f = GridFunction::zeros(h, level).unwrap();
    for mac in 0..h.num_macros() {
        let x = f.macro_values_mut(mac);
        for j in 0..=lat.n {
            for i in 0..=lat.n - j {
                x[lat.idx(i, j)] = v[dm.global_index(mac, i, j)];
            }
        }
    }
    f
}

fn to_global(h: &GridHierarchy, f: &GridFunction) -> Vec<f64> {
    let dm = h.dof_map(f.level());
    let lat = f.lattice();
    let mut v = vec![f64::NAN; dm.num_nodes()];
    for mac in 0..h.num_macros() {
        for j in 0..=lat.n {
            for i in 0..=lat.n - j {
                let g = dm.global_index(mac, i, j);
                let x = f.macro_values(mac)[lat.idx(i, j)];
                assert!(v[g].is_nan() || v[g] == x, "inconsistent copies at node {g}");
                v[g] = x;
            }
        }
    }
    v
}

fn two_macro_mesh() -> MacroMesh {
    unit_square_mesh(1)
}

#[test]
fn matches_dense_assembly() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (mesh, level) in [(two_macro_mesh(), 2), (lshape_mesh(2), 3), (unit_square_mesh(4), 3)] {
        let h = build_hierarchy(&mesh, level).unwrap();
        let d = dense(&h, level);
        assert!(d.n <= 2000);
        let x: Vec<f64> = (0..d.n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let xf = from_global(&h, level, &x);
        for (op, mat) in [(OperatorP1::stiffness(level), &d.a), (OperatorP1::mass(level), &d.m)] {
            let y = to_global(&h, &op.apply(&h, &xf).unwrap());
            let scale = mat.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
            for i in 0..d.n {
                let yi: f64 = (0..d.n).map(|k| mat[i][k] * x[k]).sum();
                assert!((y[i] - yi).abs() <= 1e-12 * scale.max(1.0), "{:?} row {i}: {} vs {yi}", op.kind, y[i]);
            }
        }
    }
}

#[test]
fn kernel_and_partition_of_unity() {
    for (mesh, area) in [(unit_square_mesh(4), 1.0), (lshape_mesh(2), 3.0)] {
        let h = build_hierarchy(&mesh, 3).unwrap();
        let one = GridFunction::interpolate(&h, 3, |_| 1.0).unwrap();
        let ay = OperatorP1::stiffness(3).apply(&h, &one).unwrap();
        assert!(ay.max_abs() < 1e-12);
        let my = OperatorP1::mass(3).apply(&h, &one).unwrap();
        assert!((my.dot(&h, &one) - area).abs() < 1e-12);
        assert!((l2_norm(&h, &one) - area.sqrt()).abs() < 1e-12);
    }
}

#[test]
fn operators_symmetric_and_definite() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let h = build_hierarchy(&lshape_mesh(2), 3).unwrap();
    let n = h.dof_map(3).num_nodes();
    for _ in 0..5 {
        let x = from_global(&h, 3, &(0..n).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>());
        let y = from_global(&h, 3, &(0..n).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>());
        for op in [OperatorP1::stiffness(3), OperatorP1::mass(3)] {
            let (ax, ay) = (op.apply(&h, &x).unwrap(), op.apply(&h, &y).unwrap());
            let (l, r) = (ax.dot(&h, &y), x.dot(&h, &ay));
            assert!((l - r).abs() <= 1e-12 * l.abs().max(1.0));
            assert!(ax.dot(&h, &x) > 0.0);
        }
        // the mass norm agrees with the element-wise norm
        let mx = OperatorP1::mass(3).apply(&h, &x).unwrap();
        assert!((mx.dot(&h, &x).sqrt() - l2_norm(&h, &x)).abs() < 1e-12);
    }
}

#[test]
fn level_mismatch_is_structural() {
    let h = build_hierarchy(&two_macro_mesh(), 2).unwrap();
    let x = GridFunction::zeros(&h, 1).unwrap();
    assert!(matches!(
        OperatorP1::stiffness(2).apply(&h, &x),
        Err(crate::error::Error::Structural(_))
    ));
}

#[test]
fn load_vector_quadrature() {
    struct Poly(fn([f64; 2]) -> f64);
    impl ProblemSpec for Poly {
        fn name(&self) -> &str {
            "poly"
        }
        fn exact(&self, _: [f64; 2]) -> f64 {
            0.0
        }
        fn source(&self, p: [f64; 2]) -> f64 {
            (self.0)(p)
        }
        fn initial_mesh(&self) -> MacroMesh {
            unit_square_mesh(4)
        }
    }
    let h = build_hierarchy(&unit_square_mesh(4), 2).unwrap();
    let zero = load_vector(&h, &Poly(|_| 0.0), 2).unwrap();
    assert_eq!(zero.max_abs(), 0.0);
    let one = GridFunction::interpolate(&h, 2, |_| 1.0).unwrap();
    let b = load_vector(&h, &Poly(|_| 1.0), 2).unwrap();
    assert!((b.dot(&h, &one) - 1.0).abs() < 1e-12);
    // quadratic integrand: ∫ x y = 1/4 through the partition of unity
    let b = load_vector(&h, &Poly(|p| p[0] * p[1]), 2).unwrap();
    assert!((b.dot(&h, &one) - 0.25).abs() < 1e-12);
    // linear f: every entry exact, compared with M f_I (exact for P1 f)
    let f = |p: [f64; 2]| 1.0 + 2.0 * p[0] - 3.0 * p[1];
    let b = load_vector(&h, &Poly(f), 2).unwrap();
    let mf = OperatorP1::mass(2).apply(&h, &GridFunction::interpolate(&h, 2, f).unwrap()).unwrap();
    for (x, y) in b.data().iter().zip(mf.data()) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn load_vector_matches_dense_quadrature() {
    let p = Waves { alpha: 2.0, omega: 6.0 * PI };
    let h = build_hierarchy(&unit_square_mesh(4), 3).unwrap();
    let d = dense(&h, 3);
    let mut b = vec![0.0; d.n];
    for t in &d.tris {
        let q = t.map(|k| d.pts[k]);
        let area = 0.5 * ((q[1][0] - q[0][0]) * (q[2][1] - q[0][1]) - (q[1][1] - q[0][1]) * (q[2][0] - q[0][0])).abs();
        let mid = |a: usize, c: usize| p.source([0.5 * (q[a][0] + q[c][0]), 0.5 * (q[a][1] + q[c][1])]);
        for r in 0..3 {
            let (s, u) = ((r + 1) % 3, (r + 2) % 3);
            b[t[r]] += area / 6.0 * (mid(r, s) + mid(r, u));
        }
    }
    let got = to_global(&h, &load_vector(&h, &p, 3).unwrap());
    let scale = b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for (x, y) in got.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-12 * scale);
    }
}

#[test]
fn local_norms_partition() {
    let h = build_hierarchy(&unit_square_mesh(4), 2).unwrap();
    let one = GridFunction::interpolate(&h, 2, |_| 1.0).unwrap();
    for l in local_l2_norms(&h, &one) {
        assert!((l - (1.0f64 / 32.0).sqrt()).abs() < 1e-14);
    }
    let f = GridFunction::interpolate(&h, 2, |p| (5.0 * p[0]).sin() + p[1]).unwrap();
    let s: f64 = local_l2_norms(&h, &f).iter().map(|x| x * x).sum();
    assert!((s - l2_norm(&h, &f).powi(2)).abs() < 1e-12);
}

#[test]
fn six_point_rule_has_degree_four() {
    // ∫ over the reference triangle of x^a y^b = a! b! / (a+b+2)!
    let fact = |k: u32| (1..=k).product::<u32>() as f64;
    for a in 0..=4u32 {
        for b in 0..=4 - a {
            let q: f64 = QUAD6.iter().map(|(l, w)| w * 0.5 * l[1].powi(a as i32) * l[2].powi(b as i32)).sum();
            let exact = fact(a) * fact(b) / fact(a + b + 2);
            assert!((q - exact).abs() < 1e-14, "x^{a} y^{b}");
        }
    }
}

#[test]
fn exact_error_examples() {
    let h = build_hierarchy(&unit_square_mesh(4), 5).unwrap();
    let p = Affine::default();
    let u = GridFunction::interpolate(&h, 3, |x| p.exact(x)).unwrap();
    assert!(exact_error_norm(&h, &p, &u).unwrap().0 < 1e-12);

    struct One;
    impl ProblemSpec for One {
        fn name(&self) -> &str {
            "one"
        }
        fn exact(&self, _: [f64; 2]) -> f64 {
            1.0
        }
        fn source(&self, _: [f64; 2]) -> f64 {
            0.0
        }
        fn initial_mesh(&self) -> MacroMesh {
            unit_square_mesh(4)
        }
    }
    let z = GridFunction::zeros(&h, 2).unwrap();
    let (e, locals) = exact_error_norm(&h, &One, &z).unwrap();
    assert!((e - 1.0).abs() < 1e-12);
    assert_eq!(locals.len(), 32);

    let q = Quadratic;
    let errs: Vec<f64> = (2..=5)
        .map(|l| exact_error_norm(&h, &q, &GridFunction::interpolate(&h, l, |x| q.exact(x)).unwrap()).unwrap().0)
        .collect();
    for w in errs.windows(2) {
        assert!((w[0] / w[1] - 4.0).abs() < 0.04, "{errs:?}");
    }
}

#[test]
fn dirichlet_residuals() {
    let h = build_hierarchy(&lshape_mesh(2), 2).unwrap();
    let p = LShape;
    let sys = DirichletSystem::new(&h, &p, 2).unwrap();
    let ui = GridFunction::interpolate(&h, 2, |x| p.exact(x)).unwrap();
    let r = residual(&h, &ui, sys.rhs()).unwrap();
    assert!(l2_norm(&h, &r) > 1e-6);
    let a = Affine::default();
    let h = build_hierarchy(&unit_square_mesh(4), 2).unwrap();
    let sys = DirichletSystem::new(&h, &a, 2).unwrap();
    let ui = GridFunction::interpolate(&h, 2, |x| a.exact(x)).unwrap();
    assert!(residual(&h, &ui, sys.rhs()).unwrap().max_abs() < 1e-12);
    // the modified operator reproduces the right-hand side at the solution
    let y = sys.apply(&h, &ui).unwrap();
    let mut d = y.clone();
    d.axpy(-1.0, sys.rhs());
    assert!(d.max_abs() < 1e-12);
    let x0 = sys.initial_guess(&h).unwrap();
    let mut c = x0.clone();
    c.sync(&h, SyncMode::Replace);
    assert_eq!(c, x0);
}

#[test]
fn composite_rule_is_exact_and_resolves_oscillations() {
    let fact = |k: u32| (1..=k).product::<u32>() as f64;
    for s in 0..4 {
        let rule = composite_quad6(s);
        assert_eq!(rule.len(), 6 << (2 * s));
        for a in 0..=4u32 {
            for b in 0..=4 - a {
                let q: f64 = rule.iter().map(|(l, w)| w * 0.5 * l[1].powi(a as i32) * l[2].powi(b as i32)).sum();
                assert!((q - fact(a) * fact(b) / fact(a + b + 2)).abs() < 1e-14);
            }
        }
    }
    // ∫ sin²(40x) over the reference triangle, closed form
    let k = 40.0f64;
    let exact = 0.25 - (1.0 - (2.0 * k).cos()) / (8.0 * k * k);
    let q = |s| -> f64 { composite_quad6(s).iter().map(|(l, w)| w * 0.5 * (k * l[1]).sin().powi(2)).sum() };
    assert!((q(0) - exact).abs() > 1e-2);
    assert!((q(6) - exact).abs() < 1e-9);

    // raising the quadrature level is a no-op once the integrand is degree 4
    let h = build_hierarchy(&unit_square_mesh(2), 2).unwrap();
    let uh = GridFunction::zeros(&h, 2).unwrap();
    let (a, _) = exact_error_norm_at(&h, &Quadratic, &uh, 0).unwrap();
    let (b, _) = exact_error_norm_at(&h, &Quadratic, &uh, 5).unwrap();
    assert!((a - b).abs() < 1e-13 * a);
    assert!((a - (1.0f64 / 5.0).sqrt()).abs() < 1e-13);
}
