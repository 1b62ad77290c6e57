use klref::mesh::{
    box_mesh, conformity_check, lshape_mesh, mesh_quality, refine_rg, refine_rg_3d, revert_green_mapped, unit_square_mesh,
    ElementState, GreenType, MacroMesh, MacroVertex, MarkSet,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_marks(rng: &mut ChaCha8Rng, n: usize) -> MarkSet {
    let count = rng.gen_range(1..=(n / 5).max(1));
    (0..count).map(|_| rng.gen_range(0..n)).collect()
}

fn check(mesh: &MacroMesh, volume: f64) {
    assert!(conformity_check(mesh).is_empty());
    let v = mesh.total_volume();
    assert!((v - volume).abs() <= 1e-12 * volume, "volume {v} vs {volume}");
    for e in &mesh.elements {
        assert!(mesh.signed_volume(&e.vertices) > 0.0);
        if let Some(p) = e.parent {
            // a green child's parent is never green itself
            assert!(e.is_green());
            let _ = p;
        }
    }
    let (reverted, _) = revert_green_mapped(mesh).unwrap();
    assert_eq!(reverted.num_green(), 0);
    assert!((reverted.total_volume() - volume).abs() <= 1e-12 * volume);
}

fn green_group_sizes(mesh: &MacroMesh) -> Vec<(GreenType, usize)> {
    let mut by_parent = std::collections::BTreeMap::new();
    for e in &mesh.elements {
        if let (ElementState::GreenChild(t), Some(p)) = (e.state, e.parent) {
            by_parent.entry(p).or_insert((t, 0)).1 += 1;
        }
    }
    by_parent.into_values().collect()
}

#[test]
fn random_planar_sequences_stay_conforming() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..60 {
        let mut m = if trial % 2 == 0 { unit_square_mesh(2) } else { lshape_mesh(1) };
        let vol = m.total_volume();
        for _ in 0..4 {
            let marks = random_marks(&mut rng, m.num_elements());
            m = refine_rg(&m, &marks).unwrap();
            check(&m, vol);
            for (t, n) in green_group_sizes(&m) {
                assert_eq!(n, t.children());
            }
        }
    }
}

#[test]
fn random_tetrahedral_sequences_stay_conforming() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let mut m = box_mesh(1);
        for _ in 0..3 {
            let marks = random_marks(&mut rng, m.num_elements());
            m = refine_rg(&m, &marks).unwrap();
            check(&m, 1.0);
            for (t, n) in green_group_sizes(&m) {
                assert_eq!(n, t.children());
            }
        }
    }
}

#[test]
fn red_shapes_fall_into_few_classes() {
    // Track one representative per similarity class over eight generations.
    let s = 1.0 / 2f64.sqrt();
    let start = [[1.0, 0.0, -s], [-1.0, 0.0, -s], [0.0, 1.0, s], [0.0, -1.0, s]];
    let classify = |m: &MacroMesh, id: usize| {
        let mut l: Vec<f64> = m.elements[id]
            .edges()
            .into_iter()
            .map(|(a, b)| {
                let (p, q) = (m.point(a), m.point(b));
                (0..3).map(|k| (p[k] - q[k]).powi(2)).sum::<f64>().sqrt()
            })
            .collect();
        l.sort_by(f64::total_cmp);
        let h = l[5];
        l.iter().map(|x| (x / h * 1e9).round() as i64).collect::<Vec<_>>()
    };
    let mut reps: Vec<[[f64; 3]; 4]> = vec![start];
    let mut min_quality = Vec::new();
    for _ in 0..8 {
        let mut next = std::collections::BTreeMap::new();
        let mut q = f64::INFINITY;
        for r in &reps {
            let v = r.iter().map(|&coords| MacroVertex { coords, boundary: true }).collect();
            let m = MacroMesh::new(3, v, vec![vec![0, 1, 2, 3]]).unwrap();
            let m = refine_rg_3d(&m, &[0].into_iter().collect()).unwrap();
            for (id, eq) in mesh_quality(&m).into_iter().enumerate() {
                q = q.min(eq.min_angle);
                let tet = m.elements[id].vertices.iter().map(|&v| m.point(v)).collect::<Vec<_>>();
                next.entry(classify(&m, id)).or_insert([tet[0], tet[1], tet[2], tet[3]]);
            }
        }
        reps = next.into_values().collect();
        min_quality.push(q);
    }
    assert!(reps.len() <= 8, "{} classes", reps.len());
    for w in min_quality.windows(2).skip(1) {
        assert!(w[1] >= w[0] - 1e-12);
    }
}
