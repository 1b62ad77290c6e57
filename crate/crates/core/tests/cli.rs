use klref::mesh::{box_mesh, format_mesh, parse_mesh, read_mesh, red_refine_without_closure, write_marks, write_mesh, MarkSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

const SIX_PI: &str = "18.84955592153876";

fn klref(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_klref"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn csv(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn solve_smoke_and_schema() {
    let tmp = TempDir::new().unwrap();
    let out = klref(
        &["solve", "--problem", "waves2d", "--alpha", "2", "--omega", SIX_PI, "--levels", "3", "--nu", "2", "--out", "run"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let run = tmp.path().join("run");
    let golden = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/headers.txt")).unwrap();
    let mut lines = golden.lines();
    for file in ["records.csv", "estimates.csv", "telemetry.csv"] {
        assert_eq!(header(&run.join(file)), lines.next().unwrap(), "{file}");
    }
    let rows = csv(&run.join("records.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][3], "3");
    let err: f64 = rows[0][8].parse().unwrap();
    assert!(err > 0.0 && err < 1.0);
    assert_eq!(csv(&run.join("estimates.csv")).len(), 2);
}

#[test]
fn usage_errors_exit_two() {
    let tmp = TempDir::new().unwrap();
    let out = klref(&["solve", "--problem", "nope", "--out", "x"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
    assert_eq!(klref(&["frobnicate"], tmp.path()).status.code(), Some(2));
    assert_eq!(klref(&["solve", "--levels", "many"], tmp.path()).status.code(), Some(2));
    let out = klref(&["amr", "--scheme", "kplusl", "--driver", "estimated", "--levels", "3", "--out", "x"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let out = klref(&["refine3d", "--mesh", "missing.mesh", "--out", "x"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(klref(&["--help"], tmp.path()).status.code(), Some(0));
}

#[test]
fn solver_failure_exits_one() {
    let tmp = TempDir::new().unwrap();
    // a level past the supported range fails to allocate
    let out = klref(&["solve", "--levels", "40", "--out", "x"], tmp.path());
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn validation_mode_on_affine() {
    let tmp = TempDir::new().unwrap();
    let out = klref(&["solve", "--problem", "affine", "--levels", "3", "--validate", "--out", "run"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let rows = csv(&tmp.path().join("run/records.csv"));
    assert!(rows[0][8].parse::<f64>().unwrap() <= 1e-10);
}

#[test]
fn flags_override_config_file() {
    let tmp = TempDir::new().unwrap();
    std::fs::write(
        tmp.path().join("run.cfg"),
        format!("# tiny run\nproblem = waves2d\nalpha = 2\nomega = {SIX_PI}\nlevels = 2\nnu = 1\nout = fromfile\n"),
    )
    .unwrap();
    let out = klref(&["solve", "--config", "run.cfg", "--levels", "3"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let rows = csv(&tmp.path().join("fromfile/records.csv"));
    assert_eq!((rows[0][0].as_str(), rows[0][3].as_str()), ("1", "3"));
    let cfg = std::fs::read_to_string(tmp.path().join("fromfile/config.txt")).unwrap();
    assert!(cfg.contains("levels = 3") && cfg.contains("nu = 1"));
}

#[test]
fn amr_smoke_run() {
    let tmp = TempDir::new().unwrap();
    let args = ["amr", "--problem", "waves2d", "--alpha", "2", "--omega", SIX_PI, "--scheme", "kl", "--ksteps", "2", "--levels", "3", "--out", "run", "--vtk"];
    let out = klref(&args, tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let run = tmp.path().join("run");
    let rows = csv(&run.join("records.csv"));
    assert_eq!(rows.len(), 3);
    let dofs: Vec<usize> = rows.iter().map(|r| r[6].parse().unwrap()).collect();
    assert!(dofs.windows(2).all(|w| w[1] > w[0]));
    for (k, row) in rows.iter().enumerate() {
        let m = read_mesh(&run.join(format!("meshes/nu2_k{k}.mesh"))).unwrap();
        assert_eq!(m.num_elements(), row[4].parse::<usize>().unwrap());
    }
    assert!(run.join("vtk/nu2_kl_k2.vtk").exists());
    // deterministic
    let again = klref(&[&args[..14], &["again"]].concat(), tmp.path());
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(
        std::fs::read_to_string(run.join("records.csv")).unwrap(),
        std::fs::read_to_string(tmp.path().join("again/records.csv")).unwrap()
    );

    let out = klref(&["amr", "--problem", "lshape", "--scheme", "kl", "--ksteps", "1", "--levels", "3", "--out", "ls"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let grading = csv(&tmp.path().join("ls/grading.csv"));
    assert!(!grading.is_empty());
}

#[test]
fn pipeline_2d_steps() {
    let tmp = TempDir::new().unwrap();
    let out = klref(&["pipeline", "--problem", "waves2d", "--levels", "5", "--out", "p"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv(&tmp.path().join("p/timing.csv"));
    assert_eq!(rows.len(), 6);
    let share = |name: &str| -> f64 { rows.iter().find(|r| r[0] == name).unwrap()[2].parse().unwrap() };
    let total: f64 = rows.iter().map(|r| r[2].parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
    eprintln!("estimate + refine share: {:.3}", share("estimate") + share("refine"));
    assert!(share("estimate") + share("refine") < 0.10);
    assert_eq!(csv(&tmp.path().join("p/records.csv")).len(), 2);
}

#[test]
fn pipeline_3d_growth() {
    let tmp = TempDir::new().unwrap();
    let out = klref(&["pipeline", "--dim", "3", "--out", "p"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(csv(&tmp.path().join("p/timing.csv")).len(), 6);
    let refined = read_mesh(&tmp.path().join("p/refined.mesh")).unwrap();
    let n = refined.num_elements();
    assert!((314..=582).contains(&n), "{n} elements");
}

#[test]
fn refine3d_tool() {
    let tmp = TempDir::new().unwrap();
    let single = "dim 3\nvertices 4\n0 0 0 0 1\n1 1 0 0 1\n2 0 1 0 1\n3 0 0 1 1\nelements 1\n0 0 1 2 3\n";
    std::fs::write(tmp.path().join("tet.mesh"), single).unwrap();
    std::fs::write(tmp.path().join("marks.txt"), "0\n").unwrap();
    let out = klref(&["refine3d", "--mesh", "tet.mesh", "--marks", "marks.txt", "--out", "r"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_mesh(&tmp.path().join("r/refined.mesh")).unwrap().num_elements(), 8);
    assert!(String::from_utf8_lossy(&out.stdout).contains("hanging nodes: 0"));

    // no marks: same file
    let m = box_mesh(1);
    write_mesh(&m, &tmp.path().join("box.mesh")).unwrap();
    std::fs::write(tmp.path().join("none.txt"), "# nothing\n").unwrap();
    let out = klref(&["refine3d", "--mesh", "box.mesh", "--marks", "none.txt", "--out", "same"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        std::fs::read_to_string(tmp.path().join("box.mesh")).unwrap(),
        std::fs::read_to_string(tmp.path().join("same/refined.mesh")).unwrap()
    );

    // golden output for one marked cube tetrahedron
    std::fs::write(tmp.path().join("first.txt"), "0\n").unwrap();
    let out = klref(&["refine3d", "--mesh", "box.mesh", "--marks", "first.txt", "--out", "g"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/box1_mark0.mesh");
    if std::env::var_os("KLREF_BLESS").is_some() {
        std::fs::copy(tmp.path().join("g/refined.mesh"), &golden).unwrap();
    }
    assert_eq!(
        std::fs::read_to_string(tmp.path().join("g/refined.mesh")).unwrap(),
        std::fs::read_to_string(golden).unwrap()
    );

    // a mesh with hanging nodes is rejected
    let hanging = red_refine_without_closure(&m, &[0].into_iter().collect()).unwrap();
    std::fs::write(tmp.path().join("bad.mesh"), format_mesh(&hanging)).unwrap();
    assert!(parse_mesh(&format_mesh(&hanging)).is_err());
    let out = klref(&["refine3d", "--mesh", "bad.mesh", "--out", "b"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn refine3d_random_marks() {
    let tmp = TempDir::new().unwrap();
    let m = box_mesh(2);
    write_mesh(&m, &tmp.path().join("box.mesh")).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..100 {
        let count = rng.gen_range(1..=8);
        let marks: MarkSet = (0..count).map(|_| rng.gen_range(0..m.num_elements())).collect();
        write_marks(&marks, &tmp.path().join("marks.txt")).unwrap();
        let out = klref(&["refine3d", "--mesh", "box.mesh", "--marks", "marks.txt", "--out", "r"], tmp.path());
        assert_eq!(out.status.code(), Some(0), "trial {trial}");
        assert!(String::from_utf8_lossy(&out.stdout).contains("hanging nodes: 0"), "trial {trial}");
        read_mesh(&tmp.path().join("r/refined.mesh")).unwrap();
    }
}
