//! Command-line front end.
//!
//! `klref solve|amr|pipeline|refine3d [--config FILE] [flags]`. Settings
//! come from the defaults, then the config file, then the flags. Exit code
//! 0 on success, 1 when a solve fails, 2 for usage and configuration
//! errors.

mod config;
pub mod report;

pub use config::{default_theta, RunConfig, KEYS, VALIDATION_MAX_CYCLES, VALIDATION_REL_CHANGE};

use crate::amr::{self, adapt, grading_report, AmrOutput, ConvergenceRecord, Phase, Scheme, SolvedStep};
use crate::error::{Error, Result};
use crate::estimator::{constants_c1_c2, effectivity_index, error_estimate};
use crate::fem::exact_error_norm;
use crate::hhg::{build_hierarchy, write_vtk, GridFunction};
use crate::mesh::{
    box_mesh, conformity_check, read_marks, read_mesh, refine_rg, write_mesh, MacroMesh, MarkSet,
};
use crate::multigrid::fmg;
use crate::problems::{problem_by_name, waves_derivatives, ProblemSpec, Waves};
use clap::{Args, Parser, Subcommand};
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Parser)]
#[command(name = "klref", version, about = "Adaptive coarse-grid refinement with hierarchical hybrid grids")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One FMG solve with error estimate.
    Solve(Opts),
    /// Runs a refinement scheme.
    Amr(Opts),
    /// Solve, estimate, refine, rebuild and solve again, with step timings.
    Pipeline(Opts),
    /// One red-green pass on a tetrahedral mesh file.
    Refine3d(Opts),
}

#[derive(Debug, Default, Args)]
pub struct Opts {
    /// Flat `key = value` file; keys are the long flag names.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// waves2d, lshape, affine or quadratic.
    #[arg(long)]
    pub problem: Option<String>,
    /// uniform, kplusl or kl.
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub ksteps: Option<usize>,
    #[arg(long)]
    pub nu: Option<usize>,
    #[arg(long)]
    pub j: Option<usize>,
    #[arg(long)]
    pub max_j: Option<usize>,
    /// scaled or unscaled.
    #[arg(long)]
    pub estimator: Option<String>,
    #[arg(long)]
    pub mark_fraction: Option<f64>,
    /// exact or estimated.
    #[arg(long)]
    pub driver: Option<String>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub vtk: bool,
    /// Cycle on the finest level until the exact error settles.
    #[arg(long)]
    pub validate: bool,
    /// Also solve on every coarse grid and every level of the final grid.
    #[arg(long)]
    pub reference: bool,
    /// Comma-separated `ν` values for an effectivity sweep.
    #[arg(long)]
    pub sweep_nu: Option<String>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    #[arg(long)]
    pub marks: Option<PathBuf>,
}

impl Opts {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut push = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k, v));
            }
        };
        let s = |x: &Option<usize>| x.map(|v| v.to_string());
        let f = |x: &Option<f64>| x.map(|v| format!("{v:?}"));
        let p = |x: &Option<PathBuf>| x.as_ref().map(|v| v.display().to_string());
        let b = |x: bool| x.then(|| "true".to_string());
        push("problem", self.problem.clone());
        push("scheme", self.scheme.clone());
        push("levels", s(&self.levels));
        push("ksteps", s(&self.ksteps));
        push("nu", s(&self.nu));
        push("j", s(&self.j));
        push("max-j", s(&self.max_j));
        push("estimator", self.estimator.clone());
        push("mark-fraction", f(&self.mark_fraction));
        push("driver", self.driver.clone());
        push("theta", f(&self.theta));
        push("alpha", f(&self.alpha));
        push("omega", f(&self.omega));
        push("out", p(&self.out));
        push("vtk", b(self.vtk));
        push("validate", b(self.validate));
        push("reference", b(self.reference));
        push("sweep-nu", self.sweep_nu.clone());
        push("dim", s(&self.dim));
        push("mesh", p(&self.mesh));
        push("marks", p(&self.marks));
        out
    }

    /// Defaults, then the config file, then the flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        for (k, v) in self.pairs() {
            cfg.set(k, &v)?;
        }
        Ok(cfg)
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Solver { .. } | Error::Resource { .. } | Error::Internal(_) => 1,
        Error::Config(_) | Error::Io { .. } | Error::Structural(_) | Error::Domain(_) => 2,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run_command(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run_command(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Solve(o) => cmd_solve(&o.resolve()?).map(|_| ()),
        Command::Amr(o) => cmd_amr(&o.resolve()?).map(|_| ()),
        Command::Pipeline(o) => cmd_pipeline(&o.resolve()?).map(|_| ()),
        Command::Refine3d(o) => cmd_refine3d(&o.resolve()?).map(|_| ()),
    }
}

fn problem(cfg: &RunConfig) -> Result<Box<dyn ProblemSpec>> {
    problem_by_name(&cfg.problem, cfg.alpha, cfg.omega)
}

fn initial_mesh(cfg: &RunConfig, p: &dyn ProblemSpec) -> Result<MacroMesh> {
    match &cfg.mesh {
        Some(path) => read_mesh(path),
        None => Ok(p.initial_mesh()),
    }
}

fn out_dir(cfg: &RunConfig) -> Result<&Path> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(format!("creating {}", cfg.out.display()), e))?;
    Ok(&cfg.out)
}

fn write_solution_vtk(step: &SolvedStep, p: &dyn ProblemSpec, path: &Path) -> Result<()> {
    let h = step.hierarchy;
    let uh = step.state.finest();
    let exact = GridFunction::interpolate(h, uh.level(), |x| p.exact(x))?;
    let mut err = exact.clone();
    err.axpy(-1.0, uh);
    write_vtk(h, uh.level(), &[("u_h", uh), ("u", &exact), ("error", &err)], path)
}

/// One hierarchy, one FMG solve, one estimate. Returns the summary record.
pub fn cmd_solve(cfg: &RunConfig) -> Result<ConvergenceRecord> {
    let p = problem(cfg)?;
    let a = cfg.amr_config();
    a.solver.validate()?;
    let mesh = initial_mesh(cfg, p.as_ref())?;
    let levels = a.levels;
    let h = build_hierarchy(&mesh, levels)?;
    let state = fmg(&h, p.as_ref(), &a.solver)?;
    let (error, locals) = match &state.exact_error {
        Some(e) => e.clone(),
        None => exact_error_norm(&h, p.as_ref(), state.finest())?,
    };
    let (base, _) = exact_error_norm(&h, p.as_ref(), &state.u[0])?;
    let volume = mesh.total_volume();
    let hbar = |elements: usize| (volume / elements as f64).sqrt();
    let eta = if a.j < levels {
        Some(error_estimate(&h, &state, a.j, a.estimator)?.eta)
    } else {
        None
    };
    let elements = h.num_macros() << (2 * levels);
    let base_rec = ConvergenceRecord {
        phase: Phase::Uniform,
        k: 0,
        level: 0,
        macros: h.num_macros(),
        elements: h.num_macros(),
        dofs: h.dof_map(0).num_free(),
        hbar: hbar(h.num_macros()),
        error: base,
        eta: None,
        rbar: f64::NAN,
    };
    let mut rec = ConvergenceRecord {
        level: levels,
        elements,
        dofs: h.dof_map(levels).num_free(),
        hbar: hbar(elements),
        error,
        eta,
        ..base_rec.clone()
    };
    rec.rbar = amr::errratio(&base_rec, &rec);

    let mut estimates = Vec::new();
    for j in 1..=a.max_j.min(levels.saturating_sub(1)) {
        let r = error_estimate(&h, &state, j, a.estimator)?;
        let eff = effectivity_index(&r, error, &locals);
        let (c1, c2) = constants_c1_c2(a.theta, 0.0, j)?;
        estimates.push(amr::EstimateRow {
            k: 0,
            j,
            kind: a.estimator,
            theta: r.theta,
            eta: r.eta,
            exact: error,
            gamma: eff.gamma,
            dgamma: eff.dgamma,
            c1,
            c2,
        });
    }

    let dir = out_dir(cfg)?;
    let nu = a.solver.nu;
    report::write(dir, "records.csv", &report::records_csv(&[(nu, &rec)]))?;
    let rows: Vec<_> = estimates.iter().map(|e| (nu, e)).collect();
    report::write(dir, "estimates.csv", &report::estimates_csv(&rows))?;
    report::write(dir, "telemetry.csv", &report::telemetry_csv(&state.telemetry))?;
    report::write(dir, "config.txt", &cfg.to_text())?;
    if cfg.vtk {
        let step = SolvedStep {
            phase: Phase::Uniform,
            k: 0,
            hierarchy: &h,
            state: &state,
        };
        write_solution_vtk(&step, p.as_ref(), &dir.join("solution.vtk"))?;
    }
    println!(
        "{} L={} nu={}: dofs={} error={:e} eta={} extra_cycles={}",
        p.name(),
        levels,
        nu,
        rec.dofs,
        rec.error,
        rec.eta.map_or("n/a".into(), |x| format!("{x:e}")),
        state.extra_cycles
    );
    Ok(rec)
}

/// Outputs of `amr`, one entry per `ν`.
pub struct AmrRun {
    pub runs: Vec<(usize, AmrOutput)>,
}

/// Runs the configured scheme, or one kℓ loop per `ν` of `sweep-nu`.
pub fn cmd_amr(cfg: &RunConfig) -> Result<AmrRun> {
    let p = problem(cfg)?;
    let base = cfg.amr_config();
    let mesh = initial_mesh(cfg, p.as_ref())?;
    let nus = if cfg.sweep_nu.is_empty() {
        vec![base.solver.nu]
    } else {
        if base.scheme != Scheme::Kl {
            return Err(Error::Config("sweep-nu needs the kl scheme".into()));
        }
        cfg.sweep_nu.clone()
    };
    let dir = out_dir(cfg)?.to_path_buf();
    let mut runs = Vec::new();
    for &nu in &nus {
        let mut a = base.clone();
        a.solver.nu = nu;
        let vtk_dir = dir.join("vtk");
        let mut observer = |step: &SolvedStep| -> Result<()> {
            std::fs::create_dir_all(&vtk_dir).map_err(|e| Error::io(format!("creating {}", vtk_dir.display()), e))?;
            let name = format!("nu{nu}_{}_k{}.vtk", step.phase.as_str(), step.k);
            write_solution_vtk(step, p.as_ref(), &vtk_dir.join(name))
        };
        let out = if cfg.vtk {
            amr::run(p.as_ref(), &mesh, &a, Some(&mut observer))?
        } else {
            amr::run(p.as_ref(), &mesh, &a, None)?
        };
        if let Some(last) = out.last() {
            println!(
                "{} {} nu={} K={} L={}: final macros={} dofs={} error={:e} rbar={:.3}",
                p.name(),
                a.scheme.as_str(),
                nu,
                a.ksteps,
                a.levels,
                last.macros,
                last.dofs,
                last.error,
                last.rbar
            );
        }
        runs.push((nu, out));
    }

    let records: Vec<_> = runs
        .iter()
        .flat_map(|(nu, o)| o.records.iter().chain(&o.reference).map(move |r| (*nu, r)))
        .collect();
    report::write(&dir, "records.csv", &report::records_csv(&records))?;
    let estimates: Vec<_> = runs.iter().flat_map(|(nu, o)| o.estimates.iter().map(move |e| (*nu, e))).collect();
    report::write(&dir, "estimates.csv", &report::estimates_csv(&estimates))?;
    report::write(&dir, "config.txt", &cfg.to_text())?;
    let mesh_dir = dir.join("meshes");
    std::fs::create_dir_all(&mesh_dir).map_err(|e| Error::io(format!("creating {}", mesh_dir.display()), e))?;
    let (nu0, first) = &runs[0];
    for (k, m) in first.meshes.iter().enumerate() {
        write_mesh(m, &mesh_dir.join(format!("nu{nu0}_k{k}.mesh")))?;
    }
    if let (Some(corner), Some(last)) = (p.singular_point(), first.meshes.last()) {
        let reports: Vec<_> = [0, base.levels]
            .iter()
            .map(|&l| grading_report(last, l, base.levels, corner))
            .collect();
        for r in &reports {
            println!(
                "grading level {}: upper {:.1}% lower {:.1}% kl {:.1}% of non-exempt elements",
                r.level,
                100.0 * r.upper_share(),
                100.0 * r.lower_share(),
                100.0 * r.kl_share()
            );
        }
        report::write(&dir, "grading.csv", &report::grading_csv(&reports))?;
    }
    Ok(AmrRun { runs })
}

/// Wall times of the pipeline steps, in order.
pub struct PipelineReport {
    pub steps: Vec<(&'static str, f64)>,
    pub elements: (usize, usize),
    pub records: Vec<ConvergenceRecord>,
}

/// Solve on `T_L^0`, estimate, refine, rebuild and solve on `T_L^1`; in
/// three dimensions the mesh part only.
pub fn cmd_pipeline(cfg: &RunConfig) -> Result<PipelineReport> {
    let rep = match cfg.dim {
        2 => pipeline_2d(cfg)?,
        3 => pipeline_3d(cfg)?,
        d => return Err(Error::Config(format!("dim must be 2 or 3, got {d}"))),
    };
    let dir = out_dir(cfg)?;
    report::write(dir, "timing.csv", &report::timing_csv(&rep.steps))?;
    if !rep.records.is_empty() {
        let nu = cfg.amr.solver.nu;
        let rows: Vec<_> = rep.records.iter().map(|r| (nu, r)).collect();
        report::write(dir, "records.csv", &report::records_csv(&rows))?;
    }
    report::write(dir, "config.txt", &cfg.to_text())?;
    let total: f64 = rep.steps.iter().map(|s| s.1).sum();
    for (name, t) in &rep.steps {
        println!("{name:>12}: {t:9.4} s ({:5.1}%)", 100.0 * t / total.max(f64::MIN_POSITIVE));
    }
    println!("elements {} -> {}", rep.elements.0, rep.elements.1);
    Ok(rep)
}

fn timed<T>(steps: &mut Vec<(&'static str, f64)>, name: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let t = Instant::now();
    let out = f()?;
    steps.push((name, t.elapsed().as_secs_f64()));
    Ok(out)
}

fn pipeline_2d(cfg: &RunConfig) -> Result<PipelineReport> {
    let p = problem(cfg)?;
    let a = cfg.amr_config();
    if a.levels < 2 {
        return Err(Error::Config("the pipeline estimates with j = 1 and needs levels >= 2".into()));
    }
    let mesh = initial_mesh(cfg, p.as_ref())?;
    let mut steps = Vec::new();
    let h0 = timed(&mut steps, "build0", || build_hierarchy(&mesh, a.levels))?;
    let s0 = timed(&mut steps, "solve0", || fmg(&h0, p.as_ref(), &a.solver))?;
    let est = timed(&mut steps, "estimate", || error_estimate(&h0, &s0, 1, a.estimator))?;
    let refined = timed(&mut steps, "refine", || adapt(&mesh, &est.local, a.fraction))?;
    let h1 = timed(&mut steps, "build1", || build_hierarchy(&refined, a.levels))?;
    let s1 = timed(&mut steps, "solve1", || fmg(&h1, p.as_ref(), &a.solver))?;
    let volume = mesh.total_volume();
    let mut records = Vec::new();
    for (k, (h, s)) in [(&h0, &s0), (&h1, &s1)].into_iter().enumerate() {
        let (error, _) = exact_error_norm(h, p.as_ref(), s.finest())?;
        let elements = h.num_macros() << (2 * a.levels);
        records.push(ConvergenceRecord {
            phase: Phase::Kl,
            k,
            level: a.levels,
            macros: h.num_macros(),
            elements,
            dofs: h.dof_map(a.levels).num_free(),
            hbar: (volume / elements as f64).sqrt(),
            error,
            eta: Some(error_estimate(h, s, 1, a.estimator)?.eta),
            rbar: f64::NAN,
        });
    }
    if cfg.vtk {
        let dir = out_dir(cfg)?;
        for (k, (h, s)) in [(&h0, &s0), (&h1, &s1)].into_iter().enumerate() {
            let step = SolvedStep {
                phase: Phase::Kl,
                k,
                hierarchy: h,
                state: s,
            };
            write_solution_vtk(&step, p.as_ref(), &dir.join(format!("pipeline_k{k}.vtk")))?;
        }
    }
    Ok(PipelineReport {
        steps,
        elements: (mesh.num_elements(), refined.num_elements()),
        records,
    })
}

/// `max_v |u(v) - u(c)|` over the vertices of each tetrahedron for the
/// three-dimensional waves function `w(x) w(y) w(z)`.
pub fn waves3d_indicator(mesh: &MacroMesh, waves: &Waves) -> Vec<f64> {
    let u = |p: [f64; 3]| p.iter().map(|&t| waves_derivatives(waves.alpha, waves.omega, t).0).product::<f64>();
    (0..mesh.num_elements())
        .map(|t| {
            let c = u(mesh.barycenter(t));
            mesh.elements[t]
                .vertices
                .iter()
                .map(|&v| (u(mesh.point(v)) - c).abs())
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Marking fraction of the three-dimensional pipeline.
pub const PIPELINE_3D_FRACTION: f64 = 0.125;

fn pipeline_3d(cfg: &RunConfig) -> Result<PipelineReport> {
    let d = Waves::default();
    let waves = Waves {
        alpha: cfg.alpha.unwrap_or(d.alpha),
        omega: cfg.omega.unwrap_or(d.omega),
    };
    let mut steps = Vec::new();
    let mesh = timed(&mut steps, "mesh", || match &cfg.mesh {
        Some(path) => read_mesh(path),
        None => Ok(box_mesh(3)),
    })?;
    if mesh.dim != 3 {
        return Err(Error::Config("the 3-d pipeline needs a tetrahedral mesh".into()));
    }
    let ind = timed(&mut steps, "indicator", || Ok(waves3d_indicator(&mesh, &waves)))?;
    let refined = timed(&mut steps, "refine", || adapt(&mesh, &ind, PIPELINE_3D_FRACTION))?;
    let hanging = timed(&mut steps, "conformity", || Ok(conformity_check(&refined)))?;
    if !hanging.is_empty() {
        return Err(Error::Internal(format!("{} hanging nodes after refinement", hanging.len())));
    }
    let volume = timed(&mut steps, "volume", || Ok(refined.total_volume()))?;
    if (volume - mesh.total_volume()).abs() > 1e-12 * volume {
        return Err(Error::Internal("refinement changed the volume".into()));
    }
    let dir = out_dir(cfg)?.to_path_buf();
    timed(&mut steps, "write", || write_mesh(&refined, &dir.join("refined.mesh")))?;
    Ok(PipelineReport {
        steps,
        elements: (mesh.num_elements(), refined.num_elements()),
        records: Vec::new(),
    })
}

/// Reads `mesh` and `marks`, refines once and writes `out/refined.mesh`.
pub fn cmd_refine3d(cfg: &RunConfig) -> Result<MacroMesh> {
    let path = cfg
        .mesh
        .as_ref()
        .ok_or_else(|| Error::Config("refine3d needs --mesh".into()))?;
    let mesh = read_mesh(path)?;
    if mesh.dim != 3 {
        return Err(Error::Config(format!("{} is not a tetrahedral mesh", path.display())));
    }
    let marks = match &cfg.marks {
        Some(m) => read_marks(m)?,
        None => MarkSet::new(),
    };
    let refined = refine_rg(&mesh, &marks)?;
    let hanging = conformity_check(&refined);
    let dir = out_dir(cfg)?;
    write_mesh(&refined, &dir.join("refined.mesh"))?;
    println!(
        "elements {} -> {} ({} green), hanging nodes: {}",
        mesh.num_elements(),
        refined.num_elements(),
        refined.num_green(),
        hanging.len()
    );
    Ok(refined)
}
