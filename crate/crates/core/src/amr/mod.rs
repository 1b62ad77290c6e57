//! Refinement schemes: uniform refinement, adaptive coarse refinement
//! followed by uniform refinement (k+ℓ), and interleaved kℓ-refinement.
//!
//! Marking always happens on the green-reverted coarse mesh: indicators of
//! green children are combined into their parent before the top fraction is
//! selected.

mod grading;

pub use grading::{fit_constant, grading_report, GradingRecord, GradingReport};

use crate::error::{Error, Result};
use crate::estimator::{constants_c1_c2, effectivity_index, error_estimate, EstimatorKind};
use crate::fem::exact_error_norm;
use crate::hhg::{build_hierarchy, GridHierarchy};
use crate::mesh::{mark_top_fraction, refine_rg_2d, refine_rg_3d, revert_green_mapped, MacroMesh};
use crate::multigrid::{fmg, FmgState, SolverConfig};
use crate::problems::ProblemSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Uniform,
    KPlusL,
    Kl,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Uniform => "uniform",
            Scheme::KPlusL => "kplusl",
            Scheme::Kl => "kl",
        }
    }
}

/// Source of the per-macro refinement indicator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Driver {
    /// Exact local errors `‖e‖_T`.
    Exact,
    /// Estimated local indicators `η_T`.
    Estimated,
}

impl Driver {
    pub fn as_str(self) -> &'static str {
        match self {
            Driver::Exact => "exact",
            Driver::Estimated => "estimated",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AmrConfig {
    pub scheme: Scheme,
    /// Adaptive steps `K`.
    pub ksteps: usize,
    /// Structured levels `L`.
    pub levels: usize,
    pub fraction: f64,
    pub solver: SolverConfig,
    pub j: usize,
    pub estimator: EstimatorKind,
    pub driver: Driver,
    /// Reference convergence factor for the effectivity bounds.
    pub theta: f64,
    /// Largest `j` evaluated in the effectivity table.
    pub max_j: usize,
    /// Also solve on every `T_0^k` and every `T_ℓ^K` of a kℓ run.
    pub reference_curves: bool,
}

impl Default for AmrConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Kl,
            ksteps: 10,
            levels: 8,
            fraction: 0.10,
            solver: SolverConfig::default(),
            j: 1,
            estimator: EstimatorKind::Unscaled,
            driver: Driver::Exact,
            theta: 0.25,
            max_j: 4,
            reference_curves: false,
        }
    }
}

impl AmrConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels < 1 {
            return Err(Error::Config("levels must be at least 1".into()));
        }
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(Error::Config(format!("mark fraction {} outside (0, 1]", self.fraction)));
        }
        if self.j < 1 {
            return Err(Error::Config("j must be at least 1".into()));
        }
        if self.driver == Driver::Estimated {
            if self.scheme == Scheme::KPlusL {
                return Err(Error::Config(
                    "the estimated driver needs a hierarchy; k+l marks on the coarse grid only".into(),
                ));
            }
            if self.j + 1 > self.levels {
                return Err(Error::Config(format!("j = {} needs at least {} levels", self.j, self.j + 1)));
            }
        }
        self.solver.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    /// Uniform refinement of the initial mesh.
    Uniform,
    /// Coarse-grid solves of the adaptive loop of k+ℓ.
    Coarse,
    /// Uniform refinement of the final adaptive coarse grid.
    Fine,
    /// Finest-level solves of the kℓ loop.
    Kl,
    /// Reference coarse-grid solve on a kℓ coarse grid.
    RefCoarse,
    /// Reference solve on `T_ℓ^K` of a kℓ run.
    RefFine,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Uniform => "uniform",
            Phase::Coarse => "k",
            Phase::Fine => "l",
            Phase::Kl => "kl",
            Phase::RefCoarse => "ref-k",
            Phase::RefFine => "ref-l",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRecord {
    pub phase: Phase,
    pub k: usize,
    pub level: usize,
    pub macros: usize,
    /// Fine elements `#T_ℓ^k`.
    pub elements: usize,
    /// Free unknowns.
    pub dofs: usize,
    /// `(|Ω| / #T)^{1/d}`.
    pub hbar: f64,
    pub error: f64,
    /// `η_j` when the hierarchy is deep enough.
    pub eta: Option<f64>,
    /// NaN when the base error vanishes.
    pub rbar: f64,
}

/// Base errors at or below this are rounding noise and leave `r̄` undefined.
pub const NEGLIGIBLE_ERROR: f64 = 1e-13;

/// `r̄ = H̄² ‖e_h̄‖ / (h̄² ‖e_H̄‖)`; NaN when the base error is negligible.
pub fn errratio(base: &ConvergenceRecord, current: &ConvergenceRecord) -> f64 {
    if base.error <= NEGLIGIBLE_ERROR || current.hbar <= 0.0 {
        return f64::NAN;
    }
    base.hbar.powi(2) * current.error / (current.hbar.powi(2) * base.error)
}

/// One row of the effectivity table.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateRow {
    pub k: usize,
    pub j: usize,
    pub kind: EstimatorKind,
    pub theta: f64,
    pub eta: f64,
    pub exact: f64,
    pub gamma: f64,
    pub dgamma: f64,
    pub c1: f64,
    pub c2: f64,
}

impl EstimateRow {
    /// Whether `γ` lies within `[C1, C2]` rounded to two decimals.
    pub fn within(&self) -> bool {
        let lo = (self.c1 * 100.0).round() / 100.0;
        let hi = (self.c2 * 100.0).round() / 100.0;
        self.gamma >= lo && self.gamma <= hi
    }
}

/// Everything a run produces.
#[derive(Clone, Debug, Default)]
pub struct AmrOutput {
    pub records: Vec<ConvergenceRecord>,
    /// Reference solves of a kℓ run, see [`AmrConfig::reference_curves`].
    pub reference: Vec<ConvergenceRecord>,
    pub estimates: Vec<EstimateRow>,
    /// Coarse grids `T_0^k`, `k = 0..=K`.
    pub meshes: Vec<MacroMesh>,
}

impl AmrOutput {
    pub fn last(&self) -> Option<&ConvergenceRecord> {
        self.records.last()
    }

    pub fn phase(&self, phase: Phase) -> impl Iterator<Item = &ConvergenceRecord> {
        self.records.iter().chain(&self.reference).filter(move |r| r.phase == phase)
    }
}

/// A solved level handed to observers, e.g. for VTK output.
pub struct SolvedStep<'a> {
    pub phase: Phase,
    pub k: usize,
    pub hierarchy: &'a GridHierarchy,
    pub state: &'a FmgState,
}

pub type Observer<'a> = dyn FnMut(&SolvedStep) -> Result<()> + 'a;

fn fine_elements(h: &GridHierarchy, level: usize) -> usize {
    h.num_macros() << (2 * level)
}

struct Ctx<'p, 'o, 'f> {
    problem: &'p dyn ProblemSpec,
    cfg: &'p AmrConfig,
    volume: f64,
    dim: usize,
    base: Option<ConvergenceRecord>,
    out: AmrOutput,
    observer: Option<&'o mut Observer<'f>>,
}

impl Ctx<'_, '_, '_> {
    fn record(&mut self, phase: Phase, k: usize, h: &GridHierarchy, state: &FmgState, level: usize) -> Result<Vec<f64>> {
        let (error, locals) = if level == state.max_level() {
            match &state.exact_error {
                Some(e) => e.clone(),
                None => exact_error_norm(h, self.problem, state.finest())?,
            }
        } else {
            exact_error_norm(h, self.problem, &state.u[level])?
        };
        let eta = if level == state.max_level() && self.cfg.j < level {
            Some(error_estimate(h, state, self.cfg.j, self.cfg.estimator)?.eta)
        } else {
            None
        };
        let elements = fine_elements(h, level);
        let mut rec = ConvergenceRecord {
            phase,
            k,
            level,
            macros: h.num_macros(),
            elements,
            dofs: h.dof_map(level).num_free(),
            hbar: (self.volume / elements as f64).powf(1.0 / self.dim as f64),
            error,
            eta,
            rbar: f64::NAN,
        };
        if self.base.is_none() {
            self.base = Some(rec.clone());
        }
        rec.rbar = errratio(self.base.as_ref().expect("base set above"), &rec);
        if matches!(phase, Phase::RefCoarse | Phase::RefFine) {
            self.out.reference.push(rec);
        } else {
            self.out.records.push(rec);
        }
        Ok(locals)
    }

    fn notify(&mut self, phase: Phase, k: usize, h: &GridHierarchy, state: &FmgState) -> Result<()> {
        match self.observer.as_mut() {
            Some(f) => f(&SolvedStep {
                phase,
                k,
                hierarchy: h,
                state,
            }),
            None => Ok(()),
        }
    }

    fn estimates(&mut self, k: usize, h: &GridHierarchy, state: &FmgState, exact: f64, locals: &[f64]) -> Result<()> {
        let top = state.max_level();
        for j in 1..=self.cfg.max_j.min(top.saturating_sub(1)) {
            let report = error_estimate(h, state, j, self.cfg.estimator)?;
            let eff = effectivity_index(&report, exact, locals);
            let (c1, c2) = constants_c1_c2(self.cfg.theta, 0.0, j)?;
            self.out.estimates.push(EstimateRow {
                k,
                j,
                kind: self.cfg.estimator,
                theta: report.theta,
                eta: report.eta,
                exact,
                gamma: eff.gamma,
                dgamma: eff.dgamma,
                c1,
                c2,
            });
        }
        Ok(())
    }

    /// Solves on `T_0 .. T_L` of `mesh` with one FMG run, recording the
    /// intermediate levels. Extra finest-level cycles only touch level `L`,
    /// so other levels are solved separately in that case.
    fn ladder(&mut self, phase: Phase, k: usize, mesh: &MacroMesh, top: usize) -> Result<()> {
        let fixed = matches!(self.cfg.solver.finest, crate::multigrid::FinestPolicy::Fixed);
        if fixed {
            let h = build_hierarchy(mesh, top)?;
            let state = fmg(&h, self.problem, &self.cfg.solver)?;
            for level in 0..=top {
                self.record(phase, k, &h, &state, level)?;
            }
            self.notify(phase, k, &h, &state)?;
        } else {
            for level in 0..=top {
                let h = build_hierarchy(mesh, level)?;
                let state = fmg(&h, self.problem, &self.cfg.solver)?;
                self.record(phase, k, &h, &state, level)?;
                self.notify(phase, k, &h, &state)?;
            }
        }
        Ok(())
    }

    fn solve_at(&mut self, phase: Phase, k: usize, mesh: &MacroMesh, level: usize) -> Result<(GridHierarchy, FmgState, Vec<f64>)> {
        let h = build_hierarchy(mesh, level)?;
        let state = fmg(&h, self.problem, &self.cfg.solver)?;
        let locals = self.record(phase, k, &h, &state, level)?;
        self.notify(phase, k, &h, &state)?;
        Ok((h, state, locals))
    }

    fn base_record(&mut self, mesh: &MacroMesh) -> Result<()> {
        let h = build_hierarchy(mesh, 0)?;
        let state = fmg(&h, self.problem, &self.cfg.solver)?;
        let (error, _) = exact_error_norm(&h, self.problem, state.finest())?;
        self.base = Some(ConvergenceRecord {
            phase: Phase::Uniform,
            k: 0,
            level: 0,
            macros: h.num_macros(),
            elements: h.num_macros(),
            dofs: h.dof_map(0).num_free(),
            hbar: (self.volume / h.num_macros() as f64).powf(1.0 / self.dim as f64),
            error,
            eta: None,
            rbar: f64::NAN,
        });
        let base = self.base.as_mut().expect("base set above");
        base.rbar = errratio(base, base);
        Ok(())
    }
}

/// One adaptive step on the coarse mesh: revert green closures, combine
/// indicators onto the restored parents, mark and refine.
pub fn adapt(mesh: &MacroMesh, indicator: &[f64], fraction: f64) -> Result<MacroMesh> {
    if indicator.len() != mesh.num_elements() {
        return Err(Error::structural(format!(
            "indicator has {} entries for {} elements",
            indicator.len(),
            mesh.num_elements()
        )));
    }
    let (reverted, map) = revert_green_mapped(mesh)?;
    let mut combined = vec![0.0; reverted.num_elements()];
    for (old, &new) in map.iter().enumerate() {
        combined[new] += indicator[old] * indicator[old];
    }
    for x in &mut combined {
        *x = x.sqrt();
    }
    let marks = mark_top_fraction(&reverted, &combined, fraction)?;
    if reverted.dim == 2 {
        refine_rg_2d(&reverted, &marks)
    } else {
        refine_rg_3d(&reverted, &marks)
    }
}

fn context<'p, 'o, 'f>(
    problem: &'p dyn ProblemSpec,
    mesh: &MacroMesh,
    cfg: &'p AmrConfig,
    observer: Option<&'o mut Observer<'f>>,
) -> Result<Ctx<'p, 'o, 'f>> {
    cfg.validate()?;
    Ok(Ctx {
        problem,
        cfg,
        volume: mesh.total_volume(),
        dim: mesh.dim,
        base: None,
        out: AmrOutput {
            meshes: vec![mesh.clone()],
            ..Default::default()
        },
        observer,
    })
}

/// Solves on `T_ℓ^0` for `ℓ = 0..=L`.
pub fn run_uniform(problem: &dyn ProblemSpec, mesh: &MacroMesh, cfg: &AmrConfig) -> Result<AmrOutput> {
    run_uniform_observed(problem, mesh, cfg, None)
}

pub fn run_uniform_observed(
    problem: &dyn ProblemSpec,
    mesh: &MacroMesh,
    cfg: &AmrConfig,
    observer: Option<&mut Observer<'_>>,
) -> Result<AmrOutput> {
    let mut ctx = context(problem, mesh, cfg, observer)?;
    ctx.ladder(Phase::Uniform, 0, mesh, cfg.levels)?;
    Ok(ctx.out)
}

/// `K` adaptive steps driven by coarse-grid solves, then `L` uniform
/// refinements of `T_0^K`.
pub fn run_k_plus_l(problem: &dyn ProblemSpec, mesh: &MacroMesh, cfg: &AmrConfig) -> Result<AmrOutput> {
    run_k_plus_l_observed(problem, mesh, cfg, None)
}

pub fn run_k_plus_l_observed(
    problem: &dyn ProblemSpec,
    mesh: &MacroMesh,
    cfg: &AmrConfig,
    observer: Option<&mut Observer<'_>>,
) -> Result<AmrOutput> {
    let mut ctx = context(problem, mesh, cfg, observer)?;
    let mut current = mesh.clone();
    for k in 0..cfg.ksteps {
        let (_, _, locals) = ctx.solve_at(Phase::Coarse, k, &current, 0)?;
        current = adapt(&current, &locals, cfg.fraction)?;
        ctx.out.meshes.push(current.clone());
    }
    ctx.ladder(if cfg.ksteps == 0 { Phase::Uniform } else { Phase::Fine }, cfg.ksteps, &current, cfg.levels)?;
    Ok(ctx.out)
}

/// kℓ-refinement: every adaptive step solves on `T_L^k` and marks with
/// finest-level information. Solutions are not carried between steps.
pub fn run_kl(problem: &dyn ProblemSpec, mesh: &MacroMesh, cfg: &AmrConfig) -> Result<AmrOutput> {
    run_kl_observed(problem, mesh, cfg, None)
}

pub fn run_kl_observed(
    problem: &dyn ProblemSpec,
    mesh: &MacroMesh,
    cfg: &AmrConfig,
    observer: Option<&mut Observer<'_>>,
) -> Result<AmrOutput> {
    let mut ctx = context(problem, mesh, cfg, observer)?;
    ctx.base_record(mesh)?;
    let mut current = mesh.clone();
    for k in 0..=cfg.ksteps {
        let (h, state, locals) = ctx.solve_at(Phase::Kl, k, &current, cfg.levels)?;
        let exact = ctx.out.records.last().map_or(0.0, |r| r.error);
        ctx.estimates(k, &h, &state, exact, &locals)?;
        if cfg.reference_curves {
            ctx.solve_at(Phase::RefCoarse, k, &current, 0)?;
            if k == cfg.ksteps {
                for level in 1..cfg.levels {
                    ctx.record(Phase::RefFine, k, &h, &state, level)?;
                }
            }
        }
        if k == cfg.ksteps {
            break;
        }
        let indicator = match cfg.driver {
            Driver::Exact => locals,
            Driver::Estimated => error_estimate(&h, &state, cfg.j, cfg.estimator)?.local,
        };
        drop(state);
        drop(h);
        current = adapt(&current, &indicator, cfg.fraction)?;
        ctx.out.meshes.push(current.clone());
    }
    Ok(ctx.out)
}

/// Dispatches on `cfg.scheme`.
pub fn run(problem: &dyn ProblemSpec, mesh: &MacroMesh, cfg: &AmrConfig, observer: Option<&mut Observer<'_>>) -> Result<AmrOutput> {
    match cfg.scheme {
        Scheme::Uniform => run_uniform_observed(problem, mesh, cfg, observer),
        Scheme::KPlusL => run_k_plus_l_observed(problem, mesh, cfg, observer),
        Scheme::Kl => run_kl_observed(problem, mesh, cfg, observer),
    }
}

/// Least-squares slope of `log e` against `log h̄` over the last `n`
/// records.
pub fn loglog_slope(records: &[ConvergenceRecord], n: usize) -> f64 {
    let tail = &records[records.len().saturating_sub(n)..];
    let pts: Vec<(f64, f64)> = tail.iter().map(|r| (r.hbar.ln(), r.error.ln())).collect();
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (sx / m, sy / m);
    let (num, den) = pts
        .iter()
        .fold((0.0, 0.0), |(n, d), p| (n + (p.0 - mx) * (p.1 - my), d + (p.0 - mx).powi(2)));
    num / den
}
