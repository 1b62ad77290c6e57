//! Geometric multigrid on the lattice hierarchy.

mod smoother;
mod transfer;

pub use smoother::gauss_seidel;
pub use transfer::{prolongate, prolongate_add, prolongate_to, restrict, restrict_into};

use crate::error::{Error, Result};
use crate::fem::{assemble_level0, assemble_rhs, exact_error_norm, l2_norm, residual, CsrMatrix};
use crate::hhg::{GridFunction, GridHierarchy, Lattice};
use crate::problems::ProblemSpec;

/// What happens on the finest level after the `ν` FMG cycles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FinestPolicy {
    /// No further cycles.
    Fixed,
    /// Cycle until the exact error changes by at most `rel_change`
    /// relative between checks (two significant digits for 5e-3).
    Validation { rel_change: f64, max_cycles: usize },
    /// Cycle until the mass-norm update falls below `factor * η₁`.
    Blind { factor: f64, max_cycles: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    /// V-cycles per FMG level.
    pub nu: usize,
    pub pre: usize,
    pub post: usize,
    pub coarse_tol: f64,
    pub coarse_abs_tol: f64,
    pub coarse_max_iter: usize,
    pub finest: FinestPolicy,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            nu: 2,
            pre: 2,
            post: 2,
            coarse_tol: 1e-9,
            coarse_abs_tol: 1e-12,
            coarse_max_iter: 10_000,
            finest: FinestPolicy::Fixed,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nu == 0 {
            return Err(Error::Config("nu must be at least 1".into()));
        }
        if !(self.coarse_tol > 0.0 && self.coarse_tol < 1.0) {
            return Err(Error::Config(format!("coarse tolerance {} outside (0, 1)", self.coarse_tol)));
        }
        Ok(())
    }
}

/// One solver telemetry row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TelemetryRow {
    pub level: usize,
    pub cycle: usize,
    /// Euclidean norm of the algebraic residual after the cycle.
    pub residual: f64,
    /// Cumulative smoothing work in finest-level sweeps.
    pub work_units: f64,
}

/// Everything the FMG solve leaves behind.
#[derive(Clone, Debug)]
pub struct FmgState {
    /// `û_ℓ` for `ℓ = 0..=L`.
    pub u: Vec<GridFunction>,
    /// `ŵ_ℓ` for `ℓ = 0..L`, stored on level `ℓ+1`.
    pub w: Vec<GridFunction>,
    pub b: Vec<GridFunction>,
    pub telemetry: Vec<TelemetryRow>,
    pub work_units: f64,
    /// Cycles run on the finest level beyond the `ν` FMG cycles.
    pub extra_cycles: usize,
    /// Global and per-macro exact error of `û_L`, when computed.
    pub exact_error: Option<(f64, Vec<f64>)>,
}

impl FmgState {
    pub fn finest(&self) -> &GridFunction {
        self.u.last().expect("at least one level")
    }

    pub fn max_level(&self) -> usize {
        self.u.len() - 1
    }
}

/// Multigrid solver bound to one hierarchy.
pub struct Multigrid<'a> {
    h: &'a GridHierarchy,
    cfg: SolverConfig,
    coarse: CsrMatrix,
    free: Vec<usize>,
    work: f64,
    finest_nodes: f64,
    pub telemetry: Vec<TelemetryRow>,
}

impl<'a> Multigrid<'a> {
    pub fn new(h: &'a GridHierarchy, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let (coarse, free) = assemble_level0(h);
        Ok(Multigrid {
            h,
            cfg,
            coarse,
            free,
            work: 0.0,
            finest_nodes: Lattice::new(h.max_level()).num_nodes() as f64,
            telemetry: Vec::new(),
        })
    }

    pub fn work_units(&self) -> f64 {
        self.work
    }

    fn smooth(&mut self, u: &mut GridFunction, b: &GridFunction, sweeps: usize) {
        gauss_seidel(self.h, u, b, sweeps);
        self.work += sweeps as f64 * u.lattice().num_nodes() as f64 / self.finest_nodes;
    }

    /// Solves the level-0 problem for the free vertices by CG, updating `u`.
    pub fn coarse_solve(&mut self, u: &mut GridFunction, b: &GridFunction) -> Result<()> {
        u.check_level(0)?;
        let r = residual(self.h, u, b)?;
        let lat = u.lattice();
        let value_at = |f: &GridFunction, v: usize| {
            let (m, c) = self.h.vertex_copies[v][0];
            let (i, j) = lat.corner(c);
            f.macro_values(m)[lat.idx(i, j)]
        };
        let rhs: Vec<f64> = self.free.iter().map(|&v| value_at(&r, v)).collect();
        let x = cg(&self.coarse, &rhs, self.cfg.coarse_tol, self.cfg.coarse_abs_tol, self.cfg.coarse_max_iter)?;
        for (&v, dx) in self.free.iter().zip(&x) {
            for &(m, c) in &self.h.vertex_copies[v] {
                let (i, j) = lat.corner(c);
                u.macro_values_mut(m)[lat.idx(i, j)] += dx;
            }
        }
        Ok(())
    }

    /// One V(pre, post) cycle on `u`'s level.
    pub fn v_cycle(&mut self, u: &mut GridFunction, b: &GridFunction) -> Result<()> {
        let level = u.level();
        if level == 0 {
            return self.coarse_solve(u, b);
        }
        self.smooth(u, b, self.cfg.pre);
        let mut r = residual(self.h, u, b)?;
        let mut rc = GridFunction::zeros(self.h, level - 1)?;
        restrict_into(self.h, &mut r, &mut rc);
        drop(r);
        let mut ec = GridFunction::zeros(self.h, level - 1)?;
        self.v_cycle(&mut ec, &rc).map_err(|e| attach_level(e, level - 1))?;
        prolongate_add(&ec, u);
        self.smooth(u, b, self.cfg.post);
        Ok(())
    }

    fn record(&mut self, u: &GridFunction, b: &GridFunction, cycle: usize) -> Result<f64> {
        let r = residual(self.h, u, b)?;
        let norm = r.dot(self.h, &r).sqrt();
        self.telemetry.push(TelemetryRow {
            level: u.level(),
            cycle,
            residual: norm,
            work_units: self.work,
        });
        Ok(norm)
    }

    /// Runs V-cycles until the residual norm drops by `reduction` or
    /// `max_cycles` is reached. Returns the cycles used.
    pub fn solve(&mut self, u: &mut GridFunction, b: &GridFunction, reduction: f64, max_cycles: usize) -> Result<usize> {
        let r0 = self.record(u, b, 0)?;
        for c in 1..=max_cycles {
            self.v_cycle(u, b)?;
            if self.record(u, b, c)? <= reduction * r0 {
                return Ok(c);
            }
        }
        Ok(max_cycles)
    }
}

fn attach_level(e: Error, level: usize) -> Error {
    match e {
        Error::Solver { message, residual, .. } => Error::Solver { level, message, residual },
        other => other,
    }
}

/// Unpreconditioned CG from a zero start.
pub fn cg(a: &CsrMatrix, b: &[f64], rel_tol: f64, abs_tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = a.n;
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let dot = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(a, b)| a * b).sum::<f64>();
    let mut rr = dot(&r, &r);
    let target = (rel_tol * rr.sqrt()).max(abs_tol);
    if rr.sqrt() <= target {
        return Ok(x);
    }
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    for _ in 0..max_iter {
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::Solver {
                level: 0,
                message: "coarse matrix is not positive definite".into(),
                residual: rr.sqrt(),
            });
        }
        let alpha = rr / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= target {
            return Ok(x);
        }
        let beta = rr_new / rr;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
        rr = rr_new;
    }
    Err(Error::Solver {
        level: 0,
        message: format!("coarse CG did not converge in {max_iter} iterations"),
        residual: rr.sqrt(),
    })
}

/// Full multigrid up to the hierarchy's finest level.
pub fn fmg(h: &GridHierarchy, problem: &dyn ProblemSpec, cfg: &SolverConfig) -> Result<FmgState> {
    let mut mg = Multigrid::new(h, *cfg)?;
    let top = h.max_level();
    let g = |p: [f64; 2]| problem.exact(p);
    let mut b_all = Vec::with_capacity(top + 1);
    let mut u_all: Vec<GridFunction> = Vec::with_capacity(top + 1);
    let mut w_all = Vec::with_capacity(top);

    let b0 = assemble_rhs(h, problem, 0).map_err(|e| attach_level(e, 0))?;
    let mut u = GridFunction::zeros(h, 0)?;
    u.set_boundary(h, g);
    mg.coarse_solve(&mut u, &b0)?;
    mg.record(&u, &b0, 1)?;
    b_all.push(b0);
    for level in 1..=top {
        let w = prolongate(h, &u)?;
        u_all.push(u);
        let mut next = w.clone();
        w_all.push(w);
        next.set_boundary(h, g);
        let b = assemble_rhs(h, problem, level)?;
        for c in 1..=cfg.nu {
            mg.v_cycle(&mut next, &b).map_err(|e| attach_level(e, level))?;
            mg.record(&next, &b, c)?;
        }
        b_all.push(b);
        u = next;
    }
    u_all.push(u);

    let mut state = FmgState {
        u: u_all,
        w: w_all,
        b: b_all,
        telemetry: Vec::new(),
        work_units: 0.0,
        extra_cycles: 0,
        exact_error: None,
    };
    match cfg.finest {
        FinestPolicy::Fixed => {}
        FinestPolicy::Validation { rel_change, max_cycles } => {
            let mut err = exact_error_norm(h, problem, state.finest())?;
            let mut fresh = true;
            let mut cycles = 0;
            while cycles < max_cycles {
                let delta = finest_cycle(&mut mg, &mut state, cycles)?;
                cycles += 1;
                fresh = false;
                // the exact error moves by at most the update's L² norm
                if delta <= rel_change * err.0 {
                    let next = exact_error_norm(h, problem, state.finest())?;
                    let changed = (next.0 - err.0).abs() > rel_change * next.0;
                    err = next;
                    fresh = true;
                    if !changed {
                        break;
                    }
                }
            }
            if !fresh {
                err = exact_error_norm(h, problem, state.finest())?;
            }
            state.exact_error = Some(err);
            state.extra_cycles = cycles;
        }
        FinestPolicy::Blind { factor, max_cycles } => {
            if top >= 2 {
                let mut cycles = 0;
                let eta = crate::estimator::global_eta(h, &state, 1)?;
                while cycles < max_cycles {
                    let delta = finest_cycle(&mut mg, &mut state, cycles)?;
                    cycles += 1;
                    if delta < factor * eta {
                        break;
                    }
                }
                state.extra_cycles = cycles;
            }
        }
    }
    state.telemetry = std::mem::take(&mut mg.telemetry);
    state.work_units = mg.work_units();
    Ok(state)
}

/// One extra V-cycle on the finest level; returns `‖Δu‖` in the L² norm.
fn finest_cycle(mg: &mut Multigrid, state: &mut FmgState, done: usize) -> Result<f64> {
    let top = state.u.len() - 1;
    let before = state.u[top].clone();
    let b = &state.b[top];
    let u = &mut state.u[top];
    mg.v_cycle(u, b).map_err(|e| attach_level(e, top))?;
    mg.record(u, b, mg_cycle_label(done, mg.cfg.nu))?;
    let mut d = u.clone();
    d.axpy(-1.0, &before);
    Ok(l2_norm(mg.h, &d))
}

fn mg_cycle_label(done: usize, nu: usize) -> usize {
    nu + done + 1
}
