//! Error estimation from the coarse solutions stored by full multigrid.
//!
//! With `ℓ = L - j`, the differences `ẽ_ℓ = û_L - I_ℓ^L û_ℓ` between the
//! finest solution and prolongated coarse solutions give the estimated
//! convergence factor `θ̃ = ‖ẽ_ℓ‖ / ‖ẽ_{ℓ-1}‖` and the estimate
//! `η_j = θ̃^j ‖ẽ_ℓ‖`.

mod bounds;

pub use bounds::{constants_c1_c2, dgamma_bound_scaled, dgamma_bound_unscaled, BoundsConstants};

use crate::error::{Error, Result};
use crate::fem::{l2_norm, local_l2_norms};
use crate::hhg::{GridFunction, GridHierarchy};
use crate::multigrid::{prolongate_to, FmgState};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorKind {
    /// `η_{j,T} = θ̃_{ℓ,T}^j ‖ẽ_ℓ‖_T` with local convergence factors.
    Scaled,
    /// `η'_{j,T} = ‖ẽ_ℓ‖_T`.
    Unscaled,
}

impl EstimatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::Scaled => "scaled",
            EstimatorKind::Unscaled => "unscaled",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateReport {
    pub j: usize,
    /// `ℓ = L - j`.
    pub level: usize,
    /// `‖ẽ_{ℓ-1}‖`.
    pub e_prev: f64,
    /// `‖ẽ_ℓ‖`.
    pub e_cur: f64,
    pub theta: f64,
    pub eta: f64,
    pub kind: EstimatorKind,
    /// Per-macro indicators `η_T`.
    pub local: Vec<f64>,
    /// Per-macro `‖ẽ_ℓ‖_T`.
    pub local_cur: Vec<f64>,
    /// Per-macro `‖ẽ_{ℓ-1}‖_T`.
    pub local_prev: Vec<f64>,
}

/// `(θ̃, η_j)` from the two difference norms.
pub fn eta_from_norms(e_prev: f64, e_cur: f64, j: usize) -> (f64, f64) {
    let theta = if e_prev > 0.0 { e_cur / e_prev } else { 0.0 };
    (theta, theta.powi(j as i32) * e_cur)
}

fn check_j(state: &FmgState, j: usize) -> Result<usize> {
    let top = state.max_level();
    if j == 0 || j + 1 > top {
        return Err(Error::structural(format!(
            "level offset j = {j} needs 1 <= j <= L-1 (L = {top})"
        )));
    }
    Ok(top - j)
}

/// `û_L - I^L ŵ_k`, where `ŵ_k` is stored on level `k + 1`.
fn difference(h: &GridHierarchy, state: &FmgState, k: usize) -> Result<GridFunction> {
    let top = state.max_level();
    let mut e = prolongate_to(h, &state.w[k], top)?;
    let u = state.finest();
    for (x, y) in e.data_mut().iter_mut().zip(u.data()) {
        *x = y - *x;
    }
    Ok(e)
}

/// Global `η_j` only.
pub(crate) fn global_eta(h: &GridHierarchy, state: &FmgState, j: usize) -> Result<f64> {
    let l = check_j(state, j)?;
    let cur = l2_norm(h, &difference(h, state, l)?);
    let prev = l2_norm(h, &difference(h, state, l - 1)?);
    Ok(eta_from_norms(prev, cur, j).1)
}

pub fn error_estimate(h: &GridHierarchy, state: &FmgState, j: usize, kind: EstimatorKind) -> Result<EstimateReport> {
    let l = check_j(state, j)?;
    let local_cur = local_l2_norms(h, &difference(h, state, l)?);
    let local_prev = local_l2_norms(h, &difference(h, state, l - 1)?);
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (e_cur, e_prev) = (norm(&local_cur), norm(&local_prev));
    let (theta, eta) = eta_from_norms(e_prev, e_cur, j);
    let local = match kind {
        EstimatorKind::Unscaled => local_cur.clone(),
        EstimatorKind::Scaled => local_cur
            .iter()
            .zip(&local_prev)
            .map(|(&c, &p)| {
                let t = if p < 1e-14 * e_prev { theta } else { c / p };
                t.powi(j as i32) * c
            })
            .collect(),
    };
    Ok(EstimateReport {
        j,
        level: l,
        e_prev,
        e_cur,
        theta,
        eta,
        kind,
        local,
        local_cur,
        local_prev,
    })
}

/// Global and local effectivity of an estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct Effectivity {
    /// `η_j / ‖e_L‖`; NaN when the exact error vanishes.
    pub gamma: f64,
    /// `η_T / ‖e_L‖_T`; NaN on macros excluded for negligible error.
    pub local: Vec<f64>,
    /// `max γ_T / min γ_T` over the included macros.
    pub dgamma: f64,
    /// False when `gamma` is the NaN sentinel.
    pub valid: bool,
}

pub fn effectivity_index(report: &EstimateReport, exact: f64, exact_local: &[f64]) -> Effectivity {
    let valid = exact > 0.0;
    let gamma = if valid { report.eta / exact } else { f64::NAN };
    let local: Vec<f64> = report
        .local
        .iter()
        .zip(exact_local)
        .map(|(&eta, &e)| if valid && e >= 1e-14 * exact && e > 0.0 { eta / e } else { f64::NAN })
        .collect();
    let used = local.iter().filter(|x| !x.is_nan());
    let (lo, hi) = used.fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let dgamma = if lo.is_finite() && lo > 0.0 { hi / lo } else { f64::NAN };
    Effectivity {
        gamma,
        local,
        dgamma,
        valid,
    }
}
