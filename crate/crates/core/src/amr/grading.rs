//! Mesh grading toward a point singularity.
//!
//! For a singularity of strength `r^{2/3}` a mesh is suitably graded when
//! `h_T ~ h_max r_T^{1/3}`. On the coarse grid of a hierarchy with `L`
//! uniform levels the fine elements satisfy the upper bound if
//! `h_T ≲ h_max (r_T - (1 - 2^{-L}) h_T / 2)^{1/3}`.
//!
//! The proportionality constants are fitted by least squares on the
//! log-log data and a flag is raised when an element misses the fitted
//! curve by more than a factor [`SLACK`].

use crate::mesh::{distance_to, element_diameter, MacroMesh};

pub const SLACK: f64 = 2.0;

#[derive(Clone, Debug, PartialEq)]
pub struct GradingRecord {
    pub element: usize,
    /// `h_{T,ℓ} = 2^{-ℓ} h_T`.
    pub h: f64,
    /// Distance of the closest sub-element, `r_T - (h_T - h_{T,ℓ}) / 2`.
    pub r: f64,
    /// Coarse-grid values used by the kℓ condition.
    pub h0: f64,
    pub r0: f64,
    /// Too close to the singularity for either condition.
    pub exempt: bool,
    pub upper_ok: bool,
    pub lower_ok: bool,
    /// Exempt elements count as satisfied.
    pub kl_ok: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradingReport {
    pub level: usize,
    pub levels: usize,
    pub h_max: f64,
    /// Fitted constant of `h_T ~ c h_max r_T^{1/3}`.
    pub c: f64,
    /// Fitted constant of the kℓ condition.
    pub c_kl: f64,
    pub records: Vec<GradingRecord>,
}

impl GradingReport {
    fn share(&self, f: impl Fn(&GradingRecord) -> bool) -> f64 {
        let used: Vec<_> = self.records.iter().filter(|r| !r.exempt).collect();
        if used.is_empty() {
            return 1.0;
        }
        used.iter().filter(|r| f(r)).count() as f64 / used.len() as f64
    }

    /// Share of non-exempt elements meeting the upper bound.
    pub fn upper_share(&self) -> f64 {
        self.share(|r| r.upper_ok)
    }

    pub fn lower_share(&self) -> f64 {
        self.share(|r| r.lower_ok)
    }

    pub fn kl_share(&self) -> f64 {
        self.share(|r| r.kl_ok)
    }
}

/// `exp(mean(log y - log x))`, the least-squares constant of `y ≈ c x` in
/// log-log coordinates. One for empty input.
pub fn fit_constant(pairs: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    let (sum, n) = pairs
        .into_iter()
        .fold((0.0, 0usize), |(s, n), (x, y)| (s + y.ln() - x.ln(), n + 1));
    if n == 0 {
        1.0
    } else {
        (sum / n as f64).exp()
    }
}

/// Grading diagnostics of `T_ℓ` over the coarse mesh, for a hierarchy with
/// `levels` uniform levels and a singularity at `corner`. Elements with
/// `r_T < h_T / 2` touch the singularity and are exempt.
pub fn grading_report(mesh: &MacroMesh, level: usize, levels: usize, corner: [f64; 2]) -> GradingReport {
    let scale = 0.5f64.powi(level as i32);
    let point = [corner[0], corner[1], 0.0];
    let coarse: Vec<(f64, f64)> = (0..mesh.num_elements())
        .map(|t| (element_diameter(mesh, t), distance_to(mesh, t, point)))
        .collect();
    let h0_max = coarse.iter().map(|c| c.0).fold(0.0, f64::max);
    let h_max = scale * h0_max;
    let shift = (1.0 - 0.5f64.powi(levels as i32)) / 2.0;

    let mut records: Vec<GradingRecord> = coarse
        .iter()
        .enumerate()
        .map(|(element, &(h0, r0))| {
            let h = scale * h0;
            let r = (r0 - (h0 - h) / 2.0).max(0.0);
            GradingRecord {
                element,
                h,
                r,
                h0,
                r0,
                exempt: r0 < h0 / 2.0 || r0 - shift * h0 <= 0.0,
                upper_ok: true,
                lower_ok: true,
                kl_ok: true,
            }
        })
        .collect();
    let bound = |r: f64| h_max * r.cbrt();
    let bound_kl = |g: &GradingRecord| h0_max * (g.r0 - shift * g.h0).cbrt();
    let active = || records.iter().filter(|g| !g.exempt);
    let c = fit_constant(active().map(|g| (bound(g.r), g.h)));
    let c_kl = fit_constant(active().map(|g| (bound_kl(g), g.h0)));
    for g in records.iter_mut().filter(|g| !g.exempt) {
        g.upper_ok = g.h <= SLACK * c * bound(g.r);
        g.lower_ok = g.h >= c * bound(g.r) / SLACK;
        g.kl_ok = g.h0 <= SLACK * c_kl * bound_kl(g);
    }
    GradingReport {
        level,
        levels,
        h_max,
        c,
        c_kl,
        records,
    }
}
