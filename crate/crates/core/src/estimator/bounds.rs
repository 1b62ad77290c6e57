use crate::error::{Error, Result};

fn check(theta: f64, eps: f64, j: usize) -> Result<f64> {
    if j == 0 {
        return Err(Error::domain("j must be at least 1"));
    }
    if !(theta > 0.0) || !(eps >= 0.0) {
        return Err(Error::domain(format!("need θ > 0 and ε >= 0, got θ = {theta}, ε = {eps}")));
    }
    let te = (1.0 + eps) * theta;
    if te >= 1.0 {
        return Err(Error::domain(format!(
            "(1+ε)θ = {te} >= 1 violates the saturation assumption"
        )));
    }
    Ok(te)
}

/// Lower and upper effectivity constants `(C1, C2)`.
pub fn constants_c1_c2(theta: f64, eps: f64, j: usize) -> Result<(f64, f64)> {
    let te = check(theta, eps, j)?;
    let (j1, ji) = (j as i32 + 1, j as i32);
    let c1 = (1.0 + eps).powi(-ji) * (1.0 - te.powi(ji)).powi(j1) / (1.0 + te.powi(j1)).powi(ji);
    let c2 = (1.0 + eps).powi(ji) * (1.0 + te.powi(ji)).powi(j1) / (1.0 - te.powi(j1)).powi(ji);
    Ok((c1, c2))
}

/// Bound on the spread of local effectivities for the scaled indicator.
pub fn dgamma_bound_scaled(theta_max: f64, eps: f64, j: usize) -> Result<f64> {
    check(theta_max, eps, j)?;
    let t = theta_max;
    let (j1, ji) = (j as i32 + 1, j as i32);
    Ok((1.0 + eps).powi(2 * ji)
        * ((1.0 + t.powi(j1)) / (1.0 - t.powi(j1))).powi(ji)
        * ((1.0 + t.powi(ji)) / (1.0 - t.powi(ji))).powi(j1))
}

/// Bound on the spread of local effectivities for the unscaled indicator.
pub fn dgamma_bound_unscaled(theta_min: f64, theta_max: f64, j: usize) -> Result<f64> {
    if !(theta_min > 0.0 && theta_min <= theta_max) {
        return Err(Error::domain(format!("need 0 < θ_min <= θ_max, got {theta_min}, {theta_max}")));
    }
    check(theta_max, 0.0, j)?;
    let ji = j as i32;
    Ok((theta_min.powi(-ji) + 1.0) / (theta_max.powi(-ji) - 1.0))
}

/// The constants of the effectivity theory for one parameter set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundsConstants {
    pub theta: f64,
    pub eps: f64,
    pub j: usize,
    pub theta_eps: f64,
    pub c1: f64,
    pub c2: f64,
    pub dgamma_scaled: f64,
}

impl BoundsConstants {
    pub fn new(theta: f64, eps: f64, j: usize) -> Result<Self> {
        let (c1, c2) = constants_c1_c2(theta, eps, j)?;
        Ok(BoundsConstants {
            theta,
            eps,
            j,
            theta_eps: (1.0 + eps) * theta,
            c1,
            c2,
            dgamma_scaled: dgamma_bound_scaled(theta, eps, j)?,
        })
    }

    /// `θ = 2^{-q}` for a method converging with order `q`.
    pub fn from_order(q: f64, eps: f64, j: usize) -> Result<Self> {
        Self::new(2f64.powf(-q), eps, j)
    }

    pub fn contains(&self, gamma: f64) -> bool {
        gamma >= self.c1 && gamma <= self.c2
    }
}
