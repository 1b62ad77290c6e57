//! Manufactured model problems `-Δu = f` with Dirichlet data `g = u`.

use crate::error::{Error, Result};
use crate::mesh::{lshape_mesh, unit_square_mesh, MacroMesh};
use std::f64::consts::PI;

pub trait ProblemSpec: Sync + Send {
    fn name(&self) -> &str;
    /// Exact solution, also used as Dirichlet data.
    fn exact(&self, p: [f64; 2]) -> f64;
    fn source(&self, p: [f64; 2]) -> f64;
    fn initial_mesh(&self) -> MacroMesh;
    /// Location of a solution singularity, if any.
    fn singular_point(&self) -> Option<[f64; 2]> {
        None
    }
}

/// `u = w(x) w(y)` with `w(t) = 1 - cos(e^{α(t-1)} ω t)` on the unit square.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Waves {
    pub alpha: f64,
    pub omega: f64,
}

impl Default for Waves {
    fn default() -> Self {
        Waves {
            alpha: 10.0,
            omega: 16.0 * PI,
        }
    }
}

/// `(w, w', w'')` at `t`.
pub fn waves_derivatives(alpha: f64, omega: f64, t: f64) -> (f64, f64, f64) {
    let e = (alpha * (t - 1.0)).exp() * omega;
    let s = e * t;
    let s1 = e * (1.0 + alpha * t);
    let s2 = e * alpha * (2.0 + alpha * t);
    let (sin, cos) = s.sin_cos();
    (1.0 - cos, s1 * sin, s2 * sin + s1 * s1 * cos)
}

impl ProblemSpec for Waves {
    fn name(&self) -> &str {
        "waves2d"
    }

    fn exact(&self, p: [f64; 2]) -> f64 {
        let w = |t: f64| 1.0 - ((self.alpha * (t - 1.0)).exp() * self.omega * t).cos();
        w(p[0]) * w(p[1])
    }

    fn source(&self, p: [f64; 2]) -> f64 {
        let (wx, _, wxx) = waves_derivatives(self.alpha, self.omega, p[0]);
        let (wy, _, wyy) = waves_derivatives(self.alpha, self.omega, p[1]);
        -(wxx * wy + wx * wyy)
    }

    fn initial_mesh(&self) -> MacroMesh {
        waves_initial_mesh()
    }
}

/// `u = r^{2/3} sin(2φ/3)` on `(-1,1)²` without the quadrant `x > 0, y < 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LShape;

impl ProblemSpec for LShape {
    fn name(&self) -> &str {
        "lshape"
    }

    fn exact(&self, p: [f64; 2]) -> f64 {
        let r = p[0].hypot(p[1]);
        if r == 0.0 {
            return 0.0;
        }
        let mut phi = p[1].atan2(p[0]);
        if phi < 0.0 {
            phi += 2.0 * PI;
        }
        r.powf(2.0 / 3.0) * (2.0 * phi / 3.0).sin()
    }

    fn source(&self, _: [f64; 2]) -> f64 {
        0.0
    }

    fn initial_mesh(&self) -> MacroMesh {
        lshape_initial_mesh()
    }

    fn singular_point(&self) -> Option<[f64; 2]> {
        Some([0.0, 0.0])
    }
}

/// `u = a + b x + c y`, reproduced exactly by P1 elements.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Affine {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for Affine {
    fn default() -> Self {
        Affine { a: 0.5, b: 1.0, c: 2.0 }
    }
}

impl ProblemSpec for Affine {
    fn name(&self) -> &str {
        "affine"
    }

    fn exact(&self, p: [f64; 2]) -> f64 {
        self.a + self.b * p[0] + self.c * p[1]
    }

    fn source(&self, _: [f64; 2]) -> f64 {
        0.0
    }

    fn initial_mesh(&self) -> MacroMesh {
        waves_initial_mesh()
    }
}

/// `u = x²` on the unit square.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Quadratic;

impl ProblemSpec for Quadratic {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn exact(&self, p: [f64; 2]) -> f64 {
        p[0] * p[0]
    }

    fn source(&self, _: [f64; 2]) -> f64 {
        -2.0
    }

    fn initial_mesh(&self) -> MacroMesh {
        waves_initial_mesh()
    }
}

/// 32 triangles on the unit square.
pub fn waves_initial_mesh() -> MacroMesh {
    unit_square_mesh(4)
}

/// 24 triangles on the L-shaped domain.
pub fn lshape_initial_mesh() -> MacroMesh {
    lshape_mesh(2)
}

pub const PROBLEM_IDS: [&str; 4] = ["waves2d", "lshape", "affine", "quadratic"];

/// Looks up a problem by id. `alpha`/`omega` override the waves parameters.
pub fn problem_by_name(id: &str, alpha: Option<f64>, omega: Option<f64>) -> Result<Box<dyn ProblemSpec>> {
    match id {
        "waves2d" => {
            let d = Waves::default();
            Ok(Box::new(Waves {
                alpha: alpha.unwrap_or(d.alpha),
                omega: omega.unwrap_or(d.omega),
            }))
        }
        "lshape" => Ok(Box::new(LShape)),
        "affine" => Ok(Box::new(Affine::default())),
        "quadratic" => Ok(Box::new(Quadratic)),
        other => Err(Error::Config(format!(
            "unknown problem `{other}` (expected one of {})",
            PROBLEM_IDS.join(", ")
        ))),
    }
}
