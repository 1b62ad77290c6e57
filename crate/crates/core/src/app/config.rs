//! Run configuration: a flat `key = value` file whose keys are the long
//! flag names. Command-line flags are applied after the file.

use crate::amr::{AmrConfig, Driver, Scheme};
use crate::error::{Error, Result};
use crate::estimator::EstimatorKind;
use crate::multigrid::FinestPolicy;
use std::path::{Path, PathBuf};

/// Relative change of the exact error that ends validation-mode cycling.
pub const VALIDATION_REL_CHANGE: f64 = 5e-3;
pub const VALIDATION_MAX_CYCLES: usize = 50;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub problem: String,
    pub alpha: Option<f64>,
    pub omega: Option<f64>,
    pub amr: AmrConfig,
    pub out: PathBuf,
    pub vtk: bool,
    /// Extra finest-level cycles until the exact error settles.
    pub validate: bool,
    /// Runs one kℓ loop per listed `ν` and collects the effectivity tables.
    pub sweep_nu: Vec<usize>,
    pub dim: usize,
    pub mesh: Option<PathBuf>,
    pub marks: Option<PathBuf>,
    /// Overrides [`default_theta`] of the problem.
    pub theta: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: "waves2d".into(),
            alpha: None,
            omega: None,
            amr: AmrConfig::default(),
            out: PathBuf::from("out"),
            vtk: false,
            validate: false,
            sweep_nu: Vec::new(),
            dim: 2,
            mesh: None,
            marks: None,
            theta: None,
        }
    }
}

pub const KEYS: [&str; 21] = [
    "problem",
    "alpha",
    "omega",
    "scheme",
    "levels",
    "ksteps",
    "nu",
    "j",
    "max-j",
    "estimator",
    "mark-fraction",
    "driver",
    "theta",
    "reference",
    "out",
    "vtk",
    "validate",
    "sweep-nu",
    "dim",
    "mesh",
    "marks",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("invalid value `{value}` for `{key}`"))),
    }
}

/// Convergence factor `2^{-q}` of the expected `L²` order `q` on uniform
/// refinement; used for the effectivity bounds.
pub fn default_theta(problem: &str) -> f64 {
    match problem {
        "lshape" => 2f64.powf(-4.0 / 3.0),
        _ => 0.25,
    }
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "problem" => self.problem = value.to_string(),
            "alpha" => self.alpha = Some(parse(key, value)?),
            "omega" => self.omega = Some(parse(key, value)?),
            "scheme" => {
                self.amr.scheme = match value {
                    "uniform" => Scheme::Uniform,
                    "kplusl" | "k-plus-l" => Scheme::KPlusL,
                    "kl" => Scheme::Kl,
                    _ => return Err(Error::Config(format!("unknown scheme `{value}`"))),
                }
            }
            "levels" => self.amr.levels = parse(key, value)?,
            "ksteps" => self.amr.ksteps = parse(key, value)?,
            "nu" => self.amr.solver.nu = parse(key, value)?,
            "j" => self.amr.j = parse(key, value)?,
            "max-j" => self.amr.max_j = parse(key, value)?,
            "estimator" => {
                self.amr.estimator = match value {
                    "scaled" => EstimatorKind::Scaled,
                    "unscaled" => EstimatorKind::Unscaled,
                    _ => return Err(Error::Config(format!("unknown estimator `{value}`"))),
                }
            }
            "mark-fraction" => self.amr.fraction = parse(key, value)?,
            "driver" => {
                self.amr.driver = match value {
                    "exact" => Driver::Exact,
                    "estimated" => Driver::Estimated,
                    _ => return Err(Error::Config(format!("unknown driver `{value}`"))),
                }
            }
            "theta" => self.theta = Some(parse(key, value)?),
            "reference" => self.amr.reference_curves = parse_bool(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "vtk" => self.vtk = parse_bool(key, value)?,
            "validate" => {
                self.validate = parse_bool(key, value)?;
                self.amr.solver.finest = if self.validate {
                    FinestPolicy::Validation {
                        rel_change: VALIDATION_REL_CHANGE,
                        max_cycles: VALIDATION_MAX_CYCLES,
                    }
                } else {
                    FinestPolicy::Fixed
                };
            }
            "sweep-nu" => {
                self.sweep_nu = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| parse(key, s))
                    .collect::<Result<_>>()?
            }
            "dim" => self.dim = parse(key, value)?,
            "mesh" => self.mesh = Some(PathBuf::from(value)),
            "marks" => self.marks = Some(PathBuf::from(value)),
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies a config file body. Blank lines and `#` comments are
    /// skipped; `key = value` and `key value` are both accepted.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .or_else(|| line.split_once(char::is_whitespace))
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            self.set(key.trim(), value)
                .map_err(|e| Error::Config(format!("line {}: {}", n + 1, strip(e))))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// The AMR settings with `θ` resolved for the problem.
    pub fn amr_config(&self) -> AmrConfig {
        AmrConfig {
            theta: self.theta.unwrap_or_else(|| default_theta(&self.problem)),
            ..self.amr.clone()
        }
    }

    /// Serializes every key; `apply_text` on the result reproduces `self`.
    pub fn to_text(&self) -> String {
        let a = &self.amr;
        let mut lines = vec![
            format!("problem = {}", self.problem),
            format!("scheme = {}", a.scheme.as_str()),
            format!("levels = {}", a.levels),
            format!("ksteps = {}", a.ksteps),
            format!("nu = {}", a.solver.nu),
            format!("j = {}", a.j),
            format!("max-j = {}", a.max_j),
            format!("estimator = {}", a.estimator.as_str()),
            format!("mark-fraction = {:?}", a.fraction),
            format!("driver = {}", a.driver.as_str()),
            format!("reference = {}", a.reference_curves),
            format!("out = {}", self.out.display()),
            format!("vtk = {}", self.vtk),
            format!("validate = {}", self.validate),
            format!(
                "sweep-nu = {}",
                self.sweep_nu.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
            ),
            format!("dim = {}", self.dim),
        ];
        if let Some(x) = self.theta {
            lines.push(format!("theta = {x:?}"));
        }
        if let Some(x) = self.alpha {
            lines.push(format!("alpha = {x:?}"));
        }
        if let Some(x) = self.omega {
            lines.push(format!("omega = {x:?}"));
        }
        if let Some(p) = &self.mesh {
            lines.push(format!("mesh = {}", p.display()));
        }
        if let Some(p) = &self.marks {
            lines.push(format!("marks = {}", p.display()));
        }
        lines.join("\n") + "\n"
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut cfg = RunConfig::default();
        cfg.apply_text(
            "# comment\nproblem = lshape\nscheme kplusl\nlevels = 4\nnu=6\nmark-fraction = 0.125\n\
             driver = exact\nvalidate = true\nsweep-nu = 1, 2,6\nalpha = 3.5\nmesh = a b.mesh\n",
        )
        .unwrap();
        assert_eq!(cfg.amr.scheme, Scheme::KPlusL);
        assert_eq!(cfg.sweep_nu, vec![1, 2, 6]);
        assert_eq!(cfg.amr_config().theta, 2f64.powf(-4.0 / 3.0));
        assert_eq!(cfg.mesh, Some(PathBuf::from("a b.mesh")));
        let mut back = RunConfig::default();
        back.apply_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        for key in KEYS {
            assert!(cfg.to_text().contains(key) || ["alpha", "omega", "marks", "theta"].contains(&key), "{key}");
        }
    }

    #[test]
    fn bad_input_names_the_problem() {
        let mut cfg = RunConfig::default();
        let e = cfg.apply_text("levels = 4\nnu = many\n").unwrap_err();
        assert!(e.to_string().contains("line 2") && e.to_string().contains("many"));
        assert!(cfg.set("colour", "red").unwrap_err().to_string().contains("colour"));
        assert!(cfg.apply_text("levels\n").is_err());
    }
}
