//! JSON configuration with path-qualified validation errors.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::apfun::{Coefficient, NormKind, Signal};
use crate::error::{Error, Result};
use crate::lotka::LVParams;
use crate::solver::{ForcingTerm, SolveConfig};

/// Top-level configuration document.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub signal: Option<SignalConfig>,
    pub analysis: Option<AnalysisConfig>,
    pub system: Option<SystemConfig>,
    pub spatial: Option<SpatialConfig>,
    /// Kept raw so that each command can overlay it on its own defaults.
    pub solver: Option<Value>,
    #[serde(default)]
    pub forcing: Vec<ForcingTerm>,
    pub nonlinearity: Option<NonlinearityConfig>,
    pub lv: Option<LVParams>,
    /// Directory relative paths are resolved against; set by [`Config::load`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// A signal given either as a closed-form coefficient sampled on `[t0, t1]` or as a CSV file.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalConfig {
    pub coefficient: Option<Coefficient>,
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub t0: f64,
    #[serde(default = "default_signal_t1")]
    pub t1: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

fn default_signal_t1() -> f64 {
    100.0
}
fn default_dt() -> f64 {
    1e-2
}

/// Almost-period scan settings. Without `p` distances are measured in the sup norm.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub eps: f64,
    pub p: Option<f64>,
    #[serde(default = "default_tau_range")]
    pub tau_range: [f64; 2],
    #[serde(default = "default_dt")]
    pub tau_step: f64,
}

fn default_tau_range() -> [f64; 2] {
    [1.0, 100.0]
}

impl AnalysisConfig {
    pub fn norm(&self) -> NormKind {
        match self.p {
            None => NormKind::Bohr,
            Some(p) => NormKind::Stepanov { p },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::config("analysis.eps", format!("must be positive, got {}", self.eps)));
        }
        if let Some(p) = self.p {
            if !(p >= 1.0 && p.is_finite()) {
                return Err(Error::config("analysis.p", format!("must be a finite p >= 1, got {p}")));
            }
        }
        let [lo, hi] = self.tau_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::config("analysis.tau_range", format!("must be an ordered pair, got [{lo}, {hi}]")));
        }
        if !(self.tau_step > 0.0 && self.tau_step.is_finite()) {
            return Err(Error::config("analysis.tau_step", format!("must be positive, got {}", self.tau_step)));
        }
        Ok(())
    }
}

/// Coefficients of the linear part. `d2` defaults to `d1`, `b` to zero.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub d1: Coefficient,
    pub d2: Option<Coefficient>,
    pub b: Option<Coefficient>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpatialConfig {
    #[serde(default = "default_length")]
    pub length: f64,
    #[serde(default = "default_modes")]
    pub modes: usize,
}

fn default_length() -> f64 {
    1.0
}
fn default_modes() -> usize {
    32
}

impl Default for SpatialConfig {
    fn default() -> Self {
        SpatialConfig { length: default_length(), modes: default_modes() }
    }
}

/// Right-hand side of a semilinear solve.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearityConfig {
    /// `f(t, x)_k = amplitude * sin(x_k)` on every mode of both components.
    ModalSine { amplitude: f64, lipschitz: Option<f64> },
    /// The predator-prey interaction with the parameters of the `lv` section.
    LotkaVolterra { lipschitz: Option<f64> },
}

/// Turn a deserialization failure into a dotted-path config error.
fn path_error(prefix: &str, err: serde_path_to_error::Error<serde_json::Error>) -> Error {
    let mut path = err.path().to_string();
    if path == "." {
        path.clear();
    }
    let msg = err.inner().to_string();
    // report a missing key at its own path rather than at the enclosing object
    if let Some(rest) = msg.strip_prefix("missing field `") {
        if let Some(end) = rest.find('`') {
            path = if path.is_empty() { rest[..end].to_string() } else { format!("{path}.{}", &rest[..end]) };
        }
    }
    let full = match (prefix.is_empty(), path.is_empty()) {
        (true, true) => "(root)".to_string(),
        (true, false) => path,
        (false, true) => prefix.to_string(),
        (false, false) => format!("{prefix}.{path}"),
    };
    let msg = msg.split(" at line ").next().unwrap_or(&msg).to_string();
    Error::config(full, msg)
}

/// Deserialize `value` reporting failures under `prefix`.
pub fn from_value<T: DeserializeOwned>(prefix: &str, value: Value) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| path_error(prefix, e))
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut de = serde_json::Deserializer::from_str(text);
        let cfg: Config = serde_path_to_error::deserialize(&mut de).map_err(|e| path_error("", e))?;
        de.end().map_err(|e| Error::config("(root)", e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Config::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// Solver settings overlaid on `base`.
    pub fn solver_over(&self, base: &SolveConfig) -> Result<SolveConfig> {
        let mut merged = serde_json::to_value(base)?;
        if let Some(user) = &self.solver {
            let Value::Object(user) = user else {
                return Err(Error::config("solver", "must be an object"));
            };
            let Value::Object(map) = &mut merged else { unreachable!("SolveConfig serializes to an object") };
            for (k, v) in user {
                map.insert(k.clone(), v.clone());
            }
        }
        let cfg: SolveConfig = from_value("solver", merged)?;
        cfg.check().map_err(|(k, m)| Error::config(format!("solver.{k}"), m))?;
        Ok(cfg)
    }

    pub fn analysis(&self) -> Result<&AnalysisConfig> {
        let a = self.analysis.as_ref().ok_or_else(|| Error::config("analysis", "section is required"))?;
        a.validate()?;
        Ok(a)
    }

    pub fn spatial(&self) -> Result<SpatialConfig> {
        let s = self.spatial.clone().unwrap_or_default();
        if !(s.length > 0.0 && s.length.is_finite()) {
            return Err(Error::config("spatial.length", format!("must be positive, got {}", s.length)));
        }
        if s.modes == 0 {
            return Err(Error::config("spatial.modes", "must be at least 1"));
        }
        Ok(s)
    }

    pub fn system(&self) -> Result<&SystemConfig> {
        self.system.as_ref().ok_or_else(|| Error::config("system", "section is required"))
    }

    pub fn lv(&self) -> Result<LVParams> {
        let p = self.lv.clone().unwrap_or_default();
        p.validate()?;
        Ok(p)
    }

    /// Sample the configured signal.
    pub fn signal(&self) -> Result<Signal> {
        let s = self.signal.as_ref().ok_or_else(|| Error::config("signal", "section is required"))?;
        match (&s.coefficient, &s.csv) {
            (Some(c), None) => {
                if !(s.dt > 0.0 && s.dt.is_finite()) {
                    return Err(Error::config("signal.dt", format!("must be positive, got {}", s.dt)));
                }
                if !(s.t1 > s.t0) {
                    return Err(Error::config("signal.t1", format!("must exceed t0 = {}", s.t0)));
                }
                Signal::from_coefficients(std::slice::from_ref(c), s.t0, s.t1, s.dt)
            }
            (None, Some(path)) => {
                let path = if path.is_relative() { self.base_dir.join(path) } else { path.clone() };
                Signal::read_csv(std::fs::File::open(path)?)
            }
            _ => Err(Error::config("signal", "give exactly one of `coefficient` or `csv`")),
        }
    }
}
