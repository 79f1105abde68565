//! Scenario configuration: a TOML file, command-line flags on top of it, and
//! the validated result.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use adiabatic_duality::models::{RotatingModelParams, SampledHamiltonian, SampledHamiltonianFile};
use adiabatic_duality::{Method, TimeGrid, C64};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Keys accepted in a config file. Every field is optional so that flags can
/// fill the gaps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub model: Option<String>,
    pub omega0: Option<f64>,
    pub omega: Option<f64>,
    pub theta: Option<f64>,
    pub samples_path: Option<PathBuf>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub method: Option<String>,
    pub initial_state: Option<String>,
    pub analyses: Option<Vec<String>>,
    pub ratio_threshold: Option<f64>,
    pub seed: Option<u64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `flags` replace those in `self`.
    pub fn overlay(self, flags: ConfigFile) -> ConfigFile {
        ConfigFile {
            model: flags.model.or(self.model),
            omega0: flags.omega0.or(self.omega0),
            omega: flags.omega.or(self.omega),
            theta: flags.theta.or(self.theta),
            samples_path: flags.samples_path.or(self.samples_path),
            t_end: flags.t_end.or(self.t_end),
            dt: flags.dt.or(self.dt),
            method: flags.method.or(self.method),
            initial_state: flags.initial_state.or(self.initial_state),
            analyses: flags.analyses.or(self.analyses),
            ratio_threshold: flags.ratio_threshold.or(self.ratio_threshold),
            seed: flags.seed.or(self.seed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Duality,
    AdiabaticH,
    AdiabaticDual,
    Inconsistency,
    Resonance,
    Nu,
}

impl Analysis {
    pub const ALL: [Analysis; 6] = [
        Analysis::Duality,
        Analysis::AdiabaticH,
        Analysis::AdiabaticDual,
        Analysis::Inconsistency,
        Analysis::Resonance,
        Analysis::Nu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Analysis::Duality => "duality",
            Analysis::AdiabaticH => "adiabatic_h",
            Analysis::AdiabaticDual => "adiabatic_dual",
            Analysis::Inconsistency => "inconsistency",
            Analysis::Resonance => "resonance",
            Analysis::Nu => "nu",
        }
    }

    /// Whether the analysis needs the eigenframe of `h`.
    pub fn needs_frame(self) -> bool {
        !matches!(self, Analysis::Duality | Analysis::Nu)
    }
}

impl fmt::Display for Analysis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Analysis {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Analysis::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| CliError::Config(format!("unknown analysis {s:?}")))
    }
}

/// `plus` is the lowest level of `h(0)`, `minus` the highest.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Plus,
    Minus,
    Custom(Vec<C64>),
}

impl FromStr for InitialState {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim() {
            "plus" => Ok(InitialState::Plus),
            "minus" => Ok(InitialState::Minus),
            other => {
                let body = other.strip_prefix("custom:").ok_or_else(|| {
                    CliError::Config(format!("initial_state must be plus, minus or custom:re,im;re,im (got {other:?})"))
                })?;
                let parse = |x: &str| {
                    x.trim().parse::<f64>().map_err(|_| CliError::Config(format!("bad number {x:?} in initial_state")))
                };
                let amplitudes = body
                    .split(';')
                    .map(|pair| {
                        let (re, im) = pair
                            .split_once(',')
                            .ok_or_else(|| CliError::Config(format!("amplitude {pair:?} is not re,im")))?;
                        Ok(C64::new(parse(re)?, parse(im)?))
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                Ok(InitialState::Custom(amplitudes))
            }
        }
    }
}

impl fmt::Display for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialState::Plus => f.write_str("plus"),
            InitialState::Minus => f.write_str("minus"),
            InitialState::Custom(v) => {
                let parts: Vec<String> = v.iter().map(|z| format!("{},{}", z.re, z.im)).collect();
                write!(f, "custom:{}", parts.join(";"))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum ModelSpec {
    Rotating(RotatingModelParams),
    Sampled { path: PathBuf, source: SampledHamiltonian },
}

impl ModelSpec {
    pub fn label(&self) -> String {
        match self {
            ModelSpec::Rotating(_) => "rotating".to_string(),
            ModelSpec::Sampled { path, .. } => path.display().to_string(),
        }
    }

    pub fn rotating(&self) -> Option<&RotatingModelParams> {
        match self {
            ModelSpec::Rotating(p) => Some(p),
            ModelSpec::Sampled { .. } => None,
        }
    }
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub model: ModelSpec,
    pub grid: TimeGrid,
    pub method: Method,
    pub initial_state: InitialState,
    /// Sorted and without duplicates.
    pub analyses: Vec<Analysis>,
    pub ratio_threshold: f64,
    pub seed: u64,
}

pub const DEFAULT_DT: f64 = 1e-3;

pub fn load_samples(path: &Path) -> Result<SampledHamiltonian, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read samples file {}: {e}", path.display())))?;
    let file: SampledHamiltonianFile =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    file.into_source().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

impl ScenarioConfig {
    pub fn resolve(raw: ConfigFile) -> Result<Self, CliError> {
        let config_err = |msg: String| CliError::Config(msg);
        let model_name = raw.model.as_deref().unwrap_or("rotating");
        let model = match model_name {
            "rotating" => {
                let p = RotatingModelParams::new(
                    raw.omega0.unwrap_or(1.0),
                    raw.omega.unwrap_or(0.1),
                    raw.theta.unwrap_or(std::f64::consts::FRAC_PI_4),
                )
                .map_err(|e| config_err(e.to_string()))?;
                ModelSpec::Rotating(p)
            }
            "sampled" | "sampled-file" => {
                let path =
                    raw.samples_path.clone().ok_or_else(|| config_err("model = sampled needs samples_path".into()))?;
                let source = load_samples(&path)?;
                ModelSpec::Sampled { path, source }
            }
            other => return Err(config_err(format!("unknown model {other:?} (expected rotating or sampled)"))),
        };

        let dt = raw.dt.unwrap_or(DEFAULT_DT);
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(config_err(format!("dt must be positive, got {dt}")));
        }
        let grid = match &model {
            ModelSpec::Rotating(_) => {
                let t_end = raw.t_end.ok_or_else(|| config_err("t_end is required for the rotating model".into()))?;
                TimeGrid::covering(t_end, dt).map_err(|e| config_err(e.to_string()))?
            }
            ModelSpec::Sampled { source, .. } => {
                let times = source.times();
                let (start, last) = (times[0], times[times.len() - 1]);
                let t_end = raw.t_end.unwrap_or(last);
                if t_end > last + 1e-9 * (last - start).max(1.0) {
                    return Err(config_err(format!("t_end = {t_end} lies beyond the last sample at {last}")));
                }
                // Stay inside the sampled window.
                let steps = ((t_end - start) / dt + 1e-9).floor();
                if steps < 1.0 {
                    return Err(config_err(format!("sampled window [{start}, {t_end}] is shorter than dt = {dt}")));
                }
                TimeGrid::new(start, dt, steps as usize).map_err(|e| config_err(e.to_string()))?
            }
        };

        let method = match raw.method.as_deref() {
            None => Method::Midpoint2,
            Some(m) => m.parse::<Method>().map_err(|e| config_err(e.to_string()))?,
        };
        let initial_state = match raw.initial_state.as_deref() {
            None => InitialState::Plus,
            Some(s) => s.parse()?,
        };
        let mut analyses = match raw.analyses {
            None => Analysis::ALL.to_vec(),
            Some(list) => {
                list.iter().filter(|s| !s.trim().is_empty()).map(|s| s.parse()).collect::<Result<Vec<Analysis>, _>>()?
            }
        };
        analyses.sort();
        analyses.dedup();
        if analyses.is_empty() {
            return Err(config_err("analyses must name at least one analysis".into()));
        }
        let ratio_threshold = raw.ratio_threshold.unwrap_or(adiabatic_duality::diagnostics::DEFAULT_RATIO_THRESHOLD);
        if !(ratio_threshold > 0.0 && ratio_threshold.is_finite()) {
            return Err(config_err(format!("ratio_threshold must be positive, got {ratio_threshold}")));
        }
        Ok(ScenarioConfig {
            model,
            grid,
            method,
            initial_state,
            analyses,
            ratio_threshold,
            seed: raw.seed.unwrap_or(0),
        })
    }

    pub fn wants(&self, a: Analysis) -> bool {
        self.analyses.contains(&a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ConfigFile {
        ConfigFile { t_end: Some(10.0), dt: Some(0.01), ..Default::default() }
    }

    #[test]
    fn defaults_fill_in() {
        let c = ScenarioConfig::resolve(base()).unwrap();
        assert_eq!(c.grid.steps, 1000);
        assert_eq!(c.method, Method::Midpoint2);
        assert_eq!(c.initial_state, InitialState::Plus);
        assert_eq!(c.analyses, Analysis::ALL.to_vec());
        assert_eq!(c.ratio_threshold, 0.1);
        let p = c.model.rotating().unwrap();
        assert_eq!((p.omega0, p.omega), (1.0, 0.1));
    }

    #[test]
    fn flags_override_file() {
        let file: ConfigFile = toml::from_str(
            "model = \"rotating\"\nomega = 0.2\ntheta = 1.0\nt_end = 5.0\ndt = 0.01\nmethod = \"magnus4\"\nanalyses = [\"nu\", \"duality\"]\n",
        )
        .unwrap();
        let flags = ConfigFile { omega: Some(0.3), analyses: Some(vec!["resonance".into()]), ..Default::default() };
        let c = ScenarioConfig::resolve(file.overlay(flags)).unwrap();
        assert_eq!(c.model.rotating().unwrap().omega, 0.3);
        assert_eq!(c.model.rotating().unwrap().theta, 1.0);
        assert_eq!(c.method, Method::Magnus4);
        assert_eq!(c.analyses, vec![Analysis::Resonance]);
    }

    #[test]
    fn rejects_bad_configs() {
        let empty = ConfigFile { analyses: Some(vec![]), ..base() };
        assert!(matches!(ScenarioConfig::resolve(empty), Err(CliError::Config(_))));
        let unknown = ConfigFile { analyses: Some(vec!["fourier".into()]), ..base() };
        assert!(ScenarioConfig::resolve(unknown).is_err());
        assert!(ScenarioConfig::resolve(ConfigFile { t_end: None, ..base() }).is_err());
        assert!(ScenarioConfig::resolve(ConfigFile { dt: Some(-1.0), ..base() }).is_err());
        assert!(ScenarioConfig::resolve(ConfigFile { omega0: Some(0.0), ..base() }).is_err());
        assert!(ScenarioConfig::resolve(ConfigFile { method: Some("rk4".into()), ..base() }).is_err());
        let missing = ConfigFile { model: Some("sampled".into()), ..base() };
        assert!(ScenarioConfig::resolve(missing).is_err());
        let absent = ConfigFile {
            model: Some("sampled".into()),
            samples_path: Some("/nonexistent/samples.json".into()),
            ..base()
        };
        assert!(ScenarioConfig::resolve(absent).is_err());
        assert!(toml::from_str::<ConfigFile>("omega_0 = 1.0").is_err());
    }

    #[test]
    fn initial_state_syntax() {
        assert_eq!("minus".parse::<InitialState>().unwrap(), InitialState::Minus);
        let custom: InitialState = "custom:0.6,0;0,0.8".parse().unwrap();
        assert_eq!(custom, InitialState::Custom(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]));
        assert_eq!(custom.to_string().parse::<InitialState>().unwrap(), custom);
        assert!("custom:1".parse::<InitialState>().is_err());
        assert!("up".parse::<InitialState>().is_err());
    }
}
