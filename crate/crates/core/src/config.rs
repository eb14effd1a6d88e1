//! Run configuration file (TOML).

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{GaussianComponent, GaussianMixture};
use crate::jms::JmsConfig;
use crate::metrics::OspaParams;
use crate::pmbm::FilterParams;
use crate::simulator::{Cell, FilterSetup, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Single,
    SweepPd,
    SweepNoise,
    ValidateConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("results"),
            formats: vec![OutputFormat::Csv, OutputFormat::Json, OutputFormat::Svg],
        }
    }
}

impl OutputConfig {
    pub fn wants(&self, format: OutputFormat) -> bool {
        self.formats.contains(&format)
    }
}

/// Birth intensity: equal-weight Gaussians with a shared diagonal covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BirthConfig {
    pub weight: f64,
    pub means: Vec<Vec<f64>>,
    /// Per-coordinate standard deviations.
    pub std: Vec<f64>,
}

impl BirthConfig {
    pub fn reference() -> Self {
        Self {
            weight: 0.1,
            means: vec![
                vec![0.0, 0.0, 1500.0, 0.0],
                vec![3000.0, 0.0, 1000.0, 0.0],
                vec![2500.0, 0.0, 3000.0, 0.0],
            ],
            std: vec![500.0, 100.0, 500.0, 100.0],
        }
    }

    pub fn mixture(&self, state_dim: usize) -> Result<GaussianMixture> {
        if !(self.weight >= 0.0 && self.weight.is_finite()) {
            return Err(Error::config("birth.weight", "must be finite and >= 0"));
        }
        if self.std.len() != state_dim {
            return Err(Error::config("birth.std", format!("expected {state_dim} entries")));
        }
        if self.std.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::config("birth.std", "entries must be finite and >= 0"));
        }
        let cov = DMatrix::from_diagonal(&DVector::from_iterator(state_dim, self.std.iter().map(|s| s * s)));
        let components = self
            .means
            .iter()
            .enumerate()
            .map(|(i, m)| {
                if m.len() != state_dim {
                    return Err(Error::config(format!("birth.means[{i}]"), format!("expected {state_dim} entries")));
                }
                Ok(GaussianComponent::new(self.weight, DVector::from_column_slice(m), cov.clone()))
            })
            .collect::<Result<_>>()?;
        Ok(GaussianMixture::new(components))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Mode,
    pub scenario: ScenarioConfig,
    pub jms: JmsConfig,
    pub birth: BirthConfig,
    #[serde(default)]
    pub filter: FilterParams,
    #[serde(default)]
    pub ospa: OspaParams,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    /// The maneuvering three-target scenario with default filter settings.
    pub fn reference() -> Self {
        Self {
            mode: Mode::Single,
            scenario: ScenarioConfig::reference(),
            jms: JmsConfig::reference_three_model(0.95, 0.99),
            birth: BirthConfig::reference(),
            filter: FilterParams::default(),
            ospa: OspaParams::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate(&self.jms)?;
        self.filter.validate()?;
        self.ospa.validate()?;
        self.birth.mixture(self.jms.state_dim())?;
        if self.jms.state_dim() != 4 {
            return Err(Error::config("jms.models", "states must be [x, vx, y, vy]"));
        }
        match self.mode {
            Mode::SweepPd if self.scenario.p_detect_sweep.is_empty() => {
                Err(Error::config("scenario.p_detect_sweep", "must not be empty"))
            }
            Mode::SweepNoise if self.scenario.noise_std_sweep.is_empty() => {
                Err(Error::config("scenario.noise_std_sweep", "must not be empty"))
            }
            _ => Ok(()),
        }
    }

    pub fn filter_setup(&self) -> Result<FilterSetup> {
        Ok(FilterSetup {
            birth: self.birth.mixture(self.jms.state_dim())?,
            params: self.filter.clone(),
            ospa: self.ospa,
        })
    }

    /// Sweep points for a mode. A detection sweep keeps the nominal noise
    /// level, a noise sweep keeps the nominal detection probability.
    pub fn cells(&self, mode: Mode) -> Vec<Cell> {
        let s = &self.scenario;
        match mode {
            Mode::Single | Mode::ValidateConfig => vec![Cell {
                p_detect: s.p_detect,
                noise_std: s.noise_std,
            }],
            Mode::SweepPd => s
                .p_detect_sweep
                .iter()
                .map(|&p_detect| Cell {
                    p_detect,
                    noise_std: s.noise_std,
                })
                .collect(),
            Mode::SweepNoise => s
                .noise_std_sweep
                .iter()
                .map(|&noise_std| Cell {
                    p_detect: s.p_detect,
                    noise_std,
                })
                .collect(),
        }
    }
}
