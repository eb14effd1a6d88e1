//! Jump-Markov motion models, the linear position sensor, and the model-set
//! configuration (transition matrix, model distribution at birth, and per-model
//! survival/detection probabilities).
//!
//! States are ordered `[x, vx, y, vy]`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const STOCHASTIC_TOL: f64 = 1e-9;
/// Turn rates below this magnitude use the constant-velocity transition.
pub const MIN_TURN_RATE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MotionKind {
    ConstantVelocity { sigma: f64 },
    /// Positive turn rate is counterclockwise, in rad/s.
    ConstantTurn { sigma: f64, turn_rate: f64 },
}

/// A linear-Gaussian motion model `x' = F x + v`, `v ~ N(0, Q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionModel {
    pub kind: MotionKind,
    pub sampling_period: f64,
    pub transition: DMatrix<f64>,
    pub process_noise: DMatrix<f64>,
}

impl MotionModel {
    pub fn from_kind(kind: MotionKind, sampling_period: f64) -> Self {
        match kind {
            MotionKind::ConstantVelocity { sigma } => cv_model(sampling_period, sigma),
            MotionKind::ConstantTurn { sigma, turn_rate } => ct_model(sampling_period, sigma, turn_rate),
        }
    }

    pub fn sigma(&self) -> f64 {
        match self.kind {
            MotionKind::ConstantVelocity { sigma } | MotionKind::ConstantTurn { sigma, .. } => sigma,
        }
    }
}

fn white_acceleration_noise(t: f64, sigma: f64) -> DMatrix<f64> {
    let (t2, t3, t4) = (t * t, t * t * t, t * t * t * t);
    let s2 = sigma * sigma;
    let mut q = DMatrix::zeros(4, 4);
    for axis in 0..2 {
        let o = 2 * axis;
        q[(o, o)] = s2 * t4 / 4.0;
        q[(o, o + 1)] = s2 * t3 / 2.0;
        q[(o + 1, o)] = s2 * t3 / 2.0;
        q[(o + 1, o + 1)] = s2 * t2;
    }
    q
}

fn cv_transition(t: f64) -> DMatrix<f64> {
    #[rustfmt::skip]
    let f = DMatrix::from_row_slice(4, 4, &[
        1.0, t,   0.0, 0.0,
        0.0, 1.0, 0.0, 0.0,
        0.0, 0.0, 1.0, t,
        0.0, 0.0, 0.0, 1.0,
    ]);
    f
}

/// Nearly-constant-velocity model with white acceleration noise of standard
/// deviation `sigma` (m/s²) on each axis.
pub fn cv_model(sampling_period: f64, sigma: f64) -> MotionModel {
    MotionModel {
        kind: MotionKind::ConstantVelocity { sigma },
        sampling_period,
        transition: cv_transition(sampling_period),
        process_noise: white_acceleration_noise(sampling_period, sigma),
    }
}

/// Coordinated-turn model with known turn rate `turn_rate` (rad/s,
/// counterclockwise positive). The process noise has the same structure as
/// [`cv_model`].
pub fn ct_model(sampling_period: f64, sigma: f64, turn_rate: f64) -> MotionModel {
    let t = sampling_period;
    let transition = if turn_rate.abs() < MIN_TURN_RATE {
        cv_transition(t)
    } else {
        let w = turn_rate;
        let (s, c) = (w * t).sin_cos();
        #[rustfmt::skip]
        let f = DMatrix::from_row_slice(4, 4, &[
            1.0, s / w,         0.0, -(1.0 - c) / w,
            0.0, c,             0.0, -s,
            0.0, (1.0 - c) / w, 1.0, s / w,
            0.0, s,             0.0, c,
        ]);
        f
    };
    MotionModel {
        kind: MotionKind::ConstantTurn { sigma, turn_rate },
        sampling_period: t,
        transition,
        process_noise: white_acceleration_noise(t, sigma),
    }
}

/// Axis-aligned box in measurement space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Region {
    pub fn square(lo: f64, hi: f64) -> Self {
        Self {
            min: vec![lo, lo],
            max: vec![hi, hi],
        }
    }

    pub fn volume(&self) -> f64 {
        self.min.iter().zip(&self.max).map(|(lo, hi)| hi - lo).product()
    }

    pub fn contains(&self, z: &DVector<f64>) -> bool {
        z.len() == self.min.len()
            && z.iter()
                .zip(self.min.iter().zip(&self.max))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn validate(&self) -> Result<()> {
        if self.min.len() != self.max.len() || self.min.is_empty() {
            return Err(Error::config("region", "min and max must have the same nonzero length"));
        }
        if self.min.iter().zip(&self.max).any(|(lo, hi)| !(hi > lo)) {
            return Err(Error::config("region", "every max bound must exceed its min bound"));
        }
        Ok(())
    }
}

/// Linear-Gaussian sensor `z = H x + w`, `w ~ N(0, R)`, with uniform Poisson
/// clutter over `region`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementModel {
    pub observation: DMatrix<f64>,
    pub noise: DMatrix<f64>,
    pub clutter_rate: f64,
    pub region: Region,
}

impl MeasurementModel {
    /// Planar position sensor for `[x, vx, y, vy]` states with isotropic noise.
    pub fn position_2d(noise_std: f64, clutter_rate: f64, region: Region) -> Self {
        #[rustfmt::skip]
        let observation = DMatrix::from_row_slice(2, 4, &[
            1.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 1.0, 0.0,
        ]);
        Self {
            observation,
            noise: DMatrix::identity(2, 2) * (noise_std * noise_std),
            clutter_rate,
            region,
        }
    }

    pub fn measurement_dim(&self) -> usize {
        self.observation.nrows()
    }

    /// Clutter intensity `c(z)`: `λ_c / volume` inside the region, 0 outside.
    pub fn clutter_density(&self, z: &DVector<f64>) -> f64 {
        if self.region.contains(z) {
            self.clutter_rate / self.region.volume()
        } else {
            0.0
        }
    }
}

/// Model set of a jump Markov system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JmsFile", into = "JmsFile")]
pub struct JmsConfig {
    pub models: Vec<MotionModel>,
    /// Row-stochastic; `tpm[from][to]`.
    pub tpm: Vec<Vec<f64>>,
    pub birth_model_dist: Vec<f64>,
    pub p_detect: Vec<f64>,
    pub p_survive: Vec<f64>,
}

impl JmsConfig {
    pub fn num_models(&self) -> usize {
        self.models.len()
    }

    pub fn state_dim(&self) -> usize {
        self.models.first().map_or(0, |m| m.transition.nrows())
    }

    /// Copy with the same detection probability for every model.
    pub fn with_uniform_detection(&self, p_detect: f64) -> Self {
        Self {
            p_detect: vec![p_detect; self.models.len()],
            ..self.clone()
        }
    }

    /// The three-model set used in the reference maneuvering scenario:
    /// CV, counterclockwise CT, clockwise CT, all with σ = 5 m/s², turn rate
    /// 10°/s, sticky transition matrix with 0.8 on the diagonal.
    pub fn reference_three_model(p_detect: f64, p_survive: f64) -> Self {
        let t = 1.0;
        let w = 10f64.to_radians();
        Self {
            models: vec![cv_model(t, 5.0), ct_model(t, 5.0, w), ct_model(t, 5.0, -w)],
            tpm: vec![
                vec![0.8, 0.1, 0.1],
                vec![0.1, 0.8, 0.1],
                vec![0.1, 0.1, 0.8],
            ],
            birth_model_dist: vec![0.5, 0.25, 0.25],
            p_detect: vec![p_detect; 3],
            p_survive: vec![p_survive; 3],
        }
    }
}

fn check_probability(field: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::config(field, format!("probability {p} outside [0, 1]")));
    }
    Ok(())
}

/// Returns the configuration unchanged iff every model-set invariant holds.
pub fn validate_jms(config: JmsConfig) -> Result<JmsConfig> {
    let m = config.models.len();
    if m == 0 {
        return Err(Error::config("models", "at least one motion model is required"));
    }
    let d = config.models[0].transition.nrows();
    for (i, model) in config.models.iter().enumerate() {
        if model.transition.shape() != (d, d) || model.process_noise.shape() != (d, d) {
            return Err(Error::config(
                format!("models[{i}]"),
                format!("transition and process noise must be {d}x{d}"),
            ));
        }
        if !crate::gaussian::is_symmetric(&model.process_noise, 1e-9) {
            return Err(Error::config(format!("models[{i}].process_noise"), "not symmetric"));
        }
    }
    if config.tpm.len() != m {
        return Err(Error::config("tpm", format!("expected {m} rows, got {}", config.tpm.len())));
    }
    for (i, row) in config.tpm.iter().enumerate() {
        if row.len() != m {
            return Err(Error::config(
                format!("tpm row {i}"),
                format!("expected {m} entries, got {}", row.len()),
            ));
        }
        for (j, p) in row.iter().enumerate() {
            check_probability(&format!("tpm row {i} column {j}"), *p)?;
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::config(format!("tpm row {i}"), format!("sums to {sum}, expected 1")));
        }
    }
    for (field, values) in [
        ("birth_model_dist", &config.birth_model_dist),
        ("p_detect", &config.p_detect),
        ("p_survive", &config.p_survive),
    ] {
        if values.len() != m {
            return Err(Error::config(field, format!("expected {m} entries, got {}", values.len())));
        }
        for (i, p) in values.iter().enumerate() {
            check_probability(&format!("{field}[{i}]"), *p)?;
        }
    }
    let sum: f64 = config.birth_model_dist.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::config("birth_model_dist", format!("sums to {sum}, expected 1")));
    }
    Ok(config)
}

/// Motion model as written in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MotionSpec {
    Cv { sigma: f64 },
    /// Turn rate in degrees per second, counterclockwise positive.
    Ct { sigma: f64, turn_rate_deg: f64 },
}

/// Either one value for all models or one per model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerModel {
    Uniform(f64),
    Each(Vec<f64>),
}

impl PerModel {
    fn expand(&self, m: usize) -> Vec<f64> {
        match self {
            PerModel::Uniform(v) => vec![*v; m],
            PerModel::Each(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JmsFile {
    #[serde(default = "default_sampling_period")]
    pub sampling_period: f64,
    pub models: Vec<MotionSpec>,
    pub tpm: Vec<Vec<f64>>,
    pub birth_model_dist: Vec<f64>,
    pub p_detect: PerModel,
    pub p_survive: PerModel,
}

fn default_sampling_period() -> f64 {
    1.0
}

impl TryFrom<JmsFile> for JmsConfig {
    type Error = Error;

    fn try_from(file: JmsFile) -> Result<Self> {
        if !(file.sampling_period > 0.0) {
            return Err(Error::config("sampling_period", "must be positive"));
        }
        let models: Vec<MotionModel> = file
            .models
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                let (sigma, kind) = match *spec {
                    MotionSpec::Cv { sigma } => (sigma, MotionKind::ConstantVelocity { sigma }),
                    MotionSpec::Ct { sigma, turn_rate_deg } => (
                        sigma,
                        MotionKind::ConstantTurn {
                            sigma,
                            turn_rate: turn_rate_deg.to_radians(),
                        },
                    ),
                };
                if !(sigma >= 0.0) {
                    return Err(Error::config(format!("models[{i}].sigma"), "must be >= 0"));
                }
                Ok(MotionModel::from_kind(kind, file.sampling_period))
            })
            .collect::<Result<_>>()?;
        let m = models.len();
        validate_jms(JmsConfig {
            models,
            tpm: file.tpm,
            birth_model_dist: file.birth_model_dist,
            p_detect: file.p_detect.expand(m),
            p_survive: file.p_survive.expand(m),
        })
    }
}

impl From<JmsConfig> for JmsFile {
    fn from(config: JmsConfig) -> Self {
        let sampling_period = config.models.first().map_or(1.0, |m| m.sampling_period);
        JmsFile {
            sampling_period,
            models: config
                .models
                .iter()
                .map(|m| match m.kind {
                    MotionKind::ConstantVelocity { sigma } => MotionSpec::Cv { sigma },
                    MotionKind::ConstantTurn { sigma, turn_rate } => MotionSpec::Ct {
                        sigma,
                        turn_rate_deg: turn_rate.to_degrees(),
                    },
                })
                .collect(),
            tpm: config.tpm,
            birth_model_dist: config.birth_model_dist,
            p_detect: PerModel::Each(config.p_detect),
            p_survive: PerModel::Each(config.p_survive),
        }
    }
}
