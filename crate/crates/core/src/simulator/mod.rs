//! Ground truth and sensor simulation for maneuvering targets, plus the
//! Monte Carlo harness.

mod campaign;

pub use campaign::{
    run_monte_carlo, thread_count, Campaign, Cell, CellResult, FilterSetup, RunFailure, RunTrace,
    THREADS_ENV,
};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jms::{JmsConfig, MeasurementModel, Region};

/// Step at which a schedule segment starts: fixed, or drawn uniformly from an
/// inclusive range once per target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SwitchTime {
    Fixed(usize),
    Uniform([usize; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSegment {
    /// Index into the model set.
    pub model: usize,
    pub start: SwitchTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    /// First step the target exists.
    pub birth: usize,
    /// First step the target no longer exists; `None` keeps it to the horizon.
    #[serde(default)]
    pub death: Option<usize>,
    /// `[x, vx, y, vy]` at the birth step.
    pub initial_state: Vec<f64>,
    pub schedule: Vec<ScheduleSegment>,
}

/// Full experiment parameterization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub region: Region,
    /// Number of scans; steps are numbered `1..=horizon`.
    pub horizon: usize,
    pub targets: Vec<TargetSpec>,
    pub clutter_rate: f64,
    pub p_detect: f64,
    pub noise_std: f64,
    pub p_detect_sweep: Vec<f64>,
    pub noise_std_sweep: Vec<f64>,
    pub num_runs: usize,
    pub rng_seed: u64,
    /// Extra white noise (m) added to true positions each step; 0 disables it.
    #[serde(default)]
    pub position_jitter_std: f64,
}

impl ScenarioConfig {
    /// Three maneuvering targets in a 5 km square: CV until step 15, then a
    /// counterclockwise turn, then a clockwise turn from a random step in
    /// `[15, 30]`. Targets 1 and 2 leave at steps 40 and 50.
    pub fn reference() -> Self {
        let schedule = vec![
            ScheduleSegment {
                model: 0,
                start: SwitchTime::Fixed(1),
            },
            ScheduleSegment {
                model: 1,
                start: SwitchTime::Fixed(15),
            },
            ScheduleSegment {
                model: 2,
                start: SwitchTime::Uniform([15, 30]),
            },
        ];
        let target = |birth, death, initial_state: [f64; 4]| TargetSpec {
            birth,
            death,
            initial_state: initial_state.to_vec(),
            schedule: schedule.clone(),
        };
        Self {
            region: Region::square(0.0, 5000.0),
            horizon: 60,
            targets: vec![
                target(1, Some(40), [0.0, 50.0, 1500.0, 15.0]),
                target(1, Some(50), [3000.0, -30.0, 1000.0, 40.0]),
                target(10, None, [2500.0, 30.0, 3000.0, -35.0]),
            ],
            clutter_rate: 10.0,
            p_detect: 0.95,
            noise_std: 10.0,
            p_detect_sweep: vec![0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95],
            noise_std_sweep: vec![5.0, 10.0, 15.0, 20.0, 25.0],
            num_runs: 100,
            rng_seed: 2024,
            position_jitter_std: 0.0,
        }
    }

    pub fn validate(&self, jms: &JmsConfig) -> Result<()> {
        self.region.validate()?;
        if self.region.min.len() != 2 {
            return Err(Error::config("scenario.region", "must be planar"));
        }
        if self.horizon == 0 {
            return Err(Error::config("scenario.horizon", "must be >= 1"));
        }
        if !(self.clutter_rate >= 0.0 && self.clutter_rate.is_finite()) {
            return Err(Error::config("scenario.clutter_rate", "must be finite and >= 0"));
        }
        check_pd("scenario.p_detect", self.p_detect)?;
        check_std("scenario.noise_std", self.noise_std)?;
        check_std("scenario.position_jitter_std", self.position_jitter_std)?;
        for (i, &p) in self.p_detect_sweep.iter().enumerate() {
            check_pd(&format!("scenario.p_detect_sweep[{i}]"), p)?;
        }
        for (i, &s) in self.noise_std_sweep.iter().enumerate() {
            check_std(&format!("scenario.noise_std_sweep[{i}]"), s)?;
        }
        if self.num_runs == 0 {
            return Err(Error::config("scenario.num_runs", "must be >= 1"));
        }
        let d = jms.state_dim();
        for (i, t) in self.targets.iter().enumerate() {
            let field = |name: &str| format!("scenario.targets[{i}].{name}");
            if t.birth == 0 || t.birth > self.horizon {
                return Err(Error::config(field("birth"), format!("must be in 1..={}", self.horizon)));
            }
            if let Some(death) = t.death {
                if death <= t.birth || death > self.horizon {
                    return Err(Error::config(
                        field("death"),
                        format!("must satisfy birth < death <= {}", self.horizon),
                    ));
                }
            }
            if t.initial_state.len() != d {
                return Err(Error::config(field("initial_state"), format!("expected {d} entries")));
            }
            if t.schedule.is_empty() {
                return Err(Error::config(field("schedule"), "at least one segment is required"));
            }
            let mut last = 0;
            for (j, seg) in t.schedule.iter().enumerate() {
                if seg.model >= jms.num_models() {
                    return Err(Error::config(
                        field(&format!("schedule[{j}].model")),
                        format!("no model with index {}", seg.model),
                    ));
                }
                let (lo, hi) = match seg.start {
                    SwitchTime::Fixed(s) => (s, s),
                    SwitchTime::Uniform([lo, hi]) => (lo, hi),
                };
                if lo > hi || lo < last {
                    return Err(Error::config(
                        field(&format!("schedule[{j}].start")),
                        "segment starts must be nondecreasing ranges",
                    ));
                }
                last = lo;
            }
            if schedule_first_start(&t.schedule) > t.birth {
                return Err(Error::config(field("schedule"), "first segment must start by the birth step"));
            }
        }
        Ok(())
    }

    pub fn measurement_model(&self, noise_std: f64) -> MeasurementModel {
        MeasurementModel::position_2d(noise_std, self.clutter_rate, self.region.clone())
    }
}

fn schedule_first_start(schedule: &[ScheduleSegment]) -> usize {
    match schedule[0].start {
        SwitchTime::Fixed(s) => s,
        SwitchTime::Uniform([lo, _]) => lo,
    }
}

fn check_pd(field: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::config(field, format!("probability {p} outside [0, 1]")));
    }
    Ok(())
}

fn check_std(field: &str, s: f64) -> Result<()> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::config(field, "must be finite and >= 0"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthTarget {
    pub id: usize,
    pub state: DVector<f64>,
    pub model: usize,
}

/// Ground truth; `steps[k - 1]` holds the live targets at step `k`, ordered by id.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthRecord {
    pub steps: Vec<Vec<TruthTarget>>,
}

impl TruthRecord {
    pub fn cardinality(&self) -> Vec<usize> {
        self.steps.iter().map(Vec::len).collect()
    }
}

/// Independent random streams for one run.
const STREAM_TRUTH: u64 = 1;
const STREAM_DETECTION: u64 = 2;
const STREAM_CLUTTER: u64 = 3;
const STREAM_JITTER: u64 = 4;

pub(crate) fn stream(seed: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose);
    rng
}

/// Symmetric square root of a PSD matrix, tolerant of zero eigenvalues.
fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let root = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose()
}

fn normals(rng: &mut impl Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Active model at step `k` given the resolved segment starts.
fn active_model(schedule: &[(usize, usize)], k: usize) -> usize {
    schedule
        .iter()
        .take_while(|(start, _)| *start <= k)
        .last()
        .map_or(schedule[0].1, |(_, model)| *model)
}

/// Simulates every target with its scheduled model's dynamics and process
/// noise. The same seed always gives the same record.
pub fn generate_truth(cfg: &ScenarioConfig, jms: &JmsConfig, seed: u64) -> TruthRecord {
    let mut rng = stream(seed, STREAM_TRUTH);
    let mut jitter = stream(seed, STREAM_JITTER);
    let roots: Vec<DMatrix<f64>> = jms.models.iter().map(|m| psd_sqrt(&m.process_noise)).collect();
    let mut steps = vec![Vec::new(); cfg.horizon];
    for (id, target) in cfg.targets.iter().enumerate() {
        let mut floor = 0;
        let schedule: Vec<(usize, usize)> = target
            .schedule
            .iter()
            .map(|seg| {
                let start = match seg.start {
                    SwitchTime::Fixed(s) => s,
                    SwitchTime::Uniform([lo, hi]) => rng.random_range(lo..=hi),
                }
                .max(floor);
                floor = start;
                (start, seg.model)
            })
            .collect();
        let end = target.death.unwrap_or(cfg.horizon + 1).min(cfg.horizon + 1);
        let mut state = DVector::from_column_slice(&target.initial_state);
        for k in target.birth..end {
            let model = active_model(&schedule, k);
            if k > target.birth {
                let m = &jms.models[model];
                let noise = &roots[model] * normals(&mut rng, state.len());
                state = &m.transition * &state + noise;
                if cfg.position_jitter_std > 0.0 {
                    state[0] += cfg.position_jitter_std * jitter.sample::<f64, _>(StandardNormal);
                    state[2] += cfg.position_jitter_std * jitter.sample::<f64, _>(StandardNormal);
                }
            }
            steps[k - 1].push(TruthTarget {
                id,
                state: state.clone(),
                model,
            });
        }
    }
    TruthRecord { steps }
}

/// Random streams for the sensor side of one run. Every live target consumes
/// one uniform and one noise vector per step whether or not it is detected,
/// so runs that differ only in `p_D` or noise level see the same draws.
pub struct SensorStreams {
    detection: ChaCha8Rng,
    clutter: ChaCha8Rng,
}

impl SensorStreams {
    pub fn new(seed: u64) -> Self {
        Self {
            detection: stream(seed, STREAM_DETECTION),
            clutter: stream(seed, STREAM_CLUTTER),
        }
    }

    /// Detections of the live targets (inside the region only) plus Poisson
    /// clutter uniform over the region, in shuffled order.
    pub fn measure(
        &mut self,
        live: &[TruthTarget],
        meas: &MeasurementModel,
        p_detect: f64,
    ) -> Vec<DVector<f64>> {
        let root = psd_sqrt(&meas.noise);
        let dim = meas.measurement_dim();
        let mut out = Vec::new();
        for target in live {
            let u: f64 = self.detection.random();
            let noise = &root * normals(&mut self.detection, dim);
            if u < p_detect {
                let z = &meas.observation * &target.state + noise;
                if meas.region.contains(&z) {
                    out.push(z);
                }
            }
        }
        let count = if meas.clutter_rate > 0.0 {
            Poisson::new(meas.clutter_rate).map_or(0, |p| p.sample(&mut self.clutter) as usize)
        } else {
            0
        };
        let (lo, hi) = (&meas.region.min, &meas.region.max);
        for _ in 0..count {
            out.push(DVector::from_fn(dim, |i, _| {
                lo[i] + (hi[i] - lo[i]) * self.clutter.random::<f64>()
            }));
        }
        // Fisher-Yates driven by the clutter stream
        for i in (1..out.len()).rev() {
            let j = self.clutter.random_range(0..=i);
            out.swap(i, j);
        }
        out
    }
}

/// One scan of measurements for a single truth step.
pub fn generate_measurements(
    live: &[TruthTarget],
    meas: &MeasurementModel,
    p_detect: f64,
    seed: u64,
) -> Vec<DVector<f64>> {
    SensorStreams::new(seed).measure(live, meas, p_detect)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jms::cv_model;

    fn cv_only(sigma: f64) -> JmsConfig {
        JmsConfig {
            models: vec![cv_model(1.0, sigma)],
            tpm: vec![vec![1.0]],
            birth_model_dist: vec![1.0],
            p_detect: vec![1.0],
            p_survive: vec![1.0],
        }
    }

    fn one_target(initial_state: [f64; 4]) -> ScenarioConfig {
        ScenarioConfig {
            targets: vec![TargetSpec {
                birth: 1,
                death: None,
                initial_state: initial_state.to_vec(),
                schedule: vec![ScheduleSegment {
                    model: 0,
                    start: SwitchTime::Fixed(1),
                }],
            }],
            ..ScenarioConfig::reference()
        }
    }

    #[test]
    fn noiseless_cv_advances_exactly() {
        let cfg = one_target([100.0, 10.0, 200.0, 0.0]);
        let truth = generate_truth(&cfg, &cv_only(0.0), 7);
        for (k, step) in truth.steps.iter().enumerate() {
            assert_eq!(step[0].state[0], 100.0 + 10.0 * k as f64);
            assert_eq!(step[0].state[2], 200.0);
        }
    }

    #[test]
    fn reference_cardinality_sequence() {
        let cfg = ScenarioConfig::reference();
        let jms = JmsConfig::reference_three_model(0.95, 0.99);
        cfg.validate(&jms).unwrap();
        let card = generate_truth(&cfg, &jms, 1).cardinality();
        for (i, c) in card.iter().enumerate() {
            let k = i + 1;
            let expected = match k {
                1..=9 => 2,
                10..=39 => 3,
                40..=49 => 2,
                _ => 1,
            };
            assert_eq!(*c, expected, "k={k}");
        }
    }

    #[test]
    fn reference_schedule() {
        let cfg = ScenarioConfig::reference();
        let jms = JmsConfig::reference_three_model(0.95, 0.99);
        for seed in 0..20 {
            let truth = generate_truth(&cfg, &jms, seed);
            for id in 0..3 {
                let models: Vec<(usize, usize)> = truth
                    .steps
                    .iter()
                    .enumerate()
                    .filter_map(|(i, s)| s.iter().find(|t| t.id == id).map(|t| (i + 1, t.model)))
                    .collect();
                let switch = models.iter().find(|(_, m)| *m == 2).map(|(k, _)| *k);
                let switch = switch.expect("clockwise segment reached");
                assert!((15..=30).contains(&switch));
                for &(k, m) in &models {
                    let expected = if k < 15 { 0 } else if k < switch { 1 } else { 2 };
                    assert_eq!(m, expected);
                }
            }
        }
    }

    #[test]
    fn truth_is_deterministic() {
        let cfg = ScenarioConfig::reference();
        let jms = JmsConfig::reference_three_model(0.95, 0.99);
        assert_eq!(generate_truth(&cfg, &jms, 5), generate_truth(&cfg, &jms, 5));
        assert_ne!(generate_truth(&cfg, &jms, 5), generate_truth(&cfg, &jms, 6));
    }

    #[test]
    fn perfect_sensor() {
        let live = vec![
            TruthTarget {
                id: 0,
                state: DVector::from_vec(vec![100.0, 1.0, 250.0, 2.0]),
                model: 0,
            },
            TruthTarget {
                id: 1,
                state: DVector::from_vec(vec![4000.0, 1.0, 10.0, 2.0]),
                model: 0,
            },
        ];
        let meas = MeasurementModel::position_2d(0.0, 0.0, Region::square(0.0, 5000.0));
        let z = generate_measurements(&live, &meas, 1.0, 3);
        assert_eq!(z.len(), 2);
        for t in &live {
            assert!(z.iter().any(|z| z[0] == t.state[0] && z[1] == t.state[2]));
        }
    }

    #[test]
    fn clutter_count_mean() {
        let meas = MeasurementModel::position_2d(10.0, 10.0, Region::square(0.0, 5000.0));
        let mut streams = SensorStreams::new(11);
        let scans = 10_000;
        let total: usize = (0..scans).map(|_| streams.measure(&[], &meas, 0.0).len()).sum();
        let mean = total as f64 / scans as f64;
        let three_sigma = 3.0 * (10.0 / scans as f64).sqrt();
        assert!((mean - 10.0).abs() < three_sigma, "mean {mean}");
    }

    #[test]
    fn detection_frequency() {
        let meas = MeasurementModel::position_2d(1.0, 0.0, Region::square(0.0, 5000.0));
        let live = vec![TruthTarget {
            id: 0,
            state: DVector::from_vec(vec![2500.0, 0.0, 2500.0, 0.0]),
            model: 0,
        }];
        let mut streams = SensorStreams::new(13);
        let scans = 10_000;
        let pd = 0.7;
        let hits: usize = (0..scans).map(|_| streams.measure(&live, &meas, pd).len()).sum();
        let freq = hits as f64 / scans as f64;
        let three_sigma = 3.0 * (pd * (1.0 - pd) / scans as f64).sqrt();
        assert!((freq - pd).abs() < three_sigma, "freq {freq}");
    }

    #[test]
    fn detections_outside_region_are_dropped() {
        let meas = MeasurementModel::position_2d(0.0, 0.0, Region::square(0.0, 5000.0));
        let live = vec![TruthTarget {
            id: 0,
            state: DVector::from_vec(vec![-5.0, 0.0, 100.0, 0.0]),
            model: 0,
        }];
        assert!(generate_measurements(&live, &meas, 1.0, 0).is_empty());
    }

    #[test]
    fn invalid_schedule_is_rejected() {
        let jms = JmsConfig::reference_three_model(0.95, 0.99);
        let mut cfg = ScenarioConfig::reference();
        cfg.targets[0].schedule[1].model = 7;
        let err = cfg.validate(&jms).unwrap_err().to_string();
        assert!(err.contains("scenario.targets[0].schedule[1].model"), "{err}");
        let mut cfg = ScenarioConfig::reference();
        cfg.targets[1].death = Some(1);
        assert!(cfg.validate(&jms).is_err());
    }

    #[test]
    fn position_jitter_moves_only_positions() {
        let mut cfg = one_target([100.0, 10.0, 200.0, 0.0]);
        let jms = cv_only(0.0);
        let plain = generate_truth(&cfg, &jms, 3);
        cfg.position_jitter_std = 2.0;
        let jittered = generate_truth(&cfg, &jms, 3);
        let last = cfg.horizon - 1;
        let (a, b) = (&plain.steps[last][0].state, &jittered.steps[last][0].state);
        assert_ne!(a[0], b[0]);
        assert_eq!(a[1], b[1]);
        assert_eq!(a[3], b[3]);
        assert_eq!(plain.steps[0][0].state, jittered.steps[0][0].state);
    }
}
