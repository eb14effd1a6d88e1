use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gaussian::GaussianMixture;
use crate::jms::JmsConfig;
use crate::metrics::{cardinality_error, ospa, position, CardinalityStep, OspaParams};
use crate::pmbm::{FilterParams, MmPmbmFilter, ModelConditionedDensity};

use super::{generate_truth, ScenarioConfig, SensorStreams};

/// Environment variable that caps the worker thread count.
pub const THREADS_ENV: &str = "MMPMBM_THREADS";

/// Worker threads requested through the environment, if any.
pub fn thread_count() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Everything the filter needs beyond the model set and the sensor.
#[derive(Debug, Clone)]
pub struct FilterSetup {
    /// Birth intensity before splitting over models.
    pub birth: GaussianMixture,
    pub params: FilterParams,
    pub ospa: OspaParams,
}

/// One sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub p_detect: f64,
    pub noise_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub run: usize,
    pub seed: u64,
    pub ospa: Vec<f64>,
    pub card_est: Vec<usize>,
    pub card_true: Vec<usize>,
    #[serde(skip)]
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub run: usize,
    pub seed: u64,
    pub step: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: Cell,
    pub runs: Vec<RunTrace>,
    pub failures: Vec<RunFailure>,
    /// Mean OSPA over all steps of all successful runs.
    pub mean_ospa: f64,
    pub ospa_per_step: Vec<f64>,
    pub cardinality: Vec<CardinalityStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub cells: Vec<CellResult>,
    pub wall_clock_secs: f64,
    pub mean_run_secs: f64,
    pub max_run_secs: f64,
}

fn run_seed(cfg: &ScenarioConfig, run: usize) -> u64 {
    cfg.rng_seed.wrapping_add(run as u64)
}

fn single_run(
    cfg: &ScenarioConfig,
    jms: &JmsConfig,
    filter: &MmPmbmFilter,
    cell: Cell,
    ospa_params: &OspaParams,
    run: usize,
) -> std::result::Result<RunTrace, RunFailure> {
    let started = Instant::now();
    let seed = run_seed(cfg, run);
    let truth = generate_truth(cfg, jms, seed);
    let mut sensor = SensorStreams::new(seed);
    let mut state = filter.initial_state();
    let mut trace = RunTrace {
        run,
        seed,
        ospa: Vec::with_capacity(cfg.horizon),
        card_est: Vec::with_capacity(cfg.horizon),
        card_true: truth.cardinality(),
        elapsed_secs: 0.0,
    };
    let fail = |step: usize, message: String| RunFailure { run, seed, step, message };
    for (i, live) in truth.steps.iter().enumerate() {
        let z = sensor.measure(live, &filter.measurement, cell.p_detect);
        state = filter.step(&state, &z).map_err(|e| fail(i + 1, e.to_string()))?;
        let est: Vec<_> = filter.estimates(&state).iter().map(|e| position(&e.state)).collect();
        let actual: Vec<_> = live.iter().map(|t| position(&t.state)).collect();
        let d = ospa(&est, &actual, ospa_params).map_err(|e| fail(i + 1, e.to_string()))?;
        trace.ospa.push(d);
        trace.card_est.push(est.len());
    }
    trace.elapsed_secs = started.elapsed().as_secs_f64();
    Ok(trace)
}

fn build_filter(cfg: &ScenarioConfig, jms: &JmsConfig, setup: &FilterSetup, cell: Cell) -> Result<MmPmbmFilter> {
    let jms = jms.with_uniform_detection(cell.p_detect);
    let birth = ModelConditionedDensity::birth(&setup.birth, &jms.birth_model_dist);
    MmPmbmFilter::new(jms, cfg.measurement_model(cell.noise_std), birth, setup.params.clone())
}

fn summarize(cell: Cell, horizon: usize, outcomes: Vec<std::result::Result<RunTrace, RunFailure>>) -> CellResult {
    let (mut runs, mut failures) = (Vec::new(), Vec::new());
    for outcome in outcomes {
        match outcome {
            Ok(t) => runs.push(t),
            Err(f) => failures.push(f),
        }
    }
    let n = runs.len().max(1) as f64;
    let ospa_per_step: Vec<f64> = (0..horizon)
        .map(|k| runs.iter().map(|r| r.ospa[k]).sum::<f64>() / n)
        .collect();
    let mean_ospa = if runs.is_empty() {
        f64::NAN
    } else {
        ospa_per_step.iter().sum::<f64>() / horizon as f64
    };
    let truth = runs.first().map_or_else(|| vec![0; horizon], |r| r.card_true.clone());
    let estimates: Vec<Vec<usize>> = runs.iter().map(|r| r.card_est.clone()).collect();
    let cardinality = cardinality_error(&estimates, &truth).unwrap_or_default();
    CellResult {
        cell,
        runs,
        failures,
        mean_ospa,
        ospa_per_step,
        cardinality,
    }
}

/// Runs `cfg.num_runs` independent filter passes for every cell. Run `r` uses
/// seed `rng_seed + r` in every cell, so cells share truth and random draws.
/// Runs execute in parallel; results are ordered by cell, then run index.
pub fn run_monte_carlo(
    cfg: &ScenarioConfig,
    jms: &JmsConfig,
    setup: &FilterSetup,
    cells: &[Cell],
) -> Result<Campaign> {
    cfg.validate(jms)?;
    setup.ospa.validate()?;
    let filters = cells
        .iter()
        .map(|&c| build_filter(cfg, jms, setup, c))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.num_runs).map(move |r| (c, r)))
        .collect();

    let started = Instant::now();
    let execute = || {
        jobs.par_iter()
            .map(|&(c, r)| single_run(cfg, jms, &filters[c], cells[c], &setup.ospa, r))
            .collect::<Vec<_>>()
    };
    let outcomes = match thread_count() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_or_else(|_| execute(), |pool| pool.install(execute)),
        None => execute(),
    };
    let wall_clock_secs = started.elapsed().as_secs_f64();

    let times: Vec<f64> = outcomes.iter().flatten().map(|t| t.elapsed_secs).collect();
    let mut outcomes = outcomes.into_iter();
    let cells = cells
        .iter()
        .map(|&cell| summarize(cell, cfg.horizon, outcomes.by_ref().take(cfg.num_runs).collect()))
        .collect();
    Ok(Campaign {
        cells,
        wall_clock_secs,
        mean_run_secs: if times.is_empty() { 0.0 } else { times.iter().sum::<f64>() / times.len() as f64 },
        max_run_secs: times.iter().copied().fold(0.0, f64::max),
    })
}
