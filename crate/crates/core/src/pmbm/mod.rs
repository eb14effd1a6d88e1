//! Multiple-model Poisson multi-Bernoulli mixture filter.
//!
//! The posterior is a Poisson point process over undetected targets plus a
//! mixture of multi-Bernoulli densities over potentially detected targets.
//! Every single-target density lives on the augmented state `(x, ξ)` and is
//! stored as one Gaussian mixture per motion model.

mod estimate;
mod predict;
pub mod snapshot;
mod update;

pub use estimate::{extract_estimates, Estimate};
pub use predict::{predict_bernoulli, predict_ppp};
pub(crate) use update::density_innovations;
pub use update::{
    build_cost_matrix, update_first_detection, update_misdetection, update_step, update_undetected,
    update_with_measurement, Association,
};

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{GaussianComponent, GaussianMixture, ReductionParams};
use crate::jms::{JmsConfig, MeasurementModel};

/// One Gaussian mixture per motion model. For a Bernoulli density the model
/// mixtures together carry unit mass, and each mixture's mass is that model's
/// probability. For a Poisson intensity the mass is the expected count.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelConditionedDensity {
    pub per_model: Vec<GaussianMixture>,
}

impl ModelConditionedDensity {
    pub fn empty(num_models: usize) -> Self {
        Self {
            per_model: vec![GaussianMixture::empty(); num_models],
        }
    }

    pub fn num_models(&self) -> usize {
        self.per_model.len()
    }

    pub fn num_components(&self) -> usize {
        self.per_model.iter().map(GaussianMixture::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.per_model.iter().all(GaussianMixture::is_empty)
    }

    pub fn total_weight(&self) -> f64 {
        self.per_model.iter().map(GaussianMixture::total_weight).sum()
    }

    pub fn model_weights(&self) -> Vec<f64> {
        self.per_model.iter().map(GaussianMixture::total_weight).collect()
    }

    pub fn components(&self) -> impl Iterator<Item = (usize, &GaussianComponent)> {
        self.per_model
            .iter()
            .enumerate()
            .flat_map(|(model, gm)| gm.iter().map(move |c| (model, c)))
    }

    /// Scales all weights so they sum to one; a massless density is returned as is.
    pub fn normalized(&self) -> Self {
        let total = self.total_weight();
        if total > 0.0 {
            self.scaled(1.0 / total)
        } else {
            self.clone()
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            per_model: self.per_model.iter().map(|gm| gm.scaled(factor)).collect(),
        }
    }

    /// Reduces each model's mixture independently.
    pub fn reduce(&self, params: &ReductionParams) -> Self {
        Self {
            per_model: self.per_model.iter().map(|gm| gm.reduce(params)).collect(),
        }
    }

    /// Weighted mean over all models and components, normalized by total mass.
    pub fn mean(&self) -> Option<DVector<f64>> {
        let total = self.total_weight();
        let mut components = self.components();
        let (_, first) = components.next()?;
        let mut acc = &first.mean * first.weight;
        for (_, c) in components {
            acc += &c.mean * c.weight;
        }
        (total > 0.0).then(|| acc / total)
    }

    /// Builds a birth intensity: the model-independent mixture scaled by the
    /// model distribution at birth, one copy per model.
    pub fn birth(mixture: &GaussianMixture, birth_model_dist: &[f64]) -> Self {
        Self {
            per_model: birth_model_dist.iter().map(|f| mixture.scaled(*f)).collect(),
        }
    }
}

/// A Bernoulli component: existence probability, augmented-state density, and
/// the log weight of the single-target hypothesis that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliComponent {
    pub existence: f64,
    pub density: ModelConditionedDensity,
    pub log_weight: f64,
}

impl BernoulliComponent {
    pub fn model_probabilities(&self) -> Vec<f64> {
        self.density.model_weights()
    }
}

/// One data-association history: a weighted multi-Bernoulli density. Bernoulli
/// components are shared between hypotheses that have not diverged on them.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalHypothesis {
    pub log_weight: f64,
    pub bernoullis: Vec<Arc<BernoulliComponent>>,
}

impl GlobalHypothesis {
    pub fn weight(&self) -> f64 {
        self.log_weight.exp()
    }
}

/// Filter posterior at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct PmbmState {
    pub ppp: ModelConditionedDensity,
    pub hypotheses: Vec<GlobalHypothesis>,
    pub step: usize,
}

impl PmbmState {
    /// No undetected targets and one empty global hypothesis.
    pub fn initial(num_models: usize) -> Self {
        Self {
            ppp: ModelConditionedDensity::empty(num_models),
            hypotheses: vec![GlobalHypothesis {
                log_weight: 0.0,
                bernoullis: Vec::new(),
            }],
            step: 0,
        }
    }

    pub fn best_hypothesis(&self) -> Option<&GlobalHypothesis> {
        self.hypotheses
            .iter()
            .max_by(|a, b| a.log_weight.total_cmp(&b.log_weight))
    }

    /// Sum of hypothesis weights.
    pub fn hypothesis_mass(&self) -> f64 {
        self.hypotheses.iter().map(GlobalHypothesis::weight).sum()
    }

    /// Number of Gaussian components held in the PPP and, summed over every
    /// global hypothesis, its Bernoulli densities.
    pub fn component_counts(&self) -> (usize, usize) {
        let mbm = self
            .hypotheses
            .iter()
            .flat_map(|h| h.bernoullis.iter())
            .map(|b| b.density.num_components())
            .sum();
        (self.ppp.num_components(), mbm)
    }

    /// Checks the structural invariants: at least one hypothesis, hypothesis
    /// weights summing to one within `weight_tol`, Bernoulli densities with
    /// unit mass within `density_tol`, existence in `[0, 1]`, and model count
    /// consistent with `num_models`.
    pub fn check(&self, num_models: usize, weight_tol: f64, density_tol: f64) -> Result<()> {
        if self.hypotheses.is_empty() {
            return Err(Error::config("hypotheses", "state has no global hypothesis"));
        }
        if self.ppp.num_models() != num_models {
            return Err(Error::dims("ppp models", num_models, self.ppp.num_models()));
        }
        let mass = self.hypothesis_mass();
        if (mass - 1.0).abs() > weight_tol {
            return Err(Error::config("hypotheses", format!("weights sum to {mass}")));
        }
        for (j, h) in self.hypotheses.iter().enumerate() {
            for (i, b) in h.bernoullis.iter().enumerate() {
                if b.density.num_models() != num_models {
                    return Err(Error::dims("bernoulli models", num_models, b.density.num_models()));
                }
                if !(0.0..=1.0).contains(&b.existence) {
                    return Err(Error::config(
                        format!("hypotheses[{j}].bernoullis[{i}]"),
                        format!("existence {} outside [0, 1]", b.existence),
                    ));
                }
                let total = b.density.total_weight();
                if (total - 1.0).abs() > density_tol {
                    return Err(Error::config(
                        format!("hypotheses[{j}].bernoullis[{i}]"),
                        format!("density mass {total}"),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Hypothesis-management and reduction settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterParams {
    /// Applied per (Bernoulli, model) mixture and per PPP model mixture.
    pub reduction: ReductionParams,
    pub hypothesis_prune: f64,
    pub max_hypotheses: usize,
    pub existence_prune: f64,
    /// Total Murty budget split across parent hypotheses by weight.
    pub k_best_total: usize,
    pub gate_chi2: f64,
    pub estimate_threshold: f64,
    /// New Bernoullis are not created when `e(z) < ratio * c(z)`.
    pub clutter_only_ratio: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            reduction: ReductionParams::default(),
            hypothesis_prune: 1e-4,
            max_hypotheses: 200,
            existence_prune: 1e-4,
            k_best_total: 100,
            gate_chi2: crate::assignment::DEFAULT_GATE_CHI2,
            estimate_threshold: 0.5,
            clutter_only_ratio: 1e-6,
        }
    }
}

impl FilterParams {
    /// Every pruning, merging, capping, and gating step switched off.
    pub fn without_reduction() -> Self {
        Self {
            reduction: ReductionParams::disabled(),
            hypothesis_prune: 0.0,
            max_hypotheses: usize::MAX,
            existence_prune: 0.0,
            k_best_total: usize::MAX / 4,
            gate_chi2: f64::INFINITY,
            estimate_threshold: 0.5,
            clutter_only_ratio: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.reduction;
        if !(r.prune_threshold >= 0.0) || !(r.merge_threshold >= 0.0) || r.max_components == 0 {
            return Err(Error::config(
                "filter.reduction",
                "thresholds must be >= 0 and max_components >= 1",
            ));
        }
        if !(self.hypothesis_prune >= 0.0 && self.hypothesis_prune < 1.0) {
            return Err(Error::config("filter.hypothesis_prune", "must be in [0, 1)"));
        }
        if self.max_hypotheses == 0 || self.k_best_total == 0 {
            return Err(Error::config("filter", "max_hypotheses and k_best_total must be >= 1"));
        }
        if !(self.existence_prune >= 0.0 && self.existence_prune < 1.0) {
            return Err(Error::config("filter.existence_prune", "must be in [0, 1)"));
        }
        if !(self.gate_chi2 > 0.0) {
            return Err(Error::config("filter.gate_chi2", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.estimate_threshold) {
            return Err(Error::config("filter.estimate_threshold", "must be in [0, 1]"));
        }
        if !(self.clutter_only_ratio >= 0.0) {
            return Err(Error::config("filter.clutter_only_ratio", "must be >= 0"));
        }
        Ok(())
    }
}

/// A configured filter: model set, sensor, birth intensity, and settings.
#[derive(Debug, Clone)]
pub struct MmPmbmFilter {
    pub jms: JmsConfig,
    pub measurement: MeasurementModel,
    pub birth: ModelConditionedDensity,
    pub params: FilterParams,
}

impl MmPmbmFilter {
    pub fn new(
        jms: JmsConfig,
        measurement: MeasurementModel,
        birth: ModelConditionedDensity,
        params: FilterParams,
    ) -> Result<Self> {
        let jms = crate::jms::validate_jms(jms)?;
        params.validate()?;
        measurement.region.validate()?;
        if birth.num_models() != jms.num_models() {
            return Err(Error::dims("birth models", jms.num_models(), birth.num_models()));
        }
        let d = jms.state_dim();
        if measurement.observation.ncols() != d {
            return Err(Error::dims("observation matrix columns", d, measurement.observation.ncols()));
        }
        for (_, c) in birth.components() {
            if c.dim() != d {
                return Err(Error::dims("birth component", d, c.dim()));
            }
            c.check()?;
        }
        Ok(Self {
            jms,
            measurement,
            birth,
            params,
        })
    }

    pub fn initial_state(&self) -> PmbmState {
        PmbmState::initial(self.jms.num_models())
    }

    pub fn predict(&self, state: &PmbmState) -> PmbmState {
        predict::predict_state(state, &self.jms, &self.birth, &self.params)
    }

    pub fn update(&self, state: &PmbmState, measurements: &[DVector<f64>]) -> Result<PmbmState> {
        update_step(state, measurements, &self.measurement, &self.jms, &self.params)
    }

    /// One predict + update cycle.
    pub fn step(&self, state: &PmbmState, measurements: &[DVector<f64>]) -> Result<PmbmState> {
        self.update(&self.predict(state), measurements)
    }

    pub fn estimates(&self, state: &PmbmState) -> Vec<Estimate> {
        extract_estimates(state, self.params.estimate_threshold)
    }
}
