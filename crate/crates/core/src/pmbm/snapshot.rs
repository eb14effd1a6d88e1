//! JSON snapshots of a filter state for debugging and regression fixtures.
//!
//! Shape:
//!
//! ```json
//! {
//!   "step": 12,
//!   "ppp": [[{"weight": 0.05, "mean": [..], "cov": [[..], ..]}, ..], ..],
//!   "hypotheses": [
//!     {
//!       "weight": 0.93,
//!       "log_weight": -0.07,
//!       "bernoullis": [
//!         {"existence": 0.99, "log_weight": -41.2,
//!          "model_probabilities": [0.7, 0.2, 0.1],
//!          "models": [[{"weight": .., "mean": [..], "cov": [[..]]}], ..]}
//!       ]
//!     }
//!   ]
//! }
//! ```
//!
//! `ppp` and each Bernoulli's `models` hold one component list per motion
//! model, in model order.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{GaussianComponent, GaussianMixture};

use super::{BernoulliComponent, GlobalHypothesis, ModelConditionedDensity, PmbmState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSnapshot {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernoulliSnapshot {
    pub existence: f64,
    pub log_weight: f64,
    pub model_probabilities: Vec<f64>,
    pub models: Vec<Vec<ComponentSnapshot>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisSnapshot {
    pub weight: f64,
    pub log_weight: f64,
    pub bernoullis: Vec<BernoulliSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub step: usize,
    pub ppp: Vec<Vec<ComponentSnapshot>>,
    pub hypotheses: Vec<HypothesisSnapshot>,
}

fn component(c: &GaussianComponent) -> ComponentSnapshot {
    ComponentSnapshot {
        weight: c.weight,
        mean: c.mean.iter().copied().collect(),
        cov: c.cov.row_iter().map(|r| r.iter().copied().collect()).collect(),
    }
}

fn density(d: &ModelConditionedDensity) -> Vec<Vec<ComponentSnapshot>> {
    d.per_model.iter().map(|gm| gm.iter().map(component).collect()).collect()
}

impl From<&PmbmState> for StateSnapshot {
    fn from(state: &PmbmState) -> Self {
        Self {
            step: state.step,
            ppp: density(&state.ppp),
            hypotheses: state
                .hypotheses
                .iter()
                .map(|h| HypothesisSnapshot {
                    weight: h.weight(),
                    log_weight: h.log_weight,
                    bernoullis: h
                        .bernoullis
                        .iter()
                        .map(|b| BernoulliSnapshot {
                            existence: b.existence,
                            log_weight: b.log_weight,
                            model_probabilities: b.model_probabilities(),
                            models: density(&b.density),
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

fn restore_component(c: &ComponentSnapshot) -> Result<GaussianComponent> {
    let d = c.mean.len();
    if c.cov.len() != d || c.cov.iter().any(|r| r.len() != d) {
        return Err(Error::dims("snapshot covariance", format!("{d}x{d}"), "ragged or mis-sized"));
    }
    Ok(GaussianComponent::new(
        c.weight,
        DVector::from_vec(c.mean.clone()),
        DMatrix::from_row_iterator(d, d, c.cov.iter().flatten().copied()),
    ))
}

fn restore_density(models: &[Vec<ComponentSnapshot>]) -> Result<ModelConditionedDensity> {
    Ok(ModelConditionedDensity {
        per_model: models
            .iter()
            .map(|cs| cs.iter().map(restore_component).collect::<Result<Vec<_>>>().map(GaussianMixture::new))
            .collect::<Result<_>>()?,
    })
}

impl StateSnapshot {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("snapshot serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            path: "<snapshot>".into(),
            message: e.to_string(),
        })
    }

    /// Rebuilds a state. Bernoullis are not shared between restored hypotheses.
    pub fn restore(&self) -> Result<PmbmState> {
        Ok(PmbmState {
            step: self.step,
            ppp: restore_density(&self.ppp)?,
            hypotheses: self
                .hypotheses
                .iter()
                .map(|h| {
                    Ok(GlobalHypothesis {
                        log_weight: h.log_weight,
                        bernoullis: h
                            .bernoullis
                            .iter()
                            .map(|b| {
                                Ok(Arc::new(BernoulliComponent {
                                    existence: b.existence,
                                    log_weight: b.log_weight,
                                    density: restore_density(&b.models)?,
                                }))
                            })
                            .collect::<Result<_>>()?,
                    })
                })
                .collect::<Result<_>>()?,
        })
    }
}
