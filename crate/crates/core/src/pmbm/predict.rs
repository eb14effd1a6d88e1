use std::collections::HashMap;
use std::sync::Arc;

use crate::gaussian::{propagate_unchecked, GaussianMixture};
use crate::jms::JmsConfig;

use super::{BernoulliComponent, FilterParams, GlobalHypothesis, ModelConditionedDensity, PmbmState};

/// Propagates every source-model component through every destination model,
/// weighting by `factor(source) * tpm[source][dest] * w`.
fn propagate_through_models(
    density: &ModelConditionedDensity,
    jms: &JmsConfig,
    factor: impl Fn(usize) -> f64,
) -> Vec<GaussianMixture> {
    let m = jms.num_models();
    (0..m)
        .map(|dest| {
            let model = &jms.models[dest];
            let components = density
                .per_model
                .iter()
                .enumerate()
                .flat_map(|(src, gm)| {
                    let scale = factor(src) * jms.tpm[src][dest];
                    gm.iter().map(move |g| {
                        let mut out = propagate_unchecked(&model.transition, &model.process_noise, g);
                        out.weight = g.weight * scale;
                        out
                    })
                })
                .collect();
            GaussianMixture::new(components)
        })
        .collect()
}

/// Predicted Poisson intensity: for each destination model, the birth
/// intensity followed by every prior component pushed through that model's
/// dynamics with weight `w * p_S(source) * tpm[source][dest]`.
pub fn predict_ppp(
    ppp: &ModelConditionedDensity,
    jms: &JmsConfig,
    birth: &ModelConditionedDensity,
) -> ModelConditionedDensity {
    let survived = propagate_through_models(ppp, jms, |src| jms.p_survive[src]);
    ModelConditionedDensity {
        per_model: survived
            .into_iter()
            .enumerate()
            .map(|(model, gm)| {
                let mut components = birth.per_model.get(model).map_or_else(Vec::new, |b| b.components.clone());
                components.extend(gm.components);
                GaussianMixture::new(components)
            })
            .collect(),
    }
}

/// Predicted Bernoulli: the log weight is unchanged, the existence is scaled
/// by the survival mass, and the density is propagated through every model
/// pair and renormalized.
pub fn predict_bernoulli(b: &BernoulliComponent, jms: &JmsConfig) -> BernoulliComponent {
    let per_model = propagate_through_models(&b.density, jms, |src| jms.p_survive[src]);
    let survival: f64 = per_model.iter().map(GaussianMixture::total_weight).sum();
    let density = if survival > 0.0 {
        ModelConditionedDensity { per_model }.scaled(1.0 / survival)
    } else {
        // nothing survives; keep the shape of the dynamics for a well-formed density
        ModelConditionedDensity {
            per_model: propagate_through_models(&b.density, jms, |_| 1.0),
        }
        .normalized()
    };
    BernoulliComponent {
        existence: (b.existence * survival).clamp(0.0, 1.0),
        density,
        log_weight: b.log_weight,
    }
}

pub(crate) fn predict_state(
    state: &PmbmState,
    jms: &JmsConfig,
    birth: &ModelConditionedDensity,
    params: &FilterParams,
) -> PmbmState {
    let ppp = predict_ppp(&state.ppp, jms, birth).reduce(&params.reduction);
    // shared Bernoullis are predicted once
    let mut cache: HashMap<*const BernoulliComponent, Arc<BernoulliComponent>> = HashMap::new();
    let hypotheses = state
        .hypotheses
        .iter()
        .map(|h| GlobalHypothesis {
            log_weight: h.log_weight,
            bernoullis: h
                .bernoullis
                .iter()
                .map(|b| {
                    cache
                        .entry(Arc::as_ptr(b))
                        .or_insert_with(|| {
                            let mut predicted = predict_bernoulli(b, jms);
                            predicted.density = predicted.density.reduce(&params.reduction);
                            Arc::new(predicted)
                        })
                        .clone()
                })
                .collect(),
        })
        .collect();
    PmbmState {
        ppp,
        hypotheses,
        step: state.step + 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::GaussianComponent;
    use crate::jms::{cv_model, JmsConfig};
    use nalgebra::{DMatrix, DVector};

    fn comp(w: f64, x: f64) -> GaussianComponent {
        GaussianComponent::new(
            w,
            DVector::from_vec(vec![x, 1.0, 0.0, 0.0]),
            DMatrix::identity(4, 4),
        )
    }

    fn two_model(p_survive: f64) -> JmsConfig {
        JmsConfig {
            models: vec![cv_model(1.0, 1.0), cv_model(1.0, 2.0)],
            tpm: vec![vec![0.8, 0.2], vec![0.2, 0.8]],
            birth_model_dist: vec![0.5, 0.5],
            p_detect: vec![0.9, 0.9],
            p_survive: vec![p_survive; 2],
        }
    }

    fn reference_birth() -> ModelConditionedDensity {
        let p = DMatrix::from_diagonal(&DVector::from_vec(vec![500.0f64, 100.0, 500.0, 100.0]).map(|v| v * v));
        let gm = GaussianMixture::new(
            [[0.0, 0.0, 1500.0, 0.0], [3000.0, 0.0, 1000.0, 0.0], [2500.0, 0.0, 3000.0, 0.0]]
                .iter()
                .map(|m| GaussianComponent::new(0.1, DVector::from_row_slice(m), p.clone()))
                .collect(),
        );
        ModelConditionedDensity::birth(&gm, &[0.5, 0.25, 0.25])
    }

    #[test]
    fn birth_only_mass() {
        let jms = JmsConfig::reference_three_model(0.9, 0.99);
        let out = predict_ppp(&ModelConditionedDensity::empty(3), &jms, &reference_birth());
        assert!((out.total_weight() - 0.3).abs() < 1e-15);
        assert_eq!(out.num_components(), 9);
    }

    #[test]
    fn single_model_mass_conserved() {
        let jms = JmsConfig {
            models: vec![cv_model(1.0, 1.0)],
            tpm: vec![vec![1.0]],
            birth_model_dist: vec![1.0],
            p_detect: vec![0.9],
            p_survive: vec![1.0],
        };
        let ppp = ModelConditionedDensity {
            per_model: vec![GaussianMixture::new(vec![comp(0.7, 0.0), comp(0.2, 5.0)])],
        };
        let out = predict_ppp(&ppp, &jms, &ModelConditionedDensity::empty(1));
        assert!((out.total_weight() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn survival_scales_mass() {
        let jms = two_model(0.99);
        let ppp = ModelConditionedDensity {
            per_model: vec![
                GaussianMixture::new(vec![comp(0.5, 0.0)]),
                GaussianMixture::new(vec![comp(0.25, 3.0)]),
            ],
        };
        let out = predict_ppp(&ppp, &jms, &ModelConditionedDensity::empty(2));
        assert!((out.total_weight() - 0.75 * 0.99).abs() < 1e-15);
        assert_eq!(out.num_components(), 4);
    }

    #[test]
    fn bernoulli_existence_and_model_probs() {
        let b = BernoulliComponent {
            existence: 0.7,
            density: ModelConditionedDensity {
                per_model: vec![GaussianMixture::new(vec![comp(1.0, 0.0)]), GaussianMixture::empty()],
            },
            log_weight: -3.0,
        };
        let out = predict_bernoulli(&b, &two_model(1.0));
        assert_eq!(out.existence, 0.7);
        assert_eq!(out.log_weight, -3.0);
        let probs = out.model_probabilities();
        assert!((probs[0] - 0.8).abs() < 1e-15);
        assert!((probs[1] - 0.2).abs() < 1e-15);

        let out = predict_bernoulli(&b, &two_model(0.99));
        assert!((out.existence - 0.99 * 0.7).abs() < 1e-15);
        assert!((out.density.total_weight() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_survival_gives_zero_existence_and_normalized_density() {
        let b = BernoulliComponent {
            existence: 0.7,
            density: ModelConditionedDensity {
                per_model: vec![GaussianMixture::new(vec![comp(1.0, 0.0)]), GaussianMixture::empty()],
            },
            log_weight: 0.0,
        };
        let out = predict_bernoulli(&b, &two_model(0.0));
        assert_eq!(out.existence, 0.0);
        assert!((out.density.total_weight() - 1.0).abs() < 1e-12);
    }
}
