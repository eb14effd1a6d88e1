use nalgebra::DVector;

use super::PmbmState;

/// A reported target: model-marginalized mean, model probabilities, and the
/// existence probability it was reported at.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub state: DVector<f64>,
    pub model_probabilities: Vec<f64>,
    pub existence: f64,
}

/// Reports every Bernoulli of the most likely global hypothesis whose
/// existence exceeds `r_threshold`. The cardinality estimate is the length of
/// the result.
pub fn extract_estimates(state: &PmbmState, r_threshold: f64) -> Vec<Estimate> {
    let Some(best) = state.best_hypothesis() else {
        return Vec::new();
    };
    best.bernoullis
        .iter()
        .filter(|b| b.existence > r_threshold)
        .filter_map(|b| {
            Some(Estimate {
                state: b.density.mean()?,
                model_probabilities: b.model_probabilities(),
                existence: b.existence,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{GaussianComponent, GaussianMixture};
    use crate::pmbm::{BernoulliComponent, GlobalHypothesis, ModelConditionedDensity};
    use nalgebra::DMatrix;
    use std::sync::Arc;

    fn state_with(r: f64, per_model: Vec<GaussianMixture>) -> PmbmState {
        let m = per_model.len();
        PmbmState {
            ppp: ModelConditionedDensity::empty(m),
            hypotheses: vec![GlobalHypothesis {
                log_weight: 0.0,
                bernoullis: vec![Arc::new(BernoulliComponent {
                    existence: r,
                    density: ModelConditionedDensity { per_model },
                    log_weight: 0.0,
                })],
            }],
            step: 1,
        }
    }

    fn comp(w: f64, x: f64) -> GaussianComponent {
        GaussianComponent::new(w, DVector::from_vec(vec![x, 0.0]), DMatrix::identity(2, 2))
    }

    #[test]
    fn threshold_rule() {
        let gm = vec![GaussianMixture::new(vec![comp(1.0, 3.0)])];
        assert_eq!(extract_estimates(&state_with(0.9, gm.clone()), 0.5).len(), 1);
        assert!(extract_estimates(&state_with(0.3, gm), 0.5).is_empty());
    }

    #[test]
    fn marginal_mean_over_models() {
        let gm = vec![
            GaussianMixture::new(vec![comp(0.5, 7.0)]),
            GaussianMixture::new(vec![comp(0.5, 7.0)]),
        ];
        let est = extract_estimates(&state_with(0.9, gm), 0.5);
        assert_eq!(est[0].state[0], 7.0);
        assert_eq!(est[0].model_probabilities, vec![0.5, 0.5]);
    }

    #[test]
    fn picks_heaviest_hypothesis() {
        let mut state = state_with(0.9, vec![GaussianMixture::new(vec![comp(1.0, 1.0)])]);
        state.hypotheses[0].log_weight = (0.3f64).ln();
        state.hypotheses.push(GlobalHypothesis {
            log_weight: (0.7f64).ln(),
            bernoullis: Vec::new(),
        });
        assert!(extract_estimates(&state, 0.5).is_empty());
    }
}
