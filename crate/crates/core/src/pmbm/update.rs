use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DVector;

use crate::assignment::{gate_with_innovations, k_best_assignments, Assignment, AssignmentProblem};
use crate::error::{Error, Result};
use crate::gaussian::{log_sum_exp, GaussianMixture, Innovation};
use crate::jms::{JmsConfig, MeasurementModel};

use super::{BernoulliComponent, FilterParams, GlobalHypothesis, ModelConditionedDensity, PmbmState};

/// Outcome of one single-target hypothesis: the natural log of its weight
/// factor `ρ` and the resulting Bernoulli component.
#[derive(Debug, Clone, PartialEq)]
pub struct Association {
    pub log_rho: f64,
    pub bernoulli: BernoulliComponent,
}

impl Association {
    pub fn rho(&self) -> f64 {
        self.log_rho.exp()
    }
}

/// Innovation terms of every component, grouped by model.
pub(crate) type DensityInnovations = Vec<Vec<Innovation>>;

pub(crate) fn density_innovations(
    density: &ModelConditionedDensity,
    meas: &MeasurementModel,
) -> Result<DensityInnovations> {
    density
        .per_model
        .iter()
        .map(|gm| {
            gm.iter()
                .map(|c| Innovation::new(&meas.observation, &meas.noise, c))
                .collect()
        })
        .collect()
}

/// `ln(p_D(ξ) · w · N(z; Hm, S))` per component, and their log-sum.
fn detection_terms(
    density: &ModelConditionedDensity,
    innovations: &DensityInnovations,
    z: &DVector<f64>,
    jms: &JmsConfig,
) -> (Vec<Vec<f64>>, f64) {
    let terms: Vec<Vec<f64>> = density
        .per_model
        .iter()
        .zip(innovations)
        .enumerate()
        .map(|(model, (gm, inn))| {
            let log_pd = jms.p_detect[model].ln();
            gm.iter()
                .zip(inn)
                .map(|(c, i)| log_pd + c.weight.ln() + i.log_likelihood(z))
                .collect()
        })
        .collect();
    let total = log_sum_exp(terms.iter().flatten().copied());
    (terms, total)
}

fn posterior_density(
    density: &ModelConditionedDensity,
    innovations: &DensityInnovations,
    z: &DVector<f64>,
    terms: &[Vec<f64>],
    log_total: f64,
) -> ModelConditionedDensity {
    ModelConditionedDensity {
        per_model: density
            .per_model
            .iter()
            .zip(innovations)
            .zip(terms)
            .map(|((gm, inn), t)| {
                GaussianMixture::new(
                    gm.iter()
                        .zip(inn)
                        .zip(t)
                        .map(|((c, i), term)| {
                            let mut post = i.posterior(c, z);
                            post.weight = (term - log_total).exp();
                            post
                        })
                        .collect(),
                )
            })
            .collect(),
    }
}

fn check_measurement(z: &DVector<f64>, meas: &MeasurementModel) -> Result<()> {
    if z.len() != meas.measurement_dim() {
        return Err(Error::dims("measurement", meas.measurement_dim(), z.len()));
    }
    if !meas.region.contains(z) {
        return Err(Error::MeasurementOutsideRegion {
            measurement: z.iter().copied().collect(),
        });
    }
    Ok(())
}

/// Undetected-target intensity: model `ξ` weights scaled by `1 − p_D(ξ)`.
pub fn update_undetected(ppp: &ModelConditionedDensity, jms: &JmsConfig) -> ModelConditionedDensity {
    ModelConditionedDensity {
        per_model: ppp
            .per_model
            .iter()
            .enumerate()
            .map(|(model, gm)| gm.scaled(1.0 - jms.p_detect[model]))
            .collect(),
    }
}

/// A measurement explained as the first detection of an undetected target.
///
/// `ρ_p = e(z) + c(z)` with `e(z) = Σ_ξ Σ_q p_D(ξ) w_q N(z; H m_q, S_q)`. The
/// new Bernoulli has existence `e / ρ_p`, the Bayes-updated PPP as density,
/// and log weight `ln ρ_p`.
pub fn update_first_detection(
    ppp: &ModelConditionedDensity,
    z: &DVector<f64>,
    meas: &MeasurementModel,
    jms: &JmsConfig,
) -> Result<Association> {
    check_measurement(z, meas)?;
    let innovations = density_innovations(ppp, meas)?;
    Ok(first_detection_with(ppp, &innovations, z, meas, jms))
}

fn first_detection_with(
    ppp: &ModelConditionedDensity,
    innovations: &DensityInnovations,
    z: &DVector<f64>,
    meas: &MeasurementModel,
    jms: &JmsConfig,
) -> Association {
    let (terms, log_e) = detection_terms(ppp, innovations, z, jms);
    let log_rho = log_sum_exp([log_e, meas.clutter_density(z).ln()]);
    let existence = if log_rho == f64::NEG_INFINITY {
        0.0
    } else {
        (log_e - log_rho).exp().min(1.0)
    };
    let density = if log_e == f64::NEG_INFINITY {
        ModelConditionedDensity::empty(ppp.num_models())
    } else {
        posterior_density(ppp, innovations, z, &terms, log_e)
    };
    Association {
        log_rho,
        bernoulli: BernoulliComponent {
            existence,
            density,
            log_weight: log_rho,
        },
    }
}

/// A previously detected target that received no measurement.
///
/// `ρ(∅) = 1 − r + r Σ_ξ (1 − p_D(ξ)) f(ξ)` where `f(ξ)` is the model mass.
/// The returned `log_rho` is `ln ρ(∅)`, floored at the smallest positive
/// double so that a certain detection (`r = 1`, `p_D = 1`) stays finite.
pub fn update_misdetection(b: &BernoulliComponent, jms: &JmsConfig) -> Association {
    let miss_mass: f64 = b
        .density
        .model_weights()
        .iter()
        .zip(&jms.p_detect)
        .map(|(w, pd)| (1.0 - pd) * w)
        .sum();
    let r = b.existence;
    let rho = (1.0 - r + r * miss_mass).max(f64::MIN_POSITIVE);
    let existence = (r * miss_mass / rho).clamp(0.0, 1.0);
    let density = if miss_mass > 0.0 {
        ModelConditionedDensity {
            per_model: b
                .density
                .per_model
                .iter()
                .enumerate()
                .map(|(model, gm)| gm.scaled((1.0 - jms.p_detect[model]) / miss_mass))
                .collect(),
        }
    } else {
        b.density.clone()
    };
    let log_rho = rho.ln();
    Association {
        log_rho,
        bernoulli: BernoulliComponent {
            existence,
            density,
            log_weight: b.log_weight + log_rho,
        },
    }
}

/// A previously detected target updated with measurement `z`.
///
/// `ρ(z) = r Σ_ξ Σ_q p_D(ξ) w_q N(z; H m_q, S_q)`; the result exists with
/// certainty. When every likelihood underflows, `log_rho` is `-∞` and the
/// density is left as the prior.
pub fn update_with_measurement(
    b: &BernoulliComponent,
    z: &DVector<f64>,
    meas: &MeasurementModel,
    jms: &JmsConfig,
) -> Result<Association> {
    if z.len() != meas.measurement_dim() {
        return Err(Error::dims("measurement", meas.measurement_dim(), z.len()));
    }
    let innovations = density_innovations(&b.density, meas)?;
    Ok(detection_with(b, &innovations, z, jms))
}

fn detection_with(
    b: &BernoulliComponent,
    innovations: &DensityInnovations,
    z: &DVector<f64>,
    jms: &JmsConfig,
) -> Association {
    let (terms, log_total) = detection_terms(&b.density, innovations, z, jms);
    let log_rho = b.existence.ln() + log_total;
    let density = if log_total.is_finite() {
        posterior_density(&b.density, innovations, z, &terms, log_total)
    } else {
        b.density.clone()
    };
    Association {
        log_rho,
        bernoulli: BernoulliComponent {
            existence: 1.0,
            density,
            log_weight: b.log_weight + log_rho,
        },
    }
}

/// Cost matrix for one global hypothesis with `n` tracks and `m` measurements,
/// shape `m x (n + m)`, built from log weight factors.
///
/// Entry `(i, j < n)` is `−(ln ρ_j(z_i) − ln ρ_j(∅))`, entry `(i, n + i)` is
/// `−ln ρ_p(z_i)`, and every other new-target entry is `+∞`.
/// `detection_log_rho[j][i]` is `-∞` for gated-out pairs.
pub fn build_cost_matrix(
    first_detection_log_rho: &[f64],
    detection_log_rho: &[Vec<f64>],
    misdetection_log_rho: &[f64],
) -> Result<AssignmentProblem> {
    let m = first_detection_log_rho.len();
    let n = misdetection_log_rho.len();
    if detection_log_rho.len() != n {
        return Err(Error::dims("detection rho rows", n, detection_log_rho.len()));
    }
    if let Some(row) = detection_log_rho.iter().find(|row| row.len() != m) {
        return Err(Error::dims("detection rho columns", m, row.len()));
    }
    let cols = n + m;
    let mut costs = vec![f64::INFINITY; m * cols];
    for i in 0..m {
        for j in 0..n {
            let log_ratio = detection_log_rho[j][i] - misdetection_log_rho[j];
            costs[i * cols + j] = if log_ratio.is_nan() { f64::INFINITY } else { -log_ratio };
        }
        costs[i * cols + n + i] = -first_detection_log_rho[i];
    }
    AssignmentProblem::new(m, cols, costs)
}

struct NewTarget {
    log_rho: f64,
    bernoulli: Option<Arc<BernoulliComponent>>,
}

struct TrackUpdate {
    miss_log_rho: f64,
    miss: Arc<BernoulliComponent>,
    /// Per measurement; `None` when gated out or impossible.
    detections: Vec<Option<(f64, Arc<BernoulliComponent>)>>,
}

fn reduced(mut b: BernoulliComponent, params: &FilterParams) -> Arc<BernoulliComponent> {
    b.density = b.density.reduce(&params.reduction);
    Arc::new(b)
}

fn track_update(
    b: &BernoulliComponent,
    measurements: &[DVector<f64>],
    meas: &MeasurementModel,
    jms: &JmsConfig,
    params: &FilterParams,
) -> Result<TrackUpdate> {
    let innovations = density_innovations(&b.density, meas)?;
    let miss = update_misdetection(b, jms);
    let detections = measurements
        .iter()
        .map(|z| {
            if !gate_with_innovations(&innovations, z, params.gate_chi2) {
                return None;
            }
            let a = detection_with(b, &innovations, z, jms);
            (a.log_rho > f64::NEG_INFINITY).then(|| (a.log_rho, reduced(a.bernoulli, params)))
        })
        .collect();
    Ok(TrackUpdate {
        miss_log_rho: miss.log_rho,
        miss: reduced(miss.bernoulli, params),
        detections,
    })
}

/// Children of one parent hypothesis, in ranked order.
fn expand_hypothesis(
    parent: &GlobalHypothesis,
    tracks: &[&TrackUpdate],
    births: &[NewTarget],
    usable: &[usize],
    params: &FilterParams,
) -> Result<Vec<GlobalHypothesis>> {
    // measurements no track can take are forced onto their new-target column
    let (coupled_rows, forced_rows): (Vec<usize>, Vec<usize>) = usable
        .iter()
        .partition(|&&i| tracks.iter().any(|t| t.detections[i].is_some()));
    if forced_rows.iter().any(|&i| births[i].log_rho == f64::NEG_INFINITY) {
        return Ok(Vec::new());
    }
    let coupled_tracks: Vec<usize> = (0..tracks.len())
        .filter(|&t| coupled_rows.iter().any(|&i| tracks[t].detections[i].is_some()))
        .collect();

    let problem = build_cost_matrix(
        &coupled_rows.iter().map(|&i| births[i].log_rho).collect::<Vec<_>>(),
        &coupled_tracks
            .iter()
            .map(|&t| {
                coupled_rows
                    .iter()
                    .map(|&i| tracks[t].detections[i].as_ref().map_or(f64::NEG_INFINITY, |d| d.0))
                    .collect()
            })
            .collect::<Vec<_>>(),
        &coupled_tracks.iter().map(|&t| tracks[t].miss_log_rho).collect::<Vec<_>>(),
    )?;
    let k = ((params.k_best_total as f64) * parent.log_weight.exp()).ceil().max(1.0) as usize;
    let solutions = if coupled_rows.is_empty() {
        vec![Assignment {
            row_to_col: Vec::new(),
            total_cost: 0.0,
        }]
    } else {
        k_best_assignments(&problem, k)
    };

    let nc = coupled_tracks.len();
    let mut children = Vec::with_capacity(solutions.len());
    for solution in solutions {
        // measurement assigned to each track, and measurements starting new targets
        let mut track_meas: Vec<Option<usize>> = vec![None; tracks.len()];
        let mut is_new = vec![false; births.len()];
        for &i in &forced_rows {
            is_new[i] = true;
        }
        for (row, &col) in solution.row_to_col.iter().enumerate() {
            let i = coupled_rows[row];
            if col < nc {
                track_meas[coupled_tracks[col]] = Some(i);
            } else {
                is_new[i] = true;
            }
        }
        let mut log_weight = parent.log_weight;
        let mut bernoullis = Vec::with_capacity(tracks.len() + births.len());
        for (t, assigned) in track_meas.iter().enumerate() {
            match assigned {
                Some(i) => {
                    let (log_rho, b) = tracks[t].detections[*i].as_ref().expect("assigned pair is feasible");
                    log_weight += log_rho;
                    bernoullis.push(b.clone());
                }
                None => {
                    log_weight += tracks[t].miss_log_rho;
                    bernoullis.push(tracks[t].miss.clone());
                }
            }
        }
        for (i, birth) in births.iter().enumerate() {
            if is_new[i] {
                log_weight += birth.log_rho;
                if let Some(b) = &birth.bernoulli {
                    bernoullis.push(b.clone());
                }
            }
        }
        children.push(GlobalHypothesis {
            log_weight,
            bernoullis,
        });
    }
    Ok(children)
}

fn normalize(hypotheses: &mut [GlobalHypothesis]) {
    let total = log_sum_exp(hypotheses.iter().map(|h| h.log_weight));
    for h in hypotheses {
        h.log_weight -= total;
    }
}

fn manage_hypotheses(mut children: Vec<GlobalHypothesis>, params: &FilterParams) -> Vec<GlobalHypothesis> {
    normalize(&mut children);
    if params.existence_prune > 0.0 {
        for h in &mut children {
            h.bernoullis.retain(|b| !(b.existence < params.existence_prune));
        }
    }

    // identical Bernoulli sets are the same multi-Bernoulli density
    let mut index: HashMap<Vec<*const BernoulliComponent>, usize> = HashMap::new();
    let mut merged: Vec<GlobalHypothesis> = Vec::with_capacity(children.len());
    for h in children {
        let key: Vec<_> = h.bernoullis.iter().map(Arc::as_ptr).collect();
        match index.get(&key) {
            Some(&at) => {
                let existing = &mut merged[at];
                existing.log_weight = log_sum_exp([existing.log_weight, h.log_weight]);
            }
            None => {
                index.insert(key, merged.len());
                merged.push(h);
            }
        }
    }

    merged.sort_by(|a, b| b.log_weight.total_cmp(&a.log_weight));
    if params.hypothesis_prune > 0.0 {
        let threshold = params.hypothesis_prune.ln();
        let keep = merged.iter().filter(|h| h.log_weight >= threshold).count().max(1);
        merged.truncate(keep);
    }
    merged.truncate(params.max_hypotheses);
    normalize(&mut merged);
    merged
}

/// Full measurement update of a predicted state.
///
/// The PPP keeps only its undetected part. Every global hypothesis is expanded
/// into its k best data associations (k proportional to its weight, at least
/// one); children are normalized, Bernoullis with negligible existence are
/// dropped, duplicate hypotheses are merged, and low-weight hypotheses are
/// pruned and capped.
pub fn update_step(
    state: &PmbmState,
    measurements: &[DVector<f64>],
    meas: &MeasurementModel,
    jms: &JmsConfig,
    params: &FilterParams,
) -> Result<PmbmState> {
    for z in measurements {
        check_measurement(z, meas)?;
    }
    let ppp_innovations = density_innovations(&state.ppp, meas)?;
    let births: Vec<NewTarget> = measurements
        .iter()
        .map(|z| {
            let a = first_detection_with(&state.ppp, &ppp_innovations, z, meas, jms);
            let e = a.bernoulli.existence * a.rho();
            let create = e > 0.0 && e >= params.clutter_only_ratio * meas.clutter_density(z);
            NewTarget {
                log_rho: a.log_rho,
                bernoulli: create.then(|| reduced(a.bernoulli, params)),
            }
        })
        .collect();

    let mut cache: HashMap<*const BernoulliComponent, TrackUpdate> = HashMap::new();
    for h in &state.hypotheses {
        for b in &h.bernoullis {
            let key = Arc::as_ptr(b);
            if let Entry::Vacant(slot) = cache.entry(key) {
                slot.insert(track_update(b, measurements, meas, jms, params)?);
            }
        }
    }

    // a measurement no hypothesis can explain carries no information
    let usable: Vec<usize> = (0..measurements.len())
        .filter(|&i| {
            births[i].log_rho > f64::NEG_INFINITY || cache.values().any(|t| t.detections[i].is_some())
        })
        .collect();

    let mut children = Vec::new();
    for h in &state.hypotheses {
        let tracks: Vec<&TrackUpdate> = h.bernoullis.iter().map(|b| &cache[&Arc::as_ptr(b)]).collect();
        children.extend(expand_hypothesis(h, &tracks, &births, &usable, params)?);
    }
    children.retain(|h| h.log_weight > f64::NEG_INFINITY);
    if children.is_empty() {
        return Err(Error::Infeasible);
    }

    Ok(PmbmState {
        ppp: update_undetected(&state.ppp, jms).reduce(&params.reduction),
        hypotheses: manage_hypotheses(children, params),
        step: state.step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::GaussianComponent;
    use crate::jms::{cv_model, Region};
    use nalgebra::DMatrix;

    fn single_model(p_detect: f64) -> JmsConfig {
        JmsConfig {
            models: vec![cv_model(1.0, 1.0)],
            tpm: vec![vec![1.0]],
            birth_model_dist: vec![1.0],
            p_detect: vec![p_detect],
            p_survive: vec![1.0],
        }
    }

    fn sensor(clutter: f64) -> MeasurementModel {
        MeasurementModel::position_2d(1.0, clutter, Region::square(-100.0, 100.0))
    }

    fn comp(w: f64, x: f64, y: f64) -> GaussianComponent {
        GaussianComponent::new(
            w,
            DVector::from_vec(vec![x, 0.0, y, 0.0]),
            DMatrix::identity(4, 4),
        )
    }

    fn bernoulli(r: f64, components: Vec<Vec<GaussianComponent>>) -> BernoulliComponent {
        BernoulliComponent {
            existence: r,
            density: ModelConditionedDensity {
                per_model: components.into_iter().map(GaussianMixture::new).collect(),
            },
            log_weight: 0.0,
        }
    }

    fn z(x: f64, y: f64) -> DVector<f64> {
        DVector::from_vec(vec![x, y])
    }

    #[test]
    fn undetected_scaling() {
        let ppp = ModelConditionedDensity {
            per_model: vec![GaussianMixture::new(vec![comp(0.3, 0.0, 0.0)])],
        };
        assert_eq!(update_undetected(&ppp, &single_model(0.0)), ppp);
        assert_eq!(update_undetected(&ppp, &single_model(1.0)).total_weight(), 0.0);
        let out = update_undetected(&ppp, &single_model(0.95));
        assert!((out.total_weight() - 0.015).abs() < 1e-15);
    }

    #[test]
    fn first_detection_without_clutter_is_certain() {
        let ppp = ModelConditionedDensity {
            per_model: vec![GaussianMixture::new(vec![comp(0.2, 0.0, 0.0)])],
        };
        let a = update_first_detection(&ppp, &z(0.5, 0.0), &sensor(0.0), &single_model(0.9)).unwrap();
        assert_eq!(a.bernoulli.existence, 1.0);
        assert!((a.bernoulli.density.total_weight() - 1.0).abs() < 1e-12);
        assert_eq!(a.bernoulli.log_weight, a.log_rho);
    }

    #[test]
    fn first_detection_balanced_with_clutter() {
        let jms = single_model(1.0);
        let probe = sensor(0.0);
        let ppp = ModelConditionedDensity {
            per_model: vec![GaussianMixture::new(vec![comp(1.0, 0.0, 0.0)])],
        };
        let e = update_first_detection(&ppp, &z(0.0, 0.0), &probe, &jms).unwrap().rho();
        // choose the clutter rate so that c(z) == e(z)
        let sensor = sensor(e * probe.region.volume());
        let a = update_first_detection(&ppp, &z(0.0, 0.0), &sensor, &jms).unwrap();
        assert!((a.bernoulli.existence - 0.5).abs() < 1e-12);
    }

    #[test]
    fn first_detection_from_empty_ppp_is_clutter() {
        let sensor = sensor(4.0);
        let a = update_first_detection(&ModelConditionedDensity::empty(1), &z(1.0, 1.0), &sensor, &single_model(0.9))
            .unwrap();
        assert_eq!(a.bernoulli.existence, 0.0);
        assert!((a.rho() - 4.0 / 40000.0).abs() < 1e-18);
    }

    #[test]
    fn first_detection_outside_region() {
        let err = update_first_detection(
            &ModelConditionedDensity::empty(1),
            &z(1000.0, 0.0),
            &sensor(1.0),
            &single_model(0.9),
        );
        assert!(matches!(err, Err(Error::MeasurementOutsideRegion { .. })));
    }

    #[test]
    fn misdetection_cases() {
        let b = bernoulli(0.5, vec![vec![comp(1.0, 0.0, 0.0)]]);
        let a = update_misdetection(&b, &single_model(0.0));
        assert_eq!(a.rho(), 1.0);
        assert_eq!(a.bernoulli.existence, 0.5);
        assert_eq!(a.bernoulli.density, b.density);

        let a = update_misdetection(&b, &single_model(1.0));
        assert_eq!(a.bernoulli.existence, 0.0);
        assert!((a.rho() - 0.5).abs() < 1e-15);

        let a = update_misdetection(&b, &single_model(0.9));
        assert!((a.rho() - 0.55).abs() < 1e-15);
        assert!((a.bernoulli.existence - 0.05 / 0.55).abs() < 1e-15);
        assert!((a.bernoulli.existence - 0.090909).abs() < 1e-6);
    }

    #[test]
    fn misdetection_of_certain_target_stays_finite() {
        let b = bernoulli(1.0, vec![vec![comp(1.0, 0.0, 0.0)]]);
        let a = update_misdetection(&b, &single_model(1.0));
        assert!(a.log_rho.is_finite());
        assert_eq!(a.bernoulli.existence, 0.0);
    }

    #[test]
    fn measurement_update_reduces_to_gaussian_likelihood() {
        let sensor = sensor(0.0);
        let b = bernoulli(1.0, vec![vec![comp(1.0, 1.0, 2.0)]]);
        let a = update_with_measurement(&b, &z(1.5, 2.5), &sensor, &single_model(1.0)).unwrap();
        let (q, post) = crate::gaussian::bayes_update_gaussian(
            &sensor.observation,
            &sensor.noise,
            &z(1.5, 2.5),
            &b.density.per_model[0].components[0],
        )
        .unwrap();
        assert!((a.rho() - q).abs() < 1e-15);
        assert_eq!(a.bernoulli.existence, 1.0);
        assert!((&a.bernoulli.density.per_model[0].components[0].mean - &post.mean).norm() < 1e-12);
    }

    #[test]
    fn measurement_update_of_absent_target() {
        let b = bernoulli(0.0, vec![vec![comp(1.0, 1.0, 2.0)]]);
        let a = update_with_measurement(&b, &z(1.0, 2.0), &sensor(0.0), &single_model(0.9)).unwrap();
        assert_eq!(a.rho(), 0.0);
    }

    #[test]
    fn two_model_posterior_probabilities_follow_likelihoods() {
        let jms = JmsConfig {
            models: vec![cv_model(1.0, 1.0), cv_model(1.0, 1.0)],
            tpm: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            birth_model_dist: vec![0.5, 0.5],
            p_detect: vec![0.8, 0.8],
            p_survive: vec![1.0, 1.0],
        };
        let b = bernoulli(1.0, vec![vec![comp(0.5, 0.0, 0.0)], vec![comp(0.5, 2.0, 0.0)]]);
        let zz = z(0.5, 0.0);
        let a = update_with_measurement(&b, &zz, &sensor(0.0), &jms).unwrap();
        // S = P + R = 2 I for both components
        let q = |dx: f64| (-(dx * dx) / 4.0).exp();
        let expected0 = q(0.5) / (q(0.5) + q(1.5));
        let probs = a.bernoulli.model_probabilities();
        assert!((probs[0] - expected0).abs() < 1e-12);
        assert!((probs[1] - (1.0 - expected0)).abs() < 1e-12);
    }

    #[test]
    fn cost_matrix_shapes() {
        let p = build_cost_matrix(&[(0.25f64).ln()], &[], &[]).unwrap();
        assert_eq!((p.rows(), p.cols()), (1, 1));
        assert!((p.cost(0, 0) + (0.25f64).ln()).abs() < 1e-15);

        let miss = (0.3f64).ln();
        let p = build_cost_matrix(&[-1.0, -2.0], &[vec![miss, -5.0]], &[miss]).unwrap();
        assert_eq!((p.rows(), p.cols()), (2, 3));
        assert_eq!(p.cost(0, 0), 0.0);
        assert!(p.cost(0, 1).is_finite());
        assert_eq!(p.cost(0, 2), f64::INFINITY);
        assert_eq!(p.cost(1, 1), f64::INFINITY);
        assert!(p.cost(1, 2).is_finite());

        let p = build_cost_matrix(&[-1.0], &[vec![f64::NEG_INFINITY]], &[miss]).unwrap();
        assert_eq!(p.cost(0, 0), f64::INFINITY);
    }

    #[test]
    fn no_measurements_gives_all_misdetection() {
        let jms = single_model(0.9);
        let b = Arc::new(bernoulli(0.8, vec![vec![comp(1.0, 0.0, 0.0)]]));
        let state = PmbmState {
            ppp: ModelConditionedDensity::empty(1),
            hypotheses: vec![GlobalHypothesis {
                log_weight: 0.0,
                bernoullis: vec![b.clone()],
            }],
            step: 1,
        };
        let out = update_step(&state, &[], &sensor(1.0), &jms, &FilterParams::default()).unwrap();
        assert_eq!(out.hypotheses.len(), 1);
        assert_eq!(out.hypotheses[0].bernoullis.len(), 1);
        let expected = update_misdetection(&b, &jms).bernoulli;
        assert_eq!(*out.hypotheses[0].bernoullis[0], expected);
        assert!(out.hypotheses[0].log_weight.abs() < 1e-15);
    }

    #[test]
    fn single_measurement_on_empty_hypothesis_creates_bernoulli() {
        let jms = single_model(0.9);
        let sensor = sensor(1.0);
        let state = PmbmState {
            ppp: ModelConditionedDensity {
                per_model: vec![GaussianMixture::new(vec![comp(0.5, 0.0, 0.0)])],
            },
            hypotheses: vec![GlobalHypothesis {
                log_weight: 0.0,
                bernoullis: Vec::new(),
            }],
            step: 1,
        };
        let zz = z(0.2, -0.1);
        let expected = update_first_detection(&state.ppp, &zz, &sensor, &jms).unwrap();
        let out = update_step(&state, &[zz], &sensor, &jms, &FilterParams::default()).unwrap();
        assert_eq!(out.hypotheses.len(), 1);
        let b = &out.hypotheses[0].bernoullis[0];
        assert!((b.existence - expected.bernoulli.existence).abs() < 1e-15);
        assert!((out.ppp.total_weight() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn outside_measurement_is_rejected_by_update_step() {
        let state = PmbmState::initial(1);
        let err = update_step(&state, &[z(500.0, 0.0)], &sensor(1.0), &single_model(0.9), &FilterParams::default());
        assert!(matches!(err, Err(Error::MeasurementOutsideRegion { .. })));
    }
}
