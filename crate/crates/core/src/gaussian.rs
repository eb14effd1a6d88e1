//! Gaussian components, mixtures, and the two closed-form identities every
//! filter step is built from: linear propagation and the linear-Gaussian
//! Bayes update.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Condition number above which an innovation covariance is treated as singular.
pub const MAX_INNOVATION_CONDITION: f64 = 1e12;

/// A weighted Gaussian `w * N(x; mean, cov)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianComponent {
    pub fn new(weight: f64, mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        Self { weight, mean, cov }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn with_weight(&self, weight: f64) -> Self {
        Self {
            weight,
            mean: self.mean.clone(),
            cov: self.cov.clone(),
        }
    }

    /// Checks the component invariants: nonnegative weight, square covariance
    /// matching the mean, symmetric within 1e-9 and PSD up to `-1e-9 * trace`.
    pub fn check(&self) -> Result<()> {
        let d = self.dim();
        if self.cov.nrows() != d || self.cov.ncols() != d {
            return Err(Error::dims(
                "gaussian covariance",
                format!("{d}x{d}"),
                format!("{}x{}", self.cov.nrows(), self.cov.ncols()),
            ));
        }
        if !(self.weight >= 0.0) {
            return Err(Error::config("weight", format!("must be >= 0, got {}", self.weight)));
        }
        if !is_symmetric(&self.cov, 1e-9) {
            return Err(Error::config("cov", "covariance is not symmetric"));
        }
        let trace = self.cov.trace().abs();
        let min_eig = self.cov.symmetric_eigenvalues().min();
        if min_eig < -1e-9 * trace.max(f64::MIN_POSITIVE) {
            return Err(Error::config(
                "cov",
                format!("covariance is not positive semi-definite (min eigenvalue {min_eig:e})"),
            ));
        }
        Ok(())
    }
}

/// Returns `(a + aᵀ) / 2`.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

pub fn is_symmetric(a: &DMatrix<f64>, tol: f64) -> bool {
    a.is_square()
        && (0..a.nrows()).all(|i| (0..i).all(|j| (a[(i, j)] - a[(j, i)]).abs() <= tol))
}

/// Pushes a component through `x' = F x + v`, `v ~ N(0, Q)`.
pub fn propagate_gaussian(
    transition: &DMatrix<f64>,
    process_noise: &DMatrix<f64>,
    g: &GaussianComponent,
) -> Result<GaussianComponent> {
    let d = g.dim();
    if transition.shape() != (d, d) {
        return Err(Error::dims("transition matrix", format!("{d}x{d}"), format!("{:?}", transition.shape())));
    }
    if process_noise.shape() != (d, d) {
        return Err(Error::dims("process noise", format!("{d}x{d}"), format!("{:?}", process_noise.shape())));
    }
    if g.cov.shape() != (d, d) {
        return Err(Error::dims("gaussian covariance", format!("{d}x{d}"), format!("{:?}", g.cov.shape())));
    }
    Ok(propagate_unchecked(transition, process_noise, g))
}

pub(crate) fn propagate_unchecked(
    transition: &DMatrix<f64>,
    process_noise: &DMatrix<f64>,
    g: &GaussianComponent,
) -> GaussianComponent {
    let mean = transition * &g.mean;
    let cov = process_noise + transition * &g.cov * transition.transpose();
    GaussianComponent {
        weight: g.weight,
        mean,
        cov: symmetrize(&cov),
    }
}

/// Measurement-side quantities of one component that do not depend on the
/// measurement value. Computing them once lets a component be scored and
/// updated against many measurements cheaply.
#[derive(Debug, Clone)]
pub struct Innovation {
    predicted: DVector<f64>,
    s_inv: DMatrix<f64>,
    log_norm: f64,
    gain: DMatrix<f64>,
    posterior_cov: DMatrix<f64>,
}

impl Innovation {
    pub fn new(h: &DMatrix<f64>, r: &DMatrix<f64>, g: &GaussianComponent) -> Result<Self> {
        let d = g.dim();
        let p = h.nrows();
        if h.ncols() != d {
            return Err(Error::dims("observation matrix", format!("{p}x{d}"), format!("{:?}", h.shape())));
        }
        if r.shape() != (p, p) {
            return Err(Error::dims("measurement noise", format!("{p}x{p}"), format!("{:?}", r.shape())));
        }
        let pht = &g.cov * h.transpose();
        let s = symmetrize(&(h * &pht + r));
        let singular = || Error::SingularInnovation {
            condition: f64::INFINITY,
            mean: g.mean.iter().copied().collect(),
        };
        let (lo, hi) = eigen_extremes(&s);
        if !(lo > 0.0) {
            return Err(singular());
        }
        let condition = hi / lo;
        if condition >= MAX_INNOVATION_CONDITION {
            return Err(Error::SingularInnovation {
                condition,
                mean: g.mean.iter().copied().collect(),
            });
        }
        let chol = s.clone().cholesky().ok_or_else(singular)?;
        let s_inv = chol.inverse();
        let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let gain = &pht * &s_inv;
        let ikh = DMatrix::<f64>::identity(d, d) - &gain * h;
        let posterior_cov = symmetrize(&(ikh * &g.cov));
        Ok(Self {
            predicted: h * &g.mean,
            s_inv: symmetrize(&s_inv),
            log_norm: -0.5 * (p as f64 * (2.0 * PI).ln() + log_det),
            gain,
            posterior_cov,
        })
    }

    pub fn predicted_measurement(&self) -> &DVector<f64> {
        &self.predicted
    }

    /// `(z − Hm)ᵀ S⁻¹ (z − Hm)`.
    pub fn mahalanobis_sq(&self, z: &DVector<f64>) -> f64 {
        let p = self.predicted.len();
        let nu = |i: usize| z[i] - self.predicted[i];
        (0..p)
            .map(|i| nu(i) * (0..p).map(|j| self.s_inv[(i, j)] * nu(j)).sum::<f64>())
            .sum()
    }

    /// `ln N(z; Hm, S)`.
    pub fn log_likelihood(&self, z: &DVector<f64>) -> f64 {
        self.log_norm - 0.5 * self.mahalanobis_sq(z)
    }

    /// Posterior component for measurement `z`; the weight is carried over.
    pub fn posterior(&self, g: &GaussianComponent, z: &DVector<f64>) -> GaussianComponent {
        let nu = z - &self.predicted;
        GaussianComponent {
            weight: g.weight,
            mean: &g.mean + &self.gain * nu,
            cov: self.posterior_cov.clone(),
        }
    }
}

/// Smallest and largest eigenvalue of a symmetric matrix.
fn eigen_extremes(s: &DMatrix<f64>) -> (f64, f64) {
    if s.nrows() == 2 {
        let (a, b, d) = (s[(0, 0)], s[(0, 1)], s[(1, 1)]);
        let mid = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        return (mid - rad, mid + rad);
    }
    let eig = s.symmetric_eigenvalues();
    (eig.min(), eig.max())
}

/// Linear-Gaussian Bayes update. Returns the measurement likelihood `q(z)`
/// and the posterior with the input weight.
pub fn bayes_update_gaussian(
    h: &DMatrix<f64>,
    r: &DMatrix<f64>,
    z: &DVector<f64>,
    g: &GaussianComponent,
) -> Result<(f64, GaussianComponent)> {
    if z.len() != h.nrows() {
        return Err(Error::dims("measurement", h.nrows(), z.len()));
    }
    let innovation = Innovation::new(h, r, g)?;
    Ok((innovation.log_likelihood(z).exp(), innovation.posterior(g, z)))
}

/// Numerically stable `ln Σ exp(xᵢ)`; `-∞` for an empty or all-`-∞` input.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Thresholds for [`reduce_mixture`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionParams {
    pub prune_threshold: f64,
    pub merge_threshold: f64,
    pub max_components: usize,
}

impl Default for ReductionParams {
    fn default() -> Self {
        Self {
            prune_threshold: 1e-5,
            merge_threshold: 4.0,
            max_components: 100,
        }
    }
}

impl ReductionParams {
    /// Parameters under which reduction is the identity.
    pub fn disabled() -> Self {
        Self {
            prune_threshold: 0.0,
            merge_threshold: 0.0,
            max_components: usize::MAX,
        }
    }
}

/// A Gaussian mixture; all components share one dimension.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GaussianMixture {
    pub components: Vec<GaussianComponent>,
}

impl GaussianMixture {
    pub fn new(components: Vec<GaussianComponent>) -> Self {
        Self { components }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, GaussianComponent> {
        self.components.iter()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            components: self
                .components
                .iter()
                .map(|c| c.with_weight(c.weight * factor))
                .collect(),
        }
    }

    /// Checks that every component is valid and dimensions agree.
    pub fn check(&self) -> Result<()> {
        let Some(first) = self.components.first() else {
            return Ok(());
        };
        let d = first.dim();
        for c in &self.components {
            if c.dim() != d {
                return Err(Error::dims("mixture component", d, c.dim()));
            }
            c.check()?;
        }
        Ok(())
    }

    pub fn reduce(&self, params: &ReductionParams) -> Self {
        reduce_mixture(
            self,
            params.prune_threshold,
            params.merge_threshold,
            params.max_components,
        )
    }
}

/// Moment-preserving merge of a group of components into one.
pub fn merge_components(group: &[&GaussianComponent]) -> GaussianComponent {
    assert!(!group.is_empty(), "cannot merge an empty group");
    let total: f64 = group.iter().map(|c| c.weight).sum();
    // zero-mass groups merge with equal shares
    let share = |c: &GaussianComponent| {
        if total > 0.0 {
            c.weight / total
        } else {
            1.0 / group.len() as f64
        }
    };
    let d = group[0].dim();
    let mut mean = DVector::<f64>::zeros(d);
    for c in group {
        mean += &c.mean * share(c);
    }
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for c in group {
        let w = share(c);
        for j in 0..d {
            let dj = c.mean[j] - mean[j];
            for i in 0..d {
                cov[(i, j)] += w * (c.cov[(i, j)] + (c.mean[i] - mean[i]) * dj);
            }
        }
    }
    GaussianComponent {
        weight: total,
        mean,
        cov: symmetrize(&cov),
    }
}

/// Prune, merge, and cap a mixture, then rescale the survivors to the
/// original total weight.
///
/// Components with weight below `prune_threshold` are dropped. Starting from
/// the heaviest remaining component, every component whose squared
/// Mahalanobis distance to it (under its covariance) is below
/// `merge_threshold` is folded into it. The `max_components` heaviest results
/// are kept. Output is ordered by decreasing weight.
pub fn reduce_mixture(
    gm: &GaussianMixture,
    prune_threshold: f64,
    merge_threshold: f64,
    max_components: usize,
) -> GaussianMixture {
    if gm.len() <= 1 {
        return gm.clone();
    }
    let total_before = gm.total_weight();
    let mut remaining: Vec<&GaussianComponent> = gm
        .components
        .iter()
        .filter(|c| !(c.weight < prune_threshold))
        .collect();
    // stable: equal weights keep input order
    remaining.sort_by(|a, b| b.weight.total_cmp(&a.weight));

    let mut out: Vec<GaussianComponent> = Vec::with_capacity(remaining.len());
    if merge_threshold > 0.0 {
        let d = gm.components[0].dim();
        let mut diff = vec![0.0; d];
        let mut taken = vec![false; remaining.len()];
        let mut group = Vec::new();
        for h in 0..remaining.len() {
            if taken[h] {
                continue;
            }
            let head = remaining[h];
            group.clear();
            if !taken[h + 1..].contains(&false) {
                out.push(head.clone());
                break;
            }
            let chol = head.cov.clone().cholesky();
            for (idx, c) in remaining.iter().enumerate().skip(h) {
                if taken[idx] {
                    continue;
                }
                for k in 0..d {
                    diff[k] = c.mean[k] - head.mean[k];
                }
                let d2 = match &chol {
                    Some(chol) => {
                        // |L⁻¹ diff|² by forward substitution
                        let l = chol.l_dirty();
                        for i in 0..d {
                            let acc: f64 = (0..i).map(|j| l[(i, j)] * diff[j]).sum();
                            diff[i] = (diff[i] - acc) / l[(i, i)];
                        }
                        diff.iter().map(|v| v * v).sum()
                    }
                    None if diff.iter().all(|v| *v == 0.0) => 0.0,
                    None => f64::INFINITY,
                };
                if d2 < merge_threshold {
                    taken[idx] = true;
                    group.push(*c);
                }
            }
            out.push(if group.len() == 1 {
                group[0].clone()
            } else {
                merge_components(&group)
            });
        }
        out.sort_by(|a, b| b.weight.total_cmp(&a.weight));
    } else {
        out.extend(remaining.into_iter().cloned());
    }
    out.truncate(max_components);

    let total_after: f64 = out.iter().map(|c| c.weight).sum();
    if total_after > 0.0 && total_after != total_before {
        let factor = total_before / total_after;
        for c in &mut out {
            c.weight *= factor;
        }
    }
    GaussianMixture { components: out }
}
