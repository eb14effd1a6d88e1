//! OSPA distance and cardinality statistics.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::assignment::{best_assignment, AssignmentProblem};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OspaParams {
    pub cutoff: f64,
    pub order: f64,
}

impl Default for OspaParams {
    fn default() -> Self {
        Self {
            cutoff: 100.0,
            order: 1.0,
        }
    }
}

impl OspaParams {
    pub fn new(cutoff: f64, order: f64) -> Result<Self> {
        let p = Self { cutoff, order };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return Err(Error::config("ospa.cutoff", "must be a positive finite distance"));
        }
        if !(self.order >= 1.0 && self.order.is_finite()) {
            return Err(Error::config("ospa.order", "must be finite and >= 1"));
        }
        Ok(())
    }
}

/// OSPA distance between two point sets.
///
/// Both sets empty gives 0. Otherwise, with `m = |small| <= n = |large|`,
/// the result is `((min_π Σ min(c, d)^p + c^p (n - m)) / n)^(1/p)`.
pub fn ospa(x: &[DVector<f64>], y: &[DVector<f64>], params: &OspaParams) -> Result<f64> {
    params.validate()?;
    let dim = x.first().or(y.first()).map(DVector::len);
    if let Some(d) = dim {
        if let Some(bad) = x.iter().chain(y).find(|v| v.len() != d) {
            return Err(Error::dims("ospa point", d, bad.len()));
        }
    }
    let (small, large) = if x.len() <= y.len() { (x, y) } else { (y, x) };
    let n = large.len();
    if n == 0 {
        return Ok(0.0);
    }
    let (c, p) = (params.cutoff, params.order);
    let costs = small
        .iter()
        .flat_map(|a| large.iter().map(move |b| (a - b).norm().min(c).powf(p)))
        .collect();
    let problem = AssignmentProblem::new(small.len(), n, costs)?;
    let matched = best_assignment(&problem)?.total_cost;
    let total = matched + c.powf(p) * (n - small.len()) as f64;
    Ok((total / n as f64).powf(1.0 / p).min(c))
}

/// Planar position `(x, y)` of a `[x, vx, y, vy]` state.
pub fn position(state: &DVector<f64>) -> DVector<f64> {
    DVector::from_vec(vec![state[0], state[2]])
}

/// Mean estimated and true cardinality at one time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CardinalityStep {
    pub mean_estimated: f64,
    pub truth: usize,
}

impl CardinalityStep {
    pub fn error(&self) -> f64 {
        self.mean_estimated - self.truth as f64
    }
}

/// Per-step mean of estimated cardinalities over runs, next to the truth.
///
/// `runs[r][k]` is the number of estimates of run `r` at step `k`.
pub fn cardinality_error(runs: &[Vec<usize>], truth: &[usize]) -> Result<Vec<CardinalityStep>> {
    if let Some(bad) = runs.iter().find(|r| r.len() != truth.len()) {
        return Err(Error::dims("cardinality horizon", truth.len(), bad.len()));
    }
    Ok(truth
        .iter()
        .enumerate()
        .map(|(k, &t)| CardinalityStep {
            mean_estimated: if runs.is_empty() {
                0.0
            } else {
                runs.iter().map(|r| r[k] as f64).sum::<f64>() / runs.len() as f64
            },
            truth: t,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[[f64; 2]]) -> Vec<DVector<f64>> {
        v.iter().map(|p| DVector::from_row_slice(p)).collect()
    }

    #[test]
    fn empty_sets() {
        let p = OspaParams::default();
        assert_eq!(ospa(&[], &[], &p).unwrap(), 0.0);
        assert_eq!(ospa(&[], &pts(&[[0.0, 0.0], [1.0, 1.0]]), &p).unwrap(), 100.0);
    }

    #[test]
    fn single_pair() {
        let d = ospa(&pts(&[[0.0, 0.0]]), &pts(&[[3.0, 4.0]]), &OspaParams::default()).unwrap();
        assert!((d - 5.0).abs() < 1e-12);
    }

    #[test]
    fn cardinality_penalty_mixes_with_distance() {
        let x = pts(&[[0.0, 0.0]]);
        let y = pts(&[[3.0, 4.0], [1000.0, 0.0]]);
        let d = ospa(&x, &y, &OspaParams::default()).unwrap();
        assert!((d - 52.5).abs() < 1e-12);
        let p2 = OspaParams::new(100.0, 2.0).unwrap();
        let d2 = ospa(&x, &y, &p2).unwrap();
        assert!((d2 - ((25.0 + 10000.0) / 2.0f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn symmetric_and_identity() {
        let p = OspaParams::default();
        let x = pts(&[[0.0, 0.0], [10.0, 5.0], [300.0, 1.0]]);
        let y = pts(&[[1.0, 1.0], [12.0, 5.0]]);
        assert_eq!(ospa(&x, &y, &p).unwrap(), ospa(&y, &x, &p).unwrap());
        assert_eq!(ospa(&x, &x, &p).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let x = vec![DVector::from_vec(vec![0.0, 0.0])];
        let y = vec![DVector::from_vec(vec![0.0, 0.0, 0.0])];
        assert!(matches!(
            ospa(&x, &y, &OspaParams::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn invalid_params() {
        assert!(OspaParams::new(0.0, 1.0).is_err());
        assert!(OspaParams::new(100.0, 0.5).is_err());
    }

    #[test]
    fn cardinality_means() {
        let truth = vec![3, 3];
        let perfect = cardinality_error(&[vec![3, 3], vec![3, 3]], &truth).unwrap();
        assert!(perfect.iter().all(|s| s.error() == 0.0));
        let over = cardinality_error(&[vec![4, 4]], &truth).unwrap();
        assert!(over.iter().all(|s| s.error() == 1.0));
        let mixed = cardinality_error(&[vec![3, 3], vec![2, 2]], &truth).unwrap();
        assert!(mixed.iter().all(|s| s.mean_estimated == 2.5));
        assert!(cardinality_error(&[vec![3]], &truth).is_err());
    }
}
