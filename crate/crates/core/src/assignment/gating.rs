use nalgebra::DVector;

use crate::error::Result;
use crate::gaussian::Innovation;
use crate::jms::MeasurementModel;
use crate::pmbm::{density_innovations, BernoulliComponent};

/// 99.9% mass of a chi-square distribution with 2 degrees of freedom.
pub const DEFAULT_GATE_CHI2: f64 = 13.82;

/// Indices of measurements whose smallest squared Mahalanobis innovation
/// distance over all components (all models) of `b` is within `gate_chi2`.
pub fn gate_measurements(
    b: &BernoulliComponent,
    measurements: &[DVector<f64>],
    meas: &MeasurementModel,
    gate_chi2: f64,
) -> Result<Vec<usize>> {
    if gate_chi2 == f64::INFINITY {
        return Ok((0..measurements.len()).collect());
    }
    let innovations = density_innovations(&b.density, meas)?;
    Ok(measurements
        .iter()
        .enumerate()
        .filter(|(_, z)| gate_with_innovations(&innovations, z, gate_chi2))
        .map(|(i, _)| i)
        .collect())
}

pub(crate) fn gate_with_innovations(innovations: &[Vec<Innovation>], z: &DVector<f64>, gate_chi2: f64) -> bool {
    gate_chi2 == f64::INFINITY
        || innovations
            .iter()
            .flatten()
            .any(|inn| inn.mahalanobis_sq(z) <= gate_chi2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{GaussianComponent, GaussianMixture};
    use crate::jms::Region;
    use crate::pmbm::ModelConditionedDensity;
    use nalgebra::DMatrix;

    fn setup() -> (BernoulliComponent, MeasurementModel) {
        // P = 0 on position, R = I  =>  S = I
        let c = GaussianComponent::new(1.0, DVector::from_vec(vec![10.0, 0.0, 20.0, 0.0]), DMatrix::zeros(4, 4));
        let b = BernoulliComponent {
            existence: 1.0,
            density: ModelConditionedDensity {
                per_model: vec![GaussianMixture::new(vec![c])],
            },
            log_weight: 0.0,
        };
        (b, MeasurementModel::position_2d(1.0, 0.0, Region::square(-100.0, 100.0)))
    }

    #[test]
    fn exact_prediction_is_gated_in() {
        let (b, meas) = setup();
        let zs = [DVector::from_vec(vec![10.0, 20.0])];
        assert_eq!(gate_measurements(&b, &zs, &meas, 1e-9).unwrap(), vec![0]);
    }

    #[test]
    fn infinite_gate_keeps_everything() {
        let (b, meas) = setup();
        let zs = [DVector::from_vec(vec![-90.0, 90.0]), DVector::from_vec(vec![10.0, 20.0])];
        assert_eq!(gate_measurements(&b, &zs, &meas, f64::INFINITY).unwrap(), vec![0, 1]);
    }

    #[test]
    fn offset_of_five_is_outside_default_gate() {
        let (b, meas) = setup();
        let zs = [DVector::from_vec(vec![15.0, 20.0]), DVector::from_vec(vec![13.0, 20.0])];
        assert_eq!(gate_measurements(&b, &zs, &meas, DEFAULT_GATE_CHI2).unwrap(), vec![1]);
    }
}
