use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use mm_pmbm::assignment::{best_assignment, k_best_assignments, AssignmentProblem};
use mm_pmbm::gaussian::{bayes_update_gaussian, reduce_mixture, GaussianComponent, GaussianMixture};
use mm_pmbm::jms::JmsConfig;
use mm_pmbm::metrics::{ospa, OspaParams};
use mm_pmbm::pmbm::{predict_bernoulli, BernoulliComponent, ModelConditionedDensity};

fn spd(entries: &[f64], dim: usize, floor: f64) -> DMatrix<f64> {
    let a = DMatrix::from_column_slice(dim, dim, &entries[..dim * dim]);
    &a * a.transpose() + DMatrix::identity(dim, dim) * floor
}

fn component(dim: usize) -> impl Strategy<Value = GaussianComponent> {
    (
        1e-4..1.0f64,
        prop::collection::vec(-50.0..50.0f64, dim),
        prop::collection::vec(-3.0..3.0f64, dim * dim),
    )
        .prop_map(move |(w, m, a)| GaussianComponent::new(w, DVector::from_vec(m), spd(&a, dim, 0.5)))
}

fn points(max: usize) -> impl Strategy<Value = Vec<DVector<f64>>> {
    prop::collection::vec(prop::collection::vec(-200.0..200.0f64, 2), 0..=max)
        .prop_map(|v| v.into_iter().map(DVector::from_vec).collect())
}

proptest! {
    #[test]
    fn reduction_keeps_mass_and_never_grows(
        comps in prop::collection::vec(component(2), 1..12),
        prune in 0.0..0.3f64,
        merge in 0.0..20.0f64,
        cap in 1usize..12,
    ) {
        let gm = GaussianMixture::new(comps);
        let out = reduce_mixture(&gm, prune, merge, cap);
        prop_assert!(out.len() <= gm.len());
        prop_assert!(out.len() <= cap.max(1) || gm.len() <= 1);
        if !out.is_empty() {
            prop_assert!((out.total_weight() - gm.total_weight()).abs() <= 1e-12 * gm.total_weight().max(1.0));
        }
        for c in out.iter() {
            prop_assert!(c.check().is_ok());
        }
    }

    #[test]
    fn bayes_update_shrinks_covariance(
        g in component(2),
        r in prop::collection::vec(-3.0..3.0f64, 4),
        z in prop::collection::vec(-60.0..60.0f64, 2),
    ) {
        let h = DMatrix::identity(2, 2);
        let (q, post) = bayes_update_gaussian(&h, &spd(&r, 2, 0.5), &DVector::from_vec(z), &g).unwrap();
        prop_assert!(q >= 0.0 && q.is_finite());
        prop_assert!(post.check().is_ok());
        let shrink = &g.cov - &post.cov;
        prop_assert!(shrink.symmetric_eigenvalues().min() >= -1e-9);
    }

    #[test]
    fn ospa_is_a_bounded_metric(x in points(4), y in points(4), w in points(4), p in 1.0..3.0f64) {
        let params = OspaParams::new(100.0, p).unwrap();
        let dxy = ospa(&x, &y, &params).unwrap();
        prop_assert!((0.0..=100.0).contains(&dxy));
        prop_assert!((dxy - ospa(&y, &x, &params).unwrap()).abs() < 1e-12);
        prop_assert!(ospa(&x, &x, &params).unwrap() < 1e-12);
        let dxw = ospa(&x, &w, &params).unwrap();
        let dwy = ospa(&w, &y, &params).unwrap();
        prop_assert!(dxy <= dxw + dwy + 1e-9);
    }

    #[test]
    fn best_assignment_beats_every_ranked_alternative(
        rows in 1usize..5,
        extra in 0usize..3,
        seed in prop::collection::vec(0.0..10.0f64, 32),
    ) {
        let cols = rows + extra;
        let p = AssignmentProblem::new(rows, cols, seed[..rows * cols].to_vec()).unwrap();
        let best = best_assignment(&p).unwrap();
        let ranked = k_best_assignments(&p, 20);
        prop_assert_eq!(&ranked[0], &best);
        for pair in ranked.windows(2) {
            prop_assert!(pair[0].rank_cmp(&pair[1]).is_lt());
        }
        let mut used = vec![false; cols];
        for &c in &best.row_to_col {
            prop_assert!(!used[c]);
            used[c] = true;
        }
    }

    #[test]
    fn predicted_bernoulli_stays_normalized(
        comps in prop::collection::vec(component(4), 1..4),
        split in prop::collection::vec(0.05..1.0f64, 3),
        r in 0.0..1.0f64,
        ps in 0.0..1.0f64,
    ) {
        let jms = JmsConfig::reference_three_model(0.9, ps);
        let total: f64 = split.iter().sum();
        let density = ModelConditionedDensity {
            per_model: split
                .iter()
                .map(|s| GaussianMixture::new(comps.clone()).scaled(s / total / GaussianMixture::new(comps.clone()).total_weight()))
                .collect(),
        };
        let b = BernoulliComponent { existence: r, density, log_weight: 0.0 };
        let out = predict_bernoulli(&b, &jms);
        prop_assert!((out.density.total_weight() - 1.0).abs() < 1e-12);
        prop_assert!((out.existence - r * ps).abs() < 1e-12);
        prop_assert_eq!(out.density.num_components(), 3 * b.density.num_components());
    }
}
