mod common;

use backfire_core::evaluation::QuantileUpliftReport;
use backfire_core::{
    assign_quantiles, generate_cohort, run_quantile_evaluation, run_replicates, EvalConfig, GbtParams,
    ReplicatePlan,
};
use common::{null_spec, spearman, two_segment_spec};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn config(n_replicates: usize, seed: u64) -> EvalConfig {
    EvalConfig {
        n_replicates,
        master_seed: seed,
        ..EvalConfig::default()
    }
}

#[test]
fn strong_signal_separates_extreme_deciles() {
    let cohort = generate_cohort(&two_segment_spec(31), 8000).unwrap();
    let report = run_quantile_evaluation(&cohort, &GbtParams::default(), &config(60, 7)).unwrap();
    let means: Vec<f64> = report.means().into_iter().map(Option::unwrap).collect();
    let idx: Vec<f64> = (1..=10).map(f64::from).collect();
    assert!(means[9] >= 0.25, "{means:?}");
    assert!(means[0] <= -0.15, "{means:?}");
    assert!(spearman(&idx, &means) >= 0.7, "{means:?}");
}

#[test]
fn null_intervals_cover_zero() {
    let cohort = generate_cohort(&null_spec(32), 8000).unwrap();
    let report = run_quantile_evaluation(&cohort, &GbtParams::default(), &config(60, 8)).unwrap();
    let covered = report
        .quantiles
        .iter()
        .filter(|q| q.ci_low.unwrap() <= 0.0 && 0.0 <= q.ci_high.unwrap())
        .count();
    assert!(covered >= 9, "{report:?}");
    assert!(report.quantiles.iter().all(|q| q.mean.unwrap().abs() <= 0.1));
}

#[test]
fn evaluation_is_deterministic_and_seed_sensitive() {
    let cohort = generate_cohort(&two_segment_spec(2), 2000).unwrap();
    let params = GbtParams { n_stages: 20, ..GbtParams::default() };
    let a = run_quantile_evaluation(&cohort, &params, &config(6, 1)).unwrap();
    let b = run_quantile_evaluation(&cohort, &params, &config(6, 1)).unwrap();
    assert_eq!(a, b);
    let c = run_quantile_evaluation(&cohort, &params, &config(6, 2)).unwrap();
    assert_ne!(a, c);
}

#[test]
fn aggregation_ignores_completion_order() {
    let cohort = generate_cohort(&two_segment_spec(3), 2000).unwrap();
    let params = GbtParams { n_stages: 15, ..GbtParams::default() };
    let cfg = config(12, 4);
    let plan = ReplicatePlan::quantiles_only(params, cfg.clone());
    let mut outcomes = run_replicates(&cohort, &plan).unwrap();
    let reference = QuantileUpliftReport::aggregate(&cfg, &outcomes).unwrap();
    let mut rng = backfire_core::rng::rng_from_seed(99);
    for _ in 0..5 {
        outcomes.shuffle(&mut rng);
        assert_eq!(QuantileUpliftReport::aggregate(&cfg, &outcomes).unwrap(), reference);
    }
}

#[test]
fn single_replicate_collapses_intervals() {
    let cohort = generate_cohort(&two_segment_spec(4), 2000).unwrap();
    let params = GbtParams { n_stages: 10, ..GbtParams::default() };
    let report = run_quantile_evaluation(&cohort, &params, &config(1, 0)).unwrap();
    for q in report.quantiles.iter().filter(|q| q.n_valid == 1) {
        assert_eq!(q.ci_low, q.mean);
        assert_eq!(q.ci_high, q.mean);
    }
}

proptest! {
    #[test]
    fn quantile_bins_partition_rows(tau in prop::collection::vec(-1.0f64..1.0, 10..200), q in 2usize..10) {
        let bins = assign_quantiles(&tau, q).unwrap();
        let mut sizes = vec![0usize; q];
        for &b in &bins {
            prop_assert!((1..=q).contains(&b));
            sizes[b - 1] += 1;
        }
        prop_assert_eq!(sizes.iter().sum::<usize>(), tau.len());
        prop_assert!(sizes.windows(2).all(|w| w[0] >= w[1] && w[0] - w[1] <= 1));
        // Bins are ordered by τ̂.
        for i in 0..tau.len() {
            for j in 0..tau.len() {
                if bins[i] < bins[j] {
                    prop_assert!(tau[i] <= tau[j]);
                }
            }
        }
    }
}
