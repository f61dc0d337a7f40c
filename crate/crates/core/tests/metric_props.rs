//! Metric invariants over random score/label vectors and the pairwise
//! definition of ROC-AUC.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tabml_core::metrics::{evaluate, prc_curve, roc_curve};

/// Scores on a 1/64 grid so ties are common and transforms stay exact.
fn scored_labels(max_n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
    (2..=max_n).prop_flat_map(|n| {
        (
            prop::collection::vec((0u32..=64).prop_map(|k| f64::from(k) / 64.0), n),
            prop::collection::vec(0u8..=1, n),
        )
            .prop_filter("both classes present", |(_, y)| y.contains(&0) && y.contains(&1))
    })
}

fn pairwise_auc(p: &[f64], y: &[u8]) -> f64 {
    let mut twice = 0u64;
    let (mut pos, mut neg) = (0u64, 0u64);
    for i in 0..p.len() {
        if y[i] == 1 {
            pos += 1;
        } else {
            neg += 1;
        }
        if y[i] != 1 {
            continue;
        }
        for j in 0..p.len() {
            if y[j] == 0 {
                twice += if p[i] > p[j] { 2 } else { u64::from(p[i] == p[j]) };
            }
        }
    }
    twice as f64 / (2.0 * pos as f64 * neg as f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn label_flip_mirrors_roc_auc((p, y) in scored_labels(40)) {
        let auc = roc_curve(&p, &y).unwrap().auc;
        let flipped: Vec<u8> = y.iter().map(|v| 1 - v).collect();
        let neg: Vec<f64> = p.iter().map(|v| 1.0 - v).collect();
        prop_assert_eq!(roc_curve(&neg, &flipped).unwrap().auc, auc);
        let mirrored = roc_curve(&p, &flipped).unwrap().auc;
        prop_assert!((mirrored - (1.0 - auc)).abs() < 1e-12);
    }

    #[test]
    fn roc_auc_invariant_under_monotone_transforms((p, y) in scored_labels(40)) {
        let auc = roc_curve(&p, &y).unwrap().auc;
        let transforms: [fn(f64) -> f64; 3] = [|v| v * v * v, |v| 3.0 * v - 7.0, |v| (4.0 * v).exp()];
        for f in transforms {
            let q: Vec<f64> = p.iter().map(|&v| f(v)).collect();
            prop_assert_eq!(roc_curve(&q, &y).unwrap().auc, auc);
        }
    }

    #[test]
    fn prc_no_skill_is_class_ratio((p, y) in scored_labels(40)) {
        let prc = prc_curve(&p, &y).unwrap();
        let pos = y.iter().filter(|&&v| v == 1).count();
        prop_assert_eq!(prc.no_skill, pos as f64 / y.len() as f64);
        let constant = vec![0.5; y.len()];
        let flat = prc_curve(&constant, &y).unwrap();
        prop_assert!((flat.auc - flat.no_skill).abs() < 1e-12);
    }

    #[test]
    fn curves_and_metrics_are_well_formed((p, y) in scored_labels(40)) {
        let roc = roc_curve(&p, &y).unwrap();
        prop_assert_eq!(roc.points[0], (0.0, 0.0));
        prop_assert_eq!(*roc.points.last().unwrap(), (1.0, 1.0));
        prop_assert!(roc.points.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1));
        let m = evaluate(&p, &y).unwrap();
        prop_assert_eq!(m.tp + m.tn + m.fp + m.fn_, y.len() as f64);
        for v in [m.accuracy, m.balanced_accuracy, m.f1, m.sensitivity, m.specificity, m.precision, m.npv, m.roc_auc, m.prc_auc, m.aps] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}

#[test]
fn roc_auc_equals_pairwise_oracle_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut done = 0;
    while done < 1000 {
        let n = rng.gen_range(2..=30);
        let grid = rng.gen_range(2..=40);
        let p: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..grid)) / f64::from(grid)).collect();
        let y: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
        if !(y.contains(&0) && y.contains(&1)) {
            continue;
        }
        assert_eq!(roc_curve(&p, &y).unwrap().auc, pairwise_auc(&p, &y), "{p:?} {y:?}");
        done += 1;
    }
}

#[test]
fn frozen_reference_areas() {
    // Computed with an independent metrics package.
    let s = [0.9, 0.8, 0.8, 0.7, 0.6, 0.55, 0.5, 0.4, 0.4, 0.3, 0.2, 0.1];
    let y = [1, 1, 0, 1, 1, 0, 1, 0, 0, 1, 0, 0];
    let m = evaluate(&s, &y).unwrap();
    assert!((m.roc_auc - 0.763888888888889).abs() < 1e-12);
    assert!((m.aps - 0.75515873015873).abs() < 1e-12);
}
