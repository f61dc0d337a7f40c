//! Training-fold transforms and feature selection must not see test data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tabml_core::featimp::{score_fold, ScoringConfig};
use tabml_core::partition::{make_cv, CvStrategy};
use tabml_core::simdata::{gen_snp, Architecture, SnpSpec};
use tabml_core::transform::{ImputeMode, TransformRecipe};
use tabml_core::{Dataset, FeatureKind};

fn mixed_with_missing(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 120;
    let mut cells = Vec::new();
    let mut y = Vec::new();
    for _ in 0..n {
        let a: f64 = rng.gen_range(0.0..10.0);
        let b = 2.0 * a + rng.gen_range(-1.0..1.0);
        let c = f64::from(rng.gen_range(0..3));
        for v in [a, b, c] {
            cells.push(if rng.gen::<f64>() < 0.1 { None } else { Some(v) });
        }
        y.push(Some(u8::from(a + c > 6.0)));
    }
    let mut d = Dataset::new("mixed", vec!["a".into(), "b".into(), "c".into()], cells, y).unwrap();
    d.set_feature_kinds(&[FeatureKind::Quantitative, FeatureKind::Quantitative, FeatureKind::Categorical]);
    d
}

#[test]
fn mutating_test_rows_changes_no_recipe_parameter() {
    let d = mixed_with_missing(1);
    let cv = make_cv(&d, 5, CvStrategy::Stratified, 3).unwrap();
    for mode in [ImputeMode::Simple, ImputeMode::Iterative] {
        for (k, fold) in cv.folds.iter().enumerate() {
            let recipe = TransformRecipe::fit(&d.select_rows(&fold.train), mode, format!("fold{k}")).unwrap();
            let mut poisoned = d.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
            for &r in &fold.test {
                for c in 0..3 {
                    let v = if rng.gen::<f64>() < 0.5 { None } else { Some(1e6 * rng.gen::<f64>()) };
                    poisoned.set_cell(r, c, if c == 2 { v.map(|x| (x as u64 % 3) as f64) } else { v });
                }
            }
            let again = TransformRecipe::fit(&poisoned.select_rows(&fold.train), mode, format!("fold{k}")).unwrap();
            assert_eq!(recipe, again);
            // Applying to the test rows is row-wise: one test row's transform
            // does not depend on the others.
            let test = d.select_rows(&fold.test);
            let whole = recipe.apply(&test).unwrap();
            let first = recipe.apply(&test.select_rows(&[0])).unwrap();
            for c in 0..3 {
                assert_eq!(whole.cell(0, c), first.cell(0, c));
            }
            assert_eq!(whole.missing_cell_count(), 0);
        }
    }
}

#[test]
fn feature_subsets_differ_across_folds_on_heterogeneous_data() {
    let (d, _) = gen_snp(&SnpSpec::new(Architecture::Heterogeneous4, 0.4, 5)).unwrap();
    let cv = make_cv(&d, 10, CvStrategy::Stratified, 5).unwrap();
    let config = ScoringConfig { max_features: Some(10), ..ScoringConfig::default() };
    let selections: Vec<Vec<String>> = cv
        .folds
        .iter()
        .enumerate()
        .map(|(k, f)| score_fold(&d.select_rows(&f.train), k, &config, k as u64).unwrap().selected_features)
        .collect();
    let distinct: std::collections::BTreeSet<&Vec<String>> = selections.iter().collect();
    assert!(distinct.len() > 1);
    for s in &selections {
        assert_eq!(s.len(), 10);
    }
}
