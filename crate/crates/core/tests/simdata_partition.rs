use proptest::prelude::*;
use tabml_core::featimp::{mutual_info, DEFAULT_MI_BINS};
use tabml_core::partition::{stratified_or_grouped, CvStrategy};
use tabml_core::simdata::{gen_mux, gen_snp, mux_feature_names, Architecture, MuxSpec, Penetrance, SnpSpec, MUX_BITS};

fn truth_table_mux(row: &[f64], k: usize) -> u8 {
    let mut address = 0usize;
    for bit in &row[..k] {
        address = address * 2 + *bit as usize;
    }
    row[k + address] as u8
}

#[test]
fn mux_rows_follow_the_truth_table() {
    for (bits, k) in MUX_BITS.iter().zip(2..) {
        let (d, meta) = gen_mux(&MuxSpec { total_bits: *bits, n_instances: 300, seed: 5 }).unwrap();
        assert_eq!(d.n_features(), *bits);
        assert_eq!(meta.n_instances, 300);
        let x = d.to_matrix().unwrap();
        let y = d.labels().unwrap();
        for r in 0..300 {
            assert!(x.row(r).iter().all(|&v| v == 0.0 || v == 1.0));
            assert_eq!(y[r], truth_table_mux(x.row(r), k));
        }
        let again = gen_mux(&MuxSpec { total_bits: *bits, n_instances: 300, seed: 5 }).unwrap().0;
        assert_eq!(d, again);
    }
    let names = mux_feature_names(20).unwrap();
    assert_eq!(names.iter().filter(|n| n.starts_with('A')).count(), 4);
    assert_eq!(mux_feature_names(135).unwrap().iter().filter(|n| n.starts_with('R')).count(), 128);
    assert!(gen_mux(&MuxSpec { total_bits: 7, n_instances: 10, seed: 0 }).is_err());
}

#[test]
fn snp_architectures_are_balanced_with_expected_relevant_loci() {
    let expected = [
        (Architecture::Univariate, 1),
        (Architecture::Additive4, 4),
        (Architecture::Heterogeneous4, 4),
        (Architecture::Epistasis2, 2),
        (Architecture::HetEpistasis2x2, 4),
        (Architecture::Epistasis3, 3),
    ];
    for (arch, relevant) in expected {
        let (d, meta) = gen_snp(&SnpSpec::new(arch, 0.2, 3)).unwrap();
        assert_eq!(meta.relevant_features.len(), relevant, "{}", arch.as_str());
        assert_eq!(d.n_features(), 100);
        let y = d.labels().unwrap();
        let pos = y.iter().filter(|&&v| v == 1).count();
        assert!(pos.abs_diff(800) <= 1, "{}: {pos} positives", arch.as_str());
        let x = d.to_matrix().unwrap();
        assert!(x.as_slice().iter().all(|&v| v == 0.0 || v == 1.0 || v == 2.0));
    }
}

#[test]
fn epistatic_loci_carry_no_marginal_information() {
    let (d, _) = gen_snp(&SnpSpec::new(Architecture::Epistasis2, 0.4, 21)).unwrap();
    let mi = mutual_info(&d.to_matrix().unwrap(), &d.kinds(), &d.labels().unwrap(), DEFAULT_MI_BINS);
    assert!(mi[0] <= 0.01 && mi[1] <= 0.01, "{:?}", &mi[..2]);
}

/// Exhaustive genotype-table computation: the best classifier on both loci
/// versus the best classifier on one locus, weighted by HWE frequencies.
#[test]
fn interaction_table_beats_any_single_locus() {
    let maf: f64 = 0.2;
    let g = [(1.0 - maf).powi(2), 2.0 * maf * (1.0 - maf), maf * maf];
    let model = Penetrance::solve(2, false, maf, 0.4).unwrap();
    let (mut pair_correct, mut total_case) = (0.0, 0.0);
    let mut single = [[0.0f64; 2]; 3];
    for a in 0..3u8 {
        for b in 0..3u8 {
            let w = g[a as usize] * g[b as usize];
            let p = model.penetrance(&[a, b]);
            total_case += w * p;
            single[a as usize][1] += w * p;
            single[a as usize][0] += w * (1.0 - p);
            pair_correct += w * p.max(1.0 - p);
        }
    }
    // Single-locus marginal penetrance is flat, so one locus predicts nothing.
    for s in single {
        let pen = s[1] / (s[0] + s[1]);
        assert!((pen - total_case).abs() < 1e-12);
    }
    assert!(pair_correct > total_case.max(1.0 - total_case) + 0.05);
    assert!((model.heritability() - 0.4).abs() < 1e-9);
    assert!(Penetrance::solve(2, false, maf, 1.0).is_err());
}

#[test]
fn univariate_full_heritability_is_a_lookup() {
    let (d, _) = gen_snp(&SnpSpec::new(Architecture::Univariate, 1.0, 2)).unwrap();
    let x = d.to_matrix().unwrap();
    let y = d.labels().unwrap();
    let mut seen = [[false; 2]; 3];
    for r in 0..x.rows() {
        seen[x.get(r, 0) as usize][y[r] as usize] = true;
    }
    for s in seen {
        assert!(!(s[0] && s[1]), "a genotype maps to both classes");
    }
}

fn labels_strategy() -> impl Strategy<Value = (Vec<u8>, usize, u64)> {
    (20usize..200, 2usize..11, any::<u64>(), 0.1f64..0.9).prop_map(|(n, k, seed, frac)| {
        let pos = ((n as f64 * frac) as usize).clamp(k, n - k);
        let y = (0..n).map(|i| u8::from(i * 7919 % n < pos)).collect();
        (y, k, seed)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn folds_partition_the_instances((y, k, seed) in labels_strategy()) {
        let n = y.len();
        for strategy in [CvStrategy::Stratified, CvStrategy::Random] {
            let cv = stratified_or_grouped(&y, None, k, strategy, seed).unwrap();
            let mut seen = vec![0u8; n];
            for f in &cv.folds {
                prop_assert_eq!(f.train.len() + f.test.len(), n);
                for &i in &f.test {
                    seen[i] += 1;
                }
                let mut both: Vec<usize> = f.train.iter().chain(&f.test).copied().collect();
                both.sort_unstable();
                both.dedup();
                prop_assert_eq!(both.len(), n);
                if strategy == CvStrategy::Stratified {
                    let global = y.iter().filter(|&&v| v == 1).count() as f64 / n as f64;
                    let local = f.test.iter().filter(|&&i| y[i] == 1).count() as f64 / f.test.len() as f64;
                    prop_assert!((local - global).abs() <= 1.0 / f.test.len() as f64 + 1e-12);
                }
            }
            prop_assert!(seen.iter().all(|&s| s == 1));
            let sizes: Vec<usize> = cv.folds.iter().map(|f| f.test.len()).collect();
            prop_assert!(sizes.windows(2).all(|w| w[0] >= w[1]) && sizes[0] - sizes[k - 1] <= 1);
        }
    }

    #[test]
    fn matched_groups_never_straddle((n_groups, seed) in (6usize..40, any::<u64>())) {
        let groups: Vec<i64> = (0..n_groups * 3).map(|i| (i % n_groups) as i64).collect();
        let y: Vec<u8> = groups.iter().map(|&g| u8::from(g % 2 == 0)).collect();
        let cv = stratified_or_grouped(&y, Some(&groups), 3, CvStrategy::Matched, seed).unwrap();
        for f in &cv.folds {
            for &i in &f.test {
                prop_assert!(f.train.iter().all(|&j| groups[j] != groups[i]));
            }
        }
    }
}
