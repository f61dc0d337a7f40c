//! End-to-end acceptance checks. Each criterion prints one PASS or FAIL
//! line (written straight to stdout so it shows without `--nocapture`),
//! followed by its individual claims. The test fails if any criterion does.
//!
//! Set `TABML_ACCEPTANCE=1,4` to run a subset.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tabml::apply::{simulate, SimSpec};
use tabml::config::PipelineConfig;
use tabml::csvio::read_table;
use tabml::pipeline::{Manifest, Runner};
use tabml_core::dataset::Dataset;
use tabml_core::featimp::{multisurf_all, mutual_info, score_fold, ScoringConfig, DEFAULT_MI_BINS};
use tabml_core::metrics::{prc_curve, roc_curve};
use tabml_core::partition::{make_cv, CvStrategy};
use tabml_core::simdata::{gen_snp, Architecture, MuxSpec, SnpSpec};
use tabml_core::stats::{kruskal_wallis, mann_whitney_u, wilcoxon_signed_rank};
use tabml_core::transform::{ImputeMode, TransformRecipe};
use tabml_core::FeatureKind;

fn say(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

#[derive(Default)]
struct Criterion {
    claims: Vec<(bool, String)>,
}

impl Criterion {
    fn check(&mut self, ok: bool, claim: impl Into<String>) {
        self.claims.push((ok, claim.into()));
    }

    fn passed(&self) -> bool {
        !self.claims.is_empty() && self.claims.iter().all(|c| c.0)
    }
}

// ---------------------------------------------------------------------------
// Pipeline helpers

struct Experiment {
    _tmp: tempfile::TempDir,
    runner: Runner,
    seconds: f64,
}

impl Experiment {
    fn mean(&self, ds: &str, metric: &str) -> BTreeMap<String, f64> {
        let t = read_table(&self.runner.layout.dir(ds, "evaluation").join("summary_mean.csv")).unwrap();
        let col = t.column(metric).unwrap();
        t.rows.iter().map(|r| (r[0].clone(), r[col].parse().unwrap())).collect()
    }
}

/// Writes each dataset into a fresh data folder and runs the full pipeline.
fn run_experiment(datasets: &[(&str, SimSpec)], settings: &str) -> Experiment {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    std::fs::create_dir(&data).unwrap();
    for (name, spec) in datasets {
        simulate(spec, &tmp.path().join(format!("{name}.csv"))).unwrap();
        std::fs::rename(tmp.path().join(format!("{name}.csv")), data.join(format!("{name}.csv"))).unwrap();
    }
    run_on(tmp, &data, settings, None)
}

fn run_on(tmp: tempfile::TempDir, data: &Path, settings: &str, jobs: Option<usize>) -> Experiment {
    let text = format!("data_dir = {}\nexperiment = acceptance\n{settings}", data.display());
    let mut c = PipelineConfig::from_text(&text, &[], tmp.path()).unwrap();
    c.out_dir = tmp.path().join(format!("out{}", jobs.unwrap_or(1)));
    if let Some(j) = jobs {
        c.jobs = j;
    }
    let runner = Runner::new(c, text, Vec::new()).unwrap();
    let start = Instant::now();
    runner.run(None).unwrap();
    Experiment { _tmp: tmp, runner, seconds: start.elapsed().as_secs_f64() }
}

fn mux(bits: usize, n: usize, seed: u64) -> SimSpec {
    SimSpec::Mux(MuxSpec { total_bits: bits, n_instances: n, seed })
}

fn at_least(c: &mut Criterion, m: &BTreeMap<String, f64>, algs: &[&str], bound: f64, what: &str) {
    for a in algs {
        let v = m[*a];
        c.check(v >= bound, format!("{a} mean {what} {v:.4} >= {bound}"));
    }
}

fn at_most(c: &mut Criterion, m: &BTreeMap<String, f64>, algs: &[&str], bound: f64, what: &str) {
    for a in algs {
        let v = m[*a];
        c.check(v <= bound, format!("{a} mean {what} {v:.4} <= {bound}"));
    }
}

// ---------------------------------------------------------------------------
// Criteria

/// 6-bit multiplexer, every algorithm, default settings.
fn mux6(c: &mut Criterion, knn_6bit: &mut Option<f64>) {
    let e = run_experiment(&[("mux6", mux(6, 500, 1))], &format!("seed = 1\nk = 10\nn_trials = {MUX6_TRIALS}\n"));
    let auc = e.mean("mux6", "roc_auc");
    at_least(c, &auc, &["DT", "RF", "GB", "KNN", "SVM", "LCS"], 0.95, "ROC-AUC");
    at_most(c, &auc, &["NB", "LR"], 0.75, "ROC-AUC");
    at_least(c, &auc, &["GP"], 0.90, "ROC-AUC");
    c.check(e.seconds < 20.0 * 60.0, format!("runtime {:.0} s < 1200 s at n_trials = {MUX6_TRIALS}", e.seconds));
    *knn_6bit = Some(auc["KNN"]);
}

fn mux11(c: &mut Criterion, knn_6bit: Option<f64>) {
    let e = run_experiment(&[("mux11", mux(11, 1000, 2))], &format!("seed = 2\nk = 10\nn_trials = {MUX11_TRIALS}\n"));
    let auc = e.mean("mux11", "roc_auc");
    at_least(c, &auc, &["RF", "GB", "LCS"], 0.95, "ROC-AUC");
    match knn_6bit {
        Some(k6) => c.check(auc["KNN"] < k6, format!("KNN {:.4} below its 6-bit score {k6:.4}", auc["KNN"])),
        None => c.check(false, "KNN 6-bit score unavailable (criterion 1 not run)"),
    }
    c.check(e.seconds < 45.0 * 60.0, format!("runtime {:.0} s < 2700 s at n_trials = {MUX11_TRIALS}", e.seconds));
}

fn mux20(c: &mut Criterion) {
    let e = run_experiment(&[("mux20", mux(20, 2000, 3))], MUX20_SETTINGS);
    let auc = e.mean("mux20", "roc_auc");
    at_least(c, &auc, &["GB", "LCS"], 0.95, "ROC-AUC");
    let comp = read_table(&e.runner.layout.dir("mux20", "evaluation").join("composite_importance.csv")).unwrap();
    let order: Vec<&str> = comp.rows.iter().map(|r| r[0].as_str()).collect();
    let worst_address = order.iter().rposition(|f| f.starts_with('A')).unwrap();
    let best_register = order.iter().position(|f| f.starts_with('R')).unwrap();
    c.check(
        worst_address < best_register,
        format!("composite importance puts all 4 address bits above every register bit (order starts {:?})", &order[..6]),
    );
}

fn rank_of(scores: &[f64], names: &[String], name: &str) -> usize {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(names[a].cmp(&names[b])));
    idx.iter().position(|&i| names[i] == name).unwrap()
}

fn epistasis(c: &mut Criterion) {
    let (mut ms_ok, mut mi_ok) = (0, 0);
    let mut detail = Vec::new();
    for seed in 1..=10u64 {
        let (d, _) = gen_snp(&SnpSpec::new(Architecture::Epistasis2, 0.4, seed)).unwrap();
        let (x, y, kinds, names) = (d.to_matrix().unwrap(), d.labels().unwrap(), d.kinds(), d.feature_names());
        let ms = multisurf_all(&x, &kinds, &y);
        let mi = mutual_info(&x, &kinds, &y, DEFAULT_MI_BINS);
        let ms_ranks: Vec<usize> = ["M0P0", "M0P1"].iter().map(|l| rank_of(&ms, &names, l)).collect();
        let mi_ranks: Vec<usize> = ["M0P0", "M0P1"].iter().map(|l| rank_of(&mi, &names, l)).collect();
        ms_ok += usize::from(ms_ranks.iter().all(|&r| r < 4));
        mi_ok += usize::from(mi_ranks.iter().all(|&r| r >= 10));
        detail.push(format!("{seed}: MS {ms_ranks:?} MI {mi_ranks:?}"));
    }
    c.check(ms_ok >= 8, format!("MultiSURF ranks both loci in its top 4 in {ms_ok}/10 regenerations"));
    c.check(mi_ok >= 8, format!("MI ranks neither locus in its top 10 in {mi_ok}/10 regenerations (0-based ranks {})", detail.join("; ")));

    let spec = SimSpec::Snp(SnpSpec::new(Architecture::Epistasis2, 0.4, 1));
    let e = run_experiment(&[("epistasis2", spec)], &format!("seed = 4\nk = 10\nalgorithms = NB, LR, GB, LCS\nn_trials = {EPISTASIS_TRIALS}\n"));
    let auc = e.mean("epistasis2", "roc_auc");
    at_most(c, &auc, &["NB", "LR"], 0.55, "ROC-AUC");
    at_least(c, &auc, &["GB", "LCS"], 0.70, "ROC-AUC");
}

fn univariate(c: &mut Criterion) {
    let spec = SimSpec::Snp(SnpSpec::new(Architecture::Univariate, 0.4, 5));
    let e = run_experiment(&[("univariate", spec)], &format!("seed = 5\nk = 10\nn_trials = {UNIVARIATE_TRIALS}\n"));
    let auc = e.mean("univariate", "roc_auc");
    let all: Vec<&str> = auc.keys().map(String::as_str).collect();
    c.check(all.len() == 9, format!("{} algorithms enabled", all.len()));
    at_least(c, &auc, &all, 0.65, "ROC-AUC");
}

fn reproducibility(c: &mut Criterion) {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    std::fs::create_dir(&data).unwrap();
    simulate(&mux(6, 200, 8), &data.join("a.csv")).unwrap();
    simulate(&SimSpec::Snp(SnpSpec { n_instances: 200, n_features: 20, ..SnpSpec::new(Architecture::Univariate, 0.3, 8) }), &data.join("b.csv"))
        .unwrap();
    for f in ["a", "b"] {
        std::fs::remove_file(data.join(format!("{f}.csv.meta.json"))).unwrap();
    }
    let settings = format!("seed = 6\nk = 5\nn_trials = 4\npermutation_repeats = 3\n{LIGHT_HP}");
    let text = format!("data_dir = {}\nexperiment = repro\n{settings}", data.display());
    let run = |jobs: usize| {
        let mut cfg = PipelineConfig::from_text(&text, &[], tmp.path()).unwrap();
        cfg.out_dir = tmp.path().join(format!("out{jobs}"));
        cfg.jobs = jobs;
        let r = Runner::new(cfg, text.clone(), Vec::new()).unwrap();
        r.run(None).unwrap();
        r
    };
    let one = run(1);
    let four = run(4);
    let index = |r: &Runner| tabml::artifacts::read_json::<Manifest>(&r.layout.manifest()).unwrap().artifacts;
    let (a, b) = (index(&one), index(&four));
    let csvs: Vec<&String> = a.keys().filter(|k| k.ends_with(".csv") && k.as_str() != "runtimes.csv").collect();
    let differing: Vec<&&String> = csvs.iter().filter(|k| b.get(**k) != a.get(**k)).collect();
    c.check(differing.is_empty(), format!("{} CSV artifacts identical between 1 and 4 workers (differing: {differing:?})", csvs.len()));
    let md = |r: &Runner| std::fs::read(r.layout.root.join("summary.md")).unwrap();
    c.check(md(&one) == md(&four), "summary.md byte-identical");
    let models = a.keys().filter(|k| k.contains("/models/") && k.ends_with(".json")).count();
    let same_models = a.keys().filter(|k| k.contains("/models/") && k.ends_with(".json")).all(|k| a.get(k) == b.get(k));
    c.check(same_models && models == 90, format!("{models} model archives identical"));
}

// Oracles for the rank statistics: pairwise counting, no sorting.
fn pairwise_rank(v: f64, pool: &[f64]) -> f64 {
    let less = pool.iter().filter(|&&u| u < v).count() as f64;
    let equal = pool.iter().filter(|&&u| u == v).count() as f64;
    less + (equal + 1.0) / 2.0
}

fn kw_oracle(groups: &[Vec<f64>]) -> f64 {
    let pool: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = pool.len() as f64;
    let between: f64 = groups
        .iter()
        .map(|g| {
            let mean = g.iter().map(|&v| pairwise_rank(v, &pool)).sum::<f64>() / g.len() as f64;
            g.len() as f64 * (mean - (n + 1.0) / 2.0).powi(2)
        })
        .sum();
    let ties: f64 = pool
        .iter()
        .map(|&v| {
            let t = pool.iter().filter(|&&u| u == v).count() as f64;
            t * t - 1.0
        })
        .sum();
    let correction = 1.0 - ties / (n * n * n - n);
    if correction <= 0.0 {
        0.0
    } else {
        12.0 / (n * (n + 1.0)) * between / correction
    }
}

fn set_partitions(n: usize, out: &mut Vec<Vec<usize>>) {
    fn rec(i: usize, max: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == a.len() {
            out.push(a.clone());
            return;
        }
        for b in 0..=max + 1 {
            a[i] = b;
            rec(i + 1, max.max(b), a, out);
        }
    }
    rec(1, 0, &mut vec![0; n], out);
}

fn pools(n: usize) -> Vec<Vec<f64>> {
    let distinct: Vec<f64> = (0..n).map(|i| (i * 7 % 11) as f64 + 0.5).collect();
    let tied: Vec<f64> = [2.0, 1.0, 2.0, 3.0, 1.0, 2.0, 4.0, 3.0, 2.0][..n].to_vec();
    vec![distinct, tied, vec![5.0; n]]
}

fn pairwise_auc(p: &[f64], y: &[u8]) -> f64 {
    let (mut twice, mut pos, mut neg) = (0u64, 0u64, 0u64);
    for i in 0..p.len() {
        if y[i] == 1 {
            pos += 1;
            for j in 0..p.len() {
                if y[j] == 0 {
                    twice += if p[i] > p[j] { 2 } else { u64::from(p[i] == p[j]) };
                }
            }
        } else {
            neg += 1;
        }
    }
    twice as f64 / (2.0 * pos as f64 * neg as f64)
}

fn statistics_oracles(c: &mut Criterion) {
    let (mut kw_n, mut kw_err) = (0usize, 0.0f64);
    let (mut mwu_n, mut mwu_err) = (0usize, 0.0f64);
    let (mut w_n, mut w_err) = (0usize, 0.0f64);
    for n in 2..=9 {
        for pool in pools(n) {
            let mut parts = Vec::new();
            set_partitions(n, &mut parts);
            for blocks in parts {
                let g = blocks.iter().max().unwrap() + 1;
                if g < 2 {
                    continue;
                }
                let groups: Vec<Vec<f64>> =
                    (0..g).map(|b| (0..n).filter(|&i| blocks[i] == b).map(|i| pool[i]).collect()).collect();
                kw_err = kw_err.max((kruskal_wallis(&groups).unwrap().0 - kw_oracle(&groups)).abs());
                kw_n += 1;
            }
            for mask in 1u32..(1 << n) - 1 {
                let a: Vec<f64> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| pool[i]).collect();
                let b: Vec<f64> = (0..n).filter(|i| mask >> i & 1 == 0).map(|i| pool[i]).collect();
                let u: f64 = a.iter().map(|x| b.iter().map(|y| if x > y { 1.0 } else if x == y { 0.5 } else { 0.0 }).sum::<f64>()).sum();
                mwu_err = mwu_err.max((mann_whitney_u(&a, &b).unwrap().u - u).abs());
                mwu_n += 1;
            }
            // Paired differences with every sign pattern.
            for signs in 0u32..(1 << n) {
                let d: Vec<f64> = (0..n).map(|i| if signs >> i & 1 == 1 { -pool[i] } else { pool[i] }).collect();
                let zeros = vec![0.0; n];
                let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
                let plus: f64 = d.iter().zip(&abs).filter(|(v, _)| **v > 0.0).map(|(_, a)| pairwise_rank(*a, &abs)).sum();
                let minus: f64 = d.iter().zip(&abs).filter(|(v, _)| **v < 0.0).map(|(_, a)| pairwise_rank(*a, &abs)).sum();
                let r = wilcoxon_signed_rank(&d, &zeros).unwrap();
                w_err = w_err.max((r.w_plus - plus).abs()).max((r.w - plus.min(minus)).abs());
                w_n += 1;
            }
        }
    }
    c.check(kw_err <= 1e-9, format!("Kruskal-Wallis H on {kw_n} group configurations, max error {kw_err:.1e}"));
    c.check(mwu_err <= 1e-9, format!("Mann-Whitney U on {mwu_n} splits, max error {mwu_err:.1e}"));
    c.check(w_err <= 1e-9, format!("Wilcoxon W on {w_n} signed samples, max error {w_err:.1e}"));

    let mut rng = ChaCha8Rng::seed_from_u64(70);
    let (mut done, mut mismatches) = (0, 0);
    while done < 1000 {
        let n = rng.gen_range(2..=30);
        let grid = rng.gen_range(2..=40);
        let p: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..grid)) / f64::from(grid)).collect();
        let y: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
        if !(y.contains(&0) && y.contains(&1)) {
            continue;
        }
        mismatches += usize::from(roc_curve(&p, &y).unwrap().auc != pairwise_auc(&p, &y));
        done += 1;
    }
    c.check(mismatches == 0, format!("ROC-AUC equals the pairwise oracle exactly on 1000 instances ({mismatches} mismatches)"));
}

fn leakage(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(80);
    let mut cells = Vec::new();
    let mut y = Vec::new();
    for _ in 0..150 {
        let a: f64 = rng.gen_range(0.0..10.0);
        let b = a * 2.0 + rng.gen_range(-1.0..1.0);
        let cat = f64::from(rng.gen_range(0..3));
        for v in [a, b, cat] {
            cells.push((rng.gen::<f64>() >= 0.1).then_some(v));
        }
        y.push(Some(u8::from(a + cat > 6.0)));
    }
    let mut d = Dataset::new("mixed", vec!["a".into(), "b".into(), "c".into()], cells, y).unwrap();
    d.set_feature_kinds(&[FeatureKind::Quantitative, FeatureKind::Quantitative, FeatureKind::Categorical]);
    let cv = make_cv(&d, 5, CvStrategy::Stratified, 1).unwrap();
    let mut changed = 0;
    let mut recipes = 0;
    for mode in [ImputeMode::Simple, ImputeMode::Iterative] {
        for (k, fold) in cv.folds.iter().enumerate() {
            let recipe = TransformRecipe::fit(&d.select_rows(&fold.train), mode, format!("fold{k}")).unwrap();
            let mut poisoned = d.clone();
            for &r in &fold.test {
                for col in 0..3 {
                    let v = (rng.gen::<f64>() >= 0.5).then(|| 1e6 * rng.gen::<f64>());
                    poisoned.set_cell(r, col, if col == 2 { v.map(|x| (x as u64 % 3) as f64) } else { v });
                }
            }
            let again = TransformRecipe::fit(&poisoned.select_rows(&fold.train), mode, format!("fold{k}")).unwrap();
            changed += usize::from(recipe != again);
            recipes += 1;
        }
    }
    c.check(changed == 0, format!("mutated test folds changed {changed} of {recipes} fitted recipes"));

    let (d, _) = gen_snp(&SnpSpec::new(Architecture::Heterogeneous4, 0.4, 5)).unwrap();
    let cv = make_cv(&d, 10, CvStrategy::Stratified, 5).unwrap();
    let config = ScoringConfig { max_features: Some(10), ..ScoringConfig::default() };
    let subsets: std::collections::BTreeSet<Vec<String>> = cv
        .folds
        .iter()
        .enumerate()
        .map(|(k, f)| score_fold(&d.select_rows(&f.train), k, &config, k as u64).unwrap().selected_features)
        .collect();
    c.check(subsets.len() > 1, format!("heterogeneous4: {} distinct 10-feature subsets over 10 training folds", subsets.len()));
}

fn metric_invariants(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(90);
    let (mut flip, mut monotone, mut noskill, mut cases) = (0, 0, 0, 0);
    while cases < 10_000 {
        let n = rng.gen_range(2..=50);
        let p: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..=64u32)) / 64.0).collect();
        let y: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
        if !(y.contains(&0) && y.contains(&1)) {
            continue;
        }
        cases += 1;
        let auc = roc_curve(&p, &y).unwrap().auc;
        let flipped: Vec<u8> = y.iter().map(|v| 1 - v).collect();
        flip += usize::from((roc_curve(&p, &flipped).unwrap().auc - (1.0 - auc)).abs() > 1e-12);
        let cubed: Vec<f64> = p.iter().map(|v| 3.0 * v * v * v - 1.0).collect();
        let logged: Vec<f64> = p.iter().map(|v| (v + 0.01).ln()).collect();
        monotone += usize::from(roc_curve(&cubed, &y).unwrap().auc != auc || roc_curve(&logged, &y).unwrap().auc != auc);
        let ratio = y.iter().filter(|&&v| v == 1).count() as f64 / n as f64;
        noskill += usize::from((prc_curve(&p, &y).unwrap().no_skill - ratio).abs() > 1e-15);
    }
    c.check(flip == 0, format!("label flip gives 1 - AUC: {flip} violations in {cases}"));
    c.check(monotone == 0, format!("AUC unchanged by monotone transforms: {monotone} violations in {cases}"));
    c.check(noskill == 0, format!("PRC no-skill equals the class ratio: {noskill} violations in {cases}"));
}

/// A hand-made mixed-type file with an ID column, missing values and
/// categorical codes, run through every phase.
fn smoke(c: &mut Criterion) {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    std::fs::create_dir(&data).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let mut text = String::from("patient,age,smoker,marker,site,Class\n");
    for i in 0..160 {
        let age = rng.gen_range(30..80);
        let smoker = rng.gen_range(0..2);
        let marker: f64 = rng.gen_range(0.0..5.0);
        let site = rng.gen_range(1..5);
        let risk = 0.04 * f64::from(age - 55) + f64::from(smoker) + 0.6 * (marker - 2.5);
        let class = u8::from(risk + rng.gen_range(-1.0..1.0) > 0.0);
        let marker = if rng.gen::<f64>() < 0.1 { "NA".to_string() } else { format!("{marker:.3}") };
        text.push_str(&format!("P{i:03},{age},{smoker},{marker},{site},{class}\n"));
    }
    std::fs::write(data.join("clinic.csv"), text).unwrap();
    let e = run_on(tmp, &data, &format!("seed = 9\nk = 5\ninstance_id = patient\nn_trials = 3\nimpute = iterative\n{LIGHT_HP}"), None);
    let root = &e.runner.layout.root;
    let md = std::fs::read_to_string(root.join("summary.md")).unwrap();
    c.check(md.contains("| 160 | 4 |"), "report lists 160 instances and 4 features");
    let auc = e.mean("clinic", "roc_auc");
    c.check(auc.len() == 9, format!("{} algorithms evaluated", auc.len()));
    let best = auc.values().copied().fold(0.0, f64::max);
    c.check(best > 0.7, format!("best mean ROC-AUC {best:.4} > 0.7"));
    let m: Manifest = tabml::artifacts::read_json(&e.runner.layout.manifest()).unwrap();
    c.check(m.failures.is_empty() && m.phases.len() == 10, "manifest has no failures and 10 phase entries");
}

// ---------------------------------------------------------------------------
// Settings

/// Tuning budget named by the criterion.
const MUX6_TRIALS: usize = 50;
const MUX11_TRIALS: usize = 50;
const MUX20_SETTINGS: &str = "seed = 3\nk = 10\nalgorithms = GB, LCS\nn_trials = 10\n\
hp.LCS.nu = 10\nhp.LCS.population = 5000\nhp.LCS.iterations = 100000\n";
const EPISTASIS_TRIALS: usize = 50;
const UNIVARIATE_TRIALS: usize = 10;
/// Small models for the runs that check plumbing rather than accuracy.
const LIGHT_HP: &str = "hp.RF.n_estimators = 20\nhp.GP.population = 100\nhp.GP.generations = 10\n\
hp.LCS.iterations = 5000\nhp.LCS.population = 300\n";

#[test]
fn acceptance_criteria() {
    let only: Option<Vec<String>> =
        std::env::var("TABML_ACCEPTANCE").ok().map(|s| s.split(',').map(|x| x.trim().to_string()).collect());
    let wanted = |id: &str| only.as_ref().map_or(true, |o| o.iter().any(|x| x == id));
    let mut knn_6bit = None;
    let mut failed = Vec::new();
    type Run<'a> = Box<dyn FnMut(&mut Criterion) + 'a>;
    let knn = std::cell::RefCell::new(&mut knn_6bit);
    let criteria: Vec<(&str, &str, Run<'_>)> = vec![
        ("1", "6-bit multiplexer accuracy and runtime", Box::new(|c| mux6(c, &mut knn.borrow_mut()))),
        ("2", "11-bit multiplexer accuracy and runtime", Box::new(|c| mux11(c, **knn.borrow()))),
        ("3", "20-bit multiplexer accuracy and composite importance", Box::new(mux20)),
        ("4", "pure epistasis: scorer contrast and model split", Box::new(epistasis)),
        ("5", "univariate SNP: every algorithm learns", Box::new(univariate)),
        ("6", "reproducibility across worker counts", Box::new(reproducibility)),
        ("7", "rank statistics and ROC-AUC oracles", Box::new(statistics_oracles)),
        ("8", "no train/test leakage", Box::new(leakage)),
        ("9", "metric invariants", Box::new(metric_invariants)),
        ("smoke", "end-to-end run on a mixed-type CSV", Box::new(smoke)),
    ];
    for (id, title, mut run) in criteria {
        if !wanted(id) {
            continue;
        }
        let mut c = Criterion::default();
        let start = Instant::now();
        run(&mut c);
        let verdict = if c.passed() { "PASS" } else { "FAIL" };
        say(&format!("{verdict} criterion {id}: {title} ({:.0} s)", start.elapsed().as_secs_f64()));
        for (ok, claim) in &c.claims {
            say(&format!("    [{}] {claim}", if *ok { "ok" } else { "FAIL" }));
        }
        if !c.passed() {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "criteria not met: {failed:?}");
}
