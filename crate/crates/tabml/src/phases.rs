//! The work done by each pipeline job: read input artifacts, write output
//! artifacts, return the written paths.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tabml_core::dataset::{clean, eda_summary, infer_feature_types, EdaSummary};
use tabml_core::eval::evaluate_model;
use tabml_core::featimp::{collective_select, score_fold, FeatureScores, ScoringConfig};
use tabml_core::hpo::{format_configuration, optimize_fixed, SweepResult};
use tabml_core::models::{fit, TrainData};
use tabml_core::partition::{make_cv, CvSplit};
use tabml_core::rng::{derive_seed, SeedPart};
use tabml_core::stats::{aggregate, significance_workflow, GroupSamples};
use tabml_core::transform::TransformRecipe;
use tabml_core::{Algorithm, Dataset, FeatureMeta, TrainedModel};

use crate::artifacts::{read_json, write_atomic, write_json, ModelArchive};
use crate::config::PipelineConfig;
use crate::csvio::{fmt_num, load_dataset, write_dataset, Table};
use crate::error::{Error, Result};
use crate::layout::{Layout, COMPARISON, EVALUATION, FIGURES, FEATURE_SELECTION};
use crate::results::{self, best_algorithm, EvalSet, SummarySettings, SUMMARY_METRICS};
use crate::svg;

/// Everything a job may read besides its input files.
pub struct Ctx<'a> {
    pub config: &'a PipelineConfig,
    pub layout: &'a Layout,
    /// `(name, source file)` per dataset.
    pub datasets: &'a [(String, PathBuf)],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSelection {
    pub fold: usize,
    pub selected: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub max_features: Option<usize>,
    pub folds: Vec<FoldSelection>,
}

impl Ctx<'_> {
    pub fn folds(&self) -> Vec<usize> {
        (0..self.config.k).collect()
    }

    pub fn settings(&self) -> SummarySettings {
        SummarySettings {
            primary_metric: self.config.primary_metric.clone(),
            alpha: self.config.alpha,
            top_features: self.config.top_features,
        }
    }

    fn seed(&self, parts: &[SeedPart<'_>]) -> u64 {
        derive_seed(self.config.seed, parts)
    }

    fn source(&self, ds: &str) -> Result<&Path> {
        self.datasets
            .iter()
            .find(|d| d.0 == ds)
            .map(|d| d.1.as_path())
            .ok_or_else(|| Error::Artifact(format!("unknown dataset `{ds}`")))
    }

    pub fn meta(&self, ds: &str) -> Result<Vec<FeatureMeta>> {
        read_json(&self.layout.meta(ds))
    }

    /// Loads a dataset CSV written by an earlier phase and restores kinds.
    pub fn load_typed(&self, path: &Path, ds: &str, meta: &[FeatureMeta]) -> Result<Dataset> {
        let mut d = load_dataset(path, &self.config.dataset_config())?;
        d.name = ds.to_string();
        apply_kinds(&mut d, meta)?;
        Ok(d)
    }
}

/// Sets feature kinds by name from stored metadata.
pub fn apply_kinds(d: &mut Dataset, meta: &[FeatureMeta]) -> Result<()> {
    let kinds = d
        .feature_names()
        .iter()
        .map(|n| {
            meta.iter()
                .find(|m| &m.name == n)
                .map(|m| m.kind)
                .ok_or_else(|| Error::Artifact(format!("feature `{n}` has no stored type")))
        })
        .collect::<Result<Vec<_>>>()?;
    d.set_feature_kinds(&kinds);
    Ok(())
}

struct Out(Vec<PathBuf>);

impl Out {
    fn table(&mut self, path: PathBuf, t: &Table) -> Result<()> {
        t.write(&path)?;
        self.0.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, path: PathBuf, v: &T) -> Result<()> {
        write_json(&path, v)?;
        self.0.push(path);
        Ok(())
    }

    fn text(&mut self, path: PathBuf, s: &str) -> Result<()> {
        write_atomic(&path, s.as_bytes())?;
        self.0.push(path);
        Ok(())
    }

    fn dataset(&mut self, ctx: &Ctx<'_>, path: PathBuf, d: &Dataset) -> Result<()> {
        write_dataset(&path, d, &ctx.config.dataset_config())?;
        self.0.push(path);
        Ok(())
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

pub fn eda(ctx: &Ctx<'_>, ds: &str) -> Result<Vec<PathBuf>> {
    let c = ctx.config;
    let raw = load_dataset(ctx.source(ds)?, &c.dataset_config())?;
    let mut d = clean(&raw, &c.exclude);
    d.name = ds.to_string();
    let mut overrides = c.type_overrides();
    overrides.categorical.retain(|n| !c.exclude.contains(n));
    overrides.quantitative.retain(|n| !c.exclude.contains(n));
    let meta = infer_feature_types(&d, c.type_cutoff, &overrides)?;
    d.set_feature_meta(meta.clone());
    let summary = eda_summary(&d)?;
    let dir = ctx.layout.dir(ds, crate::layout::EXPLORATORY);
    let mut out = Out(Vec::new());
    out.dataset(ctx, ctx.layout.cleaned(ds), &d)?;
    out.json(ctx.layout.meta(ds), &meta)?;
    out.json(ctx.layout.eda(ds), &summary)?;

    let mut types = Table::new(&["feature", "kind", "unique_count", "min", "max", "missing"]);
    for (i, m) in meta.iter().enumerate() {
        let missing = d.column(i).iter().filter(|v| v.is_none()).count();
        types.push(vec![
            m.name.clone(),
            m.kind.as_str().into(),
            m.observed_unique_count.to_string(),
            opt_num(m.observed_min),
            opt_num(m.observed_max),
            missing.to_string(),
        ]);
    }
    out.table(dir.join("feature_types.csv"), &types)?;
    let mut uni = Table::new(&["feature", "test", "statistic", "p_value"]);
    for u in &summary.univariate {
        uni.push(vec![u.feature.clone(), u.test_name.clone(), fmt_num(u.statistic), fmt_num(u.p_value)]);
    }
    out.table(dir.join("univariate.csv"), &uni)?;
    let mut h = vec!["feature".to_string()];
    h.extend(summary.feature_names.iter().cloned());
    let mut corr = Table { header: h, rows: Vec::new() };
    for (name, row) in summary.feature_names.iter().zip(&summary.feature_correlations) {
        let mut r = vec![name.clone()];
        r.extend(row.iter().map(|v| fmt_num(*v)));
        corr.push(r);
    }
    out.table(dir.join("correlations.csv"), &corr)?;
    let mut counts = Table::new(&["class", "count"]);
    counts.push(vec!["0".into(), summary.class_counts.0.to_string()]);
    counts.push(vec!["1".into(), summary.class_counts.1.to_string()]);
    out.table(dir.join("class_counts.csv"), &counts)?;
    let bars = vec![("0".to_string(), summary.class_counts.0 as f64), ("1".to_string(), summary.class_counts.1 as f64)];
    out.text(dir.join("class_counts.svg"), &svg::bars(&format!("{ds}: class counts"), "instances", &bars))?;
    let mut missing: Vec<(String, f64)> = (0..d.n_features())
        .map(|i| (meta[i].name.clone(), d.column(i).iter().filter(|v| v.is_none()).count() as f64))
        .collect();
    missing.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    missing.truncate(c.top_features);
    out.text(dir.join("missing_values.svg"), &svg::bars(&format!("{ds}: missing values"), "missing cells", &missing))?;
    Ok(out.0)
}

pub fn partition(ctx: &Ctx<'_>, ds: &str) -> Result<Vec<PathBuf>> {
    let meta = ctx.meta(ds)?;
    let d = ctx.load_typed(&ctx.layout.cleaned(ds), ds, &meta)?;
    let c = ctx.config;
    let split = make_cv(&d, c.k, c.cv_strategy, ctx.seed(&[SeedPart::Str("cv"), SeedPart::Str(ds)]))?;
    let mut out = Out(Vec::new());
    out.json(ctx.layout.split(ds), &split)?;
    let mut assign = Table::new(&["row", "fold"]);
    let mut fold_of = vec![0usize; d.n_instances()];
    for (k, f) in split.folds.iter().enumerate() {
        for &i in &f.test {
            fold_of[i] = k;
        }
        out.dataset(ctx, ctx.layout.fold_raw(ds, k, "train"), &d.select_rows(&f.train))?;
        out.dataset(ctx, ctx.layout.fold_raw(ds, k, "test"), &d.select_rows(&f.test))?;
    }
    for (i, k) in fold_of.iter().enumerate() {
        assign.push(vec![i.to_string(), k.to_string()]);
    }
    out.table(ctx.layout.dir(ds, crate::layout::CV).join("assignment.csv"), &assign)?;
    Ok(out.0)
}

pub fn transform(ctx: &Ctx<'_>, ds: &str, fold: usize) -> Result<Vec<PathBuf>> {
    let meta = ctx.meta(ds)?;
    let train = ctx.load_typed(&ctx.layout.fold_raw(ds, fold, "train"), ds, &meta)?;
    let test = ctx.load_typed(&ctx.layout.fold_raw(ds, fold, "test"), ds, &meta)?;
    let recipe = TransformRecipe::fit(&train, ctx.config.impute, format!("{ds}/fold{fold}"))?;
    let mut out = Out(Vec::new());
    out.json(ctx.layout.recipe(ds, fold), &recipe)?;
    out.dataset(ctx, ctx.layout.fold_transformed(ds, fold, "train"), &recipe.apply(&train)?)?;
    out.dataset(ctx, ctx.layout.fold_transformed(ds, fold, "test"), &recipe.apply(&test)?)?;
    Ok(out.0)
}

pub fn feature_importance(ctx: &Ctx<'_>, ds: &str, fold: usize) -> Result<Vec<PathBuf>> {
    let meta = ctx.meta(ds)?;
    let train = ctx.load_typed(&ctx.layout.fold_transformed(ds, fold, "train"), ds, &meta)?;
    let config = ScoringConfig { max_features: None, ..ctx.config.scoring.clone() };
    let seed = ctx.seed(&[SeedPart::Str("featimp"), SeedPart::Str(ds), SeedPart::from(fold)]);
    let mut scores = score_fold(&train, fold, &config, seed)?;
    // Selection belongs to the next phase.
    scores.selected_features.clear();
    let mut out = Out(Vec::new());
    out.json(ctx.layout.scores(ds, fold), &scores)?;
    Ok(out.0)
}

fn median_bars(names: &[String], per_fold: &[&[f64]], top: usize) -> Vec<(String, f64)> {
    let mut v: Vec<(String, f64)> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), aggregate(&per_fold.iter().map(|s| s[i]).collect::<Vec<_>>()).median))
        .collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v.truncate(top);
    v
}

pub fn feature_selection(ctx: &Ctx<'_>, ds: &str) -> Result<Vec<PathBuf>> {
    let dir = ctx.layout.dir(ds, FEATURE_SELECTION);
    let scores: Vec<FeatureScores> =
        ctx.folds().iter().map(|&k| read_json(&ctx.layout.scores(ds, k))).collect::<Result<_>>()?;
    let max = ctx.config.scoring.max_features;
    let mut out = Out(Vec::new());
    let mut folds = Vec::new();
    for s in &scores {
        let selected = collective_select(&s.features, &s.mi_scores, &s.multisurf_scores, max)?;
        let mut warnings = Vec::new();
        if selected.is_empty() {
            warnings.push(format!(
                "fold {}: no feature scored above zero; models for this fold use every feature",
                s.fold
            ));
        }
        let mut t = Table::new(&["feature", "mi", "multisurf", "selected"]);
        for (i, f) in s.features.iter().enumerate() {
            t.push(vec![
                f.clone(),
                fmt_num(s.mi_scores[i]),
                fmt_num(s.multisurf_scores[i]),
                selected.contains(f).to_string(),
            ]);
        }
        out.table(dir.join(format!("fold{}_scores.csv", s.fold)), &t)?;
        folds.push(FoldSelection { fold: s.fold, selected, warnings });
    }
    let names = scores.first().map(|s| s.features.clone()).unwrap_or_default();
    let mut counts = Table::new(&["feature", "folds_selected", "median_mi", "median_multisurf"]);
    for (i, n) in names.iter().enumerate() {
        let hits = folds.iter().filter(|f| f.selected.contains(n)).count();
        let mi = aggregate(&scores.iter().map(|s| s.mi_scores[i]).collect::<Vec<_>>()).median;
        let ms = aggregate(&scores.iter().map(|s| s.multisurf_scores[i]).collect::<Vec<_>>()).median;
        counts.push(vec![n.clone(), hits.to_string(), fmt_num(mi), fmt_num(ms)]);
    }
    out.table(dir.join("selection_counts.csv"), &counts)?;
    let top = ctx.config.top_features;
    let mi: Vec<&[f64]> = scores.iter().map(|s| s.mi_scores.as_slice()).collect();
    let ms: Vec<&[f64]> = scores.iter().map(|s| s.multisurf_scores.as_slice()).collect();
    out.text(
        dir.join("mi_median.svg"),
        &svg::bars(&format!("{ds}: median mutual information"), "mutual information", &median_bars(&names, &mi, top)),
    )?;
    out.text(
        dir.join("multisurf_median.svg"),
        &svg::bars(&format!("{ds}: median MultiSURF score"), "MultiSURF", &median_bars(&names, &ms, top)),
    )?;
    out.json(ctx.layout.selection(ds), &Selection { max_features: max, folds })?;
    Ok(out.0)
}

fn trials_table(sweep: &SweepResult) -> Table {
    let params: Vec<String> = sweep.trials.first().map(|t| t.configuration.keys().cloned().collect()).unwrap_or_default();
    let n_scores = sweep.trials.first().map_or(0, |t| t.nested_fold_scores.len());
    let mut header = vec!["trial".to_string(), "objective".to_string(), "degenerate".to_string(), "best".to_string()];
    header.extend((0..n_scores).map(|i| format!("nested_fold{i}")));
    header.extend(params.iter().map(|p| format!("param_{p}")));
    let mut t = Table { header, rows: Vec::new() };
    for tr in &sweep.trials {
        let mut row = vec![
            tr.index.to_string(),
            fmt_num(tr.objective),
            tr.degenerate.to_string(),
            (tr.index == sweep.best_index).to_string(),
        ];
        row.extend(tr.nested_fold_scores.iter().map(|v| fmt_num(*v)));
        row.extend(params.iter().map(|p| tr.configuration.get(p).map(|v| v.to_string()).unwrap_or_default()));
        t.push(row);
    }
    t
}

/// Tunes (unless disabled) and fits one algorithm on one training fold.
pub fn train_model(ctx: &Ctx<'_>, ds: &str, fold: usize, alg: Algorithm) -> Result<(TrainedModel, Option<SweepResult>)> {
    let meta = ctx.meta(ds)?;
    let train = ctx.load_typed(&ctx.layout.fold_transformed(ds, fold, "train"), ds, &meta)?;
    let sel: Selection = read_json(&ctx.layout.selection(ds))?;
    let chosen = sel
        .folds
        .iter()
        .find(|f| f.fold == fold)
        .map(|f| f.selected.clone())
        .ok_or_else(|| Error::Artifact(format!("no selection for fold {fold}")))?;
    let train = if chosen.is_empty() { train } else { train.select_features(&chosen)? };
    let x = train.to_matrix()?;
    let y = train.labels()?;
    let kinds = train.kinds();
    let names = train.feature_names();
    let data = TrainData { x: &x, y: &y, kinds: &kinds, feature_names: &names };
    let c = ctx.config;
    let fixed = c.fixed_for(alg);
    let ids = [SeedPart::Str(ds), SeedPart::from(fold), SeedPart::Str(alg.id())];
    let sweep = if c.n_trials > 0 {
        let seed = ctx.seed(&[&[SeedPart::Str("hpo")], &ids[..]].concat());
        optimize_fixed(alg, &fixed, data, c.n_trials, c.sampler, seed)?
    } else {
        None
    };
    let mut hp = fixed;
    if let Some(s) = &sweep {
        hp.extend(s.best_configuration.iter().map(|(k, v)| (k.clone(), v.clone())));
    }
    let seed = ctx.seed(&[&[SeedPart::Str("train")], &ids[..]].concat());
    let model = fit(alg, &hp, data, fold, seed)?;
    Ok((model, sweep))
}

pub fn modeling(ctx: &Ctx<'_>, ds: &str, fold: usize, alg: Algorithm) -> Result<Vec<PathBuf>> {
    let (model, sweep) = train_model(ctx, ds, fold, alg)?;
    let dir = ctx.layout.dir(ds, crate::layout::MODELS);
    let mut out = Out(Vec::new());
    out.json(ctx.layout.model(ds, alg, fold), &ModelArchive::new(&model, ds, &Layout::recipe_rel(fold)))?;
    if let Some(s) = &sweep {
        out.table(dir.join(format!("{alg}_fold{fold}_trials.csv")), &trials_table(s))?;
    }
    let mut text = format!(
        "algorithm: {} ({})\nfold: {fold}\nhyperparameters: {}\nfeatures: {}\n",
        alg,
        alg.long_name(),
        format_configuration(&model.hyperparameters),
        model.feature_subset.join(", ")
    );
    if let Some(d) = model.describe() {
        text.push('\n');
        text.push_str(&d);
        if !d.ends_with('\n') {
            text.push('\n');
        }
    }
    out.text(dir.join(format!("{alg}_fold{fold}.txt")), &text)?;
    Ok(out.0)
}

pub fn curve_table(points: &[(f64, f64)], x: &str, y: &str) -> Table {
    let mut t = Table::new(&[x, y]);
    for (a, b) in points {
        t.push(vec![fmt_num(*a), fmt_num(*b)]);
    }
    t
}

pub fn evaluation(ctx: &Ctx<'_>, ds: &str, fold: usize, alg: Algorithm) -> Result<Vec<PathBuf>> {
    let meta = ctx.meta(ds)?;
    let model = read_json::<ModelArchive>(&ctx.layout.model(ds, alg, fold))?.to_model()?;
    let test = ctx.load_typed(&ctx.layout.fold_transformed(ds, fold, "test"), ds, &meta)?;
    let (x, y, names) = (test.to_matrix()?, test.labels()?, test.feature_names());
    let seed = ctx.seed(&[SeedPart::Str("permutation"), SeedPart::Str(ds), SeedPart::from(fold), SeedPart::Str(alg.id())]);
    let rec = evaluate_model(ds, &model, &x, &names, &y, ctx.config.importance_metric, ctx.config.permutation_repeats, seed)?;
    let dir = ctx.layout.dir(ds, EVALUATION);
    let mut out = Out(Vec::new());
    out.table(dir.join("curves").join(format!("{alg}_fold{fold}_roc.csv")), &curve_table(&rec.roc.points, "fpr", "tpr"))?;
    out.table(dir.join("curves").join(format!("{alg}_fold{fold}_prc.csv")), &curve_table(&rec.prc.points, "recall", "precision"))?;
    out.json(ctx.layout.record(ds, alg, fold), &rec)?;
    Ok(out.0)
}

pub fn eval_set(ctx: &Ctx<'_>, ds: &str) -> Result<EvalSet> {
    let features = ctx.meta(ds)?.into_iter().map(|m| m.name).collect();
    EvalSet::load(&ctx.layout.dir(ds, EVALUATION), ds, features, &ctx.config.algorithms, &ctx.folds())
}

pub fn statistics(ctx: &Ctx<'_>, ds: &str) -> Result<Vec<PathBuf>> {
    results::write_statistics(&eval_set(ctx, ds)?, &ctx.settings(), &ctx.layout.dir(ds, EVALUATION))
}

pub fn figures(ctx: &Ctx<'_>, ds: &str) -> Result<Vec<PathBuf>> {
    results::write_figures(&eval_set(ctx, ds)?, &ctx.settings(), &ctx.layout.dir(ds, FIGURES))
}

/// Algorithm-level and best-algorithm comparisons across datasets.
pub fn comparison(ctx: &Ctx<'_>) -> Result<Vec<PathBuf>> {
    let sets: Vec<EvalSet> = ctx.datasets.iter().map(|(ds, _)| eval_set(ctx, ds)).collect::<Result<_>>()?;
    let dir = ctx.layout.root.join(COMPARISON);
    let c = ctx.config;
    let mut out = Out(Vec::new());

    let mut means = Table::new(&["metric", "algorithm", "dataset", "mean"]);
    for metric in SUMMARY_METRICS {
        for &a in &c.algorithms {
            for s in &sets {
                means.push(vec![metric.into(), a.id().into(), s.dataset.clone(), fmt_num(aggregate(&s.metric_values(a, metric)).mean)]);
            }
        }
    }
    out.table(dir.join("dataset_means.csv"), &means)?;

    let mut kw = Table::new(&["algorithm", "metric", "h", "p_value", "significant"]);
    let mut pw_rows = Vec::new();
    for &a in &c.algorithms {
        let groups: Vec<GroupSamples> = sets
            .iter()
            .map(|s| GroupSamples {
                name: s.dataset.clone(),
                metrics: SUMMARY_METRICS.iter().map(|m| (m.to_string(), s.metric_values(a, m))).collect(),
            })
            .collect();
        let f = significance_workflow(&groups, &SUMMARY_METRICS, c.alpha);
        for k in &f.kruskal {
            kw.push(vec![a.id().into(), k.metric.clone(), fmt_num(k.h), fmt_num(k.p_value), k.significant.to_string()]);
        }
        for r in results::pairwise_table(&f).rows {
            let mut row = vec![a.id().to_string()];
            row.extend(r);
            pw_rows.push(row);
        }
    }
    out.table(dir.join("kruskal_by_algorithm.csv"), &kw)?;
    let mut header = vec!["algorithm".to_string()];
    header.extend(results::pairwise_table(&Default::default()).header);
    out.table(dir.join("pairwise_by_algorithm.csv"), &Table { header, rows: pw_rows })?;

    let mut best = Table::new(&["dataset", "best_algorithm", "metric", "mean"]);
    let mut best_groups = Vec::new();
    for s in &sets {
        if let Some((a, m)) = best_algorithm(s, &c.primary_metric) {
            best.push(vec![s.dataset.clone(), a.id().into(), c.primary_metric.clone(), fmt_num(m)]);
            best_groups.push(GroupSamples {
                name: s.dataset.clone(),
                metrics: SUMMARY_METRICS.iter().map(|m| (m.to_string(), s.metric_values(a, m))).collect(),
            });
        }
    }
    out.table(dir.join("best_by_dataset.csv"), &best)?;
    let f = significance_workflow(&best_groups, &SUMMARY_METRICS, c.alpha);
    out.table(dir.join("best_kruskal_wallis.csv"), &results::kruskal_table(&f))?;
    out.table(dir.join("best_pairwise.csv"), &results::pairwise_table(&f))?;

    for metric in SUMMARY_METRICS {
        let groups: Vec<(String, Vec<f64>)> = sets
            .iter()
            .map(|s| (s.dataset.clone(), c.algorithms.iter().map(|&a| aggregate(&s.metric_values(a, metric)).mean).collect()))
            .collect();
        let trends: Vec<(String, Vec<f64>)> = c
            .algorithms
            .iter()
            .map(|&a| (a.id().to_string(), sets.iter().map(|s| aggregate(&s.metric_values(a, metric)).mean).collect()))
            .collect();
        out.text(
            dir.join(format!("box_{metric}.svg")),
            &svg::boxplot(&format!("Mean {metric} by dataset"), metric, &groups, &trends),
        )?;
    }
    Ok(out.0)
}

pub fn load_eda(ctx: &Ctx<'_>, ds: &str) -> Result<EdaSummary> {
    read_json(&ctx.layout.eda(ds))
}

pub fn load_split(ctx: &Ctx<'_>, ds: &str) -> Result<CvSplit> {
    read_json(&ctx.layout.split(ds))
}
