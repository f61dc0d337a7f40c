//! Per-dataset result tables, statistics and figures built from evaluation
//! records. Shared by the pipeline and by replication runs.

use std::path::{Path, PathBuf};

use tabml_core::eval::EvalRecord;
use tabml_core::metrics::{Curve, CurveKind, METRIC_NAMES};
use tabml_core::stats::{aggregate, composite_importance, normalize_min_max, significance_workflow, Findings, GroupSamples};
use tabml_core::Algorithm;

use crate::artifacts::{read_json, write_atomic};
use crate::csvio::{fmt_num, Table};
use crate::error::{Error, Result};
use crate::layout::record_path;
use crate::svg::{self, Series};

/// Metrics summarized in tables, statistics and boxplots (the confusion
/// counts are left to the per-fold CSV).
pub const SUMMARY_METRICS: [&str; 12] = [
    "balanced_accuracy",
    "accuracy",
    "f1",
    "sensitivity",
    "specificity",
    "precision",
    "roc_auc",
    "prc_auc",
    "aps",
    "npv",
    "lr_plus",
    "lr_minus",
];

pub fn lower_is_better(metric: &str) -> bool {
    metric == "lr_minus"
}

/// Settings that shape the summaries.
#[derive(Debug, Clone)]
pub struct SummarySettings {
    pub primary_metric: String,
    pub alpha: f64,
    pub top_features: usize,
}

#[derive(Debug, Clone)]
pub struct EvalSet {
    pub dataset: String,
    /// Column names the importance vectors refer to.
    pub features: Vec<String>,
    pub algorithms: Vec<Algorithm>,
    /// Sorted by algorithm, then fold.
    pub records: Vec<EvalRecord>,
}

impl EvalSet {
    pub fn load(eval_dir: &Path, dataset: &str, features: Vec<String>, algorithms: &[Algorithm], folds: &[usize]) -> Result<Self> {
        let mut records = Vec::new();
        for &alg in algorithms {
            for &k in folds {
                records.push(read_json::<EvalRecord>(&record_path(eval_dir, alg, k))?);
            }
        }
        Ok(EvalSet { dataset: dataset.into(), features, algorithms: algorithms.to_vec(), records })
    }

    pub fn of(&self, alg: Algorithm) -> Vec<&EvalRecord> {
        self.records.iter().filter(|r| r.algorithm == alg).collect()
    }

    pub fn metric_values(&self, alg: Algorithm, metric: &str) -> Vec<f64> {
        self.of(alg).iter().map(|r| r.metrics.get(metric).expect("known metric")).collect()
    }

    pub fn groups(&self) -> Vec<GroupSamples> {
        self.algorithms
            .iter()
            .map(|&a| GroupSamples {
                name: a.id().into(),
                metrics: SUMMARY_METRICS.iter().map(|m| (m.to_string(), self.metric_values(a, m))).collect(),
            })
            .collect()
    }
}

/// Linear interpolation along a curve ordered by x. At a vertical jump the
/// value after the jump is used.
pub fn interp(points: &[(f64, f64)], x: f64) -> f64 {
    for w in points.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x1 > x0 && x0 <= x && x <= x1 {
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        }
    }
    points.last().map_or(0.0, |p| p.1)
}

/// Fold-averaged curve on a 101-point grid; a single curve is returned as is.
pub fn mean_curve(curves: &[&Curve]) -> Vec<(f64, f64)> {
    match curves {
        [] => Vec::new(),
        [only] => only.points.clone(),
        _ => {
            let mut pts: Vec<(f64, f64)> = (0..=100)
                .map(|i| {
                    let x = f64::from(i) / 100.0;
                    (x, curves.iter().map(|c| interp(&c.points, x)).sum::<f64>() / curves.len() as f64)
                })
                .collect();
            if curves[0].kind == CurveKind::Roc {
                pts.insert(0, (0.0, 0.0));
            }
            pts
        }
    }
}

/// Mean permutation importance per feature over an algorithm's folds.
pub fn mean_importance(set: &EvalSet, alg: Algorithm) -> Vec<f64> {
    let recs = set.of(alg);
    let mut out = vec![0.0; set.features.len()];
    for r in &recs {
        for (o, v) in out.iter_mut().zip(&r.permutation_importance) {
            *o += v;
        }
    }
    out.iter().map(|v| v / recs.len().max(1) as f64).collect()
}

/// Per-algorithm contributions to the composite importance: min-max
/// normalized mean importance times the algorithm's median primary metric.
pub struct Composite {
    pub features: Vec<String>,
    pub total: Vec<f64>,
    pub weights: Vec<(Algorithm, f64)>,
    pub contributions: Vec<Vec<f64>>,
    /// Feature indices, highest composite first (ties by name).
    pub order: Vec<usize>,
}

pub fn composite(set: &EvalSet, primary_metric: &str) -> Result<Composite> {
    let mut per_alg = Vec::new();
    let mut weights = Vec::new();
    let mut contributions = Vec::new();
    for &a in &set.algorithms {
        let imp = mean_importance(set, a);
        let w = aggregate(&set.metric_values(a, primary_metric)).median;
        let w = if w.is_finite() { w } else { 0.0 };
        contributions.push(normalize_min_max(&imp).iter().map(|v| v * w).collect());
        weights.push((a, w));
        per_alg.push((imp, w));
    }
    let total = composite_importance(&per_alg)?;
    let names: Vec<&str> = set.features.iter().map(String::as_str).collect();
    let order = tabml_core::math::rank_desc_then_name(&total, &names);
    Ok(Composite { features: set.features.clone(), total, weights, contributions, order })
}

/// The algorithm with the best mean for `metric` (earliest on ties).
pub fn best_algorithm(set: &EvalSet, metric: &str) -> Option<(Algorithm, f64)> {
    let mut best: Option<(Algorithm, f64)> = None;
    for &a in &set.algorithms {
        let m = aggregate(&set.metric_values(a, metric)).mean;
        if !m.is_finite() {
            continue;
        }
        let better = match best {
            None => true,
            Some((_, b)) if lower_is_better(metric) => m < b,
            Some((_, b)) => m > b,
        };
        if better {
            best = Some((a, m));
        }
    }
    best
}

pub fn findings(set: &EvalSet, alpha: f64) -> Findings {
    significance_workflow(&set.groups(), &SUMMARY_METRICS, alpha)
}

fn write(files: &mut Vec<PathBuf>, path: PathBuf, table: &Table) -> Result<()> {
    table.write(&path)?;
    files.push(path);
    Ok(())
}

pub fn kruskal_table(f: &Findings) -> Table {
    let mut t = Table::new(&["metric", "h", "p_value", "significant"]);
    for k in &f.kruskal {
        t.push(vec![k.metric.clone(), fmt_num(k.h), fmt_num(k.p_value), k.significant.to_string()]);
    }
    t
}

pub fn pairwise_table(f: &Findings) -> Table {
    let mut t = Table::new(&[
        "metric",
        "group_a",
        "group_b",
        "mwu_u",
        "mwu_p",
        "mwu_significant",
        "wilcoxon_w",
        "wilcoxon_p",
        "wilcoxon_significant",
        "wilcoxon_all_zero",
    ]);
    for p in &f.pairwise {
        t.push(vec![
            p.metric.clone(),
            p.group_a.clone(),
            p.group_b.clone(),
            fmt_num(p.mwu_u),
            fmt_num(p.mwu_p),
            p.mwu_significant.to_string(),
            fmt_num(p.wilcoxon_w),
            fmt_num(p.wilcoxon_p),
            p.wilcoxon_significant.to_string(),
            p.wilcoxon_all_zero.to_string(),
        ]);
    }
    t
}

/// Metric tables, statistics and importance summaries into `dir`.
pub fn write_statistics(set: &EvalSet, s: &SummarySettings, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let mut header = vec!["algorithm", "fold"];
    header.extend(METRIC_NAMES);
    header.extend(["undefined", "infinite"]);
    let mut folds = Table::new(&header);
    for r in &set.records {
        let mut row = vec![r.algorithm.id().to_string(), r.fold.to_string()];
        row.extend(r.metrics.values().iter().map(|v| fmt_num(*v)));
        row.push(r.metrics.undefined.join(";"));
        row.push(r.metrics.infinite.join(";"));
        folds.push(row);
    }
    write(&mut files, dir.join("fold_metrics.csv"), &folds)?;

    let mut long = Table::new(&["algorithm", "metric", "mean", "median", "sd", "n_infinite"]);
    let mut wide_header = vec!["algorithm"];
    wide_header.extend(METRIC_NAMES);
    let (mut means, mut medians, mut sds) = (Table::new(&wide_header), Table::new(&wide_header), Table::new(&wide_header));
    for &a in &set.algorithms {
        let (mut m, mut md, mut sd) = (vec![a.id().to_string()], vec![a.id().to_string()], vec![a.id().to_string()]);
        for metric in METRIC_NAMES {
            let g = aggregate(&set.metric_values(a, metric));
            long.push(vec![
                a.id().into(),
                metric.into(),
                fmt_num(g.mean),
                fmt_num(g.median),
                fmt_num(g.sd),
                g.n_infinite.to_string(),
            ]);
            m.push(fmt_num(g.mean));
            md.push(fmt_num(g.median));
            sd.push(fmt_num(g.sd));
        }
        means.push(m);
        medians.push(md);
        sds.push(sd);
    }
    write(&mut files, dir.join("aggregate.csv"), &long)?;
    write(&mut files, dir.join("summary_mean.csv"), &means)?;
    write(&mut files, dir.join("summary_median.csv"), &medians)?;
    write(&mut files, dir.join("summary_sd.csv"), &sds)?;

    let f = findings(set, s.alpha);
    write(&mut files, dir.join("kruskal_wallis.csv"), &kruskal_table(&f))?;
    write(&mut files, dir.join("pairwise.csv"), &pairwise_table(&f))?;

    let mut best = Table::new(&["metric", "best_algorithm", "mean"]);
    for metric in SUMMARY_METRICS {
        if let Some((a, m)) = best_algorithm(set, metric) {
            best.push(vec![metric.into(), a.id().into(), fmt_num(m)]);
        }
    }
    write(&mut files, dir.join("best_algorithms.csv"), &best)?;

    let mut imp = Table::new(&["algorithm", "fold", "feature", "importance"]);
    for r in &set.records {
        for (name, v) in set.features.iter().zip(&r.permutation_importance) {
            imp.push(vec![r.algorithm.id().into(), r.fold.to_string(), name.clone(), fmt_num(*v)]);
        }
    }
    write(&mut files, dir.join("feature_importance.csv"), &imp)?;

    let c = composite(set, &s.primary_metric)?;
    let mut h = vec!["feature".to_string(), "composite".to_string()];
    h.extend(c.weights.iter().map(|(a, _)| a.id().to_string()));
    let mut comp = Table { header: h, rows: Vec::new() };
    for &i in &c.order {
        let mut row = vec![c.features[i].clone(), fmt_num(c.total[i])];
        row.extend(c.contributions.iter().map(|v| fmt_num(v[i])));
        comp.push(row);
    }
    write(&mut files, dir.join("composite_importance.csv"), &comp)?;
    let mut w = Table::new(&["algorithm", "weight_metric", "weight"]);
    for (a, v) in &c.weights {
        w.push(vec![a.id().into(), s.primary_metric.clone(), fmt_num(*v)]);
    }
    write(&mut files, dir.join("composite_weights.csv"), &w)?;

    let mut curves = Table::new(&["algorithm", "curve", "x", "y"]);
    for &a in &set.algorithms {
        let recs = set.of(a);
        for (kind, pick) in [("roc", 0), ("prc", 1)] {
            let cs: Vec<&Curve> = recs.iter().map(|r| if pick == 0 { &r.roc } else { &r.prc }).collect();
            for (x, y) in mean_curve(&cs) {
                curves.push(vec![a.id().into(), kind.into(), fmt_num(x), fmt_num(y)]);
            }
        }
    }
    write(&mut files, dir.join("mean_curves.csv"), &curves)?;
    Ok(files)
}

fn save(files: &mut Vec<PathBuf>, path: PathBuf, svg: String) -> Result<()> {
    write_atomic(&path, svg.as_bytes())?;
    files.push(path);
    Ok(())
}

fn curve_figure(title: &str, kind: CurveKind, folds: &[&Curve], mean: &[(f64, f64)], label: &str) -> String {
    let mut series: Vec<Series> = folds
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut s = Series::new(format!("fold {i}"), c.points.clone(), svg::color(i));
            s.width = 1.0;
            s.opacity = 0.5;
            s.legend = false;
            s
        })
        .collect();
    let mut m = Series::new(label, mean.to_vec(), "#000000");
    m.width = 2.5;
    series.push(m);
    series.push(no_skill(kind, folds));
    axes_for(title, kind, &series)
}

fn no_skill(kind: CurveKind, curves: &[&Curve]) -> Series {
    let (label, pts) = match kind {
        CurveKind::Roc => ("no skill".to_string(), vec![(0.0, 0.0), (1.0, 1.0)]),
        CurveKind::Prc => {
            let y = curves.iter().map(|c| c.no_skill).sum::<f64>() / curves.len().max(1) as f64;
            (format!("no skill ({y:.3})"), vec![(0.0, y), (1.0, y)])
        }
    };
    let mut s = Series::new(label, pts, "#888888");
    s.dashed = true;
    s.width = 1.5;
    s
}

fn axes_for(title: &str, kind: CurveKind, series: &[Series]) -> String {
    let (xl, yl) = match kind {
        CurveKind::Roc => ("False positive rate", "True positive rate"),
        CurveKind::Prc => ("Recall", "Precision"),
    };
    svg::line_chart(title, xl, yl, series, (0.0, 1.0), (0.0, 1.0))
}

/// ROC/PRC figures, metric boxplots, importance boxplots and the composite
/// importance bar plot.
pub fn write_figures(set: &EvalSet, s: &SummarySettings, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let ds = &set.dataset;
    for (kind, name) in [(CurveKind::Roc, "roc"), (CurveKind::Prc, "prc")] {
        let mut overlay = Vec::new();
        let mut all: Vec<&Curve> = Vec::new();
        for (i, &a) in set.algorithms.iter().enumerate() {
            let recs = set.of(a);
            let cs: Vec<&Curve> = recs.iter().map(|r| if kind == CurveKind::Roc { &r.roc } else { &r.prc }).collect();
            let mean = mean_curve(&cs);
            let auc = cs.iter().map(|c| c.auc).sum::<f64>() / cs.len().max(1) as f64;
            let label = format!("mean (AUC {auc:.3})");
            let title = format!("{ds}: {a} {}", name.to_uppercase());
            save(&mut files, dir.join(format!("{name}_{a}.svg")), curve_figure(&title, kind, &cs, &mean, &label))?;
            overlay.push(Series::new(format!("{a} ({auc:.3})"), mean, svg::color(i)));
            all.extend(cs);
        }
        overlay.push(no_skill(kind, &all));
        let title = format!("{ds}: mean {} by algorithm", name.to_uppercase());
        save(&mut files, dir.join(format!("{name}_all.svg")), axes_for(&title, kind, &overlay))?;
    }
    for metric in SUMMARY_METRICS {
        let groups: Vec<(String, Vec<f64>)> =
            set.algorithms.iter().map(|&a| (a.id().to_string(), set.metric_values(a, metric))).collect();
        save(&mut files, dir.join(format!("box_{metric}.svg")), svg::boxplot(&format!("{ds}: {metric}"), metric, &groups, &[]))?;
    }
    let names: Vec<&str> = set.features.iter().map(String::as_str).collect();
    for &a in &set.algorithms {
        let mean = mean_importance(set, a);
        let order = tabml_core::math::rank_desc_then_name(&mean, &names);
        let groups: Vec<(String, Vec<f64>)> = order
            .iter()
            .take(s.top_features)
            .map(|&i| (set.features[i].clone(), set.of(a).iter().map(|r| r.permutation_importance[i]).collect()))
            .collect();
        let title = format!("{ds}: {a} permutation importance (top {})", groups.len());
        save(&mut files, dir.join(format!("importance_{a}.svg")), svg::boxplot(&title, "importance", &groups, &[]))?;
    }
    let c = composite(set, &s.primary_metric)?;
    let top: Vec<usize> = c.order.iter().copied().take(s.top_features).collect();
    let cats: Vec<String> = top.iter().map(|&i| c.features[i].clone()).collect();
    let series: Vec<(String, Vec<f64>)> = c
        .weights
        .iter()
        .zip(&c.contributions)
        .map(|((a, _), v)| (a.id().to_string(), top.iter().map(|&i| v[i]).collect()))
        .collect();
    let title = format!("{ds}: composite feature importance (weighted by median {})", s.primary_metric);
    save(&mut files, dir.join("composite_importance.svg"), svg::stacked_bars(&title, "normalized importance", &cats, &series))?;
    Ok(files)
}

/// Parses a numeric CSV cell written by [`fmt_num`].
pub fn parse_num(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Artifact(format!("`{s}` is not a number")))
}
