//! Cross-validation aggregation, model feature importance, and
//! nonparametric significance testing.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;
use crate::metrics;
use crate::models::TrainedModel;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankTest {
    pub statistic: f64,
    pub p_value: f64,
}

/// Kruskal-Wallis H with tie correction; p from chi-square with g-1 degrees
/// of freedom. Returns `(H, p)`; all-identical observations give `(0, 1)`.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<(f64, f64)> {
    if groups.len() < 2 {
        return Err(Error::invalid("Kruskal-Wallis needs at least two groups"));
    }
    if groups.iter().any(Vec::is_empty) {
        return Err(Error::Empty("Kruskal-Wallis group"));
    }
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = all.len() as f64;
    let ranks = math::average_ranks(&all);
    let ties: f64 = math::tie_group_sizes(&all).iter().map(|&t| (t * t * t - t) as f64).sum();
    let correction = 1.0 - ties / (n * n * n - n);
    if correction <= 0.0 {
        return Ok((0.0, 1.0));
    }
    let mut offset = 0;
    let mut sum = 0.0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum();
        sum += r * r / g.len() as f64;
        offset += g.len();
    }
    let h = ((12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0)) / correction).max(0.0);
    Ok((h, math::chi_square_sf(h, (groups.len() - 1) as f64)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U statistic of the first sample: pairs with `a > b` plus half the ties.
    pub u: f64,
    pub p_value: f64,
}

/// Two-sided Mann-Whitney U test, normal approximation with tie and
/// continuity corrections.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("Mann-Whitney sample"));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let all: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = math::average_ranks(&all);
    let ra: f64 = ranks[..a.len()].iter().sum();
    let u = ra - na * (na + 1.0) / 2.0;
    let n = na + nb;
    let ties: f64 = math::tie_group_sizes(&all).iter().map(|&t| (t * t * t - t) as f64).sum();
    let var = na * nb / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    let p_value = if var <= 0.0 {
        1.0
    } else {
        let z = ((u - na * nb / 2.0).abs() - 0.5).max(0.0) / var.sqrt();
        (2.0 * math::normal_sf(z)).min(1.0)
    };
    Ok(MannWhitney { u, p_value })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wilcoxon {
    /// `min(W+, W-)` over the nonzero differences.
    pub w: f64,
    pub w_plus: f64,
    pub p_value: f64,
    /// Every paired difference was zero; `p_value` is 1.
    pub all_zero: bool,
}

/// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences
/// are discarded; normal approximation with tie and continuity corrections.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<Wilcoxon> {
    if a.len() != b.len() {
        return Err(Error::invalid("Wilcoxon test needs paired samples of equal length"));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if d.is_empty() {
        return Ok(Wilcoxon { w: 0.0, w_plus: 0.0, p_value: 1.0, all_zero: true });
    }
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let ranks = math::average_ranks(&abs);
    let w_plus: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let n = d.len() as f64;
    let total = n * (n + 1.0) / 2.0;
    let w_minus = total - w_plus;
    let ties: f64 = math::tie_group_sizes(&abs).iter().map(|&t| (t * t * t - t) as f64).sum();
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - ties / 48.0;
    let p_value = if var <= 0.0 {
        1.0
    } else {
        let z = ((w_plus - total / 2.0).abs() - 0.5).max(0.0) / var.sqrt();
        (2.0 * math::normal_sf(z)).min(1.0)
    };
    Ok(Wilcoxon { w: w_plus.min(w_minus), w_plus, p_value, all_zero: false })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    /// Infinite values are excluded from the three summaries and counted here.
    pub n_infinite: usize,
}

/// Mean, median and sample standard deviation over the finite values.
/// When every value is infinite and of one sign, mean and median are that
/// infinity.
pub fn aggregate(values: &[f64]) -> Aggregate {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() && !values.is_empty() && values.iter().all(|v| *v == values[0] && v.is_infinite()) {
        return Aggregate { mean: values[0], median: values[0], sd: 0.0, n_infinite: values.len() };
    }
    Aggregate {
        mean: math::mean(&finite),
        median: math::median(&finite),
        sd: math::sd_sample(&finite),
        n_infinite: values.len() - finite.len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMetric {
    BalancedAccuracy,
    RocAuc,
}

impl ScoreMetric {
    pub fn name(self) -> &'static str {
        match self {
            ScoreMetric::BalancedAccuracy => "balanced_accuracy",
            ScoreMetric::RocAuc => "roc_auc",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "balanced_accuracy" => Some(ScoreMetric::BalancedAccuracy),
            "roc_auc" => Some(ScoreMetric::RocAuc),
            _ => None,
        }
    }

    pub fn score(self, probabilities: &[f64], labels: &[u8]) -> Result<f64> {
        match self {
            ScoreMetric::BalancedAccuracy => metrics::balanced_accuracy(probabilities, labels),
            ScoreMetric::RocAuc => metrics::roc_curve(probabilities, labels).map(|c| c.auc),
        }
    }
}

/// Drop in `metric` when each model feature is permuted in the test data.
///
/// `test_x` columns are named by `feature_names`, which may be a superset of
/// the model's features; features the model does not use score exactly 0.
pub fn permutation_importance(
    model: &TrainedModel,
    test_x: &Matrix,
    feature_names: &[String],
    test_y: &[u8],
    metric: ScoreMetric,
    n_repeats: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let n_pos = test_y.iter().filter(|&&y| y == 1).count();
    if n_pos == 0 || n_pos == test_y.len() {
        return Err(Error::SingleClass);
    }
    if n_repeats == 0 {
        return Err(Error::invalid("n_repeats must be at least 1"));
    }
    let cols = model.column_indices(feature_names)?;
    let mut x = test_x.select_columns(&cols);
    let baseline = metric.score(&model.predict_proba(&x)?, test_y)?;
    let mut rng = rng::rng_from_seed(seed);
    let mut scores = vec![0.0; feature_names.len()];
    for (j, &col) in cols.iter().enumerate() {
        let original = x.column(j);
        let mut total = 0.0;
        for _ in 0..n_repeats {
            let mut shuffled = original.clone();
            shuffled.shuffle(&mut rng);
            x.set_column(j, &shuffled);
            total += metric.score(&model.predict_proba(&x)?, test_y)?;
        }
        x.set_column(j, &original);
        scores[col] = baseline - total / n_repeats as f64;
    }
    Ok(scores)
}

/// Min-max normalizes each algorithm's importances to [0, 1] (a constant
/// vector becomes all zeros), scales by the algorithm's weight, and sums.
pub fn composite_importance(per_algorithm: &[(Vec<f64>, f64)]) -> Result<Vec<f64>> {
    let len = per_algorithm.first().map(|v| v.0.len()).ok_or(Error::Empty("importance vectors"))?;
    if per_algorithm.iter().any(|v| v.0.len() != len) {
        return Err(Error::invalid("importance vectors differ in length"));
    }
    let mut out = vec![0.0; len];
    for (scores, weight) in per_algorithm {
        for (o, v) in out.iter_mut().zip(normalize_min_max(scores)) {
            *o += v * weight;
        }
    }
    Ok(out)
}

pub fn normalize_min_max(v: &[f64]) -> Vec<f64> {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0.0; v.len()];
    }
    v.iter().map(|x| (x - lo) / (hi - lo)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KruskalRow {
    pub metric: String,
    pub h: f64,
    pub p_value: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseRow {
    pub metric: String,
    pub group_a: String,
    pub group_b: String,
    pub mwu_u: f64,
    pub mwu_p: f64,
    pub mwu_significant: bool,
    pub wilcoxon_w: f64,
    pub wilcoxon_p: f64,
    pub wilcoxon_significant: bool,
    pub wilcoxon_all_zero: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Findings {
    pub kruskal: Vec<KruskalRow>,
    pub pairwise: Vec<PairwiseRow>,
}

/// One compared group (algorithm or dataset) with its per-fold metric values.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSamples {
    pub name: String,
    /// `(metric name, per-fold values)`
    pub metrics: Vec<(String, Vec<f64>)>,
}

impl GroupSamples {
    fn values(&self, metric: &str) -> Option<&Vec<f64>> {
        self.metrics.iter().find(|m| m.0 == metric).map(|m| &m.1)
    }
}

/// Kruskal-Wallis per metric; for metrics with `p < alpha`, pairwise
/// Mann-Whitney U and Wilcoxon signed-rank tests for every group pair. No
/// multiple-comparison correction is applied.
pub fn significance_workflow(groups: &[GroupSamples], metric_names: &[&str], alpha: f64) -> Findings {
    let mut findings = Findings::default();
    if groups.len() < 2 {
        return findings;
    }
    for &metric in metric_names {
        let samples: Option<Vec<Vec<f64>>> = groups.iter().map(|g| g.values(metric).cloned()).collect();
        let Some(samples) = samples else { continue };
        let Ok((h, p)) = kruskal_wallis(&samples) else { continue };
        let significant = p < alpha;
        findings.kruskal.push(KruskalRow { metric: metric.to_string(), h, p_value: p, significant });
        if !significant {
            continue;
        }
        for i in 0..groups.len() {
            for j in i + 1..groups.len() {
                let (a, b) = (&samples[i], &samples[j]);
                let Ok(mwu) = mann_whitney_u(a, b) else { continue };
                let wil = if a.len() == b.len() {
                    wilcoxon_signed_rank(a, b).ok()
                } else {
                    None
                };
                let (w, wp, all_zero) = wil.map_or((0.0, 1.0, true), |w| (w.w, w.p_value, w.all_zero));
                findings.pairwise.push(PairwiseRow {
                    metric: metric.to_string(),
                    group_a: groups[i].name.clone(),
                    group_b: groups[j].name.clone(),
                    mwu_u: mwu.u,
                    mwu_p: mwu.p_value,
                    mwu_significant: mwu.p_value < alpha,
                    wilcoxon_w: w,
                    wilcoxon_p: wp,
                    wilcoxon_significant: wp < alpha,
                    wilcoxon_all_zero: all_zero,
                });
            }
        }
    }
    findings
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kruskal_identical_groups() {
        let g = vec![vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]];
        let (h, p) = kruskal_wallis(&g).unwrap();
        assert!(h.abs() < 1e-12);
        assert!((p - 1.0).abs() < 1e-12);
        assert_eq!(kruskal_wallis(&[vec![5.0; 3], vec![5.0; 4]]).unwrap(), (0.0, 1.0));
    }

    #[test]
    fn kruskal_separated_groups() {
        let g = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0], vec![7.0, 8.0, 9.0]];
        let (h, _) = kruskal_wallis(&g).unwrap();
        assert!((h - 7.2).abs() < 1e-12);
    }

    #[test]
    fn mann_whitney_symmetry() {
        let a = [1.0, 2.0, 3.0];
        let b = [4.0, 5.0, 6.0];
        let ab = mann_whitney_u(&a, &b).unwrap();
        let ba = mann_whitney_u(&b, &a).unwrap();
        assert_eq!(ab.u, 0.0);
        assert_eq!(ba.u, 9.0 - ab.u);
        assert_eq!(ab.p_value, ba.p_value);
    }

    #[test]
    fn wilcoxon_identical_vectors_flagged() {
        let w = wilcoxon_signed_rank(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert!(w.all_zero);
        assert_eq!(w.p_value, 1.0);
    }

    #[test]
    fn composite_examples() {
        let v = vec![0.0, 2.0, 4.0];
        assert_eq!(composite_importance(&[(v.clone(), 1.0)]).unwrap(), vec![0.0, 0.5, 1.0]);
        let two = composite_importance(&[(v.clone(), 0.9), (v.clone(), 0.5)]).unwrap();
        for (a, b) in two.iter().zip([0.0, 0.5, 1.0]) {
            assert!((a - 1.4 * b).abs() < 1e-12);
        }
        let zero = composite_importance(&[(v.clone(), 0.0), (vec![3.0, 1.0, 2.0], 1.0)]).unwrap();
        assert_eq!(zero, vec![1.0, 0.0, 0.5]);
        assert_eq!(normalize_min_max(&[2.0, 2.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn gate_closed_emits_no_pairwise_tests() {
        let groups: Vec<GroupSamples> = (0..3)
            .map(|g| GroupSamples {
                name: alloc::format!("g{g}"),
                metrics: vec![("m".into(), (0..10).map(|i| f64::from((i * 7 + g * 3) % 10)).collect())],
            })
            .collect();
        let f = significance_workflow(&groups, &["m"], 0.05);
        assert_eq!(f.kruskal.len(), 1);
        assert!(f.kruskal[0].p_value > 0.05);
        assert!(f.pairwise.is_empty());
    }

    #[test]
    fn aggregate_skips_infinities() {
        let a = aggregate(&[1.0, 3.0, f64::INFINITY]);
        assert_eq!(a.mean, 2.0);
        assert_eq!(a.n_infinite, 1);
        let all = aggregate(&[f64::INFINITY; 3]);
        assert_eq!((all.mean, all.median, all.sd), (f64::INFINITY, f64::INFINITY, 0.0));
    }
}
