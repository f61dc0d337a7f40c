//! Filter feature importance (mutual information, MultiSURF, TuRF) and
//! collective feature selection.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FeatureKind};
use crate::error::{Error, Result};
use crate::math::rank_desc_then_name;
use crate::matrix::Matrix;
use crate::rng;

pub const DEFAULT_MI_BINS: usize = 10;
pub const DEFAULT_INSTANCE_CAP: usize = 2000;
pub const DEFAULT_TURF_PCT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScores {
    pub fold: usize,
    pub features: Vec<String>,
    pub mi_scores: Vec<f64>,
    pub multisurf_scores: Vec<f64>,
    pub instances_used: usize,
    pub selected_features: Vec<String>,
}

/// Level codes of a column: categorical values map to their sorted level
/// index, quantitative values to one of `bins` equal-frequency bins.
fn discretize(col: &[f64], kind: FeatureKind, bins: usize) -> Vec<usize> {
    let mut sorted = col.to_vec();
    sorted.sort_by(f64::total_cmp);
    match kind {
        FeatureKind::Categorical => {
            sorted.dedup();
            col.iter()
                .map(|v| sorted.binary_search_by(|p| p.total_cmp(v)).expect("value is a level"))
                .collect()
        }
        FeatureKind::Quantitative => {
            let n = sorted.len();
            let mut cuts: Vec<f64> = (1..bins).map(|k| sorted[k * n / bins]).collect();
            cuts.dedup();
            col.iter().map(|v| cuts.partition_point(|c| c <= v)).collect()
        }
    }
}

/// Plug-in mutual information (natural log) between discrete codes and labels.
pub fn mutual_info_codes(codes: &[usize], labels: &[u8]) -> f64 {
    let n = codes.len();
    if n == 0 {
        return 0.0;
    }
    let levels = codes.iter().copied().max().unwrap_or(0) + 1;
    let mut joint = vec![[0usize; 2]; levels];
    for (&c, &y) in codes.iter().zip(labels) {
        joint[c][y as usize] += 1;
    }
    let ny = [labels.iter().filter(|&&y| y == 0).count(), labels.iter().filter(|&&y| y == 1).count()];
    let nf = n as f64;
    let mut mi = 0.0;
    for row in &joint {
        let nx = row[0] + row[1];
        for y in 0..2 {
            if row[y] > 0 {
                let pxy = row[y] as f64 / nf;
                mi += pxy * (row[y] as f64 * nf / (nx as f64 * ny[y] as f64)).ln();
            }
        }
    }
    mi.max(0.0)
}

/// Mutual information of every feature with the class.
pub fn mutual_info(x: &Matrix, kinds: &[FeatureKind], labels: &[u8], bins: usize) -> Vec<f64> {
    (0..x.cols())
        .map(|c| {
            let col = x.column(c);
            if col.windows(2).all(|w| w[0] == w[1]) {
                return 0.0;
            }
            mutual_info_codes(&discretize(&col, kinds[c], bins), labels)
        })
        .collect()
}

/// Per-feature difference function: 0/1 mismatch for categorical features,
/// `|a - b| / range` for quantitative ones (0 when the range is 0).
struct Diff {
    categorical: Vec<bool>,
    range: Vec<f64>,
}

impl Diff {
    fn new(x: &Matrix, kinds: &[FeatureKind]) -> Self {
        let range = (0..x.cols())
            .map(|c| {
                let col = x.column(c);
                let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if col.is_empty() { 0.0 } else { hi - lo }
            })
            .collect();
        Diff { categorical: kinds.iter().map(|&k| k == FeatureKind::Categorical).collect(), range }
    }

    #[inline]
    fn feature(&self, f: usize, a: f64, b: f64) -> f64 {
        if self.categorical[f] {
            if a != b { 1.0 } else { 0.0 }
        } else if self.range[f] == 0.0 {
            0.0
        } else {
            (a - b).abs() / self.range[f]
        }
    }
}

/// MultiSURF scores. When `n > cap`, a seeded subsample of `cap` instances
/// is scored against itself.
pub fn multisurf(x: &Matrix, kinds: &[FeatureKind], labels: &[u8], cap: usize, seed: u64) -> Result<(Vec<f64>, usize)> {
    let n = x.rows();
    if n < 3 {
        return Err(Error::invalid("MultiSURF needs at least 3 instances"));
    }
    if cap < 3 {
        return Err(Error::invalid("MultiSURF instance cap must be at least 3"));
    }
    if n > cap {
        let mut rng = rng::rng_from_seed(seed);
        let mut idx = index::sample(&mut rng, n, cap).into_vec();
        idx.sort_unstable();
        let sub = x.select_rows(&idx);
        let sub_labels: Vec<u8> = idx.iter().map(|&i| labels[i]).collect();
        Ok((multisurf_all(&sub, kinds, &sub_labels), cap))
    } else {
        Ok((multisurf_all(x, kinds, labels), n))
    }
}

/// MultiSURF over every instance as a target.
///
/// For target `i`, neighbours `j` with `d(i, j) < mean_i - sd_i / 2` are
/// near; each feature's difference is added for near misses and subtracted
/// for near hits. Scores are averaged over targets.
pub fn multisurf_all(x: &Matrix, kinds: &[FeatureKind], labels: &[u8]) -> Vec<f64> {
    let n = x.rows();
    let f = x.cols();
    let diff = Diff::new(x, kinds);
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        let ri = x.row(i);
        for j in i + 1..n {
            let rj = x.row(j);
            let mut d = 0.0;
            for c in 0..f {
                d += diff.feature(c, ri[c], rj[c]);
            }
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    let mut scores = vec![0.0; f];
    let m = (n - 1) as f64;
    for i in 0..n {
        let di = &dist[i * n..(i + 1) * n];
        let mut sum = 0.0;
        for (j, &d) in di.iter().enumerate() {
            if j != i {
                sum += d;
            }
        }
        let mean = sum / m;
        let mut ss = 0.0;
        for (j, &d) in di.iter().enumerate() {
            if j != i {
                ss += (d - mean) * (d - mean);
            }
        }
        let threshold = mean - (ss / m).sqrt() / 2.0;
        let ri = x.row(i);
        for (j, &d) in di.iter().enumerate() {
            if j == i || d >= threshold {
                continue;
            }
            let rj = x.row(j);
            if labels[i] == labels[j] {
                for c in 0..f {
                    scores[c] -= diff.feature(c, ri[c], rj[c]);
                }
            } else {
                for c in 0..f {
                    scores[c] += diff.feature(c, ri[c], rj[c]);
                }
            }
        }
    }
    for s in &mut scores {
        *s /= n as f64;
    }
    scores
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurfResult {
    /// Score from the last round each feature took part in.
    pub scores: Vec<f64>,
    /// Number of scoring rounds each feature took part in.
    pub rounds: Vec<usize>,
    /// Feature indices, best first: survivors by score, then removed features
    /// by how long they survived.
    pub ranking: Vec<usize>,
}

/// TuRF: score with `relief`, drop the worst `pct` of surviving features,
/// repeat for `iterations` scoring rounds.
pub fn turf<F>(
    x: &Matrix,
    kinds: &[FeatureKind],
    labels: &[u8],
    names: &[String],
    relief: F,
    pct: f64,
    iterations: usize,
) -> Result<TurfResult>
where
    F: Fn(&Matrix, &[FeatureKind], &[u8]) -> Result<Vec<f64>>,
{
    if !(pct > 0.0 && pct < 1.0) {
        return Err(Error::invalid("TuRF removal fraction must lie in (0, 1)"));
    }
    if iterations == 0 {
        return Err(Error::invalid("TuRF needs at least one iteration"));
    }
    let f = x.cols();
    let mut scores = vec![0.0; f];
    let mut rounds = vec![0usize; f];
    let mut survivors: Vec<usize> = (0..f).collect();
    for it in 0..iterations {
        let sub_kinds: Vec<FeatureKind> = survivors.iter().map(|&c| kinds[c]).collect();
        let sub = relief(&x.select_columns(&survivors), &sub_kinds, labels)?;
        for (k, &c) in survivors.iter().enumerate() {
            scores[c] = sub[k];
            rounds[c] = it + 1;
        }
        if it + 1 == iterations || survivors.len() <= 1 {
            break;
        }
        let sub_names: Vec<&str> = survivors.iter().map(|&c| names[c].as_str()).collect();
        let order = rank_desc_then_name(&sub, &sub_names);
        let remove = ((survivors.len() as f64 * pct).floor() as usize).clamp(1, survivors.len() - 1);
        let mut keep: Vec<usize> = order[..survivors.len() - remove].iter().map(|&k| survivors[k]).collect();
        keep.sort_unstable();
        survivors = keep;
    }
    let mut ranking: Vec<usize> = (0..f).collect();
    ranking.sort_by(|&a, &b| {
        rounds[b]
            .cmp(&rounds[a])
            .then(scores[b].partial_cmp(&scores[a]).unwrap_or(core::cmp::Ordering::Equal))
            .then_with(|| names[a].cmp(&names[b]))
    });
    Ok(TurfResult { scores, rounds, ranking })
}

/// Default number of TuRF rounds: `ceil(log2(f / target))`, between 1 and 10.
pub fn default_turf_iterations(n_features: usize, target: usize) -> usize {
    let ratio = n_features as f64 / target.max(1) as f64;
    (ratio.log2().ceil().max(1.0) as usize).min(10)
}

/// Collective selection. Without a cap, every feature with a positive score
/// from either scorer is kept (input order). With a cap, features that are
/// non-positive on both are dropped and the remainder is filled by
/// alternating the best unused MI and MultiSURF features.
pub fn collective_select(names: &[String], mi: &[f64], ms: &[f64], max_features: Option<usize>) -> Result<Vec<String>> {
    if names.len() != mi.len() || names.len() != ms.len() {
        return Err(Error::invalid("score vectors must cover the same features"));
    }
    let pool: Vec<usize> = (0..names.len()).filter(|&i| mi[i] > 0.0 || ms[i] > 0.0).collect();
    let Some(max) = max_features else {
        if pool.is_empty() {
            log::warn!("no feature scored above zero; selection is empty");
        }
        return Ok(pool.iter().map(|&i| names[i].clone()).collect());
    };
    if max < 1 {
        return Err(Error::invalid("max_features must be at least 1"));
    }
    let pool_names: Vec<&str> = pool.iter().map(|&i| names[i].as_str()).collect();
    let by_mi: Vec<usize> = rank_desc_then_name(&pool.iter().map(|&i| mi[i]).collect::<Vec<_>>(), &pool_names)
        .into_iter()
        .map(|k| pool[k])
        .collect();
    let by_ms: Vec<usize> = rank_desc_then_name(&pool.iter().map(|&i| ms[i]).collect::<Vec<_>>(), &pool_names)
        .into_iter()
        .map(|k| pool[k])
        .collect();
    let target = max.min(pool.len());
    let mut taken = vec![false; names.len()];
    let mut out = Vec::with_capacity(target);
    let (mut a, mut b) = (0, 0);
    let mut use_mi = true;
    while out.len() < target {
        let (list, cursor) = if use_mi { (&by_mi, &mut a) } else { (&by_ms, &mut b) };
        while *cursor < list.len() && taken[list[*cursor]] {
            *cursor += 1;
        }
        if *cursor < list.len() {
            taken[list[*cursor]] = true;
            out.push(names[list[*cursor]].clone());
        }
        use_mi = !use_mi;
    }
    if out.is_empty() {
        log::warn!("no feature scored above zero; selection is empty");
    }
    Ok(out)
}

/// Settings for scoring and selecting features on one training fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringConfig {
    pub mi_bins: usize,
    pub instance_cap: usize,
    /// Wrap MultiSURF in TuRF.
    pub use_turf: bool,
    pub turf_pct: f64,
    /// TuRF rounds; derived from the feature count when `None`.
    pub turf_iterations: Option<usize>,
    pub max_features: Option<usize>,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            mi_bins: DEFAULT_MI_BINS,
            instance_cap: DEFAULT_INSTANCE_CAP,
            use_turf: false,
            turf_pct: DEFAULT_TURF_PCT,
            turf_iterations: None,
            max_features: None,
        }
    }
}

/// MI and MultiSURF (optionally under TuRF) on an imputed training fold,
/// followed by collective selection.
pub fn score_fold(train: &Dataset, fold: usize, config: &ScoringConfig, seed: u64) -> Result<FeatureScores> {
    let x = train.to_matrix()?;
    let y = train.labels()?;
    let kinds = train.kinds();
    let names = train.feature_names();
    let mi = mutual_info(&x, &kinds, &y, config.mi_bins);
    let used = x.rows().min(config.instance_cap);
    let ms = if config.use_turf {
        let target = names.len().div_ceil(10).max(1);
        let iterations = config.turf_iterations.unwrap_or_else(|| default_turf_iterations(names.len(), target));
        let relief = |m: &Matrix, k: &[FeatureKind], l: &[u8]| multisurf(m, k, l, config.instance_cap, seed).map(|r| r.0);
        turf(&x, &kinds, &y, &names, relief, config.turf_pct, iterations)?.scores
    } else {
        multisurf(&x, &kinds, &y, config.instance_cap, seed)?.0
    };
    let selected = collective_select(&names, &mi, &ms, config.max_features)?;
    Ok(FeatureScores {
        fold,
        features: names,
        mi_scores: mi,
        multisurf_scores: ms,
        instances_used: used,
        selected_features: selected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use FeatureKind::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn mi_identity_and_constant() {
        let y: Vec<u8> = (0..100).map(|i| (i % 2) as u8).collect();
        let rows: Vec<Vec<f64>> = y.iter().map(|&v| vec![f64::from(v), 3.0]).collect();
        let x = Matrix::from_rows(&rows);
        let mi = mutual_info(&x, &[Categorical, Quantitative], &y, 10);
        assert!((mi[0] - core::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(mi[1], 0.0);
    }

    #[test]
    fn selection_examples() {
        let n = names(&["f"]);
        assert_eq!(collective_select(&n, &[0.2], &[-0.01], None).unwrap(), n);
        assert!(collective_select(&n, &[0.0], &[-0.3], None).unwrap().is_empty());
        let n = names(&["A", "B", "C", "D"]);
        let mi = [0.9, 0.5, 0.3, 0.01];
        let ms = [0.1, -0.2, 0.8, 0.4];
        assert_eq!(collective_select(&n, &mi, &ms, Some(3)).unwrap(), names(&["A", "C", "B"]));
        assert!(collective_select(&n, &mi, &ms, Some(0)).is_err());
    }

    #[test]
    fn turf_schedule() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| (0..10).map(|c| f64::from((i * (c + 3)) % 7)).collect()).collect();
        let x = Matrix::from_rows(&rows);
        let y: Vec<u8> = (0..20).map(|i| (i % 2) as u8).collect();
        let kinds = vec![Quantitative; 10];
        let nm: Vec<String> = (0..10).map(|i| alloc::format!("f{i}")).collect();
        let relief = |m: &Matrix, k: &[FeatureKind], l: &[u8]| Ok(multisurf_all(m, k, l));
        let r = turf(&x, &kinds, &y, &nm, relief, 0.5, 2).unwrap();
        assert_eq!(r.rounds.iter().filter(|&&k| k == 2).count(), 5);
        let one = turf(&x, &kinds, &y, &nm, relief, 0.5, 1).unwrap();
        assert_eq!(one.scores, multisurf_all(&x, &kinds, &y));
        assert!(turf(&x, &kinds, &y, &nm, relief, 1.0, 2).is_err());
    }

    #[test]
    fn multisurf_constant_features_score_zero() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]]);
        let (s, used) = multisurf(&x, &[Quantitative, Categorical], &[0, 1, 0, 1], 2000, 0).unwrap();
        assert_eq!(s, vec![0.0, 0.0]);
        assert_eq!(used, 4);
        assert!(multisurf(&Matrix::zeros(2, 1), &[Quantitative], &[0, 1], 2000, 0).is_err());
    }
}
