//! Typed tabular datasets, cleaning and exploratory summaries.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;
use crate::stats;

pub const DEFAULT_TYPE_CUTOFF: usize = 10;
pub const DEFAULT_MISSING_TOKEN: &str = "NA";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Categorical,
    Quantitative,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Categorical => "categorical",
            FeatureKind::Quantitative => "quantitative",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub name: String,
    pub kind: FeatureKind,
    pub observed_unique_count: usize,
    pub observed_min: Option<f64>,
    pub observed_max: Option<f64>,
}

/// Column roles used when turning a raw text table into a [`Dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub outcome: String,
    pub missing_token: String,
    pub instance_id: Option<String>,
    pub match_group: Option<String>,
}

impl DatasetConfig {
    pub fn new(outcome: impl Into<String>) -> Self {
        DatasetConfig {
            outcome: outcome.into(),
            missing_token: DEFAULT_MISSING_TOKEN.into(),
            instance_id: None,
            match_group: None,
        }
    }
}

/// User-designated feature kinds; these win over the unique-count cutoff.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TypeOverrides {
    pub categorical: Vec<String>,
    pub quantitative: Vec<String>,
}

/// Binary-outcome tabular data with a per-cell missing mask.
///
/// Cells are `None` when missing and a finite number otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub features: Vec<FeatureMeta>,
    cells: Vec<Option<f64>>,
    pub outcome: Vec<Option<u8>>,
    pub instance_ids: Option<Vec<String>>,
    pub match_group: Option<Vec<i64>>,
}

impl Dataset {
    /// Builds a dataset from row-major cells. Feature metadata is computed
    /// with every feature marked quantitative; call [`infer_feature_types`]
    /// and [`Dataset::set_feature_kinds`] to assign kinds.
    pub fn new(
        name: impl Into<String>,
        feature_names: Vec<String>,
        cells: Vec<Option<f64>>,
        outcome: Vec<Option<u8>>,
    ) -> Result<Self> {
        let f = feature_names.len();
        if cells.len() != f * outcome.len() {
            return Err(Error::invalid("cell count does not match features x instances"));
        }
        if let Some(bad) = cells.iter().flatten().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite cell value {bad}")));
        }
        if let Some(bad) = outcome.iter().flatten().find(|&&v| v > 1) {
            return Err(Error::invalid(format!("outcome value {bad} is not 0 or 1")));
        }
        let mut seen = BTreeSet::new();
        for n in &feature_names {
            if !seen.insert(n.as_str()) {
                return Err(Error::Config(format!("duplicate feature name `{n}`")));
            }
        }
        let features = feature_names
            .into_iter()
            .map(|name| FeatureMeta {
                name,
                kind: FeatureKind::Quantitative,
                observed_unique_count: 0,
                observed_min: None,
                observed_max: None,
            })
            .collect();
        let mut d = Dataset {
            name: name.into(),
            features,
            cells,
            outcome,
            instance_ids: None,
            match_group: None,
        };
        d.refresh_observed_stats();
        Ok(d)
    }

    /// Convenience constructor for fully observed data.
    pub fn from_dense(
        name: impl Into<String>,
        feature_names: Vec<String>,
        x: &Matrix,
        y: &[u8],
        kinds: &[FeatureKind],
    ) -> Result<Self> {
        let cells = x.as_slice().iter().map(|&v| Some(v)).collect();
        let mut d = Dataset::new(name, feature_names, cells, y.iter().map(|&v| Some(v)).collect())?;
        d.set_feature_kinds(kinds);
        Ok(d)
    }

    /// Parses a header plus string rows using the column roles in `config`.
    pub fn from_text_table(
        name: impl Into<String>,
        header: &[String],
        rows: &[Vec<String>],
        config: &DatasetConfig,
    ) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for h in header {
            if !seen.insert(h.as_str()) {
                return Err(Error::Config(format!("duplicate header name `{h}`")));
            }
        }
        let find = |col: &str| header.iter().position(|h| h == col);
        let outcome_col = find(&config.outcome).ok_or_else(|| {
            Error::Config(format!("outcome column `{}` not found in header", config.outcome))
        })?;
        let id_col = match &config.instance_id {
            Some(c) => Some(find(c).ok_or_else(|| Error::Config(format!("instance ID column `{c}` not found")))?),
            None => None,
        };
        let match_col = match &config.match_group {
            Some(c) => Some(find(c).ok_or_else(|| Error::Config(format!("match column `{c}` not found")))?),
            None => None,
        };
        let feature_cols: Vec<usize> = (0..header.len())
            .filter(|&c| c != outcome_col && Some(c) != id_col && Some(c) != match_col)
            .collect();
        let is_missing = |s: &str| s.is_empty() || s == config.missing_token;
        let parse = |row: usize, col: usize, s: &str| -> Result<Option<f64>> {
            let t = s.trim();
            if is_missing(t) {
                return Ok(None);
            }
            match t.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Some(v)),
                _ => Err(Error::Parse {
                    row: row + 1,
                    column: header[col].clone(),
                    message: format!("`{t}` is neither numeric nor the missing token `{}`", config.missing_token),
                }),
            }
        };

        let mut cells = Vec::with_capacity(rows.len() * feature_cols.len());
        let mut outcome = Vec::with_capacity(rows.len());
        let mut ids = id_col.map(|_| Vec::with_capacity(rows.len()));
        let mut groups = match_col.map(|_| Vec::with_capacity(rows.len()));
        for (r, row) in rows.iter().enumerate() {
            if row.len() != header.len() {
                return Err(Error::Parse {
                    row: r + 1,
                    column: String::new(),
                    message: format!("expected {} fields, found {}", header.len(), row.len()),
                });
            }
            for &c in &feature_cols {
                cells.push(parse(r, c, &row[c])?);
            }
            let y = match parse(r, outcome_col, &row[outcome_col])? {
                None => None,
                Some(v) if v == 0.0 => Some(0),
                Some(v) if v == 1.0 => Some(1),
                Some(v) => {
                    return Err(Error::Parse {
                        row: r + 1,
                        column: header[outcome_col].clone(),
                        message: format!("outcome value {v} is not 0 or 1"),
                    })
                }
            };
            outcome.push(y);
            if let (Some(c), Some(ids)) = (id_col, ids.as_mut()) {
                ids.push(row[c].trim().to_string());
            }
            if let (Some(c), Some(groups)) = (match_col, groups.as_mut()) {
                let g = parse(r, c, &row[c])?.ok_or_else(|| Error::Parse {
                    row: r + 1,
                    column: header[c].clone(),
                    message: "match group may not be missing".into(),
                })?;
                if g.fract() != 0.0 {
                    return Err(Error::Parse {
                        row: r + 1,
                        column: header[c].clone(),
                        message: format!("match group `{g}` is not an integer"),
                    });
                }
                groups.push(g as i64);
            }
        }
        let names = feature_cols.iter().map(|&c| header[c].clone()).collect();
        let mut d = Dataset::new(name, names, cells, outcome)?;
        d.instance_ids = ids;
        d.match_group = groups;
        Ok(d)
    }

    #[inline]
    pub fn n_instances(&self) -> usize {
        self.outcome.len()
    }

    #[inline]
    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    #[inline]
    pub fn cell(&self, row: usize, col: usize) -> Option<f64> {
        self.cells[row * self.features.len() + col]
    }

    #[inline]
    pub fn set_cell(&mut self, row: usize, col: usize, v: Option<f64>) {
        let f = self.features.len();
        self.cells[row * f + col] = v;
    }

    pub fn cells(&self) -> &[Option<f64>] {
        &self.cells
    }

    pub fn column(&self, col: usize) -> Vec<Option<f64>> {
        (0..self.n_instances()).map(|r| self.cell(r, col)).collect()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn kinds(&self) -> Vec<FeatureKind> {
        self.features.iter().map(|f| f.kind).collect()
    }

    pub fn missing_cell_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_none()).count()
    }

    pub fn set_feature_kinds(&mut self, kinds: &[FeatureKind]) {
        for (m, &k) in self.features.iter_mut().zip(kinds) {
            m.kind = k;
        }
    }

    pub fn set_feature_meta(&mut self, meta: Vec<FeatureMeta>) {
        debug_assert_eq!(meta.len(), self.features.len());
        self.features = meta;
    }

    /// Recomputes unique counts and observed ranges from the cells.
    pub fn refresh_observed_stats(&mut self) {
        for c in 0..self.features.len() {
            let mut values: Vec<f64> = (0..self.n_instances()).filter_map(|r| self.cell(r, c)).collect();
            values.sort_by(f64::total_cmp);
            values.dedup();
            let meta = &mut self.features[c];
            meta.observed_unique_count = values.len();
            meta.observed_min = values.first().copied();
            meta.observed_max = values.last().copied();
        }
    }

    /// Outcome labels; fails if any outcome is missing.
    pub fn labels(&self) -> Result<Vec<u8>> {
        self.outcome
            .iter()
            .map(|y| y.ok_or_else(|| Error::invalid("dataset has missing outcome values; clean it first")))
            .collect()
    }

    /// Dense feature matrix; fails if any cell is missing.
    pub fn to_matrix(&self) -> Result<Matrix> {
        let f = self.n_features();
        let mut data = Vec::with_capacity(self.cells.len());
        for (i, c) in self.cells.iter().enumerate() {
            match c {
                Some(v) => data.push(*v),
                None => return Err(Error::MissingValues(self.features[i % f].name.clone())),
            }
        }
        Ok(Matrix::from_vec(self.n_instances(), f, data))
    }

    pub fn select_rows(&self, idx: &[usize]) -> Dataset {
        let f = self.n_features();
        let mut cells = Vec::with_capacity(idx.len() * f);
        for &r in idx {
            cells.extend_from_slice(&self.cells[r * f..(r + 1) * f]);
        }
        Dataset {
            name: self.name.clone(),
            features: self.features.clone(),
            cells,
            outcome: idx.iter().map(|&r| self.outcome[r]).collect(),
            instance_ids: self.instance_ids.as_ref().map(|v| idx.iter().map(|&r| v[r].clone()).collect()),
            match_group: self.match_group.as_ref().map(|v| idx.iter().map(|&r| v[r]).collect()),
        }
    }

    /// Keeps the named features in the given order.
    pub fn select_features(&self, names: &[String]) -> Result<Dataset> {
        let mut missing = Vec::new();
        let idx: Vec<usize> = names
            .iter()
            .filter_map(|n| {
                let i = self.feature_index(n);
                if i.is_none() {
                    missing.push(n.clone());
                }
                i
            })
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingFeatures(missing));
        }
        let f = self.n_features();
        let mut cells = Vec::with_capacity(self.n_instances() * idx.len());
        for r in 0..self.n_instances() {
            cells.extend(idx.iter().map(|&c| self.cells[r * f + c]));
        }
        Ok(Dataset {
            name: self.name.clone(),
            features: idx.iter().map(|&c| self.features[c].clone()).collect(),
            cells,
            outcome: self.outcome.clone(),
            instance_ids: self.instance_ids.clone(),
            match_group: self.match_group.clone(),
        })
    }
}

/// Assigns each feature a kind: overrides first, then the unique-count cutoff.
pub fn infer_feature_types(dataset: &Dataset, cutoff: usize, overrides: &TypeOverrides) -> Result<Vec<FeatureMeta>> {
    if cutoff < 2 {
        return Err(Error::invalid("type cutoff must be at least 2"));
    }
    let unknown: Vec<String> = overrides
        .categorical
        .iter()
        .chain(&overrides.quantitative)
        .filter(|n| dataset.feature_index(n).is_none())
        .cloned()
        .collect();
    if !unknown.is_empty() {
        return Err(Error::UnknownFeatures(unknown));
    }
    let mut d = dataset.clone();
    d.refresh_observed_stats();
    Ok(d
        .features
        .into_iter()
        .map(|mut m| {
            m.kind = if overrides.quantitative.contains(&m.name) {
                FeatureKind::Quantitative
            } else if overrides.categorical.contains(&m.name) || m.observed_unique_count <= cutoff {
                FeatureKind::Categorical
            } else {
                FeatureKind::Quantitative
            };
            if m.kind == FeatureKind::Categorical {
                m.observed_min = None;
                m.observed_max = None;
            }
            m
        })
        .collect())
}

/// Drops instances with a missing outcome and the excluded feature columns.
/// No other rows are removed.
pub fn clean(dataset: &Dataset, excluded_features: &[String]) -> Dataset {
    let keep_rows: Vec<usize> = (0..dataset.n_instances()).filter(|&r| dataset.outcome[r].is_some()).collect();
    let mut out = if keep_rows.len() == dataset.n_instances() {
        dataset.clone()
    } else {
        dataset.select_rows(&keep_rows)
    };
    for name in excluded_features {
        if out.feature_index(name).is_none() {
            log::warn!("excluded feature `{name}` not present in dataset `{}`", dataset.name);
        }
    }
    let keep: Vec<String> = out
        .feature_names()
        .into_iter()
        .filter(|n| !excluded_features.contains(n))
        .collect();
    if keep.len() != out.n_features() {
        out = out.select_features(&keep).expect("kept names come from the dataset");
    }
    if out.n_instances() == 0 {
        log::warn!("dataset `{}` is empty after cleaning", dataset.name);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnivariateResult {
    pub feature: String,
    pub statistic: f64,
    pub p_value: f64,
    pub test_name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdaSummary {
    pub feature_count: usize,
    pub instance_count: usize,
    pub missing_cell_count: usize,
    /// (class 0, class 1)
    pub class_counts: (usize, usize),
    pub feature_names: Vec<String>,
    /// Symmetric `f x f` matrix; see [`pair_correlation`].
    pub feature_correlations: Vec<Vec<f64>>,
    /// Marks entries that were undefined (constant column) and set to 0.
    pub correlation_undefined: Vec<Vec<bool>>,
    pub univariate: Vec<UnivariateResult>,
}

/// Counts, class balance, pairwise feature association and per-feature
/// univariate tests against the outcome.
pub fn eda_summary(dataset: &Dataset) -> Result<EdaSummary> {
    let labels = dataset.labels()?;
    let n1 = labels.iter().filter(|&&y| y == 1).count();
    let f = dataset.n_features();
    let columns: Vec<Vec<Option<f64>>> = (0..f).map(|c| dataset.column(c)).collect();
    let kinds = dataset.kinds();

    let mut corr = vec![vec![0.0; f]; f];
    let mut undefined = vec![vec![false; f]; f];
    for i in 0..f {
        corr[i][i] = 1.0;
        for j in i + 1..f {
            let (value, ok) = match pair_correlation(&columns[i], kinds[i], &columns[j], kinds[j]) {
                Some(v) => (v, true),
                None => (0.0, false),
            };
            corr[i][j] = value;
            corr[j][i] = value;
            undefined[i][j] = !ok;
            undefined[j][i] = !ok;
        }
    }

    let univariate = (0..f)
        .map(|c| {
            let (stat, p, test) = univariate_test(&columns[c], kinds[c], &labels);
            UnivariateResult { feature: dataset.features[c].name.clone(), statistic: stat, p_value: p, test_name: test.into() }
        })
        .collect();

    Ok(EdaSummary {
        feature_count: f,
        instance_count: dataset.n_instances(),
        missing_cell_count: dataset.missing_cell_count(),
        class_counts: (labels.len() - n1, n1),
        feature_names: dataset.feature_names(),
        feature_correlations: corr,
        correlation_undefined: undefined,
        univariate,
    })
}

fn complete_pairs(a: &[Option<f64>], b: &[Option<f64>]) -> (Vec<f64>, Vec<f64>) {
    a.iter()
        .zip(b)
        .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
        .unzip()
}

fn is_constant(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] == w[1])
}

/// Association between two columns on pairwise-complete rows: Spearman for
/// quantitative pairs, Cramér's V for categorical pairs, and a rank-biserial
/// coefficient for mixed pairs (epsilon from Kruskal-Wallis when the
/// categorical side has more than two levels). `None` when undefined.
pub fn pair_correlation(a: &[Option<f64>], ka: FeatureKind, b: &[Option<f64>], kb: FeatureKind) -> Option<f64> {
    let (x, y) = complete_pairs(a, b);
    if x.len() < 2 || is_constant(&x) || is_constant(&y) {
        return None;
    }
    use FeatureKind::*;
    match (ka, kb) {
        (Quantitative, Quantitative) => Some(spearman(&x, &y)),
        (Categorical, Categorical) => Some(cramers_v(&x, &y)),
        (Categorical, Quantitative) => Some(rank_biserial(&x, &y)),
        (Quantitative, Categorical) => Some(rank_biserial(&y, &x)),
    }
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let mx = math::mean(x);
    let my = math::mean(y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&math::average_ranks(x), &math::average_ranks(y))
}

fn levels(v: &[f64]) -> Vec<f64> {
    let mut l = v.to_vec();
    l.sort_by(f64::total_cmp);
    l.dedup();
    l
}

fn level_index(levels: &[f64], v: f64) -> usize {
    levels.binary_search_by(|p| p.total_cmp(&v)).expect("value is a level")
}

/// Chi-square statistic of a contingency table given as level codes.
fn chi_square_table(table: &[Vec<f64>]) -> (f64, usize) {
    let r = table.len();
    let c = table.first().map_or(0, Vec::len);
    let row_sums: Vec<f64> = table.iter().map(|row| row.iter().sum()).collect();
    let col_sums: Vec<f64> = (0..c).map(|j| table.iter().map(|row| row[j]).sum()).collect();
    let total: f64 = row_sums.iter().sum();
    let mut stat = 0.0;
    for i in 0..r {
        for j in 0..c {
            let e = row_sums[i] * col_sums[j] / total;
            if e > 0.0 {
                stat += (table[i][j] - e) * (table[i][j] - e) / e;
            }
        }
    }
    let nonzero_rows = row_sums.iter().filter(|&&s| s > 0.0).count();
    let nonzero_cols = col_sums.iter().filter(|&&s| s > 0.0).count();
    (stat, nonzero_rows.saturating_sub(1) * nonzero_cols.saturating_sub(1))
}

fn contingency(x: &[f64], y: &[f64]) -> Vec<Vec<f64>> {
    let lx = levels(x);
    let ly = levels(y);
    let mut t = vec![vec![0.0; ly.len()]; lx.len()];
    for (a, b) in x.iter().zip(y) {
        t[level_index(&lx, *a)][level_index(&ly, *b)] += 1.0;
    }
    t
}

pub fn cramers_v(x: &[f64], y: &[f64]) -> f64 {
    let t = contingency(x, y);
    let k = t.len().min(t[0].len());
    if k < 2 {
        return 0.0;
    }
    let (chi2, _) = chi_square_table(&t);
    (chi2 / (x.len() as f64 * (k - 1) as f64)).sqrt().clamp(0.0, 1.0)
}

/// `cat` holds the categorical codes, `q` the quantitative values.
pub fn rank_biserial(cat: &[f64], q: &[f64]) -> f64 {
    let lv = levels(cat);
    let ranks = math::average_ranks(q);
    let n = q.len() as f64;
    if lv.len() == 2 {
        let (mut s0, mut n0, mut s1, mut n1) = (0.0, 0.0, 0.0, 0.0);
        for (c, r) in cat.iter().zip(&ranks) {
            if *c == lv[0] {
                s0 += r;
                n0 += 1.0;
            } else {
                s1 += r;
                n1 += 1.0;
            }
        }
        (2.0 * (s1 / n1 - s0 / n0) / n).clamp(-1.0, 1.0)
    } else {
        let groups: Vec<Vec<f64>> = lv
            .iter()
            .map(|&l| cat.iter().zip(q).filter(|(c, _)| **c == l).map(|(_, v)| *v).collect())
            .collect();
        let (h, _) = stats::kruskal_wallis(&groups).unwrap_or((0.0, 1.0));
        (h / (n - 1.0)).clamp(0.0, 1.0).sqrt()
    }
}

/// Chi-square test of independence for categorical features, Mann-Whitney U
/// for quantitative ones.
pub fn univariate_test(col: &[Option<f64>], kind: FeatureKind, labels: &[u8]) -> (f64, f64, &'static str) {
    let pairs: Vec<(f64, u8)> = col.iter().zip(labels).filter_map(|(v, y)| Some(((*v)?, *y))).collect();
    match kind {
        FeatureKind::Categorical => {
            let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pairs.iter().map(|p| f64::from(p.1)).collect();
            if x.is_empty() {
                return (0.0, 1.0, "chi-square");
            }
            let (stat, df) = chi_square_table(&contingency(&x, &y));
            if df == 0 {
                return (0.0, 1.0, "chi-square");
            }
            (stat, math::chi_square_sf(stat, df as f64), "chi-square")
        }
        FeatureKind::Quantitative => {
            let a: Vec<f64> = pairs.iter().filter(|p| p.1 == 0).map(|p| p.0).collect();
            let b: Vec<f64> = pairs.iter().filter(|p| p.1 == 1).map(|p| p.0).collect();
            match stats::mann_whitney_u(&a, &b) {
                Ok(r) => (r.u, r.p_value, "mann-whitney-u"),
                Err(_) => (0.0, 1.0, "mann-whitney-u"),
            }
        }
    }
}

/// Map from feature name to column index.
pub fn name_index(names: &[String]) -> BTreeMap<&str, usize> {
    names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect()
}
