//! Imputation and scaling fitted on a training fold and replayed verbatim on
//! any other data.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FeatureKind};
use crate::error::{Error, Result};
use crate::matrix::cholesky_solve;

pub const RECIPE_SCHEMA_VERSION: u32 = 1;
pub const RIDGE_LAMBDA: f64 = 1.0;
pub const ITERATIVE_MAX_ROUNDS: usize = 10;
pub const ITERATIVE_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImputeMode {
    Simple,
    Iterative,
}

impl ImputeMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "simple" => Some(ImputeMode::Simple),
            "iterative" => Some(ImputeMode::Iterative),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum FeatureImputer {
    /// Most frequent training value; `levels` are the training categories.
    Mode { value: f64, levels: Vec<f64> },
    Mean { value: f64 },
    /// Filled by the regression sequence, initialized with `fallback_mean`.
    Iterative { fallback_mean: f64 },
}

/// One ridge regression of `target` on every other feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionStep {
    pub target: usize,
    /// One coefficient per feature in `feature_order`; the target's own is 0.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputerRecipe {
    pub mode: ImputeMode,
    pub feature_order: Vec<String>,
    pub kinds: Vec<FeatureKind>,
    pub imputers: Vec<FeatureImputer>,
    /// Round-robin regressions in the order they were fitted.
    pub sequence: Vec<RegressionStep>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub center: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerRecipe {
    pub feature_order: Vec<String>,
    /// `None` for categorical features, which pass through unscaled.
    pub scalers: Vec<Option<Scaler>>,
}

/// Imputation plus scaling parameters learned on one training fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformRecipe {
    pub schema_version: u32,
    pub fitted_on: String,
    pub imputer: ImputerRecipe,
    pub scaler: ScalerRecipe,
}

impl TransformRecipe {
    /// Fits imputation on `train`, then scaling on the imputed training data.
    pub fn fit(train: &Dataset, mode: ImputeMode, fitted_on: impl Into<String>) -> Result<Self> {
        let imputer = fit_imputer(train, mode)?;
        let imputed = apply_imputer(&imputer, train)?;
        let scaler = fit_scaler(&imputed);
        Ok(TransformRecipe { schema_version: RECIPE_SCHEMA_VERSION, fitted_on: fitted_on.into(), imputer, scaler })
    }

    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        apply_scaler(&self.scaler, &apply_imputer(&self.imputer, data)?)
    }
}

fn observed(d: &Dataset, c: usize) -> Vec<f64> {
    (0..d.n_instances()).filter_map(|r| d.cell(r, c)).collect()
}

fn mode_of(values: &[f64]) -> (f64, Vec<f64>) {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut levels: Vec<f64> = Vec::new();
    let mut best = (0usize, 0.0);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        levels.push(sorted[i]);
        // strict `>` keeps the smallest value among equally frequent levels
        if j - i > best.0 {
            best = (j - i, sorted[i]);
        }
        i = j;
    }
    (best.1, levels)
}

pub fn fit_imputer(train: &Dataset, mode: ImputeMode) -> Result<ImputerRecipe> {
    let f = train.n_features();
    let kinds = train.kinds();
    let mut imputers = Vec::with_capacity(f);
    for c in 0..f {
        let obs = observed(train, c);
        let imp = match kinds[c] {
            FeatureKind::Categorical => {
                if obs.is_empty() {
                    log::warn!("categorical feature `{}` is entirely missing in training data; imputing 0", train.features[c].name);
                }
                let (value, levels) = mode_of(&obs);
                FeatureImputer::Mode { value, levels }
            }
            FeatureKind::Quantitative => {
                let value = if obs.is_empty() {
                    log::warn!("quantitative feature `{}` is entirely missing in training data; imputing 0", train.features[c].name);
                    0.0
                } else {
                    obs.iter().sum::<f64>() / obs.len() as f64
                };
                match mode {
                    ImputeMode::Simple => FeatureImputer::Mean { value },
                    ImputeMode::Iterative => FeatureImputer::Iterative { fallback_mean: value },
                }
            }
        };
        imputers.push(imp);
    }
    let mut recipe = ImputerRecipe {
        mode,
        feature_order: train.feature_names(),
        kinds,
        imputers,
        sequence: Vec::new(),
    };
    if mode == ImputeMode::Iterative {
        recipe.sequence = fit_iterative_sequence(train, &recipe);
    }
    Ok(recipe)
}

fn initial_fill(recipe: &ImputerRecipe, v: Option<f64>, c: usize) -> f64 {
    match (&recipe.imputers[c], v) {
        (FeatureImputer::Mode { value, levels }, Some(x)) => {
            if levels.binary_search_by(|l| l.total_cmp(&x)).is_ok() {
                x
            } else {
                *value
            }
        }
        (_, Some(x)) => x,
        (FeatureImputer::Mode { value, .. }, None) => *value,
        (FeatureImputer::Mean { value }, None) => *value,
        (FeatureImputer::Iterative { fallback_mean }, None) => *fallback_mean,
    }
}

fn ridge_fit(rows: &[usize], x: &[f64], f: usize, target: usize) -> RegressionStep {
    let preds: Vec<usize> = (0..f).filter(|&c| c != target).collect();
    let p = preds.len();
    let n = rows.len() as f64;
    let mut mean_x = vec![0.0; p];
    let mut mean_y = 0.0;
    for &r in rows {
        for (j, &c) in preds.iter().enumerate() {
            mean_x[j] += x[r * f + c];
        }
        mean_y += x[r * f + target];
    }
    mean_x.iter_mut().for_each(|m| *m /= n);
    mean_y /= n;
    let mut a = vec![0.0; p * p];
    let mut b = vec![0.0; p];
    let mut xc = vec![0.0; p];
    for &r in rows {
        for (j, &c) in preds.iter().enumerate() {
            xc[j] = x[r * f + c] - mean_x[j];
        }
        let yc = x[r * f + target] - mean_y;
        for i in 0..p {
            b[i] += xc[i] * yc;
            for j in 0..=i {
                a[i * p + j] += xc[i] * xc[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            a[j * p + i] = a[i * p + j];
        }
        a[i * p + i] += RIDGE_LAMBDA;
    }
    let beta = cholesky_solve(&a, &b, p).unwrap_or_else(|| vec![0.0; p]);
    let mut coefficients = vec![0.0; f];
    let mut intercept = mean_y;
    for (j, &c) in preds.iter().enumerate() {
        coefficients[c] = beta[j];
        intercept -= beta[j] * mean_x[j];
    }
    RegressionStep { target, coefficients, intercept }
}

fn predict_step(step: &RegressionStep, row: &[f64]) -> f64 {
    step.intercept + step.coefficients.iter().zip(row).map(|(c, v)| c * v).sum::<f64>()
}

/// Round-robin ridge imputation over the quantitative features that have
/// missing cells, fewest missing first.
fn fit_iterative_sequence(train: &Dataset, recipe: &ImputerRecipe) -> Vec<RegressionStep> {
    let n = train.n_instances();
    let f = train.n_features();
    let mut x = vec![0.0; n * f];
    let mut miss = vec![false; n * f];
    for r in 0..n {
        for c in 0..f {
            let v = train.cell(r, c);
            miss[r * f + c] = v.is_none();
            x[r * f + c] = initial_fill(recipe, v, c);
        }
    }
    let mut targets: Vec<(usize, usize)> = (0..f)
        .filter(|&c| matches!(recipe.imputers[c], FeatureImputer::Iterative { .. }))
        .map(|c| ((0..n).filter(|&r| miss[r * f + c]).count(), c))
        .filter(|&(m, _)| m > 0 && m < n)
        .collect();
    targets.sort();
    let mut sequence = Vec::new();
    if targets.is_empty() || f < 2 {
        return sequence;
    }
    for _ in 0..ITERATIVE_MAX_ROUNDS {
        let mut max_change: f64 = 0.0;
        for &(_, c) in &targets {
            let rows: Vec<usize> = (0..n).filter(|&r| !miss[r * f + c]).collect();
            let step = ridge_fit(&rows, &x, f, c);
            for r in (0..n).filter(|&r| miss[r * f + c]) {
                let v = predict_step(&step, &x[r * f..(r + 1) * f]);
                max_change = max_change.max((v - x[r * f + c]).abs());
                x[r * f + c] = v;
            }
            sequence.push(step);
        }
        if max_change < ITERATIVE_TOLERANCE {
            break;
        }
    }
    sequence
}

fn check_features(expected: &[String], data: &Dataset) -> Result<Vec<usize>> {
    let missing: Vec<String> = expected.iter().filter(|n| data.feature_index(n).is_none()).cloned().collect();
    if !missing.is_empty() {
        return Err(Error::MissingFeatures(missing));
    }
    let extra: Vec<String> = data.feature_names().into_iter().filter(|n| !expected.contains(n)).collect();
    if !extra.is_empty() {
        return Err(Error::UnknownFeatures(extra));
    }
    Ok(expected.iter().map(|n| data.feature_index(n).expect("checked")).collect())
}

/// Fills every missing cell using only values stored in `recipe`. Unknown
/// categorical levels are treated as missing. Output columns follow the
/// recipe's feature order.
pub fn apply_imputer(recipe: &ImputerRecipe, data: &Dataset) -> Result<Dataset> {
    let cols = check_features(&recipe.feature_order, data)?;
    let mut out = data.select_features(&recipe.feature_order)?;
    let n = out.n_instances();
    let f = cols.len();
    let mut unknown_levels = 0usize;
    let mut row = vec![0.0; f];
    let mut miss = vec![false; f];
    for r in 0..n {
        for c in 0..f {
            let v = out.cell(r, c);
            let filled = initial_fill(recipe, v, c);
            if let (Some(x), FeatureImputer::Mode { .. }) = (v, &recipe.imputers[c]) {
                if x != filled {
                    unknown_levels += 1;
                }
            }
            miss[c] = v.is_none();
            row[c] = filled;
        }
        if miss.iter().any(|&m| m) {
            for step in &recipe.sequence {
                if miss[step.target] {
                    row[step.target] = predict_step(step, &row);
                }
            }
        }
        for c in 0..f {
            out.set_cell(r, c, Some(row[c]));
        }
    }
    if unknown_levels > 0 {
        log::warn!("{unknown_levels} cell(s) held categorical levels unseen in training; imputed with the mode");
    }
    Ok(out)
}

/// Standardizes quantitative features with the training mean and population
/// standard deviation; constant features get scale 1.
pub fn fit_scaler(train: &Dataset) -> ScalerRecipe {
    let scalers = (0..train.n_features())
        .map(|c| match train.features[c].kind {
            FeatureKind::Categorical => None,
            FeatureKind::Quantitative => {
                let obs = observed(train, c);
                if obs.is_empty() {
                    return Some(Scaler { center: 0.0, scale: 1.0 });
                }
                let n = obs.len() as f64;
                let center = obs.iter().sum::<f64>() / n;
                let var = obs.iter().map(|v| (v - center) * (v - center)).sum::<f64>() / n;
                let sd = var.sqrt();
                Some(Scaler { center, scale: if sd > 0.0 { sd } else { 1.0 } })
            }
        })
        .collect();
    ScalerRecipe { feature_order: train.feature_names(), scalers }
}

pub fn apply_scaler(recipe: &ScalerRecipe, data: &Dataset) -> Result<Dataset> {
    check_features(&recipe.feature_order, data)?;
    let mut out = data.select_features(&recipe.feature_order)?;
    for (c, s) in recipe.scalers.iter().enumerate() {
        let Some(s) = s else { continue };
        for r in 0..out.n_instances() {
            if let Some(v) = out.cell(r, c) {
                out.set_cell(r, c, Some((v - s.center) / s.scale));
            }
        }
    }
    out.refresh_observed_stats();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn ds(cols: &[(&str, FeatureKind, Vec<Option<f64>>)]) -> Dataset {
        let n = cols[0].2.len();
        let mut cells = Vec::new();
        for r in 0..n {
            for c in cols {
                cells.push(c.2[r]);
            }
        }
        let mut d = Dataset::new(
            "t",
            cols.iter().map(|c| c.0.to_string()).collect(),
            cells,
            (0..n).map(|i| Some((i % 2) as u8)).collect(),
        )
        .unwrap();
        d.set_feature_kinds(&cols.iter().map(|c| c.1).collect::<Vec<_>>());
        d
    }

    use FeatureKind::*;

    #[test]
    fn simple_mean_and_mode() {
        let d = ds(&[
            ("q", Quantitative, vec![Some(1.0), Some(2.0), Some(3.0), None]),
            ("c", Categorical, vec![Some(0.0), Some(0.0), Some(1.0), None]),
        ]);
        let r = fit_imputer(&d, ImputeMode::Simple).unwrap();
        assert_eq!(r.imputers[0], FeatureImputer::Mean { value: 2.0 });
        assert!(matches!(r.imputers[1], FeatureImputer::Mode { value, .. } if value == 0.0));
        let out = apply_imputer(&r, &d).unwrap();
        assert_eq!(out.cell(3, 0), Some(2.0));
        assert_eq!(out.cell(3, 1), Some(0.0));
        assert_eq!(out.missing_cell_count(), 0);
    }

    #[test]
    fn complete_data_is_unchanged() {
        let d = ds(&[("q", Quantitative, vec![Some(1.0), Some(5.0)])]);
        let r = fit_imputer(&d, ImputeMode::Iterative).unwrap();
        assert_eq!(apply_imputer(&r, &d).unwrap(), d);
    }

    #[test]
    fn feature_set_mismatch_errors() {
        let d = ds(&[("q", Quantitative, vec![Some(1.0), Some(5.0)])]);
        let r = fit_imputer(&d, ImputeMode::Simple).unwrap();
        let extra = ds(&[("q", Quantitative, vec![Some(1.0)]), ("z", Quantitative, vec![Some(1.0)])]);
        assert!(matches!(apply_imputer(&r, &extra), Err(Error::UnknownFeatures(_))));
        let other = ds(&[("w", Quantitative, vec![Some(1.0)])]);
        assert!(matches!(apply_imputer(&r, &other), Err(Error::MissingFeatures(_))));
    }

    #[test]
    fn iterative_recovers_linear_relation() {
        // y = 2x on x = 0..=2000, one y cell missing at x = 1000.
        let xs: Vec<Option<f64>> = (0..=2000).map(|i| Some(f64::from(i))).collect();
        let mut ys: Vec<Option<f64>> = (0..=2000).map(|i| Some(2.0 * f64::from(i))).collect();
        ys[1000] = None;
        let d = ds(&[("x", Quantitative, xs), ("y", Quantitative, ys)]);
        let r = fit_imputer(&d, ImputeMode::Iterative).unwrap();
        let out = apply_imputer(&r, &d).unwrap();
        assert!((out.cell(1000, 1).unwrap() - 2000.0).abs() < 1e-6);
    }

    #[test]
    fn unseen_category_uses_mode() {
        let d = ds(&[("c", Categorical, vec![Some(1.0), Some(1.0), Some(2.0)])]);
        let r = fit_imputer(&d, ImputeMode::Simple).unwrap();
        let test = ds(&[("c", Categorical, vec![Some(7.0)])]);
        assert_eq!(apply_imputer(&r, &test).unwrap().cell(0, 0), Some(1.0));
    }

    #[test]
    fn scaler_examples() {
        let train = ds(&[
            ("q", Quantitative, vec![Some(3.0), Some(7.0), Some(3.0), Some(7.0)]),
            ("k", Quantitative, vec![Some(4.0); 4]),
            ("c", Categorical, vec![Some(0.0), Some(5.0), Some(5.0), Some(0.0)]),
        ]);
        let s = fit_scaler(&train);
        assert_eq!(s.scalers[0], Some(Scaler { center: 5.0, scale: 2.0 }));
        assert_eq!(s.scalers[2], None);
        let test = ds(&[
            ("q", Quantitative, vec![Some(7.0)]),
            ("k", Quantitative, vec![Some(4.0)]),
            ("c", Categorical, vec![Some(5.0)]),
        ]);
        let out = apply_scaler(&s, &test).unwrap();
        assert_eq!(out.cell(0, 0), Some(1.0));
        assert_eq!(out.cell(0, 1), Some(0.0));
        assert_eq!(out.cell(0, 2), Some(5.0));
        let tr = apply_scaler(&s, &train).unwrap();
        let col: Vec<f64> = (0..4).map(|r| tr.cell(r, 0).unwrap()).collect();
        let m = col.iter().sum::<f64>() / 4.0;
        let sd = (col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / 4.0).sqrt();
        assert!(m.abs() < 1e-9 && (sd - 1.0).abs() < 1e-9);
    }
}
