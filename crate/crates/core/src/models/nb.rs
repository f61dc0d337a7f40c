//! Naive Bayes: Gaussian likelihoods for quantitative features, Laplace
//! smoothed (alpha = 1) frequency tables for categorical ones.

use alloc::vec::Vec;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::TrainData;
use crate::dataset::FeatureKind;

/// Variance floor relative to the largest feature variance.
const VAR_SMOOTHING: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureModel {
    Gaussian { mean: [f64; 2], var: [f64; 2] },
    /// Unseen levels contribute nothing to the log-odds.
    Table { levels: Vec<f64>, log_prob: [Vec<f64>; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    pub log_prior: [f64; 2],
    pub features: Vec<FeatureModel>,
}

impl NaiveBayes {
    pub fn fit(data: TrainData<'_>) -> Self {
        let x = data.x;
        let y = data.y;
        let count = [y.iter().filter(|&&v| v == 0).count(), y.iter().filter(|&&v| v == 1).count()];
        let n = y.len() as f64;
        let log_prior = [(count[0] as f64 / n).ln(), (count[1] as f64 / n).ln()];
        let max_var = (0..x.cols())
            .filter(|&c| data.kinds[c] == FeatureKind::Quantitative)
            .map(|c| crate::math::variance_pop(&x.column(c)))
            .fold(0.0, f64::max);
        let eps = VAR_SMOOTHING * max_var.max(1e-12);
        let features = (0..x.cols())
            .map(|c| {
                let col = x.column(c);
                match data.kinds[c] {
                    FeatureKind::Quantitative => {
                        let mut mean = [0.0; 2];
                        let mut var = [0.0; 2];
                        for k in 0..2 {
                            let vals: Vec<f64> =
                                col.iter().zip(y).filter(|(_, &l)| l as usize == k).map(|(v, _)| *v).collect();
                            mean[k] = crate::math::mean(&vals);
                            var[k] = crate::math::variance_pop(&vals) + eps;
                        }
                        FeatureModel::Gaussian { mean, var }
                    }
                    FeatureKind::Categorical => {
                        let mut levels = col.clone();
                        levels.sort_by(f64::total_cmp);
                        levels.dedup();
                        let l = levels.len() as f64;
                        let mut log_prob = [Vec::new(), Vec::new()];
                        for k in 0..2 {
                            let mut counts = alloc::vec![0usize; levels.len()];
                            for (v, &lab) in col.iter().zip(y) {
                                if lab as usize == k {
                                    let i = levels.binary_search_by(|p| p.total_cmp(v)).expect("level");
                                    counts[i] += 1;
                                }
                            }
                            let denom = count[k] as f64 + l;
                            log_prob[k] = counts.iter().map(|&c| ((c as f64 + 1.0) / denom).ln()).collect();
                        }
                        FeatureModel::Table { levels, log_prob }
                    }
                }
            })
            .collect();
        NaiveBayes { log_prior, features }
    }

    fn log_odds(&self, row: &[f64]) -> f64 {
        let mut lo = self.log_prior[1] - self.log_prior[0];
        for (f, &v) in self.features.iter().zip(row) {
            lo += match f {
                FeatureModel::Gaussian { mean, var } => {
                    let ll = |k: usize| -0.5 * (var[k] * 2.0 * core::f64::consts::PI).ln() - (v - mean[k]).powi(2) / (2.0 * var[k]);
                    ll(1) - ll(0)
                }
                FeatureModel::Table { levels, log_prob } => {
                    match levels.binary_search_by(|p| p.total_cmp(&v)) {
                        Ok(i) => log_prob[1][i] - log_prob[0][i],
                        Err(_) => 0.0,
                    }
                }
            };
        }
        lo
    }

    pub fn predict_proba(&self, x: &crate::Matrix) -> Vec<f64> {
        (0..x.rows()).map(|r| crate::math::sigmoid(self.log_odds(x.row(r)))).collect()
    }
}
