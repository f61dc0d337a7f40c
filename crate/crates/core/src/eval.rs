//! Per-model evaluation records.

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::matrix::Matrix;
use crate::metrics::{self, Curve, MetricSet};
use crate::models::{Algorithm, TrainedModel};
use crate::stats::{permutation_importance, ScoreMetric};

pub const DEFAULT_PERMUTATION_REPEATS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub dataset: String,
    pub algorithm: Algorithm,
    pub fold: usize,
    pub metrics: MetricSet,
    pub roc: Curve,
    pub prc: Curve,
    pub probabilities: Vec<f64>,
    /// Permutation importance over the full feature list (0 for features the
    /// model does not use).
    pub permutation_importance: Vec<f64>,
}

/// Scores a trained model on a held-out matrix whose columns are named by
/// `feature_names`.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_model(
    dataset: &str,
    model: &TrainedModel,
    x: &Matrix,
    feature_names: &[String],
    y: &[u8],
    importance_metric: ScoreMetric,
    n_repeats: usize,
    seed: u64,
) -> Result<EvalRecord> {
    let probabilities = model.predict_named(x, feature_names)?;
    let metrics = metrics::evaluate(&probabilities, y)?;
    let roc = metrics::roc_curve(&probabilities, y)?;
    let prc = metrics::prc_curve(&probabilities, y)?;
    let permutation_importance = permutation_importance(model, x, feature_names, y, importance_metric, n_repeats, seed)?;
    Ok(EvalRecord {
        dataset: dataset.into(),
        algorithm: model.algorithm,
        fold: model.fold,
        metrics,
        roc,
        prc,
        probabilities,
        permutation_importance,
    })
}
