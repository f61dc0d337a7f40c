//! Random forest: bootstrap-aggregated CART trees with per-split feature
//! subsampling.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::tree::{self, Binned, Gini, Tree, TreeParams};
use super::TrainData;
use crate::matrix::Matrix;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaxFeatures {
    Sqrt,
    Log2,
    All,
}

impl MaxFeatures {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sqrt" => Some(MaxFeatures::Sqrt),
            "log2" => Some(MaxFeatures::Log2),
            "all" => Some(MaxFeatures::All),
            _ => None,
        }
    }

    pub fn count(self, f: usize) -> usize {
        let v = match self {
            MaxFeatures::Sqrt => (f as f64).sqrt().floor() as usize,
            MaxFeatures::Log2 => (f as f64).log2().floor() as usize,
            MaxFeatures::All => f,
        };
        v.clamp(1, f.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
    pub importance: Vec<f64>,
}

impl Forest {
    pub fn fit(data: TrainData<'_>, n_estimators: usize, max_depth: usize, max_features: MaxFeatures, seed: u64) -> Self {
        let n = data.y.len();
        let f = data.x.cols();
        let binned = Binned::new(data.x, data.kinds);
        let params = TreeParams { max_depth, min_samples_leaf: 1.0, max_features: Some(max_features.count(f)) };
        let mut rng = rng::rng_from_seed(seed);
        let mut trees = Vec::with_capacity(n_estimators);
        let mut importance = vec![0.0; f];
        let mut w = vec![0.0; n];
        for _ in 0..n_estimators {
            w.iter_mut().for_each(|v| *v = 0.0);
            for _ in 0..n {
                w[rng.gen_range(0..n)] += 1.0;
            }
            let rows: Vec<u32> = (0..n as u32).filter(|&r| w[r as usize] > 0.0).collect();
            let tree_seed = rng.gen::<u64>();
            let obj = Gini { y: data.y, w: &w };
            let t = tree::grow(&binned, &obj, rows, &params, Some(rng::rng_from_seed(tree_seed)));
            for (a, b) in importance.iter_mut().zip(&t.importance) {
                *a += b;
            }
            trees.push(t);
        }
        let total: f64 = importance.iter().sum();
        if total > 0.0 {
            importance.iter_mut().for_each(|v| *v /= total);
        }
        Forest { trees, importance }
    }

    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        let k = self.trees.len() as f64;
        (0..x.rows())
            .map(|r| {
                let row = x.row(r);
                self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / k
            })
            .collect()
    }
}
