//! Gradient boosting on the logistic loss with second-order regression trees.
//!
//! Each stage fits a depth-limited tree to the loss gradients and hessians,
//! scales its Newton leaf values by the learning rate and halves any leaf
//! step that would increase that leaf's training loss, so training log-loss
//! never increases from one stage to the next.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::tree::{self, Binned, Newton, Node, Tree, TreeParams};
use super::{positive_fraction, TrainData};
use crate::math::{sigmoid, softplus};
use crate::matrix::Matrix;

pub const LEAF_LAMBDA: f64 = 1.0;
const BACKTRACK_STEPS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boosted {
    /// Log-odds of the training positive fraction.
    pub base_score: f64,
    pub learning_rate: f64,
    /// Trees whose leaf values are already scaled by the learning rate.
    pub trees: Vec<Tree>,
    pub importance: Vec<f64>,
    /// Training log-loss (mean) after each stage, starting with the base score.
    pub train_loss: Vec<f64>,
}

fn logloss(y: u8, f: f64) -> f64 {
    if y == 1 { softplus(-f) } else { softplus(f) }
}

impl Boosted {
    pub fn fit(data: TrainData<'_>, n_estimators: usize, learning_rate: f64, max_depth: usize) -> Self {
        let y = data.y;
        let n = y.len();
        let f = data.x.cols();
        let p0 = positive_fraction(y);
        let base_score = (p0 / (1.0 - p0)).ln();
        let binned = Binned::new(data.x, data.kinds);
        let params = TreeParams { max_depth, min_samples_leaf: 1.0, max_features: None };
        let mut score = vec![base_score; n];
        let mut g = vec![0.0; n];
        let mut h = vec![0.0; n];
        let mut trees = Vec::with_capacity(n_estimators);
        let mut gains = vec![0.0; f];
        let mean_loss = |s: &[f64]| s.iter().zip(y).map(|(&v, &l)| logloss(l, v)).sum::<f64>() / n as f64;
        let mut train_loss = vec![mean_loss(&score)];
        for _ in 0..n_estimators {
            for i in 0..n {
                let p = sigmoid(score[i]);
                g[i] = p - f64::from(y[i]);
                h[i] = p * (1.0 - p);
            }
            let obj = Newton { g: &g, h: &h, lambda: LEAF_LAMBDA };
            let mut t = tree::grow(&binned, &obj, (0..n as u32).collect(), &params, None);
            // Route rows to leaves once, then backtrack each leaf independently.
            let leaf_of: Vec<usize> = (0..n).map(|r| leaf_index(&t, data.x.row(r))).collect();
            let mut members: Vec<Vec<usize>> = vec![Vec::new(); t.nodes.len()];
            for (r, &l) in leaf_of.iter().enumerate() {
                members[l].push(r);
            }
            for (id, rows) in members.iter().enumerate() {
                let Node::Leaf { value } = t.nodes[id] else { continue };
                if rows.is_empty() {
                    t.nodes[id] = Node::Leaf { value: value * learning_rate };
                    continue;
                }
                let before: f64 = rows.iter().map(|&r| logloss(y[r], score[r])).sum();
                let mut step = value * learning_rate;
                let mut ok = false;
                for _ in 0..BACKTRACK_STEPS {
                    let after: f64 = rows.iter().map(|&r| logloss(y[r], score[r] + step)).sum();
                    if after <= before {
                        ok = true;
                        break;
                    }
                    step *= 0.5;
                }
                t.nodes[id] = Node::Leaf { value: if ok { step } else { 0.0 } };
            }
            for r in 0..n {
                if let Node::Leaf { value } = t.nodes[leaf_of[r]] {
                    score[r] += value;
                }
            }
            for (a, b) in gains.iter_mut().zip(&t.importance) {
                *a += b;
            }
            train_loss.push(mean_loss(&score));
            trees.push(t);
        }
        let total: f64 = gains.iter().sum();
        let importance = if total > 0.0 { gains.iter().map(|v| v / total).collect() } else { gains };
        Boosted { base_score, learning_rate, trees, importance, train_loss }
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        self.base_score + self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>()
    }

    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows()).map(|r| sigmoid(self.decision(x.row(r)))).collect()
    }
}

fn leaf_index(t: &Tree, row: &[f64]) -> usize {
    let mut i = 0usize;
    loop {
        match &t.nodes[i] {
            Node::Leaf { .. } => return i,
            Node::Split { feature, test, left, right } => {
                let v = row[*feature as usize];
                let go_left = match test {
                    tree::SplitTest::LessEq(th) => v <= *th,
                    tree::SplitTest::Equals(th) => v == *th,
                };
                i = if go_left { *left as usize } else { *right as usize };
            }
        }
    }
}
