//! L2-regularized logistic regression fitted by damped Newton iterations.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::TrainData;
use crate::math::{sigmoid, softplus};
use crate::matrix::{cholesky_solve, Matrix};

pub const GRADIENT_TOLERANCE: f64 = 1e-6;
pub const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Logistic {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Objective `sum logloss + lambda/2 |w|^2`; the intercept is unpenalized.
fn objective(x: &Matrix, y: &[u8], w: &[f64], lambda: f64) -> f64 {
    let f = x.cols();
    let mut loss = 0.0;
    for r in 0..x.rows() {
        let z = linear(x.row(r), &w[..f], w[f]);
        loss += if y[r] == 1 { softplus(-z) } else { softplus(z) };
    }
    loss + 0.5 * lambda * w[..f].iter().map(|v| v * v).sum::<f64>()
}

fn linear(row: &[f64], w: &[f64], b: f64) -> f64 {
    row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + b
}

impl Logistic {
    pub fn fit(data: TrainData<'_>, lambda: f64) -> Self {
        let x = data.x;
        let y = data.y;
        let n = x.rows();
        let f = x.cols();
        let d = f + 1;
        let mut w = vec![0.0; d];
        let mut obj = objective(x, y, &w, lambda);
        let mut converged = false;
        let mut iterations = 0;
        for it in 0..MAX_ITERATIONS {
            iterations = it + 1;
            let mut grad = vec![0.0; d];
            let mut hess = vec![0.0; d * d];
            for r in 0..n {
                let row = x.row(r);
                let p = sigmoid(linear(row, &w[..f], w[f]));
                let g = p - f64::from(y[r]);
                let h = (p * (1.0 - p)).max(1e-12);
                for i in 0..d {
                    let xi = if i < f { row[i] } else { 1.0 };
                    grad[i] += g * xi;
                    for j in 0..=i {
                        let xj = if j < f { row[j] } else { 1.0 };
                        hess[i * d + j] += h * xi * xj;
                    }
                }
            }
            for i in 0..f {
                grad[i] += lambda * w[i];
                hess[i * d + i] += lambda;
            }
            hess[f * d + f] += 1e-10;
            for i in 0..d {
                for j in 0..i {
                    hess[j * d + i] = hess[i * d + j];
                }
            }
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm < GRADIENT_TOLERANCE {
                converged = true;
                break;
            }
            let step = match cholesky_solve(&hess, &grad, d) {
                Some(s) => s,
                None => grad.clone(),
            };
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..50 {
                let cand: Vec<f64> = w.iter().zip(&step).map(|(a, s)| a - t * s).collect();
                let c = objective(x, y, &cand, lambda);
                if c <= obj {
                    w = cand;
                    let improvement = obj - c;
                    obj = c;
                    accepted = true;
                    if improvement <= 1e-15 * obj.abs().max(1.0) {
                        converged = true;
                    }
                    break;
                }
                t *= 0.5;
            }
            if !accepted || converged {
                converged = true;
                break;
            }
        }
        if !converged {
            log::warn!("logistic regression stopped after {MAX_ITERATIONS} iterations");
        }
        let intercept = w[f];
        w.truncate(f);
        Logistic { weights: w, intercept, iterations, converged }
    }

    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows()).map(|r| sigmoid(linear(x.row(r), &self.weights, self.intercept))).collect()
    }
}
