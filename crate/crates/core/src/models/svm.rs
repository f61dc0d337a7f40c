//! Support vector machine trained by sequential minimal optimization with
//! second-order working-set selection, calibrated by Platt scaling.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::TrainData;
use crate::error::Result;
use crate::matrix::Matrix;
use crate::partition::{stratified_or_grouped, CvStrategy};

pub const SMO_TOLERANCE: f64 = 1e-3;
pub const POLY_DEGREE: i32 = 3;
pub const POLY_COEF0: f64 = 1.0;
const TAU: f64 = 1e-12;
const PLATT_FOLDS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Kernel {
    Linear,
    Poly { gamma: f64 },
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn parse(name: &str, gamma: f64) -> Option<Self> {
        match name {
            "linear" => Some(Kernel::Linear),
            "poly" => Some(Kernel::Poly { gamma }),
            "rbf" => Some(Kernel::Rbf { gamma }),
            _ => None,
        }
    }

    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(a, b),
            Kernel::Poly { gamma } => (gamma * dot(a, b) + POLY_COEF0).powi(POLY_DEGREE),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dual solution of the C-SVM problem.
#[derive(Debug, Clone)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves `min 1/2 a'Qa - e'a` s.t. `y'a = 0`, `0 <= a <= c`, where
/// `Q_ij = y_i y_j K_ij` and `kernel` is the dense row-major `n x n` matrix.
pub fn smo(kernel: &[f64], y: &[f64], c: f64, eps: f64, max_iter: usize) -> SmoSolution {
    let n = y.len();
    let q = |i: usize, j: usize| y[i] * y[j] * kernel[i * n + j];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        // Working-set selection (maximal violating pair, second order).
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            if y[t] > 0.0 {
                if alpha[t] < c && -grad[t] >= gmax {
                    gmax = -grad[t];
                    i_sel = t;
                }
            } else if alpha[t] > 0.0 && grad[t] >= gmax {
                gmax = grad[t];
                i_sel = t;
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = usize::MAX;
        let mut obj_min = f64::INFINITY;
        if i_sel != usize::MAX {
            let i = i_sel;
            let qii = q(i, i);
            for t in 0..n {
                let (in_low, gd, quad) = if y[t] > 0.0 {
                    if alpha[t] > 0.0 {
                        gmax2 = gmax2.max(grad[t]);
                        (true, gmax + grad[t], qii + q(t, t) - 2.0 * y[i] * y[t] * q(i, t))
                    } else {
                        (false, 0.0, 0.0)
                    }
                } else if alpha[t] < c {
                    gmax2 = gmax2.max(-grad[t]);
                    (true, gmax - grad[t], qii + q(t, t) + 2.0 * y[i] * y[t] * q(i, t))
                } else {
                    (false, 0.0, 0.0)
                };
                if in_low && gd > 0.0 {
                    let od = -(gd * gd) / if quad > 0.0 { quad } else { TAU };
                    if od <= obj_min {
                        obj_min = od;
                        j_sel = t;
                    }
                }
            }
        }
        if gmax + gmax2 < eps || j_sel == usize::MAX {
            converged = true;
            break;
        }
        iterations += 1;
        let (i, j) = (i_sel, j_sel);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (q(i, i) + q(j, j) + 2.0 * q(i, j)).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (q(i, i) + q(j, j) - 2.0 * q(i, j)).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    }
    // Bias from free vectors, or the midpoint of the feasible interval.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut nr_free, mut sum_free) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else {
            nr_free += 1;
            sum_free += yg;
        }
    }
    let rho = if nr_free > 0 { sum_free / nr_free as f64 } else { (ub + lb) / 2.0 };
    SmoSolution { alpha, rho, iterations, converged }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Svm {
    pub kernel: Kernel,
    pub support_vectors: Matrix,
    /// `alpha_i * y_i` per support vector.
    pub coefficients: Vec<f64>,
    pub rho: f64,
    pub platt_a: f64,
    pub platt_b: f64,
    pub converged: bool,
}

struct Decision {
    kernel: Kernel,
    sv: Matrix,
    coef: Vec<f64>,
    rho: f64,
    converged: bool,
}

impl Decision {
    fn value(&self, row: &[f64]) -> f64 {
        (0..self.sv.rows()).map(|s| self.coef[s] * self.kernel.eval(self.sv.row(s), row)).sum::<f64>() - self.rho
    }
}

fn max_iterations(n: usize) -> usize {
    (100 * n).max(100_000)
}

fn train_decision(x: &Matrix, y: &[u8], kernel: Kernel, c: f64) -> Decision {
    let n = x.rows();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval(x.row(i), x.row(j));
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    let ys: Vec<f64> = y.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect();
    let sol = smo(&k, &ys, c, SMO_TOLERANCE, max_iterations(n));
    if !sol.converged {
        log::warn!("SMO stopped at the iteration cap ({} iterations)", sol.iterations);
    }
    let idx: Vec<usize> = (0..n).filter(|&i| sol.alpha[i] > 0.0).collect();
    Decision {
        kernel,
        sv: x.select_rows(&idx),
        coef: idx.iter().map(|&i| sol.alpha[i] * ys[i]).collect(),
        rho: sol.rho,
        converged: sol.converged,
    }
}

/// Platt's sigmoid fit with the Newton method and regularized targets.
pub fn platt_fit(dec: &[f64], y: &[u8]) -> (f64, f64) {
    let prior1 = y.iter().filter(|&&v| v == 1).count() as f64;
    let prior0 = y.len() as f64 - prior1;
    let hi = (prior1 + 1.0) / (prior1 + 2.0);
    let lo = 1.0 / (prior0 + 2.0);
    let t: Vec<f64> = y.iter().map(|&v| if v == 1 { hi } else { lo }).collect();
    let fval_of = |a: f64, b: f64| -> f64 {
        dec.iter()
            .zip(&t)
            .map(|(&d, &ti)| {
                let f = d * a + b;
                if f >= 0.0 { ti * f + (-f).exp().ln_1p() } else { (ti - 1.0) * f + f.exp().ln_1p() }
            })
            .sum()
    };
    let mut a = 0.0;
    let mut b = ((prior0 + 1.0) / (prior1 + 1.0)).ln();
    let mut fval = fval_of(a, b);
    for _ in 0..100 {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (1e-12, 1e-12, 0.0, 0.0, 0.0);
        for (&d, &ti) in dec.iter().zip(&t) {
            let f = d * a + b;
            let (p, q) = if f >= 0.0 {
                let e = (-f).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = f.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += d * d * d2;
            h22 += d2;
            h21 += d * d2;
            let d1 = ti - p;
            g1 += d * d1;
            g2 += d1;
        }
        if g1.abs() < 1e-5 && g2.abs() < 1e-5 {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= 1e-10 {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = fval_of(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < 1e-10 {
            break;
        }
    }
    (a, b)
}

fn platt_prob(dec: f64, a: f64, b: f64) -> f64 {
    let f = dec * a + b;
    if f >= 0.0 {
        let e = (-f).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + f.exp())
    }
}

impl Svm {
    pub fn fit(data: TrainData<'_>, kernel: Kernel, c: f64, seed: u64) -> Result<Self> {
        let x = data.x;
        let y = data.y;
        let n = y.len();
        // Out-of-fold decision values for calibration.
        let mut dec = vec![0.0; n];
        match stratified_or_grouped(y, None, PLATT_FOLDS, CvStrategy::Stratified, seed) {
            Ok(split) => {
                for fold in &split.folds {
                    let tx = x.select_rows(&fold.train);
                    let ty: Vec<u8> = fold.train.iter().map(|&i| y[i]).collect();
                    let d = train_decision(&tx, &ty, kernel, c);
                    for &i in &fold.test {
                        dec[i] = d.value(x.row(i));
                    }
                }
            }
            Err(_) => {
                let d = train_decision(x, y, kernel, c);
                for (i, v) in dec.iter_mut().enumerate() {
                    *v = d.value(x.row(i));
                }
            }
        }
        let (platt_a, platt_b) = platt_fit(&dec, y);
        let d = train_decision(x, y, kernel, c);
        Ok(Svm {
            kernel,
            support_vectors: d.sv,
            coefficients: d.coef,
            rho: d.rho,
            platt_a,
            platt_b,
            converged: d.converged,
        })
    }

    pub fn decision_value(&self, row: &[f64]) -> f64 {
        (0..self.support_vectors.rows())
            .map(|s| self.coefficients[s] * self.kernel.eval(self.support_vectors.row(s), row))
            .sum::<f64>()
            - self.rho
    }

    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows()).map(|r| platt_prob(self.decision_value(x.row(r)), self.platt_a, self.platt_b)).collect()
    }
}
