//! k-nearest neighbours with Euclidean distance.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::TrainData;
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub distance_weighted: bool,
    pub x: Matrix,
    pub y: Vec<u8>,
}

impl Knn {
    pub fn fit(data: TrainData<'_>, k: usize, distance_weighted: bool) -> Self {
        Knn { k, distance_weighted, x: data.x.clone(), y: data.y.to_vec() }
    }

    fn predict_row(&self, row: &[f64], dist: &mut Vec<(f64, usize)>) -> f64 {
        dist.clear();
        for r in 0..self.x.rows() {
            let d2: f64 = self.x.row(r).iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum();
            dist.push((d2, r));
        }
        let k = self.k.min(dist.len());
        dist.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let near = &dist[..k];
        if self.distance_weighted {
            if near.iter().any(|&(d, _)| d == 0.0) {
                let exact: Vec<&(f64, usize)> = near.iter().filter(|&&(d, _)| d == 0.0).collect();
                let pos = exact.iter().filter(|&&&(_, r)| self.y[r] == 1).count();
                return pos as f64 / exact.len() as f64;
            }
            let (mut num, mut den) = (0.0, 0.0);
            for &(d2, r) in near {
                let w = 1.0 / num_traits::Float::sqrt(d2);
                den += w;
                if self.y[r] == 1 {
                    num += w;
                }
            }
            num / den
        } else {
            near.iter().filter(|&&(_, r)| self.y[r] == 1).count() as f64 / k as f64
        }
    }

    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        let mut buf = Vec::with_capacity(self.x.rows());
        (0..x.rows()).map(|r| self.predict_row(x.row(r), &mut buf)).collect()
    }
}
