//! k-fold cross-validation partitions.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CvStrategy {
    Stratified,
    Random,
    Matched,
}

impl CvStrategy {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "stratified" => Some(CvStrategy::Stratified),
            "random" => Some(CvStrategy::Random),
            "matched" => Some(CvStrategy::Matched),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvSplit {
    pub k: usize,
    pub strategy: CvStrategy,
    pub seed: u64,
    pub folds: Vec<Fold>,
}

/// Builds folds from a per-instance test-fold assignment.
fn folds_from_assignment(assign: &[usize], k: usize) -> Vec<Fold> {
    (0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..assign.len()).partition(|&i| assign[i] == f);
            Fold { train, test }
        })
        .collect()
}

pub fn make_cv(dataset: &Dataset, k: usize, strategy: CvStrategy, seed: u64) -> Result<CvSplit> {
    let labels = dataset.labels()?;
    stratified_or_grouped(&labels, dataset.match_group.as_deref(), k, strategy, seed)
}

/// Core of [`make_cv`] over bare labels and optional match groups.
pub fn stratified_or_grouped(
    labels: &[u8],
    groups: Option<&[i64]>,
    k: usize,
    strategy: CvStrategy,
    seed: u64,
) -> Result<CvSplit> {
    let n = labels.len();
    if k < 2 {
        return Err(Error::invalid("k must be at least 2"));
    }
    if k > n {
        return Err(Error::invalid(format!("k = {k} exceeds the instance count {n}")));
    }
    let mut rng = rng::rng_from_seed(seed);
    let mut assign = vec![0usize; n];
    match strategy {
        CvStrategy::Random => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            for (pos, &i) in order.iter().enumerate() {
                assign[i] = pos % k;
            }
        }
        CvStrategy::Stratified => {
            let mut order = Vec::with_capacity(n);
            for class in 0..=1u8 {
                let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
                if members.len() < k {
                    return Err(Error::ClassTooSmall { class, count: members.len(), k });
                }
                members.shuffle(&mut rng);
                order.extend(members);
            }
            for (pos, &i) in order.iter().enumerate() {
                assign[i] = pos % k;
            }
        }
        CvStrategy::Matched => {
            let groups = groups.ok_or_else(|| Error::Config("matched CV requires a match group column".into()))?;
            let mut members: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
            for (i, &g) in groups.iter().enumerate() {
                members.entry(g).or_default().push(i);
            }
            if members.len() < k {
                return Err(Error::invalid(format!("{} match groups cannot fill {k} folds", members.len())));
            }
            let limit = n.div_ceil(k) * 2;
            let mut list: Vec<(u8, Vec<usize>)> = members
                .into_iter()
                .map(|(g, idx)| {
                    if idx.len() > limit {
                        log::warn!("match group {g} has {} instances, more than {limit}", idx.len());
                    }
                    let pos = idx.iter().filter(|&&i| labels[i] == 1).count();
                    let majority = u8::from(2 * pos > idx.len());
                    (majority, idx)
                })
                .collect();
            list.shuffle(&mut rng);
            list.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.len().cmp(&a.1.len())));
            // Within each majority class, deal groups to the folds that hold the
            // fewest instances of that class so far, then fewest overall.
            let mut size = vec![0usize; k];
            let mut class_size = [vec![0usize; k], vec![0usize; k]];
            for (majority, idx) in list {
                let cs = &class_size[majority as usize];
                let fold = (0..k)
                    .min_by_key(|&f| (cs[f], size[f], f))
                    .expect("k >= 2");
                size[fold] += idx.len();
                class_size[majority as usize][fold] += idx.len();
                for i in idx {
                    assign[i] = fold;
                }
            }
            if size.contains(&0) {
                return Err(Error::invalid("matched partitioning left an empty fold"));
            }
        }
    }
    Ok(CvSplit { k, strategy, seed, folds: folds_from_assignment(&assign, k) })
}
