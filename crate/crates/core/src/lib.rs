//! Algorithmic core of the `tabml` binary-classification AutoML pipeline.
//!
//! Everything in this crate is a pure function of its inputs plus an explicit
//! seed: data typing and cleaning, cross-validation partitioning, leakage-safe
//! imputation and scaling, filter feature importance (mutual information,
//! MultiSURF, TuRF), the classifier roster, hyperparameter search, the metric
//! suite, nonparametric statistics and benchmark data generators.
//!
//! The crate is `no_std` and only needs an allocator. File formats, the
//! command line and the job scheduler live in the `tabml` companion crate.
#![no_std]
#![forbid(unsafe_code)]
// `num_traits::Float` is shadowed by std's inherent float methods whenever
// std is in the dependency graph (tests, examples, the companion crate).
#![allow(unused_imports)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dataset;
pub mod error;
pub mod eval;
pub mod featimp;
pub mod hpo;
pub mod math;
pub mod matrix;
pub mod metrics;
pub mod models;
pub mod partition;
pub mod rng;
pub mod simdata;
pub mod stats;
pub mod transform;

pub use dataset::{Dataset, EdaSummary, FeatureKind, FeatureMeta};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use models::{Algorithm, ClassifierSpec, TrainedModel};
