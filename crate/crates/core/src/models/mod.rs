//! Classifier roster behind one interface: fit, class-1 probability and
//! optional built-in feature importance.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::dataset::FeatureKind;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub mod boost;
pub mod forest;
pub mod gp;
pub mod knn;
pub mod lcs;
pub mod lr;
pub mod nb;
pub mod svm;
pub mod tree;

/// Version of the hyperparameter space table below.
pub const SPACE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    NB,
    LR,
    DT,
    RF,
    GB,
    KNN,
    SVM,
    GP,
    LCS,
}

impl Algorithm {
    pub const ALL: [Algorithm; 9] = [
        Algorithm::NB,
        Algorithm::LR,
        Algorithm::DT,
        Algorithm::RF,
        Algorithm::GB,
        Algorithm::KNN,
        Algorithm::SVM,
        Algorithm::GP,
        Algorithm::LCS,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Algorithm::NB => "NB",
            Algorithm::LR => "LR",
            Algorithm::DT => "DT",
            Algorithm::RF => "RF",
            Algorithm::GB => "GB",
            Algorithm::KNN => "KNN",
            Algorithm::SVM => "SVM",
            Algorithm::GP => "GP",
            Algorithm::LCS => "LCS",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.id().eq_ignore_ascii_case(s))
    }

    pub fn long_name(self) -> &'static str {
        match self {
            Algorithm::NB => "Naive Bayes",
            Algorithm::LR => "Logistic Regression",
            Algorithm::DT => "Decision Tree",
            Algorithm::RF => "Random Forest",
            Algorithm::GB => "Gradient Boosting",
            Algorithm::KNN => "K-Nearest Neighbors",
            Algorithm::SVM => "Support Vector Machine",
            Algorithm::GP => "Genetic Programming",
            Algorithm::LCS => "Learning Classifier System",
        }
    }

    pub fn has_builtin_importance(self) -> bool {
        matches!(self, Algorithm::LR | Algorithm::DT | Algorithm::RF | Algorithm::GB | Algorithm::LCS)
    }
}

impl core::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Cat(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            ParamValue::Int(v) => Some(v as f64),
            ParamValue::Real(v) => Some(v),
            ParamValue::Cat(_) => None,
        }
    }
}

impl core::fmt::Display for ParamValue {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Real(v) => write!(f, "{v}"),
            ParamValue::Cat(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ParamDomain {
    Int { lo: i64, hi: i64 },
    Real { lo: f64, hi: f64, log: bool },
    Cat(Vec<String>),
}

impl ParamDomain {
    pub fn contains(&self, v: &ParamValue) -> bool {
        match (self, v) {
            (ParamDomain::Int { lo, hi }, ParamValue::Int(x)) => lo <= x && x <= hi,
            (ParamDomain::Real { lo, hi, .. }, ParamValue::Real(x)) => x.is_finite() && *lo <= *x && *x <= *hi,
            (ParamDomain::Cat(levels), ParamValue::Cat(x)) => levels.iter().any(|l| l == x),
            _ => false,
        }
    }

    /// Coerces a config-file value (integers given for real domains and so on).
    pub fn coerce(&self, v: &ParamValue) -> ParamValue {
        match (self, v) {
            (ParamDomain::Real { .. }, ParamValue::Int(x)) => ParamValue::Real(*x as f64),
            (ParamDomain::Int { .. }, ParamValue::Real(x)) if num_traits::Float::fract(*x) == 0.0 => ParamValue::Int(*x as i64),
            _ => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub domain: ParamDomain,
    pub default: ParamValue,
}

pub type Hyperparameters = BTreeMap<String, ParamValue>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub algorithm: Algorithm,
    pub params: Vec<ParamSpec>,
    pub tunable: bool,
}

fn int(name: &str, lo: i64, hi: i64, default: i64) -> ParamSpec {
    ParamSpec { name: name.to_string(), domain: ParamDomain::Int { lo, hi }, default: ParamValue::Int(default) }
}

fn real(name: &str, lo: f64, hi: f64, log: bool, default: f64) -> ParamSpec {
    ParamSpec { name: name.to_string(), domain: ParamDomain::Real { lo, hi, log }, default: ParamValue::Real(default) }
}

fn cat(name: &str, levels: &[&str], default: &str) -> ParamSpec {
    ParamSpec {
        name: name.to_string(),
        domain: ParamDomain::Cat(levels.iter().map(|s| s.to_string()).collect()),
        default: ParamValue::Cat(default.to_string()),
    }
}

impl ClassifierSpec {
    /// The declared hyperparameter space of an algorithm.
    pub fn for_algorithm(algorithm: Algorithm) -> Self {
        let (params, tunable) = match algorithm {
            Algorithm::NB => (vec![], false),
            Algorithm::LR => (vec![real("lambda", 1e-5, 1e2, true, 1.0)], true),
            Algorithm::DT => (vec![int("max_depth", 1, 30, 30), int("min_samples_leaf", 1, 20, 1)], true),
            Algorithm::RF => (
                vec![
                    int("n_estimators", 10, 1000, 100),
                    int("max_depth", 1, 30, 30),
                    cat("max_features", &["sqrt", "log2", "all"], "sqrt"),
                ],
                true,
            ),
            Algorithm::GB => (
                vec![
                    int("n_estimators", 10, 500, 100),
                    real("learning_rate", 1e-3, 0.3, true, 0.1),
                    int("max_depth", 1, 8, 3),
                ],
                true,
            ),
            Algorithm::KNN => (vec![int("k", 1, 50, 5), cat("weights", &["uniform", "distance"], "uniform")], true),
            Algorithm::SVM => (
                vec![
                    cat("kernel", &["linear", "poly", "rbf"], "rbf"),
                    real("C", 1e-3, 1e3, true, 1.0),
                    real("gamma", 1e-4, 1e1, true, 0.1),
                ],
                true,
            ),
            Algorithm::GP => (
                vec![
                    int("population", 100, 1000, 500),
                    int("generations", 10, 100, 50),
                    real("crossover_rate", 0.5, 0.95, false, 0.9),
                ],
                true,
            ),
            Algorithm::LCS => (
                vec![
                    real("nu", 1.0, 10.0, false, 1.0),
                    int("population", 100, 10_000, 2000),
                    int("iterations", 1000, 2_000_000, 200_000),
                ],
                false,
            ),
        };
        ClassifierSpec { algorithm, params, tunable }
    }

    pub fn defaults(&self) -> Hyperparameters {
        self.params.iter().map(|p| (p.name.clone(), p.default.clone())).collect()
    }

    /// Fills unspecified parameters with defaults and checks every value
    /// against its domain.
    pub fn resolve(&self, given: &Hyperparameters) -> Result<Hyperparameters> {
        for name in given.keys() {
            if !self.params.iter().any(|p| &p.name == name) {
                return Err(Error::Hyperparameter {
                    name: name.clone(),
                    message: format!("not a parameter of {}", self.algorithm),
                });
            }
        }
        let mut out = Hyperparameters::new();
        for p in &self.params {
            let v = given.get(&p.name).map_or_else(|| p.default.clone(), |v| p.domain.coerce(v));
            if !p.domain.contains(&v) {
                return Err(Error::Hyperparameter { name: p.name.clone(), message: format!("{v} not in {:?}", p.domain) });
            }
            out.insert(p.name.clone(), v);
        }
        Ok(out)
    }
}

pub(crate) fn get_int(hp: &Hyperparameters, name: &str) -> i64 {
    match hp.get(name) {
        Some(ParamValue::Int(v)) => *v,
        other => panic!("resolved hyperparameter `{name}` is not an integer: {other:?}"),
    }
}

pub(crate) fn get_real(hp: &Hyperparameters, name: &str) -> f64 {
    match hp.get(name) {
        Some(ParamValue::Real(v)) => *v,
        other => panic!("resolved hyperparameter `{name}` is not real: {other:?}"),
    }
}

pub(crate) fn get_cat<'a>(hp: &'a Hyperparameters, name: &str) -> &'a str {
    match hp.get(name) {
        Some(ParamValue::Cat(v)) => v,
        other => panic!("resolved hyperparameter `{name}` is not categorical: {other:?}"),
    }
}

/// Algorithm-specific fitted state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FittedParams {
    NB(nb::NaiveBayes),
    LR(lr::Logistic),
    DT(tree::Tree),
    RF(forest::Forest),
    GB(boost::Boosted),
    KNN(knn::Knn),
    SVM(svm::Svm),
    GP(gp::Program),
    LCS(lcs::RulePopulation),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub algorithm: Algorithm,
    pub hyperparameters: Hyperparameters,
    pub params: FittedParams,
    pub feature_subset: Vec<String>,
    pub fold: usize,
    pub train_seed: u64,
}

/// Training input. Columns of `x` are named by `feature_names` and typed by
/// `kinds`; `y` holds 0/1 labels.
#[derive(Debug, Clone, Copy)]
pub struct TrainData<'a> {
    pub x: &'a Matrix,
    pub y: &'a [u8],
    pub kinds: &'a [FeatureKind],
    pub feature_names: &'a [String],
}

impl TrainData<'_> {
    fn validate(&self) -> Result<()> {
        let n = self.x.rows();
        if n == 0 {
            return Err(Error::Empty("training data"));
        }
        if self.y.len() != n || self.kinds.len() != self.x.cols() || self.feature_names.len() != self.x.cols() {
            return Err(Error::invalid("training matrix, labels, kinds and names disagree in size"));
        }
        if self.y.iter().any(|&v| v > 1) {
            return Err(Error::invalid("labels must be 0 or 1"));
        }
        let pos = self.y.iter().filter(|&&v| v == 1).count();
        if pos == 0 || pos == n {
            return Err(Error::SingleClass);
        }
        if self.x.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("training matrix contains non-finite values"));
        }
        Ok(())
    }
}

/// Fits `algorithm` with the given (partial) hyperparameters.
pub fn fit(
    algorithm: Algorithm,
    hyperparameters: &Hyperparameters,
    data: TrainData<'_>,
    fold: usize,
    seed: u64,
) -> Result<TrainedModel> {
    data.validate()?;
    let spec = ClassifierSpec::for_algorithm(algorithm);
    let hp = spec.resolve(hyperparameters)?;
    let params = match algorithm {
        Algorithm::NB => FittedParams::NB(nb::NaiveBayes::fit(data)),
        Algorithm::LR => FittedParams::LR(lr::Logistic::fit(data, get_real(&hp, "lambda"))),
        Algorithm::DT => FittedParams::DT(tree::Tree::fit_classifier(
            data,
            &tree::TreeParams {
                max_depth: get_int(&hp, "max_depth") as usize,
                min_samples_leaf: get_int(&hp, "min_samples_leaf") as f64,
                max_features: None,
            },
            seed,
        )),
        Algorithm::RF => FittedParams::RF(forest::Forest::fit(
            data,
            get_int(&hp, "n_estimators") as usize,
            get_int(&hp, "max_depth") as usize,
            forest::MaxFeatures::parse(get_cat(&hp, "max_features")).expect("domain checked"),
            seed,
        )),
        Algorithm::GB => FittedParams::GB(boost::Boosted::fit(
            data,
            get_int(&hp, "n_estimators") as usize,
            get_real(&hp, "learning_rate"),
            get_int(&hp, "max_depth") as usize,
        )),
        Algorithm::KNN => FittedParams::KNN(knn::Knn::fit(
            data,
            get_int(&hp, "k") as usize,
            get_cat(&hp, "weights") == "distance",
        )),
        Algorithm::SVM => FittedParams::SVM(svm::Svm::fit(
            data,
            svm::Kernel::parse(get_cat(&hp, "kernel"), get_real(&hp, "gamma")).expect("domain checked"),
            get_real(&hp, "C"),
            seed,
        )?),
        Algorithm::GP => FittedParams::GP(gp::Program::fit(
            data,
            &gp::GpParams {
                population: get_int(&hp, "population") as usize,
                generations: get_int(&hp, "generations") as usize,
                crossover_rate: get_real(&hp, "crossover_rate"),
            },
            seed,
        )),
        Algorithm::LCS => FittedParams::LCS(lcs::RulePopulation::fit(
            data,
            &lcs::LcsParams {
                nu: get_real(&hp, "nu"),
                population: get_int(&hp, "population") as usize,
                iterations: get_int(&hp, "iterations") as usize,
                ..lcs::LcsParams::default()
            },
            seed,
        )),
    };
    Ok(TrainedModel {
        algorithm,
        hyperparameters: hp,
        params,
        feature_subset: data.feature_names.to_vec(),
        fold,
        train_seed: seed,
    })
}

impl TrainedModel {
    /// Positions of this model's features within `available`, in model order.
    pub fn column_indices(&self, available: &[String]) -> Result<Vec<usize>> {
        let mut idx = Vec::with_capacity(self.feature_subset.len());
        let mut missing = Vec::new();
        for name in &self.feature_subset {
            match available.iter().position(|a| a == name) {
                Some(i) => idx.push(i),
                None => missing.push(name.clone()),
            }
        }
        if missing.is_empty() { Ok(idx) } else { Err(Error::MissingFeatures(missing)) }
    }

    /// Class-1 probabilities. `x` must hold exactly the model's features in
    /// stored order.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.feature_subset.len() {
            return Err(Error::invalid(format!(
                "model expects {} feature columns, got {}",
                self.feature_subset.len(),
                x.cols()
            )));
        }
        let p = match &self.params {
            FittedParams::NB(m) => m.predict_proba(x),
            FittedParams::LR(m) => m.predict_proba(x),
            FittedParams::DT(m) => m.predict_values(x),
            FittedParams::RF(m) => m.predict_proba(x),
            FittedParams::GB(m) => m.predict_proba(x),
            FittedParams::KNN(m) => m.predict_proba(x),
            FittedParams::SVM(m) => m.predict_proba(x),
            FittedParams::GP(m) => m.predict_proba(x),
            FittedParams::LCS(m) => m.predict_proba(x),
        };
        Ok(p.into_iter().map(|v| if v.is_nan() { 0.5 } else { v.clamp(0.0, 1.0) }).collect())
    }

    /// Selects the model's columns by name from a wider matrix, then predicts.
    pub fn predict_named(&self, x: &Matrix, names: &[String]) -> Result<Vec<f64>> {
        let idx = self.column_indices(names)?;
        self.predict_proba(&x.select_columns(&idx))
    }

    /// Built-in importance per model feature, or `None` when the algorithm
    /// has no built-in estimate.
    pub fn builtin_importance(&self) -> Option<Vec<f64>> {
        match &self.params {
            FittedParams::LR(m) => Some(m.weights.iter().map(|w| w.abs()).collect()),
            FittedParams::DT(m) => Some(m.importance.clone()),
            FittedParams::RF(m) => Some(m.importance.clone()),
            FittedParams::GB(m) => Some(m.importance.clone()),
            FittedParams::LCS(m) => Some(m.importance(self.feature_subset.len())),
            _ => None,
        }
    }

    /// Plain-text rendering of interpretable models (tree rules, GP expression).
    pub fn describe(&self) -> Option<String> {
        match &self.params {
            FittedParams::DT(t) => Some(t.render(&self.feature_subset)),
            FittedParams::GP(p) => Some(p.render(&self.feature_subset)),
            _ => None,
        }
    }
}

pub(crate) fn positive_fraction(y: &[u8]) -> f64 {
    y.iter().filter(|&&v| v == 1).count() as f64 / y.len() as f64
}
