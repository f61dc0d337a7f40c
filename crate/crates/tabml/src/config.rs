//! Flat `key = value` run configuration with command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use tabml_core::dataset::{DatasetConfig, TypeOverrides, DEFAULT_MISSING_TOKEN, DEFAULT_TYPE_CUTOFF};
use tabml_core::eval::DEFAULT_PERMUTATION_REPEATS;
use tabml_core::featimp::ScoringConfig;
use tabml_core::hpo::{Sampler, DEFAULT_N_TRIALS};
use tabml_core::metrics::METRIC_NAMES;
use tabml_core::models::{Hyperparameters, ParamValue};
use tabml_core::partition::CvStrategy;
use tabml_core::stats::ScoreMetric;
use tabml_core::transform::ImputeMode;
use tabml_core::{Algorithm, ClassifierSpec};

use crate::error::{Error, Result};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "TABML_OUT";
pub const DEFAULT_OUT: &str = "tabml_out";
pub const DEFAULT_TOP_FEATURES: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub data_dir: PathBuf,
    pub experiment: String,
    pub out_dir: PathBuf,
    pub outcome: String,
    pub instance_id: Option<String>,
    pub match_group: Option<String>,
    pub missing_token: String,
    pub categorical: Vec<String>,
    pub quantitative: Vec<String>,
    pub type_cutoff: usize,
    pub exclude: Vec<String>,
    pub k: usize,
    pub cv_strategy: CvStrategy,
    pub impute: ImputeMode,
    pub scoring: ScoringConfig,
    pub algorithms: Vec<Algorithm>,
    pub n_trials: usize,
    pub sampler: Sampler,
    /// Metric used to rank algorithms and weight the composite importance.
    pub primary_metric: String,
    pub importance_metric: ScoreMetric,
    pub permutation_repeats: usize,
    pub alpha: f64,
    pub seed: u64,
    pub jobs: usize,
    pub top_features: usize,
    /// Hyperparameters held fixed per algorithm (`hp.<ALG>.<name> = value`).
    pub fixed: BTreeMap<Algorithm, Hyperparameters>,
}

fn unquote(s: &str) -> &str {
    let s = s.trim();
    for q in ['"', '\''] {
        if s.len() >= 2 && s.starts_with(q) && s.ends_with(q) {
            return &s[1..s.len() - 1];
        }
    }
    s
}

fn strip_comment(line: &str) -> &str {
    let mut quote = None;
    for (i, ch) in line.char_indices() {
        match (quote, ch) {
            (None, '"' | '\'') => quote = Some(ch),
            (Some(q), c) if c == q => quote = None,
            (None, '#') => return &line[..i],
            _ => {}
        }
    }
    line
}

/// Parses `key = value` lines. Blank lines, `#` comments and `[section]`
/// headers are ignored; a repeated key is an error.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim();
        if line.is_empty() || (line.starts_with('[') && line.ends_with(']') && !line.contains('=')) {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
        let key = k.trim().to_string();
        if key.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", i + 1)));
        }
        if out.iter().any(|(existing, _)| *existing == key) {
            return Err(Error::Config(format!("line {}: `{key}` given twice", i + 1)));
        }
        out.push((key, unquote(v).to_string()));
    }
    Ok(out)
}

/// Comma-separated list, optionally wrapped in brackets.
fn parse_list(v: &str) -> Vec<String> {
    let v = v.trim();
    let v = v.strip_prefix('[').and_then(|s| s.strip_suffix(']')).unwrap_or(v);
    v.split(',').map(|s| unquote(s).to_string()).filter(|s| !s.is_empty()).collect()
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::Config(format!("`{key}`: `{v}` is not a valid number")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: `{v}` is not true or false"))),
    }
}

fn optional(v: &str) -> Option<String> {
    let v = v.trim();
    (!v.is_empty() && !v.eq_ignore_ascii_case("none")).then(|| v.to_string())
}

fn param_value(v: &str) -> ParamValue {
    if let Ok(i) = v.parse::<i64>() {
        ParamValue::Int(i)
    } else if let Ok(x) = v.parse::<f64>() {
        ParamValue::Real(x)
    } else {
        ParamValue::Cat(v.to_string())
    }
}

impl PipelineConfig {
    /// Builds a configuration from file text plus overrides (applied in
    /// order, later wins). Relative `data_dir` paths resolve against `base`.
    pub fn from_text(text: &str, overrides: &[(String, String)], base: &Path) -> Result<Self> {
        let mut pairs = parse_pairs(text)?;
        for (k, v) in overrides {
            match pairs.iter_mut().find(|(key, _)| key == k) {
                Some(slot) => slot.1 = v.clone(),
                None => pairs.push((k.clone(), v.clone())),
            }
        }
        let default_out = std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT), PathBuf::from);
        let mut c = PipelineConfig {
            data_dir: PathBuf::new(),
            experiment: "experiment".into(),
            out_dir: default_out,
            outcome: "Class".into(),
            instance_id: None,
            match_group: None,
            missing_token: DEFAULT_MISSING_TOKEN.into(),
            categorical: Vec::new(),
            quantitative: Vec::new(),
            type_cutoff: DEFAULT_TYPE_CUTOFF,
            exclude: Vec::new(),
            k: 10,
            cv_strategy: CvStrategy::Stratified,
            impute: ImputeMode::Simple,
            scoring: ScoringConfig::default(),
            algorithms: Algorithm::ALL.to_vec(),
            n_trials: DEFAULT_N_TRIALS,
            sampler: Sampler::Tpe,
            primary_metric: "roc_auc".into(),
            importance_metric: ScoreMetric::BalancedAccuracy,
            permutation_repeats: DEFAULT_PERMUTATION_REPEATS,
            alpha: 0.05,
            seed: 0,
            jobs: 1,
            top_features: DEFAULT_TOP_FEATURES,
            fixed: BTreeMap::new(),
        };
        let mut seed = None;
        let mut data_dir = None;
        for (key, v) in &pairs {
            let key = key.as_str();
            if let Some(rest) = key.strip_prefix("hp.") {
                let (alg, name) = rest
                    .split_once('.')
                    .ok_or_else(|| Error::Config(format!("`{key}`: expected hp.<ALGORITHM>.<parameter>")))?;
                let alg = Algorithm::parse(alg).ok_or_else(|| Error::Config(format!("`{key}`: unknown algorithm `{alg}`")))?;
                c.fixed.entry(alg).or_default().insert(name.to_string(), param_value(v.trim()));
                continue;
            }
            match key {
                "data_dir" => data_dir = Some(PathBuf::from(v.trim())),
                "experiment" => c.experiment = v.trim().to_string(),
                "out_dir" => c.out_dir = PathBuf::from(v.trim()),
                "outcome" => c.outcome = v.trim().to_string(),
                "instance_id" => c.instance_id = optional(v),
                "match_group" => c.match_group = optional(v),
                "missing_token" => c.missing_token = v.clone(),
                "categorical" => c.categorical = parse_list(v),
                "quantitative" => c.quantitative = parse_list(v),
                "type_cutoff" => c.type_cutoff = parse_num(key, v)?,
                "exclude" => c.exclude = parse_list(v),
                "k" => c.k = parse_num(key, v)?,
                "cv_strategy" => {
                    c.cv_strategy = CvStrategy::parse(v.trim())
                        .ok_or_else(|| Error::Config(format!("`cv_strategy`: unknown strategy `{v}`")))?
                }
                "impute" => {
                    c.impute = ImputeMode::parse(v.trim())
                        .ok_or_else(|| Error::Config(format!("`impute`: unknown mode `{v}`")))?
                }
                "mi_bins" => c.scoring.mi_bins = parse_num(key, v)?,
                "instance_cap" => c.scoring.instance_cap = parse_num(key, v)?,
                "use_turf" => c.scoring.use_turf = parse_bool(key, v)?,
                "turf_pct" => c.scoring.turf_pct = parse_num(key, v)?,
                "turf_iterations" => {
                    c.scoring.turf_iterations = optional(v).map(|s| parse_num(key, &s)).transpose()?
                }
                "max_features" => c.scoring.max_features = optional(v).map(|s| parse_num(key, &s)).transpose()?,
                "algorithms" => {
                    c.algorithms = parse_list(v)
                        .iter()
                        .map(|a| Algorithm::parse(a).ok_or_else(|| Error::Config(format!("`algorithms`: unknown algorithm `{a}`"))))
                        .collect::<Result<_>>()?
                }
                "n_trials" => c.n_trials = parse_num(key, v)?,
                "sampler" => {
                    c.sampler =
                        Sampler::parse(v.trim()).ok_or_else(|| Error::Config(format!("`sampler`: unknown sampler `{v}`")))?
                }
                "primary_metric" => c.primary_metric = v.trim().to_string(),
                "importance_metric" => {
                    c.importance_metric = ScoreMetric::parse(v.trim()).ok_or_else(|| {
                        Error::Config(format!("`importance_metric`: `{v}` is not balanced_accuracy or roc_auc"))
                    })?
                }
                "permutation_repeats" => c.permutation_repeats = parse_num(key, v)?,
                "alpha" => c.alpha = parse_num(key, v)?,
                "seed" => seed = Some(parse_num(key, v)?),
                "jobs" => c.jobs = parse_num(key, v)?,
                "top_features" => c.top_features = parse_num(key, v)?,
                other => return Err(Error::Config(format!("unknown key `{other}`"))),
            }
        }
        c.seed = seed.ok_or_else(|| Error::Config("`seed` is required".into()))?;
        let data_dir = data_dir.ok_or_else(|| Error::Config("`data_dir` is required".into()))?;
        c.data_dir = if data_dir.is_relative() { base.join(data_dir) } else { data_dir };
        c.validate()?;
        Ok(c)
    }

    pub fn from_file(path: &Path, overrides: &[(String, String)]) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Ok((Self::from_text(&text, overrides, base)?, text))
    }

    fn validate(&mut self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.k < 2 {
            return bad(format!("`k` must be at least 2, got {}", self.k));
        }
        if self.type_cutoff < 2 {
            return bad("`type_cutoff` must be at least 2".into());
        }
        if self.algorithms.is_empty() {
            return bad("no algorithm is enabled".into());
        }
        self.algorithms.sort();
        self.algorithms.dedup();
        if !METRIC_NAMES.contains(&self.primary_metric.as_str()) {
            return bad(format!("`primary_metric`: `{}` is not one of {METRIC_NAMES:?}", self.primary_metric));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("`alpha` must lie in (0, 1)".into());
        }
        if self.jobs == 0 {
            return bad("`jobs` must be at least 1".into());
        }
        if self.scoring.mi_bins < 2 || self.scoring.instance_cap == 0 {
            return bad("`mi_bins` must be at least 2 and `instance_cap` at least 1".into());
        }
        if self.scoring.use_turf && !(self.scoring.turf_pct > 0.0 && self.scoring.turf_pct < 1.0) {
            return bad("`turf_pct` must lie in (0, 1)".into());
        }
        if self.scoring.max_features == Some(0) {
            return bad("`max_features` must be at least 1".into());
        }
        if self.permutation_repeats == 0 || self.top_features == 0 {
            return bad("`permutation_repeats` and `top_features` must be at least 1".into());
        }
        if self.cv_strategy == CvStrategy::Matched && self.match_group.is_none() {
            return bad("matched CV needs `match_group`".into());
        }
        let name_ok = |s: &str| !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
        if !name_ok(&self.experiment) {
            return bad(format!("`experiment`: `{}` must be a plain file name", self.experiment));
        }
        for (alg, hp) in &mut self.fixed {
            *hp = ClassifierSpec::for_algorithm(*alg)
                .resolve(hp)
                .map_err(|e| Error::Config(format!("hp.{alg}: {e}")))?
                .into_iter()
                .filter(|(k, _)| hp.contains_key(k))
                .collect();
        }
        Ok(())
    }

    pub fn dataset_config(&self) -> DatasetConfig {
        DatasetConfig {
            outcome: self.outcome.clone(),
            missing_token: self.missing_token.clone(),
            instance_id: self.instance_id.clone(),
            match_group: self.match_group.clone(),
        }
    }

    pub fn type_overrides(&self) -> TypeOverrides {
        TypeOverrides { categorical: self.categorical.clone(), quantitative: self.quantitative.clone() }
    }

    pub fn fixed_for(&self, alg: Algorithm) -> Hyperparameters {
        self.fixed.get(&alg).cloned().unwrap_or_default()
    }

    pub fn experiment_dir(&self) -> PathBuf {
        self.out_dir.join(&self.experiment)
    }

    /// Data files in `data_dir`, sorted by name.
    pub fn data_files(&self) -> Result<Vec<PathBuf>> {
        let entries = std::fs::read_dir(&self.data_dir)
            .map_err(|e| Error::Config(format!("data_dir {}: {e}", self.data_dir.display())))?;
        let mut files: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.is_file()
                    && p.extension()
                        .and_then(|e| e.to_str())
                        .is_some_and(|e| ["csv", "tsv", "txt"].contains(&e.to_ascii_lowercase().as_str()))
            })
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::Config(format!("no data files in {}", self.data_dir.display())));
        }
        let mut names: Vec<String> = files.iter().map(|p| crate::csvio::dataset_name(p)).collect();
        names.sort();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("two data files share a name stem".into()));
        }
        Ok(files)
    }
}
