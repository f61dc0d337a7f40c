//! Hyperparameter search per (algorithm, training fold): a tree-structured
//! Parzen estimator with a random-search fallback, scored by nested
//! stratified cross-validation.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::balanced_accuracy;
use crate::models::{self, Algorithm, ClassifierSpec, Hyperparameters, ParamDomain, ParamValue, TrainData};
use crate::partition::{stratified_or_grouped, CvStrategy, Fold};
use crate::rng::{self, Rng, SeedPart};

pub const DEFAULT_N_TRIALS: usize = 200;
pub const NESTED_FOLDS: usize = 3;
pub const GAMMA: f64 = 0.25;
pub const N_CANDIDATES: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sampler {
    Tpe,
    Random,
}

impl Sampler {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tpe" => Some(Sampler::Tpe),
            "random" => Some(Sampler::Random),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub configuration: Hyperparameters,
    /// Mean of `nested_fold_scores`.
    pub objective: f64,
    pub nested_fold_scores: Vec<f64>,
    /// Set when a nested training fold held a single class (scored 0).
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub algorithm: Algorithm,
    pub best_configuration: Hyperparameters,
    pub best_index: usize,
    pub trials: Vec<Trial>,
    pub n_trials_requested: usize,
    pub n_trials_completed: usize,
    pub sampler: Sampler,
    pub seed: u64,
}

/// Number of initial random trials before the density model takes over.
pub fn n_startup(n_trials: usize) -> usize {
    10.max(n_trials.div_ceil(5))
}

/// Value in the sampler's internal coordinates (log scale where declared,
/// integers widened by half a step on each side).
fn internal_bounds(domain: &ParamDomain) -> Option<(f64, f64)> {
    match *domain {
        ParamDomain::Int { lo, hi } => Some((lo as f64 - 0.5, hi as f64 + 0.5)),
        ParamDomain::Real { lo, hi, log } => Some(if log { (lo.ln(), hi.ln()) } else { (lo, hi) }),
        ParamDomain::Cat(_) => None,
    }
}

fn to_internal(domain: &ParamDomain, v: &ParamValue) -> f64 {
    match (domain, v) {
        (ParamDomain::Real { log: true, .. }, ParamValue::Real(x)) => x.ln(),
        _ => v.as_f64().unwrap_or(0.0),
    }
}

fn from_internal(domain: &ParamDomain, u: f64) -> ParamValue {
    match *domain {
        ParamDomain::Int { lo, hi } => ParamValue::Int((u.round() as i64).clamp(lo, hi)),
        ParamDomain::Real { lo, hi, log } => ParamValue::Real((if log { u.exp() } else { u }).clamp(lo, hi)),
        ParamDomain::Cat(_) => unreachable!("categorical handled separately"),
    }
}

fn sample_uniform(rng: &mut Rng, domain: &ParamDomain) -> ParamValue {
    match domain {
        ParamDomain::Cat(levels) => ParamValue::Cat(levels[rng.gen_range(0..levels.len())].clone()),
        _ => {
            let (lo, hi) = internal_bounds(domain).expect("numeric");
            from_internal(domain, rng.gen_range(lo..hi))
        }
    }
}

/// One-dimensional Parzen mixture over `[lo, hi]` with a uniform prior
/// component.
struct Parzen {
    centers: Vec<f64>,
    sigma: f64,
    lo: f64,
    hi: f64,
}

impl Parzen {
    fn new(obs: &[f64], lo: f64, hi: f64) -> Self {
        let m = obs.len();
        let span = hi - lo;
        let sd = if m > 1 { crate::math::sd_sample(obs) } else { 0.0 };
        let silverman = 1.06 * sd * (m.max(1) as f64).powf(-0.2);
        let floor = span / (1.0 + m as f64).min(100.0);
        Parzen { centers: obs.to_vec(), sigma: silverman.clamp(floor, span), lo, hi }
    }

    fn pdf(&self, u: f64) -> f64 {
        let k = self.centers.len() as f64 + 1.0;
        let norm = 1.0 / (self.sigma * (2.0 * core::f64::consts::PI).sqrt());
        let mix: f64 = self.centers.iter().map(|c| norm * (-0.5 * ((u - c) / self.sigma).powi(2)).exp()).sum();
        (mix + 1.0 / (self.hi - self.lo)) / k
    }

    fn sample(&self, rng: &mut Rng) -> f64 {
        let k = rng.gen_range(0..=self.centers.len());
        if k == self.centers.len() {
            return rng.gen_range(self.lo..self.hi);
        }
        let c = self.centers[k];
        for _ in 0..100 {
            let z: f64 = rng.sample(StandardNormal);
            let u = c + self.sigma * z;
            if u >= self.lo && u <= self.hi {
                return u;
            }
        }
        c.clamp(self.lo, self.hi)
    }
}

/// Additively smoothed level frequencies.
fn cat_weights(levels: &[String], obs: &[&ParamValue]) -> Vec<f64> {
    levels
        .iter()
        .map(|l| 1.0 + obs.iter().filter(|v| matches!(v, ParamValue::Cat(s) if s == l)).count() as f64)
        .collect()
}

fn tpe_suggest(spec: &ClassifierSpec, trials: &[Trial], rng: &mut Rng) -> Hyperparameters {
    let mut ranked: Vec<&Trial> = trials.iter().collect();
    ranked.sort_by(|a, b| b.objective.total_cmp(&a.objective).then(a.index.cmp(&b.index)));
    let n_good = ((GAMMA * ranked.len() as f64).ceil() as usize).clamp(1, ranked.len().saturating_sub(1).max(1));
    let (good, bad) = ranked.split_at(n_good);
    let mut candidates: Vec<Hyperparameters> = vec![Hyperparameters::new(); N_CANDIDATES];
    let mut scores = vec![0.0; N_CANDIDATES];
    for p in &spec.params {
        let gv: Vec<&ParamValue> = good.iter().map(|t| &t.configuration[&p.name]).collect();
        let bv: Vec<&ParamValue> = bad.iter().map(|t| &t.configuration[&p.name]).collect();
        match &p.domain {
            ParamDomain::Cat(levels) => {
                let wg = cat_weights(levels, &gv);
                let wb = cat_weights(levels, &bv);
                let (sg, sb): (f64, f64) = (wg.iter().sum(), wb.iter().sum());
                for (cand, score) in candidates.iter_mut().zip(scores.iter_mut()) {
                    let mut u = rng.gen::<f64>() * sg;
                    let mut pick = levels.len() - 1;
                    for (k, w) in wg.iter().enumerate() {
                        u -= w;
                        if u < 0.0 {
                            pick = k;
                            break;
                        }
                    }
                    *score += (wg[pick] / sg).ln() - (wb[pick] / sb).ln();
                    cand.insert(p.name.clone(), ParamValue::Cat(levels[pick].clone()));
                }
            }
            domain => {
                let (lo, hi) = internal_bounds(domain).expect("numeric");
                let gi: Vec<f64> = gv.iter().map(|v| to_internal(domain, v)).collect();
                let bi: Vec<f64> = bv.iter().map(|v| to_internal(domain, v)).collect();
                let l = Parzen::new(&gi, lo, hi);
                let g = Parzen::new(&bi, lo, hi);
                for (cand, score) in candidates.iter_mut().zip(scores.iter_mut()) {
                    let u = l.sample(rng);
                    let v = from_internal(domain, u);
                    let ui = to_internal(domain, &v);
                    *score += l.pdf(ui).ln() - g.pdf(ui).ln();
                    cand.insert(p.name.clone(), v);
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..N_CANDIDATES {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    candidates.swap_remove(best)
}

/// Runs a sweep against an arbitrary objective returning
/// `(fold scores, degenerate)`. The objective is the mean fold score.
pub fn optimize_with<F>(
    spec: &ClassifierSpec,
    n_trials: usize,
    sampler: Sampler,
    seed: u64,
    mut objective: F,
) -> Result<SweepResult>
where
    F: FnMut(usize, &Hyperparameters) -> Result<(Vec<f64>, bool)>,
{
    if n_trials == 0 {
        return Err(Error::invalid("n_trials must be at least 1"));
    }
    let mut rng = rng::derived_rng(seed, &[SeedPart::Str("sampler")]);
    let startup = n_startup(n_trials);
    let mut trials: Vec<Trial> = Vec::with_capacity(n_trials);
    for index in 0..n_trials {
        let configuration = if sampler == Sampler::Random || index < startup || spec.params.is_empty() {
            spec.params.iter().map(|p| (p.name.clone(), sample_uniform(&mut rng, &p.domain))).collect()
        } else {
            tpe_suggest(spec, &trials, &mut rng)
        };
        let configuration = spec.resolve(&configuration)?;
        let (scores, degenerate) = objective(index, &configuration)?;
        let objective = if scores.is_empty() { 0.0 } else { scores.iter().sum::<f64>() / scores.len() as f64 };
        trials.push(Trial { index, configuration, objective, nested_fold_scores: scores, degenerate });
    }
    let mut best = 0;
    for t in &trials {
        if t.objective > trials[best].objective {
            best = t.index;
        }
    }
    Ok(SweepResult {
        algorithm: spec.algorithm,
        best_configuration: trials[best].configuration.clone(),
        best_index: best,
        n_trials_completed: trials.len(),
        trials,
        n_trials_requested: n_trials,
        sampler,
        seed,
    })
}

/// Fixed stratified folds of the training data used by every trial.
pub fn nested_folds(y: &[u8], seed: u64) -> Option<Vec<Fold>> {
    stratified_or_grouped(y, None, NESTED_FOLDS, CvStrategy::Stratified, rng::derive_seed(seed, &[SeedPart::Str("nested")]))
        .ok()
        .map(|s| s.folds)
}

/// Mean nested-CV balanced accuracy of one configuration.
pub fn nested_cv_score(
    algorithm: Algorithm,
    hp: &Hyperparameters,
    data: TrainData<'_>,
    folds: Option<&[Fold]>,
    seed: u64,
) -> Result<(Vec<f64>, bool)> {
    let Some(folds) = folds else {
        return Ok((vec![0.0; NESTED_FOLDS], true));
    };
    let mut scores = Vec::with_capacity(folds.len());
    let mut degenerate = false;
    for (k, fold) in folds.iter().enumerate() {
        let tx = data.x.select_rows(&fold.train);
        let ty: Vec<u8> = fold.train.iter().map(|&i| data.y[i]).collect();
        let vx = data.x.select_rows(&fold.test);
        let vy: Vec<u8> = fold.test.iter().map(|&i| data.y[i]).collect();
        let sub = TrainData { x: &tx, y: &ty, kinds: data.kinds, feature_names: data.feature_names };
        let fit_seed = rng::derive_seed(seed, &[SeedPart::Str("nested-fit"), SeedPart::from(k)]);
        match models::fit(algorithm, hp, sub, 0, fit_seed) {
            Ok(m) => scores.push(balanced_accuracy(&m.predict_proba(&vx)?, &vy)?),
            Err(Error::SingleClass) => {
                degenerate = true;
                scores.push(0.0);
            }
            Err(e) => return Err(e),
        }
    }
    if degenerate {
        scores.iter_mut().for_each(|s| *s = 0.0);
    }
    Ok((scores, degenerate))
}

/// Hyperparameter sweep for `algorithm` on one training fold. Returns
/// `None` for algorithms that are not tuned (defaults are used instead).
pub fn optimize(
    algorithm: Algorithm,
    data: TrainData<'_>,
    n_trials: usize,
    sampler: Sampler,
    seed: u64,
) -> Result<Option<SweepResult>> {
    optimize_fixed(algorithm, &Hyperparameters::new(), data, n_trials, sampler, seed)
}

/// Like [`optimize`], with the parameters in `fixed` held at their given
/// values and left out of the search. Trial configurations list only the
/// searched parameters. Returns `None` when nothing is left to search.
pub fn optimize_fixed(
    algorithm: Algorithm,
    fixed: &Hyperparameters,
    data: TrainData<'_>,
    n_trials: usize,
    sampler: Sampler,
    seed: u64,
) -> Result<Option<SweepResult>> {
    let full = ClassifierSpec::for_algorithm(algorithm);
    full.resolve(fixed)?;
    if !full.tunable {
        return Ok(None);
    }
    let mut spec = full.clone();
    spec.params.retain(|p| !fixed.contains_key(&p.name));
    if spec.params.is_empty() {
        return Ok(None);
    }
    let folds = nested_folds(data.y, seed);
    if folds.is_none() {
        log::warn!("{}: nested folds could not be stratified; every trial scores 0", algorithm);
    }
    optimize_with(&spec, n_trials, sampler, seed, |_, hp| {
        let mut all = fixed.clone();
        all.extend(hp.iter().map(|(k, v)| (k.clone(), v.clone())));
        nested_cv_score(algorithm, &full.resolve(&all)?, data, folds.as_deref(), seed)
    })
    .map(Some)
}

/// Flat `name=value;...` rendering used in logs and CSVs.
pub fn format_configuration(hp: &Hyperparameters) -> String {
    let parts: Vec<String> = hp.iter().map(|(k, v)| format!("{k}={v}")).collect();
    parts.join(";")
}
