//! Phase plan, parallel job execution, resume and the run manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tabml_core::{Algorithm, ClassifierSpec};

use crate::artifacts::{read_json, sha256_file, sha256_hex, write_atomic, write_json};
use crate::config::PipelineConfig;
use crate::csvio::{dataset_name, fmt_num, Table};
use crate::error::{Error, Result};
use crate::layout::{Layout, APPLY, EVALUATION, JOBS};
use crate::phases::{self, Ctx, Selection};
use crate::report::{self, Doc};

pub const PHASE_NAMES: [&str; 11] = [
    "exploratory analysis and cleaning",
    "cross-validation partition",
    "imputation and scaling",
    "feature importance",
    "feature selection",
    "model training and tuning",
    "model evaluation",
    "aggregation and statistics",
    "figures",
    "cross-dataset comparison",
    "report",
];

pub const ARTIFACT_VERSION: u32 = 1;

/// Pseudo-input in job records standing for the job's configuration values.
pub const SETTINGS_KEY: &str = "<settings>";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Job {
    pub phase: usize,
    pub dataset: Option<String>,
    pub fold: Option<usize>,
    pub algorithm: Option<Algorithm>,
}

impl Job {
    fn new(phase: usize, dataset: Option<&str>, fold: Option<usize>, algorithm: Option<Algorithm>) -> Self {
        Job { phase, dataset: dataset.map(str::to_string), fold, algorithm }
    }

    pub fn id(&self) -> String {
        let mut s = format!("p{:02}", self.phase);
        if let Some(d) = &self.dataset {
            s.push('_');
            s.push_str(d);
        }
        if let Some(k) = self.fold {
            s.push_str(&format!("_fold{k}"));
        }
        if let Some(a) = self.algorithm {
            s.push_str(&format!("_{a}"));
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct Plan {
    pub datasets: Vec<(String, PathBuf)>,
    /// `phases[p - 1]` holds the jobs of phase `p`.
    pub phases: Vec<Vec<Job>>,
}

impl Plan {
    pub fn jobs(&self, phase: usize) -> &[Job] {
        &self.phases[phase - 1]
    }
}

pub fn plan(config: &PipelineConfig) -> Result<Plan> {
    let datasets: Vec<(String, PathBuf)> =
        config.data_files()?.into_iter().map(|p| (dataset_name(&p), p)).collect();
    let mut phases = vec![Vec::new(); 11];
    for (ds, _) in &datasets {
        let ds = Some(ds.as_str());
        phases[0].push(Job::new(1, ds, None, None));
        phases[1].push(Job::new(2, ds, None, None));
        for k in 0..config.k {
            phases[2].push(Job::new(3, ds, Some(k), None));
            phases[3].push(Job::new(4, ds, Some(k), None));
        }
        phases[4].push(Job::new(5, ds, None, None));
        for &a in &config.algorithms {
            for k in 0..config.k {
                phases[5].push(Job::new(6, ds, Some(k), Some(a)));
                phases[6].push(Job::new(7, ds, Some(k), Some(a)));
            }
        }
        phases[7].push(Job::new(8, ds, None, None));
        phases[8].push(Job::new(9, ds, None, None));
    }
    if datasets.len() > 1 {
        phases[9].push(Job::new(10, None, None, None));
    }
    phases[10].push(Job::new(11, None, None, None));
    Ok(Plan { datasets, phases })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub id: String,
    pub phase: usize,
    pub dataset: Option<String>,
    pub fold: Option<usize>,
    pub algorithm: Option<String>,
    pub ok: bool,
    pub error: Option<String>,
    pub runtime_seconds: f64,
    /// Path (relative to the experiment root where possible) to SHA-256.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSummary {
    pub executed: Vec<String>,
    pub skipped: Vec<String>,
    pub failed: Vec<(String, String)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseRuntime {
    pub phase: usize,
    pub name: String,
    pub jobs: usize,
    pub runtime_seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelRuntime {
    pub dataset: String,
    pub algorithm: String,
    pub fold: usize,
    pub training_seconds: f64,
    pub evaluation_seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub artifact_version: u32,
    pub tool_version: String,
    pub global_seed: u64,
    pub experiment: String,
    pub config_snapshot: String,
    pub overrides: Vec<(String, String)>,
    pub datasets: Vec<String>,
    pub algorithms: Vec<String>,
    pub folds: usize,
    pub phases: Vec<PhaseRuntime>,
    pub model_runtimes: Vec<ModelRuntime>,
    pub failures: Vec<(String, String)>,
    pub notes: Vec<String>,
    pub artifacts: BTreeMap<String, String>,
}

pub struct Runner {
    pub config: PipelineConfig,
    pub snapshot: String,
    pub overrides: Vec<(String, String)>,
    pub layout: Layout,
    pub plan: Plan,
    fresh: Mutex<BTreeSet<PathBuf>>,
}

enum Outcome {
    Executed,
    Skipped,
    NotStarted,
    Failed(String),
}

impl Runner {
    pub fn new(config: PipelineConfig, snapshot: String, overrides: Vec<(String, String)>) -> Result<Self> {
        let plan = plan(&config)?;
        let layout = Layout::new(config.experiment_dir());
        Ok(Runner { config, snapshot, overrides, layout, plan, fresh: Mutex::new(BTreeSet::new()) })
    }

    fn ctx(&self) -> Ctx<'_> {
        Ctx { config: &self.config, layout: &self.layout, datasets: &self.plan.datasets }
    }

    fn record_path(&self, job: &Job) -> PathBuf {
        self.layout.jobs().join(format!("{}.json", job.id()))
    }

    fn key(&self, p: &Path) -> String {
        if p.starts_with(&self.layout.root) {
            self.layout.rel(p)
        } else {
            p.display().to_string()
        }
    }

    fn recorded_outputs(&self, id: &str) -> Vec<PathBuf> {
        read_json::<JobRecord>(&self.layout.jobs().join(format!("{id}.json")))
            .map(|r| r.outputs.keys().map(|k| self.layout.root.join(k)).collect())
            .unwrap_or_default()
    }

    /// Files a job reads. The report phase has none and always runs.
    fn inputs(&self, job: &Job) -> Vec<PathBuf> {
        let l = &self.layout;
        let folds = 0..self.config.k;
        let algs = &self.config.algorithms;
        let ds = job.dataset.as_deref().unwrap_or_default();
        match (job.phase, job.fold, job.algorithm) {
            (1, ..) => self.plan.datasets.iter().filter(|d| d.0 == ds).map(|d| d.1.clone()).collect(),
            (2, ..) => vec![l.cleaned(ds), l.meta(ds)],
            (3, Some(k), _) => vec![l.fold_raw(ds, k, "train"), l.fold_raw(ds, k, "test"), l.meta(ds)],
            (4, Some(k), _) => vec![l.fold_transformed(ds, k, "train"), l.meta(ds)],
            (5, ..) => folds.map(|k| l.scores(ds, k)).collect(),
            (6, Some(k), Some(_)) => vec![l.fold_transformed(ds, k, "train"), l.meta(ds), l.selection(ds)],
            (7, Some(k), Some(a)) => vec![l.model(ds, a, k), l.fold_transformed(ds, k, "test"), l.meta(ds)],
            (8, ..) => {
                let mut v: Vec<PathBuf> = algs.iter().flat_map(|&a| folds.clone().map(move |k| l.record(ds, a, k))).collect();
                v.push(l.meta(ds));
                v
            }
            (9, ..) => {
                let mut v = self.recorded_outputs(&Job::new(8, Some(ds), None, None).id());
                v.extend(algs.iter().flat_map(|&a| folds.clone().map(move |k| l.record(ds, a, k))));
                v
            }
            (10, ..) => self
                .plan
                .datasets
                .iter()
                .flat_map(|(d, _)| self.recorded_outputs(&Job::new(8, Some(d), None, None).id()))
                .collect(),
            _ => Vec::new(),
        }
    }

    fn hashes(&self, paths: &[PathBuf]) -> Result<BTreeMap<String, String>> {
        paths.iter().map(|p| Ok((self.key(p), sha256_file(p)?))).collect()
    }

    /// The configuration values a job's outputs depend on, beyond its files.
    fn settings(&self, job: &Job) -> String {
        let c = &self.config;
        match (job.phase, job.algorithm) {
            (1, _) => format!(
                "{:?}",
                (&c.outcome, &c.instance_id, &c.match_group, &c.missing_token, &c.categorical, &c.quantitative, c.type_cutoff, &c.exclude)
            ),
            (2, _) => format!("{:?}", (c.k, c.cv_strategy, c.seed)),
            (3, _) => format!("{:?}", c.impute),
            (4, _) => format!("{:?}", (&c.scoring, c.seed)),
            (5, _) => format!("{:?}", c.scoring.max_features),
            (6, Some(a)) => {
                let fixed = c.fixed_for(a);
                let spec = ClassifierSpec::for_algorithm(a);
                let searched = spec.tunable && spec.params.iter().any(|p| !fixed.contains_key(&p.name));
                let tuning = (searched && c.n_trials > 0).then_some((c.n_trials, c.sampler));
                format!("{:?}", (tuning, c.seed, fixed))
            }
            (7, _) => format!("{:?}", (c.importance_metric, c.permutation_repeats, c.seed)),
            _ => format!("{:?}", (&c.algorithms, c.k, &c.primary_metric, c.alpha.to_bits(), c.top_features)),
        }
    }

    fn input_hashes(&self, job: &Job, paths: &[PathBuf]) -> Result<BTreeMap<String, String>> {
        let mut h = self.hashes(paths)?;
        h.insert(SETTINGS_KEY.into(), sha256_hex(self.settings(job).as_bytes()));
        Ok(h)
    }

    fn can_skip(&self, job: &Job, inputs: &[PathBuf]) -> bool {
        if job.phase == 11 {
            return false;
        }
        let Ok(rec) = read_json::<JobRecord>(&self.record_path(job)) else { return false };
        if !rec.ok {
            return false;
        }
        {
            let fresh = self.fresh.lock().expect("fresh set");
            if inputs.iter().any(|p| fresh.contains(p)) {
                return false;
            }
        }
        let Ok(now) = self.input_hashes(job, inputs) else { return false };
        if now != rec.inputs {
            return false;
        }
        rec.outputs
            .iter()
            .all(|(k, sha)| sha256_file(&self.layout.root.join(k)).is_ok_and(|s| &s == sha))
    }

    fn run_job(&self, job: &Job) -> Result<Vec<PathBuf>> {
        let ctx = self.ctx();
        let ds = job.dataset.as_deref().unwrap_or_default();
        let fold = job.fold.unwrap_or_default();
        match (job.phase, job.algorithm) {
            (1, _) => phases::eda(&ctx, ds),
            (2, _) => phases::partition(&ctx, ds),
            (3, _) => phases::transform(&ctx, ds, fold),
            (4, _) => phases::feature_importance(&ctx, ds, fold),
            (5, _) => phases::feature_selection(&ctx, ds),
            (6, Some(a)) => phases::modeling(&ctx, ds, fold, a),
            (7, Some(a)) => phases::evaluation(&ctx, ds, fold, a),
            (8, _) => phases::statistics(&ctx, ds),
            (9, _) => phases::figures(&ctx, ds),
            (10, _) => phases::comparison(&ctx),
            (11, _) => self.report(),
            _ => unreachable!("planned jobs are well formed"),
        }
    }

    fn execute(&self, job: &Job, halted: &AtomicBool) -> Outcome {
        if halted.load(Ordering::SeqCst) {
            return Outcome::NotStarted;
        }
        let inputs = self.inputs(job);
        if self.can_skip(job, &inputs) {
            log::debug!("{}: up to date", job.id());
            return Outcome::Skipped;
        }
        log::info!("{}: running", job.id());
        let start = Instant::now();
        let result = self.run_job(job);
        let runtime_seconds = start.elapsed().as_secs_f64();
        let mut rec = JobRecord {
            id: job.id(),
            phase: job.phase,
            dataset: job.dataset.clone(),
            fold: job.fold,
            algorithm: job.algorithm.map(|a| a.id().to_string()),
            ok: false,
            error: None,
            runtime_seconds,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        };
        let outcome = match result.and_then(|outs| Ok((self.input_hashes(job, &inputs)?, self.hashes(&outs)?, outs))) {
            Ok((ins, outs, paths)) => {
                rec.ok = true;
                rec.inputs = ins;
                rec.outputs = outs;
                self.fresh.lock().expect("fresh set").extend(paths);
                Outcome::Executed
            }
            Err(e) => {
                log::error!("{}: {e}", job.id());
                halted.store(true, Ordering::SeqCst);
                rec.error = Some(e.to_string());
                Outcome::Failed(e.to_string())
            }
        };
        if let Err(e) = write_json(&self.record_path(job), &rec) {
            return Outcome::Failed(format!("could not write job record: {e}"));
        }
        outcome
    }

    /// Runs every phase, or only `only_phase`. Jobs already complete with
    /// unchanged inputs are skipped.
    pub fn run(&self, only_phase: Option<usize>) -> Result<RunSummary> {
        if let Some(p) = only_phase {
            if !(1..=11).contains(&p) {
                return Err(Error::Config(format!("phase must be between 1 and 11, got {p}")));
            }
        }
        self.fresh.lock().expect("fresh set").clear();
        std::fs::create_dir_all(&self.layout.root).map_err(|e| Error::io(&self.layout.root, e))?;
        write_atomic(&self.layout.root.join("config.txt"), self.snapshot.as_bytes())?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        let mut summary = RunSummary::default();
        for phase in 1..=11 {
            if only_phase.is_some_and(|p| p != phase) {
                continue;
            }
            let jobs = self.plan.jobs(phase);
            if jobs.is_empty() {
                continue;
            }
            log::info!("phase {phase} ({}): {} job(s)", PHASE_NAMES[phase - 1], jobs.len());
            let halted = AtomicBool::new(false);
            let outcomes: Vec<Outcome> = pool.install(|| jobs.par_iter().map(|j| self.execute(j, &halted)).collect());
            for (job, o) in jobs.iter().zip(outcomes) {
                match o {
                    Outcome::Executed => summary.executed.push(job.id()),
                    Outcome::Skipped => summary.skipped.push(job.id()),
                    Outcome::NotStarted => {}
                    Outcome::Failed(e) => summary.failed.push((job.id(), e)),
                }
            }
            if !summary.failed.is_empty() {
                self.write_manifest(&summary.failed)?;
                return Err(Error::JobsFailed(summary.failed.len()));
            }
        }
        Ok(summary)
    }

    fn records(&self) -> Vec<JobRecord> {
        let mut out = Vec::new();
        for phase in &self.plan.phases {
            for job in phase {
                if let Ok(r) = read_json::<JobRecord>(&self.record_path(job)) {
                    out.push(r);
                }
            }
        }
        out
    }

    fn runtimes_table(&self, records: &[JobRecord]) -> Table {
        let mut t = Table::new(&["job", "phase", "dataset", "fold", "algorithm", "seconds"]);
        for r in records {
            t.push(vec![
                r.id.clone(),
                r.phase.to_string(),
                r.dataset.clone().unwrap_or_default(),
                r.fold.map(|f| f.to_string()).unwrap_or_default(),
                r.algorithm.clone().unwrap_or_default(),
                fmt_num(r.runtime_seconds),
            ]);
        }
        t
    }

    fn phase_runtimes(&self, records: &[JobRecord]) -> Vec<PhaseRuntime> {
        (1..=11)
            .filter(|&p| !self.plan.jobs(p).is_empty())
            .map(|p| PhaseRuntime {
                phase: p,
                name: PHASE_NAMES[p - 1].into(),
                jobs: self.plan.jobs(p).len(),
                runtime_seconds: records.iter().filter(|r| r.phase == p).map(|r| r.runtime_seconds).sum(),
            })
            .collect()
    }

    fn report(&self) -> Result<Vec<PathBuf>> {
        let ctx = self.ctx();
        let c = &self.config;
        let mut doc = Doc::default();
        doc.h(1, format!("Experiment `{}`", c.experiment));
        let algs: Vec<String> = c.algorithms.iter().map(|a| a.id().to_string()).collect();
        doc.p(format!(
            "Datasets: {}. Algorithms: {}. {}-fold {} cross-validation, global seed {}.",
            self.plan.datasets.iter().map(|d| format!("`{}`", d.0)).collect::<Vec<_>>().join(", "),
            algs.join(", "),
            c.k,
            format!("{:?}", c.cv_strategy).to_lowercase(),
            c.seed
        ));
        doc.h(2, "Settings");
        doc.push(report::Block::Code(self.snapshot.clone()));
        if !self.overrides.is_empty() {
            doc.p("Command-line overrides:");
            doc.table(&["Key", "Value"], self.overrides.iter().map(|(k, v)| vec![k.clone(), v.clone()]).collect());
        }
        for (ds, _) in &self.plan.datasets {
            doc.h(2, format!("Dataset `{ds}`"));
            let eda = phases::load_eda(&ctx, ds)?;
            let sel: Selection = read_json(&self.layout.selection(ds))?;
            report::dataset_blocks(&mut doc, &self.layout.dataset(ds), &format!("{ds}/"), Some(&eda), Some(&sel), &algs, &c.primary_metric)?;
        }
        if self.plan.datasets.len() > 1 {
            report::comparison_blocks(&mut doc, &self.layout.comparison(), &c.primary_metric)?;
        }
        let records = self.records();
        let runtimes = self.runtimes_table(&records);
        report::runtime_blocks(&mut doc, &runtimes);
        let md = self.layout.root.join("summary.md");
        let html = self.layout.root.join("summary.html");
        let rt = self.layout.root.join("runtimes.csv");
        write_atomic(&md, doc.to_markdown().as_bytes())?;
        write_atomic(&html, doc.to_html(&format!("Experiment {}", c.experiment)).as_bytes())?;
        runtimes.write(&rt)?;
        self.write_manifest(&[])?;
        Ok(vec![md, html, rt])
    }

    fn write_manifest(&self, failures: &[(String, String)]) -> Result<()> {
        let records = self.records();
        let mut model_runtimes = Vec::new();
        for r in records.iter().filter(|r| r.phase == 6) {
            let eval = records
                .iter()
                .find(|e| e.phase == 7 && e.dataset == r.dataset && e.fold == r.fold && e.algorithm == r.algorithm)
                .map_or(0.0, |e| e.runtime_seconds);
            model_runtimes.push(ModelRuntime {
                dataset: r.dataset.clone().unwrap_or_default(),
                algorithm: r.algorithm.clone().unwrap_or_default(),
                fold: r.fold.unwrap_or_default(),
                training_seconds: r.runtime_seconds,
                evaluation_seconds: eval,
            });
        }
        let mut notes = Vec::new();
        if self.plan.datasets.len() == 1 {
            notes.push("phase 10 skipped: a single dataset".to_string());
        }
        let m = Manifest {
            artifact_version: ARTIFACT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            global_seed: self.config.seed,
            experiment: self.config.experiment.clone(),
            config_snapshot: self.snapshot.clone(),
            overrides: self.overrides.clone(),
            datasets: self.plan.datasets.iter().map(|d| d.0.clone()).collect(),
            algorithms: self.config.algorithms.iter().map(|a| a.id().to_string()).collect(),
            folds: self.config.k,
            phases: self.phase_runtimes(&records),
            model_runtimes,
            failures: failures.to_vec(),
            notes,
            artifacts: artifact_index(&self.layout)?,
        };
        write_json(&self.layout.manifest(), &m)?;
        Ok(())
    }
}

/// SHA-256 of every file under the experiment root except job records,
/// replication runs and the manifest itself.
pub fn artifact_index(layout: &Layout) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![layout.root.clone()];
    while let Some(dir) = stack.pop() {
        let entries = std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
        for e in entries {
            let p = e.map_err(|e| Error::io(&dir, e))?.path();
            let rel = layout.rel(&p);
            if rel == JOBS || rel == APPLY || rel == "manifest.json" {
                continue;
            }
            if p.is_dir() {
                stack.push(p);
            } else if !p.file_name().is_some_and(|n| n.to_string_lossy().starts_with(".tmp")) {
                out.insert(rel, sha256_file(&p)?);
            }
        }
    }
    Ok(out)
}

/// Reads the fold-level metric table of a finished dataset.
pub fn fold_metrics(layout: &Layout, ds: &str) -> Result<crate::csvio::Table> {
    crate::csvio::read_table(&layout.dir(ds, EVALUATION).join("fold_metrics.csv"))
}
