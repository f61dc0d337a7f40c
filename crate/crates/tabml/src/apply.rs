//! Scoring a finished experiment's models on new data, and writing
//! simulated datasets.

use std::path::{Path, PathBuf};

use tabml_core::dataset::{clean, Dataset};
use tabml_core::eval::evaluate_model;
use tabml_core::rng::{derive_seed, SeedPart};
use tabml_core::simdata::{gen_mux, gen_snp, Architecture, MuxSpec, SimMeta, SnpSpec};
use tabml_core::transform::TransformRecipe;
use tabml_core::dataset::DatasetConfig;
use tabml_core::{Algorithm, FeatureMeta};

use crate::artifacts::{read_json, write_json, ModelArchive};
use crate::config::PipelineConfig;
use crate::csvio::{dataset_name, fmt_num, read_table, write_dataset, Table};
use crate::error::{Error, Result};
use crate::layout::{Layout, APPLY, EVALUATION, FIGURES};
use crate::phases::{apply_kinds, Selection};
use crate::pipeline::Manifest;
use crate::report::{self, Doc};
use crate::results::{self, EvalSet, SummarySettings};

#[derive(Debug, Clone)]
pub struct ApplyOptions {
    pub experiment: PathBuf,
    pub data: PathBuf,
    /// Training dataset whose models are applied; defaults to the only one.
    pub target: Option<String>,
    pub predictions_only: bool,
}

/// Rebuilds the pipeline configuration stored in a manifest.
pub fn experiment_config(experiment: &Path) -> Result<(PipelineConfig, Manifest)> {
    let manifest: Manifest = read_json(&Layout::new(experiment).manifest())?;
    let base = experiment.parent().unwrap_or(Path::new("."));
    let mut config = PipelineConfig::from_text(&manifest.config_snapshot, &manifest.overrides, base)?;
    config.experiment = manifest.experiment.clone();
    Ok((config, manifest))
}

/// Column roles for a replication file: configured ID and match columns are
/// used only when present.
fn replication_config(config: &PipelineConfig, header: &[String]) -> DatasetConfig {
    let mut dc = config.dataset_config();
    if dc.instance_id.as_ref().is_some_and(|c| !header.contains(c)) {
        dc.instance_id = None;
    }
    if dc.match_group.as_ref().is_some_and(|c| !header.contains(c)) {
        dc.match_group = None;
    }
    dc
}

/// Loads replication data and restricts it to the training features.
fn load_replication(path: &Path, config: &PipelineConfig, meta: &[FeatureMeta], allow_no_outcome: bool) -> Result<Dataset> {
    let mut t = read_table(path)?;
    if !t.header.contains(&config.outcome) {
        if !allow_no_outcome {
            return Err(Error::Config(format!("{}: outcome column `{}` not found", path.display(), config.outcome)));
        }
        t.header.push(config.outcome.clone());
        for r in &mut t.rows {
            r.push(config.missing_token.clone());
        }
    }
    let dc = replication_config(config, &t.header);
    let raw = Dataset::from_text_table(dataset_name(path), &t.header, &t.rows, &dc)?;
    let d = if allow_no_outcome { raw } else { clean(&raw, &config.exclude) };
    let wanted: Vec<String> = meta.iter().map(|m| m.name.clone()).collect();
    let present = d.feature_names();
    let missing: Vec<String> = wanted.iter().filter(|n| !present.contains(n)).cloned().collect();
    if !missing.is_empty() {
        return Err(tabml_core::Error::MissingFeatures(missing).into());
    }
    let extra: Vec<&String> = present.iter().filter(|n| !wanted.contains(n) && !config.exclude.contains(n)).collect();
    if !extra.is_empty() {
        log::warn!("ignoring columns not used in training: {}", extra.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", "));
    }
    let mut d = d.select_features(&wanted)?;
    apply_kinds(&mut d, meta)?;
    Ok(d)
}

struct Applied<'a> {
    config: PipelineConfig,
    layout: Layout,
    target: String,
    meta: Vec<FeatureMeta>,
    options: &'a ApplyOptions,
}

impl Applied<'_> {
    fn model(&self, alg: Algorithm, fold: usize) -> Result<(tabml_core::TrainedModel, TransformRecipe)> {
        let archive: ModelArchive = read_json(&self.layout.model(&self.target, alg, fold))?;
        let recipe: TransformRecipe = read_json(&self.layout.dataset(&self.target).join(&archive.recipe))?;
        Ok((archive.to_model()?, recipe))
    }
}

fn open(options: &ApplyOptions) -> Result<Applied<'_>> {
    let (config, manifest) = experiment_config(&options.experiment)?;
    let target = match &options.target {
        Some(t) if manifest.datasets.contains(t) => t.clone(),
        Some(t) => return Err(Error::Config(format!("experiment has no dataset `{t}`; choose from {:?}", manifest.datasets))),
        None if manifest.datasets.len() == 1 => manifest.datasets[0].clone(),
        None => {
            return Err(Error::Config(format!("experiment has several datasets; pass --target with one of {:?}", manifest.datasets)))
        }
    };
    let layout = Layout::new(&options.experiment);
    let meta: Vec<FeatureMeta> = read_json(&layout.meta(&target))?;
    Ok(Applied { config, layout, target, meta, options })
}

/// Evaluates every trained model of the experiment on a replication dataset
/// and writes records, statistics, figures and a report under
/// `<experiment>/applymodel/<name>/`. Returns that directory.
pub fn apply(options: &ApplyOptions) -> Result<PathBuf> {
    let a = open(options)?;
    if options.predictions_only {
        return predictions(&a);
    }
    let c = &a.config;
    let data = load_replication(&options.data, c, &a.meta, false)?;
    let name = dataset_name(&options.data);
    let dir = a.layout.root.join(APPLY).join(&name);
    let eval_dir = dir.join(EVALUATION);
    let mut records = Vec::new();
    for &alg in &c.algorithms {
        for fold in 0..c.k {
            let (model, recipe) = a.model(alg, fold)?;
            let x_data = recipe.apply(&data)?;
            let (x, y, names) = (x_data.to_matrix()?, x_data.labels()?, x_data.feature_names());
            let seed = derive_seed(
                c.seed,
                &[SeedPart::Str("apply"), SeedPart::Str(&name), SeedPart::from(fold), SeedPart::Str(alg.id())],
            );
            let mut rec = evaluate_model(&name, &model, &x, &names, &y, c.importance_metric, c.permutation_repeats, seed)?;
            rec.fold = fold;
            write_json(&crate::layout::record_path(&eval_dir.join("records"), alg, fold), &rec)?;
            records.push(rec);
        }
    }
    let set = EvalSet {
        dataset: name.clone(),
        features: a.meta.iter().map(|m| m.name.clone()).collect(),
        algorithms: c.algorithms.clone(),
        records,
    };
    let settings = SummarySettings { primary_metric: c.primary_metric.clone(), alpha: c.alpha, top_features: c.top_features };
    results::write_statistics(&set, &settings, &eval_dir)?;
    results::write_figures(&set, &settings, &dir.join(FIGURES))?;

    let mut doc = Doc::default();
    doc.h(1, format!("Replication `{name}` on models from `{}`", a.target));
    doc.p(format!(
        "{} instances scored by {} models ({} algorithms x {} folds). Each model used the imputation and scaling fitted on its own training fold.",
        data.n_instances(),
        c.algorithms.len() * c.k,
        c.algorithms.len(),
        c.k
    ));
    let sel: Option<Selection> = read_json(&a.layout.selection(&a.target)).ok();
    let algs: Vec<String> = c.algorithms.iter().map(|a| a.id().to_string()).collect();
    report::dataset_blocks(&mut doc, &dir, "", None, sel.as_ref(), &algs, &c.primary_metric)?;
    crate::artifacts::write_atomic(&dir.join("summary.md"), doc.to_markdown().as_bytes())?;
    crate::artifacts::write_atomic(&dir.join("summary.html"), doc.to_html(&format!("Replication {name}")).as_bytes())?;
    Ok(dir)
}

/// Probabilities only, one column per model; works without outcome labels.
fn predictions(a: &Applied<'_>) -> Result<PathBuf> {
    let c = &a.config;
    let data = load_replication(&a.options.data, c, &a.meta, true)?;
    let name = dataset_name(&a.options.data);
    let dir = a.layout.root.join(APPLY).join(&name);
    let mut header = vec!["instance".to_string()];
    let mut columns = Vec::new();
    for &alg in &c.algorithms {
        for fold in 0..c.k {
            let (model, recipe) = a.model(alg, fold)?;
            let x_data = recipe.apply(&data)?;
            columns.push(model.predict_named(&x_data.to_matrix()?, &x_data.feature_names())?);
            header.push(format!("{alg}_fold{fold}"));
        }
    }
    let mut t = Table { header, rows: Vec::new() };
    for r in 0..data.n_instances() {
        let id = data.instance_ids.as_ref().map_or_else(|| r.to_string(), |ids| ids[r].clone());
        let mut row = vec![id];
        row.extend(columns.iter().map(|col| fmt_num(col[r])));
        t.rows.push(row);
    }
    t.write(&dir.join("predictions.csv"))?;
    Ok(dir)
}

#[derive(Debug, Clone)]
pub enum SimSpec {
    Mux(MuxSpec),
    Snp(SnpSpec),
}

/// Writes a simulated dataset with outcome column `Class` plus a
/// `<file>.meta.json` sidecar.
pub fn simulate(spec: &SimSpec, out: &Path) -> Result<SimMeta> {
    let (d, meta) = match spec {
        SimSpec::Mux(s) => gen_mux(s)?,
        SimSpec::Snp(s) => gen_snp(s)?,
    };
    write_dataset(out, &d, &DatasetConfig::new("Class"))?;
    let mut side = out.as_os_str().to_owned();
    side.push(".meta.json");
    write_json(Path::new(&side), &meta)?;
    Ok(meta)
}

pub fn parse_architecture(s: &str) -> Result<Architecture> {
    Architecture::parse(s).ok_or_else(|| {
        let names: Vec<&str> = Architecture::ALL.iter().map(|a| a.as_str()).collect();
        Error::Config(format!("unknown architecture `{s}`; use one of {}", names.join(", ")))
    })
}
