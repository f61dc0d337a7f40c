//! Paths inside an experiment directory.

use std::path::{Path, PathBuf};

use tabml_core::Algorithm;

pub const EXPLORATORY: &str = "exploratory";
pub const CV: &str = "cv";
pub const RECIPES: &str = "recipes";
pub const FEATURE_SELECTION: &str = "feature_selection";
pub const MODELS: &str = "models";
pub const EVALUATION: &str = "evaluation";
pub const FIGURES: &str = "figures";
pub const COMPARISON: &str = "comparison";
pub const JOBS: &str = ".jobs";
pub const APPLY: &str = "applymodel";

#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn dataset(&self, ds: &str) -> PathBuf {
        self.root.join(ds)
    }

    pub fn dir(&self, ds: &str, sub: &str) -> PathBuf {
        self.root.join(ds).join(sub)
    }

    pub fn cleaned(&self, ds: &str) -> PathBuf {
        self.dir(ds, EXPLORATORY).join("cleaned.csv")
    }

    pub fn meta(&self, ds: &str) -> PathBuf {
        self.dir(ds, EXPLORATORY).join("feature_meta.json")
    }

    pub fn eda(&self, ds: &str) -> PathBuf {
        self.dir(ds, EXPLORATORY).join("eda_summary.json")
    }

    pub fn split(&self, ds: &str) -> PathBuf {
        self.dir(ds, CV).join("split.json")
    }

    pub fn fold_raw(&self, ds: &str, fold: usize, part: &str) -> PathBuf {
        self.dir(ds, CV).join(format!("fold{fold}_{part}.csv"))
    }

    pub fn recipe_rel(fold: usize) -> String {
        format!("{RECIPES}/fold{fold}_recipe.json")
    }

    pub fn recipe(&self, ds: &str, fold: usize) -> PathBuf {
        self.dataset(ds).join(Self::recipe_rel(fold))
    }

    pub fn fold_transformed(&self, ds: &str, fold: usize, part: &str) -> PathBuf {
        self.dir(ds, RECIPES).join(format!("fold{fold}_{part}.csv"))
    }

    pub fn scores(&self, ds: &str, fold: usize) -> PathBuf {
        self.dir(ds, FEATURE_SELECTION).join(format!("fold{fold}_scores.json"))
    }

    pub fn selection(&self, ds: &str) -> PathBuf {
        self.dir(ds, FEATURE_SELECTION).join("selection.json")
    }

    pub fn model(&self, ds: &str, alg: Algorithm, fold: usize) -> PathBuf {
        self.dir(ds, MODELS).join(format!("{alg}_fold{fold}.json"))
    }

    pub fn record(&self, ds: &str, alg: Algorithm, fold: usize) -> PathBuf {
        record_path(&self.dir(ds, EVALUATION), alg, fold)
    }

    pub fn comparison(&self) -> PathBuf {
        self.root.join(COMPARISON)
    }

    pub fn jobs(&self) -> PathBuf {
        self.root.join(JOBS)
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    /// Path relative to the experiment root, with forward slashes.
    pub fn rel(&self, p: &Path) -> String {
        let r = p.strip_prefix(&self.root).unwrap_or(p);
        r.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/")
    }
}

pub fn record_path(eval_dir: &Path, alg: Algorithm, fold: usize) -> PathBuf {
    eval_dir.join("records").join(format!("{alg}_fold{fold}.json"))
}
