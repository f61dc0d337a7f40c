#![allow(dead_code)]

use std::path::{Path, PathBuf};

use tabml::apply::{simulate, SimSpec};
use tabml::config::PipelineConfig;
use tabml::pipeline::Runner;
use tabml_core::simdata::MuxSpec;

pub fn mux(dir: &Path, name: &str, bits: usize, n: usize, seed: u64) -> PathBuf {
    let path = dir.join(format!("{name}.csv"));
    simulate(&SimSpec::Mux(MuxSpec { total_bits: bits, n_instances: n, seed }), &path).unwrap();
    // The sidecar is not a dataset; keep it out of the data folder.
    let mut side = path.as_os_str().to_owned();
    side.push(".meta.json");
    std::fs::remove_file(side).unwrap();
    path
}

/// A small, fast experiment over every file in `data`.
pub fn quick_config(data: &Path, out: &Path, extra: &str) -> String {
    format!(
        "data_dir = {}\nout_dir = {}\nexperiment = exp\nk = 3\nalgorithms = NB, LR, DT, KNN\nn_trials = 4\npermutation_repeats = 2\nseed = 11\n{extra}",
        data.display(),
        out.display()
    )
}

pub fn runner(text: &str, overrides: &[(String, String)]) -> Runner {
    let c = PipelineConfig::from_text(text, overrides, Path::new(".")).unwrap();
    Runner::new(c, text.to_string(), overrides.to_vec()).unwrap()
}

pub fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}
