//! Delimited-text tables: dataset input, dataset export and result tables.

use std::path::Path;

use tabml_core::dataset::DatasetConfig;
use tabml_core::Dataset;

use crate::artifacts::write_atomic;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    pub fn write(&self, path: &Path) -> Result<String> {
        write_atomic(path, &self.to_bytes())
    }
}

fn delimiter_for(path: &Path) -> u8 {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("tsv") || e.eq_ignore_ascii_case("txt") => b'\t',
        _ => b',',
    }
}

/// Reads a header plus rows. Ragged rows are passed through so the dataset
/// parser can report them with a row number.
pub fn read_table(path: &Path) -> Result<Table> {
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter_for(path))
        .flexible(true)
        .from_path(path)
        .map_err(csv_err)?;
    let header: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(|h| h.trim().to_string()).collect();
    if header.iter().all(String::is_empty) {
        return Err(Error::Config(format!("{}: header row is missing", path.display())));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        rows.push(rec.map_err(csv_err)?.iter().map(str::to_string).collect());
    }
    Ok(Table { header, rows })
}

/// Dataset name of a data file: its stem.
pub fn dataset_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned())
}

pub fn load_dataset(path: &Path, config: &DatasetConfig) -> Result<Dataset> {
    let t = read_table(path)?;
    Ok(Dataset::from_text_table(dataset_name(path), &t.header, &t.rows, config)?)
}

/// Shortest text that parses back to the same `f64`.
pub fn fmt_num(v: f64) -> String {
    format!("{v}")
}

/// Features, then the ID and match columns when present, then the outcome.
pub fn dataset_table(d: &Dataset, config: &DatasetConfig) -> Table {
    let mut header = d.feature_names();
    if let (Some(_), Some(col)) = (&d.instance_ids, &config.instance_id) {
        header.push(col.clone());
    }
    if let (Some(_), Some(col)) = (&d.match_group, &config.match_group) {
        header.push(col.clone());
    }
    header.push(config.outcome.clone());
    let f = d.n_features();
    let rows = (0..d.n_instances())
        .map(|r| {
            let mut row: Vec<String> = (0..f)
                .map(|c| d.cell(r, c).map_or_else(|| config.missing_token.clone(), fmt_num))
                .collect();
            if let (Some(ids), Some(_)) = (&d.instance_ids, &config.instance_id) {
                row.push(ids[r].clone());
            }
            if let (Some(g), Some(_)) = (&d.match_group, &config.match_group) {
                row.push(g[r].to_string());
            }
            row.push(d.outcome[r].map_or_else(|| config.missing_token.clone(), |y| y.to_string()));
            row
        })
        .collect();
    Table { header, rows }
}

pub fn write_dataset(path: &Path, d: &Dataset, config: &DatasetConfig) -> Result<String> {
    dataset_table(d, config).write(path)
}
