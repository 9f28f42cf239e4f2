//! Long-format study output: one CSV row per (cell, metric) plus a JSON
//! manifest echoing the effective config. Rows from failed cells carry
//! metric "error" and the message in `note`, so the output grid always
//! matches the input grid.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

use super::config::ExperimentConfig;

#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub config_hash: String,
    pub study: String,
    pub cell: u64,
    pub replicate: u64,
    pub seed: u64,
    pub scenario: String,
    pub k: Option<usize>,
    pub ell: Option<f64>,
    pub t: Option<f64>,
    pub n: Option<usize>,
    pub entropy: Option<f64>,
    pub confidence: Option<f64>,
    pub release: Option<usize>,
    pub prior: String,
    pub default_row: Option<usize>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub metric: String,
    pub value: Option<f64>,
    pub note: String,
}

impl ReportRow {
    /// A row with everything blank except identity; studies fill in the
    /// coordinates they sweep.
    pub fn blank(config_hash: &str, study: &str, cell: u64, replicate: u64, seed: u64) -> Self {
        ReportRow {
            config_hash: config_hash.to_string(),
            study: study.to_string(),
            cell,
            replicate,
            seed,
            scenario: String::new(),
            k: None,
            ell: None,
            t: None,
            n: None,
            entropy: None,
            confidence: None,
            release: None,
            prior: String::new(),
            default_row: None,
            epsilon: None,
            delta: None,
            metric: String::new(),
            value: None,
            note: String::new(),
        }
    }

    pub fn metric(mut self, name: &str, value: f64) -> Self {
        self.metric = name.to_string();
        self.value = Some(value);
        self
    }

    pub fn error(mut self, message: &str) -> Self {
        self.metric = "error".to_string();
        self.value = None;
        self.note = message.to_string();
        self
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    study: &'a str,
    config_hash: &'a str,
    cells: usize,
    error_cells: usize,
    rows: usize,
    report_csv: String,
    config: &'a ExperimentConfig,
}

#[derive(Debug)]
pub struct StudyOutput {
    pub study: String,
    pub config_hash: String,
    pub cells: usize,
    pub rows: Vec<ReportRow>,
}

impl StudyOutput {
    pub fn error_cells(&self) -> usize {
        let mut cells: Vec<u64> = self
            .rows
            .iter()
            .filter(|r| r.metric == "error")
            .map(|r| r.cell)
            .collect();
        cells.sort_unstable();
        cells.dedup();
        cells.len()
    }

    /// Writes `<study>_report.csv` and `<study>_manifest.json` under `dir`.
    /// Returns the CSV path.
    pub fn write(&self, dir: &Path, cfg: &ExperimentConfig) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let csv_name = format!("{}_report.csv", self.study);
        let csv_path = dir.join(&csv_name);
        let mut w = csv::Writer::from_path(&csv_path)?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;

        let manifest = Manifest {
            study: &self.study,
            config_hash: &self.config_hash,
            cells: self.cells,
            error_cells: self.error_cells(),
            rows: self.rows.len(),
            report_csv: csv_name,
            config: cfg,
        };
        let manifest_path = dir.join(format!("{}_manifest.json", self.study));
        let mut json = serde_json::to_string_pretty(&manifest)?;
        json.push('\n');
        std::fs::write(manifest_path, json)?;
        Ok(csv_path)
    }
}
