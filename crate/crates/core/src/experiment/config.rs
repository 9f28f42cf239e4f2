//! Flat TOML experiment configuration. One file drives every subcommand;
//! each study reads the keys it needs and ignores the rest. Unknown keys are
//! rejected so typos surface as fatal config errors.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dataset::{Schema, Table};
use crate::error::{Error, Result};

use super::synth::{generate_synthetic, SyntheticSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    // Data source: a CSV plus schema file, or the synthetic generator below.
    pub dataset: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub records: usize,
    pub qi_domains: Vec<usize>,
    pub sensitive_domain: usize,
    pub sensitive_entropy: f64,
    pub correlation: f64,

    // Release construction and attack grids.
    /// Each scenario names the scheme per release, `+`-separated and cycled,
    /// e.g. "mondrian+microaggregation".
    pub scenarios: Vec<String>,
    pub k: Vec<usize>,
    pub ell: Vec<f64>,
    pub t: Vec<f64>,
    /// Number of releases for the breach/drop studies.
    pub releases: usize,
    /// Release-count grid for the multi study.
    pub n_grid: Vec<usize>,
    pub overlap: usize,
    /// Extra (non-overlap) records per release; cycled. Empty means each
    /// subset is twice the overlap.
    pub subset_extra: Vec<usize>,
    pub confidence: Vec<f64>,
    /// Sensitive-entropy grid for the entropy study, in nats.
    pub entropy_levels: Vec<f64>,

    // anonymize / attack subcommands.
    pub scheme: String,
    pub release_files: Vec<PathBuf>,

    // dp suite.
    pub dp_mechanisms: Vec<String>,
    pub rr_flip: Vec<f64>,
    pub dp_n: Vec<usize>,
    pub dp_epsilon: Vec<f64>,
    pub dp_delta: Vec<f64>,
    pub priors: Vec<String>,

    // Execution.
    pub seed: u64,
    pub seed_count: usize,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: None,
            schema: None,
            records: 1000,
            qi_domains: vec![16, 12, 8],
            sensitive_domain: 16,
            sensitive_entropy: 2.0,
            correlation: 0.3,
            scenarios: vec!["mondrian+mondrian".into()],
            k: vec![5],
            ell: vec![],
            t: vec![],
            releases: 2,
            n_grid: vec![2, 3, 4],
            overlap: 250,
            subset_extra: vec![],
            confidence: crate::attack::DEFAULT_CONFIDENCE_GRID.to_vec(),
            entropy_levels: vec![0.0, 1.0, 2.0],
            scheme: "mondrian".into(),
            release_files: vec![],
            dp_mechanisms: vec![
                "randomized-response".into(),
                "geometric-counter".into(),
                "publish-random-record".into(),
            ],
            rr_flip: vec![0.1, 0.25, 0.4],
            dp_n: vec![1, 2, 3],
            dp_epsilon: vec![2.0f64.ln(), 3.0f64.ln()],
            dp_delta: vec![0.0, 0.1],
            priors: vec!["uniform".into(), "seeded-random".into(), "point-mass-mixture".into()],
            seed: 0,
            seed_count: 1,
            out: PathBuf::from("reports"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = std::fs::read_to_string(&path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!(
            "{}: {e}",
            path.as_ref().display()
        )))
    }

    pub fn synthetic_spec(&self, entropy: f64) -> SyntheticSpec {
        SyntheticSpec {
            records: self.records,
            qi_domains: self.qi_domains.clone(),
            sensitive_domain: self.sensitive_domain,
            entropy,
            correlation: self.correlation,
        }
    }

    /// The source table for one replicate: the configured CSV (identical
    /// across replicates) or a fresh synthetic draw.
    pub fn source_table(&self, qi_seed: u64, sensitive_seed: u64) -> Result<Table> {
        match (&self.dataset, &self.schema) {
            (Some(data), Some(schema)) => {
                let schema = Arc::new(Schema::from_file(schema)?);
                Table::load_csv(data, schema)
            }
            (Some(_), None) | (None, Some(_)) => Err(Error::Config(
                "dataset and schema must be given together".into(),
            )),
            (None, None) => {
                generate_synthetic(&self.synthetic_spec(self.sensitive_entropy), qi_seed, sensitive_seed)
            }
        }
    }

    /// Size of release j's subset: overlap plus the configured extra.
    pub fn subset_size(&self, release_index: usize) -> usize {
        let extra = if self.subset_extra.is_empty() {
            self.overlap
        } else {
            self.subset_extra[release_index % self.subset_extra.len()]
        };
        self.overlap + extra
    }
}

/// FNV-1a over the canonical JSON form: a short stable fingerprint tying
/// every report row to the effective config that produced it. The output
/// directory is not part of the fingerprint: it says where results land,
/// not what they are.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut cfg = cfg.clone();
    cfg.out = PathBuf::new();
    let json = serde_json::to_string(&cfg).expect("config serializes");
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in json.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    format!("{h:016x}")
}
