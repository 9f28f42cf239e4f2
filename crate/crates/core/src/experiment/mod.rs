//! Deterministic experiment grids. A flat TOML config file defines the data
//! source (a CSV or a synthetic generator), the anonymization scenarios and
//! parameter grids, and the output directory; each study expands its grid
//! into independent cells, runs them on a bounded worker pool, and writes one
//! long-format CSV plus a JSON manifest. Re-running the same effective config
//! reproduces the report files byte for byte.

mod config;
mod report;
mod studies;
mod synth;

pub use config::{config_hash, ExperimentConfig};
pub use report::{ReportRow, StudyOutput};
pub use studies::{
    run_anonymity_drop_study, run_anonymize, run_attack, run_breach_study, run_dp_suite,
    run_entropy_study, run_multi_release_study,
};
pub use synth::{generate_synthetic, SyntheticSpec};

/// splitmix64: cheap, stable stream splitting for per-cell seeds.
pub(crate) fn mix_seed(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Deterministic seed for one grid cell, independent of execution order.
pub(crate) fn cell_seed(base: u64, study: &str, cell: u64, replicate: u64) -> u64 {
    let mut h = base;
    for b in study.bytes() {
        h = mix_seed(h ^ b as u64);
    }
    mix_seed(mix_seed(h ^ cell) ^ replicate)
}
