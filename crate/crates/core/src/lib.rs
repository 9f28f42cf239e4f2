//! releak: what do overlapping anonymized releases of the same people leak,
//! and do noise-based mechanisms actually deliver the Bayesian guarantees
//! their parameters claim?
//!
//! - [`dataset`]: typed microdata tables and seeded overlapping subsets
//! - [`anonymizer`]: partition/centroid anonymization plus guarantee checkers
//! - [`attack`]: the intersection attack over multiple releases
//! - [`dp`]: exhaustive differential-privacy and semantic-privacy checks
//! - [`experiment`]: deterministic study grids behind the `releak` binary

pub mod anonymizer;
pub mod attack;
pub mod dataset;
pub mod dp;
pub mod error;
pub mod experiment;

pub use error::{Error, Result};
