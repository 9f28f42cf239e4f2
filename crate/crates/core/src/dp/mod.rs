//! Exhaustive differential-privacy semantics on small finite state spaces.
//! Databases are tuples in D^n over a finite row domain D; mechanisms are
//! explicit row-stochastic matrices over a finite transcript set. Everything
//! downstream (indistinguishability, posteriors, semantic privacy) enumerates
//! the space exactly, under a hard |D|^n budget.

mod checks;
mod mechanisms;
mod semantic;

pub use checks::{dp_check, indistinguishability_check, one_sided_dp_excess, statistical_difference};
pub use mechanisms::{
    exact_count, publish_random_record, randomized_response, randomized_response_epsilon,
    truncated_geometric_counter,
};
pub use semantic::{
    good_set_semantic_eval, posterior, posterior_game, semantic_privacy_eval, GoodSetReport,
    SdWitness, SemanticPrivacyReport,
};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row sums and prior sums must hit 1 within this.
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Slack added to every inequality check against an analytic bound.
pub const CHECK_SLACK: f64 = 1e-12;
/// Hard cap on |D|^n for exhaustive enumeration.
pub const STATE_BUDGET: usize = 1_000_000;

/// The space of databases D^n: n rows, each one element of a finite ordered
/// domain. Databases are indexed lexicographically with coordinate 0 most
/// significant. `default_row` is the stand-in a row is replaced with when an
/// individual's data is withheld.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatabaseSpace {
    domain: Vec<String>,
    n: usize,
    default_row: usize,
}

impl DatabaseSpace {
    pub fn new(domain: Vec<String>, n: usize, default_row: usize) -> Result<Self> {
        if domain.is_empty() {
            return Err(Error::InvalidArgument("empty row domain".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for d in &domain {
            if !seen.insert(d) {
                return Err(Error::InvalidArgument(format!("duplicate domain label {d:?}")));
            }
        }
        if n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        if default_row >= domain.len() {
            return Err(Error::InvalidArgument(format!(
                "default row {default_row} outside the domain (size {})",
                domain.len()
            )));
        }
        let mut count: usize = 1;
        for _ in 0..n {
            count = count
                .checked_mul(domain.len())
                .filter(|&c| c <= STATE_BUDGET)
                .ok_or_else(|| {
                    Error::Budget(format!(
                        "|D|^n = {}^{} exceeds the {STATE_BUDGET} database budget",
                        domain.len(),
                        n
                    ))
                })?;
        }
        Ok(DatabaseSpace { domain, n, default_row })
    }

    /// Same space with a different default row.
    pub fn with_default_row(&self, default_row: usize) -> Result<Self> {
        DatabaseSpace::new(self.domain.clone(), self.n, default_row)
    }

    pub fn binary(n: usize) -> Result<Self> {
        DatabaseSpace::new(vec!["0".into(), "1".into()], n, 0)
    }

    pub fn domain(&self) -> &[String] {
        &self.domain
    }

    pub fn domain_size(&self) -> usize {
        self.domain.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn default_row(&self) -> usize {
        self.default_row
    }

    pub fn database_count(&self) -> usize {
        self.domain.len().pow(self.n as u32)
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let d = self.domain.len();
        let mut rows = vec![0; self.n];
        for i in (0..self.n).rev() {
            rows[i] = index % d;
            index /= d;
        }
        rows
    }

    pub fn encode(&self, rows: &[usize]) -> usize {
        let d = self.domain.len();
        rows.iter().fold(0, |acc, &r| acc * d + r)
    }

    pub fn database_label(&self, index: usize) -> String {
        self.decode(index)
            .iter()
            .map(|&r| self.domain[r].as_str())
            .collect::<Vec<_>>()
            .join(",")
    }

    /// The database with coordinate `coord` replaced by the default row.
    pub fn with_defaulted_coordinate(&self, index: usize, coord: usize) -> usize {
        debug_assert!(coord < self.n);
        let d = self.domain.len();
        let place = d.pow((self.n - 1 - coord) as u32);
        let current = (index / place) % d;
        let shift = (self.default_row as i64 - current as i64) * place as i64;
        (index as i64 + shift) as usize
    }

    /// All unordered database pairs at Hamming distance one.
    pub fn neighbor_pairs(&self) -> Vec<(usize, usize)> {
        let d = self.domain.len();
        let mut pairs = Vec::new();
        for db in 0..self.database_count() {
            let rows = self.decode(db);
            for coord in 0..self.n {
                let place = d.pow((self.n - 1 - coord) as u32);
                // only look upward so each pair appears once
                for v in rows[coord] + 1..d {
                    pairs.push((db, db + (v - rows[coord]) * place));
                }
            }
        }
        pairs
    }
}

/// A mechanism as an explicit database-by-transcript probability matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mechanism {
    pub space: DatabaseSpace,
    transcripts: Vec<String>,
    prob: Vec<Vec<f64>>,
}

impl Mechanism {
    pub fn new(space: DatabaseSpace, transcripts: Vec<String>, prob: Vec<Vec<f64>>) -> Result<Self> {
        if transcripts.is_empty() {
            return Err(Error::InvalidArgument("empty transcript set".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for t in &transcripts {
            if !seen.insert(t) {
                return Err(Error::InvalidArgument(format!("duplicate transcript {t:?}")));
            }
        }
        if prob.len() != space.database_count() {
            return Err(Error::InvalidArgument(format!(
                "{} probability rows for {} databases",
                prob.len(),
                space.database_count()
            )));
        }
        for (db, row) in prob.iter().enumerate() {
            if row.len() != transcripts.len() {
                return Err(Error::InvalidArgument(format!(
                    "database {db}: {} entries for {} transcripts",
                    row.len(),
                    transcripts.len()
                )));
            }
            let mut sum = 0.0;
            for &p in row {
                if !(p >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "database {db}: negative probability {p}"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::InvalidArgument(format!(
                    "database {db}: row sums to {sum}, not 1"
                )));
            }
        }
        Ok(Mechanism { space, transcripts, prob })
    }

    /// Same matrix over the same space but with a different default row for
    /// the counterfactual games.
    pub fn with_default_row(&self, default_row: usize) -> Result<Self> {
        Ok(Mechanism {
            space: self.space.with_default_row(default_row)?,
            transcripts: self.transcripts.clone(),
            prob: self.prob.clone(),
        })
    }

    pub fn transcripts(&self) -> &[String] {
        &self.transcripts
    }

    pub fn transcript_count(&self) -> usize {
        self.transcripts.len()
    }

    pub fn transcript_index(&self, label: &str) -> Option<usize> {
        self.transcripts.iter().position(|t| t == label)
    }

    pub fn prob(&self, db: usize, t: usize) -> f64 {
        self.prob[db][t]
    }

    /// Output distribution of one database over all transcripts.
    pub fn row(&self, db: usize) -> &[f64] {
        &self.prob[db]
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: Mechanism = serde_json::from_str(s)?;
        Mechanism::new(raw.space, raw.transcripts, raw.prob)
    }
}

/// A prior over databases.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Belief {
    prior: Vec<f64>,
}

impl Belief {
    pub fn new(prior: Vec<f64>) -> Result<Self> {
        if prior.is_empty() {
            return Err(Error::InvalidArgument("empty prior".into()));
        }
        let mut sum = 0.0;
        for &p in &prior {
            if !(p >= 0.0) {
                return Err(Error::InvalidArgument(format!("negative prior mass {p}")));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidArgument(format!("prior sums to {sum}, not 1")));
        }
        Ok(Belief { prior })
    }

    pub fn uniform(space: &DatabaseSpace) -> Self {
        let n = space.database_count();
        Belief { prior: vec![1.0 / n as f64; n] }
    }

    pub fn point_mass(space: &DatabaseSpace, db: usize) -> Result<Self> {
        if db >= space.database_count() {
            return Err(Error::InvalidArgument(format!("database index {db} out of range")));
        }
        let mut prior = vec![0.0; space.database_count()];
        prior[db] = 1.0;
        Ok(Belief { prior })
    }

    /// `weight` on one database, the rest spread uniformly. An adversarial,
    /// nearly-certain prior that still touches every database.
    pub fn point_mass_mixture(space: &DatabaseSpace, db: usize, weight: f64) -> Result<Self> {
        if db >= space.database_count() {
            return Err(Error::InvalidArgument(format!("database index {db} out of range")));
        }
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::InvalidArgument(format!("weight {weight} outside [0, 1]")));
        }
        let n = space.database_count();
        let rest = (1.0 - weight) / n as f64;
        let mut prior = vec![rest; n];
        prior[db] += weight;
        Ok(Belief { prior })
    }

    /// Dirichlet(1)-style random prior: normalized standard exponentials.
    pub fn seeded_random(space: &DatabaseSpace, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draws: Vec<f64> = (0..space.database_count())
            .map(|_| {
                let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
                -u.ln()
            })
            .collect();
        let sum: f64 = draws.iter().sum();
        Belief { prior: draws.into_iter().map(|d| d / sum).collect() }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.prior
    }

    pub fn len(&self) -> usize {
        self.prior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prior.is_empty()
    }
}
