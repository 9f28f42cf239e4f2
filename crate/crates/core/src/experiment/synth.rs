//! Synthetic microdata with a controlled sensitive-value entropy and a knob
//! coupling the sensitive value to the quasi-identifiers.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{AttributeDomain, AttributeSchema, Record, Role, Schema, Table};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub records: usize,
    /// One numeric QI attribute per entry; the entry is the domain size.
    pub qi_domains: Vec<usize>,
    pub sensitive_domain: usize,
    /// Target Shannon entropy of the sensitive marginal, in nats. Must not
    /// exceed ln(sensitive_domain).
    pub entropy: f64,
    /// In [0, 1]: the probability that a record's sensitive value is a fixed
    /// function of its QI tuple rather than an independent draw. Either way
    /// the marginal follows the entropy-targeted distribution.
    pub correlation: f64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.records == 0 {
            return Err(Error::InvalidArgument("synthetic table needs records".into()));
        }
        if self.qi_domains.is_empty() || self.qi_domains.contains(&0) {
            return Err(Error::InvalidArgument("QI domain sizes must be positive".into()));
        }
        if self.sensitive_domain == 0 {
            return Err(Error::InvalidArgument("sensitive domain must be positive".into()));
        }
        let cap = (self.sensitive_domain as f64).ln();
        if self.entropy < 0.0 || self.entropy > cap + 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "entropy target {} outside [0, ln {}] = [0, {cap:.4}]",
                self.entropy, self.sensitive_domain
            )));
        }
        if !(0.0..=1.0).contains(&self.correlation) {
            return Err(Error::InvalidArgument(format!(
                "correlation {} outside [0, 1]",
                self.correlation
            )));
        }
        Ok(())
    }
}

/// A distribution over `size` values with Shannon entropy `target` nats,
/// from the geometric-like family p_i proportional to exp(-beta * i).
/// beta = 0 is uniform (entropy ln size); large beta approaches a point mass.
pub(crate) fn entropy_targeted_distribution(size: usize, target: f64) -> Vec<f64> {
    if size == 1 || target <= 0.0 {
        let mut p = vec![0.0; size];
        p[0] = 1.0;
        return p;
    }
    let dist = |beta: f64| -> Vec<f64> {
        let raw: Vec<f64> = (0..size).map(|i| (-beta * i as f64).exp()).collect();
        let sum: f64 = raw.iter().sum();
        raw.into_iter().map(|r| r / sum).collect()
    };
    let entropy = |p: &[f64]| -> f64 {
        -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while entropy(&dist(hi)) > target && hi < 1e4 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if entropy(&dist(mid)) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    dist(0.5 * (lo + hi))
}

fn inverse_cdf(p: &[f64], u: f64) -> i64 {
    let mut acc = 0.0;
    for (i, &x) in p.iter().enumerate() {
        acc += x;
        if u < acc {
            return i as i64;
        }
    }
    (p.len() - 1) as i64
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Generates the table. `qi_seed` alone determines the QI columns, so studies
/// can vary the sensitive column while holding the population fixed.
pub fn generate_synthetic(spec: &SyntheticSpec, qi_seed: u64, sensitive_seed: u64) -> Result<Table> {
    spec.validate()?;
    let mut attrs: Vec<AttributeSchema> = spec
        .qi_domains
        .iter()
        .enumerate()
        .map(|(i, &d)| AttributeSchema {
            name: format!("q{}", i + 1),
            domain: AttributeDomain::Numeric { min: 0, max: d as i64 - 1 },
            role: Role::QuasiIdentifier,
        })
        .collect();
    attrs.push(AttributeSchema {
        name: "s".into(),
        domain: AttributeDomain::Categorical {
            values: (0..spec.sensitive_domain).map(|i| format!("s{i}")).collect(),
        },
        role: Role::Sensitive,
    });
    let schema = Arc::new(Schema::new(attrs)?);

    let mut qi_rng = ChaCha8Rng::seed_from_u64(qi_seed);
    let qi_rows: Vec<Vec<i64>> = (0..spec.records)
        .map(|_| {
            spec.qi_domains
                .iter()
                .map(|&d| qi_rng.random_range(0..d as i64))
                .collect()
        })
        .collect();

    let dist = entropy_targeted_distribution(spec.sensitive_domain, spec.entropy);
    let mut s_rng = ChaCha8Rng::seed_from_u64(sensitive_seed);
    let qi_salt = splitmix(sensitive_seed ^ 0xa5a5_5a5a_dead_beef);
    let records = qi_rows
        .into_iter()
        .enumerate()
        .map(|(i, mut values)| {
            let coupled: bool = s_rng.random_range(0.0..1.0) < spec.correlation;
            let u: f64 = if coupled {
                // a fixed pseudorandom function of the QI tuple, so equal
                // tuples share a value but the marginal stays on target
                let mut h = qi_salt;
                for &v in &values {
                    h = splitmix(h ^ v as u64);
                }
                (h >> 11) as f64 / (1u64 << 53) as f64
            } else {
                s_rng.random_range(0.0..1.0)
            };
            values.push(inverse_cdf(&dist, u));
            Record { id: i as u64, values }
        })
        .collect();
    Table::new(schema, records)
}
