//! Checkers for the guarantees an anonymized release claims. All comparisons
//! carry a 1e-12 slack so exactly-tight classes are not failed by rounding.

use std::collections::BTreeMap;

use crate::dataset::entropy_from_counts;
use crate::error::{Error, Result};

use super::{Release, CHECK_SLACK};

/// Every equivalence class holds at least k records. Vacuously true for an
/// empty release.
pub fn check_k_anonymity(release: &Release, k: usize) -> bool {
    release.classes.iter().all(|c| c.size() >= k)
}

/// Entropy l-diversity: the Shannon entropy (nats) of each class's sensitive
/// values is at least ln(l).
pub fn check_entropy_l_diversity(release: &Release, ell: f64) -> Result<bool> {
    if !(ell >= 1.0) {
        return Err(Error::InvalidArgument(format!("l must be at least 1, got {ell}")));
    }
    let bound = ell.ln();
    Ok(release
        .classes
        .iter()
        .all(|c| class_entropy(&c.sensitive_values) + CHECK_SLACK >= bound))
}

/// t-closeness under total variation distance: each class's sensitive
/// distribution is within t of the whole release's.
pub fn check_t_closeness(release: &Release, t: f64) -> Result<bool> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!("t must lie in [0, 1], got {t}")));
    }
    let table = release.sensitive_distribution();
    let total = release.total_records();
    if total == 0 {
        return Ok(true);
    }
    Ok(release
        .classes
        .iter()
        .all(|c| tv_distance_to_table(&c.sensitive_values, &table, total) <= t + CHECK_SLACK))
}

pub(crate) fn class_entropy(sensitive: &[i64]) -> f64 {
    let mut counts = BTreeMap::new();
    for &v in sensitive {
        *counts.entry(v).or_insert(0usize) += 1;
    }
    entropy_from_counts(counts.values().copied(), sensitive.len())
}

pub(crate) fn tv_distance_to_table(
    sensitive: &[i64],
    table_counts: &BTreeMap<i64, usize>,
    table_total: usize,
) -> f64 {
    let mut class_counts: BTreeMap<i64, usize> = BTreeMap::new();
    for &v in sensitive {
        *class_counts.entry(v).or_insert(0) += 1;
    }
    let n_class = sensitive.len() as f64;
    let n_table = table_total as f64;
    let mut tv = 0.0;
    for (&v, &tc) in table_counts {
        let p_class = class_counts.get(&v).copied().unwrap_or(0) as f64 / n_class;
        let p_table = tc as f64 / n_table;
        tv += (p_class - p_table).abs();
    }
    // Values present in the class but absent from the pooled table cannot
    // occur: classes partition the table.
    tv / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anonymizer::{EquivalenceClass, GeneralizedValue, ReleaseParams, Scheme};
    use crate::dataset::{AttributeDomain, AttributeSchema, Role, Schema};
    use std::sync::Arc;

    fn release_with_classes(classes: Vec<Vec<i64>>) -> Release {
        let schema = Arc::new(
            Schema::new(vec![
                AttributeSchema {
                    name: "q".into(),
                    domain: AttributeDomain::Numeric { min: 0, max: 100 },
                    role: Role::QuasiIdentifier,
                },
                AttributeSchema {
                    name: "s".into(),
                    domain: AttributeDomain::Categorical {
                        values: (0..8).map(|i| format!("v{i}")).collect(),
                    },
                    role: Role::Sensitive,
                },
            ])
            .unwrap(),
        );
        let mut next = 0u64;
        let classes = classes
            .into_iter()
            .map(|sv| {
                let ids: Vec<u64> = (next..next + sv.len() as u64).collect();
                next += sv.len() as u64;
                EquivalenceClass {
                    member_ids: ids,
                    recoded_qi: vec![GeneralizedValue::Interval { lo: 0, hi: 100 }],
                    sensitive_values: sv,
                }
            })
            .collect();
        Release {
            schema,
            scheme: Scheme::Mondrian,
            params: ReleaseParams { k: 1, ell: None, t: None },
            classes,
            normalization: None,
        }
    }

    #[test]
    fn k_anonymity_checks_minimum_class_size() {
        let r = release_with_classes(vec![vec![0, 1, 2], vec![3, 3]]);
        assert!(check_k_anonymity(&r, 2));
        assert!(!check_k_anonymity(&r, 3));
        assert!(check_k_anonymity(&release_with_classes(vec![]), 10));
    }

    // Class {AIDS, Heart, Viral, Viral} has entropy
    // -(.25 ln .25 + .25 ln .25 + .5 ln .5) = 1.0397 nats: 2-diverse, not 3-diverse.
    #[test]
    fn entropy_l_diversity_on_three_of_four_distinct() {
        let r = release_with_classes(vec![vec![0, 1, 2, 2]]);
        let h = class_entropy(&r.classes[0].sensitive_values);
        assert!((h - 1.0397207708399179).abs() < 1e-12);
        assert!(check_entropy_l_diversity(&r, 2.0).unwrap());
        assert!(!check_entropy_l_diversity(&r, 3.0).unwrap());
    }

    #[test]
    fn m_equally_frequent_values_are_exactly_m_diverse() {
        for m in 1..6i64 {
            let r = release_with_classes(vec![(0..m).collect()]);
            assert!(
                check_entropy_l_diversity(&r, m as f64).unwrap(),
                "uniform class over {m} values must pass l = {m}"
            );
            if m > 1 {
                assert!(!check_entropy_l_diversity(&r, m as f64 + 0.01).unwrap());
            }
        }
    }

    #[test]
    fn t_closeness_on_a_half_half_split() {
        // Table {a,a,b,b} split into {a,a} and {b,b}: each class is at total
        // variation 1/2 from the table distribution.
        let r = release_with_classes(vec![vec![0, 0], vec![1, 1]]);
        assert!(check_t_closeness(&r, 0.5).unwrap());
        assert!(!check_t_closeness(&r, 0.4).unwrap());
        assert!(check_t_closeness(&r, 1.0).unwrap());
    }

    #[test]
    fn single_class_release_is_zero_close() {
        let r = release_with_classes(vec![vec![0, 1, 2, 2, 4]]);
        assert!(check_t_closeness(&r, 0.0).unwrap());
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let r = release_with_classes(vec![vec![0, 1]]);
        assert!(check_entropy_l_diversity(&r, 0.5).is_err());
        assert!(check_t_closeness(&r, -0.1).is_err());
        assert!(check_t_closeness(&r, 1.5).is_err());
    }
}
