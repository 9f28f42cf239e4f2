//! Fixed-size centroid clustering. Records are z-score normalized per QI
//! attribute; while at least 2k remain, the record farthest from the mean of
//! the remainder seeds a cluster with its k-1 nearest neighbors; the final
//! fewer-than-2k records form one last cluster. Every cluster size lands in
//! [k, 2k-1]. Published QI cells are the per-attribute centroids of the
//! cluster in original code space; sensitive values stay exact.

use std::sync::Arc;

use crate::dataset::Table;
use crate::error::{Error, Result};

use super::{
    cmp_recoded_qi, EquivalenceClass, GeneralizedValue, Normalization, Release, ReleaseParams,
    Scheme,
};

pub fn microaggregate(table: &Table, k: usize) -> Result<Release> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if k > table.len() {
        return Err(Error::Infeasible(format!(
            "k = {k} exceeds the table size {}",
            table.len()
        )));
    }

    let schema = Arc::clone(&table.schema);
    let qi = schema.qi_indices();
    let s_idx = schema.sensitive_index();
    let n = table.len();

    let normalization: Vec<Normalization> = qi
        .iter()
        .map(|&a| {
            let mean =
                table.records.iter().map(|r| r.values[a] as f64).sum::<f64>() / n as f64;
            let var = table
                .records
                .iter()
                .map(|r| {
                    let d = r.values[a] as f64 - mean;
                    d * d
                })
                .sum::<f64>()
                / n as f64;
            Normalization { mean, std_dev: var.sqrt() }
        })
        .collect();

    // z-scores; a constant attribute contributes 0 to every distance.
    let z: Vec<Vec<f64>> = table
        .records
        .iter()
        .map(|r| {
            qi.iter()
                .zip(&normalization)
                .map(|(&a, nz)| {
                    if nz.std_dev > 0.0 {
                        (r.values[a] as f64 - nz.mean) / nz.std_dev
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let dist2 = |x: &[f64], y: &[f64]| -> f64 {
        x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
    };

    let mut remaining: Vec<usize> = (0..n).collect();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    while remaining.len() >= 2 * k {
        let dim = qi.len();
        let mut mean = vec![0.0; dim];
        for &m in &remaining {
            for (j, v) in z[m].iter().enumerate() {
                mean[j] += v;
            }
        }
        for v in &mut mean {
            *v /= remaining.len() as f64;
        }
        // Farthest record from the current mean; ties go to the lowest index.
        let &far = remaining
            .iter()
            .max_by(|&&x, &&y| {
                dist2(&z[x], &mean)
                    .total_cmp(&dist2(&z[y], &mean))
                    .then(y.cmp(&x))
            })
            .expect("remaining is non-empty");
        let mut by_dist: Vec<usize> =
            remaining.iter().copied().filter(|&m| m != far).collect();
        by_dist.sort_by(|&x, &y| {
            dist2(&z[x], &z[far]).total_cmp(&dist2(&z[y], &z[far])).then(x.cmp(&y))
        });
        let mut cluster = vec![far];
        cluster.extend(by_dist.iter().take(k - 1));
        remaining.retain(|m| !cluster.contains(m));
        clusters.push(cluster);
    }
    if !remaining.is_empty() {
        clusters.push(remaining);
    }

    let mut classes: Vec<EquivalenceClass> = clusters
        .into_iter()
        .map(|mut members| {
            members.sort_by_key(|&m| table.records[m].id);
            let recoded_qi = qi
                .iter()
                .map(|&a| {
                    let c = members.iter().map(|&m| table.records[m].values[a] as f64).sum::<f64>()
                        / members.len() as f64;
                    GeneralizedValue::Centroid { value: c }
                })
                .collect();
            EquivalenceClass {
                member_ids: members.iter().map(|&m| table.records[m].id).collect(),
                recoded_qi,
                sensitive_values: members.iter().map(|&m| table.records[m].values[s_idx]).collect(),
            }
        })
        .collect();
    classes.sort_by(|a, b| {
        cmp_recoded_qi(&a.recoded_qi, &b.recoded_qi).then_with(|| a.member_ids.cmp(&b.member_ids))
    });

    Ok(Release {
        schema,
        scheme: Scheme::Microaggregation,
        params: ReleaseParams { k, ell: None, t: None },
        classes,
        normalization: Some(normalization),
    })
}
