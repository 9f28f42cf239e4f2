//! Greedy top-down multidimensional partitioning. Each class is split on the
//! QI attribute with the widest range (normalized by the attribute's range
//! over the whole input table), at the lower median value, with records equal
//! to the median going left. A split is kept only when both halves satisfy
//! every active constraint; a class where no attribute admits such a split is
//! emitted as-is.

use std::sync::Arc;

use crate::dataset::Table;
use crate::error::{Error, Result};

use super::checks::{class_entropy, tv_distance_to_table};
use super::{
    cmp_recoded_qi, recode_members, EquivalenceClass, Release, ReleaseParams, Scheme, CHECK_SLACK,
};

pub fn mondrian_anonymize(
    table: &Table,
    k: usize,
    ell: Option<f64>,
    t: Option<f64>,
) -> Result<Release> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if k > table.len() {
        return Err(Error::Infeasible(format!(
            "k = {k} exceeds the table size {}",
            table.len()
        )));
    }
    if let Some(l) = ell {
        if !(l >= 1.0) {
            return Err(Error::InvalidArgument(format!("l must be at least 1, got {l}")));
        }
    }
    if let Some(tv) = t {
        if !(0.0..=1.0).contains(&tv) {
            return Err(Error::InvalidArgument(format!("t must lie in [0, 1], got {tv}")));
        }
    }

    let schema = Arc::clone(&table.schema);
    let qi = schema.qi_indices();
    let s_idx = schema.sensitive_index();
    let sensitive_of = |rec: usize| table.records[rec].values[s_idx];

    // Whole-table sensitive distribution: reference for t-closeness, and the
    // feasibility bound for the entropy constraint (no split can beat it).
    let mut table_counts = std::collections::BTreeMap::new();
    for r in &table.records {
        *table_counts.entry(r.values[s_idx]).or_insert(0usize) += 1;
    }
    if let Some(l) = ell {
        let all: Vec<i64> = table.records.iter().map(|r| r.values[s_idx]).collect();
        if class_entropy(&all) + CHECK_SLACK < l.ln() {
            return Err(Error::Infeasible(format!(
                "whole table fails entropy l-diversity at l = {l}"
            )));
        }
    }

    let table_width: Vec<f64> = qi
        .iter()
        .map(|&a| {
            let mut lo = i64::MAX;
            let mut hi = i64::MIN;
            for r in &table.records {
                lo = lo.min(r.values[a]);
                hi = hi.max(r.values[a]);
            }
            (hi - lo) as f64
        })
        .collect();

    let acceptable = |members: &[usize]| -> bool {
        if members.len() < k {
            return false;
        }
        let sv: Vec<i64> = members.iter().map(|&m| sensitive_of(m)).collect();
        if let Some(l) = ell {
            if class_entropy(&sv) + CHECK_SLACK < l.ln() {
                return false;
            }
        }
        if let Some(tv) = t {
            if tv_distance_to_table(&sv, &table_counts, table.len()) > tv + CHECK_SLACK {
                return false;
            }
        }
        true
    };

    let mut done: Vec<Vec<usize>> = Vec::new();
    let mut work: Vec<Vec<usize>> = vec![(0..table.len()).collect()];
    while let Some(class) = work.pop() {
        match best_split(table, &qi, &table_width, &class, &acceptable) {
            Some((left, right)) => {
                work.push(left);
                work.push(right);
            }
            None => done.push(class),
        }
    }

    let mut classes: Vec<EquivalenceClass> = done
        .into_iter()
        .map(|mut members| {
            members.sort_by_key(|&m| table.records[m].id);
            let recoded_qi = qi
                .iter()
                .map(|&a| {
                    recode_members(
                        schema.attributes[a].kind(),
                        members.iter().map(|&m| table.records[m].values[a]),
                    )
                })
                .collect();
            EquivalenceClass {
                member_ids: members.iter().map(|&m| table.records[m].id).collect(),
                recoded_qi,
                sensitive_values: members.iter().map(|&m| sensitive_of(m)).collect(),
            }
        })
        .collect();
    classes.sort_by(|a, b| {
        cmp_recoded_qi(&a.recoded_qi, &b.recoded_qi).then_with(|| a.member_ids.cmp(&b.member_ids))
    });

    Ok(Release {
        schema,
        scheme: Scheme::Mondrian,
        params: ReleaseParams { k, ell, t },
        classes,
        normalization: None,
    })
}

/// Tries attributes in order of decreasing normalized width (ties by schema
/// order) and returns the first median split whose halves both pass.
fn best_split(
    table: &Table,
    qi: &[usize],
    table_width: &[f64],
    class: &[usize],
    acceptable: &dyn Fn(&[usize]) -> bool,
) -> Option<(Vec<usize>, Vec<usize>)> {
    if class.len() < 2 {
        return None;
    }
    let mut order: Vec<(f64, usize)> = qi
        .iter()
        .enumerate()
        .map(|(qpos, &a)| {
            let mut lo = i64::MAX;
            let mut hi = i64::MIN;
            for &m in class {
                lo = lo.min(table.records[m].values[a]);
                hi = hi.max(table.records[m].values[a]);
            }
            let w = if table_width[qpos] > 0.0 {
                (hi - lo) as f64 / table_width[qpos]
            } else {
                0.0
            };
            (w, qpos)
        })
        .collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));

    for &(_, qpos) in &order {
        let a = qi[qpos];
        let mut sorted = class.to_vec();
        sorted.sort_by_key(|&m| (table.records[m].values[a], m));
        let median = table.records[sorted[(sorted.len() - 1) / 2]].values[a];
        let cut = sorted.partition_point(|&m| table.records[m].values[a] <= median);
        if cut == sorted.len() {
            continue; // every record is at or below the median: nothing to cut
        }
        let (left, right) = sorted.split_at(cut);
        if acceptable(left) && acceptable(right) {
            return Some((left.to_vec(), right.to_vec()));
        }
    }
    None
}
