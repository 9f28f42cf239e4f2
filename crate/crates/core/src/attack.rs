//! The intersection attack on overlapping anonymized releases. For each
//! targeted individual, the adversary locates their equivalence class in
//! every release from the true QI tuple, reads off the distinct sensitive
//! values of each class, and intersects those sets. The intersection bounds
//! the individual's secret from all releases combined; its size against each
//! single release quantifies how much anonymity the combination destroyed.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::anonymizer::{EquivalenceClass, GeneralizedValue, Release, Scheme};
use crate::dataset::{Schema, Table};
use crate::error::{Error, Result};

/// Slack for confidence-threshold comparisons (1/3 et al. round trip).
const CONF_SLACK: f64 = 1e-12;

/// Confidence levels reported by default: fractions the adversary pins the
/// secret to (1 = unique disclosure, 0.2 = one of five).
pub const DEFAULT_CONFIDENCE_GRID: [f64; 5] = [1.0, 0.5, 1.0 / 3.0, 0.25, 0.2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocateMethod {
    /// Containment test against recoded cells; sound for partition recoding.
    ExactCover,
    /// Nearest centroid in z-score space; a heuristic, not sound.
    NearestCentroid,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LocatorResult {
    pub class_index: Option<usize>,
    pub method: LocateMethod,
    pub matched: bool,
    /// More than one class covered the tuple; the lowest index was taken.
    pub ambiguous: bool,
}

/// Finds the equivalence class a QI tuple belongs to. Mondrian releases use
/// exact cover; microaggregation releases take the nearest centroid under the
/// release's published normalization. Ties resolve to the lowest class index.
pub fn locate(release: &Release, qi: &[i64]) -> Result<LocatorResult> {
    let expect = release.schema.qi_indices().len();
    if qi.len() != expect {
        return Err(Error::InvalidArgument(format!(
            "qi tuple has {} values, schema declares {expect} quasi-identifiers",
            qi.len()
        )));
    }
    match release.scheme {
        Scheme::Mondrian => {
            let mut hit = None;
            let mut ambiguous = false;
            for (i, class) in release.classes.iter().enumerate() {
                if class.recoded_qi.iter().zip(qi).all(|(g, &v)| g.covers(v)) {
                    if hit.is_none() {
                        hit = Some(i);
                    } else {
                        ambiguous = true;
                        break;
                    }
                }
            }
            Ok(LocatorResult {
                class_index: hit,
                method: LocateMethod::ExactCover,
                matched: hit.is_some(),
                ambiguous,
            })
        }
        Scheme::Microaggregation => {
            let nz = release.normalization.as_ref().ok_or_else(|| {
                Error::Schema("microaggregation release lacks normalization parameters".into())
            })?;
            let mut best: Option<(usize, f64)> = None;
            for (i, class) in release.classes.iter().enumerate() {
                let mut d2 = 0.0;
                for ((g, &v), z) in class.recoded_qi.iter().zip(qi).zip(nz) {
                    let c = match g {
                        GeneralizedValue::Centroid { value } => *value,
                        other => {
                            return Err(Error::Schema(format!(
                                "microaggregation class holds a non-centroid cell {other:?}"
                            )))
                        }
                    };
                    if z.std_dev > 0.0 {
                        let d = (v as f64 - c) / z.std_dev;
                        d2 += d * d;
                    }
                }
                let better = match best {
                    None => true,
                    Some((_, bd)) => d2 < bd,
                };
                if better {
                    best = Some((i, d2));
                }
            }
            Ok(LocatorResult {
                class_index: best.map(|(i, _)| i),
                method: LocateMethod::NearestCentroid,
                matched: best.is_some(),
                ambiguous: false,
            })
        }
    }
}

/// The distinct sensitive values a class exposes.
pub fn sensitive_value_set(class: &EquivalenceClass) -> BTreeSet<i64> {
    class.sensitive_values.iter().copied().collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct IndividualAttackOutcome {
    pub individual_id: u64,
    /// Located class per release; None where no class covered the tuple.
    pub class_indices: Vec<Option<usize>>,
    pub located_in_all: bool,
    pub ambiguous_in_any: bool,
    /// Distinct sensitive values per release (empty when not located there).
    pub sensitive_sets: Vec<Vec<String>>,
    /// Intersection over all releases.
    pub intersection: Vec<String>,
    /// |sensitive set| per release: the anonymity each release grants alone.
    pub prior_ea: Vec<usize>,
    /// |intersection|: what is left after combining releases.
    pub posterior_ea: usize,
    /// min over releases of prior_ea, minus posterior_ea. Never negative.
    pub anonymity_drop: usize,
    /// 1 / posterior_ea; 0 when the intersection came up empty (possible only
    /// under heuristic locators pointing at wrong classes).
    pub confidence: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AttackAggregates {
    pub population: usize,
    pub located: usize,
    pub not_located: usize,
    pub ambiguous: usize,
    /// Located individuals whose anonymity dropped at all.
    pub vulnerable: usize,
    /// (confidence level, percentage of located individuals at or above it).
    pub pvp: Vec<(f64, Option<f64>)>,
    pub avg_prior_ea: Vec<Option<f64>>,
    pub avg_posterior_ea: Option<f64>,
    pub avg_anonymity_drop: Option<f64>,
    /// Mean size of the located class, per release.
    pub avg_class_size: Vec<Option<f64>>,
    /// Fraction of located individuals whose located class really contains
    /// them, per release; None when the release carries no member ids.
    pub locator_hit_rate: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AttackReport {
    #[serde(skip)]
    pub schema: Arc<Schema>,
    pub confidence_grid: Vec<f64>,
    pub aggregates: AttackAggregates,
    pub outcomes: Vec<IndividualAttackOutcome>,
}

/// Runs the intersection attack for every individual in `population`
/// (id plus true QI tuple) against two or more releases over the same schema.
pub fn intersection_attack(
    releases: &[Release],
    population: &[(u64, Vec<i64>)],
    confidence_grid: &[f64],
) -> Result<AttackReport> {
    if releases.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "intersection attack needs at least two releases, got {}",
            releases.len()
        )));
    }
    let schema = Arc::clone(&releases[0].schema);
    for r in &releases[1..] {
        if *r.schema != *schema {
            return Err(Error::InvalidArgument(
                "releases must share one schema for their sensitive sets to be comparable".into(),
            ));
        }
    }
    for c in confidence_grid {
        if !(*c > 0.0 && *c <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "confidence level {c} outside (0, 1]"
            )));
        }
    }
    let sensitive = schema.sensitive();

    let mut outcomes = Vec::with_capacity(population.len());
    for (id, qi) in population {
        let locs = releases
            .iter()
            .map(|r| locate(r, qi))
            .collect::<Result<Vec<LocatorResult>>>()?;
        let located_in_all = locs.iter().all(|l| l.matched);
        let ambiguous_in_any = locs.iter().any(|l| l.ambiguous);
        let class_indices: Vec<Option<usize>> = locs.iter().map(|l| l.class_index).collect();

        let (sets, intersection) = if located_in_all {
            let sets: Vec<BTreeSet<i64>> = class_indices
                .iter()
                .zip(releases)
                .map(|(ci, r)| sensitive_value_set(&r.classes[ci.unwrap()]))
                .collect();
            let mut inter = sets[0].clone();
            for s in &sets[1..] {
                inter = inter.intersection(s).copied().collect();
            }
            (sets, inter)
        } else {
            (Vec::new(), BTreeSet::new())
        };

        let prior_ea: Vec<usize> = sets.iter().map(|s| s.len()).collect();
        let posterior_ea = intersection.len();
        let anonymity_drop = if located_in_all {
            prior_ea.iter().min().copied().unwrap_or(0) - posterior_ea
        } else {
            0
        };
        let confidence = if posterior_ea > 0 { 1.0 / posterior_ea as f64 } else { 0.0 };
        outcomes.push(IndividualAttackOutcome {
            individual_id: *id,
            class_indices,
            located_in_all,
            ambiguous_in_any,
            sensitive_sets: sets
                .iter()
                .map(|s| s.iter().map(|&v| sensitive.label_for(v)).collect())
                .collect(),
            intersection: intersection.iter().map(|&v| sensitive.label_for(v)).collect(),
            prior_ea,
            posterior_ea,
            anonymity_drop,
            confidence,
        });
    }
    outcomes.sort_by_key(|o| o.individual_id);

    let aggregates = aggregate(&outcomes, releases, population, confidence_grid);
    Ok(AttackReport {
        schema,
        confidence_grid: confidence_grid.to_vec(),
        aggregates,
        outcomes,
    })
}

fn aggregate(
    outcomes: &[IndividualAttackOutcome],
    releases: &[Release],
    population: &[(u64, Vec<i64>)],
    grid: &[f64],
) -> AttackAggregates {
    let located: Vec<&IndividualAttackOutcome> =
        outcomes.iter().filter(|o| o.located_in_all).collect();
    let nl = located.len();
    let mean = |sum: f64| if nl > 0 { Some(sum / nl as f64) } else { None };

    let pvp = grid
        .iter()
        .map(|&c| {
            let v = if nl > 0 {
                let hits = located.iter().filter(|o| o.confidence >= c - CONF_SLACK).count();
                Some(100.0 * hits as f64 / nl as f64)
            } else {
                None
            };
            (c, v)
        })
        .collect();

    let mut avg_prior_ea = Vec::new();
    let mut avg_class_size = Vec::new();
    let mut locator_hit_rate = Vec::new();
    for (j, release) in releases.iter().enumerate() {
        avg_prior_ea.push(mean(located.iter().map(|o| o.prior_ea[j] as f64).sum()));
        avg_class_size.push(mean(
            located
                .iter()
                .map(|o| release.classes[o.class_indices[j].unwrap()].size() as f64)
                .sum(),
        ));
        if release.has_member_ids() && nl > 0 {
            let mut present = 0usize;
            let mut hits = 0usize;
            for o in &located {
                if let Some(truth) = release.class_of_id(o.individual_id) {
                    present += 1;
                    if Some(truth) == o.class_indices[j] {
                        hits += 1;
                    }
                }
            }
            locator_hit_rate
                .push(if present > 0 { Some(hits as f64 / present as f64) } else { None });
        } else {
            locator_hit_rate.push(None);
        }
    }

    AttackAggregates {
        population: population.len(),
        located: nl,
        not_located: outcomes.len() - nl,
        ambiguous: outcomes.iter().filter(|o| o.ambiguous_in_any).count(),
        vulnerable: located.iter().filter(|o| o.anonymity_drop > 0).count(),
        pvp,
        avg_prior_ea,
        avg_posterior_ea: mean(located.iter().map(|o| o.posterior_ea as f64).sum()),
        avg_anonymity_drop: mean(located.iter().map(|o| o.anonymity_drop as f64).sum()),
        avg_class_size,
        locator_hit_rate,
    }
}

/// Percentage of located individuals whose confidence reaches `confidence`.
pub fn pvp(report: &AttackReport, confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence level {confidence} outside (0, 1]"
        )));
    }
    let located: Vec<&IndividualAttackOutcome> =
        report.outcomes.iter().filter(|o| o.located_in_all).collect();
    if located.is_empty() {
        return Err(Error::UndefinedMetric(
            "vulnerable-population percentage over zero located individuals".into(),
        ));
    }
    let hits = located.iter().filter(|o| o.confidence >= confidence - CONF_SLACK).count();
    Ok(100.0 * hits as f64 / located.len() as f64)
}

impl AttackReport {
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        Ok(std::fs::write(path, self.to_json_string()?)?)
    }

    /// One row per aggregate metric (and per release or confidence level
    /// where the metric is indexed by one).
    pub fn write_summary_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["metric", "release", "confidence", "value"])?;
        let a = &self.aggregates;
        let plain = [
            ("population", a.population as f64),
            ("located", a.located as f64),
            ("not_located", a.not_located as f64),
            ("ambiguous", a.ambiguous as f64),
            ("vulnerable", a.vulnerable as f64),
        ];
        for (name, v) in plain {
            w.write_record([name, "", "", &format!("{v}")])?;
        }
        let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        w.write_record(["avg_posterior_ea", "", "", &opt(a.avg_posterior_ea)])?;
        w.write_record(["avg_anonymity_drop", "", "", &opt(a.avg_anonymity_drop)])?;
        for (c, v) in &a.pvp {
            w.write_record(["pvp", "", &format!("{c}"), &opt(*v)])?;
        }
        for (j, v) in a.avg_prior_ea.iter().enumerate() {
            w.write_record(["avg_prior_ea", &format!("{}", j + 1), "", &opt(*v)])?;
        }
        for (j, v) in a.avg_class_size.iter().enumerate() {
            w.write_record(["avg_class_size", &format!("{}", j + 1), "", &opt(*v)])?;
        }
        for (j, v) in a.locator_hit_rate.iter().enumerate() {
            w.write_record(["locator_hit_rate", &format!("{}", j + 1), "", &opt(*v)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Builds the attack population (id, true QI tuple) for `ids` out of the
/// source table the adversary's background knowledge comes from.
pub fn population_from_table(table: &Table, ids: &[u64]) -> Result<Vec<(u64, Vec<i64>)>> {
    ids.iter()
        .map(|&id| {
            let rec = table
                .record_by_id(id)
                .ok_or_else(|| Error::InvalidArgument(format!("id {id} not in table")))?;
            Ok((id, table.qi_of(rec)))
        })
        .collect()
}
