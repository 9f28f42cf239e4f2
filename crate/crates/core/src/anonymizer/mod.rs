//! Partition-based anonymization: greedy multidimensional recoding and
//! centroid microaggregation, plus checkers for the guarantees a release
//! claims (k-anonymity, entropy l-diversity, t-closeness).

mod checks;
mod microagg;
mod mondrian;

pub use checks::{check_entropy_l_diversity, check_k_anonymity, check_t_closeness};
pub use microagg::microaggregate;
pub use mondrian::mondrian_anonymize;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dataset::{AttributeKind, Schema};
use crate::error::{Error, Result};

/// Comparison slack for the constraint checkers, so that an exactly-tight
/// class (e.g. m equally frequent values at l = m) is not failed by rounding.
pub const CHECK_SLACK: f64 = 1e-12;

/// One recoded quasi-identifier cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum GeneralizedValue {
    /// Closed integer interval (numeric attributes).
    Interval { lo: i64, hi: i64 },
    /// Explicit set of member codes (categorical attributes), sorted.
    ValueSet { values: Vec<i64> },
    /// Fully withheld cell; covers anything.
    Suppressed,
    /// Cluster centroid in original code space (microaggregation).
    Centroid { value: f64 },
}

impl GeneralizedValue {
    /// Whether a concrete code could have produced this cell. Centroids do
    /// not cover: locating against them is a nearest-distance decision, not
    /// a containment one.
    pub fn covers(&self, code: i64) -> bool {
        match self {
            GeneralizedValue::Interval { lo, hi } => code >= *lo && code <= *hi,
            GeneralizedValue::ValueSet { values } => values.binary_search(&code).is_ok(),
            GeneralizedValue::Suppressed => true,
            GeneralizedValue::Centroid { .. } => false,
        }
    }

    fn variant_rank(&self) -> u8 {
        match self {
            GeneralizedValue::Interval { .. } => 0,
            GeneralizedValue::ValueSet { .. } => 1,
            GeneralizedValue::Suppressed => 2,
            GeneralizedValue::Centroid { .. } => 3,
        }
    }

    pub fn cmp_canonical(&self, other: &Self) -> Ordering {
        use GeneralizedValue::*;
        match (self, other) {
            (Interval { lo: a, hi: b }, Interval { lo: c, hi: d }) => (a, b).cmp(&(c, d)),
            (ValueSet { values: a }, ValueSet { values: b }) => a.cmp(b),
            (Suppressed, Suppressed) => Ordering::Equal,
            (Centroid { value: a }, Centroid { value: b }) => a.total_cmp(b),
            (x, y) => x.variant_rank().cmp(&y.variant_rank()),
        }
    }
}

/// Canonical order on recoded QI tuples; used to sort a release's classes
/// into a deterministic, data-independent layout.
pub fn cmp_recoded_qi(a: &[GeneralizedValue], b: &[GeneralizedValue]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.cmp_canonical(y) {
            Ordering::Equal => continue,
            ord => return ord,
        }
    }
    a.len().cmp(&b.len())
}

/// A group of records published under one recoded QI tuple. Sensitive values
/// are kept exact, one per member, aligned with `member_ids` where those are
/// known. Releases parsed back from their public JSON form carry no member
/// ids (the published document only states class sizes).
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceClass {
    pub member_ids: Vec<u64>,
    pub recoded_qi: Vec<GeneralizedValue>,
    pub sensitive_values: Vec<i64>,
}

impl EquivalenceClass {
    pub fn size(&self) -> usize {
        self.sensitive_values.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Mondrian,
    Microaggregation,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::Mondrian => write!(f, "mondrian"),
            Scheme::Microaggregation => write!(f, "microaggregation"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReleaseParams {
    pub k: usize,
    pub ell: Option<f64>,
    pub t: Option<f64>,
}

/// Per-attribute z-score parameters of the table a microaggregation release
/// was built from. Needed to reproduce the distance geometry at locate time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: f64,
    pub std_dev: f64,
}

/// An anonymized release: equivalence classes partitioning the input records,
/// with the scheme and parameters it was produced under.
#[derive(Debug, Clone)]
pub struct Release {
    pub schema: Arc<Schema>,
    pub scheme: Scheme,
    pub params: ReleaseParams,
    pub classes: Vec<EquivalenceClass>,
    /// Present for microaggregation releases only; one entry per QI attribute.
    pub normalization: Option<Vec<Normalization>>,
}

impl Release {
    pub fn total_records(&self) -> usize {
        self.classes.iter().map(|c| c.size()).sum()
    }

    /// True when the in-memory release still knows which individuals sit in
    /// which class (ground truth for locator accuracy measurements).
    pub fn has_member_ids(&self) -> bool {
        self.classes.iter().all(|c| c.member_ids.len() == c.size())
    }

    pub fn class_of_id(&self, id: u64) -> Option<usize> {
        self.classes.iter().position(|c| c.member_ids.binary_search(&id).is_ok())
    }

    /// Sensitive value counts pooled over the whole release.
    pub fn sensitive_distribution(&self) -> BTreeMap<i64, usize> {
        let mut counts = BTreeMap::new();
        for c in &self.classes {
            for &v in &c.sensitive_values {
                *counts.entry(v).or_insert(0) += 1;
            }
        }
        counts
    }

    pub fn to_json_string(&self) -> Result<String> {
        let sensitive = self.schema.sensitive();
        let doc = ReleaseDoc {
            scheme: self.scheme,
            params: self.params,
            schema: (*self.schema).clone(),
            normalization: self.normalization.clone(),
            classes: self
                .classes
                .iter()
                .map(|c| ClassDoc {
                    size: c.size(),
                    recoded_qi: c.recoded_qi.clone(),
                    sensitive_values: c
                        .sensitive_values
                        .iter()
                        .map(|&v| sensitive.label_for(v))
                        .collect(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn write_json<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        Ok(std::fs::write(path, self.to_json_string()?)?)
    }

    /// Parses the public JSON form. Member ids are not part of the published
    /// document, so the resulting classes carry none.
    pub fn from_json_str(s: &str) -> Result<Release> {
        let doc: ReleaseDoc = serde_json::from_str(s)?;
        let schema = Arc::new(Schema::new(doc.schema.attributes)?);
        let sensitive = schema.sensitive().clone();
        let classes = doc
            .classes
            .into_iter()
            .map(|c| {
                let sensitive_values = c
                    .sensitive_values
                    .iter()
                    .map(|label| sensitive.code_for(label, 0))
                    .collect::<Result<Vec<i64>>>()?;
                if sensitive_values.len() != c.size {
                    return Err(Error::Schema(format!(
                        "class declares size {} but lists {} sensitive values",
                        c.size,
                        sensitive_values.len()
                    )));
                }
                Ok(EquivalenceClass {
                    member_ids: Vec::new(),
                    recoded_qi: c.recoded_qi,
                    sensitive_values,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Release {
            schema,
            scheme: doc.scheme,
            params: doc.params,
            classes,
            normalization: doc.normalization,
        })
    }

    pub fn from_json_file<P: AsRef<Path>>(path: P) -> Result<Release> {
        Release::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// Writes the release the way it would be published as a table: one row
    /// per record, recoded QI cells, exact sensitive value.
    pub fn write_anonymized_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let qi = self.schema.qi_indices();
        let sensitive = self.schema.sensitive();
        let mut header: Vec<String> =
            qi.iter().map(|&i| self.schema.attributes[i].name.clone()).collect();
        header.push(sensitive.name.clone());
        w.write_record(&header)?;
        for class in &self.classes {
            for &v in &class.sensitive_values {
                let mut row: Vec<String> = class
                    .recoded_qi
                    .iter()
                    .zip(&qi)
                    .map(|(g, &ai)| render_generalized(g, &self.schema.attributes[ai]))
                    .collect();
                row.push(sensitive.label_for(v));
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn render_generalized(g: &GeneralizedValue, attr: &crate::dataset::AttributeSchema) -> String {
    match g {
        GeneralizedValue::Interval { lo, hi } => {
            if lo == hi {
                attr.label_for(*lo)
            } else {
                format!("[{lo},{hi}]")
            }
        }
        GeneralizedValue::ValueSet { values } => {
            if values.len() == 1 {
                attr.label_for(values[0])
            } else {
                let labels: Vec<String> = values.iter().map(|&v| attr.label_for(v)).collect();
                format!("{{{}}}", labels.join("|"))
            }
        }
        GeneralizedValue::Suppressed => "*".into(),
        GeneralizedValue::Centroid { value } => format!("{value}"),
    }
}

#[derive(Serialize, Deserialize)]
struct ReleaseDoc {
    scheme: Scheme,
    params: ReleaseParams,
    schema: Schema,
    normalization: Option<Vec<Normalization>>,
    classes: Vec<ClassDoc>,
}

#[derive(Serialize, Deserialize)]
struct ClassDoc {
    size: usize,
    recoded_qi: Vec<GeneralizedValue>,
    sensitive_values: Vec<String>,
}

/// Matches a QI attribute kind to its recoded representation.
pub(crate) fn recode_members(
    kind: AttributeKind,
    values: impl Iterator<Item = i64>,
) -> GeneralizedValue {
    match kind {
        AttributeKind::Numeric => {
            let mut lo = i64::MAX;
            let mut hi = i64::MIN;
            for v in values {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            GeneralizedValue::Interval { lo, hi }
        }
        AttributeKind::Categorical => {
            let mut set: Vec<i64> = values.collect();
            set.sort_unstable();
            set.dedup();
            GeneralizedValue::ValueSet { values: set }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{AttributeDomain, AttributeSchema, Role};

    fn schema() -> Arc<Schema> {
        Arc::new(
            Schema::new(vec![
                AttributeSchema {
                    name: "age".into(),
                    domain: AttributeDomain::Numeric { min: 0, max: 120 },
                    role: Role::QuasiIdentifier,
                },
                AttributeSchema {
                    name: "condition".into(),
                    domain: AttributeDomain::Categorical {
                        values: vec!["flu".into(), "cold".into()],
                    },
                    role: Role::Sensitive,
                },
            ])
            .unwrap(),
        )
    }

    #[test]
    fn interval_coverage_is_inclusive() {
        let g = GeneralizedValue::Interval { lo: 10, hi: 20 };
        assert!(g.covers(10) && g.covers(20) && g.covers(15));
        assert!(!g.covers(9) && !g.covers(21));
    }

    #[test]
    fn value_set_coverage_is_membership() {
        let g = GeneralizedValue::ValueSet { values: vec![1, 4, 9] };
        assert!(g.covers(4));
        assert!(!g.covers(2));
    }

    #[test]
    fn release_json_round_trips_without_member_ids() {
        let release = Release {
            schema: schema(),
            scheme: Scheme::Mondrian,
            params: ReleaseParams { k: 2, ell: None, t: None },
            classes: vec![EquivalenceClass {
                member_ids: vec![3, 8],
                recoded_qi: vec![GeneralizedValue::Interval { lo: 20, hi: 29 }],
                sensitive_values: vec![0, 1],
            }],
            normalization: None,
        };
        let json = release.to_json_string().unwrap();
        assert!(!json.contains("member_ids"), "published form must not leak ids");
        let parsed = Release::from_json_str(&json).unwrap();
        assert_eq!(parsed.classes.len(), 1);
        assert!(parsed.classes[0].member_ids.is_empty());
        assert_eq!(parsed.classes[0].sensitive_values, vec![0, 1]);
        assert_eq!(parsed.classes[0].recoded_qi, release.classes[0].recoded_qi);
        assert_eq!(parsed.params, release.params);
    }
}
