//! Microdata tables: typed schemas, CSV ingestion, and seeded overlapping subsets.
//!
//! Values are stored integer-coded: numeric attributes keep their value,
//! categorical attributes are replaced by the index of the value in the
//! declared domain list. All downstream modules work on codes and only go
//! back to labels for output.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    QuasiIdentifier,
    Sensitive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AttributeDomain {
    /// Closed integer range, inclusive on both ends.
    Numeric { min: i64, max: i64 },
    /// Ordered list of admissible labels; a value's code is its index here.
    Categorical { values: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub name: String,
    #[serde(flatten)]
    pub domain: AttributeDomain,
    pub role: Role,
}

impl AttributeSchema {
    pub fn kind(&self) -> AttributeKind {
        match self.domain {
            AttributeDomain::Numeric { .. } => AttributeKind::Numeric,
            AttributeDomain::Categorical { .. } => AttributeKind::Categorical,
        }
    }

    /// Parses a raw CSV field into its integer code, enforcing the domain.
    pub fn code_for(&self, raw: &str, line: usize) -> Result<i64> {
        match &self.domain {
            AttributeDomain::Numeric { min, max } => {
                let v: i64 = raw.parse().map_err(|_| Error::Parse {
                    line,
                    msg: format!("attribute {:?}: expected an integer, got {raw:?}", self.name),
                })?;
                if v < *min || v > *max {
                    return Err(Error::Domain {
                        attribute: self.name.clone(),
                        value: raw.to_string(),
                    });
                }
                Ok(v)
            }
            AttributeDomain::Categorical { values } => values
                .iter()
                .position(|x| x == raw)
                .map(|i| i as i64)
                .ok_or_else(|| Error::Domain {
                    attribute: self.name.clone(),
                    value: raw.to_string(),
                }),
        }
    }

    /// True when `code` is a possible value of this attribute.
    pub fn code_in_domain(&self, code: i64) -> bool {
        match &self.domain {
            AttributeDomain::Numeric { min, max } => code >= *min && code <= *max,
            AttributeDomain::Categorical { values } => {
                code >= 0 && (code as usize) < values.len()
            }
        }
    }

    /// Renders a code back into its external label.
    pub fn label_for(&self, code: i64) -> String {
        match &self.domain {
            AttributeDomain::Numeric { .. } => code.to_string(),
            AttributeDomain::Categorical { values } => values
                .get(code as usize)
                .cloned()
                .unwrap_or_else(|| format!("#{code}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub attributes: Vec<AttributeSchema>,
}

impl Schema {
    /// Builds a schema, enforcing the structural invariants: unique names,
    /// exactly one sensitive attribute, non-degenerate domains.
    pub fn new(attributes: Vec<AttributeSchema>) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::Schema("no attributes declared".into()));
        }
        let mut names = HashSet::new();
        for a in &attributes {
            if !names.insert(a.name.clone()) {
                return Err(Error::Schema(format!("duplicate attribute name {:?}", a.name)));
            }
            if a.name == "id" {
                return Err(Error::Schema("attribute name \"id\" is reserved".into()));
            }
            match &a.domain {
                AttributeDomain::Numeric { min, max } => {
                    if min > max {
                        return Err(Error::Schema(format!(
                            "attribute {:?}: min {min} exceeds max {max}",
                            a.name
                        )));
                    }
                }
                AttributeDomain::Categorical { values } => {
                    if values.is_empty() {
                        return Err(Error::Schema(format!(
                            "attribute {:?}: empty categorical domain",
                            a.name
                        )));
                    }
                    let mut seen = HashSet::new();
                    for v in values {
                        if !seen.insert(v) {
                            return Err(Error::Schema(format!(
                                "attribute {:?}: duplicate domain value {v:?}",
                                a.name
                            )));
                        }
                    }
                }
            }
        }
        let sensitive = attributes.iter().filter(|a| a.role == Role::Sensitive).count();
        if sensitive != 1 {
            return Err(Error::Schema(format!(
                "expected exactly one sensitive attribute, found {sensitive}"
            )));
        }
        Ok(Schema { attributes })
    }

    pub fn sensitive_index(&self) -> usize {
        self.attributes
            .iter()
            .position(|a| a.role == Role::Sensitive)
            .expect("validated at construction")
    }

    pub fn qi_indices(&self) -> Vec<usize> {
        self.attributes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.role == Role::QuasiIdentifier)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn sensitive(&self) -> &AttributeSchema {
        &self.attributes[self.sensitive_index()]
    }

    /// Parses the flat key/value schema text format. Blocks are introduced by
    /// an `attribute = <name>` line; `kind`, `role` and the domain keys
    /// (`min`/`max` or `values`) follow in any order. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        struct Block {
            name: String,
            kind: Option<String>,
            role: Option<String>,
            min: Option<i64>,
            max: Option<i64>,
            values: Option<Vec<String>>,
            line: usize,
        }
        fn finish(b: Block) -> Result<AttributeSchema> {
            let kind = b.kind.ok_or_else(|| Error::Schema(format!(
                "attribute {:?}: missing kind", b.name
            )))?;
            let role = match b.role.as_deref() {
                Some("quasi-identifier") => Role::QuasiIdentifier,
                Some("sensitive") => Role::Sensitive,
                Some(other) => {
                    return Err(Error::Schema(format!(
                        "attribute {:?}: unknown role {other:?}", b.name
                    )))
                }
                None => return Err(Error::Schema(format!("attribute {:?}: missing role", b.name))),
            };
            let domain = match kind.as_str() {
                "numeric" => AttributeDomain::Numeric {
                    min: b.min.ok_or_else(|| Error::Schema(format!(
                        "attribute {:?}: numeric kind requires min", b.name
                    )))?,
                    max: b.max.ok_or_else(|| Error::Schema(format!(
                        "attribute {:?}: numeric kind requires max", b.name
                    )))?,
                },
                "categorical" => AttributeDomain::Categorical {
                    values: b.values.ok_or_else(|| Error::Schema(format!(
                        "attribute {:?}: categorical kind requires values", b.name
                    )))?,
                },
                other => {
                    return Err(Error::Schema(format!(
                        "attribute {:?}: unknown kind {other:?}", b.name
                    )))
                }
            };
            Ok(AttributeSchema { name: b.name, domain, role })
        }

        let mut blocks: Vec<Block> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(Error::Parse {
                line,
                msg: format!("expected key = value, got {content:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key == "attribute" {
                blocks.push(Block {
                    name: value.to_string(),
                    kind: None,
                    role: None,
                    min: None,
                    max: None,
                    values: None,
                    line,
                });
                continue;
            }
            let b = blocks.last_mut().ok_or(Error::Parse {
                line,
                msg: format!("key {key:?} before any attribute block"),
            })?;
            match key {
                "kind" => b.kind = Some(value.to_string()),
                "role" => b.role = Some(value.to_string()),
                "min" | "max" => {
                    let v: i64 = value.parse().map_err(|_| Error::Parse {
                        line,
                        msg: format!("{key}: expected an integer, got {value:?}"),
                    })?;
                    if key == "min" {
                        b.min = Some(v);
                    } else {
                        b.max = Some(v);
                    }
                }
                "values" => {
                    b.values = Some(value.split(',').map(|s| s.trim().to_string()).collect())
                }
                other => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("unknown key {other:?}"),
                    })
                }
            }
            let _ = b.line;
        }
        Schema::new(blocks.into_iter().map(finish).collect::<Result<Vec<_>>>()?)
    }

    pub fn from_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        Schema::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for a in &self.attributes {
            let _ = writeln!(out, "attribute = {}", a.name);
            match &a.domain {
                AttributeDomain::Numeric { min, max } => {
                    let _ = writeln!(out, "kind = numeric");
                    let _ = writeln!(out, "min = {min}");
                    let _ = writeln!(out, "max = {max}");
                }
                AttributeDomain::Categorical { values } => {
                    let _ = writeln!(out, "kind = categorical");
                    let _ = writeln!(out, "values = {}", values.join(", "));
                }
            }
            let role = match a.role {
                Role::QuasiIdentifier => "quasi-identifier",
                Role::Sensitive => "sensitive",
            };
            let _ = writeln!(out, "role = {role}");
            out.push('\n');
        }
        out
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        Ok(std::fs::write(path, self.to_text())?)
    }
}

/// One individual's row: a stable id plus integer-coded values, one per
/// schema attribute, in schema order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub id: u64,
    pub values: Vec<i64>,
}

#[derive(Debug, Clone)]
pub struct Table {
    pub schema: Arc<Schema>,
    pub records: Vec<Record>,
}

impl Table {
    /// Builds a table, enforcing unique ids, correct arity and domain membership.
    pub fn new(schema: Arc<Schema>, records: Vec<Record>) -> Result<Self> {
        let mut ids = HashSet::new();
        for r in &records {
            if !ids.insert(r.id) {
                return Err(Error::InvalidArgument(format!("duplicate individual id {}", r.id)));
            }
            if r.values.len() != schema.attributes.len() {
                return Err(Error::InvalidArgument(format!(
                    "record {}: {} values for {} attributes",
                    r.id,
                    r.values.len(),
                    schema.attributes.len()
                )));
            }
            for (a, &v) in schema.attributes.iter().zip(&r.values) {
                if !a.code_in_domain(v) {
                    return Err(Error::Domain {
                        attribute: a.name.clone(),
                        value: a.label_for(v),
                    });
                }
            }
        }
        Ok(Table { schema, records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Reads an RFC-4180 CSV file with a header row. Header names must match
    /// the schema attribute names in order; a single extra column named `id`
    /// may appear anywhere and supplies individual ids. Without it, ids are
    /// the 0-based row index.
    pub fn load_csv<P: AsRef<Path>>(path: P, schema: Arc<Schema>) -> Result<Table> {
        let file = std::fs::File::open(path)?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(file);
        let mut rows = reader.records();

        let header = match rows.next() {
            Some(h) => h.map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?,
            None => return Err(Error::Parse { line: 1, msg: "missing header row".into() }),
        };
        let mut id_col: Option<usize> = None;
        let mut attr_cols: Vec<usize> = Vec::new();
        for (i, name) in header.iter().enumerate() {
            if name == "id" {
                if id_col.is_some() {
                    return Err(Error::Parse { line: 1, msg: "multiple id columns".into() });
                }
                id_col = Some(i);
            } else {
                attr_cols.push(i);
            }
        }
        if attr_cols.len() != schema.attributes.len()
            || attr_cols
                .iter()
                .zip(&schema.attributes)
                .any(|(&c, a)| header.get(c) != Some(a.name.as_str()))
        {
            let got: Vec<&str> = header.iter().collect();
            return Err(Error::Parse {
                line: 1,
                msg: format!(
                    "header {:?} does not match schema attributes {:?}",
                    got,
                    schema.attributes.iter().map(|a| &a.name).collect::<Vec<_>>()
                ),
            });
        }

        let mut records = Vec::new();
        for (i, row) in rows.enumerate() {
            let line = i + 2;
            let row = row.map_err(|e| Error::Parse { line, msg: e.to_string() })?;
            if row.len() != header.len() {
                return Err(Error::Parse {
                    line,
                    msg: format!("{} fields, expected {}", row.len(), header.len()),
                });
            }
            let id = match id_col {
                Some(c) => row[c].parse::<u64>().map_err(|_| Error::Parse {
                    line,
                    msg: format!("id: expected an unsigned integer, got {:?}", &row[c]),
                })?,
                None => i as u64,
            };
            let values = attr_cols
                .iter()
                .zip(&schema.attributes)
                .map(|(&c, a)| a.code_for(&row[c], line))
                .collect::<Result<Vec<i64>>>()?;
            records.push(Record { id, values });
        }
        Table::new(schema, records)
    }

    /// Writes the table back out with an explicit `id` column, so that a
    /// save/load round trip is the identity.
    pub fn save_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["id".to_string()];
        header.extend(self.schema.attributes.iter().map(|a| a.name.clone()));
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![r.id.to_string()];
            row.extend(
                self.schema
                    .attributes
                    .iter()
                    .zip(&r.values)
                    .map(|(a, &v)| a.label_for(v)),
            );
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Empirical Shannon entropy of one attribute, in nats.
    pub fn attribute_entropy(&self, attribute: &str) -> Result<f64> {
        let idx = self.schema.attribute_index(attribute).ok_or_else(|| {
            Error::InvalidArgument(format!("unknown attribute {attribute:?}"))
        })?;
        if self.records.is_empty() {
            return Err(Error::EmptyTable(format!(
                "entropy of {attribute:?} over zero records"
            )));
        }
        let mut counts = std::collections::BTreeMap::new();
        for r in &self.records {
            *counts.entry(r.values[idx]).or_insert(0usize) += 1;
        }
        Ok(entropy_from_counts(counts.values().copied(), self.records.len()))
    }

    /// QI values of one record, in schema QI order.
    pub fn qi_of(&self, record: &Record) -> Vec<i64> {
        self.schema.qi_indices().iter().map(|&i| record.values[i]).collect()
    }

    pub fn record_by_id(&self, id: u64) -> Option<&Record> {
        self.records.iter().find(|r| r.id == id)
    }
}

pub(crate) fn entropy_from_counts<I: IntoIterator<Item = usize>>(counts: I, total: usize) -> f64 {
    let total = total as f64;
    let mut h = 0.0;
    for c in counts {
        if c > 0 {
            let p = c as f64 / total;
            h -= p * p.ln();
        }
    }
    h.max(0.0)
}

/// How to carve overlapping subsets out of one source table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapDesign {
    pub subset_sizes: Vec<usize>,
    pub overlap_size: usize,
    pub seed: u64,
}

pub struct OverlapSample {
    pub subsets: Vec<Table>,
    /// The designated individuals present in every subset, in source order.
    pub overlap_ids: Vec<u64>,
}

/// Draws one subset per requested size. A designated overlap set of exactly
/// `overlap_size` individuals appears in every subset; the rest of each
/// subset is sampled without replacement from the remaining source records,
/// independently per subset. Fully determined by the design seed.
pub fn sample_overlapping_subsets(source: &Table, design: &OverlapDesign) -> Result<OverlapSample> {
    if design.subset_sizes.is_empty() {
        return Err(Error::InvalidArgument("no subset sizes given".into()));
    }
    if design.overlap_size == 0 {
        return Err(Error::InvalidArgument("overlap size must be at least 1".into()));
    }
    let n = source.len();
    for &s in &design.subset_sizes {
        if s < design.overlap_size {
            return Err(Error::InvalidArgument(format!(
                "subset size {s} is smaller than the overlap size {}",
                design.overlap_size
            )));
        }
        if s > n {
            return Err(Error::Infeasible(format!(
                "subset size {s} exceeds the source table ({n} records)"
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(design.seed);
    let mut overlap_idx: Vec<usize> =
        rand::seq::index::sample(&mut rng, n, design.overlap_size).into_vec();
    overlap_idx.sort_unstable();
    let in_overlap: HashSet<usize> = overlap_idx.iter().copied().collect();
    let rest: Vec<usize> = (0..n).filter(|i| !in_overlap.contains(i)).collect();

    let mut subsets = Vec::with_capacity(design.subset_sizes.len());
    for &size in &design.subset_sizes {
        let extra = size - design.overlap_size;
        let mut chosen = overlap_idx.clone();
        chosen.extend(
            rand::seq::index::sample(&mut rng, rest.len(), extra)
                .into_iter()
                .map(|i| rest[i]),
        );
        chosen.sort_unstable();
        let records = chosen.iter().map(|&i| source.records[i].clone()).collect();
        subsets.push(Table { schema: source.schema.clone(), records });
    }
    Ok(OverlapSample {
        subsets,
        overlap_ids: overlap_idx.iter().map(|&i| source.records[i].id).collect(),
    })
}
