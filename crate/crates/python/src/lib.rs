//! Python bindings over the core crate: tables, the two anonymizers, the
//! intersection attack, and the mechanism checkers. Reports cross the
//! boundary as plain dicts so they drop straight into pandas or json.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList, PyModule};

use std::sync::Arc;

fn err(e: releak::Error) -> PyErr {
    match e {
        releak::Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        serde_json::Value::Null => py.None().into_bound(py),
        serde_json::Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.into_any()
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any()
            }
        }
        serde_json::Value::String(s) => s.into_pyobject(py)?.into_any(),
        serde_json::Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        serde_json::Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, json_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn to_py_dict<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

/// Attribute declarations for a microdata table.
#[pyclass(frozen)]
struct Schema {
    inner: Arc<releak::dataset::Schema>,
}

#[pymethods]
impl Schema {
    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        Ok(Schema { inner: Arc::new(releak::dataset::Schema::from_file(path).map_err(err)?) })
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Schema { inner: Arc::new(releak::dataset::Schema::parse(text).map_err(err)?) })
    }

    fn attribute_names(&self) -> Vec<String> {
        self.inner.attributes.iter().map(|a| a.name.clone()).collect()
    }

    fn sensitive_attribute(&self) -> String {
        self.inner.sensitive().name.clone()
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __repr__(&self) -> String {
        format!(
            "Schema({} attributes, sensitive={:?})",
            self.inner.attributes.len(),
            self.inner.sensitive().name
        )
    }
}

/// An in-memory microdata table with integer-coded values.
#[pyclass(frozen)]
struct Table {
    inner: releak::dataset::Table,
}

#[pymethods]
impl Table {
    #[staticmethod]
    fn load_csv(path: &str, schema: &Schema) -> PyResult<Self> {
        let inner = releak::dataset::Table::load_csv(path, Arc::clone(&schema.inner))
            .map_err(err)?;
        Ok(Table { inner })
    }

    /// Seeded synthetic table: numeric quasi-identifier columns and one
    /// categorical sensitive column with the requested entropy in nats.
    #[staticmethod]
    #[pyo3(signature = (records, qi_domains, sensitive_domain, entropy, correlation=0.0, qi_seed=0, sensitive_seed=0))]
    fn synthetic(
        records: usize,
        qi_domains: Vec<usize>,
        sensitive_domain: usize,
        entropy: f64,
        correlation: f64,
        qi_seed: u64,
        sensitive_seed: u64,
    ) -> PyResult<Self> {
        let spec = releak::experiment::SyntheticSpec {
            records,
            qi_domains,
            sensitive_domain,
            entropy,
            correlation,
        };
        let inner = releak::experiment::generate_synthetic(&spec, qi_seed, sensitive_seed)
            .map_err(err)?;
        Ok(Table { inner })
    }

    fn save_csv(&self, path: &str) -> PyResult<()> {
        self.inner.save_csv(path).map_err(err)
    }

    fn attribute_entropy(&self, attribute: &str) -> PyResult<f64> {
        self.inner.attribute_entropy(attribute).map_err(err)
    }

    /// The quasi-identifier tuple of a record id, for building attack
    /// populations.
    fn qi_of_id(&self, id: u64) -> PyResult<Vec<i64>> {
        let record = self
            .inner
            .record_by_id(id)
            .ok_or_else(|| PyValueError::new_err(format!("no record with id {id}")))?;
        Ok(self.inner.qi_of(record))
    }

    fn ids(&self) -> Vec<u64> {
        self.inner.records.iter().map(|r| r.id).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Table({} records)", self.inner.len())
    }
}

/// Draws overlapping subsets: a designated overlap of `overlap` ids appears
/// in every subset. Returns (subsets, overlap_ids).
#[pyfunction]
fn sample_overlapping_subsets(
    table: &Table,
    subset_sizes: Vec<usize>,
    overlap: usize,
    seed: u64,
) -> PyResult<(Vec<Table>, Vec<u64>)> {
    let design = releak::dataset::OverlapDesign {
        subset_sizes,
        overlap_size: overlap,
        seed,
    };
    let sample =
        releak::dataset::sample_overlapping_subsets(&table.inner, &design).map_err(err)?;
    Ok((
        sample.subsets.into_iter().map(|inner| Table { inner }).collect(),
        sample.overlap_ids,
    ))
}

/// An anonymized release: equivalence classes with recoded quasi-identifiers.
#[pyclass(frozen)]
struct Release {
    inner: releak::anonymizer::Release,
}

#[pymethods]
impl Release {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Release { inner: releak::anonymizer::Release::from_json_str(text).map_err(err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json_string().map_err(err)
    }

    fn write_json(&self, path: &str) -> PyResult<()> {
        self.inner.write_json(path).map_err(err)
    }

    fn write_anonymized_csv(&self, path: &str) -> PyResult<()> {
        self.inner.write_anonymized_csv(path).map_err(err)
    }

    fn class_count(&self) -> usize {
        self.inner.classes.len()
    }

    fn class_sizes(&self) -> Vec<usize> {
        self.inner.classes.iter().map(|c| c.size()).collect()
    }

    fn scheme(&self) -> String {
        self.inner.scheme.to_string()
    }

    fn __repr__(&self) -> String {
        format!(
            "Release({}, k={}, {} classes)",
            self.inner.scheme,
            self.inner.params.k,
            self.inner.classes.len()
        )
    }
}

/// Greedy multidimensional partitioning with optional entropy-diversity and
/// closeness constraints.
#[pyfunction]
#[pyo3(signature = (table, k, ell=None, t=None))]
fn mondrian_anonymize(table: &Table, k: usize, ell: Option<f64>, t: Option<f64>) -> PyResult<Release> {
    Ok(Release {
        inner: releak::anonymizer::mondrian_anonymize(&table.inner, k, ell, t).map_err(err)?,
    })
}

/// Fixed-size-range clustering that publishes per-class centroids.
#[pyfunction]
fn microaggregate(table: &Table, k: usize) -> PyResult<Release> {
    Ok(Release { inner: releak::anonymizer::microaggregate(&table.inner, k).map_err(err)? })
}

#[pyfunction]
fn check_k_anonymity(release: &Release, k: usize) -> bool {
    releak::anonymizer::check_k_anonymity(&release.inner, k)
}

#[pyfunction]
fn check_entropy_l_diversity(release: &Release, ell: f64) -> PyResult<bool> {
    releak::anonymizer::check_entropy_l_diversity(&release.inner, ell).map_err(err)
}

#[pyfunction]
fn check_t_closeness(release: &Release, t: f64) -> PyResult<bool> {
    releak::anonymizer::check_t_closeness(&release.inner, t).map_err(err)
}

/// Runs the intersection attack. `population` is a list of
/// (id, qi_tuple) pairs; returns the full report as a dict.
#[pyfunction]
#[pyo3(signature = (releases, population, confidence_grid=None))]
fn intersection_attack<'py>(
    py: Python<'py>,
    releases: Vec<PyRef<'py, Release>>,
    population: Vec<(u64, Vec<i64>)>,
    confidence_grid: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyAny>> {
    let releases: Vec<releak::anonymizer::Release> =
        releases.iter().map(|r| r.inner.clone()).collect();
    let grid = confidence_grid
        .unwrap_or_else(|| releak::attack::DEFAULT_CONFIDENCE_GRID.to_vec());
    let report =
        releak::attack::intersection_attack(&releases, &population, &grid).map_err(err)?;
    to_py_dict(py, &report)
}

/// A randomized mechanism over row-vector databases, as an explicit
/// probability matrix.
#[pyclass(frozen)]
struct Mechanism {
    inner: releak::dp::Mechanism,
}

fn binary_space(n: usize, default_row: usize) -> PyResult<releak::dp::DatabaseSpace> {
    releak::dp::DatabaseSpace::binary(n)
        .and_then(|s| s.with_default_row(default_row))
        .map_err(err)
}

#[pymethods]
impl Mechanism {
    fn transcripts(&self) -> Vec<String> {
        self.inner.transcripts().to_vec()
    }

    fn database_count(&self) -> usize {
        self.inner.space.database_count()
    }

    fn row(&self, db: usize) -> Vec<f64> {
        self.inner.row(db).to_vec()
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json_string().map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Mechanism { inner: releak::dp::Mechanism::from_json_str(text).map_err(err)? })
    }

    fn __repr__(&self) -> String {
        format!(
            "Mechanism({} databases x {} transcripts)",
            self.inner.space.database_count(),
            self.inner.transcript_count()
        )
    }
}

/// Per-bit randomized response over n binary rows; flips each bit with
/// probability `flip`.
#[pyfunction]
#[pyo3(signature = (n, flip, default_row=0))]
fn randomized_response(n: usize, flip: f64, default_row: usize) -> PyResult<Mechanism> {
    let space = binary_space(n, default_row)?;
    Ok(Mechanism { inner: releak::dp::randomized_response(&space, flip).map_err(err)? })
}

#[pyfunction]
fn randomized_response_epsilon(flip: f64) -> f64 {
    releak::dp::randomized_response_epsilon(flip)
}

/// Bit-count query with truncated two-sided geometric noise.
#[pyfunction]
#[pyo3(signature = (n, epsilon, default_row=0))]
fn geometric_counter(n: usize, epsilon: f64, default_row: usize) -> PyResult<Mechanism> {
    let space = binary_space(n, default_row)?;
    Ok(Mechanism {
        inner: releak::dp::truncated_geometric_counter(&space, epsilon).map_err(err)?,
    })
}

/// Publishes one uniformly chosen row in the clear; the canonical
/// non-private mechanism.
#[pyfunction]
#[pyo3(signature = (n, default_row=0))]
fn publish_random_record(n: usize, default_row: usize) -> PyResult<Mechanism> {
    let space = binary_space(n, default_row)?;
    Ok(Mechanism { inner: releak::dp::publish_random_record(&space).map_err(err)? })
}

/// Exhaustive indistinguishability check over all neighboring database
/// pairs.
#[pyfunction]
fn dp_check(mechanism: &Mechanism, epsilon: f64, delta: f64) -> PyResult<bool> {
    releak::dp::dp_check(&mechanism.inner, epsilon, delta).map_err(err)
}

#[pyfunction]
fn statistical_difference(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    releak::dp::statistical_difference(&p, &q).map_err(err)
}

fn belief_from(prior: Option<Vec<f64>>, mech: &Mechanism) -> PyResult<releak::dp::Belief> {
    match prior {
        None => Ok(releak::dp::Belief::uniform(&mech.inner.space)),
        Some(v) => releak::dp::Belief::new(v).map_err(err),
    }
}

/// Compares each individual's real posterior against the posterior of the
/// game where that individual's row is replaced by the default. `prior`
/// defaults to uniform. Returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (mechanism, epsilon, delta, prior=None))]
fn semantic_privacy_eval<'py>(
    py: Python<'py>,
    mechanism: &Mechanism,
    epsilon: f64,
    delta: f64,
    prior: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyAny>> {
    let belief = belief_from(prior, mechanism)?;
    let report = releak::dp::semantic_privacy_eval(&mechanism.inner, &belief, epsilon, delta)
        .map_err(err)?;
    to_py_dict(py, &report)
}

/// Semantic evaluation restricted to the set of databases whose neighbors
/// are all indistinguishable; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (mechanism, epsilon, delta, prior=None))]
fn good_set_semantic_eval<'py>(
    py: Python<'py>,
    mechanism: &Mechanism,
    epsilon: f64,
    delta: f64,
    prior: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyAny>> {
    let belief = belief_from(prior, mechanism)?;
    let report = releak::dp::good_set_semantic_eval(&mechanism.inner, &belief, epsilon, delta)
        .map_err(err)?;
    to_py_dict(py, &report)
}

#[pymodule]
fn releak_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Schema>()?;
    m.add_class::<Table>()?;
    m.add_class::<Release>()?;
    m.add_class::<Mechanism>()?;
    m.add_function(wrap_pyfunction!(sample_overlapping_subsets, m)?)?;
    m.add_function(wrap_pyfunction!(mondrian_anonymize, m)?)?;
    m.add_function(wrap_pyfunction!(microaggregate, m)?)?;
    m.add_function(wrap_pyfunction!(check_k_anonymity, m)?)?;
    m.add_function(wrap_pyfunction!(check_entropy_l_diversity, m)?)?;
    m.add_function(wrap_pyfunction!(check_t_closeness, m)?)?;
    m.add_function(wrap_pyfunction!(intersection_attack, m)?)?;
    m.add_function(wrap_pyfunction!(randomized_response, m)?)?;
    m.add_function(wrap_pyfunction!(randomized_response_epsilon, m)?)?;
    m.add_function(wrap_pyfunction!(geometric_counter, m)?)?;
    m.add_function(wrap_pyfunction!(publish_random_record, m)?)?;
    m.add_function(wrap_pyfunction!(dp_check, m)?)?;
    m.add_function(wrap_pyfunction!(statistical_difference, m)?)?;
    m.add_function(wrap_pyfunction!(semantic_privacy_eval, m)?)?;
    m.add_function(wrap_pyfunction!(good_set_semantic_eval, m)?)?;
    Ok(())
}
