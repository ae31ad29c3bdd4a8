//! Python bindings for the `heartcbr` case-based reasoning engine.

use std::collections::HashMap;
use std::fs::File;
use std::io::BufReader;

use heartcbr::baselines::{
    sigmoid as sigmoid_fn, trapezoidal_membership as trap_fn,
    triangular_membership as tri_fn, TrapezoidalParams, TriangularParams,
};
use heartcbr::engine::run_cycle;
use heartcbr::{
    evaluate, fit_minmax, parse_csv, split_sequential, validate_case as validate_fn, Case,
    CaseBase, FeatureVector, NormalizationParams, SimilarityConfig, Target, ValidationMode,
    ATTRIBUTE_NAMES, NUM_ATTRIBUTES,
};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn mode(strict: bool) -> ValidationMode {
    if strict {
        ValidationMode::Strict
    } else {
        ValidationMode::Lenient
    }
}

fn target(t: u8) -> PyResult<Target> {
    match t {
        0 => Ok(Target::Absent),
        1 => Ok(Target::Present),
        other => Err(value_err(format!("target must be 0 or 1, got {other}"))),
    }
}

fn config(weights: Option<Vec<f64>>) -> PyResult<SimilarityConfig> {
    match weights {
        Some(w) => SimilarityConfig::from_slice(&w).map_err(value_err),
        None => Ok(SimilarityConfig::default()),
    }
}

fn features(values: &[f64]) -> PyResult<FeatureVector> {
    FeatureVector::try_from(values).map_err(|_| {
        value_err(format!("expected {NUM_ATTRIBUTES} values, got {}", values.len()))
    })
}

/// A query is either a dict keyed by column name or a list of 13 numbers.
fn to_case(obj: &Bound<'_, PyAny>, strict: bool) -> PyResult<Case> {
    if let Ok(dict) = obj.cast::<PyDict>() {
        let mut raw = HashMap::new();
        for (k, v) in dict.iter() {
            raw.insert(k.str()?.to_string(), v.str()?.to_string());
        }
        return validate_fn(&raw, mode(strict)).map(|v| v.case).map_err(value_err);
    }
    let values: Vec<f64> = obj.extract()?;
    Case::from_features(&features(&values)?, None).map_err(value_err)
}

fn case_dict<'py>(py: Python<'py>, case: &Case) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for (i, name) in ATTRIBUTE_NAMES.iter().enumerate() {
        let v = case.to_feature_vector().0[i];
        if *name == "oldpeak" {
            d.set_item(name, v)?;
        } else {
            d.set_item(name, v as i64)?;
        }
    }
    d.set_item("target", case.target.map(|t| t.as_u8()))?;
    Ok(d)
}

/// Validates one raw record (column name -> text). Returns the typed record
/// as a dict plus a list of lenient-mode warnings.
#[pyfunction]
#[pyo3(signature = (record, strict = false))]
fn validate_case<'py>(
    py: Python<'py>,
    record: HashMap<String, String>,
    strict: bool,
) -> PyResult<(Bound<'py, PyDict>, Vec<String>)> {
    let v = validate_fn(&record, mode(strict)).map_err(value_err)?;
    let warnings = v
        .warnings
        .iter()
        .map(|w| format!("{} = {:?}: {}", w.field, w.value, w.message))
        .collect();
    Ok((case_dict(py, &v.case)?, warnings))
}

/// A case base with its fitted min-max scaling and similarity weights.
#[pyclass]
struct CbrModel {
    cb: CaseBase,
    params: NormalizationParams,
    cfg: SimilarityConfig,
    test: Vec<Case>,
}

#[pymethods]
impl CbrModel {
    /// Builds the case base from the training split of a CSV file. The
    /// held-out rows are kept for `evaluate()`.
    #[staticmethod]
    #[pyo3(signature = (path, train_fraction = 0.6, strict = false, weights = None))]
    fn from_csv(
        path: &str,
        train_fraction: f64,
        strict: bool,
        weights: Option<Vec<f64>>,
    ) -> PyResult<Self> {
        let file = File::open(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        let parsed = parse_csv(BufReader::new(file), mode(strict)).map_err(value_err)?;
        let split = split_sequential(&parsed.cases, train_fraction).map_err(value_err)?;
        let params = fit_minmax(&split.train).map_err(value_err)?;
        Ok(Self {
            cb: split.train,
            params,
            cfg: config(weights)?,
            test: split.test,
        })
    }

    /// Builds the case base from rows of 13 numbers and 0/1 targets.
    #[staticmethod]
    #[pyo3(signature = (rows, targets, weights = None))]
    fn from_rows(rows: Vec<Vec<f64>>, targets: Vec<u8>, weights: Option<Vec<f64>>) -> PyResult<Self> {
        if rows.len() != targets.len() {
            return Err(value_err(format!(
                "{} rows but {} targets",
                rows.len(),
                targets.len()
            )));
        }
        let cases = rows
            .iter()
            .zip(targets)
            .map(|(r, t)| Case::from_features(&features(r)?, Some(target(t)?)).map_err(value_err))
            .collect::<PyResult<Vec<_>>>()?;
        let cb = CaseBase::from_cases(cases).map_err(value_err)?;
        let params = fit_minmax(&cb).map_err(value_err)?;
        Ok(Self {
            cb,
            params,
            cfg: config(weights)?,
            test: Vec::new(),
        })
    }

    fn __len__(&self) -> usize {
        self.cb.len()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.cfg.weights().to_vec()
    }

    #[getter]
    fn test_size(&self) -> usize {
        self.test.len()
    }

    /// Per-attribute `(min, max)` of the current scaling.
    #[getter]
    fn extrema(&self) -> Vec<(f64, f64)> {
        (0..NUM_ATTRIBUTES)
            .map(|i| (self.params.min(i), self.params.max(i)))
            .collect()
    }

    /// Retrieve + reuse. Returns `predicted_target`, `best_case_id` and
    /// `best_global_similarity`.
    #[pyo3(signature = (query, strict = false))]
    fn predict<'py>(
        &self,
        py: Python<'py>,
        query: &Bound<'py, PyAny>,
        strict: bool,
    ) -> PyResult<Bound<'py, PyDict>> {
        let q = to_case(query, strict)?;
        let p = heartcbr::predict(&q, &self.cb, &self.cfg, &self.params).map_err(value_err)?;
        let d = PyDict::new(py);
        d.set_item("predicted_target", p.predicted_target.as_u8())?;
        d.set_item("best_case_id", p.best_case_id.0)?;
        d.set_item("best_global_similarity", p.best_global_similarity)?;
        Ok(d)
    }

    /// Appends a solved case and re-fits the scaling. Returns the new case id.
    #[pyo3(signature = (query, solved_target, strict = false))]
    fn retain(&mut self, query: &Bound<'_, PyAny>, solved_target: u8, strict: bool) -> PyResult<u64> {
        let q = to_case(query, strict)?;
        let (id, params) =
            heartcbr::retain(&q, target(solved_target)?, &mut self.cb).map_err(value_err)?;
        self.params = params;
        Ok(id.0)
    }

    /// Predicts, then retains the query with its predicted target.
    #[pyo3(signature = (query, strict = false))]
    fn solve_and_retain(&mut self, query: &Bound<'_, PyAny>, strict: bool) -> PyResult<(u8, u64)> {
        let q = to_case(query, strict)?;
        let out = run_cycle(&q, &mut self.cb, &mut self.params, &self.cfg, true)
            .map_err(value_err)?;
        let id = self.cb.entries().last().map(|e| e.id.0).unwrap_or_default();
        Ok((out.prediction.predicted_target.as_u8(), id))
    }

    /// Evaluates the held-out rows kept by `from_csv` and returns the report
    /// as a JSON string. The model itself is not modified.
    #[pyo3(signature = (incremental_retain = false))]
    fn evaluate(&self, incremental_retain: bool) -> PyResult<String> {
        let cfg = self.cfg.clone().with_incremental_retain(incremental_retain);
        let report = evaluate(&self.test, &self.cb, &cfg, &self.params).map_err(value_err)?;
        report.to_json().map_err(value_err)
    }
}

/// Local similarity of two scaled values.
#[pyfunction]
#[pyo3(signature = (a, b, range = 1.0, degenerate = false))]
fn local_similarity(a: f64, b: f64, range: f64, degenerate: bool) -> f64 {
    heartcbr::local_similarity(a, b, range, degenerate)
}

/// Weighted global similarity of two raw 13-value records under the given
/// per-attribute extrema.
#[pyfunction]
#[pyo3(signature = (query, case, mins, maxs, weights = None))]
fn global_similarity(
    query: Vec<f64>,
    case: Vec<f64>,
    mins: Vec<f64>,
    maxs: Vec<f64>,
    weights: Option<Vec<f64>>,
) -> PyResult<f64> {
    let params =
        NormalizationParams::from_extrema(features(&mins)?.0, features(&maxs)?.0).map_err(value_err)?;
    let cfg = config(weights)?;
    Ok(heartcbr::global_similarity(
        &features(&query)?,
        &features(&case)?,
        &cfg,
        &params,
    ))
}

#[pyfunction]
fn triangular_membership(x: f64, a: f64, m: f64, b: f64) -> PyResult<f64> {
    Ok(tri_fn(x, &TriangularParams::new(a, m, b).map_err(value_err)?))
}

#[pyfunction]
fn trapezoidal_membership(x: f64, a: f64, b: f64, c: f64, d: f64) -> PyResult<f64> {
    Ok(trap_fn(x, &TrapezoidalParams::new(a, b, c, d).map_err(value_err)?))
}

#[pyfunction]
fn sigmoid(y: f64) -> f64 {
    sigmoid_fn(y)
}

/// Pearson matrix of equally long columns; undefined entries are `None`.
#[pyfunction]
fn pearson<'py>(
    py: Python<'py>,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
) -> PyResult<Bound<'py, PyList>> {
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let m = heartcbr::pearson_matrix(&refs, &columns).map_err(value_err)?;
    PyList::new(py, m.values)
}

#[pymodule]
pub fn heartcbr_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<CbrModel>()?;
    m.add_function(wrap_pyfunction!(validate_case, m)?)?;
    m.add_function(wrap_pyfunction!(local_similarity, m)?)?;
    m.add_function(wrap_pyfunction!(global_similarity, m)?)?;
    m.add_function(wrap_pyfunction!(triangular_membership, m)?)?;
    m.add_function(wrap_pyfunction!(trapezoidal_membership, m)?)?;
    m.add_function(wrap_pyfunction!(sigmoid, m)?)?;
    m.add_function(wrap_pyfunction!(pearson, m)?)?;
    m.add("ATTRIBUTE_NAMES", ATTRIBUTE_NAMES.to_vec())?;
    Ok(())
}
