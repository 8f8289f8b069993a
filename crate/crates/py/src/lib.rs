//! Python bindings. Exact quantities cross the boundary as `"a/b"` strings.

use branchworlds::error::ErrorClass;
use branchworlds::fine_graining::{self, DEFAULT_MAX_ROWS};
use branchworlds::fraction::{format_fraction, parse_fraction};
use branchworlds::game::{self, check_axiom, Axiom, Exponent};
use branchworlds::literal::{self, NumberMode};
use branchworlds::norm_consistency::{estimate_p as estimate, norm_by_name, norm_report as report};
use branchworlds::sequential;
use branchworlds::world_tree::{self, BranchSpec, UniverseKind, DEFAULT_ENUMERATION_BOUND};
use branchworlds::{Error, Rational};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn py_err(e: Error) -> PyErr {
    match e.class() {
        ErrorClass::Resource => PyRuntimeError::new_err(e.to_string()),
        ErrorClass::Parse | ErrorClass::Domain => PyValueError::new_err(e.to_string()),
    }
}

fn frac(s: &str) -> PyResult<Rational> {
    parse_fraction(s).map_err(py_err)
}

fn strings(v: &[Rational]) -> Vec<String> {
    v.iter().map(format_fraction).collect()
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn branch_spec(measures: Vec<String>, n: usize, universe: &str) -> PyResult<BranchSpec> {
    let measures = measures.iter().map(|m| frac(m)).collect::<PyResult<Vec<_>>>()?;
    BranchSpec::new(UniverseKind::parse(universe).map_err(py_err)?, measures, n).map_err(py_err)
}

/// A game: rows of `(mag_p, reward)` under the rule selected by `p`.
#[pyclass(name = "Game", module = "pybranchworlds", frozen)]
struct PyGame {
    inner: game::Game,
}

#[pymethods]
impl PyGame {
    #[new]
    #[pyo3(signature = (rows, p = "2"))]
    fn new(rows: Vec<(String, String)>, p: &str) -> PyResult<Self> {
        let exponent = Exponent::parse(p).map_err(py_err)?;
        let pairs = rows
            .iter()
            .map(|(m, r)| Ok((frac(m)?, frac(r)?)))
            .collect::<PyResult<Vec<_>>>()?;
        let inner = game::Game::from_pairs(exponent, &pairs).map_err(py_err)?;
        Ok(Self { inner })
    }

    /// Parse a JSON game literal; `approx` accepts decimals and amplitudes.
    #[staticmethod]
    #[pyo3(signature = (text, p = None, approx = false, max_den = 1_000_000))]
    fn from_json(text: &str, p: Option<&str>, approx: bool, max_den: u64) -> PyResult<Self> {
        let exponent = p.map(Exponent::parse).transpose().map_err(py_err)?;
        let mode = if approx {
            NumberMode::Approximate { max_denominator: max_den }
        } else {
            NumberMode::Exact
        };
        let inner = literal::parse_game(text, exponent.as_ref(), mode).map_err(py_err)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> String {
        literal::game_to_json(&self.inner)
    }

    #[getter]
    fn p(&self) -> String {
        self.inner.exponent().to_string()
    }

    #[getter]
    fn magnitudes(&self) -> Vec<String> {
        self.inner.magnitudes().map(format_fraction).collect()
    }

    #[getter]
    fn rewards(&self) -> Vec<String> {
        self.inner.rewards().map(format_fraction).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Game({})", literal::game_to_json(&self.inner))
    }

    fn is_symmetric(&self) -> bool {
        self.inner.is_symmetric()
    }

    fn value(&self) -> PyResult<String> {
        game::value(&self.inner).map(|v| format_fraction(&v)).map_err(py_err)
    }

    fn probabilities(&self) -> PyResult<Vec<String>> {
        let probs = game::subjective_probabilities(&self.inner).map_err(py_err)?;
        Ok(strings(probs.entries()))
    }

    #[pyo3(signature = (max_rows = DEFAULT_MAX_ROWS))]
    fn value_via_symmetrization(&self, max_rows: u64) -> PyResult<String> {
        fine_graining::value_via_symmetrization(&self.inner, max_rows)
            .map(|v| format_fraction(&v))
            .map_err(py_err)
    }

    /// Returns the symmetric game and its trace as a dict.
    #[pyo3(signature = (max_rows = DEFAULT_MAX_ROWS))]
    fn symmetrize<'py>(&self, py: Python<'py>, max_rows: u64) -> PyResult<(PyGame, Bound<'py, PyAny>)> {
        let (sym, trace) = fine_graining::symmetrize(&self.inner, max_rows).map_err(py_err)?;
        let trace = to_py(py, &literal::trace_report(&trace))?;
        Ok((PyGame { inner: sym }, trace))
    }
}

/// World proportions of the classes `(1)`, `(2,1)`, `(2,2)`.
#[pyfunction]
#[pyo3(signature = (c1, c2, universe = "kent"))]
fn once_or_twice(c1: &str, c2: &str, universe: &str) -> PyResult<Vec<String>> {
    let universe = UniverseKind::parse(universe).map_err(py_err)?;
    let probs = sequential::once_or_twice(&frac(c1)?, &frac(c2)?, &universe).map_err(py_err)?;
    Ok(strings(probs.entries()))
}

/// Exact masses of the count of `outcome` (0-based) over `n` repetitions.
#[pyfunction]
#[pyo3(signature = (measures, n, outcome = 0, universe = "pnorm:2", bound = DEFAULT_ENUMERATION_BOUND))]
fn frequency_distribution(measures: Vec<String>, n: usize, outcome: usize, universe: &str, bound: u64) -> PyResult<Vec<String>> {
    let spec = branch_spec(measures, n, universe)?;
    let d = world_tree::frequency_distribution(&spec, outcome, bound).map_err(py_err)?;
    Ok(strings(&d.masses))
}

#[pyfunction]
#[pyo3(signature = (measures, n, epsilon, outcome = 0, universe = "pnorm:2"))]
fn hoeffding<'py>(
    py: Python<'py>,
    measures: Vec<String>,
    n: usize,
    epsilon: &str,
    outcome: usize,
    universe: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = branch_spec(measures, n, universe)?;
    let r = world_tree::hoeffding_check(&spec, outcome, &frac(epsilon)?).map_err(py_err)?;
    to_py(py, &r)
}

/// Histogram of sampled counts, indexed by count.
#[pyfunction]
#[pyo3(signature = (measures, n, runs, seed = 0, outcome = 0, universe = "pnorm:2"))]
fn sample_frequencies(measures: Vec<String>, n: usize, runs: u64, seed: u64, outcome: usize, universe: &str) -> PyResult<Vec<u64>> {
    let spec = branch_spec(measures, n, universe)?;
    let h = world_tree::sample_frequencies(&spec, outcome, runs, seed).map_err(py_err)?;
    Ok(h.counts)
}

/// Rows of `(world_class, measure, payoff)`.
#[pyfunction]
#[pyo3(signature = (c1 = "1", c2 = "1", stake = "1"))]
fn dutch_book(c1: &str, c2: &str, stake: &str) -> PyResult<Vec<(String, String, String)>> {
    let ledger = sequential::dutch_book_demo(&frac(c1)?, &frac(c2)?, &frac(stake)?).map_err(py_err)?;
    Ok(ledger
        .rows
        .iter()
        .map(|r| (r.world_class.clone(), format_fraction(&r.measure), format_fraction(&r.payoff)))
        .collect())
}

/// Substitution report for a sequential game literal.
#[pyfunction]
fn check_substitution<'py>(py: Python<'py>, literal_json: &str, universe: &str) -> PyResult<Bound<'py, PyAny>> {
    let g = literal::parse_sequential(literal_json, NumberMode::Exact).map_err(py_err)?;
    let universe = UniverseKind::parse(universe).map_err(py_err)?;
    to_py(py, &sequential::check_substitution(&g, &universe).map_err(py_err)?)
}

#[pyfunction]
fn estimate_p<'py>(py: Python<'py>, norm: &str) -> PyResult<Bound<'py, PyAny>> {
    let norm = norm_by_name(norm).map_err(py_err)?;
    to_py(py, &estimate(norm.as_ref()).map_err(py_err)?)
}

#[pyfunction]
fn norm_report<'py>(py: Python<'py>, norm: &str) -> PyResult<Bound<'py, PyAny>> {
    let norm = norm_by_name(norm).map_err(py_err)?;
    to_py(py, &report(norm.as_ref()))
}

/// One report per axiom for the rule selected by `p`.
#[pyfunction]
#[pyo3(signature = (p, trials = 100, seed = 0))]
fn check_axioms<'py>(py: Python<'py>, p: &str, trials: u64, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let exponent = Exponent::parse(p).map_err(py_err)?;
    let reports: Vec<_> = Axiom::ALL.iter().map(|&a| check_axiom(a, &exponent, trials, seed)).collect();
    to_py(py, &reports)
}

#[pymodule]
fn pybranchworlds(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGame>()?;
    m.add_function(wrap_pyfunction!(once_or_twice, m)?)?;
    m.add_function(wrap_pyfunction!(frequency_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(hoeffding, m)?)?;
    m.add_function(wrap_pyfunction!(sample_frequencies, m)?)?;
    m.add_function(wrap_pyfunction!(dutch_book, m)?)?;
    m.add_function(wrap_pyfunction!(check_substitution, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_p, m)?)?;
    m.add_function(wrap_pyfunction!(norm_report, m)?)?;
    m.add_function(wrap_pyfunction!(check_axioms, m)?)?;
    Ok(())
}
