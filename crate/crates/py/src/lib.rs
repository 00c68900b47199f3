//! Python bindings for the gossip version-age simulator.
//!
//! Structured inputs (topology specs, configs) are passed as JSON strings in
//! the same shape the CLI reads.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gossip_age_core::config::ConfigFile;
use gossip_age_core::ctmc;
use gossip_age_core::engine::{self, Mode};
use gossip_age_core::experiments;
use gossip_age_core::metrics::{self, ScalingModel};
use gossip_age_core::topology::{self, TopologySpec};
use gossip_age_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Guard(_) | Error::Analysis(_) | Error::Io { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn load_config(config_json: &str, overrides: Vec<String>) -> PyResult<ConfigFile> {
    ConfigFile::from_json(config_json, &overrides, None).map_err(py_err)
}

#[pyclass(name = "RateExpr", frozen)]
struct PyRateExpr(experiments::RateExpr);

#[pymethods]
impl PyRateExpr {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        experiments::parse_rate_expr(text).map(PyRateExpr).map_err(py_err)
    }

    fn eval(&self, n: usize) -> f64 {
        self.0.eval(n)
    }

    #[getter]
    fn coeff(&self) -> f64 {
        self.0.coeff()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("RateExpr({:?})", self.0.to_string())
    }
}

#[pyfunction]
fn parse_rate_expr(text: &str) -> PyResult<PyRateExpr> {
    PyRateExpr::new(text)
}

#[pyclass(name = "Graph", frozen)]
struct PyGraph(topology::Graph);

#[pymethods]
impl PyGraph {
    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    fn edge_count(&self) -> usize {
        self.0.edge_count()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.0.edges().into_iter().map(|[a, b]| (a, b)).collect()
    }

    fn neighbors(&self, node: usize) -> PyResult<Vec<usize>> {
        if node >= self.0.n() {
            return Err(PyValueError::new_err(format!("node {node} out of range")));
        }
        Ok(self.0.neighbors(node).to_vec())
    }

    fn degrees(&self) -> Vec<usize> {
        self.0.degrees()
    }

    fn is_connected(&self) -> bool {
        self.0.is_connected()
    }
}

/// `spec_json` is e.g. `{"kind": "grid"}` or `{"kind": "custom", "edges": [[0, 1]]}`.
#[pyfunction]
fn build_topology(spec_json: &str, n: usize) -> PyResult<PyGraph> {
    let spec: TopologySpec =
        serde_json::from_str(spec_json).map_err(|e| PyValueError::new_err(format!("bad topology spec: {e}")))?;
    topology::build_topology(&spec, n).map(PyGraph).map_err(py_err)
}

/// Per-node outgoing gossip rates, aligned with `Graph.neighbors(i)`.
#[pyfunction]
fn gossip_rates(graph: &PyGraph, lam: f64) -> Vec<Vec<f64>> {
    let table = topology::gossip_rates(&graph.0, lam);
    (0..graph.0.n()).map(|i| table.node_rates(i).to_vec()).collect()
}

#[pyclass(name = "Chain", frozen)]
struct PyChain(ctmc::Chain);

#[pymethods]
impl PyChain {
    #[new]
    fn new(q: Vec<f64>, p: Vec<Vec<f64>>) -> PyResult<Self> {
        ctmc::Chain::new(q, p).map(PyChain).map_err(py_err)
    }

    fn generator(&self) -> Vec<Vec<f64>> {
        let q = self.0.generator();
        q.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    fn stationary(&self) -> PyResult<Vec<f64>> {
        Ok(self.0.stationary().map_err(py_err)?.iter().copied().collect())
    }

    /// `(mean, variance)` of the time between successive entries to `target`.
    fn return_time_moments(&self, target: usize) -> PyResult<(f64, f64)> {
        let m = ctmc::return_time_moments(&self.0, target).map_err(py_err)?;
        Ok((m.mean, m.variance))
    }

    #[pyo3(signature = (target, returns, seed=0))]
    fn mc_return_moments(&self, target: usize, returns: usize, seed: u64) -> PyResult<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = ctmc::mc_return_moments(&self.0, target, returns, &mut rng).map_err(py_err)?;
        Ok((m.mean, m.variance))
    }

    #[pyo3(signature = (horizon, seed=0))]
    fn occupancy(&self, horizon: f64, seed: u64) -> PyResult<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let traj = ctmc::sample_trajectory(&self.0, &mut rng, horizon).map_err(py_err)?;
        Ok(ctmc::occupancy(&traj, self.0.num_states(), horizon))
    }

    /// Full analysis (generator, stationary law, return moments) as JSON.
    fn analyze_json(&self) -> PyResult<String> {
        let a = ctmc::analyze(&self.0).map_err(py_err)?;
        serde_json::to_string(&a).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }
}

#[pyclass(name = "RunResult", frozen, get_all)]
struct PyRunResult {
    n: usize,
    seed: u64,
    network_avg_age: f64,
    per_node_age: Vec<f64>,
    source_updates: u64,
    gossip_pushes: u64,
    switches: u64,
}

impl From<engine::RunResult> for PyRunResult {
    fn from(r: engine::RunResult) -> Self {
        PyRunResult {
            n: r.n,
            seed: r.seed,
            network_avg_age: r.network_avg_age,
            per_node_age: r.per_node_age,
            source_updates: r.event_counts.source_updates,
            gossip_pushes: r.event_counts.gossip_pushes,
            switches: r.event_counts.switches,
        }
    }
}

/// Runs one full-gossip simulation from a JSON config. `overrides` use the
/// CLI's `key.path=value` syntax.
#[pyfunction]
#[pyo3(signature = (config_json, overrides=Vec::new(), naive=false))]
fn simulate(py: Python<'_>, config_json: &str, overrides: Vec<String>, naive: bool) -> PyResult<PyRunResult> {
    let mut cfg = load_config(config_json, overrides)?.sim_config();
    cfg.mode = Mode::FullGossip;
    let result = py.detach(|| if naive { engine::run_naive(&cfg) } else { engine::run(&cfg) });
    result.map(Into::into).map_err(py_err)
}

/// `(spread_time, source_count)` for each trial.
#[pyfunction]
#[pyo3(signature = (config_json, trials, jobs=1, overrides=Vec::new()))]
fn spread_experiment(
    py: Python<'_>,
    config_json: &str,
    trials: usize,
    jobs: usize,
    overrides: Vec<String>,
) -> PyResult<Vec<(f64, u64)>> {
    let mut cfg = load_config(config_json, overrides)?.sim_config();
    cfg.mode = Mode::SpreadExperiment;
    let out = py
        .detach(|| experiments::run_spread_trials(&cfg, trials, jobs))
        .map_err(py_err)?;
    Ok(out.into_iter().map(|o| (o.spread_time, o.source_count)).collect())
}

#[pyfunction]
#[pyo3(signature = (n, lam, trials, seed=0))]
fn spread_stage_times(n: usize, lam: f64, trials: usize, seed: u64) -> PyResult<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    engine::spread_stage_times(n, lam, &mut rng, trials).map_err(py_err)
}

#[pyfunction]
fn expected_spread_time(n: usize, lam: f64) -> f64 {
    engine::expected_spread_time(n, lam)
}

#[pyfunction]
fn preset_ids() -> Vec<&'static str> {
    experiments::PRESET_IDS.to_vec()
}

/// Runs a preset sweep and returns the versioned sweep CSV.
#[pyfunction]
#[pyo3(signature = (id, seed=0, jobs=1, replicates=None, horizon=None, n_list=None))]
fn run_preset(
    py: Python<'_>,
    id: &str,
    seed: u64,
    jobs: usize,
    replicates: Option<usize>,
    horizon: Option<f64>,
    n_list: Option<Vec<usize>>,
) -> PyResult<String> {
    let mut preset = experiments::preset(id).map_err(py_err)?;
    if let Some(r) = replicates {
        preset.replicates = r;
    }
    if let Some(h) = horizon {
        preset.set_horizon(h);
    }
    if let Some(ns) = n_list {
        preset.n_list = ns;
    }
    let table = py
        .detach(|| experiments::run_preset(&preset, seed, jobs))
        .map_err(py_err)?;
    Ok(table.to_csv())
}

#[pyclass(name = "ScalingFit", frozen, get_all)]
struct PyScalingFit {
    model: String,
    coefficient: f64,
    exponent: Option<f64>,
    offset: Option<f64>,
    r_squared: f64,
}

impl From<metrics::ScalingFit> for PyScalingFit {
    fn from(f: metrics::ScalingFit) -> Self {
        PyScalingFit {
            model: model_name(f.model).into(),
            coefficient: f.coefficient,
            exponent: f.exponent,
            offset: f.offset,
            r_squared: f.r_squared,
        }
    }
}

fn model_name(m: ScalingModel) -> &'static str {
    match m {
        ScalingModel::PowerLaw => "power_law",
        ScalingModel::Logarithmic => "logarithmic",
    }
}

/// `model` is `"power_law"` or `"logarithmic"`; `points` are `(n, mean_age)`.
#[pyfunction]
fn fit_scaling(points: Vec<(f64, f64)>, model: &str) -> PyResult<PyScalingFit> {
    let model = match model {
        "power_law" => ScalingModel::PowerLaw,
        "logarithmic" => ScalingModel::Logarithmic,
        other => return Err(PyValueError::new_err(format!("unknown model {other:?}"))),
    };
    metrics::fit_scaling(&points, model).map(Into::into).map_err(py_err)
}

/// Returns `(preferred_model, power_law_fit, logarithmic_fit)`.
#[pyfunction]
fn compare_models(points: Vec<(f64, f64)>) -> PyResult<(String, PyScalingFit, PyScalingFit)> {
    let c = metrics::compare_models(&points).map_err(py_err)?;
    Ok((model_name(c.preferred).into(), c.power_law.into(), c.logarithmic.into()))
}

#[pymodule]
fn gossip_age(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRateExpr>()?;
    m.add_class::<PyGraph>()?;
    m.add_class::<PyChain>()?;
    m.add_class::<PyRunResult>()?;
    m.add_class::<PyScalingFit>()?;
    m.add_function(wrap_pyfunction!(parse_rate_expr, m)?)?;
    m.add_function(wrap_pyfunction!(build_topology, m)?)?;
    m.add_function(wrap_pyfunction!(gossip_rates, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(spread_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(spread_stage_times, m)?)?;
    m.add_function(wrap_pyfunction!(expected_spread_time, m)?)?;
    m.add_function(wrap_pyfunction!(preset_ids, m)?)?;
    m.add_function(wrap_pyfunction!(run_preset, m)?)?;
    m.add_function(wrap_pyfunction!(fit_scaling, m)?)?;
    m.add_function(wrap_pyfunction!(compare_models, m)?)?;
    m.add("CSV_VERSION_HEADER", gossip_age_core::CSV_VERSION_HEADER)?;
    Ok(())
}
