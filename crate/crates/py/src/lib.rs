//! Python bindings: scenario configs, single runs, sweeps and the
//! propagation formulas.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use manet_core::kernel::RngStream;
use manet_core::metrics::{csv_row, MetricsLedger, RunLabels, CSV_HEADER};
use manet_core::radio::{self, FadingSpec, PropagationKind, RadioParams};
use manet_core::routing::Protocol;
use manet_core::sweep::{self as core_sweep, SweepGrid};
use manet_core::SimError;

fn py_err(e: SimError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_name<T: std::str::FromStr>(what: &str, s: &str) -> PyResult<T> {
    s.parse().map_err(|_| PyValueError::new_err(format!("unknown {what} `{s}`")))
}

fn py_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "None".to_string(), |v| v.to_string())
}

/// Scenario settings; every `key = value` config key is accepted by `set`.
#[pyclass(name = "ScenarioConfig", module = "manet_sim", skip_from_py_object)]
#[derive(Clone)]
struct PyScenario {
    inner: manet_core::ScenarioConfig,
}

#[pymethods]
impl PyScenario {
    #[new]
    fn new() -> Self {
        PyScenario { inner: manet_core::ScenarioConfig::default() }
    }

    /// Parses config-file text.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        manet_core::ScenarioConfig::parse(text).map(|inner| PyScenario { inner }).map_err(py_err)
    }

    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        self.inner.set(key, value).map_err(|msg| PyValueError::new_err(format!("`{key}`: {msg}")))
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(py_err)
    }

    #[getter]
    fn nodes(&self) -> usize {
        self.inner.nodes
    }

    #[getter]
    fn connections(&self) -> usize {
        self.inner.traffic.connections
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn sim_time(&self) -> f64 {
        self.inner.sim_time
    }

    #[getter]
    fn protocol(&self) -> &'static str {
        self.inner.protocol.name()
    }

    #[getter]
    fn propagation(&self) -> &'static str {
        self.inner.propagation().name()
    }

    fn __repr__(&self) -> String {
        format!(
            "ScenarioConfig(protocol={}, propagation={}, nodes={}, connections={}, seed={}, sim_time={})",
            self.protocol(),
            self.propagation(),
            self.nodes(),
            self.connections(),
            self.seed(),
            self.sim_time()
        )
    }
}

/// Headline metrics of one finished run.
#[pyclass(name = "Metrics", module = "manet_sim", frozen)]
struct PyMetrics {
    labels: RunLabels,
    ledger: MetricsLedger,
}

#[pymethods]
impl PyMetrics {
    /// Packet delivery fraction, percent; `None` when nothing was sent.
    #[getter]
    fn pdf(&self) -> Option<f64> {
        self.ledger.pdf()
    }

    #[getter]
    fn avg_e2e_delay(&self) -> Option<f64> {
        self.ledger.avg_e2e_delay()
    }

    #[getter]
    fn throughput(&self) -> f64 {
        self.ledger.throughput()
    }

    #[getter]
    fn mrre(&self) -> f64 {
        self.ledger.mrre()
    }

    #[getter]
    fn total_energy(&self) -> f64 {
        self.ledger.total_energy()
    }

    #[getter]
    fn ctrl_packets(&self) -> u64 {
        self.ledger.ctrl_packets()
    }

    #[getter]
    fn sent(&self) -> u64 {
        self.ledger.cbr_sent
    }

    #[getter]
    fn received(&self) -> u64 {
        self.ledger.cbr_received
    }

    #[getter]
    fn in_flight(&self) -> u64 {
        self.ledger.in_flight_at_end
    }

    #[getter]
    fn drops(&self) -> BTreeMap<&'static str, u64> {
        self.ledger.drops.iter().map(|(r, n)| (r.name(), *n)).collect()
    }

    /// Residual energy per node, joules.
    #[getter]
    fn residual_energy(&self) -> Vec<f64> {
        self.ledger.per_node.iter().map(|n| n.remaining_j).collect()
    }

    fn csv_row(&self) -> String {
        csv_row(&self.labels, &self.ledger)
    }

    #[staticmethod]
    fn csv_header() -> &'static str {
        CSV_HEADER
    }

    fn __repr__(&self) -> String {
        format!(
            "Metrics(pdf={}, avg_e2e_delay={}, throughput={:.3}, mrre={:.3}, total_energy={:.6})",
            py_opt(self.pdf()),
            py_opt(self.avg_e2e_delay()),
            self.throughput(),
            self.mrre(),
            self.total_energy()
        )
    }
}

/// Runs one scenario to its horizon.
#[pyfunction]
fn run(py: Python<'_>, config: &PyScenario) -> PyResult<PyMetrics> {
    let cfg = config.inner.clone();
    let ledger = py
        .detach(|| cfg.validate().and_then(|_| manet_core::run_scenario(&cfg)))
        .map_err(py_err)?
        .ledger;
    Ok(PyMetrics { labels: cfg.labels(), ledger })
}

/// Runs a protocol × model × connections × seed grid. Returns one
/// `(protocol, model, connections, seed, Metrics | error string)` tuple per
/// cell in grid order.
#[pyfunction]
#[pyo3(signature = (config, protocols, models, connections, seeds, jobs = 1))]
fn sweep(
    py: Python<'_>,
    config: &PyScenario,
    protocols: Vec<String>,
    models: Vec<String>,
    connections: Vec<usize>,
    seeds: Vec<u64>,
    jobs: usize,
) -> PyResult<Vec<(String, String, usize, u64, Py<PyAny>)>> {
    let grid = SweepGrid {
        protocols: protocols.iter().map(|p| parse_name::<Protocol>("protocol", p)).collect::<PyResult<_>>()?,
        models: models.iter().map(|m| parse_name::<PropagationKind>("model", m)).collect::<PyResult<_>>()?,
        connections,
        seeds,
    };
    let base = config.inner.clone();
    let results = py.detach(|| core_sweep::run_sweep(&base, &grid, jobs)).map_err(py_err)?;
    results
        .into_iter()
        .map(|r| {
            let l = r.labels.clone();
            let value = match r.outcome {
                Ok(ledger) => Py::new(py, PyMetrics { labels: r.labels, ledger })?.into_any(),
                Err(e) => e.to_string().into_pyobject(py)?.into_any().unbind(),
            };
            Ok((l.protocol, l.propagation, l.connections, l.seed, value))
        })
        .collect()
}

/// Free-space received power at `d` metres with the default radio, W.
#[pyfunction]
fn friis_power(d: f64) -> PyResult<f64> {
    radio::friis_power(&RadioParams::default(), d).map_err(py_err)
}

/// Two-ray ground received power at `d` metres with the default radio, W.
#[pyfunction]
fn two_ray_power(d: f64) -> PyResult<f64> {
    radio::two_ray_power(&RadioParams::default(), d).map_err(py_err)
}

#[pyfunction]
fn crossover_distance() -> f64 {
    radio::crossover_distance(&RadioParams::default())
}

/// `n` received-power samples at `d` metres under `model` with default
/// parameters, drawn from a stream seeded by `seed`.
#[pyfunction]
#[pyo3(signature = (model, d, n, seed = 1))]
fn received_power_samples(model: &str, d: f64, n: usize, seed: u64) -> PyResult<Vec<f64>> {
    let spec = FadingSpec::new(parse_name::<PropagationKind>("model", model)?);
    let rp = RadioParams::default();
    let mut rng = RngStream::new("fading", seed);
    (0..n).map(|_| radio::received_power(&spec, &rp, d, &mut rng).map(|s| s.received_w).map_err(py_err)).collect()
}

#[pymodule]
fn manet_sim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PyMetrics>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(friis_power, m)?)?;
    m.add_function(wrap_pyfunction!(two_ray_power, m)?)?;
    m.add_function(wrap_pyfunction!(crossover_distance, m)?)?;
    m.add_function(wrap_pyfunction!(received_power_samples, m)?)?;
    m.add("PROTOCOLS", Protocol::ALL.iter().map(|p| p.name()).collect::<Vec<_>>())?;
    m.add("MODELS", PropagationKind::ALL.iter().map(|k| k.name()).collect::<Vec<_>>())?;
    Ok(())
}
