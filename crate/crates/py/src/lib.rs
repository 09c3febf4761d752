//! Python bindings for `latecount`.
//!
//! Results that are plain records in Rust (estimates, fits, sweep rows)
//! come back as dicts; full analyses go in and out as JSON text, matching
//! the CLI's config and report files.

use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde::Serialize;
use serde_json::Value;

use latecount::analysis::{run_analysis_on, RunConfig};
use latecount::ballots::load_tallies;
use latecount::fair_win;
use latecount::geodata::{self, LatLon, LoadOptions};
use latecount::inference::{self, ResampleMode, SharePoint, WeightScheme};
use latecount::model::{self, FormKind, FormParams, ModelSpec};
use latecount::{Error, ErrorClass};

fn py_err(e: Error) -> PyErr {
    match (&e, e.class()) {
        (Error::Io(_), _) => PyOSError::new_err(e.to_string()),
        (_, ErrorClass::Numeric) => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py>(py: Python<'py>, value: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match value {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => u.into_pyobject(py)?.into_any(),
            (_, Some(i)) => i.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, v) in map {
                dict.set_item(k, to_py(py, v)?)?;
            }
            dict.into_any()
        }
    })
}

fn record<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let json = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_py(py, &json)
}

/// Probability kept as `log10`, printed as `1e<log10>`.
#[pyclass(frozen, skip_from_py_object, module = "latecount")]
#[derive(Clone, Copy)]
struct LogProb(fair_win::LogProb);

#[pymethods]
impl LogProb {
    #[getter]
    fn log10(&self) -> f64 {
        self.0.log10
    }

    /// True when the Gaussian tail came from the asymptotic series.
    #[getter]
    fn asymptotic(&self) -> bool {
        self.0.asymptotic
    }

    /// Plain probability; underflows to 0.0 below about 1e-308.
    fn probability(&self) -> f64 {
        self.0.probability()
    }

    fn complement(&self) -> Self {
        LogProb(self.0.complement())
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("LogProb('{}')", self.0)
    }
}

/// Population-weighted law of distance (km) to the nearest voting center.
#[pyclass(frozen, module = "latecount")]
struct DistanceDistribution(geodata::DistanceDistribution);

#[pymethods]
impl DistanceDistribution {
    #[new]
    #[pyo3(signature = (xs, weights, x_max=None))]
    fn new(xs: Vec<f64>, weights: Vec<f64>, x_max: Option<f64>) -> PyResult<Self> {
        if xs.len() != weights.len() {
            return Err(PyValueError::new_err("xs and weights differ in length"));
        }
        let mut dist = geodata::DistanceDistribution::from_weighted(xs.into_iter().zip(weights)).map_err(py_err)?;
        if let Some(x_max) = x_max {
            dist = dist.with_support_max(x_max).map_err(py_err)?;
        }
        Ok(Self(dist))
    }

    #[getter]
    fn xs(&self) -> Vec<f64> {
        self.0.xs().to_vec()
    }

    /// Normalised weights.
    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.0.weights().to_vec()
    }

    #[getter]
    fn x_max(&self) -> f64 {
        self.0.x_max()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn mean(&self) -> f64 {
        self.0.mean()
    }

    /// Mean, support maximum and the three moment summaries; `None` where
    /// the law is degenerate.
    fn moments<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        record(py, &model::Moments::of(&self.0))
    }

    fn moment_fair_win(&self) -> PyResult<f64> {
        model::moment_fair_win(&self.0).map_err(py_err)
    }

    fn moment_halftime_lead(&self) -> PyResult<f64> {
        model::moment_halftime_lead(&self.0).map_err(py_err)
    }

    fn gip_lower_bound(&self) -> PyResult<f64> {
        model::gip_lower_bound(&self.0).map_err(py_err)
    }

    fn conjecture_all_geo(&self) -> bool {
        model::conjecture_all_geo(&self.0)
    }

    fn __repr__(&self) -> String {
        format!("DistanceDistribution(atoms={}, x_max={})", self.0.len(), self.0.x_max())
    }
}

/// Resampling plan: `mode` is "subsample" or "bootstrap".
#[pyclass(frozen, skip_from_py_object, module = "latecount")]
#[derive(Clone, Copy)]
struct ResamplePlan(inference::ResamplePlan);

#[pymethods]
impl ResamplePlan {
    #[new]
    #[pyo3(signature = (mode="subsample", sample_size=20, replicates=10_000, seed=42, parallel=true))]
    fn new(mode: &str, sample_size: usize, replicates: usize, seed: u64, parallel: bool) -> PyResult<Self> {
        let mode: ResampleMode = mode.parse().map_err(py_err)?;
        let plan = inference::ResamplePlan::new(mode, sample_size, replicates, seed);
        Ok(Self(if parallel { plan } else { plan.serial() }))
    }

    #[getter]
    fn mode(&self) -> &'static str {
        self.0.mode.as_str()
    }

    #[getter]
    fn sample_size(&self) -> usize {
        self.0.sample_size
    }

    #[getter]
    fn replicates(&self) -> usize {
        self.0.replicates
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed
    }

    fn __repr__(&self) -> String {
        let p = &self.0;
        format!(
            "ResamplePlan(mode='{}', sample_size={}, replicates={}, seed={})",
            p.mode.as_str(),
            p.sample_size,
            p.replicates,
            p.seed
        )
    }
}

fn scheme(weighted: bool) -> WeightScheme {
    if weighted {
        WeightScheme::VoteTotals
    } else {
        WeightScheme::Unweighted
    }
}

fn share_points(xs: &[f64], shares: &[f64], weights: Option<Vec<f64>>) -> PyResult<Vec<SharePoint>> {
    let weights = weights.unwrap_or_else(|| vec![1.0; xs.len()]);
    if xs.len() != shares.len() || xs.len() != weights.len() {
        return Err(PyValueError::new_err("xs, shares and weights differ in length"));
    }
    Ok(xs.iter().zip(shares).zip(&weights).map(|((&x, &share), &weight)| SharePoint { x, share, weight }).collect())
}

fn spec(form: &str, c: f64, epsilon: f64) -> PyResult<ModelSpec> {
    let params: FormParams = form.parse().map_err(py_err)?;
    Ok(ModelSpec { c, epsilon, ..ModelSpec::new(params) })
}

/// Tests of late-count turnaround explanations from settlement geodemographics.
#[pymodule(name = "latecount")]
mod latecount_module {
    use super::*;

    #[pymodule_export]
    use super::{DistanceDistribution, LogProb, ResamplePlan};

    /// Great-circle distance in km.
    #[pyfunction]
    fn haversine_distance(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
        geodata::haversine_distance(LatLon::new(lat1, lon1), LatLon::new(lat2, lon2))
    }

    /// `log10(1 - Φ(z))` as a LogProb.
    #[pyfunction]
    fn log_normal_tail(z: f64) -> LogProb {
        LogProb(fair_win::log_normal_tail(z))
    }

    /// Probability that the half-time trailer wins, from half-time counts.
    #[pyfunction]
    fn fair_win_probability(v_h: u64, v_n: u64) -> PyResult<LogProb> {
        fair_win::fair_win_probability(v_h, v_n).map(LogProb).map_err(py_err)
    }

    /// Same, from raw shares of `n` counted ballots.
    #[pyfunction]
    fn fair_win_probability_shares(p: f64, q: f64, n: f64) -> PyResult<LogProb> {
        fair_win::fair_win_probability_shares(p, q, n).map(LogProb).map_err(py_err)
    }

    /// Literal quadrature of the fair-win integral, for validation.
    #[pyfunction]
    fn fair_win_probability_quadrature(v_h: u64, v_n: u64) -> PyResult<LogProb> {
        fair_win::fair_win_probability_quadrature(v_h, v_n).map(LogProb).map_err(py_err)
    }

    #[pyfunction]
    fn replicate_seed(seed: u64, index: u64) -> u64 {
        inference::replicate_seed(seed, index)
    }

    /// Fraction of resampled laws meeting both all-geodemographics
    /// conditions, with the per-condition fractions.
    #[pyfunction]
    fn probability_all_geo<'py>(
        py: Python<'py>,
        dist: &DistanceDistribution,
        plan: &ResamplePlan,
    ) -> PyResult<Bound<'py, PyAny>> {
        let est = py.detach(|| inference::probability_all_geo(&dist.0, &plan.0)).map_err(py_err)?;
        let out = record(py, &est)?;
        out.set_item("standard_error", est.standard_error())?;
        Ok(out)
    }

    /// Weighted least squares of share on distance.
    #[pyfunction]
    #[pyo3(signature = (xs, shares, weights=None, weighted=true))]
    fn fit_h_linear<'py>(
        py: Python<'py>,
        xs: Vec<f64>,
        shares: Vec<f64>,
        weights: Option<Vec<f64>>,
        weighted: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let points = share_points(&xs, &shares, weights)?;
        record(py, &inference::fit_h_linear(&points, scheme(weighted)).map_err(py_err)?)
    }

    /// Bootstrapped `c/m` ratios; `None` marks a flat replicate fit.
    #[pyfunction]
    #[pyo3(signature = (xs, shares, plan, weights=None, weighted=true))]
    fn bootstrap_c_over_m(
        py: Python<'_>,
        xs: Vec<f64>,
        shares: Vec<f64>,
        plan: &ResamplePlan,
        weights: Option<Vec<f64>>,
        weighted: bool,
    ) -> PyResult<Vec<Option<f64>>> {
        let points = share_points(&xs, &shares, weights)?;
        let sample = py.detach(|| inference::bootstrap_c_over_m(&points, &plan.0, scheme(weighted))).map_err(py_err)?;
        Ok(sample.ratios)
    }

    /// Share of ratios `r` with `lower < r * delta < 0`.
    #[pyfunction]
    fn probability_gip_window<'py>(
        py: Python<'py>,
        ratios: Vec<Option<f64>>,
        lower: f64,
        delta: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let sample = inference::RatioSample { ratios };
        record(py, &inference::probability_gip_window(&sample, lower, delta))
    }

    /// Half-time shares `(v_H, v_N)` of a form such as "linear:0.001" or
    /// "exp2:50:20".
    #[pyfunction]
    #[pyo3(signature = (form, dist, c=0.5, epsilon=0.0))]
    fn eval_halftime_shares(form: &str, dist: &DistanceDistribution, c: f64, epsilon: f64) -> PyResult<(f64, f64)> {
        model::eval_halftime_shares(&spec(form, c, epsilon)?, &dist.0).map_err(py_err)
    }

    /// Final shares `(V_H, V_N)`.
    #[pyfunction]
    #[pyo3(signature = (form, dist, c=0.5, epsilon=0.0))]
    fn eval_final_shares(form: &str, dist: &DistanceDistribution, c: f64, epsilon: f64) -> PyResult<(f64, f64)> {
        model::eval_final_shares(&spec(form, c, epsilon)?, &dist.0).map_err(py_err)
    }

    /// Lower end of the GIP window for a form.
    #[pyfunction]
    #[pyo3(signature = (form, dist, c=0.5))]
    fn window_lower_bound(form: &str, dist: &DistanceDistribution, c: f64) -> PyResult<f64> {
        model::window_lower_bound(&spec(form, c, 0.0)?, &dist.0).map_err(py_err)
    }

    /// Default-grid sweep of one form kind ("linear", "exp1", "exp2",
    /// "log", "power"): rows of `E[h]`, `E[gh]` and the turnaround flag.
    #[pyfunction]
    #[pyo3(signature = (kind, dist, c=0.5))]
    fn sweep_model_params<'py>(
        py: Python<'py>,
        kind: &str,
        dist: &DistanceDistribution,
        c: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let kind: FormKind = kind.parse().map_err(py_err)?;
        let base = ModelSpec { c, ..ModelSpec::linear(0.0) };
        let grid = model::default_grid(kind, dist.0.x_max(), &base);
        record(py, &model::sweep_model_params(&grid, &dist.0).map_err(py_err)?)
    }

    /// Full analysis. `config_json` is a run configuration as accepted by
    /// the CLI's `--config`; `settlements_csv` and `tallies_csv`, when given,
    /// are CSV text used instead of the configured paths. Returns the JSON
    /// report.
    #[pyfunction]
    #[pyo3(signature = (config_json="{}", settlements_csv=None, tallies_csv=None))]
    fn run_analysis(
        py: Python<'_>,
        config_json: &str,
        settlements_csv: Option<&str>,
        tallies_csv: Option<&str>,
    ) -> PyResult<String> {
        let config = RunConfig::from_json(config_json).map_err(py_err)?;
        let settlements = settlements_csv.map(str::to_owned);
        let tallies = tallies_csv.map(str::to_owned);
        py.detach(move || {
            let (geodata, rows) = match (settlements, tallies) {
                (Some(s), Some(t)) => (
                    geodata::load_settlements(s.as_bytes(), LoadOptions { min_population: config.min_population })?,
                    load_tallies(t.as_bytes())?,
                ),
                (None, None) => latecount::analysis::load_inputs(&config)?,
                _ => return Err(Error::Config("give both settlements_csv and tallies_csv, or neither".into())),
            };
            run_analysis_on(&geodata, &rows, &config)?.to_json()
        })
        .map_err(py_err)
    }
}
