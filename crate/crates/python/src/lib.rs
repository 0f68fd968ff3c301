//! Python bindings for `levy-wave`.

use std::path::PathBuf;

use levy_wave::config::{ExperimentConfig, NoiseKind};
use levy_wave::experiment::{self, sample_arm, Command};
use levy_wave::levy_measures::{self, LevyFamily, LevyMeasureSpec, VerdictThresholds};
use levy_wave::{hermite, stats, Error};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

create_exception!(levy_wave_py, LevyWaveError, PyException);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config { .. } | Error::InvalidSpec(_) => PyValueError::new_err(e.to_string()),
        _ => LevyWaveError::new_err(e.to_string()),
    }
}

fn family(name: &str, param: f64) -> PyResult<LevyFamily> {
    let fam = match name {
        "alpha_stable" => LevyFamily::AlphaStableSymmetric { alpha: param },
        "gamma" => LevyFamily::GammaSubordinator { rate: param },
        other => return Err(PyValueError::new_err(format!("unknown family {other:?}"))),
    };
    fam.validate().map_err(to_py)?;
    Ok(fam)
}

/// A truncated Lévy measure: `LevyMeasure("alpha_stable", 1.5, 0.1)`.
#[pyclass(name = "LevyMeasure", frozen)]
struct PyLevyMeasure {
    spec: LevyMeasureSpec,
}

#[pymethods]
impl PyLevyMeasure {
    #[new]
    fn new(family_name: &str, param: f64, epsilon: f64) -> PyResult<Self> {
        let spec = family(family_name, param)?.with_epsilon(epsilon).map_err(to_py)?;
        Ok(Self { spec })
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.spec.family.name()
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.spec.epsilon
    }

    fn sigma2(&self) -> PyResult<f64> {
        levy_measures::sigma2(&self.spec).map_err(to_py)
    }

    fn ar_ratio(&self, kappa: f64) -> PyResult<f64> {
        levy_measures::ar_ratio(&self.spec, kappa).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("LevyMeasure({:?}, epsilon={})", self.spec.family, self.spec.epsilon)
    }
}

/// Verdict string and the κ × ε ratio table.
#[pyfunction]
fn condition_verdict(
    family_name: &str,
    param: f64,
    kappas: Vec<f64>,
    epsilons: Vec<f64>,
) -> PyResult<(String, Vec<Vec<f64>>)> {
    let fam = family(family_name, param)?;
    let r = levy_measures::condition_verdict(&fam, &kappas, &epsilons, VerdictThresholds::default()).map_err(to_py)?;
    let verdict = format!("{:?}", r.verdict).to_uppercase();
    Ok((verdict, r.ratios))
}

#[pyfunction]
fn hermite_function(q: usize, x: f64) -> f64 {
    hermite::hermite_eval(q, x)
}

#[pyfunction]
fn ks_two_sample(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    stats::ks_two_sample(&a, &b).map_err(to_py)
}

#[pyclass(name = "ExperimentConfig")]
struct PyConfig {
    cfg: ExperimentConfig,
}

#[pymethods]
impl PyConfig {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            cfg: ExperimentConfig::from_json(text).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            cfg: ExperimentConfig::load(&path).map_err(to_py)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.cfg.to_json().map_err(to_py)
    }

    fn hash(&self) -> PyResult<String> {
        self.cfg.hash().map_err(to_py)
    }

    #[getter]
    fn name(&self) -> String {
        self.cfg.name.clone()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.cfg.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.cfg.seed = seed;
    }

    #[getter]
    fn paths(&self) -> usize {
        self.cfg.paths
    }

    #[setter]
    fn set_paths(&mut self, paths: usize) {
        self.cfg.paths = paths;
    }

    /// Runs a subcommand into `out_dir`; returns `(pass, report_json)`.
    #[pyo3(signature = (command, out_dir, threads = 0))]
    fn run(&self, py: Python<'_>, command: &str, out_dir: PathBuf, threads: usize) -> PyResult<(bool, String)> {
        let cmd = match command {
            "check-condition" => Command::CheckCondition,
            "simulate" => Command::Simulate,
            "compare" => Command::Compare,
            "hermite" => Command::Hermite,
            "validate" => Command::Validate,
            other => return Err(PyValueError::new_err(format!("unknown command {other:?}"))),
        };
        let cfg = self.cfg.clone();
        let res = py
            .detach(move || experiment::run(cmd, &cfg, &out_dir, threads))
            .map_err(to_py)?;
        Ok((res.pass(), res.report.to_string()))
    }

    /// Probe samples `(u, <v, phi>)` for one noise arm.
    #[pyo3(signature = (epsilon, gaussian = false, seed = None))]
    fn sample(&self, py: Python<'_>, epsilon: f64, gaussian: bool, seed: Option<u64>) -> PyResult<Vec<(f64, f64)>> {
        let noise = if gaussian { NoiseKind::Gaussian } else { NoiseKind::Levy };
        let cfg = self.cfg.clone();
        let seed = seed.unwrap_or(cfg.seed);
        let obs = py.detach(move || sample_arm(&cfg, noise, epsilon, seed)).map_err(to_py)?;
        Ok(obs.into_iter().map(|o| (o.u, o.v)).collect())
    }
}

#[pymodule]
fn levy_wave_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("LevyWaveError", m.py().get_type::<LevyWaveError>())?;
    m.add_class::<PyLevyMeasure>()?;
    m.add_class::<PyConfig>()?;
    m.add_function(wrap_pyfunction!(condition_verdict, m)?)?;
    m.add_function(wrap_pyfunction!(hermite_function, m)?)?;
    m.add_function(wrap_pyfunction!(ks_two_sample, m)?)?;
    Ok(())
}
