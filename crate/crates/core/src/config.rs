//! Experiment manifests: one JSON document per run.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::levy_measures::{LevyFamily, LevyMeasureSpec, VerdictThresholds};
use crate::noise::DEFAULT_JUMP_CAP;
use crate::solver::Affine;
use crate::vprocess::Bump;
use crate::wave_kernel::Domain;

/// Which noise drives `simulate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    Levy,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Probe {
    pub t: f64,
    pub x: f64,
}

/// Pass/fail expectations evaluated by `compare` and `check-condition`.
/// Absent fields are not checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<crate::levy_measures::Verdict>,
    /// KS of `u` at the probe must not increase along the schedule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks_non_increasing: Option<bool>,
    /// Upper bound on the KS of `u` at the smallest ε.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks_final_below: Option<f64>,
    /// Lower bound on the KS of `u` at every ε.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks_all_above: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub measure: LevyFamily,
    /// `f(u) = a u + b`.
    pub f: Affine,
    pub t_max: f64,
    pub length: f64,
    /// Spatial window of the noise; defaults to `[−T, L + T]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    pub spacing: f64,
    /// Jump floor as a fraction of ε.
    pub jump_floor: f64,
    #[serde(default = "yes")]
    pub small_jump_gaussian: bool,
    #[serde(default = "default_cap")]
    pub jump_cap: f64,
    pub epsilons: Vec<f64>,
    /// ε used by `simulate`; defaults to the last schedule entry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub kappas: Vec<f64>,
    #[serde(default)]
    pub thresholds: VerdictThresholds,
    pub paths: usize,
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out_dir: String,
    #[serde(default = "default_r")]
    pub r: f64,
    #[serde(default = "default_q_max")]
    pub q_max: usize,
    #[serde(default = "default_output_times")]
    pub output_times: usize,
    /// Defaults to `(T, L/2)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<Probe>,
    /// Defaults to the bump filling `(0, L)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Bump>,
    #[serde(default)]
    pub noise: NoiseKind,
    /// Paths written out in full by `simulate`.
    #[serde(default = "one")]
    pub dump_paths: usize,
    /// Points per axis of the `(t, x)` dump grid.
    #[serde(default = "default_dump_resolution")]
    pub dump_resolution: usize,
    #[serde(default = "yes")]
    pub v_coeffs: bool,
    #[serde(default)]
    pub expectations: Expectations,
}

fn default_name() -> String {
    "experiment".into()
}
fn yes() -> bool {
    true
}
fn one() -> usize {
    1
}
fn default_cap() -> f64 {
    DEFAULT_JUMP_CAP
}
fn default_out() -> String {
    "out".into()
}
fn default_r() -> f64 {
    crate::hermite::DEFAULT_R
}
fn default_q_max() -> usize {
    crate::hermite::DEFAULT_Q_MAX
}
fn default_output_times() -> usize {
    65
}
fn default_dump_resolution() -> usize {
    33
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be finite and positive, got {v}")))
    }
}

impl ExperimentConfig {
    /// Parses and validates. Syntax errors report line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            Error::config(format!("line {}, column {}", e.line(), e.column()), e.to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// SHA-256 of the compact serialization, hex encoded.
    pub fn hash(&self) -> Result<String> {
        let bytes = serde_json::to_vec(self)?;
        let digest = Sha256::digest(&bytes);
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn validate(&self) -> Result<()> {
        self.measure
            .validate()
            .map_err(|e| Error::config("measure", e.to_string()))?;
        if !(self.f.a.is_finite() && self.f.b.is_finite()) {
            return Err(Error::config("f", "coefficients must be finite"));
        }
        positive("t_max", self.t_max)?;
        positive("length", self.length)?;
        positive("spacing", self.spacing)?;
        positive("jump_cap", self.jump_cap)?;
        positive("r", self.r)?;
        if !(self.jump_floor >= 0.0 && self.jump_floor < 1.0) {
            return Err(Error::config("jump_floor", format!("must lie in [0, 1), got {}", self.jump_floor)));
        }
        if self.epsilons.len() < 3 {
            return Err(Error::config("epsilons", "need at least 3 entries"));
        }
        for (k, &e) in self.epsilons.iter().enumerate() {
            positive(&format!("epsilons[{k}]"), e)?;
        }
        if let Some(k) = self.epsilons.windows(2).position(|w| !(w[1] < w[0])) {
            return Err(Error::config(format!("epsilons[{}]", k + 1), "schedule must be strictly decreasing"));
        }
        if let Some(e) = self.epsilon {
            positive("epsilon", e)?;
        }
        if self.kappas.is_empty() {
            return Err(Error::config("kappas", "must not be empty"));
        }
        for (k, &v) in self.kappas.iter().enumerate() {
            positive(&format!("kappas[{k}]"), v)?;
        }
        let th = self.thresholds;
        positive("thresholds.holds_below", th.holds_below)?;
        positive("thresholds.fails_above", th.fails_above)?;
        if self.paths == 0 {
            return Err(Error::config("paths", "must be at least 1"));
        }
        if self.output_times < 2 {
            return Err(Error::config("output_times", "need at least 2 times"));
        }
        if self.dump_resolution < 2 {
            return Err(Error::config("dump_resolution", "need at least 2 points"));
        }
        let [lo, hi] = self.window();
        if !(lo <= 0.0 && hi >= self.length && lo < hi) {
            return Err(Error::config("window", format!("[{lo}, {hi}] must contain [0, {}]", self.length)));
        }
        let p = self.probe();
        if !(p.t > 0.0 && p.t <= self.t_max && p.x >= lo && p.x <= hi) {
            return Err(Error::config("probe", format!("({}, {}) is outside the domain", p.t, p.x)));
        }
        let phi = self.phi();
        positive("phi.half_width", phi.half_width)?;
        if !(phi.center - phi.half_width > lo && phi.center + phi.half_width < hi) {
            return Err(Error::config("phi", "support must lie inside the open window"));
        }
        if self.out_dir.is_empty() {
            return Err(Error::config("out_dir", "must not be empty"));
        }
        Ok(())
    }

    pub fn window(&self) -> [f64; 2] {
        self.window.unwrap_or([-self.t_max, self.length + self.t_max])
    }

    pub fn domain(&self) -> Result<Domain> {
        let [lo, hi] = self.window();
        Domain::new(self.t_max, lo, hi)
    }

    /// The observation region `[0, T] × [0, L]`.
    pub fn region(&self) -> Result<Domain> {
        Domain::new(self.t_max, 0.0, self.length)
    }

    pub fn probe(&self) -> Probe {
        self.probe.unwrap_or(Probe {
            t: self.t_max,
            x: 0.5 * self.length,
        })
    }

    pub fn phi(&self) -> Bump {
        self.phi.unwrap_or_else(|| Bump::on(0.0, self.length))
    }

    pub fn simulate_epsilon(&self) -> f64 {
        self.epsilon.unwrap_or(*self.epsilons.last().expect("validated schedule"))
    }

    pub fn spec(&self, epsilon: f64) -> Result<LevyMeasureSpec> {
        self.measure.with_epsilon(epsilon)
    }

    /// `T · k / (m − 1)` for `k < m = output_times`.
    pub fn times(&self, t_end: f64) -> Vec<f64> {
        let m = self.output_times - 1;
        (0..=m).map(|k| t_end * k as f64 / m as f64).collect()
    }
}
