//! Batch runners behind the command-line subcommands. Every runner writes
//! `report.json` plus CSV tables into the output directory; CSV output is a
//! pure function of the config and seed.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, NoiseKind};
use crate::error::{Error, Result};
use crate::hermite::{dual_tail_bound, hermite_all, primal_norm, ProjectionGrid};
use crate::levy_measures::{condition_verdict, sigma2};
use crate::mc::path_rng;
use crate::noise::{CellGeometry, CellIncrements, LevyNoise, NoiseModel};
use crate::solver::{solve_grid, FieldGrid};
use crate::stats::{ks_two_sample, moment_report, MomentReport, StatsReport};
use crate::validation::{run_suite, Check};
use crate::vprocess::{v_coeffs_direct, v_pair_direct, PathRef, TestFunction};
use crate::wave_kernel::RotatedLattice;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    CheckCondition,
    Simulate,
    Compare,
    Hermite,
    Validate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::CheckCondition => "check-condition",
            Command::Simulate => "simulate",
            Command::Compare => "compare",
            Command::Hermite => "hermite",
            Command::Validate => "validate",
        }
    }
}

/// A named pass/fail line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl From<Check> for Outcome {
    fn from(c: Check) -> Self {
        Outcome {
            name: c.name,
            pass: c.pass,
            detail: c.detail,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub report: Value,
    pub checks: Vec<Outcome>,
    pub files: Vec<PathBuf>,
}

impl RunResult {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Runs `command` with `threads` workers (0 = machine default) and writes
/// the outputs under `out_dir`.
pub fn run(command: Command, config: &ExperimentConfig, out_dir: &Path, threads: usize) -> Result<RunResult> {
    config.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config("threads", e.to_string()))?;
    let mut res = pool.install(|| match command {
        Command::CheckCondition => check_condition(config, out_dir),
        Command::Simulate => simulate(config, out_dir),
        Command::Compare => compare(config, out_dir),
        Command::Hermite => hermite(config, out_dir),
        Command::Validate => validate(config, out_dir),
    })?;
    let report = json!({
        "command": command.name(),
        "name": config.name,
        "config_hash": config.hash()?,
        "seed": config.seed,
        "pass": res.pass(),
        "checks": res.checks,
        "result": res.report,
    });
    let path = out_dir.join("report.json");
    std::fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")?;
    res.files.push(path);
    res.report = report;
    Ok(res)
}

/// Seed of an independent sub-experiment.
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    let mut z = master ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

fn check_condition(cfg: &ExperimentConfig, out: &Path) -> Result<RunResult> {
    let rep = condition_verdict(&cfg.measure, &cfg.kappas, &cfg.epsilons, cfg.thresholds)?;
    let path = out.join("condition.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    w.write_record(["kappa", "epsilon", "sigma2", "ratio"])?;
    for (i, &k) in rep.kappas.iter().enumerate() {
        for (j, &e) in rep.epsilons.iter().enumerate() {
            let s2 = sigma2(&cfg.spec(e)?)?;
            w.write_record([k.to_string(), e.to_string(), s2.to_string(), rep.ratios[i][j].to_string()])?;
        }
    }
    w.flush()?;
    let mut checks = Vec::new();
    if let Some(v) = cfg.expectations.verdict {
        checks.push(Outcome {
            name: "verdict".into(),
            pass: v == rep.verdict,
            detail: format!("expected {v:?}, got {:?}", rep.verdict),
        });
    }
    Ok(RunResult {
        report: serde_json::to_value(&rep)?,
        checks,
        files: vec![path],
    })
}

/// The lattice, noise and test function shared by all paths of a run.
pub struct Setup {
    pub geometry: CellGeometry,
    pub model: NoiseModel,
}

impl Setup {
    pub fn new(cfg: &ExperimentConfig, noise: NoiseKind, epsilon: f64) -> Result<Self> {
        let domain = cfg.domain()?;
        let geometry = CellGeometry::new(RotatedLattice::covering(&domain, cfg.spacing)?, domain);
        let model = match noise {
            NoiseKind::Gaussian => NoiseModel::Gaussian,
            NoiseKind::Levy => NoiseModel::Levy(LevyNoise::new(
                cfg.spec(epsilon)?,
                cfg.jump_floor * epsilon,
                cfg.small_jump_gaussian,
                cfg.jump_cap,
            )?),
        };
        Ok(Self { geometry, model })
    }

    /// One solved path.
    pub fn path<R: rand::Rng + ?Sized>(&self, cfg: &ExperimentConfig, rng: &mut R) -> Result<(FieldGrid, CellIncrements)> {
        let inc = self.model.increments(&self.geometry, rng)?;
        let field = solve_grid(&inc, |u| cfg.f.eval(u));
        Ok((field, inc))
    }
}

/// Per-path observables: `u` and `⟨v, φ⟩` at the probe time, and `u²` on the
/// dump grid of the observation region.
#[derive(Debug, Clone)]
pub struct Observables {
    pub u: f64,
    pub v: f64,
    pub u_sq: Vec<f64>,
}

fn observe(cfg: &ExperimentConfig, field: &FieldGrid, inc: &CellIncrements, grid: &[(f64, f64)]) -> Result<Observables> {
    let p = cfg.probe();
    let path = PathRef::grid(field, inc);
    let atoms = path.atoms(|u| cfg.f.eval(u))?;
    let u_sq = grid
        .iter()
        .map(|&(t, x)| field.eval(t, x).map(|u| u * u))
        .collect::<Result<_>>()?;
    Ok(Observables {
        u: field.eval(p.t, p.x)?,
        v: v_pair_direct(&atoms, p.t, &cfg.phi()),
        u_sq,
    })
}

fn region_grid(cfg: &ExperimentConfig) -> Vec<(f64, f64)> {
    let n = cfg.dump_resolution;
    let ts = linspace(0.0, cfg.t_max, n);
    let xs = linspace(0.0, cfg.length, n);
    ts[1..]
        .iter()
        .flat_map(|&t| xs.iter().map(move |&x| (t, x)))
        .collect()
}

/// Runs `cfg.paths` paths of one arm under `seed`.
pub fn sample_arm(cfg: &ExperimentConfig, noise: NoiseKind, epsilon: f64, seed: u64) -> Result<Vec<Observables>> {
    let setup = Setup::new(cfg, noise, epsilon)?;
    let grid = region_grid(cfg);
    (0..cfg.paths)
        .into_par_iter()
        .map(|k| {
            let mut rng = path_rng(seed, k as u64);
            let (field, inc) = setup.path(cfg, &mut rng)?;
            observe(cfg, &field, &inc, &grid)
        })
        .collect()
}

fn sup_second_moment(obs: &[Observables]) -> f64 {
    let n = obs.len() as f64;
    let m = obs[0].u_sq.len();
    (0..m)
        .map(|i| obs.iter().map(|o| o.u_sq[i]).sum::<f64>() / n)
        .fold(0.0, f64::max)
}

fn push_arm(stats: &mut StatsReport, prefix: &str, obs: &[Observables]) -> Result<(MomentReport, MomentReport)> {
    let u: Vec<f64> = obs.iter().map(|o| o.u).collect();
    let v: Vec<f64> = obs.iter().map(|o| o.v).collect();
    let mu = moment_report(&u)?;
    let mv = moment_report(&v)?;
    stats.push_moments(&format!("{prefix}.u"), &mu);
    stats.push_moments(&format!("{prefix}.v_phi"), &mv);
    stats.push(format!("{prefix}.sup_mean_u_sq"), sup_second_moment(obs), None, Some(obs.len()));
    Ok((mu, mv))
}

fn write_moment_row(w: &mut csv::Writer<BufWriter<File>>, arm: &str, eps: &str, mu: &MomentReport, mv: &MomentReport, ks: (f64, f64)) -> Result<()> {
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    w.write_record([
        arm.to_string(),
        eps.to_string(),
        ks.0.to_string(),
        ks.1.to_string(),
        mu.mean.to_string(),
        mu.variance.to_string(),
        mu.variance_se.to_string(),
        opt(mu.skewness),
        opt(mu.kurtosis),
        mv.mean.to_string(),
        mv.variance.to_string(),
        mv.variance_se.to_string(),
    ])?;
    Ok(())
}

fn compare(cfg: &ExperimentConfig, out: &Path) -> Result<RunResult> {
    let mut stats = StatsReport::default();
    stats.meta("paths", cfg.paths)?;
    stats.meta("seed", cfg.seed)?;
    stats.meta("spacing", cfg.spacing)?;
    stats.meta("epsilons", &cfg.epsilons)?;
    stats.meta("probe", [cfg.probe().t, cfg.probe().x])?;

    let gauss = sample_arm(cfg, NoiseKind::Gaussian, 1.0, derive_seed(cfg.seed, 0))?;
    let gu: Vec<f64> = gauss.iter().map(|o| o.u).collect();
    let gv: Vec<f64> = gauss.iter().map(|o| o.v).collect();
    let (gmu, gmv) = push_arm(&mut stats, "gaussian", &gauss)?;

    let path = out.join("compare.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    w.write_record([
        "arm", "epsilon", "ks_u", "ks_v", "mean_u", "var_u", "var_u_se", "skew_u", "kurt_u", "mean_v", "var_v", "var_v_se",
    ])?;
    write_moment_row(&mut w, "gaussian", "", &gmu, &gmv, (0.0, 0.0))?;

    let mut ks_u = Vec::new();
    let mut rows = Vec::new();
    for (e, &eps) in cfg.epsilons.iter().enumerate() {
        let arm = sample_arm(cfg, NoiseKind::Levy, eps, derive_seed(cfg.seed, e as u64 + 1))?;
        let lu: Vec<f64> = arm.iter().map(|o| o.u).collect();
        let lv: Vec<f64> = arm.iter().map(|o| o.v).collect();
        let ku = ks_two_sample(&lu, &gu)?;
        let kv = ks_two_sample(&lv, &gv)?;
        let prefix = format!("levy[{eps}]");
        let (mu, mv) = push_arm(&mut stats, &prefix, &arm)?;
        stats.push(format!("{prefix}.ks_u"), ku, None, Some(arm.len()));
        stats.push(format!("{prefix}.ks_v_phi"), kv, None, Some(arm.len()));
        write_moment_row(&mut w, cfg.measure.name(), &eps.to_string(), &mu, &mv, (ku, kv))?;
        ks_u.push(ku);
        rows.push(json!({"epsilon": eps, "ks_u": ku, "ks_v_phi": kv}));
    }
    w.flush()?;
    let stats_path = out.join("stats.csv");
    stats.write_csv(create(&stats_path)?)?;

    let x = &cfg.expectations;
    let mut checks = Vec::new();
    if x.ks_non_increasing == Some(true) {
        checks.push(Outcome {
            name: "ks_u_non_increasing".into(),
            pass: ks_u.windows(2).all(|w| w[1] <= w[0]),
            detail: format!("{ks_u:?}"),
        });
    }
    if let Some(b) = x.ks_final_below {
        let last = *ks_u.last().expect("schedule nonempty");
        checks.push(Outcome {
            name: "ks_u_final_below".into(),
            pass: last < b,
            detail: format!("{last:.4} < {b}"),
        });
    }
    if let Some(b) = x.ks_all_above {
        checks.push(Outcome {
            name: "ks_u_all_above".into(),
            pass: ks_u.iter().all(|&k| k > b),
            detail: format!("{ks_u:?} > {b}"),
        });
    }
    Ok(RunResult {
        report: json!({"rows": rows, "stats": stats}),
        checks,
        files: vec![path, stats_path],
    })
}

fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<RunResult> {
    let eps = cfg.simulate_epsilon();
    let setup = Setup::new(cfg, cfg.noise, eps)?;
    let grid = region_grid(cfg);
    let ts = linspace(0.0, cfg.t_max, cfg.dump_resolution);
    let xs = linspace(0.0, cfg.length, cfg.dump_resolution);
    let times = cfg.times(cfg.t_max);
    let r = cfg.r;
    let per_path: Vec<(Observables, Vec<PathBuf>)> = (0..cfg.paths)
        .into_par_iter()
        .map(|k| {
            let mut rng = path_rng(cfg.seed, k as u64);
            let (field, inc) = setup.path(cfg, &mut rng)?;
            let mut files = Vec::new();
            if k < cfg.dump_paths {
                let p = out.join(format!("u_path{k}.csv"));
                field.write_csv(&ts, &xs, create(&p)?)?;
                files.push(p);
                if cfg.v_coeffs {
                    let vp = v_coeffs_direct(PathRef::grid(&field, &inc), &times, cfg.q_max, |u| cfg.f.eval(u), r)?;
                    let p = out.join(format!("v_path{k}.csv"));
                    vp.write_csv(create(&p)?)?;
                    files.push(p);
                }
            }
            Ok((observe(cfg, &field, &inc, &grid)?, files))
        })
        .collect::<Result<_>>()?;
    let mut files: Vec<PathBuf> = per_path.iter().flat_map(|(_, f)| f.clone()).collect();
    let obs: Vec<Observables> = per_path.into_iter().map(|(o, _)| o).collect();

    let mut stats = StatsReport::default();
    stats.meta("noise", cfg.noise)?;
    stats.meta("epsilon", eps)?;
    stats.meta("sigma", setup.model.sigma())?;
    stats.meta("paths", cfg.paths)?;
    stats.meta("seed", cfg.seed)?;
    stats.meta("spacing", cfg.spacing)?;
    if obs.len() >= 3 {
        push_arm(&mut stats, "sample", &obs)?;
    } else {
        for (k, o) in obs.iter().enumerate() {
            stats.push(format!("path{k}.u"), o.u, None, Some(1));
            stats.push(format!("path{k}.v_phi"), o.v, None, Some(1));
        }
    }
    let p = out.join("stats.csv");
    stats.write_csv(create(&p)?)?;
    files.push(p);
    Ok(RunResult {
        report: serde_json::to_value(&stats)?,
        checks: Vec::new(),
        files,
    })
}

fn hermite(cfg: &ExperimentConfig, out: &Path) -> Result<RunResult> {
    let phi = cfg.phi();
    let [_, hi] = cfg.window();
    let grid = ProjectionGrid::for_window(hi, cfg.q_max);
    let c = grid.project(|x| phi.value(x), cfg.r)?;
    let path = out.join("hermite.csv");
    c.write_csv(create(&path)?)?;

    let (lo, hi) = phi.support();
    let mut h = Vec::new();
    let mut err = 0.0f64;
    for x in linspace(lo, hi, 201) {
        hermite_all(cfg.q_max, x, &mut h);
        let s: f64 = c.coeffs.iter().zip(&h).map(|(a, b)| a * b).sum();
        err = err.max((s - phi.value(x)).abs());
    }
    Ok(RunResult {
        report: json!({
            "q_max": cfg.q_max,
            "r": cfg.r,
            "dual_norm": c.dual_norm(),
            "primal_norm": primal_norm(&c.coeffs, cfg.r),
            "dual_tail_bound": dual_tail_bound(&c.coeffs, cfg.r),
            "reconstruction_sup_error": err,
        }),
        checks: Vec::new(),
        files: vec![path],
    })
}

fn validate(cfg: &ExperimentConfig, out: &Path) -> Result<RunResult> {
    let checks: Vec<Outcome> = run_suite(cfg)?.into_iter().map(Outcome::from).collect();
    let path = out.join("validate.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    w.write_record(["check", "pass", "detail"])?;
    for c in &checks {
        w.write_record([c.name.as_str(), if c.pass { "PASS" } else { "FAIL" }, c.detail.as_str()])?;
    }
    w.flush()?;
    Ok(RunResult {
        report: json!({"checks_run": checks.len()}),
        checks,
        files: vec![path],
    })
}
