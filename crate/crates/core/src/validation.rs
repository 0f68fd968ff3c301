//! The self-validation suite run by `levy-wave validate`: one named check
//! per invariant, sized to finish in well under a minute.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::experiment::derive_seed;
use crate::hermite::{dual_norm, hermite_all, hermite_deriv, hermite_eval, ProjectionGrid};
use crate::levy_measures::{ar_ratio, sigma2, sigma2_quadrature, AmplitudeSampler, LevyMeasureSpec};
use crate::mc::path_rng;
use crate::noise::{
    gaussian_cell_increments, levy_cell_increments, levy_cell_increments_with, simulate_jump_record, CellGeometry,
    CellIncrements, Jump, JumpRecord,
};
use crate::quadrature::integrate;
use crate::solver::{solve_event_driven, solve_grid, GREEN};
use crate::stats::{compensator_a, ks_two_sample, martingale_orthogonality, quadratic_coefficient, NoiseLaw};
use crate::vprocess::{
    magic_pair, v_coeffs_direct, v_coeffs_semimart, weak_residual, Bump, PathRef, TestFunction, VPairing, WeakForm,
};
use crate::wave_kernel::{in_forward_cone, preceq, rotate, ConePoint, Domain, RotatedLattice};

/// Monte Carlo paths per stochastic check.
pub const VALIDATE_PATHS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &str, pass: bool, detail: String) -> Check {
    Check {
        name: name.into(),
        pass,
        detail,
    }
}

type CheckFn = fn(&ExperimentConfig) -> Result<Check>;

/// Every check, in report order.
pub const CHECKS: &[(&str, CheckFn)] = &[
    ("config.round_trip", config_round_trip),
    ("levy_measures.sigma2_closed_form", sigma2_closed_form),
    ("levy_measures.ar_ratio_bounds", ar_ratio_bounds),
    ("levy_measures.alpha_stable_exact_zero", alpha_stable_exact_zero),
    ("levy_measures.gamma_limit", gamma_limit),
    ("levy_measures.sampler_tail_mass", sampler_tail_mass),
    ("noise.binning_conserves_mass", binning_conserves_mass),
    ("noise.refinement_consistency", refinement_consistency),
    ("noise.reproducible", reproducible),
    ("noise.gaussian_isometry", gaussian_isometry),
    ("wave_kernel.green_integral", green_integral),
    ("wave_kernel.order_isomorphism", order_isomorphism),
    ("solver.brute_force_equivalence", brute_force_equivalence),
    ("solver.event_grid_agreement", event_grid_agreement),
    ("solver.scaling", scaling),
    ("solver.strong_martingale_orthogonality", strong_martingale_orthogonality),
    ("solver.cairoli_bound", cairoli_bound),
    ("solver.uniform_second_moment", uniform_second_moment),
    ("hermite.orthonormality", hermite_orthonormality),
    ("hermite.derivative_norm", hermite_derivative_norm),
    ("hermite.ode_residual", hermite_ode_residual),
    ("hermite.dual_norm_monotone", dual_norm_monotone),
    ("vprocess.initial_condition", v_initial_condition),
    ("vprocess.single_jump_formula", v_single_jump),
    ("vprocess.representation_equivalence", representation_equivalence),
    ("vprocess.gaussian_isometry", v_gaussian_isometry),
    ("vprocess.tail_summability", tail_summability),
    ("vprocess.magic_pair", magic_pair_identities),
    ("vprocess.weak_residual_single_jump", weak_residual_single_jump),
    ("stats.ks_properties", ks_properties),
    ("stats.compensator_zero_xi", compensator_zero_xi),
    ("stats.quadratic_coefficient", quadratic_coefficient_check),
    ("stats.m_increment_orthogonality", m_increment_orthogonality),
];

/// Runs every check. A check that errors is reported as a failure.
pub fn run_suite(cfg: &ExperimentConfig) -> Result<Vec<Check>> {
    Ok(CHECKS
        .iter()
        .map(|(name, f)| match f(cfg) {
            Ok(c) => c,
            Err(e) => check(name, false, format!("error: {e}")),
        })
        .collect())
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

fn coarse_spacing(cfg: &ExperimentConfig) -> f64 {
    cfg.spacing.max(1.0 / 32.0)
}

fn config_round_trip(cfg: &ExperimentConfig) -> Result<Check> {
    let back = ExperimentConfig::from_json(&cfg.to_json()?)?;
    Ok(check("config.round_trip", back == *cfg, "serialize then parse".into()))
}

fn sigma2_closed_form(cfg: &ExperimentConfig) -> Result<Check> {
    let mut worst = 0.0f64;
    for &e in &cfg.epsilons {
        let s = cfg.spec(e)?;
        let a = sigma2(&s)?;
        worst = worst.max((a - sigma2_quadrature(&s)?).abs() / a);
    }
    Ok(check("levy_measures.sigma2_closed_form", worst < 1e-6, format!("max rel err {worst:.2e}")))
}

fn ar_ratio_bounds(cfg: &ExperimentConfig) -> Result<Check> {
    let mut kappas = cfg.kappas.clone();
    kappas.sort_by(f64::total_cmp);
    let mut ok = true;
    for &e in &cfg.epsilons {
        let s = cfg.spec(e)?;
        let r = kappas.iter().map(|&k| ar_ratio(&s, k)).collect::<Result<Vec<_>>>()?;
        ok &= r.iter().all(|&x| (0.0..=1.0).contains(&x));
        ok &= r.windows(2).all(|w| w[1] <= w[0]);
    }
    Ok(check("levy_measures.ar_ratio_bounds", ok, "in [0,1], non-increasing in kappa".into()))
}

fn alpha_stable_exact_zero(_: &ExperimentConfig) -> Result<Check> {
    let mut bad = 0;
    for alpha in [0.5, 1.5] {
        for kappa in [0.5f64, 1.0, 2.0] {
            let e0 = (2.0 * kappa * kappa / (2.0 - alpha)).powf(1.0 / alpha);
            for k in 1..=4 {
                let s = LevyMeasureSpec::alpha_stable(alpha, e0 * 0.5f64.powi(k))?;
                if ar_ratio(&s, kappa)? != 0.0 {
                    bad += 1;
                }
            }
        }
    }
    Ok(check("levy_measures.alpha_stable_exact_zero", bad == 0, format!("{bad} nonzero ratios")))
}

fn gamma_limit(_: &ExperimentConfig) -> Result<Check> {
    let r = ar_ratio(&LevyMeasureSpec::gamma(1.0, 1e-3)?, 1.0)?;
    Ok(check("levy_measures.gamma_limit", (r - 0.5).abs() < 0.02, format!("ratio {r:.4}")))
}

fn sampler_tail_mass(cfg: &ExperimentConfig) -> Result<Check> {
    let e = cfg.simulate_epsilon();
    let s = cfg.spec(e)?;
    let floor = (cfg.jump_floor * e).max(1e-3 * e);
    let sampler = AmplitudeSampler::new(&s, floor)?;
    let level = (floor * e).sqrt();
    let p = s.mass_above(level)? / s.mass_above(floor)?;
    let n = 20_000;
    let mut rng = path_rng(derive_seed(cfg.seed, 101), 0);
    let hits = (0..n).filter(|_| sampler.sample(&mut rng).abs() > level).count();
    let phat = hits as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    let z = (phat - p) / se;
    Ok(check(
        "levy_measures.sampler_tail_mass",
        z.abs() < 4.0,
        format!("P(|z|>{level:.3e}) = {phat:.4} vs {p:.4}, z = {z:.2}"),
    ))
}

fn binning_conserves_mass(cfg: &ExperimentConfig) -> Result<Check> {
    let d = cfg.domain()?;
    let s = cfg.spec(cfg.epsilons[1])?;
    let floor = cfg.jump_floor.max(0.05) * s.epsilon;
    let rec = simulate_jump_record(&s, d, floor, &mut path_rng(derive_seed(cfg.seed, 102), 0))?;
    let geom = CellGeometry::new(RotatedLattice::covering(&d, coarse_spacing(cfg))?, d);
    let inc = levy_cell_increments_with(&rec, &geom, 0.7)?;
    let expect = (rec.jumps.iter().map(|j| j.z).sum::<f64>() - rec.drift * geom.total_area()) / 0.7;
    let err = (inc.total() - expect).abs() / (1.0 + expect.abs());
    Ok(check("noise.binning_conserves_mass", err < 1e-10, format!("rel err {err:.2e}")))
}

fn refinement_consistency(cfg: &ExperimentConfig) -> Result<Check> {
    let d = cfg.domain()?;
    let s = cfg.spec(cfg.epsilons[0])?;
    let rec = simulate_jump_record(&s, d, 0.05 * s.epsilon, &mut path_rng(derive_seed(cfg.seed, 103), 0))?;
    let coarse = RotatedLattice::covering(&d, 1.0 / 16.0)?;
    let a = levy_cell_increments(&rec, &coarse, 1.0)?;
    let b = levy_cell_increments(&rec, &coarse.refined(), 1.0)?.coarsen()?;
    let worst = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs() / (1.0 + x.abs()))
        .fold(0.0, f64::max);
    Ok(check("noise.refinement_consistency", worst < 1e-10, format!("max rel diff {worst:.2e}")))
}

fn reproducible(cfg: &ExperimentConfig) -> Result<Check> {
    let d = cfg.domain()?;
    let s = cfg.spec(cfg.epsilons[1])?;
    let floor = 0.1 * s.epsilon;
    let a = simulate_jump_record(&s, d, floor, &mut path_rng(cfg.seed, 9))?;
    let b = simulate_jump_record(&s, d, floor, &mut path_rng(cfg.seed, 9))?;
    let c = simulate_jump_record(&s, d, floor, &mut path_rng(cfg.seed, 10))?;
    Ok(check(
        "noise.reproducible",
        a.jumps == b.jumps && a.jumps != c.jumps,
        format!("{} jumps", a.len()),
    ))
}

fn gaussian_isometry(cfg: &ExperimentConfig) -> Result<Check> {
    let d = cfg.domain()?;
    let geom = CellGeometry::new(RotatedLattice::covering(&d, 1.0 / 16.0)?, d);
    let seed = derive_seed(cfg.seed, 104);
    let totals: Vec<f64> = (0..VALIDATE_PATHS)
        .into_par_iter()
        .map(|k| gaussian_cell_increments(&geom, &mut path_rng(seed, k as u64)).total().powi(2))
        .collect();
    let (m, se) = mean_se(&totals);
    let area = d.area();
    Ok(check(
        "noise.gaussian_isometry",
        (m - area).abs() < 3.0 * se,
        format!("E[total^2] = {m:.4} ± {se:.4} vs area {area}"),
    ))
}

fn green_integral(_: &ExperimentConfig) -> Result<Check> {
    let mut worst = 0.0f64;
    for p in [1, 2] {
        for t in [0.5, 1.0] {
            let x = 0.3;
            // split at the cone edges so each piece is smooth
            let inner = |s: f64| {
                let h = t - s;
                let g = |y: f64| crate::wave_kernel::green(t, x, s, y).powi(p);
                [(x - h - 0.1, x - h), (x - h, x + h), (x + h, x + h + 0.1)]
                    .iter()
                    .map(|&(a, b)| integrate(g, a, b, 1e-13, 1e-15).map_or(f64::NAN, |e| e.value))
                    .sum::<f64>()
            };
            let v = integrate(inner, 0.0, t, 1e-12, 1e-14)?.value;
            worst = worst.max((v - 0.5f64.powi(p) * t * t).abs());
        }
    }
    Ok(check("wave_kernel.green_integral", worst < 1e-10, format!("max err {worst:.2e}")))
}

fn order_isomorphism(cfg: &ExperimentConfig) -> Result<Check> {
    let mut rng = path_rng(derive_seed(cfg.seed, 105), 0);
    let mut bad = 0;
    for _ in 0..10_000 {
        let a = ConePoint::new(rng.random(), rng.random::<f64>() * 2.0 - 0.5);
        let b = ConePoint::new(rng.random(), rng.random::<f64>() * 2.0 - 0.5);
        let (a1, a2) = rotate(a.t, a.x);
        let (b1, b2) = rotate(b.t, b.x);
        let rot = a1 <= b1 && a2 <= b2;
        if preceq(a, b) != rot || in_forward_cone(a, b) != preceq(a, b) {
            bad += 1;
        }
    }
    Ok(check("wave_kernel.order_isomorphism", bad == 0, format!("{bad} of 10000 disagree")))
}

pub(crate) fn brute_force(inc: &CellIncrements, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let lat = inc.lattice;
    let s = lat.n2 + 1;
    let mut v = vec![0.0; (lat.n1 + 1) * s];
    for i in 0..=lat.n1 {
        for j in 0..=lat.n2 {
            let mut acc = 0.0;
            for a in 0..i {
                for b in 0..j {
                    let d = inc.get(a, b);
                    if d != 0.0 {
                        acc += GREEN * f(v[a * s + b]) * d;
                    }
                }
            }
            v[i * s + j] = acc;
        }
    }
    v
}

fn brute_force_equivalence(cfg: &ExperimentConfig) -> Result<Check> {
    let mut rng = path_rng(derive_seed(cfg.seed, 106), 0);
    let f = |u: f64| u.clamp(-3.0, 3.0) + 1.0;
    let mut bad = 0;
    for trial in 0..100 {
        let n = 1 + trial % 16;
        let lat = RotatedLattice::new(ConePoint::new(0.0, 0.0), 1.0, n, n)?;
        let mut inc = CellIncrements::zeros(lat);
        for v in inc.values.iter_mut() {
            *v = 2.0 * rng.random_range(-2..=2) as f64;
        }
        if solve_grid(&inc, f).values != brute_force(&inc, f) {
            bad += 1;
        }
    }
    Ok(check("solver.brute_force_equivalence", bad == 0, format!("{bad} of 100 trials differ")))
}

fn event_grid_agreement(cfg: &ExperimentConfig) -> Result<Check> {
    let d = cfg.domain()?;
    let rec = JumpRecord {
        jumps: vec![
            Jump { t: 0.1, x: 0.31, z: 1.0 },
            Jump { t: 0.37, x: 0.52, z: -0.7 },
            Jump { t: 0.55, x: 0.44, z: 0.4 },
        ],
        floor: 0.1,
        drift: 0.0,
        domain: d,
    };
    let f = |u: f64| cfg.f.eval(u);
    let ev = solve_event_driven(&rec, f, 1.0)?;
    let geom = CellGeometry::new(RotatedLattice::covering(&d, 1.0 / 128.0)?, d);
    let grid = solve_grid(&levy_cell_increments_with(&rec, &geom, 1.0)?, f);
    let mut worst = 0.0f64;
    for &(t, x) in &[(1.0, 0.5), (0.8, 0.3), (0.6, 0.6), (0.9, -0.1)] {
        worst = worst.max((ev.eval(t, x) - grid.eval(t, x)?).abs());
    }
    Ok(check("solver.event_grid_agreement", worst < 1e-12, format!("max diff {worst:.2e}")))
}

fn scaling(cfg: &ExperimentConfig) -> Result<Check> {
    let d = cfg.domain()?;
    let geom = CellGeometry::new(RotatedLattice::covering(&d, 1.0 / 16.0)?, d);
    let inc = gaussian_cell_increments(&geom, &mut path_rng(derive_seed(cfg.seed, 107), 0));
    let a = solve_grid(&inc, |_| 1.0);
    let b = solve_grid(&inc, |_| 3.0);
    let mut scaled = inc.clone();
    scaled.values.iter_mut().for_each(|v| *v /= 2.0);
    let c = solve_grid(&scaled, |_| 1.0);
    let worst = a
        .values
        .iter()
        .zip(&b.values)
        .zip(&c.values)
        .map(|((x, y), z)| (3.0 * x - y).abs().max((0.5 * x - z).abs()))
        .fold(0.0, f64::max);
    Ok(check("solver.scaling", worst < 1e-12, format!("max deviation {worst:.2e}")))
}

/// Rotated indices of the rectangle corner closest to `(t, x)`.
fn corner(lat: &RotatedLattice, t: f64, x: f64) -> (usize, usize) {
    lat.upper_node(ConePoint::new(t, x)).expect("inside lattice")
}

fn strong_martingale_orthogonality(cfg: &ExperimentConfig) -> Result<Check> {
    let d = cfg.domain()?;
    let geom = CellGeometry::new(RotatedLattice::covering(&d, coarse_spacing(cfg))?, d);
    let lat = geom.lattice;
    let (i, j) = corner(&lat, 0.6, 0.5);
    let step = (0.2 / lat.spacing).round() as usize;
    let seed = derive_seed(cfg.seed, 108);
    let f = cfg.f;
    let rows: Vec<(f64, f64, f64)> = (0..VALIDATE_PATHS)
        .into_par_iter()
        .map(|k| {
            let inc = gaussian_cell_increments(&geom, &mut path_rng(seed, k as u64));
            let g = solve_grid(&inc, |u| f.eval(u));
            let rect = g.node(i + step, j + step) - g.node(i, j + step) - g.node(i + step, j) + g.node(i, j);
            (rect, g.node(i, j + step), g.node(i + step, j))
        })
        .collect();
    let inc: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let p1: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let p2: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let ones = vec![1.0; inc.len()];
    let a = martingale_orthogonality(&inc, &p1)?;
    let b = martingale_orthogonality(&inc, &p2)?;
    let c = martingale_orthogonality(&inc, &ones)?;
    Ok(check(
        "solver.strong_martingale_orthogonality",
        a.pass && b.pass && c.pass,
        format!("z = {:.2}, {:.2}, mean z = {:.2}", a.z, b.z, c.z),
    ))
}

fn cairoli_bound(cfg: &ExperimentConfig) -> Result<Check> {
    let d = cfg.domain()?;
    let geom = CellGeometry::new(RotatedLattice::covering(&d, coarse_spacing(cfg))?, d);
    let lat = geom.lattice;
    let (i, j) = corner(&lat, 1.0, 0.5);
    let seed = derive_seed(cfg.seed, 109);
    let f = cfg.f;
    let rows: Vec<(f64, f64)> = (0..VALIDATE_PATHS)
        .into_par_iter()
        .map(|k| {
            let inc = gaussian_cell_increments(&geom, &mut path_rng(seed, k as u64));
            let g = solve_grid(&inc, |u| f.eval(u));
            (g.rect_sup_sq(i, j), g.node(i, j).powi(2))
        })
        .collect();
    let sup: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let end: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let (ms, ses) = mean_se(&sup);
    let (me, see) = mean_se(&end);
    let slack = 3.0 * (ses * ses + 256.0 * see * see).sqrt();
    Ok(check(
        "solver.cairoli_bound",
        ms <= 16.0 * me + slack,
        format!("E sup = {ms:.4}, E corner = {me:.4}, ratio {:.2}", ms / me),
    ))
}

fn uniform_second_moment(cfg: &ExperimentConfig) -> Result<Check> {
    let d = cfg.domain()?;
    let geom = CellGeometry::new(RotatedLattice::covering(&d, 1.0 / 16.0)?, d);
    let lat = geom.lattice;
    let f = cfg.f;
    let paths = 400;
    let mut sups = Vec::new();
    for (e, &eps) in cfg.epsilons.iter().enumerate() {
        let noise = crate::noise::LevyNoise::new(cfg.spec(eps)?, cfg.jump_floor.max(0.05) * eps, true, cfg.jump_cap)?;
        let seed = derive_seed(cfg.seed, 110 + e as u64);
        let fields: Vec<Vec<f64>> = (0..paths)
            .into_par_iter()
            .map(|k| {
                let (_, inc) = noise.increments(&geom, &mut path_rng(seed, k as u64))?;
                Ok(solve_grid(&inc, |u| f.eval(u)).values)
            })
            .collect::<Result<_>>()?;
        let mut sup = 0.0f64;
        for n in 0..fields[0].len() {
            let (i, j) = (n / (lat.n2 + 1), n % (lat.n2 + 1));
            let p = lat.node_point(i, j);
            if p.t > 0.0 && p.t <= cfg.t_max && p.x >= 0.0 && p.x <= cfg.length {
                sup = sup.max(fields.iter().map(|v| v[n] * v[n]).sum::<f64>() / paths as f64);
            }
        }
        sups.push(sup);
    }
    let lo = sups.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = sups.iter().cloned().fold(0.0, f64::max);
    Ok(check(
        "solver.uniform_second_moment",
        hi.is_finite() && hi <= 2.0 * lo,
        format!("sup E u^2 per epsilon {sups:.4?}"),
    ))
}

fn hermite_grid() -> (Vec<f64>, Vec<f64>) {
    let g = ProjectionGrid::new(16.0, 50);
    (g.nodes().to_vec(), g.weights().to_vec())
}

fn hermite_orthonormality(_: &ExperimentConfig) -> Result<Check> {
    let (xs, ws) = hermite_grid();
    let n = 50;
    let mut gram = vec![0.0; (n + 1) * (n + 1)];
    let mut h = Vec::new();
    for (&x, &w) in xs.iter().zip(&ws) {
        hermite_all(n, x, &mut h);
        for p in 0..=n {
            for q in 0..=n {
                gram[p * (n + 1) + q] += w * h[p] * h[q];
            }
        }
    }
    let mut worst = 0.0f64;
    for p in 0..=n {
        for q in 0..=n {
            let target = if p == q { 1.0 } else { 0.0 };
            worst = worst.max((gram[p * (n + 1) + q] - target).abs());
        }
    }
    Ok(check("hermite.orthonormality", worst < 1e-8, format!("max err {worst:.2e}")))
}

fn hermite_derivative_norm(_: &ExperimentConfig) -> Result<Check> {
    let (xs, ws) = hermite_grid();
    let mut worst = 0.0f64;
    for q in 0..=20 {
        let s: f64 = xs.iter().zip(&ws).map(|(&x, &w)| w * hermite_deriv(q, x).powi(2)).sum();
        worst = worst.max((s - (q as f64 + 0.5)).abs());
    }
    Ok(check("hermite.derivative_norm", worst < 1e-8, format!("max err {worst:.2e}")))
}

fn hermite_ode_residual(_: &ExperimentConfig) -> Result<Check> {
    let d = 1e-3;
    let mut worst = 0.0f64;
    for q in [0, 1, 2, 5, 10, 20, 40] {
        for k in 0..41 {
            let x = -4.0 + 0.2 * k as f64;
            // fourth-order central difference for h''
            let h = |y: f64| hermite_eval(q, y);
            let d2 = (-h(x + 2.0 * d) + 16.0 * h(x + d) - 30.0 * h(x) + 16.0 * h(x - d) - h(x - 2.0 * d)) / (12.0 * d * d);
            worst = worst.max((d2 + (1.0 + 2.0 * q as f64 - x * x) * h(x)).abs());
        }
    }
    Ok(check("hermite.ode_residual", worst < 1e-6, format!("max residual {worst:.2e}")))
}

fn dual_norm_monotone(cfg: &ExperimentConfig) -> Result<Check> {
    let mut rng = path_rng(derive_seed(cfg.seed, 111), 0);
    let mut ok = true;
    for _ in 0..200 {
        let c: Vec<f64> = (0..20).map(|_| rng.random::<f64>() - 0.5).collect();
        ok &= dual_norm(&c, 3.0) <= dual_norm(&c, 2.5) && dual_norm(&c, 2.5) <= dual_norm(&c, 0.0);
    }
    Ok(check("hermite.dual_norm_monotone", ok, "decreasing in r".into()))
}

fn one_jump(s: f64, y: f64, z: f64, d: Domain) -> Result<crate::solver::EventSolution> {
    let rec = JumpRecord {
        jumps: vec![Jump { t: s, x: y, z }],
        floor: 0.0,
        drift: 0.0,
        domain: d,
    };
    solve_event_driven(&rec, |_| 1.0, 1.0)
}

/// A seeded symmetric path with few jumps.
fn sparse_path(cfg: &ExperimentConfig, tag: u64) -> Result<crate::solver::EventSolution> {
    let d = cfg.domain()?;
    let s = LevyMeasureSpec::alpha_stable(1.5, 1.0)?;
    let rec = simulate_jump_record(&s, d, 0.3, &mut path_rng(derive_seed(cfg.seed, tag), 0))?;
    solve_event_driven(&rec, |u| cfg.f.eval(u), sigma2(&s)?.sqrt())
}

fn v_initial_condition(cfg: &ExperimentConfig) -> Result<Check> {
    let sol = sparse_path(cfg, 112)?;
    let v = v_coeffs_direct(PathRef::Event(&sol), &[0.0, 0.5], 16, |u| cfg.f.eval(u), cfg.r)?;
    let ok = v.coeffs[0].iter().all(|&c| c == 0.0);
    Ok(check("vprocess.initial_condition", ok, format!("{} jumps", sol.record.len())))
}

fn v_single_jump(cfg: &ExperimentConfig) -> Result<Check> {
    let sol = one_jump(0.2, 0.1, 1.0, cfg.domain()?)?;
    let v = v_coeffs_direct(PathRef::Event(&sol), &[0.1, 0.7], 10, |_| 1.0, cfg.r)?;
    let mut worst = v.coeffs[0].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    for q in 0..=10 {
        let e = 0.5 * (hermite_eval(q, 0.1 + 0.5) + hermite_eval(q, 0.1 - 0.5));
        worst = worst.max((v.coeffs[1][q] - e).abs());
    }
    Ok(check("vprocess.single_jump_formula", worst < 1e-14, format!("max err {worst:.2e}")))
}

fn representation_equivalence(cfg: &ExperimentConfig) -> Result<Check> {
    let sol = sparse_path(cfg, 113)?;
    let p = PathRef::Event(&sol);
    let f = |u: f64| cfg.f.eval(u);
    let times = cfg.times(cfg.t_max);
    let times = &times[..times.len().min(17)];
    let direct = v_coeffs_direct(p, times, 16, f, cfg.r)?;
    let e1 = v_coeffs_semimart(p, times, 16, f, cfg.r, 1.0 / 64.0)?.max_dual_distance(&direct)?;
    let e2 = v_coeffs_semimart(p, times, 16, f, cfg.r, 1.0 / 128.0)?.max_dual_distance(&direct)?;
    let ratio = e2 / e1;
    Ok(check(
        "vprocess.representation_equivalence",
        e1 < 1e-2 && ratio < 0.5,
        format!("errors {e1:.2e}, {e2:.2e}, ratio {ratio:.3}"),
    ))
}

fn v_gaussian_isometry(cfg: &ExperimentConfig) -> Result<Check> {
    let d = cfg.domain()?;
    let geom = CellGeometry::new(RotatedLattice::covering(&d, 1.0 / 32.0)?, d);
    let t = cfg.probe().t;
    let seed = derive_seed(cfg.seed, 114);
    let samples: Vec<f64> = (0..VALIDATE_PATHS)
        .into_par_iter()
        .map(|k| {
            let inc = gaussian_cell_increments(&geom, &mut path_rng(seed, k as u64));
            let g = solve_grid(&inc, |_| 1.0);
            let v = v_coeffs_direct(PathRef::grid(&g, &inc), &[t], 0, |_| 1.0, cfg.r)?;
            Ok(v.coeffs[0][0].powi(2))
        })
        .collect::<Result<_>>()?;
    let (m, se) = mean_se(&samples);
    let (lo, hi) = (d.x_lo, d.x_hi);
    let kernel = |s: f64| {
        let dd = t - s;
        integrate(|y| 0.25 * (hermite_eval(0, y + dd) + hermite_eval(0, y - dd)).powi(2), lo, hi, 1e-11, 1e-14)
            .map_or(f64::NAN, |e| e.value)
    };
    let exact = integrate(kernel, 0.0, t, 1e-9, 1e-12)?.value;
    Ok(check(
        "vprocess.gaussian_isometry",
        (m - exact).abs() < 3.0 * se,
        format!("Var <v,h0> = {m:.4} ± {se:.4} vs {exact:.4}"),
    ))
}

fn tail_summability(cfg: &ExperimentConfig) -> Result<Check> {
    let sol = sparse_path(cfg, 115)?;
    let q = cfg.q_max;
    let v = v_coeffs_direct(PathRef::Event(&sol), &[cfg.t_max], q, |u| cfg.f.eval(u), cfg.r)?;
    let c = &v.coeffs[0];
    let half = q / 2;
    let w = |k: usize| (1.0 + 2.0 * k as f64).powf(-cfg.r);
    let tail: f64 = (half + 1..=q).map(|k| w(k) * c[k] * c[k]).sum();
    let cmax = c.iter().fold(0.0f64, |m, x| m.max(x * x));
    let bound: f64 = cmax * (half + 1..=q).map(|k| (1.0 + 2.0 * k as f64).powf(-cfg.r + 1.0)).sum::<f64>();
    Ok(check(
        "vprocess.tail_summability",
        tail <= bound,
        format!("tail {tail:.3e} <= {bound:.3e}"),
    ))
}

fn magic_pair_identities(cfg: &ExperimentConfig) -> Result<Check> {
    let phi = cfg.phi();
    let t = cfg.t_max;
    let mp = magic_pair(&phi, t);
    let (lo, hi) = phi.support();
    let mut exact = true;
    let d = 1e-4;
    let mut worst = 0.0f64;
    for a in 0..20 {
        let y = lo - 0.5 + (hi - lo + 1.0) * a as f64 / 19.0;
        exact &= mp.psi2(t, y) == 0.0 && mp.psi1(t, y) == phi.value(y);
        for b in 0..20 {
            let s = 0.05 * t + 0.6 * t * b as f64 / 19.0;
            let dt = (mp.psi2(s + d, y) - mp.psi2(s - d, y)) / (2.0 * d);
            worst = worst.max((dt + mp.psi1(s, y)).abs());
        }
    }
    Ok(check(
        "vprocess.magic_pair",
        exact && worst < 1e-6,
        format!("terminal values exact: {exact}, max |d_t psi2 + psi1| {worst:.2e}"),
    ))
}

fn weak_residual_single_jump(cfg: &ExperimentConfig) -> Result<Check> {
    let d = Domain::new(1.0, -1.0, 2.0)?;
    let sol = one_jump(0.1, -0.5, 2.0, d)?;
    let p = PathRef::Event(&sol);
    let times: Vec<f64> = (0..=128).map(|k| k as f64 / 128.0).collect();
    let v = v_coeffs_direct(p, &times, 8, |_| 1.0, cfg.r)?;
    let proj = ProjectionGrid::for_window(2.0, 8);
    let phi1 = Bump::new(0.9, 0.2, 1.0);
    let phi2 = Bump::new(0.0, 0.25, 1.0);
    let form = WeakForm {
        phi1: &phi1,
        phi2: &phi2,
        window: (-1.0, 2.0),
        projection: &proj,
        pairing: VPairing::Direct,
    };
    let res = weak_residual(p, &v, &form, |_| 1.0, 128)?;
    Ok(check("vprocess.weak_residual_single_jump", res.abs() < 1e-3, format!("residual {res:.2e}")))
}

fn ks_properties(cfg: &ExperimentConfig) -> Result<Check> {
    let mut rng = path_rng(derive_seed(cfg.seed, 116), 0);
    let a: Vec<f64> = (0..500).map(|_| rng.random::<f64>()).collect();
    let b: Vec<f64> = (0..300).map(|_| rng.random::<f64>().powi(2)).collect();
    let ab = ks_two_sample(&a, &b)?;
    let ba = ks_two_sample(&b, &a)?;
    let ea: Vec<f64> = a.iter().map(|x| x.exp()).collect();
    let eb: Vec<f64> = b.iter().map(|x| x.exp()).collect();
    let e = ks_two_sample(&ea, &eb)?;
    let ok = ab == ba && ab == e && (0.0..=1.0).contains(&ab);
    Ok(check("stats.ks_properties", ok, format!("KS = {ab:.4}")))
}

fn compensator_zero_xi(cfg: &ExperimentConfig) -> Result<Check> {
    let sol = sparse_path(cfg, 117)?;
    let phi = cfg.phi();
    let times = cfg.times(cfg.t_max);
    let times = &times[..times.len().min(9)];
    let c = compensator_a(PathRef::Event(&sol), 0.0, &phi, &phi, NoiseLaw::Gaussian, times, |u| cfg.f.eval(u))?;
    let ok = c.a_bar.iter().all(|a| a.norm() == 0.0) && c.m.iter().all(|m| *m == num_complex::Complex64::new(1.0, 0.0));
    Ok(check("stats.compensator_zero_xi", ok, "A = 0 and M = 1".into()))
}

fn quadratic_coefficient_check(cfg: &ExperimentConfig) -> Result<Check> {
    let mut worst = 0.0f64;
    for &e in &cfg.epsilons {
        let spec = cfg.spec(e)?;
        let sigma = sigma2(&spec)?.sqrt();
        let c = quadratic_coefficient(NoiseLaw::Levy { spec: &spec, sigma }, 1e-3)?;
        worst = worst.max((c + 0.5).abs() / 0.5);
    }
    Ok(check("stats.quadratic_coefficient", worst < 1e-4, format!("max rel err {worst:.2e}")))
}

fn m_increment_orthogonality(cfg: &ExperimentConfig) -> Result<Check> {
    let d = cfg.domain()?;
    let geom = CellGeometry::new(RotatedLattice::covering(&d, 1.0 / 16.0)?, d);
    let phi = cfg.phi();
    let times: Vec<f64> = (0..=8).map(|k| cfg.t_max * k as f64 / 8.0).collect();
    let seed = derive_seed(cfg.seed, 118);
    let f = cfg.f;
    let xi = 1.0;
    let rows: Vec<(f64, f64, f64)> = (0..VALIDATE_PATHS / 2)
        .into_par_iter()
        .map(|k| {
            let inc = gaussian_cell_increments(&geom, &mut path_rng(seed, k as u64));
            let g = solve_grid(&inc, |u| f.eval(u));
            let c = compensator_a(PathRef::grid(&g, &inc), xi, &phi, &phi, NoiseLaw::Gaussian, &times, |u| f.eval(u))?;
            let dm = c.m[8] - c.m[4];
            Ok((dm.re, dm.im, c.x[4]))
        })
        .collect::<Result<_>>()?;
    let re: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let im: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let past: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let a = martingale_orthogonality(&re, &past)?;
    let b = martingale_orthogonality(&im, &past)?;
    Ok(check(
        "stats.m_increment_orthogonality",
        a.pass && b.pass,
        format!("z(re) = {:.2}, z(im) = {:.2}", a.z, b.z),
    ))
}
