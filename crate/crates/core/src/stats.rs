//! Sample summaries, two-sample distances, martingale orthogonality tests and
//! the martingale-problem compensator diagnostic.

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy_measures::LevyMeasureSpec;
use crate::vprocess::{u_pair, v_pair_direct, PathRef, TestFunction};

/// A labelled sample of finite reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub values: Vec<f64>,
    pub label: String,
    pub seed: Option<u64>,
}

impl SampleSet {
    pub fn new(values: Vec<f64>, label: impl Into<String>, seed: Option<u64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("sample value {v}")));
        }
        Ok(Self {
            values,
            label: label.into(),
            seed,
        })
    }
}

/// Sup-distance between the empirical CDFs of `a` and `b`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (na, nb) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Mean, variance, skewness and excess kurtosis with jackknife standard
/// errors. Skewness and kurtosis are absent for a constant sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub n: usize,
    pub mean: f64,
    pub mean_se: f64,
    pub variance: f64,
    pub variance_se: f64,
    pub skewness: Option<f64>,
    pub skewness_se: Option<f64>,
    pub kurtosis: Option<f64>,
    pub kurtosis_se: Option<f64>,
}

struct Moments {
    mean: f64,
    var: f64,
    skew: Option<f64>,
    kurt: Option<f64>,
}

// a_k are the averages of d^k for data centred at a fixed shift
fn moments_from_raw(n: f64, a1: f64, a2: f64, a3: f64, a4: f64, shift: f64) -> Moments {
    let m2 = (a2 - a1 * a1).max(0.0);
    let m3 = a3 - 3.0 * a1 * a2 + 2.0 * a1.powi(3);
    let m4 = a4 - 4.0 * a1 * a3 + 6.0 * a1 * a1 * a2 - 3.0 * a1.powi(4);
    let degenerate = m2 <= 1e-14 * (a2.abs() + shift * shift).max(f64::MIN_POSITIVE);
    Moments {
        mean: shift + a1,
        var: m2 * n / (n - 1.0),
        skew: (!degenerate).then(|| m3 / m2.powf(1.5)),
        kurt: (!degenerate).then(|| m4 / (m2 * m2) - 3.0),
    }
}

pub fn moment_report(x: &[f64]) -> Result<MomentReport> {
    if x.is_empty() {
        return Err(Error::EmptySample);
    }
    if x.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: x.len() });
    }
    let n = x.len() as f64;
    let shift = x.iter().sum::<f64>() / n;
    let mut s = [0.0; 4];
    for v in x {
        let d = v - shift;
        s[0] += d;
        s[1] += d * d;
        s[2] += d * d * d;
        s[3] += d * d * d * d;
    }
    let full = moments_from_raw(n, s[0] / n, s[1] / n, s[2] / n, s[3] / n, shift);

    // leave-one-out statistics from the power sums, O(n) overall
    let m = n - 1.0;
    let mut loo: [Vec<f64>; 4] = Default::default();
    for v in x {
        let d = v - shift;
        let mo = moments_from_raw(
            m,
            (s[0] - d) / m,
            (s[1] - d * d) / m,
            (s[2] - d * d * d) / m,
            (s[3] - d * d * d * d) / m,
            shift,
        );
        loo[0].push(mo.mean);
        loo[1].push(mo.var);
        if let (Some(sk), Some(ku)) = (mo.skew, mo.kurt) {
            loo[2].push(sk);
            loo[3].push(ku);
        }
    }
    let jack = |vals: &[f64]| -> Option<f64> {
        if vals.len() != x.len() {
            return None;
        }
        let mean = vals.iter().sum::<f64>() / n;
        Some(((n - 1.0) / n * vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>()).sqrt())
    };
    Ok(MomentReport {
        n: x.len(),
        mean: full.mean,
        mean_se: jack(&loo[0]).unwrap_or(0.0),
        variance: full.var,
        variance_se: jack(&loo[1]).unwrap_or(0.0),
        skewness: full.skew,
        skewness_se: full.skew.and(jack(&loo[2])),
        kurtosis: full.kurt,
        kurtosis_se: full.kurt.and(jack(&loo[3])),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatEntry {
    pub name: String,
    pub value: f64,
    pub std_error: Option<f64>,
    pub n: Option<usize>,
}

/// Named statistics plus free-form metadata (ε, κ, grid, N, seed, ...).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub entries: Vec<StatEntry>,
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl StatsReport {
    pub fn push(&mut self, name: impl Into<String>, value: f64, std_error: Option<f64>, n: Option<usize>) {
        self.entries.push(StatEntry {
            name: name.into(),
            value,
            std_error,
            n,
        });
    }

    pub fn push_moments(&mut self, prefix: &str, m: &MomentReport) {
        self.push(format!("{prefix}.mean"), m.mean, Some(m.mean_se), Some(m.n));
        self.push(format!("{prefix}.variance"), m.variance, Some(m.variance_se), Some(m.n));
        if let Some(s) = m.skewness {
            self.push(format!("{prefix}.skewness"), s, m.skewness_se, Some(m.n));
        }
        if let Some(k) = m.kurtosis {
            self.push(format!("{prefix}.excess_kurtosis"), k, m.kurtosis_se, Some(m.n));
        }
    }

    pub fn meta(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.metadata.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&StatEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["name", "value", "std_error", "n"])?;
        for e in &self.entries {
            out.write_record([
                e.name.clone(),
                e.value.to_string(),
                e.std_error.map_or(String::new(), |v| v.to_string()),
                e.n.map_or(String::new(), |v| v.to_string()),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Orthogonality {
    pub correlation: f64,
    pub z: f64,
    pub n: usize,
    pub pass: bool,
}

/// Pearson correlation of increments against a past functional, with
/// `z = corr · √N`. A constant past functional reduces to a z-test of the
/// increments' mean.
pub fn martingale_orthogonality(increments: &[f64], past: &[f64]) -> Result<Orthogonality> {
    if increments.len() != past.len() {
        return Err(Error::LengthMismatch(increments.len(), past.len()));
    }
    let n = increments.len();
    if n < 100 {
        return Err(Error::TooFewSamples { needed: 100, got: n });
    }
    let nf = n as f64;
    let mi = increments.iter().sum::<f64>() / nf;
    let mp = past.iter().sum::<f64>() / nf;
    let (mut sii, mut spp, mut sip) = (0.0, 0.0, 0.0);
    for (a, b) in increments.iter().zip(past) {
        let (da, db) = (a - mi, b - mp);
        sii += da * da;
        spp += db * db;
        sip += da * db;
    }
    let (correlation, z) = if spp <= 1e-28 * nf * (1.0 + mp * mp) {
        let sd = (sii / (nf - 1.0)).sqrt();
        let z = if sd > 0.0 { mi / (sd / nf.sqrt()) } else { 0.0 };
        (f64::NAN, z)
    } else if sii == 0.0 {
        (0.0, 0.0)
    } else {
        let c = sip / (sii * spp).sqrt();
        (c, c * nf.sqrt())
    };
    Ok(Orthogonality {
        correlation,
        z,
        n,
        pass: z.abs() < 3.0,
    })
}

/// Law of the normalized driving noise, through its compensated exponent
/// `I(θ) = ∫ (e^{iθz} − 1 − iθz) Q(dz)` of unit-variance increments.
#[derive(Debug, Clone, Copy)]
pub enum NoiseLaw<'a> {
    Gaussian,
    Levy { spec: &'a LevyMeasureSpec, sigma: f64 },
}

impl NoiseLaw<'_> {
    pub fn exponent(&self, theta: f64) -> Result<Complex64> {
        match self {
            NoiseLaw::Gaussian => Ok(Complex64::new(-0.5 * theta * theta, 0.0)),
            NoiseLaw::Levy { spec, sigma } => spec.compensated_exponent(theta / sigma),
        }
    }
}

/// The functional `X_t = ⟨u(t,·), φ₁⟩ + ⟨v_t, φ₂⟩`, its compensator `Ā`, and
/// the diagnostic `M_t = e^{iξ X_t} − Σ e^{iξ X_{s}} ΔĀ_s` on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompensatorPath {
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub a_bar: Vec<Complex64>,
    pub m: Vec<Complex64>,
}

/// Spatial nodes for the jump integral of the compensator.
const JUMP_NODES: usize = 64;

pub fn compensator_a<F: Fn(f64) -> f64>(
    path: PathRef<'_>,
    xi: f64,
    phi1: &dyn TestFunction,
    phi2: &dyn TestFunction,
    law: NoiseLaw<'_>,
    times: &[f64],
    f: F,
) -> Result<CompensatorPath> {
    if times.is_empty() || times[0] != 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::ShapeMismatch("compensator times must increase from 0".into()));
    }
    let atoms = path.atoms(&f)?;
    let (lo, hi) = phi2.support();
    let hx = (hi - lo) / JUMP_NODES as f64;
    let mut x = Vec::with_capacity(times.len());
    let mut rate = Vec::with_capacity(times.len());
    for &t in times {
        let (u1, u2) = if t > 0.0 {
            (
                u_pair(path, t, phi1.support(), |y| phi1.value(y))?,
                u_pair(path, t, phi2.support(), |y| phi2.d2(y))?,
            )
        } else {
            (0.0, 0.0)
        };
        let v1 = v_pair_direct(&atoms, t, phi1);
        let v2 = v_pair_direct(&atoms, t, phi2);
        x.push(u1 + v2);
        let mut jump = Complex64::new(0.0, 0.0);
        if xi != 0.0 {
            for k in 0..JUMP_NODES {
                let y = lo + (k as f64 + 0.5) * hx;
                let p = phi2.value(y);
                if p != 0.0 {
                    let u = if t > 0.0 { path.u(t, y)? } else { 0.0 };
                    jump += law.exponent(xi * f(u) * p)? * hx;
                }
            }
        }
        rate.push(Complex64::new(0.0, xi) * (u2 + v1) + jump);
    }
    let mut a_bar = vec![Complex64::new(0.0, 0.0)];
    let mut m = vec![Complex64::new(1.0, 0.0)];
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 1..times.len() {
        let da = rate[k - 1] * (times[k] - times[k - 1]);
        a_bar.push(a_bar[k - 1] + da);
        acc += Complex64::new(0.0, xi * x[k - 1]).exp() * da;
        m.push(Complex64::new(0.0, xi * x[k]).exp() - acc);
    }
    Ok(CompensatorPath {
        times: times.to_vec(),
        x,
        a_bar,
        m,
    })
}

/// `Re I(θ) / θ²` at small `θ`: tends to `−1/2` for unit-variance noise.
pub fn quadratic_coefficient(law: NoiseLaw<'_>, theta: f64) -> Result<f64> {
    Ok(law.exponent(theta)?.re / (theta * theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_measures::sigma2;
    use crate::mc::path_rng;
    use crate::noise::{Jump, JumpRecord};
    use crate::solver::solve_event_driven;
    use crate::vprocess::Bump;
    use crate::wave_kernel::Domain;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn ks_examples() {
        assert_eq!(ks_two_sample(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(ks_two_sample(&[0.0, 1.0], &[5.0, 6.0]).unwrap(), 1.0);
        assert_relative_eq!(ks_two_sample(&[1.0, 2.0, 3.0], &[1.5, 2.5, 3.5]).unwrap(), 1.0 / 3.0);
        assert!(matches!(ks_two_sample(&[], &[1.0]), Err(Error::EmptySample)));
    }

    #[test]
    fn ks_ties_across_samples() {
        assert_relative_eq!(ks_two_sample(&[1.0, 1.0, 2.0], &[1.0, 2.0, 2.0]).unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn moments_constant_and_normal() {
        let c = moment_report(&[2.0; 10]).unwrap();
        assert_eq!(c.variance, 0.0);
        assert!(c.skewness.is_none());

        let mut rng = path_rng(21, 0);
        let x: Vec<f64> = (0..100_000).map(|_| rng.sample(StandardNormal)).collect();
        let m = moment_report(&x).unwrap();
        assert!((m.variance - 1.0).abs() < 3.0 * m.variance_se, "{m:?}");
        assert!(m.mean.abs() < 3.0 * m.mean_se);
        // jackknife se of the variance of N(0,1) is close to √(2/N)
        assert!((m.variance_se / (2.0f64 / 1e5).sqrt() - 1.0).abs() < 0.1);
    }

    #[test]
    fn moments_match_direct_formulas() {
        let x = [1.0, 4.0, 2.0, 8.0, 5.0, 7.0];
        let m = moment_report(&x).unwrap();
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let c = |k: i32| x.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / n;
        assert_relative_eq!(m.mean, mean, max_relative = 1e-14);
        assert_relative_eq!(m.variance, c(2) * n / (n - 1.0), max_relative = 1e-12);
        assert_relative_eq!(m.skewness.unwrap(), c(3) / c(2).powf(1.5), max_relative = 1e-10);
        assert_relative_eq!(m.kurtosis.unwrap(), c(4) / c(2).powi(2) - 3.0, max_relative = 1e-10);
        // naive jackknife of the mean equals s/√n
        let s = (c(2) * n / (n - 1.0)).sqrt();
        assert_relative_eq!(m.mean_se, s / n.sqrt(), max_relative = 1e-10);
    }

    #[test]
    fn orthogonality_examples() {
        let mut rng = path_rng(5, 0);
        let a: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
        let b: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
        assert!(martingale_orthogonality(&a, &b).unwrap().pass);
        let leak = martingale_orthogonality(&a, &a).unwrap();
        assert!(!leak.pass && leak.z > 50.0);
        let ones = vec![1.0; a.len()];
        let r = martingale_orthogonality(&a, &ones).unwrap();
        assert!(r.correlation.is_nan() && r.pass);
        let shifted: Vec<f64> = a.iter().map(|v| v + 1.0).collect();
        assert!(!martingale_orthogonality(&shifted, &ones).unwrap().pass);
        assert!(matches!(martingale_orthogonality(&a[..10], &b[..9]), Err(Error::LengthMismatch(..))));
    }

    #[test]
    fn exponent_small_theta() {
        for spec in [
            LevyMeasureSpec::alpha_stable(1.5, 0.1).unwrap(),
            LevyMeasureSpec::gamma(1.0, 0.01).unwrap(),
            LevyMeasureSpec::point_mass(1.0, 3.0, 2.0).unwrap(),
        ] {
            let sigma = sigma2(&spec).unwrap().sqrt();
            let c = quadratic_coefficient(NoiseLaw::Levy { spec: &spec, sigma }, 1e-3).unwrap();
            assert!((c + 0.5).abs() < 0.5e-4, "{c}");
        }
    }

    fn tiny_path() -> crate::solver::EventSolution {
        let d = Domain::new(1.0, -1.0, 2.0).unwrap();
        let rec = JumpRecord {
            jumps: vec![Jump { t: 0.2, x: 0.4, z: 1.0 }, Jump { t: 0.5, x: 0.6, z: -0.5 }],
            floor: 0.1,
            drift: 0.0,
            domain: d,
        };
        solve_event_driven(&rec, |u| 0.5 * u + 1.0, 1.0).unwrap()
    }

    #[test]
    fn compensator_vanishes_at_zero_xi() {
        let sol = tiny_path();
        let b = Bump::on(0.0, 1.0);
        let times: Vec<f64> = (0..=8).map(|k| k as f64 / 8.0).collect();
        let c = compensator_a(PathRef::Event(&sol), 0.0, &b, &b, NoiseLaw::Gaussian, &times, |u| 0.5 * u + 1.0).unwrap();
        assert!(c.a_bar.iter().all(|a| a.norm() == 0.0));
        assert!(c.m.iter().all(|m| (m - Complex64::new(1.0, 0.0)).norm() == 0.0));
    }

    #[test]
    fn point_mass_exponent_closed_form() {
        let pm = LevyMeasureSpec::point_mass(1.0, 2.0, 2.0).unwrap();
        let law = NoiseLaw::Levy { spec: &pm, sigma: 1.0 };
        let th = 0.3;
        let v = law.exponent(th).unwrap();
        assert_relative_eq!(v.re, 2.0 * (th.cos() - 1.0), max_relative = 1e-14);
        assert_relative_eq!(v.im, 2.0 * (th.sin() - th), max_relative = 1e-14);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn ks_symmetric_bounded_and_monotone_invariant(
                a in proptest::collection::vec(-100.0f64..100.0, 1..40),
                b in proptest::collection::vec(-100.0f64..100.0, 1..40),
            ) {
                let d = ks_two_sample(&a, &b).unwrap();
                prop_assert!((0.0..=1.0).contains(&d));
                prop_assert_eq!(d, ks_two_sample(&b, &a).unwrap());
                let g = |v: &f64| v.powi(3) + 2.0 * v;
                let ta: Vec<f64> = a.iter().map(g).collect();
                let tb: Vec<f64> = b.iter().map(g).collect();
                prop_assert_eq!(d, ks_two_sample(&ta, &tb).unwrap());
            }
        }
    }
}
