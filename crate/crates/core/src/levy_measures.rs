//! Parametric Lévy measures truncated at an outer level `epsilon`, their
//! moments, the normal-approximation condition and amplitude sampling.
//!
//! A [`LevyMeasureSpec`] is the measure `Q` restricted to `{|z| <= epsilon}`.
//! All integrals are over that restriction.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, GaussLegendre};

const QUAD_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub z: f64,
    pub intensity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum LevyFamily {
    /// Density `|z|^(-1-alpha)` on both half-lines.
    #[serde(rename = "alpha_stable")]
    AlphaStableSymmetric { alpha: f64 },
    /// Density `rate * z^(-1) * exp(-rate * z)` on `z > 0`.
    #[serde(rename = "gamma")]
    GammaSubordinator { rate: f64 },
    PointMass { z0: f64, intensity: f64 },
    Table { atoms: Vec<Atom> },
}

impl LevyFamily {
    pub fn name(&self) -> &'static str {
        match self {
            LevyFamily::AlphaStableSymmetric { .. } => "alpha_stable",
            LevyFamily::GammaSubordinator { .. } => "gamma",
            LevyFamily::PointMass { .. } => "point_mass",
            LevyFamily::Table { .. } => "table",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LevyFamily::AlphaStableSymmetric { alpha } => {
                if !(*alpha > 0.0 && *alpha < 2.0) {
                    return Err(Error::InvalidSpec(format!("alpha = {alpha} not in (0, 2)")));
                }
            }
            LevyFamily::GammaSubordinator { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(Error::InvalidSpec(format!("gamma rate = {rate} must be positive")));
                }
            }
            LevyFamily::PointMass { z0, intensity } => {
                check_atom(*z0, *intensity)?;
            }
            LevyFamily::Table { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::InvalidSpec("table has no atoms".into()));
                }
                for a in atoms {
                    check_atom(a.z, a.intensity)?;
                }
                let mut zs: Vec<f64> = atoms.iter().map(|a| a.z).collect();
                zs.sort_by(f64::total_cmp);
                if zs.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::InvalidSpec("table atoms must have distinct z".into()));
                }
            }
        }
        Ok(())
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<LevyMeasureSpec> {
        LevyMeasureSpec::new(self.clone(), epsilon)
    }
}

fn check_atom(z: f64, intensity: f64) -> Result<()> {
    if !(z.is_finite() && z != 0.0) {
        return Err(Error::InvalidSpec(format!("atom location {z} must be finite and nonzero")));
    }
    if !(intensity.is_finite() && intensity > 0.0) {
        return Err(Error::InvalidSpec(format!("atom intensity {intensity} must be positive")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyMeasureSpec {
    #[serde(flatten)]
    pub family: LevyFamily,
    pub epsilon: f64,
}

impl LevyMeasureSpec {
    pub fn new(family: LevyFamily, epsilon: f64) -> Result<Self> {
        let spec = Self { family, epsilon };
        spec.validate()?;
        Ok(spec)
    }

    pub fn alpha_stable(alpha: f64, epsilon: f64) -> Result<Self> {
        Self::new(LevyFamily::AlphaStableSymmetric { alpha }, epsilon)
    }

    pub fn gamma(rate: f64, epsilon: f64) -> Result<Self> {
        Self::new(LevyFamily::GammaSubordinator { rate }, epsilon)
    }

    pub fn point_mass(z0: f64, intensity: f64, epsilon: f64) -> Result<Self> {
        Self::new(LevyFamily::PointMass { z0, intensity }, epsilon)
    }

    pub fn table(atoms: Vec<(f64, f64)>, epsilon: f64) -> Result<Self> {
        let atoms = atoms
            .into_iter()
            .map(|(z, intensity)| Atom { z, intensity })
            .collect();
        Self::new(LevyFamily::Table { atoms }, epsilon)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "epsilon = {} must be positive",
                self.epsilon
            )));
        }
        self.family.validate()
    }

    /// Atoms of the truncated measure (empty for continuous families).
    fn atoms(&self) -> Vec<Atom> {
        match &self.family {
            LevyFamily::PointMass { z0, intensity } => vec![Atom {
                z: *z0,
                intensity: *intensity,
            }],
            LevyFamily::Table { atoms } => atoms.clone(),
            _ => Vec::new(),
        }
        .into_iter()
        .filter(|a| a.z.abs() <= self.epsilon)
        .collect()
    }

    /// True when the restricted measure is invariant under `z -> -z`.
    pub fn is_symmetric(&self) -> bool {
        match &self.family {
            LevyFamily::AlphaStableSymmetric { .. } => true,
            LevyFamily::GammaSubordinator { .. } => false,
            _ => {
                let atoms = self.atoms();
                atoms.iter().all(|a| {
                    atoms
                        .iter()
                        .any(|b| b.z == -a.z && b.intensity == a.intensity)
                })
            }
        }
    }

    /// `∫_{lo < |z| <= ε} g(|z|) Q(dz)`. Continuous families integrate in
    /// `w = ln z` when `lo > 0`; `force_quadrature` keeps the α-stable
    /// integral on the original variable.
    fn radial<G: Fn(f64) -> f64>(&self, g: G, lo: f64, force_quadrature: bool) -> Result<f64> {
        let hi = self.epsilon;
        if lo >= hi {
            return Ok(0.0);
        }
        match &self.family {
            LevyFamily::AlphaStableSymmetric { alpha } => {
                let a = *alpha;
                let est = if lo > 0.0 && !force_quadrature {
                    // smooth on [ln lo, ln hi] after z = e^w
                    quadrature::integrate(
                        |w: f64| {
                            let z = w.exp();
                            g(z) * z.powf(-a)
                        },
                        lo.ln(),
                        hi.ln(),
                        QUAD_REL_TOL,
                        0.0,
                    )?
                } else {
                    quadrature::integrate(|z: f64| g(z) * z.powf(-1.0 - a), lo, hi, QUAD_REL_TOL, 0.0)?
                };
                Ok(2.0 * est.value)
            }
            LevyFamily::GammaSubordinator { rate } => {
                let r = *rate;
                let est = if lo > 0.0 {
                    quadrature::integrate(
                        |w: f64| {
                            let z = w.exp();
                            g(z) * r * (-r * z).exp()
                        },
                        lo.ln(),
                        hi.ln(),
                        QUAD_REL_TOL,
                        0.0,
                    )?
                } else {
                    quadrature::integrate(
                        |z: f64| {
                            if z == 0.0 {
                                0.0
                            } else {
                                g(z) * r * (-r * z).exp() / z
                            }
                        },
                        0.0,
                        hi,
                        QUAD_REL_TOL,
                        0.0,
                    )?
                };
                Ok(est.value)
            }
            _ => Ok(self
                .atoms()
                .iter()
                .filter(|a| a.z.abs() > lo)
                .map(|a| g(a.z.abs()) * a.intensity)
                .sum()),
        }
    }

    /// `∫_{|z| > lo} z² Q^ε(dz)`, closed form where available.
    pub fn second_moment_above(&self, lo: f64) -> Result<f64> {
        let lo = lo.max(0.0);
        if lo >= self.epsilon {
            return Ok(0.0);
        }
        match &self.family {
            LevyFamily::AlphaStableSymmetric { alpha } => {
                let e = 2.0 - alpha;
                Ok(2.0 * (self.epsilon.powf(e) - if lo > 0.0 { lo.powf(e) } else { 0.0 }) / e)
            }
            _ => self.radial(|z| z * z, lo, false),
        }
    }

    /// `∫_{|z| > lo} z Q^ε(dz)`.
    pub fn first_moment_above(&self, lo: f64) -> Result<f64> {
        if lo >= self.epsilon {
            return Ok(0.0);
        }
        match &self.family {
            LevyFamily::AlphaStableSymmetric { .. } => Ok(0.0),
            LevyFamily::GammaSubordinator { .. } => self.radial(|z| z, lo, false),
            _ => Ok(self
                .atoms()
                .iter()
                .filter(|a| a.z.abs() > lo)
                .map(|a| a.z * a.intensity)
                .sum()),
        }
    }

    /// `Q^ε({|z| > lo})`; infinite for the continuous families at `lo = 0`.
    pub fn mass_above(&self, lo: f64) -> Result<f64> {
        if lo >= self.epsilon {
            return Ok(0.0);
        }
        match &self.family {
            LevyFamily::AlphaStableSymmetric { alpha } => {
                if lo <= 0.0 {
                    return Ok(f64::INFINITY);
                }
                Ok(2.0 * (lo.powf(-alpha) - self.epsilon.powf(-alpha)) / alpha)
            }
            LevyFamily::GammaSubordinator { .. } => {
                if lo <= 0.0 {
                    return Ok(f64::INFINITY);
                }
                self.radial(|_| 1.0, lo, false)
            }
            _ => self.radial(|_| 1.0, lo, false),
        }
    }

    /// `∫ (e^{iθz} - 1 - iθz) Q^ε(dz)`.
    pub fn compensated_exponent(&self, theta: f64) -> Result<Complex64> {
        if theta == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let cos_part = |z: f64| {
            let s = (0.5 * theta * z).sin();
            -2.0 * s * s
        };
        let sin_part = |z: f64| {
            let x = theta * z;
            if x.abs() < 1e-3 {
                let x3 = x * x * x;
                -x3 / 6.0 + x3 * x * x / 120.0
            } else {
                x.sin() - x
            }
        };
        match &self.family {
            LevyFamily::AlphaStableSymmetric { .. } => {
                Ok(Complex64::new(self.radial(cos_part, 0.0, true)?, 0.0))
            }
            LevyFamily::GammaSubordinator { .. } => Ok(Complex64::new(
                self.radial(cos_part, 0.0, true)?,
                self.radial(sin_part, 0.0, true)?,
            )),
            _ => Ok(self
                .atoms()
                .iter()
                .map(|a| {
                    let x = theta * a.z;
                    Complex64::new(x.cos() - 1.0, x.sin() - x) * a.intensity
                })
                .sum()),
        }
    }
}

/// `σ²(ε) = ∫ z² Q^ε(dz)`.
pub fn sigma2(spec: &LevyMeasureSpec) -> Result<f64> {
    let v = spec.second_moment_above(0.0)?;
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::NonFinite(format!(
            "sigma^2 = {v} for {} at epsilon = {}",
            spec.family.name(),
            spec.epsilon
        )));
    }
    Ok(v)
}

/// `σ²(ε)` computed by quadrature even where a closed form exists.
pub fn sigma2_quadrature(spec: &LevyMeasureSpec) -> Result<f64> {
    let v = spec.radial(|z| z * z, 0.0, true)?;
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::NonFinite(format!("sigma^2 = {v}")));
    }
    Ok(v)
}

/// Normalized tail second moment `σ(ε)^-2 ∫_{|z| > κσ(ε)} z² Q^ε(dz)`.
pub fn ar_ratio(spec: &LevyMeasureSpec, kappa: f64) -> Result<f64> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::InvalidSpec(format!("kappa = {kappa} must be positive")));
    }
    let s2 = sigma2(spec)?;
    let threshold = kappa * s2.sqrt();
    if threshold >= spec.epsilon {
        return Ok(0.0);
    }
    let tail = spec.second_moment_above(threshold)?;
    Ok((tail / s2).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdictThresholds {
    /// A κ row "holds" when its ratio at the smallest ε is below this.
    pub holds_below: f64,
    /// A κ row "fails" when its ratio at the two smallest ε is at least this.
    pub fails_above: f64,
}

impl Default for VerdictThresholds {
    fn default() -> Self {
        Self {
            holds_below: 1e-3,
            fails_above: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub family: LevyFamily,
    pub kappas: Vec<f64>,
    pub epsilons: Vec<f64>,
    /// `ratios[i][j]` is the ratio at `kappas[i]`, `epsilons[j]`.
    pub ratios: Vec<Vec<f64>>,
    pub verdict: Verdict,
    pub thresholds: VerdictThresholds,
}

/// Tabulates [`ar_ratio`] over κ × ε and classifies the trend.
pub fn condition_verdict(
    family: &LevyFamily,
    kappas: &[f64],
    epsilons: &[f64],
    thresholds: VerdictThresholds,
) -> Result<ConditionReport> {
    if epsilons.len() < 3 || epsilons.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InsufficientSchedule(epsilons.to_vec()));
    }
    if kappas.is_empty() {
        return Err(Error::InvalidSpec("kappa list is empty".into()));
    }
    let specs = epsilons
        .iter()
        .map(|&e| family.with_epsilon(e))
        .collect::<Result<Vec<_>>>()?;
    let ratios = kappas
        .iter()
        .map(|&k| specs.iter().map(|s| ar_ratio(s, k)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;

    let n = epsilons.len();
    let holds = ratios.iter().all(|row| {
        let tail = &row[n - 3..];
        row[n - 1] < thresholds.holds_below && tail.windows(2).all(|w| w[1] <= w[0])
    });
    let fails = ratios
        .iter()
        .any(|row| row[n - 1] >= thresholds.fails_above && row[n - 2] >= thresholds.fails_above);
    let verdict = if holds {
        Verdict::Holds
    } else if fails {
        Verdict::Fails
    } else {
        Verdict::Inconclusive
    };
    Ok(ConditionReport {
        family: family.clone(),
        kappas: kappas.to_vec(),
        epsilons: epsilons.to_vec(),
        ratios,
        verdict,
        thresholds,
    })
}

/// Drift `∫_{|z| > floor} z Q^ε(dz)` removed by the compensator.
pub fn compensator_drift(spec: &LevyMeasureSpec, floor: f64) -> Result<f64> {
    if floor >= spec.epsilon {
        return Err(Error::FloorAboveTruncation {
            floor,
            epsilon: spec.epsilon,
        });
    }
    spec.first_moment_above(floor.max(0.0))
}

/// Draws from `Q^ε` restricted to `{|z| > floor}`, normalized.
#[derive(Debug, Clone)]
pub struct AmplitudeSampler {
    floor: f64,
    epsilon: f64,
    kind: SamplerKind,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    AlphaStable {
        alpha: f64,
        floor_pow: f64,
        span: f64,
    },
    Gamma {
        rate: f64,
        rule: GaussLegendre,
        /// Panel boundaries in w = ln z.
        edges: Vec<f64>,
        /// Cumulative mass at each edge.
        cumulative: Vec<f64>,
    },
    Categorical {
        values: Vec<f64>,
        cumulative: Vec<f64>,
    },
}

const GAMMA_PANEL_WIDTH: f64 = 0.25;

impl AmplitudeSampler {
    pub fn new(spec: &LevyMeasureSpec, floor: f64) -> Result<Self> {
        let floor = floor.max(0.0);
        let mass = spec.mass_above(floor)?;
        if !(mass > 0.0) {
            return Err(Error::EmptySupport(floor));
        }
        if !mass.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "infinite jump activity above floor {floor}; use a positive floor"
            )));
        }
        let kind = match &spec.family {
            LevyFamily::AlphaStableSymmetric { alpha } => {
                let floor_pow = floor.powf(-alpha);
                SamplerKind::AlphaStable {
                    alpha: *alpha,
                    floor_pow,
                    span: floor_pow - spec.epsilon.powf(-alpha),
                }
            }
            LevyFamily::GammaSubordinator { rate } => {
                let (lo, hi) = (floor.ln(), spec.epsilon.ln());
                let panels = (((hi - lo) / GAMMA_PANEL_WIDTH).ceil() as usize).max(1);
                let h = (hi - lo) / panels as f64;
                let rule = GaussLegendre::new(12);
                let mut edges = Vec::with_capacity(panels + 1);
                let mut cumulative = Vec::with_capacity(panels + 1);
                let mut acc = 0.0;
                edges.push(lo);
                cumulative.push(0.0);
                for p in 0..panels {
                    let a = lo + p as f64 * h;
                    let b = if p + 1 == panels { hi } else { a + h };
                    acc += rule.integrate(|w| gamma_log_density(*rate, w), a, b);
                    edges.push(b);
                    cumulative.push(acc);
                }
                SamplerKind::Gamma {
                    rate: *rate,
                    rule,
                    edges,
                    cumulative,
                }
            }
            _ => {
                let mut values = Vec::new();
                let mut cumulative = Vec::new();
                let mut acc = 0.0;
                for a in spec.atoms().iter().filter(|a| a.z.abs() > floor) {
                    acc += a.intensity;
                    values.push(a.z);
                    cumulative.push(acc);
                }
                SamplerKind::Categorical { values, cumulative }
            }
        };
        Ok(Self {
            floor,
            epsilon: spec.epsilon,
            kind,
        })
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            SamplerKind::AlphaStable {
                alpha,
                floor_pow,
                span,
            } => {
                let u: f64 = rng.random();
                let magnitude = (floor_pow - u * span).powf(-1.0 / alpha);
                let magnitude = magnitude.clamp(self.floor.next_up(), self.epsilon);
                if rng.random::<bool>() {
                    magnitude
                } else {
                    -magnitude
                }
            }
            SamplerKind::Gamma {
                rate,
                rule,
                edges,
                cumulative,
            } => {
                let total = *cumulative.last().expect("nonempty table");
                let target = rng.random::<f64>() * total;
                let k = cumulative
                    .partition_point(|&c| c <= target)
                    .clamp(1, cumulative.len() - 1)
                    - 1;
                let need = target - cumulative[k];
                let (mut lo, mut hi) = (edges[k], edges[k + 1]);
                let base = lo;
                for _ in 0..200 {
                    if hi.exp() - lo.exp() <= 1e-12 {
                        break;
                    }
                    let mid = 0.5 * (lo + hi);
                    let partial = rule.integrate(|w| gamma_log_density(*rate, w), base, mid);
                    if partial < need {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                (0.5 * (lo + hi)).exp().clamp(self.floor.next_up(), self.epsilon)
            }
            SamplerKind::Categorical { values, cumulative } => {
                let total = *cumulative.last().expect("nonempty table");
                let target = rng.random::<f64>() * total;
                let k = cumulative
                    .partition_point(|&c| c <= target)
                    .min(values.len() - 1);
                values[k]
            }
        }
    }
}

fn gamma_log_density(rate: f64, w: f64) -> f64 {
    rate * (-rate * w.exp()).exp()
}

/// One draw from `Q^ε` restricted to `{|z| > floor}`. Builds a sampler per
/// call; hold an [`AmplitudeSampler`] when drawing repeatedly.
pub fn sample_amplitude<R: Rng + ?Sized>(
    spec: &LevyMeasureSpec,
    floor: f64,
    rng: &mut R,
) -> Result<f64> {
    Ok(AmplitudeSampler::new(spec, floor)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gamma_second_moment_oracle(eps: f64) -> f64 {
        // 1 - e^-ε(1+ε) without cancellation: series Σ_{k>=2} (-1)^k ε^k (k-1)/k!
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..40 {
            term *= eps / k as f64;
            if k >= 2 {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sum += sign * term * (k as f64 - 1.0);
            }
        }
        sum
    }

    #[test]
    fn sigma2_examples() {
        let s = LevyMeasureSpec::alpha_stable(1.5, 1.0).unwrap();
        assert_relative_eq!(sigma2(&s).unwrap(), 4.0, max_relative = 1e-14);
        assert_relative_eq!(sigma2_quadrature(&s).unwrap(), 4.0, max_relative = 1e-9);

        let pm = LevyMeasureSpec::point_mass(1.0, 1.0, 2.0).unwrap();
        assert_eq!(sigma2(&pm).unwrap(), 1.0);

        let g = LevyMeasureSpec::gamma(1.0, 1e-3).unwrap();
        let oracle = gamma_second_moment_oracle(1e-3);
        assert_relative_eq!(oracle, 4.996_667_5e-7, max_relative = 1e-6);
        assert_relative_eq!(sigma2(&g).unwrap(), oracle, max_relative = 1e-9);
    }

    #[test]
    fn sigma2_vanishing_point_mass_is_error() {
        let pm = LevyMeasureSpec::point_mass(3.0, 1.0, 2.0).unwrap();
        assert!(matches!(sigma2(&pm), Err(Error::NonFinite(_))));
    }

    #[test]
    fn ar_ratio_examples() {
        let s = LevyMeasureSpec::alpha_stable(1.5, 0.1).unwrap();
        assert_eq!(ar_ratio(&s, 1.0).unwrap(), 0.0);
        let pm = LevyMeasureSpec::point_mass(1.0, 1.0, 2.0).unwrap();
        assert_eq!(ar_ratio(&pm, 0.5).unwrap(), 1.0);
        let g = LevyMeasureSpec::gamma(1.0, 1e-3).unwrap();
        let r = ar_ratio(&g, 1.0).unwrap();
        assert!((r - 0.5).abs() < 0.02, "gamma ratio {r}");
    }

    #[test]
    fn verdicts() {
        let holds = condition_verdict(
            &LevyFamily::AlphaStableSymmetric { alpha: 1.5 },
            &[0.5, 1.0, 2.0],
            &[1.0, 0.1, 0.01],
            VerdictThresholds::default(),
        )
        .unwrap();
        assert_eq!(holds.verdict, Verdict::Holds);

        let fails = condition_verdict(
            &LevyFamily::GammaSubordinator { rate: 1.0 },
            &[1.0],
            &[0.1, 0.01, 0.001],
            VerdictThresholds::default(),
        )
        .unwrap();
        assert_eq!(fails.verdict, Verdict::Fails);

        let err = condition_verdict(
            &LevyFamily::PointMass {
                z0: 1.0,
                intensity: 1.0,
            },
            &[0.5],
            &[2.0, 2.0, 2.0],
            VerdictThresholds::default(),
        );
        assert!(matches!(err, Err(Error::InsufficientSchedule(_))));
        let short = condition_verdict(
            &LevyFamily::GammaSubordinator { rate: 1.0 },
            &[1.0],
            &[0.1, 0.01],
            VerdictThresholds::default(),
        );
        assert!(matches!(short, Err(Error::InsufficientSchedule(_))));
    }

    #[test]
    fn drift_examples() {
        let s = LevyMeasureSpec::alpha_stable(1.5, 1.0).unwrap();
        assert_eq!(compensator_drift(&s, 0.1).unwrap(), 0.0);
        let pm = LevyMeasureSpec::point_mass(1.0, 3.0, 2.0).unwrap();
        assert_eq!(compensator_drift(&pm, 0.5).unwrap(), 3.0);
        let g = LevyMeasureSpec::gamma(1.0, 1.0).unwrap();
        let oracle = (-0.1f64).exp() - (-1.0f64).exp();
        assert_relative_eq!(compensator_drift(&g, 0.1).unwrap(), oracle, max_relative = 1e-10);
        assert!(matches!(
            compensator_drift(&g, 1.0),
            Err(Error::FloorAboveTruncation { .. })
        ));
    }

    #[test]
    fn symmetric_table_has_zero_drift() {
        let t = LevyMeasureSpec::table(vec![(0.3, 2.0), (-0.3, 2.0), (0.7, 0.5), (-0.7, 0.5)], 1.0)
            .unwrap();
        assert!(t.is_symmetric());
        assert_eq!(compensator_drift(&t, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn duplicate_atoms_rejected() {
        assert!(LevyMeasureSpec::table(vec![(0.3, 1.0), (0.3, 2.0)], 1.0).is_err());
    }

    #[test]
    fn sampler_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pm = LevyMeasureSpec::point_mass(1.0, 1.0, 2.0).unwrap();
        for _ in 0..100 {
            assert_eq!(sample_amplitude(&pm, 0.5, &mut rng).unwrap(), 1.0);
        }
        let s = LevyMeasureSpec::alpha_stable(1.5, 1.0).unwrap();
        assert!(matches!(
            sample_amplitude(&s, 1.0, &mut rng),
            Err(Error::EmptySupport(_))
        ));
        let g = LevyMeasureSpec::gamma(1.0, 1.0).unwrap();
        assert!(matches!(
            sample_amplitude(&g, 1.0, &mut rng),
            Err(Error::EmptySupport(_))
        ));
    }

    #[test]
    fn alpha_stable_sampler_mean_abs() {
        let s = LevyMeasureSpec::alpha_stable(1.5, 1.0).unwrap();
        let sampler = AmplitudeSampler::new(&s, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| sampler.sample(&mut rng).abs()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let oracle = ((0.1f64.powf(-0.5) - 1.0) / 0.5) / ((0.1f64.powf(-1.5) - 1.0) / 1.5);
        assert!((mean - oracle).abs() < 3.0 * (var / n as f64).sqrt());
        assert!(draws.iter().all(|&z| z > 0.1 && z <= 1.0));
    }

    #[test]
    fn compensated_exponent_point_mass() {
        let pm = LevyMeasureSpec::point_mass(1.0, 2.5, 2.0).unwrap();
        let theta = 0.7;
        let v = pm.compensated_exponent(theta).unwrap();
        let expect = Complex64::new(theta.cos() - 1.0, theta.sin() - theta) * 2.5;
        assert_relative_eq!(v.re, expect.re, max_relative = 1e-14);
        assert_relative_eq!(v.im, expect.im, max_relative = 1e-14);
    }

    #[test]
    fn spec_json_shape() {
        let s: LevyMeasureSpec =
            serde_json::from_str(r#"{"family":"alpha_stable","alpha":1.5,"epsilon":0.1}"#).unwrap();
        assert_eq!(s, LevyMeasureSpec::alpha_stable(1.5, 0.1).unwrap());
        let text = serde_json::to_string(&LevyMeasureSpec::gamma(2.0, 0.5).unwrap()).unwrap();
        assert_eq!(text, r#"{"family":"gamma","rate":2.0,"epsilon":0.5}"#);
    }
}
