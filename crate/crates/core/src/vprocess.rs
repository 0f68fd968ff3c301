//! The distribution-valued time derivative `v = ∂_t u`, tracked through its
//! Hermite coefficients `⟨v_t, h_q⟩`, and the weak formulation residual.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::{derivs_from_values, dual_norm, hermite_all, ProjectionGrid};
use crate::noise::CellIncrements;
use crate::quadrature::adaptive_simpson;
use crate::solver::{EventSolution, FieldGrid};
use crate::wave_kernel::Domain;

/// A smooth test function with two derivatives and compact support.
pub trait TestFunction: Sync {
    fn value(&self, x: f64) -> f64;
    fn d1(&self, x: f64) -> f64;
    fn d2(&self, x: f64) -> f64;
    /// Closed interval outside of which the function vanishes.
    fn support(&self) -> (f64, f64);
}

/// `A · exp(−1 / (1 − r²))` with `r = (x − c)/h`, zero for `|r| ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: f64,
    pub half_width: f64,
    pub amplitude: f64,
}

impl Bump {
    pub fn new(center: f64, half_width: f64, amplitude: f64) -> Self {
        Self {
            center,
            half_width,
            amplitude,
        }
    }

    /// The bump filling `(lo, hi)`.
    pub fn on(lo: f64, hi: f64) -> Self {
        Self::new(0.5 * (lo + hi), 0.5 * (hi - lo), 1.0)
    }

    fn parts(&self, x: f64) -> Option<(f64, f64, f64)> {
        let r = (x - self.center) / self.half_width;
        let a = 1.0 - r * r;
        if a <= 0.0 || self.amplitude == 0.0 {
            return None;
        }
        Some((r, a, self.amplitude * (-1.0 / a).exp()))
    }
}

impl TestFunction for Bump {
    fn value(&self, x: f64) -> f64 {
        self.parts(x).map_or(0.0, |(_, _, g)| g)
    }

    fn d1(&self, x: f64) -> f64 {
        self.parts(x)
            .map_or(0.0, |(r, a, g)| g * (-2.0 * r / (a * a)) / self.half_width)
    }

    fn d2(&self, x: f64) -> f64 {
        self.parts(x).map_or(0.0, |(r, a, g)| {
            let a2 = a * a;
            g * (4.0 * r * r / (a2 * a2) - 2.0 / a2 - 8.0 * r * r / (a2 * a)) / (self.half_width * self.half_width)
        })
    }

    fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }
}

/// A noise contribution at `(s, y)` with weight `f(u₋) · increment / σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StochasticAtom {
    pub s: f64,
    pub y: f64,
    pub w: f64,
}

/// A solved path, either event-driven or on the lattice.
#[derive(Debug, Clone, Copy)]
pub enum PathRef<'a> {
    Event(&'a EventSolution),
    Grid {
        field: &'a FieldGrid,
        increments: &'a CellIncrements,
    },
}

impl<'a> PathRef<'a> {
    pub fn grid(field: &'a FieldGrid, increments: &'a CellIncrements) -> Self {
        PathRef::Grid { field, increments }
    }

    /// The atoms sorted by time. Lattice atoms sit at the centroid of the
    /// clipped cell and carry `f` of the lower-left node value.
    pub fn atoms<F: Fn(f64) -> f64>(&self, f: F) -> Result<Vec<StochasticAtom>> {
        let mut out = match self {
            PathRef::Event(sol) => sol
                .record
                .jumps
                .iter()
                .zip(&sol.integrands)
                .map(|(j, &w)| StochasticAtom { s: j.t, y: j.x, w })
                .collect(),
            PathRef::Grid { field, increments } => {
                if field.lattice != increments.lattice {
                    return Err(Error::ShapeMismatch("field and increments live on different lattices".into()));
                }
                let lat = increments.lattice;
                let mut v = Vec::new();
                for i in 0..lat.n1 {
                    for j in 0..lat.n2 {
                        let d = increments.get(i, j);
                        if d != 0.0 {
                            let c = match &increments.domain {
                                Some(dom) => lat.clipped_centroid(i, j, dom).unwrap_or(lat.cell_center(i, j)),
                                None => lat.cell_center(i, j),
                            };
                            v.push(StochasticAtom {
                                s: c.t,
                                y: c.x,
                                w: f(field.node(i, j)) * d,
                            });
                        }
                    }
                }
                v
            }
        };
        out.sort_by(|a, b| a.s.total_cmp(&b.s));
        Ok(out)
    }

    pub fn u(&self, t: f64, x: f64) -> Result<f64> {
        match self {
            PathRef::Event(sol) => Ok(sol.eval(t, x)),
            PathRef::Grid { field, .. } => field.eval(t, x),
        }
    }

    pub fn sigma(&self) -> f64 {
        match self {
            PathRef::Event(sol) => sol.sigma,
            PathRef::Grid { field, .. } => field.sigma,
        }
    }

    pub fn domain(&self) -> Option<Domain> {
        match self {
            PathRef::Event(sol) => Some(sol.record.domain),
            PathRef::Grid { .. } => None,
        }
    }

    /// Resolution for the spatial quadrature of `⟨u(t, ·), φ⟩`.
    fn x_step(&self) -> f64 {
        match self {
            PathRef::Event(_) => 1.0 / 2048.0,
            PathRef::Grid { field, .. } => field.lattice.spacing / 4.0,
        }
    }
}

/// Coefficients `c[i][q] = ⟨v_{t_i}, h_q⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VPath {
    pub times: Vec<f64>,
    pub coeffs: Vec<Vec<f64>>,
    pub r: f64,
    pub sigma: f64,
}

impl VPath {
    pub fn dual_norms(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| dual_norm(c, self.r)).collect()
    }

    /// `max_i ‖c_i − other_i‖_{-r}`.
    pub fn max_dual_distance(&self, other: &VPath) -> Result<f64> {
        if self.times.len() != other.times.len() {
            return Err(Error::LengthMismatch(self.times.len(), other.times.len()));
        }
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| {
                let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                dual_norm(&d, self.r)
            })
            .fold(0.0, f64::max))
    }

    /// `⟨v_{t_i}, φ⟩ = Σ_q c_q(φ) ⟨v_{t_i}, h_q⟩`.
    pub fn pair(&self, phi_coeffs: &[f64]) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|row| row.iter().zip(phi_coeffs).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "q", "c"])?;
        for (t, row) in self.times.iter().zip(&self.coeffs) {
            for (q, c) in row.iter().enumerate() {
                out.write_record([t.to_string(), q.to_string(), c.to_string()])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() || times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::ShapeMismatch("output times must be increasing and non-negative".into()));
    }
    Ok(())
}

/// `½ Σ_{s<t} [h_q(y + (t − s)) + h_q(y − (t − s))] w`, one row per time.
pub fn v_coeffs_direct<F: Fn(f64) -> f64>(path: PathRef<'_>, times: &[f64], q_max: usize, f: F, r: f64) -> Result<VPath> {
    check_times(times)?;
    let atoms = path.atoms(f)?;
    let coeffs = times
        .par_iter()
        .map(|&t| {
            let mut row = vec![0.0; q_max + 1];
            let (mut hp, mut hm) = (Vec::new(), Vec::new());
            for a in atoms.iter().take_while(|a| a.s < t) {
                let d = t - a.s;
                hermite_all(q_max, a.y + d, &mut hp);
                hermite_all(q_max, a.y - d, &mut hm);
                let hw = 0.5 * a.w;
                for ((c, p), m) in row.iter_mut().zip(&hp).zip(&hm) {
                    *c += hw * (p + m);
                }
            }
            row
        })
        .collect();
    Ok(VPath {
        times: times.to_vec(),
        coeffs,
        r,
        sigma: path.sigma(),
    })
}

/// `Σ_{s<t} h_q(y) w + ½ ∫_0^t J_r dr` with
/// `J_r = Σ_{s<r} [h_q'(y + (r − s)) − h_q'(y − (r − s))] w`, the time
/// integral by the trapezoid rule on a grid of step at most `inner_step`
/// that contains every output time.
pub fn v_coeffs_semimart<F: Fn(f64) -> f64>(
    path: PathRef<'_>,
    times: &[f64],
    q_max: usize,
    f: F,
    r: f64,
    inner_step: f64,
) -> Result<VPath> {
    check_times(times)?;
    if !(inner_step > 0.0) {
        return Err(Error::config("inner_step", "must be positive"));
    }
    let atoms = path.atoms(f)?;
    let m = q_max + 1;

    let mut inner = vec![0.0];
    let mut out_idx = Vec::with_capacity(times.len());
    for &t in times {
        let last = *inner.last().expect("nonempty");
        if t > last {
            let pieces = ((t - last) / inner_step).ceil() as usize;
            let h = (t - last) / pieces as f64;
            for k in 1..pieces {
                inner.push(last + k as f64 * h);
            }
            inner.push(t);
        }
        out_idx.push(inner.len() - 1);
    }

    // J at every inner node, plus the part of it from atoms born inside the
    // preceding cell weighted by how far into the cell they were born; the
    // trapezoid for such an atom then starts at its own time, where J is 0.
    let drift: Vec<(Vec<f64>, Vec<f64>)> = inner
        .par_iter()
        .enumerate()
        .map(|(k, &rt)| {
            let prev = if k == 0 { 0.0 } else { inner[k - 1] };
            let mut j = vec![0.0; m];
            let mut late = vec![0.0; m];
            let (mut hp, mut hm, mut dp, mut dm) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for a in atoms.iter().take_while(|a| a.s < rt) {
                let d = rt - a.s;
                hermite_all(q_max + 1, a.y + d, &mut hp);
                hermite_all(q_max + 1, a.y - d, &mut hm);
                derivs_from_values(q_max, &hp, &mut dp);
                derivs_from_values(q_max, &hm, &mut dm);
                let lag = if a.s > prev { a.s - prev } else { 0.0 };
                for (q, (p, n)) in dp.iter().zip(&dm).enumerate() {
                    let c = a.w * (p - n);
                    j[q] += c;
                    late[q] += lag * c;
                }
            }
            (j, late)
        })
        .collect();

    let mut integral = vec![vec![0.0; m]; inner.len()];
    for k in 1..inner.len() {
        let h = inner[k] - inner[k - 1];
        let (done, rest) = integral.split_at_mut(k);
        for q in 0..m {
            rest[0][q] = done[k - 1][q] + 0.5 * h * (drift[k - 1].0[q] + drift[k].0[q]) - 0.5 * drift[k].1[q];
        }
    }

    let mut h0 = Vec::new();
    let coeffs = times
        .iter()
        .zip(&out_idx)
        .map(|(&t, &k)| {
            let mut row: Vec<f64> = integral[k].iter().map(|v| 0.5 * v).collect();
            for a in atoms.iter().take_while(|a| a.s < t) {
                hermite_all(q_max, a.y, &mut h0);
                for (c, h) in row.iter_mut().zip(&h0) {
                    *c += a.w * h;
                }
            }
            row
        })
        .collect();
    Ok(VPath {
        times: times.to_vec(),
        coeffs,
        r,
        sigma: path.sigma(),
    })
}

/// `⟨v_t, φ⟩` straight from the atoms.
pub fn v_pair_direct(atoms: &[StochasticAtom], t: f64, phi: &dyn TestFunction) -> f64 {
    atoms
        .iter()
        .take_while(|a| a.s < t)
        .map(|a| {
            let d = t - a.s;
            0.5 * a.w * (phi.value(a.y + d) + phi.value(a.y - d))
        })
        .sum()
}

/// `⟨u(t, ·), g⟩` by the midpoint rule on `g`'s support.
pub fn u_pair<G: Fn(f64) -> f64>(path: PathRef<'_>, t: f64, support: (f64, f64), g: G) -> Result<f64> {
    let (lo, hi) = support;
    let n = ((hi - lo) / path.x_step()).ceil().max(1.0) as usize;
    let h = (hi - lo) / n as f64;
    let mut s = 0.0;
    for k in 0..n {
        let x = lo + (k as f64 + 0.5) * h;
        let gx = g(x);
        if gx != 0.0 {
            s += gx * path.u(t, x)?;
        }
    }
    Ok(s * h)
}

fn check_support(phi: &dyn TestFunction, window: (f64, f64)) -> Result<()> {
    let (lo, hi) = phi.support();
    if !(lo > window.0 && hi < window.1) {
        return Err(Error::SupportViolation {
            lo,
            hi,
            window_lo: window.0,
            window_hi: window.1,
        });
    }
    Ok(())
}

/// How `⟨v_t, φ⟩` is formed in the weak residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VPairing {
    /// `Σ_q c_q(φ) ⟨v_t, h_q⟩` from the projected coefficients of `φ`.
    Hermite,
    /// Directly from the atoms; carries no truncation error.
    Direct,
}

/// Inputs shared by weak-residual evaluations on one path.
pub struct WeakForm<'a> {
    pub phi1: &'a dyn TestFunction,
    pub phi2: &'a dyn TestFunction,
    /// Spatial window `(x_lo, x_hi)` of the noise.
    pub window: (f64, f64),
    pub projection: &'a ProjectionGrid,
    pub pairing: VPairing,
}

/// `⟨u_t, φ₁⟩ + ⟨v_t, φ₂⟩ − ∫_0^t (⟨u_s, φ₂''⟩ + ⟨v_s, φ₁⟩) ds − Σ_{s<t} φ₂(y) w`
/// at `t = vpath.times[k]`. Pairings with `v` use the Hermite coefficients of
/// `φ₁`, `φ₂`; the time integral is the trapezoid rule on `vpath.times`,
/// which must start at 0.
pub fn weak_residual<F: Fn(f64) -> f64>(path: PathRef<'_>, vpath: &VPath, form: &WeakForm<'_>, f: F, k: usize) -> Result<f64> {
    check_support(form.phi1, form.window)?;
    check_support(form.phi2, form.window)?;
    if k >= vpath.times.len() || vpath.times[0] != 0.0 {
        return Err(Error::ShapeMismatch("residual time must be an output time of a grid starting at 0".into()));
    }
    let times = &vpath.times;
    let atoms = path.atoms(f)?;
    let (v1, v2) = match form.pairing {
        VPairing::Hermite => {
            let c1 = form.projection.project(|x| form.phi1.value(x), vpath.r)?;
            let c2 = form.projection.project(|x| form.phi2.value(x), vpath.r)?;
            (vpath.pair(&c1.coeffs), vpath.pair(&c2.coeffs))
        }
        VPairing::Direct => (
            times.iter().map(|&t| v_pair_direct(&atoms, t, form.phi1)).collect::<Vec<_>>(),
            times.iter().map(|&t| v_pair_direct(&atoms, t, form.phi2)).collect(),
        ),
    };

    let s1 = form.phi1.support();
    let s2 = form.phi2.support();
    let mut integrand = Vec::with_capacity(k + 1);
    for (i, &s) in times.iter().enumerate().take(k + 1) {
        let u2 = if s > 0.0 { u_pair(path, s, s2, |x| form.phi2.d2(x))? } else { 0.0 };
        integrand.push(u2 + v1[i]);
    }
    let mut integral = 0.0;
    for i in 1..=k {
        integral += 0.5 * (times[i] - times[i - 1]) * (integrand[i] + integrand[i - 1]);
    }

    let t = times[k];
    let jumps: f64 = atoms
        .iter()
        .take_while(|a| a.s < t)
        .map(|a| form.phi2.value(a.y) * a.w)
        .sum();
    let u1 = if t > 0.0 { u_pair(path, t, s1, |x| form.phi1.value(x))? } else { 0.0 };
    Ok(u1 + v2[k] - integral - jumps)
}

/// The test-function pair `(ψ₁, ψ₂)` built from `φ` for a fixed horizon `t`.
pub struct MagicPair<'a> {
    pub phi: &'a dyn TestFunction,
    pub t: f64,
}

impl<'a> MagicPair<'a> {
    /// `½ φ(y + (t − s)) + ½ φ(y − (t − s))`.
    pub fn psi1(&self, s: f64, y: f64) -> f64 {
        let d = self.t - s;
        0.5 * (self.phi.value(y + d) + self.phi.value(y - d))
    }

    /// `½ ∫_{y − (t − s)}^{y + (t − s)} φ`.
    pub fn psi2(&self, s: f64, y: f64) -> f64 {
        let d = self.t - s;
        if d == 0.0 {
            return 0.0;
        }
        let (lo, hi) = self.phi.support();
        let a = (y - d).max(lo);
        let b = (y + d).min(hi);
        if a >= b {
            return 0.0;
        }
        0.5 * adaptive_simpson(|x| self.phi.value(x), a, b, 1e-10)
    }
}

pub fn magic_pair(phi: &dyn TestFunction, t: f64) -> MagicPair<'_> {
    MagicPair { phi, t }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::{hermite_eval, DEFAULT_R};
    use crate::noise::{Jump, JumpRecord};
    use crate::solver::solve_event_driven;
    use approx::assert_relative_eq;

    fn one_jump(s0: f64, y0: f64, z: f64) -> EventSolution {
        let d = Domain::new(1.0, -1.0, 2.0).unwrap();
        let rec = JumpRecord {
            jumps: vec![Jump { t: s0, x: y0, z }],
            floor: 0.01,
            drift: 0.0,
            domain: d,
        };
        solve_event_driven(&rec, |_| 1.0, 2.0).unwrap()
    }

    fn grid_times(n: usize) -> Vec<f64> {
        (0..=n).map(|k| k as f64 / n as f64).collect()
    }

    #[test]
    fn bump_derivatives_match_differences() {
        let b = Bump::new(0.3, 0.4, 1.7);
        for &x in &[0.0, 0.2, 0.35, 0.6] {
            let h = 1e-5;
            let fd1 = (b.value(x + h) - b.value(x - h)) / (2.0 * h);
            let fd2 = (b.d1(x + h) - b.d1(x - h)) / (2.0 * h);
            assert!((fd1 - b.d1(x)).abs() < 1e-6);
            assert!((fd2 - b.d2(x)).abs() < 1e-5);
        }
        assert_eq!(b.value(0.8), 0.0);
    }

    #[test]
    fn no_noise_no_v() {
        let d = Domain::new(1.0, -1.0, 2.0).unwrap();
        let sol = solve_event_driven(&JumpRecord::empty(d, 0.1), |_| 1.0, 1.0).unwrap();
        let p = PathRef::Event(&sol);
        let v = v_coeffs_direct(p, &grid_times(4), 8, |_| 1.0, DEFAULT_R).unwrap();
        assert!(v.coeffs.iter().flatten().all(|&c| c == 0.0));
        let v = v_coeffs_semimart(p, &grid_times(4), 8, |_| 1.0, DEFAULT_R, 0.01).unwrap();
        assert!(v.coeffs.iter().flatten().all(|&c| c == 0.0));
    }

    #[test]
    fn single_jump_direct_formula() {
        let sol = one_jump(0.25, 0.4, 0.8);
        let v = v_coeffs_direct(PathRef::Event(&sol), &grid_times(4), 6, |_| 1.0, DEFAULT_R).unwrap();
        assert!(v.coeffs[0].iter().chain(&v.coeffs[1]).all(|&c| c == 0.0));
        for (i, &t) in v.times.iter().enumerate().skip(2) {
            for q in 0..=6 {
                let e = 0.5 * (hermite_eval(q, 0.4 + (t - 0.25)) + hermite_eval(q, 0.4 - (t - 0.25))) * 0.8 / 2.0;
                assert_relative_eq!(v.coeffs[i][q], e, max_relative = 1e-12, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn semimart_converges_second_order() {
        let sol = one_jump(0.2, 0.1, 1.0);
        let p = PathRef::Event(&sol);
        let times = grid_times(8);
        let direct = v_coeffs_direct(p, &times, 16, |_| 1.0, DEFAULT_R).unwrap();
        let steps = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0];
        let pts: Vec<(f64, f64)> = steps
            .iter()
            .map(|&h| {
                let e = v_coeffs_semimart(p, &times, 16, |_| 1.0, DEFAULT_R, h)
                    .unwrap()
                    .max_dual_distance(&direct)
                    .unwrap();
                (h.ln(), e.ln())
            })
            .collect();
        // least-squares slope of log error against log step
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let order = sxy / sxx;
        assert!(order >= 1.9, "observed order {order}");
    }

    #[test]
    fn magic_pair_identities() {
        let phi = Bump::on(0.0, 1.0);
        let mp = magic_pair(&phi, 0.8);
        for k in 0..20 {
            let y = -0.5 + 2.0 * k as f64 / 19.0;
            assert_eq!(mp.psi2(0.8, y), 0.0);
            assert_eq!(mp.psi1(0.8, y), phi.value(y));
        }
        let d = 1e-4;
        let mut worst = 0.0f64;
        for a in 0..20 {
            for b in 0..20 {
                let s = 0.05 + 0.6 * a as f64 / 19.0;
                let y = -0.4 + 1.8 * b as f64 / 19.0;
                let dt = (mp.psi2(s + d, y) - mp.psi2(s - d, y)) / (2.0 * d);
                worst = worst.max((dt + mp.psi1(s, y)).abs());
            }
        }
        assert!(worst < 1e-6, "{worst}");
        let zero = Bump::new(0.5, 0.5, 0.0);
        let mz = magic_pair(&zero, 1.0);
        assert_eq!(mz.psi1(0.3, 0.5), 0.0);
        assert_eq!(mz.psi2(0.3, 0.5), 0.0);
    }

    #[test]
    fn wave_identity_for_psi2() {
        let phi = Bump::on(0.0, 1.0);
        let mp = magic_pair(&phi, 1.0);
        let d = 1e-3;
        for &(s, y) in &[(0.3, 0.2), (0.5, 0.7), (0.1, 0.5)] {
            let tt = (mp.psi2(s + d, y) - 2.0 * mp.psi2(s, y) + mp.psi2(s - d, y)) / (d * d);
            let xx = (mp.psi2(s, y + d) - 2.0 * mp.psi2(s, y) + mp.psi2(s, y - d)) / (d * d);
            assert!((tt - xx).abs() < 1e-3, "{tt} vs {xx}");
        }
    }

    #[test]
    fn weak_residual_zero_noise_is_zero() {
        let d = Domain::new(1.0, -1.0, 2.0).unwrap();
        let sol = solve_event_driven(&JumpRecord::empty(d, 0.1), |u| u, 1.0).unwrap();
        let p = PathRef::Event(&sol);
        let times = grid_times(8);
        let v = v_coeffs_direct(p, &times, 16, |u| u, DEFAULT_R).unwrap();
        let proj = ProjectionGrid::for_window(2.0, 16);
        let b = Bump::on(0.0, 1.0);
        let form = WeakForm {
            phi1: &b,
            phi2: &b,
            window: (-1.0, 2.0),
            projection: &proj,
            pairing: VPairing::Hermite,
        };
        assert_eq!(weak_residual(p, &v, &form, |u| u, 8).unwrap(), 0.0);
        let wide = Bump::on(-2.0, 1.0);
        let bad = WeakForm { phi1: &wide, ..form };
        assert!(matches!(weak_residual(p, &v, &bad, |u| u, 8), Err(Error::SupportViolation { .. })));
    }

    #[test]
    fn weak_residual_single_jump_away_from_trace() {
        // jump trace at time t covers y0 ± (t − s0); φ₂ sits inside the cone's
        // interior at t = 1 but not on the jump location
        let sol = one_jump(0.1, -0.5, 2.0);
        let p = PathRef::Event(&sol);
        let times: Vec<f64> = (0..=128).map(|k| k as f64 / 128.0).collect();
        let v = v_coeffs_direct(p, &times, 64, |_| 1.0, DEFAULT_R).unwrap();
        let proj = ProjectionGrid::for_window(2.0, 64);
        let phi1 = Bump::new(0.9, 0.2, 1.0);
        let phi2 = Bump::new(0.0, 0.25, 1.0);
        let form = WeakForm {
            phi1: &phi1,
            phi2: &phi2,
            window: (-1.0, 2.0),
            projection: &proj,
            pairing: VPairing::Direct,
        };
        let res = weak_residual(p, &v, &form, |_| 1.0, 128).unwrap();
        assert!(res.abs() < 1e-3, "{res}");
    }

    #[test]
    fn vpath_csv_shape() {
        let v = VPath {
            times: vec![0.0, 1.0],
            coeffs: vec![vec![0.0, 0.0], vec![1.0, 2.0]],
            r: 3.0,
            sigma: 1.0,
        };
        let mut buf = Vec::new();
        v.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 5);
    }
}
