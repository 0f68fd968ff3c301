//! Hermite functions `h_q`, their derivatives, projections onto them, and
//! the weighted norms `‖·‖_r` / `‖·‖_{-r}`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::CompositeGrid;

pub const DEFAULT_Q_MAX: usize = 64;
pub const DEFAULT_R: f64 = 3.0;
const PANEL_WIDTH: f64 = 0.5;
const PANEL_ORDER: usize = 12;
const TAIL_TOL: f64 = 1e-10;
// π^(-1/4)
const PI_M14: f64 = 0.751_125_544_464_942_5;

/// `h_0(x), …, h_n(x)` by the three-term recurrence.
///
/// The recurrence is run on `h_q · e^{x²/2}` with periodic rescaling, so
/// large `|x|` neither overflows nor loses the leading terms to underflow.
pub fn hermite_all(n: usize, x: f64, out: &mut Vec<f64>) {
    out.clear();
    out.reserve(n + 1);
    let mut log_scale = -0.5 * x * x;
    let mut prev = 0.0;
    let mut cur = 1.0;
    let mut raw = Vec::with_capacity(n + 1);
    let mut scales = Vec::with_capacity(n + 1);
    raw.push(cur);
    scales.push(log_scale);
    for q in 0..n {
        let qf = q as f64;
        let next = x * (2.0 / (qf + 1.0)).sqrt() * cur - (qf / (qf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > 1e150 {
            prev *= 1e-150;
            cur *= 1e-150;
            log_scale += 150.0 * std::f64::consts::LN_10;
        }
        raw.push(cur);
        scales.push(log_scale);
    }
    for (r, s) in raw.iter().zip(&scales) {
        out.push(if *r == 0.0 { 0.0 } else { PI_M14 * r.signum() * (r.abs().ln() + s).exp() });
    }
}

pub fn hermite_eval(q: usize, x: f64) -> f64 {
    let mut buf = Vec::new();
    hermite_all(q, x, &mut buf);
    buf[q]
}

/// `h_q'(x) = √(q/2) h_{q−1}(x) − √((q+1)/2) h_{q+1}(x)`.
pub fn hermite_deriv(q: usize, x: f64) -> f64 {
    let mut buf = Vec::new();
    hermite_all(q + 1, x, &mut buf);
    deriv_from_values(q, &buf)
}

/// Derivatives `h_0', …, h_n'` given `h_0, …, h_{n+1}` in `values`.
pub fn derivs_from_values(n: usize, values: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend((0..=n).map(|q| deriv_from_values(q, values)));
}

fn deriv_from_values(q: usize, h: &[f64]) -> f64 {
    let qf = q as f64;
    let lower = if q == 0 { 0.0 } else { (qf / 2.0).sqrt() * h[q - 1] };
    lower - ((qf + 1.0) / 2.0).sqrt() * h[q + 1]
}

/// `h_q''` from the derivative recurrence applied twice.
pub fn hermite_second_deriv(q: usize, x: f64) -> f64 {
    let mut h = Vec::new();
    hermite_all(q + 2, x, &mut h);
    let mut d = Vec::new();
    derivs_from_values(q + 1, &h, &mut d);
    deriv_from_values(q, &d)
}

/// Hermite coefficients `c_0, …, c_{Q_max}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermiteCoeffs {
    pub coeffs: Vec<f64>,
    pub r: f64,
}

impl HermiteCoeffs {
    pub fn new(coeffs: Vec<f64>, r: f64) -> Self {
        Self { coeffs, r }
    }

    pub fn q_max(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn dual_norm(&self) -> f64 {
        dual_norm(&self.coeffs, self.r)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["q", "c_q"])?;
        for (q, c) in self.coeffs.iter().enumerate() {
            out.write_record([q.to_string(), c.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `√(Σ (1+2q)^{-r} c_q²)`.
pub fn dual_norm(coeffs: &[f64], r: f64) -> f64 {
    weighted_norm(coeffs, -r)
}

/// `√(Σ (1+2q)^{r} c_q²)`.
pub fn primal_norm(coeffs: &[f64], r: f64) -> f64 {
    weighted_norm(coeffs, r)
}

fn weighted_norm(coeffs: &[f64], power: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(q, c)| (1.0 + 2.0 * q as f64).powf(power) * c * c)
        .sum::<f64>()
        .sqrt()
}

/// Bound on the truncated part `Σ_{q > Q_max} (1+2q)^{-r} c_q²`, taking the
/// largest retained `c_q²` as a proxy for the unseen ones.
pub fn dual_tail_bound(coeffs: &[f64], r: f64) -> f64 {
    if coeffs.is_empty() || r <= 1.0 {
        return f64::INFINITY;
    }
    let q = coeffs.len() as f64 - 1.0;
    let proxy = coeffs.iter().map(|c| c * c).fold(0.0, f64::max);
    // Σ_{k > q} (1+2k)^{-r} ≤ ∫_q^∞ (1+2k)^{-r} dk
    proxy * (1.0 + 2.0 * q).powf(1.0 - r) / (2.0 * (r - 1.0))
}

/// Composite Gauss-Legendre grid on `[-A, A]` with Hermite values cached at
/// every node.
#[derive(Debug, Clone)]
pub struct ProjectionGrid {
    pub half_width: f64,
    pub q_max: usize,
    grid: CompositeGrid,
    // h_q at node k: table[k * (q_max + 1) + q]
    table: Vec<f64>,
}

impl ProjectionGrid {
    pub fn new(half_width: f64, q_max: usize) -> Self {
        let grid = CompositeGrid::new(-half_width, half_width, PANEL_WIDTH, PANEL_ORDER);
        let mut table = Vec::with_capacity(grid.nodes.len() * (q_max + 1));
        let mut buf = Vec::new();
        for &x in &grid.nodes {
            hermite_all(q_max, x, &mut buf);
            table.extend_from_slice(&buf);
        }
        Self {
            half_width,
            q_max,
            grid,
            table,
        }
    }

    /// The default window: `x_hi + 5`, widened until every retained `h_q`
    /// is negligible at the edge.
    pub fn for_window(x_hi: f64, q_max: usize) -> Self {
        let turning = (2.0 * q_max as f64 + 1.0).sqrt();
        Self::new((x_hi.abs() + 5.0).max(turning + 6.0), q_max)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.grid.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.grid.weights
    }

    /// `∫ φ h_q` from samples of `φ` at [`Self::nodes`].
    pub fn project_samples(&self, samples: &[f64], r: f64) -> Result<HermiteCoeffs> {
        if samples.len() != self.grid.nodes.len() {
            return Err(Error::LengthMismatch(samples.len(), self.grid.nodes.len()));
        }
        let m = self.q_max + 1;
        let mut c = vec![0.0; m];
        for (k, (&w, &s)) in self.grid.weights.iter().zip(samples).enumerate() {
            if s == 0.0 {
                continue;
            }
            let row = &self.table[k * m..(k + 1) * m];
            for (cq, h) in c.iter_mut().zip(row) {
                *cq += w * s * h;
            }
        }
        Ok(HermiteCoeffs::new(c, r))
    }

    /// Projects `φ`, rejecting windows that leave `∫_{|x|>A} φ²` above 1e-10.
    pub fn project<F: Fn(f64) -> f64>(&self, phi: F, r: f64) -> Result<HermiteCoeffs> {
        let a = self.half_width;
        let outer = CompositeGrid::new(a, a + 20.0, PANEL_WIDTH, PANEL_ORDER);
        let tail = outer.integrate(|x| phi(x).powi(2) + phi(-x).powi(2)).sqrt();
        if tail > TAIL_TOL {
            return Err(Error::WindowTooSmall { half_width: a, tail });
        }
        let samples: Vec<f64> = self.grid.nodes.iter().map(|&x| phi(x)).collect();
        self.project_samples(&samples, r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn values_at_examples() {
        assert_relative_eq!(hermite_eval(0, 0.0), PI_M14, max_relative = 1e-15);
        assert!((hermite_eval(0, 0.0) - 0.751126).abs() < 1e-6);
        assert_eq!(hermite_eval(1, 0.0), 0.0);
        let oracle = 2f64.sqrt() * PI_M14 * (-0.5f64).exp();
        assert_relative_eq!(hermite_eval(1, 1.0), oracle, max_relative = 1e-14);
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(hermite_deriv(0, 0.0), 0.0);
        for q in 0..=10 {
            for &x in &[-2.0, 0.0, 3.0] {
                let d = 1e-5;
                let fd = (hermite_eval(q, x + d) - hermite_eval(q, x - d)) / (2.0 * d);
                assert!((fd - hermite_deriv(q, x)).abs() < 1e-6, "q={q} x={x}");
            }
        }
    }

    #[test]
    fn far_tail_is_finite_and_tiny() {
        let v = hermite_eval(60, 30.0);
        assert!(v.is_finite() && v.abs() < 1e-100 && v != 0.0);
        assert!(hermite_eval(10_000, 3.0).is_finite());
    }

    #[test]
    fn projection_examples() {
        let grid = ProjectionGrid::for_window(2.0, 20);
        let c = grid.project(|x| hermite_eval(3, x), DEFAULT_R).unwrap();
        for (q, v) in c.coeffs.iter().enumerate() {
            let e = if q == 3 { 1.0 } else { 0.0 };
            assert!((v - e).abs() < 1e-8, "q={q} c={v}");
        }
        let z = grid.project(|_| 0.0, DEFAULT_R).unwrap();
        assert!(z.coeffs.iter().all(|&v| v == 0.0));
        let narrow = ProjectionGrid::new(1.0, 4);
        assert!(matches!(
            narrow.project(|x| (-x * x / 8.0).exp(), DEFAULT_R),
            Err(Error::WindowTooSmall { .. })
        ));
    }

    #[test]
    fn orthonormal_low_order() {
        let grid = ProjectionGrid::new(12.0, 10);
        for p in 0..=10 {
            let c = grid.project(|x| hermite_eval(p, x), 0.0).unwrap();
            for (q, v) in c.coeffs.iter().enumerate() {
                assert!((v - if p == q { 1.0 } else { 0.0 }).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn norm_examples() {
        assert_eq!(dual_norm(&[1.0, 0.0, 0.0], 3.0), 1.0);
        assert_relative_eq!(dual_norm(&[0.0, 1.0], 3.0), 3f64.powf(-1.5), max_relative = 1e-15);
        assert_relative_eq!(dual_norm(&[3.0, 4.0], 0.0), 5.0, max_relative = 1e-15);
        assert_relative_eq!(primal_norm(&[0.0, 1.0], 2.0), 3.0, max_relative = 1e-15);
    }

    #[test]
    fn tail_bound_shrinks_with_more_terms() {
        let a = dual_tail_bound(&[1.0; 10], 3.0);
        let b = dual_tail_bound(&[1.0; 40], 3.0);
        assert!(b < a);
    }

    #[test]
    fn csv_export() {
        let mut buf = Vec::new();
        HermiteCoeffs::new(vec![1.0, 0.5], 3.0).write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "q,c_q\n0,1\n1,0.5\n");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn dual_norm_non_increasing_in_r(
                c in proptest::collection::vec(-10.0f64..10.0, 1..30),
                r1 in 0.0f64..6.0,
                dr in 0.0f64..3.0,
            ) {
                prop_assert!(dual_norm(&c, r1 + dr) <= dual_norm(&c, r1) * (1.0 + 1e-12));
            }
        }
    }
}
