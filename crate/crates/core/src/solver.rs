//! Mild solutions of the noise-driven wave equation with zero initial data.
//!
//! Two solvers: an exact event-driven recursion over the jumps of a
//! symmetric truncated noise, and an explicit recursion on the rotated
//! lattice where the solution is a two-parameter integral over rectangles.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy_measures::{sigma2, LevyMeasureSpec};
use crate::mc::path_rng;
use crate::noise::{levy_cell_increments_with, simulate_jump_record, CellGeometry, CellIncrements, JumpRecord};
use crate::wave_kernel::{ConePoint, Domain, RotatedLattice};

/// The value of the wave Green's function inside the cone.
pub const GREEN: f64 = 0.5;

/// `f(u) = a u + b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub a: f64,
    pub b: f64,
}

impl Affine {
    pub const fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    pub const fn constant(c: f64) -> Self {
        Self { a: 0.0, b: c }
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.a * u + self.b
    }

    pub fn lipschitz(&self) -> f64 {
        self.a.abs()
    }
}

/// Solution values `ũ(i, j)` at the `(n1 + 1) × (n2 + 1)` lattice nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub lattice: RotatedLattice,
    pub values: Vec<f64>,
    pub sigma: f64,
}

impl FieldGrid {
    fn stride(&self) -> usize {
        self.lattice.n2 + 1
    }

    pub fn node(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.stride() + j]
    }

    /// Value at the componentwise-smallest node `⪰ K(t, x)`.
    pub fn eval(&self, t: f64, x: f64) -> Result<f64> {
        let (i, j) = self
            .lattice
            .upper_node(ConePoint::new(t, x))
            .ok_or(Error::OutOfDomain { t, x })?;
        Ok(self.node(i, j))
    }

    /// `max ũ²` over the nodes of the rotated rectangle `[0, i] × [0, j]`.
    pub fn rect_sup_sq(&self, i: usize, j: usize) -> f64 {
        let mut m = 0.0f64;
        for a in 0..=i {
            for b in 0..=j {
                m = m.max(self.node(a, b).powi(2));
            }
        }
        m
    }

    /// `∫∫ g(ũ) dt dx` over `region`, one node per `Δ²` of area.
    pub fn integrate_over<G: Fn(f64) -> f64>(&self, region: &Domain, g: G) -> f64 {
        let d2 = self.lattice.spacing * self.lattice.spacing;
        let mut s = 0.0;
        for i in 0..=self.lattice.n1 {
            for j in 0..=self.lattice.n2 {
                let p = self.lattice.node_point(i, j);
                if p.t > 0.0 && p.t <= region.t_max && p.x >= region.x_lo && p.x < region.x_hi {
                    s += g(self.node(i, j));
                }
            }
        }
        s * d2
    }

    /// `t,x,u` rows on the product of `times` and `xs`.
    pub fn write_csv<W: Write>(&self, times: &[f64], xs: &[f64], w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "x", "u"])?;
        for &t in times {
            for &x in xs {
                let u = self.eval(t, x)?;
                out.write_record([t.to_string(), x.to_string(), u.to_string()])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Header `n1 + 1`, `n2 + 1` as little-endian u64, then the node values
    /// row-major as little-endian f64.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&((self.lattice.n1 + 1) as u64).to_le_bytes())?;
        w.write_all(&((self.lattice.n2 + 1) as u64).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

/// `ũ(i, j) = ũ(i−1, j) + ũ(i, j−1) − ũ(i−1, j−1) + ½ f(ũ(i−1, j−1)) Δξ(i−1, j−1)`.
pub fn solve_grid<F: Fn(f64) -> f64>(increments: &CellIncrements, f: F) -> FieldGrid {
    solve_grid_weighted(increments, f, GREEN)
}

/// The lattice recursion with the kernel constant `weight` in place of ½.
pub fn solve_grid_weighted<F: Fn(f64) -> f64>(increments: &CellIncrements, f: F, weight: f64) -> FieldGrid {
    let lattice = increments.lattice;
    let (n1, n2) = (lattice.n1, lattice.n2);
    let s = n2 + 1;
    let mut v = vec![0.0; (n1 + 1) * s];
    let inc = &increments.values;
    for i in 1..=n1 {
        for j in 1..=n2 {
            let ll = v[(i - 1) * s + j - 1];
            let d = inc[(i - 1) * n2 + j - 1];
            let term = if d == 0.0 { 0.0 } else { weight * f(ll) * d };
            v[i * s + j] = v[(i - 1) * s + j] + v[i * s + j - 1] - ll + term;
        }
    }
    FieldGrid {
        lattice,
        values: v,
        sigma: increments.sigma,
    }
}

pub fn eval_field(field: &FieldGrid, t: f64, x: f64) -> Result<f64> {
    field.eval(t, x)
}

/// Exact solution driven by finitely many jumps.
#[derive(Debug, Clone)]
pub struct EventSolution {
    pub record: JumpRecord,
    /// Pre-jump values `u₋(T_k, X_k)`.
    pub node_values: Vec<f64>,
    /// `f(u₋(T_k, X_k)) Z_k / σ`.
    pub integrands: Vec<f64>,
    pub sigma: f64,
}

impl EventSolution {
    /// Sum of `½ f(u₋) Z / σ` over jumps with `T_k < t` in the backward cone.
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let mut s = 0.0;
        for (j, w) in self.record.jumps.iter().zip(&self.integrands) {
            if j.t >= t {
                break;
            }
            if (j.x - x).abs() <= t - j.t {
                s += GREEN * w;
            }
        }
        s
    }
}

pub fn solve_event_driven<F: Fn(f64) -> f64>(record: &JumpRecord, f: F, sigma: f64) -> Result<EventSolution> {
    if record.drift != 0.0 {
        return Err(Error::DriftUnsupported(record.drift));
    }
    let n = record.jumps.len();
    let mut node_values = Vec::with_capacity(n);
    let mut integrands: Vec<f64> = Vec::with_capacity(n);
    for (k, jk) in record.jumps.iter().enumerate() {
        let mut u = 0.0;
        for (jj, w) in record.jumps[..k].iter().zip(&integrands) {
            if jj.t < jk.t && (jk.x - jj.x).abs() <= jk.t - jj.t {
                u += GREEN * w;
            }
        }
        node_values.push(u);
        integrands.push(f(u) * jk.z / sigma);
    }
    Ok(EventSolution {
        record: record.clone(),
        node_values,
        integrands,
        sigma,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    pub floor_coarse: f64,
    pub floor_fine: f64,
    /// Monte Carlo mean of `‖u_coarse − u_fine‖²` in `L²(region)`.
    pub mean_sq_distance: f64,
    pub std_error: f64,
    pub paths: usize,
}

/// Coupled L² distances between solutions at consecutive jump floors.
///
/// Every path simulates one record at the smallest floor; coarser records
/// drop the jumps below their floor and recompute the compensator.
#[allow(clippy::too_many_arguments)]
pub fn refinement_study(
    spec: &LevyMeasureSpec,
    f: &(dyn Fn(f64) -> f64 + Sync),
    floors: &[f64],
    domain: Domain,
    region: Domain,
    spacing: f64,
    paths: usize,
    seed: u64,
) -> Result<Vec<RefinementRow>> {
    if floors.len() < 2 || floors.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::config("floors", "need at least two non-increasing floors"));
    }
    let sigma = sigma2(spec)?.sqrt();
    let geometry = CellGeometry::new(RotatedLattice::covering(&domain, spacing)?, domain);
    let finest = *floors.last().expect("checked length");
    let per_path: Vec<Vec<f64>> = (0..paths)
        .into_par_iter()
        .map(|k| {
            let mut rng = path_rng(seed, k as u64);
            let full = simulate_jump_record(spec, domain, finest, &mut rng)?;
            let fields = floors
                .iter()
                .map(|&fl| {
                    let rec = full.coarsen(spec, fl)?;
                    let inc = levy_cell_increments_with(&rec, &geometry, sigma)?;
                    Ok(solve_grid(&inc, f))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(fields
                .windows(2)
                .map(|w| l2_distance_sq(&w[0], &w[1], &region))
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok((0..floors.len() - 1)
        .map(|m| {
            let xs: Vec<f64> = per_path.iter().map(|d| d[m]).collect();
            let (mean, se) = mean_and_se(&xs);
            RefinementRow {
                floor_coarse: floors[m],
                floor_fine: floors[m + 1],
                mean_sq_distance: mean,
                std_error: se,
                paths,
            }
        })
        .collect())
}

/// `‖a − b‖²` over `region` for two fields on the same lattice.
pub fn l2_distance_sq(a: &FieldGrid, b: &FieldGrid, region: &Domain) -> f64 {
    let diff = FieldGrid {
        lattice: a.lattice,
        values: a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect(),
        sigma: a.sigma,
    };
    diff.integrate_over(region, |d| d * d)
}

pub(crate) fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
