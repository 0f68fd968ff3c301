//! Realizations of the truncated Lévy noise and of Gaussian white noise,
//! binned into rotated-lattice cell increments.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy_measures::{compensator_drift, sigma2, AmplitudeSampler, LevyMeasureSpec};
use crate::wave_kernel::{ConePoint, Domain, RotatedLattice};

pub const DEFAULT_JUMP_CAP: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub t: f64,
    pub x: f64,
    pub z: f64,
}

/// One realization of the noise truncated below `floor`: finitely many jumps
/// sorted by time, plus the compensator drift `∫_{|z|>floor} z Q^ε(dz)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub jumps: Vec<Jump>,
    pub floor: f64,
    pub drift: f64,
    pub domain: Domain,
}

impl JumpRecord {
    pub fn empty(domain: Domain, floor: f64) -> Self {
        Self {
            jumps: Vec::new(),
            floor,
            drift: 0.0,
            domain,
        }
    }

    pub fn len(&self) -> usize {
        self.jumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jumps.is_empty()
    }

    /// Keeps the jumps with `|z| > floor`; the drift is recomputed for the
    /// coarser floor.
    pub fn coarsen(&self, spec: &LevyMeasureSpec, floor: f64) -> Result<Self> {
        let drift = if floor < spec.epsilon {
            compensator_drift(spec, floor)?
        } else {
            0.0
        };
        Ok(Self {
            jumps: self.jumps.iter().copied().filter(|j| j.z.abs() > floor).collect(),
            floor,
            drift,
            domain: self.domain,
        })
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for j in &self.jumps {
            out.serialize(j)?;
        }
        if self.jumps.is_empty() {
            out.write_record(["t", "x", "z"])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads `t,x,z` rows; floor, drift and domain come from the caller.
    pub fn read_csv<R: Read>(r: R, floor: f64, drift: f64, domain: Domain) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let jumps = rdr.deserialize().collect::<std::result::Result<Vec<Jump>, _>>()?;
        Ok(Self {
            jumps,
            floor,
            drift,
            domain,
        })
    }
}

/// Jump rate per unit space-time area, `Q^ε({|z| > floor})`.
pub fn jump_intensity(spec: &LevyMeasureSpec, floor: f64) -> Result<f64> {
    if floor >= spec.epsilon {
        return Ok(0.0);
    }
    spec.mass_above(floor)
}

pub fn simulate_jump_record<R: Rng + ?Sized>(
    spec: &LevyMeasureSpec,
    domain: Domain,
    floor: f64,
    rng: &mut R,
) -> Result<JumpRecord> {
    simulate_jump_record_capped(spec, domain, floor, DEFAULT_JUMP_CAP, rng)
}

pub fn simulate_jump_record_capped<R: Rng + ?Sized>(
    spec: &LevyMeasureSpec,
    domain: Domain,
    floor: f64,
    cap: f64,
    rng: &mut R,
) -> Result<JumpRecord> {
    if floor >= spec.epsilon {
        return Ok(JumpRecord::empty(domain, floor));
    }
    let sampler = AmplitudeSampler::new(spec, floor)?;
    let intensity = spec.mass_above(floor)?;
    let drift = compensator_drift(spec, floor)?;
    sample_record(&sampler, intensity, drift, domain, cap, rng)
}

fn sample_record<R: Rng + ?Sized>(
    sampler: &AmplitudeSampler,
    intensity: f64,
    drift: f64,
    domain: Domain,
    cap: f64,
    rng: &mut R,
) -> Result<JumpRecord> {
    let expected = intensity * domain.area();
    if !(expected <= cap) {
        return Err(Error::BudgetExceeded { expected, cap });
    }
    let count = if expected > 0.0 {
        Poisson::new(expected)
            .map_err(|e| Error::InvalidSpec(e.to_string()))?
            .sample(rng) as usize
    } else {
        0
    };
    let width = domain.x_hi - domain.x_lo;
    let mut jumps: Vec<Jump> = (0..count)
        .map(|_| {
            let t = rng.random::<f64>() * domain.t_max;
            let x = domain.x_lo + rng.random::<f64>() * width;
            let z = sampler.sample(rng);
            Jump { t, x, z }
        })
        .collect();
    jumps.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok(JumpRecord {
        jumps,
        floor: sampler.floor(),
        drift,
        domain,
    })
}

/// Clipped cell areas of a lattice against a domain, computed once and
/// shared by every path.
#[derive(Debug, Clone)]
pub struct CellGeometry {
    pub lattice: RotatedLattice,
    pub domain: Domain,
    areas: Vec<f64>,
    active: Vec<usize>,
}

impl CellGeometry {
    pub fn new(lattice: RotatedLattice, domain: Domain) -> Self {
        let mut areas = Vec::with_capacity(lattice.cell_count());
        for i in 0..lattice.n1 {
            for j in 0..lattice.n2 {
                areas.push(lattice.clipped_area(i, j, &domain));
            }
        }
        let active = areas
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > 0.0)
            .map(|(k, _)| k)
            .collect();
        Self {
            lattice,
            domain,
            areas,
            active,
        }
    }

    pub fn area(&self, i: usize, j: usize) -> f64 {
        self.areas[i * self.lattice.n2 + j]
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    /// Flat indices of cells with positive clipped area.
    pub fn active_cells(&self) -> &[usize] {
        &self.active
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }
}

/// Noise mass per lattice cell, row-major in `(i, j)`, already divided by
/// `sigma` (1 for Gaussian noise).
#[derive(Debug, Clone, PartialEq)]
pub struct CellIncrements {
    pub lattice: RotatedLattice,
    pub values: Vec<f64>,
    pub sigma: f64,
    /// The clipping domain, when the increments came from one.
    pub domain: Option<Domain>,
}

impl CellIncrements {
    pub fn zeros(lattice: RotatedLattice) -> Self {
        Self {
            lattice,
            values: vec![0.0; lattice.cell_count()],
            sigma: 1.0,
            domain: None,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.lattice.n2 + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.lattice.n2 + j] = v;
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Adds independent centered normals with variance `scale² · area` per cell.
    pub fn add_gaussian<R: Rng + ?Sized>(&mut self, geometry: &CellGeometry, scale: f64, rng: &mut R) {
        if scale == 0.0 {
            return;
        }
        for &k in geometry.active_cells() {
            let g: f64 = StandardNormal.sample(rng);
            self.values[k] += scale * geometry.areas[k].sqrt() * g;
        }
    }

    /// Sums 2×2 blocks of a refined lattice back onto the parent lattice.
    pub fn coarsen(&self) -> Result<Self> {
        let (n1, n2) = (self.lattice.n1, self.lattice.n2);
        if n1 % 2 != 0 || n2 % 2 != 0 {
            return Err(Error::ShapeMismatch(format!("cannot coarsen {n1}x{n2} lattice")));
        }
        let coarse = RotatedLattice::new(self.lattice.origin, 2.0 * self.lattice.spacing, n1 / 2, n2 / 2)?;
        let mut out = Self::zeros(coarse);
        out.sigma = self.sigma;
        out.domain = self.domain;
        for i in 0..n1 {
            for j in 0..n2 {
                out.values[(i / 2) * coarse.n2 + j / 2] += self.get(i, j);
            }
        }
        Ok(out)
    }
}

/// Bins a jump record: each cell holds `(Σ z − drift · clipped area) / σ`.
pub fn levy_cell_increments(
    record: &JumpRecord,
    lattice: &RotatedLattice,
    sigma: f64,
) -> Result<CellIncrements> {
    let geometry = CellGeometry::new(*lattice, record.domain);
    levy_cell_increments_with(record, &geometry, sigma)
}

pub fn levy_cell_increments_with(
    record: &JumpRecord,
    geometry: &CellGeometry,
    sigma: f64,
) -> Result<CellIncrements> {
    let lattice = geometry.lattice;
    let mut out = CellIncrements::zeros(lattice);
    out.sigma = sigma;
    out.domain = Some(geometry.domain);
    for j in &record.jumps {
        let (ci, cj) = lattice
            .locate_cell(ConePoint::new(j.t, j.x))
            .ok_or(Error::JumpOutsideLattice { t: j.t, x: j.x })?;
        out.values[ci * lattice.n2 + cj] += j.z;
    }
    let inv = 1.0 / sigma;
    if record.drift != 0.0 {
        for (v, a) in out.values.iter_mut().zip(&geometry.areas) {
            *v = (*v - record.drift * a) * inv;
        }
    } else {
        for v in out.values.iter_mut() {
            *v *= inv;
        }
    }
    Ok(out)
}

/// Independent centered normals with variance equal to the clipped cell area.
pub fn gaussian_cell_increments<R: Rng + ?Sized>(geometry: &CellGeometry, rng: &mut R) -> CellIncrements {
    let mut out = CellIncrements::zeros(geometry.lattice);
    out.domain = Some(geometry.domain);
    out.add_gaussian(geometry, 1.0, rng);
    out
}

/// A truncated Lévy noise ready for repeated simulation: the jump floor,
/// normalization and amplitude sampler are resolved once.
#[derive(Debug, Clone)]
pub struct LevyNoise {
    pub spec: LevyMeasureSpec,
    pub floor: f64,
    /// `σ(ε)`, the full standard deviation of the truncated measure.
    pub sigma: f64,
    pub drift: f64,
    pub intensity: f64,
    /// Standard deviation (relative to σ) of the jumps below the floor; used
    /// when those are replaced by a Gaussian of equal variance.
    pub small_jump_scale: f64,
    pub cap: f64,
    sampler: Option<AmplitudeSampler>,
}

impl LevyNoise {
    pub fn new(spec: LevyMeasureSpec, floor: f64, small_jump_gaussian: bool, cap: f64) -> Result<Self> {
        let s2 = sigma2(&spec)?;
        let sigma = s2.sqrt();
        let (sampler, intensity, drift) = if floor < spec.epsilon {
            (
                Some(AmplitudeSampler::new(&spec, floor)?),
                spec.mass_above(floor)?,
                compensator_drift(&spec, floor)?,
            )
        } else {
            (None, 0.0, 0.0)
        };
        let small_jump_scale = if small_jump_gaussian {
            let above = spec.second_moment_above(floor.max(0.0))?;
            ((s2 - above).max(0.0) / s2).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            spec,
            floor,
            sigma,
            drift,
            intensity,
            small_jump_scale,
            cap,
            sampler,
        })
    }

    pub fn simulate<R: Rng + ?Sized>(&self, domain: Domain, rng: &mut R) -> Result<JumpRecord> {
        match &self.sampler {
            Some(s) => sample_record(s, self.intensity, self.drift, domain, self.cap, rng),
            None => Ok(JumpRecord::empty(domain, self.floor)),
        }
    }

    /// Simulates a record and bins it, adding the small-jump Gaussian part
    /// when enabled.
    pub fn increments<R: Rng + ?Sized>(
        &self,
        geometry: &CellGeometry,
        rng: &mut R,
    ) -> Result<(JumpRecord, CellIncrements)> {
        let record = self.simulate(geometry.domain, rng)?;
        let mut inc = levy_cell_increments_with(&record, geometry, self.sigma)?;
        inc.add_gaussian(geometry, self.small_jump_scale, rng);
        Ok((record, inc))
    }
}

/// The two driving noises.
#[derive(Debug, Clone)]
pub enum NoiseModel {
    Gaussian,
    Levy(LevyNoise),
}

impl NoiseModel {
    pub fn sigma(&self) -> f64 {
        match self {
            NoiseModel::Gaussian => 1.0,
            NoiseModel::Levy(l) => l.sigma,
        }
    }

    pub fn increments<R: Rng + ?Sized>(&self, geometry: &CellGeometry, rng: &mut R) -> Result<CellIncrements> {
        match self {
            NoiseModel::Gaussian => Ok(gaussian_cell_increments(geometry, rng)),
            NoiseModel::Levy(l) => Ok(l.increments(geometry, rng)?.1),
        }
    }
}
