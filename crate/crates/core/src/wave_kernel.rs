//! Green's function of the 1-D wave operator, the light-cone partial order
//! and the rotated (light-cone) coordinates used by the lattice solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// A point `(t, x)` of time × space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConePoint {
    pub t: f64,
    pub x: f64,
}

impl ConePoint {
    pub const fn new(t: f64, x: f64) -> Self {
        Self { t, x }
    }
}

/// Wave Green's function: `1/2` on the closed backward cone of `(t, x)`
/// restricted to `s >= 0`, zero elsewhere.
pub fn green(t: f64, x: f64, s: f64, y: f64) -> f64 {
    if s >= 0.0 && s <= t && (y - x).abs() <= t - s {
        0.5
    } else {
        0.0
    }
}

/// Light-cone order: `a ≼ b` iff `a` lies in the closed backward cone of `b`.
pub fn preceq(a: ConePoint, b: ConePoint) -> bool {
    a.t <= b.t && (a.x - b.x).abs() <= b.t - a.t
}

/// Forward-cone membership: `(t, x)` is in the forward cone with apex `(s, y)`.
pub fn in_forward_cone(apex: ConePoint, p: ConePoint) -> bool {
    p.t >= 0.0 && (apex.x - p.x).abs() <= p.t - apex.t
}

/// `H(t, x) = ((t - x)/√2, (t + x)/√2)`: clockwise rotation by 45°.
pub fn rotate(t: f64, x: f64) -> (f64, f64) {
    (FRAC_1_SQRT_2 * (t - x), FRAC_1_SQRT_2 * (t + x))
}

/// Inverse of [`rotate`].
pub fn unrotate(v1: f64, v2: f64) -> (f64, f64) {
    (FRAC_1_SQRT_2 * (v1 + v2), FRAC_1_SQRT_2 * (v2 - v1))
}

/// An affine light-cone frame `p ↦ scale · H(p - origin)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotatedFrame {
    pub origin: ConePoint,
    pub scale: f64,
}

impl RotatedFrame {
    pub fn new(origin: ConePoint, scale: f64) -> Self {
        Self { origin, scale }
    }

    /// The normalization mapping `[(-3/2, 1/2), (3/2, 1/2)]_≼` onto the unit square.
    pub fn unit_square() -> Self {
        Self {
            origin: ConePoint::new(-1.5, 0.5),
            scale: SQRT_2 / 3.0,
        }
    }

    pub fn to_rotated(&self, p: ConePoint) -> (f64, f64) {
        let (v1, v2) = rotate(p.t - self.origin.t, p.x - self.origin.x);
        (self.scale * v1, self.scale * v2)
    }

    pub fn from_rotated(&self, v1: f64, v2: f64) -> ConePoint {
        let (t, x) = unrotate(v1 / self.scale, v2 / self.scale);
        ConePoint::new(t + self.origin.t, x + self.origin.x)
    }
}

/// The space-time rectangle `[0, t_max] × [x_lo, x_hi]` carrying the noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub t_max: f64,
    pub x_lo: f64,
    pub x_hi: f64,
}

impl Domain {
    pub fn new(t_max: f64, x_lo: f64, x_hi: f64) -> Result<Self> {
        if !(t_max > 0.0 && t_max.is_finite() && x_hi > x_lo && x_lo.is_finite() && x_hi.is_finite())
        {
            return Err(Error::InvalidSpec(format!(
                "degenerate domain [0, {t_max}] x [{x_lo}, {x_hi}]"
            )));
        }
        Ok(Self { t_max, x_lo, x_hi })
    }

    pub fn area(&self) -> f64 {
        self.t_max * (self.x_hi - self.x_lo)
    }

    pub fn contains(&self, t: f64, x: f64) -> bool {
        (0.0..=self.t_max).contains(&t) && (self.x_lo..=self.x_hi).contains(&x)
    }
}

/// Square lattice in rotated coordinates: nodes `(iΔ, jΔ)` for
/// `0 <= i <= n1`, `0 <= j <= n2`, mapped back through `K(u) = H(u - u₀)`.
///
/// Cell `(i, j)` is the half-open square `[iΔ, (i+1)Δ) × [jΔ, (j+1)Δ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotatedLattice {
    pub origin: ConePoint,
    pub spacing: f64,
    pub n1: usize,
    pub n2: usize,
}

impl RotatedLattice {
    pub fn new(origin: ConePoint, spacing: f64, n1: usize, n2: usize) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) || n1 == 0 || n2 == 0 {
            return Err(Error::InvalidSpec(format!(
                "lattice needs positive spacing and dims (got {spacing}, {n1}x{n2})"
            )));
        }
        Ok(Self {
            origin,
            spacing,
            n1,
            n2,
        })
    }

    /// Smallest square lattice whose rectangle contains the image of `domain`.
    ///
    /// The anchor sits below the window's midpoint, at or below
    /// `t = -(x_hi - x_lo)/2`, so that every point of the domain lies in its
    /// forward cone and `(t_max, midpoint)` is a node. Lattice nodes whose
    /// pre-image has `t <= 0` carry zero.
    pub fn covering(domain: &Domain, spacing: f64) -> Result<Self> {
        let width = domain.x_hi - domain.x_lo;
        let diag = SQRT_2 * spacing;
        let steps = ((domain.t_max + 0.5 * width) / diag - 1e-9).ceil();
        let t0 = domain.t_max - steps * diag;
        let origin = ConePoint::new(t0, 0.5 * (domain.x_lo + domain.x_hi));
        let side = (domain.t_max - t0 + 0.5 * width) / SQRT_2;
        let n = (side / spacing - 1e-9).ceil().max(1.0) as usize;
        Self::new(origin, spacing, n, n)
    }

    pub fn frame(&self) -> RotatedFrame {
        RotatedFrame::new(self.origin, 1.0)
    }

    pub fn to_rotated(&self, p: ConePoint) -> (f64, f64) {
        self.frame().to_rotated(p)
    }

    pub fn from_rotated(&self, v1: f64, v2: f64) -> ConePoint {
        self.frame().from_rotated(v1, v2)
    }

    pub fn node_point(&self, i: usize, j: usize) -> ConePoint {
        self.from_rotated(i as f64 * self.spacing, j as f64 * self.spacing)
    }

    /// Pre-image of the cell's center.
    pub fn cell_center(&self, i: usize, j: usize) -> ConePoint {
        self.from_rotated((i as f64 + 0.5) * self.spacing, (j as f64 + 0.5) * self.spacing)
    }

    pub fn cell_count(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn node_count(&self) -> usize {
        (self.n1 + 1) * (self.n2 + 1)
    }

    /// Half-open cell containing `p`, if any.
    pub fn locate_cell(&self, p: ConePoint) -> Option<(usize, usize)> {
        let (v1, v2) = self.to_rotated(p);
        let i = (v1 / self.spacing).floor();
        let j = (v2 / self.spacing).floor();
        if i < 0.0 || j < 0.0 || i >= self.n1 as f64 || j >= self.n2 as f64 {
            return None;
        }
        Some((i as usize, j as usize))
    }

    /// Componentwise-smallest node `⪰ K(p)`; indices within `1e-9` of a
    /// node snap onto it.
    pub fn upper_node(&self, p: ConePoint) -> Option<(usize, usize)> {
        let (v1, v2) = self.to_rotated(p);
        let snap = |v: f64| {
            let r = v / self.spacing;
            let near = r.round();
            if (r - near).abs() < 1e-9 {
                near
            } else {
                r.ceil()
            }
        };
        let (i, j) = (snap(v1), snap(v2));
        if i < 0.0 || j < 0.0 || i > self.n1 as f64 || j > self.n2 as f64 {
            return None;
        }
        Some((i as usize, j as usize))
    }

    /// The same anchor with the spacing halved and the dims doubled.
    pub fn refined(&self) -> Self {
        Self {
            origin: self.origin,
            spacing: 0.5 * self.spacing,
            n1: 2 * self.n1,
            n2: 2 * self.n2,
        }
    }

    /// Pre-image polygon of cell `(i, j)` (counter-clockwise in `(t, x)`).
    pub fn cell_polygon(&self, i: usize, j: usize) -> [ConePoint; 4] {
        let d = self.spacing;
        let (a, b) = (i as f64 * d, j as f64 * d);
        [
            self.from_rotated(a, b),
            self.from_rotated(a + d, b),
            self.from_rotated(a + d, b + d),
            self.from_rotated(a, b + d),
        ]
    }

    /// Area of cell `(i, j)` intersected with `domain`.
    pub fn clipped_area(&self, i: usize, j: usize, domain: &Domain) -> f64 {
        let poly = self.cell_polygon(i, j);
        // quick accept/reject on the bounding box
        let (mut tmin, mut tmax, mut xmin, mut xmax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in &poly {
            tmin = tmin.min(p.t);
            tmax = tmax.max(p.t);
            xmin = xmin.min(p.x);
            xmax = xmax.max(p.x);
        }
        if tmax <= 0.0 || tmin >= domain.t_max || xmax <= domain.x_lo || xmin >= domain.x_hi {
            return 0.0;
        }
        if tmin >= 0.0 && tmax <= domain.t_max && xmin >= domain.x_lo && xmax <= domain.x_hi {
            return self.spacing * self.spacing;
        }
        polygon_area(&clip_to_domain(&poly, domain))
    }
}

impl RotatedLattice {
    /// Centroid of cell `(i, j)` intersected with `domain`, if nonempty.
    pub fn clipped_centroid(&self, i: usize, j: usize, domain: &Domain) -> Option<ConePoint> {
        let poly = self.cell_polygon(i, j);
        let inside = poly
            .iter()
            .all(|p| p.t >= 0.0 && p.t <= domain.t_max && p.x >= domain.x_lo && p.x <= domain.x_hi);
        if inside {
            return Some(self.cell_center(i, j));
        }
        polygon_centroid(&clip_to_domain(&poly, domain))
    }
}

fn clip_half_plane(poly: &[ConePoint], inside: impl Fn(&ConePoint) -> bool, cut: impl Fn(&ConePoint, &ConePoint) -> ConePoint) -> Vec<ConePoint> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    for k in 0..poly.len() {
        let cur = poly[k];
        let prev = poly[(k + poly.len() - 1) % poly.len()];
        match (inside(&prev), inside(&cur)) {
            (true, true) => out.push(cur),
            (true, false) => out.push(cut(&prev, &cur)),
            (false, true) => {
                out.push(cut(&prev, &cur));
                out.push(cur);
            }
            (false, false) => {}
        }
    }
    out
}

fn cut_t(level: f64) -> impl Fn(&ConePoint, &ConePoint) -> ConePoint {
    move |a, b| {
        let s = (level - a.t) / (b.t - a.t);
        ConePoint::new(level, a.x + s * (b.x - a.x))
    }
}

fn cut_x(level: f64) -> impl Fn(&ConePoint, &ConePoint) -> ConePoint {
    move |a, b| {
        let s = (level - a.x) / (b.x - a.x);
        ConePoint::new(a.t + s * (b.t - a.t), level)
    }
}

/// Sutherland-Hodgman clipping of a convex polygon to the domain rectangle.
fn clip_to_domain(poly: &[ConePoint], d: &Domain) -> Vec<ConePoint> {
    let p = clip_half_plane(poly, |p| p.t >= 0.0, cut_t(0.0));
    let p = clip_half_plane(&p, |p| p.t <= d.t_max, cut_t(d.t_max));
    let p = clip_half_plane(&p, |p| p.x >= d.x_lo, cut_x(d.x_lo));
    clip_half_plane(&p, |p| p.x <= d.x_hi, cut_x(d.x_hi))
}

fn polygon_area(poly: &[ConePoint]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for k in 0..poly.len() {
        let a = poly[k];
        let b = poly[(k + 1) % poly.len()];
        acc += a.t * b.x - b.t * a.x;
    }
    0.5 * acc.abs()
}

fn polygon_centroid(poly: &[ConePoint]) -> Option<ConePoint> {
    if poly.len() < 3 {
        return None;
    }
    let (mut a, mut ct, mut cx) = (0.0, 0.0, 0.0);
    for k in 0..poly.len() {
        let p = poly[k];
        let q = poly[(k + 1) % poly.len()];
        let cross = p.t * q.x - q.t * p.x;
        a += cross;
        ct += (p.t + q.t) * cross;
        cx += (p.x + q.x) * cross;
    }
    if a.abs() < 1e-300 {
        return None;
    }
    Some(ConePoint::new(ct / (3.0 * a), cx / (3.0 * a)))
}
