//! Equivolume partitions of the unit cube.
//!
//! Two families are supported: the `m^d` jittered grid, and the grid with the
//! two top-right cells (in coordinates 1 and 2) merged into a `2/m x 1/m`
//! rectangle and split again by a line through its center. The split line
//! makes angle `theta` with the horizontal and runs from the upper-left
//! towards the lower-right of the merged rectangle, so `theta = arctan(1/2)`
//! cuts along the anti-diagonal and `theta = pi/2` restores the two grid cells.
//! In `d > 2` the cut is extruded along coordinates `3..d`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Relative tolerance used by the geometric predicates.
pub const GEOM_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(invalid(format!("interval [{lo}, {hi}] is not inside [0,1]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Closed axis-aligned box `prod [lo_j, hi_j]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub intervals: Vec<Interval>,
}

impl AxisBox {
    pub fn new(intervals: Vec<Interval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(invalid("a box needs at least one interval"));
        }
        Ok(AxisBox { intervals })
    }

    pub fn unit(d: usize) -> Self {
        AxisBox {
            intervals: vec![Interval { lo: 0.0, hi: 1.0 }; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn volume(&self) -> f64 {
        self.intervals.iter().map(Interval::width).product()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim() && self.intervals.iter().zip(point).all(|(iv, &x)| iv.contains(x))
    }

    fn relation(&self, z: &[f64]) -> BoxRelation {
        let tol = GEOM_TOL;
        if self.intervals.iter().zip(z).any(|(iv, &zj)| iv.lo >= zj - tol) {
            BoxRelation::Disjoint
        } else if self.intervals.iter().zip(z).all(|(iv, &zj)| iv.hi <= zj + tol) {
            BoxRelation::Inside
        } else {
            BoxRelation::Boundary
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutSide {
    /// Owns the cut line.
    Lower,
    Upper,
}

/// One half of a box split by a line through the center of its first two
/// coordinates, extruded along the remaining ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutRegion {
    pub base: AxisBox,
    pub theta: f64,
    pub side: CutSide,
    pub center: [f64; 2],
}

impl CutRegion {
    pub fn new(base: AxisBox, theta: f64, side: CutSide) -> Result<Self> {
        if base.dim() < 2 {
            return Err(invalid("a cut region needs at least two coordinates"));
        }
        check_theta(theta)?;
        let center = [base.intervals[0].midpoint(), base.intervals[1].midpoint()];
        Ok(CutRegion {
            base,
            theta,
            side,
            center,
        })
    }

    /// Unit normal of the cut line; `lower` is the closed half-plane where
    /// `normal . (x - center) <= 0`.
    pub fn normal(&self) -> [f64; 2] {
        [self.theta.sin(), self.theta.cos()]
    }

    /// Unit direction of the cut line.
    pub fn direction(&self) -> [f64; 2] {
        [self.theta.cos(), -self.theta.sin()]
    }

    pub fn signed_offset(&self, x1: f64, x2: f64) -> f64 {
        let n = self.normal();
        n[0] * (x1 - self.center[0]) + n[1] * (x2 - self.center[1])
    }

    pub fn on_side(&self, x1: f64, x2: f64) -> bool {
        let s = self.signed_offset(x1, x2);
        match self.side {
            CutSide::Lower => s <= 0.0,
            CutSide::Upper => s > 0.0,
        }
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        self.base.contains(point) && self.on_side(point[0], point[1])
    }

    pub fn volume(&self) -> f64 {
        0.5 * self.base.volume()
    }

    /// Closed convex polygon of this half in coordinates 1-2, counterclockwise.
    pub fn polygon(&self) -> Vec<[f64; 2]> {
        let (x, y) = (self.base.intervals[0], self.base.intervals[1]);
        let rect = vec![[x.lo, y.lo], [x.hi, y.lo], [x.hi, y.hi], [x.lo, y.hi]];
        let n = self.normal();
        let (a, b) = match self.side {
            // keep n.(p - c) <= 0
            CutSide::Lower => ([n[0], n[1]], n[0] * self.center[0] + n[1] * self.center[1]),
            CutSide::Upper => ([-n[0], -n[1]], -(n[0] * self.center[0] + n[1] * self.center[1])),
        };
        clip_half_plane(&rect, a, b)
    }

    fn relation(&self, z: &[f64]) -> BoxRelation {
        let tol = GEOM_TOL;
        let extruded = &self.base.intervals[2..];
        let rest = &z[2..];
        if extruded.iter().zip(rest).any(|(iv, &zj)| iv.lo >= zj - tol) {
            return BoxRelation::Disjoint;
        }
        let poly = self.polygon();
        let full = polygon_area(&poly);
        let clipped = clip_half_plane(&clip_half_plane(&poly, [1.0, 0.0], z[0]), [0.0, 1.0], z[1]);
        if polygon_area(&clipped) <= tol * full {
            return BoxRelation::Disjoint;
        }
        let poly_inside = poly.iter().all(|v| v[0] <= z[0] + tol && v[1] <= z[1] + tol);
        let rest_inside = extruded.iter().zip(rest).all(|(iv, &zj)| iv.hi <= zj + tol);
        if poly_inside && rest_inside {
            BoxRelation::Inside
        } else {
            BoxRelation::Boundary
        }
    }
}

/// How a region sits relative to an anchored test box `[0, z)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoxRelation {
    Inside,
    Disjoint,
    /// The region meets the boundary of the box: neither inside nor disjoint.
    Boundary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Region {
    Box(AxisBox),
    Cut(CutRegion),
}

impl Region {
    pub fn dim(&self) -> usize {
        self.bounding_box().dim()
    }

    pub fn bounding_box(&self) -> &AxisBox {
        match self {
            Region::Box(b) => b,
            Region::Cut(c) => &c.base,
        }
    }

    /// Closed membership; on the cut line only the `lower` half answers true.
    pub fn contains(&self, point: &[f64]) -> bool {
        match self {
            Region::Box(b) => b.contains(point),
            Region::Cut(c) => c.contains(point),
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Region::Box(b) => b.volume(),
            Region::Cut(c) => c.volume(),
        }
    }

    /// Relation of the region's closure to the anchored box `[0, z)`.
    pub fn relation_to_anchored_box(&self, z: &[f64]) -> BoxRelation {
        match self {
            Region::Box(b) => b.relation(z),
            Region::Cut(c) => c.relation(z),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub m: usize,
    pub d: usize,
    pub theta: Option<f64>,
    pub regions: Vec<Region>,
}

impl Partition {
    /// The `m^d` grid of cubes with side `1/m`, in lexicographic cell order
    /// (coordinate 1 most significant).
    pub fn grid(m: usize, d: usize) -> Result<Self> {
        if m == 0 || d == 0 {
            return Err(invalid(format!("grid partition needs m >= 1 and d >= 1 (got m = {m}, d = {d})")));
        }
        let n = checked_cell_count(m, d)?;
        let regions = (0..n).map(|k| Region::Box(grid_cell(m, d, k))).collect();
        Ok(Partition {
            m,
            d,
            theta: None,
            regions,
        })
    }

    /// Grid with the cells at indices `(m-2, m-1, m-1, ...)` and
    /// `(m-1, m-1, m-1, ...)` replaced by the two halves of their union cut
    /// at angle `theta`. The two halves come first (`lower`, then `upper`),
    /// followed by the remaining grid cells in lexicographic order.
    pub fn theta(m: usize, d: usize, theta: f64) -> Result<Self> {
        if m < 2 || d < 2 {
            return Err(invalid(format!("theta partition needs m >= 2 and d >= 2 (got m = {m}, d = {d})")));
        }
        check_theta(theta)?;
        let n = checked_cell_count(m, d)?;
        let mf = m as f64;
        let mut merged = Vec::with_capacity(d);
        merged.push(Interval {
            lo: (m - 2) as f64 / mf,
            hi: 1.0,
        });
        for _ in 1..d {
            merged.push(Interval {
                lo: (m - 1) as f64 / mf,
                hi: 1.0,
            });
        }
        let base = AxisBox { intervals: merged };

        let top = m - 1;
        let skip_a = cell_index(m, &{
            let mut idx = vec![top; d];
            idx[0] = m - 2;
            idx
        });
        let skip_b = cell_index(m, &vec![top; d]);

        let mut regions = Vec::with_capacity(n);
        regions.push(Region::Cut(CutRegion::new(base.clone(), theta, CutSide::Lower)?));
        regions.push(Region::Cut(CutRegion::new(base, theta, CutSide::Upper)?));
        regions.extend(
            (0..n)
                .filter(|&k| k != skip_a && k != skip_b)
                .map(|k| Region::Box(grid_cell(m, d, k))),
        );
        Ok(Partition {
            m,
            d,
            theta: Some(theta),
            regions,
        })
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn total_volume(&self) -> f64 {
        self.regions.iter().map(Region::volume).sum()
    }

    /// Index of the region owning `point`: the first one (in region order)
    /// whose closure contains it.
    pub fn locate(&self, point: &[f64]) -> Option<usize> {
        self.regions.iter().position(|r| r.contains(point))
    }

    /// Short identifier used in provenance headers.
    pub fn id(&self) -> String {
        match self.theta {
            None => format!("grid-m{}-d{}", self.m, self.d),
            Some(t) => format!("theta-m{}-d{}-t{}", self.m, self.d, t),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Partition = serde_json::from_str(s)?;
        if p.regions.iter().any(|r| r.dim() != p.d) {
            return Err(Error::DimensionMismatch {
                expected: p.d,
                got: p.regions.iter().map(Region::dim).find(|&k| k != p.d).unwrap_or(0),
            });
        }
        Ok(p)
    }
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=FRAC_PI_2).contains(&theta) {
        return Err(invalid(format!("theta = {theta} is outside [0, pi/2]")));
    }
    Ok(())
}

fn checked_cell_count(m: usize, d: usize) -> Result<usize> {
    u32::try_from(d)
        .ok()
        .and_then(|d| m.checked_pow(d))
        .filter(|&n| n <= 1 << 26)
        .ok_or_else(|| invalid(format!("m^d is too large (m = {m}, d = {d})")))
}

fn cell_index(m: usize, idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| acc * m + i)
}

fn grid_cell(m: usize, d: usize, mut k: usize) -> AxisBox {
    let mf = m as f64;
    let mut intervals = vec![Interval { lo: 0.0, hi: 0.0 }; d];
    for iv in intervals.iter_mut().rev() {
        let i = k % m;
        k /= m;
        *iv = Interval {
            lo: i as f64 / mf,
            hi: (i + 1) as f64 / mf,
        };
    }
    AxisBox { intervals }
}

/// Sutherland-Hodgman step: keep the part of a convex polygon where
/// `a . p <= b`.
pub(crate) fn clip_half_plane(poly: &[[f64; 2]], a: [f64; 2], b: f64) -> Vec<[f64; 2]> {
    let f = |p: &[f64; 2]| a[0] * p[0] + a[1] * p[1] - b;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for (i, p) in poly.iter().enumerate() {
        let q = &poly[(i + 1) % poly.len()];
        let (fp, fq) = (f(p), f(q));
        if fp <= 0.0 {
            out.push(*p);
        }
        if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
            let t = fp / (fp - fq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

pub(crate) fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let twice: f64 = poly
        .iter()
        .zip(poly.iter().cycle().skip(1))
        .map(|(p, q)| p[0] * q[1] - q[0] * p[1])
        .sum();
    0.5 * twice.abs()
}
