//! Discrepancies of weighted point sets against Lebesgue measure or a
//! density-induced measure `pi`.
//!
//! At `p = 2` the squared L2 discrepancy has a Warnock-type double-sum closed
//! form for both targets. General `p` is estimated by Monte Carlo over the
//! anchor `z`. The exact star discrepancy is computed by corner enumeration for
//! `d <= 2`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::density::ProductDensity;
use crate::error::{invalid, Error, Result};
use crate::geometry::{BoxRelation, Partition};
use crate::sampler::{PointSet, SeedSpec, StreamDomain};
use crate::stats::{pairwise_sum, Summary};

const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedSample {
    pub points: PointSet,
    pub weights: Vec<f64>,
}

impl WeightedSample {
    pub fn new(points: PointSet, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != points.len() {
            return Err(Error::InvalidWeights(format!(
                "{} weights for {} points",
                weights.len(),
                points.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidWeights("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidWeights(format!("weights sum to {total}, not 1")));
        }
        Ok(WeightedSample { points, weights })
    }

    /// Equal weights `1/N`.
    pub fn uniform(points: PointSet) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidWeights("empty point set".into()));
        }
        let n = points.len();
        Ok(WeightedSample {
            points,
            weights: vec![1.0 / n as f64; n],
        })
    }

    pub fn dim(&self) -> usize {
        self.points.d
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    fn pairs(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }

    /// Weighted count of points in `[0, z]` (closed) or `[0, z)` (half-open).
    pub fn box_mass(&self, z: &[f64], mode: BoxMode) -> f64 {
        self.pairs()
            .filter(|(x, _)| mode.includes(x, z))
            .map(|(_, w)| w)
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "density", rename_all = "lowercase")]
pub enum TargetMeasure {
    Lebesgue,
    Density(ProductDensity),
}

impl TargetMeasure {
    /// Measure of the anchored box `[0, z]`.
    pub fn measure(&self, z: &[f64]) -> f64 {
        match self {
            TargetMeasure::Lebesgue => z.iter().product(),
            TargetMeasure::Density(u) => u.pi_box(z),
        }
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        match self {
            TargetMeasure::Density(u) if u.dim() != d => Err(Error::DimensionMismatch {
                expected: d,
                got: u.dim(),
            }),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxMode {
    /// `[0, z]`
    Closed,
    /// `[0, z)`
    HalfOpen,
}

impl BoxMode {
    #[inline]
    pub fn includes(self, x: &[f64], z: &[f64]) -> bool {
        match self {
            BoxMode::Closed => x.iter().zip(z).all(|(a, b)| a <= b),
            BoxMode::HalfOpen => x.iter().zip(z).all(|(a, b)| a < b),
        }
    }
}

/// `sum_i w_i 1_box(x_i) - target(box)` for the anchored box at `z`.
pub fn local_discrepancy(ws: &WeightedSample, target: &TargetMeasure, z: &[f64], mode: BoxMode) -> f64 {
    ws.box_mass(z, mode) - target.measure(z)
}

/// `sum_{i,k} w_i w_k prod_j (1 - max(x_ij, x_kj))`, shared by both closed forms.
fn pair_term(ws: &WeightedSample) -> f64 {
    let n = ws.len();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let xi = ws.points.point(i);
        let wi = ws.weights[i];
        let diag = wi * wi * xi.iter().map(|a| 1.0 - a).product::<f64>();
        let off: f64 = (i + 1..n)
            .map(|k| {
                let xk = ws.points.point(k);
                ws.weights[k] * xi.iter().zip(xk).map(|(a, b)| 1.0 - a.max(*b)).product::<f64>()
            })
            .sum();
        rows.push(diag + 2.0 * wi * off);
    }
    pairwise_sum(&rows)
}

/// Squared L2 discrepancy against Lebesgue measure:
/// `3^-d - 2 sum_i w_i prod_j (1 - x_ij^2)/2 + sum_{i,k} w_i w_k prod_j (1 - max(x_ij, x_kj))`.
pub fn l2_weighted_lebesgue_exact(ws: &WeightedSample) -> f64 {
    let d = ws.dim() as i32;
    let a = 3f64.powi(-d);
    let b: f64 = ws
        .pairs()
        .map(|(x, w)| w * x.iter().map(|t| 0.5 * (1.0 - t * t)).product::<f64>())
        .sum();
    (a - 2.0 * b + pair_term(ws)).max(0.0)
}

/// Squared L2 discrepancy against `pi`, using the per-factor CDF integrals.
pub fn l2_weighted_pi_exact(ws: &WeightedSample, u: &ProductDensity) -> Result<f64> {
    if u.dim() != ws.dim() {
        return Err(Error::DimensionMismatch {
            expected: ws.dim(),
            got: u.dim(),
        });
    }
    let cdf = u.cdf_integrals();
    let a: f64 = cdf.iter().map(|c| c.square_mass).product();
    let b: f64 = ws
        .pairs()
        .map(|(x, w)| w * cdf.iter().zip(x).map(|(c, &t)| c.tail(t)).product::<f64>())
        .sum();
    Ok((a - 2.0 * b + pair_term(ws)).max(0.0))
}

/// Exact squared L2 discrepancy for either target.
pub fn l2_exact(ws: &WeightedSample, target: &TargetMeasure) -> Result<f64> {
    match target {
        TargetMeasure::Lebesgue => Ok(l2_weighted_lebesgue_exact(ws)),
        TargetMeasure::Density(u) => l2_weighted_pi_exact(ws, u),
    }
}

/// Monte Carlo estimate of `L_p^p` and its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

/// Estimates `int |Delta(z)|^p dz` from `samples` uniform anchors drawn from
/// the seed's dedicated z-stream.
pub fn lp_mc(
    ws: &WeightedSample,
    target: &TargetMeasure,
    p: f64,
    samples: usize,
    seed: SeedSpec,
    mode: BoxMode,
) -> Result<McEstimate> {
    let mut rng = seed.stream(StreamDomain::ZSamples, 0, 0);
    lp_mc_with_rng(ws, target, p, samples, &mut rng, mode)
}

pub fn lp_mc_with_rng<R: Rng + ?Sized>(
    ws: &WeightedSample,
    target: &TargetMeasure,
    p: f64,
    samples: usize,
    rng: &mut R,
    mode: BoxMode,
) -> Result<McEstimate> {
    if samples < 2 {
        return Err(invalid("Monte Carlo over z needs at least 2 samples"));
    }
    if !(p >= 1.0) {
        return Err(invalid(format!("p = {p} must be >= 1")));
    }
    target.check_dim(ws.dim())?;
    let mut z = vec![0.0; ws.dim()];
    let values: Vec<f64> = (0..samples)
        .map(|_| {
            z.iter_mut().for_each(|zj| *zj = rng.random::<f64>());
            let delta = local_discrepancy(ws, target, &z, mode).abs();
            if p == 2.0 {
                delta * delta
            } else {
                delta.powf(p)
            }
        })
        .collect();
    let s = Summary::of(&values);
    Ok(McEstimate {
        estimate: s.mean,
        stderr: s.stderr,
    })
}

/// Exact weighted star discrepancy `sup_z |target([0,z)) - sum w_i 1_[0,z)(x_i)|`
/// for `d <= 2`.
///
/// Between consecutive coordinate values the weighted count is constant and
/// the target is monotone, so the supremum is a one-sided limit at a grid
/// corner `c`: either `closed_count(c) - target(c)` or
/// `target(c) - open_count(c)`.
pub fn star_exact(ws: &WeightedSample, target: &TargetMeasure) -> Result<f64> {
    let d = ws.dim();
    if d > 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    target.check_dim(d)?;
    let axes: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            let mut v: Vec<f64> = ws.points.iter().map(|x| x[j]).chain([0.0, 1.0]).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        })
        .collect();
    let mut best: f64 = 0.0;
    let mut corner = vec![0.0; d];
    let mut visit = |c: &[f64]| {
        let t = target.measure(c);
        let closed = ws.box_mass(c, BoxMode::Closed);
        let open = ws.box_mass(c, BoxMode::HalfOpen);
        best = best.max(closed - t).max(t - open);
    };
    match d {
        1 => {
            for &a in &axes[0] {
                corner[0] = a;
                visit(&corner);
            }
        }
        _ => {
            for &a in &axes[0] {
                for &b in &axes[1] {
                    corner[0] = a;
                    corner[1] = b;
                    visit(&corner);
                }
            }
        }
    }
    Ok(best)
}

/// Number of regions whose closure meets the boundary of the anchored box
/// `[0, z)`: neither contained in it nor interior-disjoint from it.
pub fn boundary_cell_count(partition: &Partition, z: &[f64]) -> usize {
    partition
        .regions
        .iter()
        .filter(|r| r.relation_to_anchored_box(z) == BoxRelation::Boundary)
        .count()
}
