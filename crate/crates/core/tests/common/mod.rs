//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use discrep::{BoxMode, PointSet, Provenance, TargetMeasure, WeightedSample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 5-point Gauss-Legendre nodes and weights on [-1, 1] (exact to degree 9).
const GL_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

/// `int_{[0,1]^d} (target([0,z]) - sum_i w_i 1{x_i <= z})^2 dz` by splitting
/// the cube at every point coordinate. Inside each cell the weighted count is
/// constant and the integrand is a polynomial, so a tensor Gauss rule per cell
/// is exact for low-degree targets. Supports d <= 2.
pub fn l2_piecewise_oracle(ws: &WeightedSample, target: &TargetMeasure) -> f64 {
    let d = ws.dim();
    assert!(d <= 2, "oracle supports d <= 2");
    let axes: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            let mut v: Vec<f64> = ws.points.iter().map(|x| x[j]).chain([0.0, 1.0]).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        })
        .collect();
    let cells = |axis: &Vec<f64>| axis.windows(2).map(|w| (w[0], w[1])).collect::<Vec<_>>();
    let c0 = cells(&axes[0]);
    let c1 = if d == 2 { cells(&axes[1]) } else { vec![(0.0, 1.0)] };
    let mut total = 0.0;
    for &(a0, b0) in &c0 {
        for &(a1, b1) in &c1 {
            let mid: Vec<f64> = if d == 2 { vec![0.5 * (a0 + b0), 0.5 * (a1 + b1)] } else { vec![0.5 * (a0 + b0)] };
            let count = ws.box_mass(&mid, BoxMode::Closed);
            let (h0, h1) = (0.5 * (b0 - a0), 0.5 * (b1 - a1));
            for (n0, w0) in GL_NODES.iter().zip(GL_WEIGHTS) {
                let z0 = 0.5 * (a0 + b0) + h0 * n0;
                if d == 1 {
                    let r = target.measure(&[z0]) - count;
                    total += w0 * h0 * r * r;
                    continue;
                }
                for (n1, w1) in GL_NODES.iter().zip(GL_WEIGHTS) {
                    let z1 = 0.5 * (a1 + b1) + h1 * n1;
                    let r = target.measure(&[z0, z1]) - count;
                    total += w0 * w1 * h0 * h1 * r * r;
                }
            }
            if d == 1 {
                break;
            }
        }
    }
    total
}

/// Lower bound on the star discrepancy from a regular grid of anchors,
/// evaluated in both box modes.
pub fn star_grid_lower_bound(ws: &WeightedSample, target: &TargetMeasure, k: usize) -> f64 {
    assert_eq!(ws.dim(), 2);
    let mut best: f64 = 0.0;
    for i in 0..=k {
        for j in 0..=k {
            let z = [i as f64 / k as f64, j as f64 / k as f64];
            let t = target.measure(&z);
            best = best
                .max((ws.box_mass(&z, BoxMode::Closed) - t).abs())
                .max((ws.box_mass(&z, BoxMode::HalfOpen) - t).abs());
        }
    }
    best
}

/// Random point set with random (normalized) weights.
pub fn random_weighted(rng: &mut ChaCha8Rng, n: usize, d: usize) -> WeightedSample {
    let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect();
    let raw: Vec<f64> = (0..n).map(|_| 0.05 + rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / total).collect();
    WeightedSample::new(PointSet::new(d, pts, Provenance::external()).unwrap(), weights).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
