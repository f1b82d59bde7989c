mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use discrep::sampler::{sample_region_uniform, sample_region_uniform_counted, sample_srs, sample_stratified};
use discrep::{Partition, Region, SeedSpec};
use rand::Rng;

/// Chi-square critical value, 3 degrees of freedom, level 1e-3.
const CHI2_3DF: f64 = 16.266;

/// Fraction of a fine midpoint grid over `[lo, hi]` that lies inside `region`.
fn grid_fraction(region: &Region, lo: [f64; 2], hi: [f64; 2], k: usize) -> f64 {
    let mut inside = 0usize;
    for i in 0..k {
        for j in 0..k {
            let x = lo[0] + (hi[0] - lo[0]) * (i as f64 + 0.5) / k as f64;
            let y = lo[1] + (hi[1] - lo[1]) * (j as f64 + 0.5) / k as f64;
            if region.contains(&[x, y]) {
                inside += 1;
            }
        }
    }
    inside as f64 / (k * k) as f64
}

/// Chi-square statistic of region samples against the four quadrants of the
/// region's bounding box, with cell probabilities from a fine grid.
fn quadrant_chi2(region: &Region, n: usize, seed: u64) -> f64 {
    let bb = region.bounding_box();
    let (x, y) = (bb.intervals[0], bb.intervals[1]);
    let (mx, my) = (x.midpoint(), y.midpoint());
    let quads = [
        ([x.lo, y.lo], [mx, my]),
        ([mx, y.lo], [x.hi, my]),
        ([x.lo, my], [mx, y.hi]),
        ([mx, my], [x.hi, y.hi]),
    ];
    let raw: Vec<f64> = quads.iter().map(|(lo, hi)| grid_fraction(region, *lo, *hi, 800)).collect();
    let total: f64 = raw.iter().sum();
    let probs: Vec<f64> = raw.iter().map(|p| p / total).collect();

    let mut counts = [0usize; 4];
    let mut rng = common::rng(seed);
    for _ in 0..n {
        let p = sample_region_uniform(region, &mut rng).unwrap();
        assert!(region.contains(&p));
        let q = usize::from(p[0] > mx) + 2 * usize::from(p[1] > my);
        counts[q] += 1;
    }
    counts
        .iter()
        .zip(&probs)
        .filter(|(_, p)| **p > 0.0)
        .map(|(&c, &p)| {
            let e = p * n as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum()
}

#[test]
fn cut_halves_are_sampled_uniformly() {
    for (k, theta) in [0.0, 0.5f64.atan(), FRAC_PI_4, 1.2, FRAC_PI_2].into_iter().enumerate() {
        let part = Partition::theta(3, 2, theta).unwrap();
        for (side, region) in part.regions[..2].iter().enumerate() {
            let chi2 = quadrant_chi2(region, 40_000, 100 + 2 * k as u64 + side as u64);
            assert!(chi2 < CHI2_3DF, "theta {theta} side {side}: chi2 {chi2}");
        }
    }
}

#[test]
fn grid_cells_are_sampled_uniformly() {
    let part = Partition::grid(4, 2).unwrap();
    for (i, region) in part.regions.iter().enumerate().step_by(5) {
        let chi2 = quadrant_chi2(region, 20_000, 300 + i as u64);
        assert!(chi2 < CHI2_3DF, "cell {i}: chi2 {chi2}");
    }
}

/// For a box `A` inside region `i`, `P(x_i in A) = lambda(A) / lambda(region)`.
#[test]
fn sub_box_hit_rate_matches_volume_ratio() {
    let reps = 40_000u64;
    let part = Partition::theta(3, 2, FRAC_PI_4).unwrap();
    // A = [1/3, 1/2] x [2/3, 5/6] lies in the lower cut half; lambda(A) = 1/36
    let in_a = |p: &[f64]| (1.0 / 3.0..=0.5).contains(&p[0]) && (2.0 / 3.0..=5.0 / 6.0).contains(&p[1]);
    assert!(part.regions[0].contains(&[0.5, 5.0 / 6.0]));
    let seed = SeedSpec::new(11);
    let hits = (0..reps)
        .filter(|&r| in_a(sample_stratified(&part, seed, r).unwrap().point(0)))
        .count();
    let rate = hits as f64 / reps as f64;
    let se = (0.25f64 * 0.75 / reps as f64).sqrt();
    assert!((rate - 0.25).abs() < 4.0 * se, "rate {rate}");

    // same ratio for a grid cell: [0, 1/6] x [0, 1/6] inside the first cell
    let grid = Partition::grid(3, 2).unwrap();
    let hits = (0..reps)
        .filter(|&r| {
            let p = sample_stratified(&grid, seed, r).unwrap();
            p.point(0)[0] <= 1.0 / 6.0 && p.point(0)[1] <= 1.0 / 6.0
        })
        .count();
    let rate = hits as f64 / reps as f64;
    assert!((rate - 0.25).abs() < 4.0 * se, "grid rate {rate}");
}

#[test]
fn stratified_points_fall_in_their_regions() {
    for (m, d, theta) in [(2, 2, 0.3), (3, 3, 1.0), (5, 2, FRAC_PI_2), (2, 4, 0.0)] {
        let part = Partition::theta(m, d, theta).unwrap();
        for r in 0..20 {
            let pts = sample_stratified(&part, SeedSpec::new(5), r).unwrap();
            assert_eq!(pts.len(), part.len());
            for (region, p) in part.regions.iter().zip(pts.iter()) {
                assert!(region.contains(p));
            }
        }
    }
}

#[test]
fn every_point_has_exactly_one_owner_off_faces() {
    let mut rng = common::rng(21);
    for (m, d) in [(2, 2), (3, 2), (4, 3)] {
        for theta in [0.0, 0.4, 0.5f64.atan(), 1.3, FRAC_PI_2] {
            let part = Partition::theta(m, d, theta).unwrap();
            for _ in 0..10_000 {
                let p: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
                let owners = part.regions.iter().filter(|r| r.contains(&p)).count();
                assert_eq!(owners, 1, "m {m} d {d} theta {theta} point {p:?}");
            }
        }
    }
}

#[test]
fn region_volumes_by_monte_carlo() {
    let mut rng = common::rng(33);
    let n = 200_000;
    let part = Partition::theta(2, 2, 0.7).unwrap();
    let mut counts = vec![0usize; part.len()];
    for _ in 0..n {
        let p = [rng.random::<f64>(), rng.random::<f64>()];
        counts[part.locate(&p).unwrap()] += 1;
    }
    let se = (0.25f64 * 0.75 / n as f64).sqrt();
    for c in counts {
        let frac = c as f64 / n as f64;
        assert!((frac - 0.25).abs() < 4.0 * se, "fraction {frac}");
    }
}

#[test]
fn rejection_acceptance_is_one_half() {
    let part = Partition::theta(2, 2, 1.0).unwrap();
    let mut rng = common::rng(8);
    let n = 50_000;
    let trials: usize = (0..n)
        .map(|_| sample_region_uniform_counted(&part.regions[1], &mut rng).unwrap().1)
        .sum();
    let mean = trials as f64 / n as f64;
    assert!((mean - 2.0).abs() < 0.04, "mean trials {mean}");
}

#[test]
fn sampling_is_reproducible_and_streams_differ() {
    let part = Partition::theta(3, 2, 0.9).unwrap();
    let a = sample_stratified(&part, SeedSpec::new(1), 4).unwrap();
    let b = sample_stratified(&part, SeedSpec::new(1), 4).unwrap();
    let c = sample_stratified(&part, SeedSpec::new(1), 5).unwrap();
    let e = sample_stratified(&part, SeedSpec::new(2), 4).unwrap();
    assert_eq!(a.iter().collect::<Vec<_>>(), b.iter().collect::<Vec<_>>());
    assert_ne!(a.iter().collect::<Vec<_>>(), c.iter().collect::<Vec<_>>());
    assert_ne!(a.iter().collect::<Vec<_>>(), e.iter().collect::<Vec<_>>());

    let s = sample_srs(9, 3, SeedSpec::new(1), 0).unwrap();
    assert_eq!(s.len(), 9);
    assert!(s.iter().flatten().all(|x| (0.0..=1.0).contains(x)));
}

#[test]
fn csv_round_trip_keeps_points() {
    let part = Partition::theta(2, 3, 0.2).unwrap();
    let pts = sample_stratified(&part, SeedSpec::new(3), 0).unwrap();
    let mut buf = Vec::new();
    pts.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("# scheme=theta"));
    let back = discrep::PointSet::read_csv(&buf[..]).unwrap();
    assert_eq!(back.iter().collect::<Vec<_>>(), pts.iter().collect::<Vec<_>>());
}
