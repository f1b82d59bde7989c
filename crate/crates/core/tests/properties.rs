use std::f64::consts::FRAC_PI_2;

use discrep::discrepancy::{boundary_cell_count, l2_weighted_lebesgue_exact, l2_weighted_pi_exact, local_discrepancy, star_exact};
use discrep::{BoxMode, Partition, PointSet, ProductDensity, Provenance, TargetMeasure, WeightedSample};
use proptest::prelude::*;

fn unit() -> impl Strategy<Value = f64> {
    0.0..=1.0f64
}

/// Nonnegative factor: a positive constant plus nonnegative higher coefficients.
fn factor() -> impl Strategy<Value = Vec<f64>> {
    (0.05..2.0f64, proptest::collection::vec(0.0..1.5f64, 0..3)).prop_map(|(c0, rest)| {
        let mut v = vec![c0];
        v.extend(rest);
        v
    })
}

fn density(d: usize) -> impl Strategy<Value = ProductDensity> {
    proptest::collection::vec(factor(), d).prop_map(|f| ProductDensity::from_coefficients(f).unwrap())
}

fn weighted(d: usize) -> impl Strategy<Value = WeightedSample> {
    proptest::collection::vec((proptest::collection::vec(unit(), d), 0.01..1.0f64), 1..8).prop_map(move |rows| {
        let total: f64 = rows.iter().map(|r| r.1).sum();
        let weights = rows.iter().map(|r| r.1 / total).collect();
        let pts = rows.into_iter().map(|r| r.0).collect();
        WeightedSample::new(PointSet::new(d, pts, Provenance::external()).unwrap(), weights).unwrap()
    })
}

fn reversed(ws: &WeightedSample) -> WeightedSample {
    let pts: Vec<Vec<f64>> = ws.points.iter().rev().map(|p| p.to_vec()).collect();
    let w: Vec<f64> = ws.weights.iter().rev().copied().collect();
    WeightedSample::new(PointSet::new(ws.dim(), pts, Provenance::external()).unwrap(), w).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn partitions_are_equivolume(m in 2usize..6, d in 2usize..4, theta in 0.0..=FRAC_PI_2) {
        let p = Partition::theta(m, d, theta).unwrap();
        let cell = (m as f64).powi(-(d as i32));
        prop_assert_eq!(p.len(), m.pow(d as u32));
        prop_assert!((p.total_volume() - 1.0).abs() < 1e-12);
        for r in &p.regions {
            prop_assert!((r.volume() - cell).abs() < 1e-12);
        }
    }

    #[test]
    fn interior_points_have_one_owner(theta in 0.0..=FRAC_PI_2, x in unit(), y in unit(), w in unit()) {
        let p = Partition::theta(3, 3, theta).unwrap();
        let pt = [x, y, w];
        let owners = p.regions.iter().filter(|r| r.contains(&pt)).count();
        // closed boxes share their faces, so only off-face points have a unique owner
        let on_face = pt.iter().any(|c| (c * 3.0 - (c * 3.0).round()).abs() < 1e-9);
        if !on_face {
            prop_assert_eq!(owners, 1);
        }
        prop_assert!(owners >= 1);
        prop_assert!(p.locate(&pt).is_some());
    }

    #[test]
    fn pi_box_is_monotone(u in density(2), a in unit(), b in unit(), c in unit()) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(u.pi_box(&[lo, c]) <= u.pi_box(&[hi, c]) + 1e-15);
        prop_assert!(u.pi_box(&[c, lo]) <= u.pi_box(&[c, hi]) + 1e-15);
        prop_assert!((u.pi_box(&[1.0, 1.0]) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn h1_norm_is_monotone(u in density(2), a in unit(), b in unit(), c in unit()) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(u.h1_norm_scaled(&[lo, c]) <= u.h1_norm_scaled(&[hi, c]) + 1e-14);
    }

    #[test]
    fn scaling_density_changes_nothing(u in density(2), ws in weighted(2), c in prop::sample::select(vec![0.5, 7.0])) {
        let cu = u.scaled(c).unwrap();
        let a = l2_weighted_pi_exact(&ws, &u).unwrap();
        let b = l2_weighted_pi_exact(&ws, &cu).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        let wa = u.weights(ws.points.clone()).unwrap();
        let wb = cu.weights(ws.points.clone()).unwrap();
        for (x, y) in wa.weights.iter().zip(&wb.weights) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn discrepancies_ignore_order(ws in weighted(2), u in density(2)) {
        let rev = reversed(&ws);
        prop_assert!((l2_weighted_lebesgue_exact(&ws) - l2_weighted_lebesgue_exact(&rev)).abs() < 1e-14);
        prop_assert!((l2_weighted_pi_exact(&ws, &u).unwrap() - l2_weighted_pi_exact(&rev, &u).unwrap()).abs() < 1e-14);
        let t = TargetMeasure::Density(u);
        prop_assert!((star_exact(&ws, &t).unwrap() - star_exact(&rev, &t).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn star_dominates_local(ws in weighted(2), z0 in unit(), z1 in unit()) {
        let t = TargetMeasure::Lebesgue;
        let star = star_exact(&ws, &t).unwrap();
        for mode in [BoxMode::Closed, BoxMode::HalfOpen] {
            prop_assert!(star >= local_discrepancy(&ws, &t, &[z0, z1], mode).abs() - 1e-12);
        }
    }

    #[test]
    fn boundary_counts_stay_bounded(m in 2usize..7, d in 2usize..4, theta in 0.0..=FRAC_PI_2,
                                    z in proptest::collection::vec(unit(), 3)) {
        let z = &z[..d];
        let grid = Partition::grid(m, d).unwrap();
        let cut = Partition::theta(m, d, theta).unwrap();
        let g = boundary_cell_count(&grid, z);
        let c = boundary_cell_count(&cut, z);
        let bound = d * m.pow(d as u32 - 1);
        prop_assert!(g <= bound);
        prop_assert!(c <= bound + 1);
        prop_assert!(g.abs_diff(c) <= 1, "grid {} cut {}", g, c);
    }
}
