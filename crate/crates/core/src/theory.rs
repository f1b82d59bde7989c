//! Closed-form side: the angle-dependent correction `P(theta)`, the expected
//! squared L2 discrepancy of the cut partition, the weighted-to-unweighted
//! constant `C(p, u)`, and the bound right-hand sides built from them.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::density::ProductDensity;
use crate::error::{invalid, Result};
use crate::geometry::check_theta;

/// `arctan(1/2)`: the branch point of `P` and its minimizer.
pub fn theta_star() -> f64 {
    0.5f64.atan()
}

/// Branch of `P` used below `arctan(1/2)`, as a polynomial in `t = tan(theta)`.
pub fn p_lower_branch(t: f64) -> f64 {
    0.4 * t * t * t + 1.2 * t * t - 1.5 * t
}

/// Branch of `P` used above `arctan(1/2)`, as a function of `t = tan(theta)`.
pub fn p_upper_branch(t: f64) -> f64 {
    let s = 1.0 / t;
    -0.375 * s + 0.075 * s * s + s * s * s / 160.0
}

/// Piecewise correction `P(theta)` on `[0, pi/2]`; `pi/2` maps to the limit 0.
pub fn p_theta(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    let star = theta_star();
    Ok(if theta == star {
        -0.4
    } else if theta < star {
        p_lower_branch(theta.tan())
    } else if theta == FRAC_PI_2 {
        0.0
    } else {
        p_upper_branch(theta.tan())
    })
}

/// Expected squared L2 discrepancy of the `m^d` jittered grid:
/// `m^-2d [ (m/2)^d - ((m-1)/2 + 1/3)^d ]`.
pub fn jittered_bracket(m: usize, d: usize) -> f64 {
    let mf = m as f64;
    let di = d as i32;
    let half = (mf - 1.0) / 2.0;
    ((half + 0.5).powi(di) - (half + 1.0 / 3.0).powi(di)) / mf.powi(2 * di)
}

/// Weight of `P(theta)` in the expected discrepancy: `m^-3d 3^-d`.
pub fn p_coefficient(m: usize, d: usize) -> f64 {
    let di = d as i32;
    (m as f64).powi(-3 * di) * 3f64.powi(-di)
}

/// Expected squared L2 discrepancy of one stratified draw from the cut
/// partition with parameters `(m, d, theta)`.
pub fn expected_l2_theta(m: usize, d: usize, theta: f64) -> Result<f64> {
    if m < 2 || d < 2 {
        return Err(invalid(format!("need m >= 2 and d >= 2 (got m = {m}, d = {d})")));
    }
    Ok(jittered_bracket(m, d) + p_coefficient(m, d) * p_theta(theta)?)
}

/// `C(p, u) = 2^{2p} / (int u)^p * ( (sup u)^p + 2^p ||u(T_1 .)||^p )`.
///
/// Both `sup_{[0,z]} u` and `||u(T_z .)||` are nondecreasing in `z` for
/// product densities, so `z = (1, ..., 1)` gives the largest value.
pub fn constant_c(p: f64, u: &ProductDensity) -> Result<f64> {
    if !(p >= 2.0) {
        return Err(invalid(format!("p = {p} must be >= 2")));
    }
    let mass = u.total_mass()?;
    let ones = vec![1.0; u.dim()];
    let norm = u.h1_norm_scaled(&ones);
    // divide before raising to p so that the result is scale-free term by term
    let sup_term = (u.sup() / mass).powf(p);
    let norm_term = (2.0 * norm / mass).powf(p);
    Ok(4f64.powf(p) * (sup_term + norm_term))
}

/// Right-hand side of the weighted expected-L2 bound:
/// `C(2, u) * expected_l2_theta(m, d, theta)`.
pub fn corollary33_rhs(m: usize, d: usize, theta: f64, u: &ProductDensity) -> Result<f64> {
    Ok(constant_c(2.0, u)? * expected_l2_theta(m, d, theta)?)
}

/// Right-hand side of the `L_p` bound for `p > 2`:
/// `C(p, u) (d N^{1-1/d} + 1)^{p/2} / N^p`.
pub fn theorem35_rhs(p: f64, u: &ProductDensity, n: usize, d: usize) -> Result<f64> {
    if !(p > 2.0) {
        return Err(invalid(format!("p = {p} must be > 2")));
    }
    if n == 0 || d == 0 {
        return Err(invalid("need N >= 1 and d >= 1"));
    }
    let nf = n as f64;
    Ok(constant_c(p, u)? * boundary_bound(n, d, true).powf(p / 2.0) / nf.powf(p))
}

/// Upper bound on the number of partition regions meeting the boundary of an
/// anchored box: `d N^{1-1/d}`, plus one for the cut partition.
pub fn boundary_bound(n: usize, d: usize, with_cut: bool) -> f64 {
    let base = d as f64 * (n as f64).powf(1.0 - 1.0 / d as f64);
    if with_cut {
        base + 1.0
    } else {
        base
    }
}

/// Empirical-versus-closed-form comparison for an upper bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lhs: f64,
    pub lhs_stderr: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl BoundReport {
    pub fn new(lhs: f64, lhs_stderr: f64, rhs: f64) -> Self {
        BoundReport {
            lhs,
            lhs_stderr,
            rhs,
            slack: rhs - lhs,
        }
    }

    /// The bound holds up to `z_threshold` standard errors of the estimate.
    pub fn passes(&self, z_threshold: f64) -> bool {
        self.slack + z_threshold * self.lhs_stderr >= 0.0
    }
}

/// Minimizer of `P` on `[0, pi/2]`: a uniform scan with `grid_resolution`
/// intervals followed by golden-section refinement around the best node.
pub fn theta_argmin(grid_resolution: usize) -> Result<(f64, f64)> {
    if grid_resolution < 100 {
        return Err(invalid("grid resolution must be at least 100"));
    }
    let h = FRAC_PI_2 / grid_resolution as f64;
    let p = |t: f64| p_theta(t.clamp(0.0, FRAC_PI_2)).expect("theta clamped into range");
    let best = (0..=grid_resolution)
        .map(|k| k as f64 * h)
        .min_by(|a, b| p(*a).total_cmp(&p(*b)))
        .expect("non-empty grid");

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = ((best - h).max(0.0), (best + h).min(FRAC_PI_2));
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (p(c), p(d));
    while b - a > 1e-12 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = p(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = p(d);
        }
    }
    let theta = 0.5 * (a + b);
    Ok((theta, p(theta)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn p_theta_anchors() {
        assert_eq!(p_theta(theta_star()).unwrap(), -0.4);
        assert_eq!(p_theta(0.0).unwrap(), 0.0);
        assert_eq!(p_theta(FRAC_PI_2).unwrap(), 0.0);
        assert!((p_theta(FRAC_PI_4).unwrap() + 47.0 / 160.0).abs() < 1e-15);
        assert!(p_theta(-0.01).is_err());
        assert!(p_theta(1.6).is_err());
    }

    #[test]
    fn branches_meet_at_half() {
        assert!((p_lower_branch(0.5) + 0.4).abs() < 1e-12);
        assert!((p_upper_branch(0.5) + 0.4).abs() < 1e-12);
    }

    #[test]
    fn p_nonpositive_dense_scan() {
        let k = 100_000;
        for i in 1..k {
            let theta = FRAC_PI_2 * i as f64 / k as f64;
            assert!(p_theta(theta).unwrap() < 0.0, "theta {theta}");
        }
    }

    #[test]
    fn expected_l2_examples() {
        let v = expected_l2_theta(2, 2, FRAC_PI_2).unwrap();
        assert!((v - 11.0 / 576.0).abs() < 1e-16);
        let v = expected_l2_theta(2, 2, theta_star()).unwrap();
        assert!((v - (11.0 / 576.0 - 1.0 / 1440.0)).abs() < 1e-16);
        for (m, d) in [(2, 2), (3, 2), (2, 3), (4, 3)] {
            let (t1, t2) = (0.2, 1.1);
            let diff = expected_l2_theta(m, d, t1).unwrap() - expected_l2_theta(m, d, t2).unwrap();
            let want = p_coefficient(m, d) * (p_theta(t1).unwrap() - p_theta(t2).unwrap());
            assert!((diff - want).abs() < 1e-15);
        }
        assert!(expected_l2_theta(1, 2, 0.0).is_err());
    }

    #[test]
    fn constant_c_examples() {
        let one = ProductDensity::uniform(2);
        assert_eq!(constant_c(2.0, &one).unwrap(), 16.0);
        assert_eq!(constant_c(3.0, &one).unwrap(), 64.0);
        let u = ProductDensity::from_coefficients(vec![vec![1.0, 0.5], vec![1.0, 0.5]]).unwrap();
        let c = constant_c(2.0, &u).unwrap();
        for s in [0.5, 7.0] {
            let cs = constant_c(2.0, &u.scaled(s).unwrap()).unwrap();
            assert!((c - cs).abs() <= 1e-12 * c);
        }
        assert!(constant_c(1.5, &one).is_err());
    }

    #[test]
    fn corollary_rhs_examples() {
        let one = ProductDensity::uniform(2);
        let r = corollary33_rhs(2, 2, FRAC_PI_2, &one).unwrap();
        assert!((r - 11.0 / 36.0).abs() < 1e-15);
        let (a, b) = (corollary33_rhs(3, 2, 0.1, &one).unwrap(), corollary33_rhs(3, 2, 1.0, &one).unwrap());
        let slope = 16.0 * p_coefficient(3, 2);
        assert!(((a - b) - slope * (p_theta(0.1).unwrap() - p_theta(1.0).unwrap())).abs() < 1e-15);
    }

    #[test]
    fn theorem35_examples() {
        let one = ProductDensity::uniform(2);
        assert!((theorem35_rhs(4.0, &one, 4, 2).unwrap() - 25.0).abs() < 1e-12);
        let mut prev = f64::INFINITY;
        let mut n = 4;
        while n <= 4096 {
            let r = theorem35_rhs(4.0, &one, n, 2).unwrap();
            assert!(r < prev);
            prev = r;
            n *= 2;
        }
        assert!(theorem35_rhs(2.0, &one, 4, 2).is_err());
    }

    #[test]
    fn boundary_bound_examples() {
        assert_eq!(boundary_bound(16, 2, false), 8.0);
        assert_eq!(boundary_bound(16, 2, true), 9.0);
        assert_eq!(boundary_bound(7, 1, false), 1.0);
        assert_eq!(boundary_bound(7, 1, true), 2.0);
    }

    #[test]
    fn argmin_hits_arctan_half() {
        let (t, v) = theta_argmin(1000).unwrap();
        assert!((t - theta_star()).abs() < 1e-3);
        assert!((v + 0.4).abs() < 1e-9);
        let (t2, _) = theta_argmin(2000).unwrap();
        assert!((t - t2).abs() < 1e-4);
        assert!(theta_argmin(50).is_err());
    }

    #[test]
    fn bound_report_pass_rule() {
        let r = BoundReport::new(1.0, 0.1, 0.8);
        assert!(r.slack < 0.0);
        assert!(!r.passes(1.0));
        assert!(r.passes(3.0));
    }
}
