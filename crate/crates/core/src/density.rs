//! Unnormalized importance densities `u(x) = prod_j u_j(x_j)` with polynomial
//! factors.
//!
//! Every integral the weighted theory needs (total mass, the measure `pi` of
//! anchored boxes, the iterated CDF integrals behind the weighted L2 closed
//! form, and the mixed-derivative norm of `u(T_z .)`) factorizes over
//! coordinates, so each one reduces to exact 1-D polynomial antiderivatives.

use serde::{Deserialize, Serialize};

use crate::discrepancy::WeightedSample;
use crate::error::{invalid, Error, Result};
use crate::sampler::PointSet;

/// Number of cells used for the nonnegativity check and the root scan of `u'`.
const SCAN_CELLS: usize = 1024;
const NONNEG_TOL: f64 = -1e-12;
const ROOT_TOL: f64 = 1e-12;

/// Polynomial on `[0,1]`, coefficients in ascending degree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Poly1D {
    coeffs: Vec<f64>,
}

impl Poly1D {
    /// Builds a polynomial without the nonnegativity check.
    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Poly1D { coeffs }
    }

    /// Builds a density factor, rejecting non-finite coefficients and
    /// polynomials that go negative on `[0,1]`.
    pub fn nonnegative(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(invalid("polynomial needs at least one coefficient"));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(invalid("polynomial coefficients must be finite"));
        }
        let p = Self::from_coeffs(coeffs);
        if let Some((at, value)) = p.first_negative() {
            return Err(Error::NegativeDensity { index: 0, at, value });
        }
        Ok(p)
    }

    pub fn constant(c: f64) -> Self {
        Self::from_coeffs(vec![c])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() == 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly1D {
        if self.is_constant() {
            return Poly1D::constant(0.0);
        }
        Poly1D::from_coeffs(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    /// Antiderivative vanishing at 0.
    pub fn antiderivative(&self) -> Poly1D {
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(0.0);
        out.extend(self.coeffs.iter().enumerate().map(|(k, &c)| c / (k + 1) as f64));
        Poly1D::from_coeffs(out)
    }

    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        let anti = self.antiderivative();
        anti.eval(b) - anti.eval(a)
    }

    pub fn mul(&self, other: &Poly1D) -> Poly1D {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly1D::from_coeffs(out)
    }

    pub fn scale(&self, c: f64) -> Poly1D {
        Poly1D::from_coeffs(self.coeffs.iter().map(|&a| a * c).collect())
    }

    fn first_negative(&self) -> Option<(f64, f64)> {
        (0..=SCAN_CELLS)
            .map(|k| k as f64 / SCAN_CELLS as f64)
            .map(|x| (x, self.eval(x)))
            .find(|&(_, v)| v < NONNEG_TOL)
    }

    /// Maximum over `[0,1]`: endpoints plus the critical points of `p`,
    /// located by bisection on sign changes of `p'` over a fixed grid.
    pub fn max_on_unit(&self) -> f64 {
        let mut best = self.eval(0.0).max(self.eval(1.0));
        if self.degree() < 2 {
            return best;
        }
        let dp = self.derivative();
        let h = 1.0 / SCAN_CELLS as f64;
        let mut lo = 0.0;
        let mut f_lo = dp.eval(lo);
        for k in 1..=SCAN_CELLS {
            let hi = k as f64 * h;
            let f_hi = dp.eval(hi);
            if f_lo == 0.0 {
                best = best.max(self.eval(lo));
            } else if f_lo * f_hi < 0.0 {
                best = best.max(self.eval(bisect(&dp, lo, hi, f_lo)));
            }
            lo = hi;
            f_lo = f_hi;
        }
        best
    }
}

fn bisect(f: &Poly1D, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    while b - a > ROOT_TOL {
        let mid = 0.5 * (a + b);
        let fm = f.eval(mid);
        if fm == 0.0 {
            return mid;
        }
        if fa * fm < 0.0 {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

/// Integrals of the normalized CDF `F = U / U(1)` of one factor.
#[derive(Clone, Debug, PartialEq)]
pub struct CdfIntegrals {
    /// `G` with `G' = F`, `G(0) = 0`.
    cdf_antiderivative: Poly1D,
    /// `int_0^1 F(t)^2 dt`.
    pub square_mass: f64,
}

impl CdfIntegrals {
    /// `int_x^1 F(t) dt`.
    pub fn tail(&self, x: f64) -> f64 {
        self.cdf_antiderivative.eval(1.0) - self.cdf_antiderivative.eval(x)
    }
}

/// Computes the tail integral and squared-CDF mass of a single factor.
pub fn cdf_integrals_1d(factor: &Poly1D) -> CdfIntegrals {
    let anti = factor.antiderivative();
    let cdf = anti.scale(1.0 / anti.eval(1.0));
    CdfIntegrals {
        cdf_antiderivative: cdf.antiderivative(),
        square_mass: cdf.mul(&cdf).integrate(0.0, 1.0),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct ProductDensity {
    factors: Vec<Poly1D>,
    /// Normalized CDF of each factor, `U_j / U_j(1)`.
    cdfs: Vec<Poly1D>,
}

impl ProductDensity {
    pub fn new(factors: Vec<Poly1D>) -> Result<Self> {
        if factors.is_empty() {
            return Err(invalid("density needs at least one factor"));
        }
        for (index, f) in factors.iter().enumerate() {
            if let Some((at, value)) = f.first_negative() {
                return Err(Error::NegativeDensity { index, at, value });
            }
        }
        let mass: f64 = factors.iter().map(|f| f.integrate(0.0, 1.0)).product();
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::DegenerateDensity(mass));
        }
        // each factor has positive mass once the product does (all are nonnegative)
        let cdfs = factors
            .iter()
            .map(|f| {
                let anti = f.antiderivative();
                anti.scale(1.0 / anti.eval(1.0))
            })
            .collect();
        Ok(ProductDensity { factors, cdfs })
    }

    /// Parses one coefficient vector per coordinate, e.g. `[[1.0],[1.0,1.0]]`.
    pub fn from_coefficients(coeffs: Vec<Vec<f64>>) -> Result<Self> {
        let factors = coeffs
            .into_iter()
            .enumerate()
            .map(|(index, c)| {
                Poly1D::nonnegative(c).map_err(|e| match e {
                    Error::NegativeDensity { at, value, .. } => Error::NegativeDensity { index, at, value },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(factors)
    }

    /// The constant density `u = 1` on `[0,1]^d`.
    pub fn uniform(d: usize) -> Self {
        let d = d.max(1);
        ProductDensity {
            factors: vec![Poly1D::constant(1.0); d],
            cdfs: vec![Poly1D::from_coeffs(vec![0.0, 1.0]); d],
        }
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Poly1D] {
        &self.factors
    }

    /// `c * u`, applied to the first factor.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(invalid("scale factor must be positive"));
        }
        let mut factors = self.factors.clone();
        factors[0] = factors[0].scale(c);
        Self::new(factors)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.factors.iter().zip(x).map(|(f, &xj)| f.eval(xj)).product()
    }

    fn total_mass_unchecked(&self) -> f64 {
        self.factors.iter().map(|f| f.integrate(0.0, 1.0)).product()
    }

    pub fn total_mass(&self) -> Result<f64> {
        let mass = self.total_mass_unchecked();
        if mass > 0.0 {
            Ok(mass)
        } else {
            Err(Error::DegenerateDensity(mass))
        }
    }

    /// `pi([0, z])`, the normalized mass of an anchored box.
    pub fn pi_box(&self, z: &[f64]) -> f64 {
        self.cdfs.iter().zip(z).map(|(f, &zj)| f.eval(zj)).product()
    }

    pub fn cdf_integrals(&self) -> Vec<CdfIntegrals> {
        self.factors.iter().map(cdf_integrals_1d).collect()
    }

    pub fn sup(&self) -> f64 {
        self.factors.iter().map(Poly1D::max_on_unit).product()
    }

    /// `|| u(T_z .) ||` in the mixed-derivative Sobolev norm:
    /// `( prod_j z_j int_0^{z_j} u_j'(t)^2 dt )^{1/2}`.
    pub fn h1_norm_scaled(&self, z: &[f64]) -> f64 {
        self.factors
            .iter()
            .zip(z)
            .map(|(f, &zj)| {
                let df = f.derivative();
                zj * df.mul(&df).integrate(0.0, zj)
            })
            .product::<f64>()
            .max(0.0)
            .sqrt()
    }

    /// Self-normalized importance weights `u(x_i) / sum_j u(x_j)`.
    pub fn weights(&self, points: PointSet) -> Result<WeightedSample> {
        if points.d != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: points.d,
            });
        }
        let raw: Vec<f64> = points.iter().map(|x| self.eval(x)).collect();
        let total: f64 = raw.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ZeroWeights);
        }
        let weights = raw.into_iter().map(|v| v / total).collect();
        WeightedSample::new(points, weights)
    }

    pub fn pi_box_checked(&self, z: &[f64]) -> Result<f64> {
        self.check_dim(z)?;
        Ok(self.pi_box(z))
    }
}

impl TryFrom<Vec<Vec<f64>>> for ProductDensity {
    type Error = Error;

    fn try_from(value: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_coefficients(value)
    }
}

impl From<ProductDensity> for Vec<Vec<f64>> {
    fn from(value: ProductDensity) -> Self {
        value.factors.into_iter().map(|f| f.coeffs).collect()
    }
}
