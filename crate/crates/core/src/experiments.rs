//! Replication engine: repeated stratified draws, per-draw discrepancies,
//! and comparisons against the closed forms in [`crate::theory`].
//!
//! Replication `r` always uses the streams `(seed, r, .)`, and per-draw values
//! are reduced in replication order with a fixed pairwise tree, so reports do
//! not depend on the number of worker threads.

use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::ProductDensity;
use crate::discrepancy::{boundary_cell_count, l2_exact, lp_mc_with_rng, BoxMode, TargetMeasure, WeightedSample};
use crate::error::{invalid, Error, Result};
use crate::geometry::Partition;
use crate::sampler::{sample_srs, sample_stratified, PointSet, Scheme, SeedSpec, StreamDomain};
use crate::stats::{two_sample_z, Summary};
use crate::theory::{self, BoundReport};

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "DISCREP_THREADS";

pub const DEFAULT_Z_THRESHOLD: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "density", rename_all = "lowercase")]
pub enum WeightScheme {
    Uniform,
    Importance(ProductDensity),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub scheme: Scheme,
    pub m: usize,
    pub d: usize,
    pub theta: f64,
    /// Number of points for `srs`; defaults to `m^d`.
    pub n: Option<usize>,
    pub target: TargetMeasure,
    pub weights: WeightScheme,
    pub p: f64,
    pub replications: usize,
    pub mc_z_samples: usize,
    pub seed: u64,
    pub z_threshold: f64,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scheme: Scheme::Theta,
            m: 2,
            d: 2,
            theta: FRAC_PI_2,
            n: None,
            target: TargetMeasure::Lebesgue,
            weights: WeightScheme::Uniform,
            p: 2.0,
            replications: 1000,
            mc_z_samples: 1024,
            seed: 0,
            z_threshold: DEFAULT_Z_THRESHOLD,
            output: None,
        }
    }
}

impl ExperimentConfig {
    /// Parses `key = value` lines; blank lines and `#` comments are skipped.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut density: Option<ProductDensity> = None;
        let mut target_kind: Option<String> = None;
        let mut weight_kind: Option<String> = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "u" | "density" => density = Some(parse_density(value)?),
                "target" => target_kind = Some(value.to_string()),
                "weights" => weight_kind = Some(value.to_string()),
                _ => cfg.set(key, value)?,
            }
        }
        cfg.set_measures(target_kind.as_deref(), weight_kind.as_deref(), density)?;
        Ok(cfg)
    }

    /// Sets a scalar field by its config-file key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            value
                .parse()
                .map_err(|e| Error::Config(format!("bad value {value:?} for {key}: {e}")))
        }
        match key {
            "scheme" => {
                self.scheme = match value {
                    "srs" => Scheme::Srs,
                    "grid" => Scheme::Grid,
                    "theta" => Scheme::Theta,
                    other => return Err(Error::Config(format!("unknown scheme {other:?}"))),
                }
            }
            "m" => self.m = num(key, value)?,
            "d" => self.d = num(key, value)?,
            "n" => self.n = Some(num(key, value)?),
            "theta" => self.theta = num(key, value)?,
            "p" => self.p = num(key, value)?,
            "replications" | "reps" => self.replications = num(key, value)?,
            "mc_z_samples" | "mc_samples" => self.mc_z_samples = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "z_threshold" | "threshold" => self.z_threshold = num(key, value)?,
            "output" => self.output = Some(PathBuf::from(value)),
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Resolves the `target`/`weights` selectors against an optional density.
    /// Naming a density alone selects it for both.
    pub fn set_measures(&mut self, target: Option<&str>, weights: Option<&str>, density: Option<ProductDensity>) -> Result<()> {
        let need = |what: &str| -> Result<ProductDensity> {
            density
                .clone()
                .ok_or_else(|| Error::Config(format!("{what} needs a density `u`")))
        };
        match target {
            Some("lebesgue") => self.target = TargetMeasure::Lebesgue,
            Some("density") | Some("pi") => self.target = TargetMeasure::Density(need("target = density")?),
            Some(other) => return Err(Error::Config(format!("unknown target {other:?}"))),
            None => {
                if let Some(u) = &density {
                    self.target = TargetMeasure::Density(u.clone());
                }
            }
        }
        match weights {
            Some("uniform") => self.weights = WeightScheme::Uniform,
            Some("importance") => self.weights = WeightScheme::Importance(need("weights = importance")?),
            Some(other) => return Err(Error::Config(format!("unknown weights {other:?}"))),
            None => {
                if let Some(u) = density {
                    self.weights = WeightScheme::Importance(u);
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 2 {
            return Err(invalid(format!("replications must be >= 2 (got {})", self.replications)));
        }
        if self.d == 0 {
            return Err(invalid("d must be >= 1"));
        }
        match self.scheme {
            Scheme::Theta if self.m < 2 || self.d < 2 => {
                return Err(invalid(format!(
                    "the theta scheme needs m >= 2 and d >= 2 (got m = {}, d = {})",
                    self.m, self.d
                )))
            }
            Scheme::Grid if self.m < 1 => return Err(invalid("m must be >= 1")),
            _ => {}
        }
        if !(self.p >= 1.0) {
            return Err(invalid(format!("p = {} must be >= 1", self.p)));
        }
        if self.p != 2.0 && self.mc_z_samples < 2 {
            return Err(invalid("mc_z_samples must be >= 2 when p != 2"));
        }
        let dims = [
            match &self.target {
                TargetMeasure::Density(u) => Some(u.dim()),
                TargetMeasure::Lebesgue => None,
            },
            match &self.weights {
                WeightScheme::Importance(u) => Some(u.dim()),
                WeightScheme::Uniform => None,
            },
        ];
        if let Some(got) = dims.into_iter().flatten().find(|&k| k != self.d) {
            return Err(Error::DimensionMismatch { expected: self.d, got });
        }
        Ok(())
    }

    pub fn n_points(&self) -> usize {
        match self.scheme {
            Scheme::Srs => self.n.unwrap_or_else(|| self.m.pow(self.d as u32)),
            _ => self.m.pow(self.d as u32),
        }
    }

    fn partition(&self) -> Result<Option<Partition>> {
        Ok(match self.scheme {
            Scheme::Grid => Some(Partition::grid(self.m, self.d)?),
            Scheme::Theta => Some(Partition::theta(self.m, self.d, self.theta)?),
            _ => None,
        })
    }

    fn params(&self) -> ReportParams {
        ReportParams {
            scheme: self.scheme,
            m: self.m,
            d: self.d,
            theta: (self.scheme == Scheme::Theta).then_some(self.theta),
            n: self.n_points(),
            target: self.target.clone(),
            weights: self.weights.clone(),
            p: self.p,
            mc_z_samples: (self.p != 2.0).then_some(self.mc_z_samples),
            seed: self.seed,
        }
    }
}

fn parse_density(value: &str) -> Result<ProductDensity> {
    let coeffs: Vec<Vec<f64>> =
        serde_json::from_str(value).map_err(|e| Error::Config(format!("bad density {value:?}: {e}")))?;
    ProductDensity::from_coefficients(coeffs)
}

/// Parameter echo carried in every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub scheme: Scheme,
    pub m: usize,
    pub d: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    pub n: usize,
    pub target: TargetMeasure,
    pub weights: WeightScheme,
    pub p: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_z_samples: Option<usize>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub quantity: String,
    pub params: ReportParams,
    pub replications: usize,
    pub mean: f64,
    pub stderr: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub passed: Option<bool>,
    /// Not serialized: reports must be byte-identical across runs.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl ExperimentReport {
    pub fn summary(&self) -> Summary {
        Summary {
            n: self.replications,
            mean: self.mean,
            sd: self.stderr * (self.replications as f64).sqrt(),
            stderr: self.stderr,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Builds the weighted sample of one replication.
pub fn draw(config: &ExperimentConfig, partition: Option<&Partition>, replication: u64) -> Result<WeightedSample> {
    let seed = SeedSpec::new(config.seed);
    let points: PointSet = match partition {
        Some(p) => sample_stratified(p, seed, replication)?,
        None => sample_srs(config.n_points(), config.d, seed, replication)?,
    };
    match &config.weights {
        WeightScheme::Uniform => WeightedSample::uniform(points),
        WeightScheme::Importance(u) => u.weights(points),
    }
}

/// Per-draw `L_p^p`: exact at `p = 2`, Monte Carlo over `z` otherwise.
fn per_draw(config: &ExperimentConfig, partition: Option<&Partition>, replication: u64) -> Result<f64> {
    let ws = draw(config, partition, replication)?;
    if config.p == 2.0 {
        l2_exact(&ws, &config.target)
    } else {
        let mut rng = SeedSpec::new(config.seed).stream(StreamDomain::ZSamples, replication, 0);
        Ok(lp_mc_with_rng(&ws, &config.target, config.p, config.mc_z_samples, &mut rng, BoxMode::Closed)?.estimate)
    }
}

/// Per-replication discrepancy values, in replication order.
pub fn replicate(config: &ExperimentConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let partition = config.partition()?;
    (0..config.replications as u64)
        .into_par_iter()
        .map(|r| per_draw(config, partition.as_ref(), r))
        .collect()
}

/// Closed-form `E L_2^2` when one is known for the configuration
/// (unweighted, Lebesgue target).
pub fn closed_form_reference(config: &ExperimentConfig) -> Option<f64> {
    if config.p != 2.0 || config.target != TargetMeasure::Lebesgue || config.weights != WeightScheme::Uniform {
        return None;
    }
    match config.scheme {
        Scheme::Theta => theory::expected_l2_theta(config.m, config.d, config.theta).ok(),
        Scheme::Grid => Some(theory::jittered_bracket(config.m, config.d)),
        Scheme::Srs => {
            let di = config.d as i32;
            Some((2f64.powi(-di) - 3f64.powi(-di)) / config.n_points() as f64)
        }
        Scheme::External => None,
    }
}

/// Mean and standard error of `L_p^p` over independent draws, with a z-score
/// against the closed form when one exists.
pub fn estimate_expected_lp(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let values = replicate(config)?;
    let s = Summary::of(&values);
    let reference = closed_form_reference(config);
    let z_score = reference.map(|r| s.z_against(r));
    Ok(ExperimentReport {
        quantity: format!("E L_{}^{}", config.p, config.p),
        params: config.params(),
        replications: s.n,
        mean: s.mean,
        stderr: s.stderr,
        reference,
        z_score,
        slack: None,
        passed: z_score.map(|z| z.abs() < config.z_threshold),
        wall_time: start.elapsed(),
    })
}

/// Compares the empirical mean of the unweighted squared L2 discrepancy of the
/// cut partition against the closed form.
pub fn verify_lemma32(m: usize, d: usize, theta: f64, replications: usize, seed: u64) -> Result<ExperimentReport> {
    if m < 2 || d < 2 {
        return Err(invalid(format!("need m >= 2 and d >= 2 (got m = {m}, d = {d})")));
    }
    let config = ExperimentConfig {
        scheme: Scheme::Theta,
        m,
        d,
        theta,
        replications,
        seed,
        ..ExperimentConfig::default()
    };
    let mut report = estimate_expected_lp(&config)?;
    report.quantity = "E L_2^2 (cut partition)".into();
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundId {
    /// Weighted expected L2 against `C(2,u)` times the closed form.
    Corollary33,
    /// Worst-case weighted integration error in the unit ball of the
    /// mixed-derivative Sobolev space; bounded through its L2 majorant.
    Theorem34,
    /// `p > 2` worst-case error through the weighted `L_p^p` majorant.
    Theorem35,
}

impl std::str::FromStr for BoundId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corollary33" => Ok(BoundId::Corollary33),
            "theorem34" => Ok(BoundId::Theorem34),
            "theorem35" => Ok(BoundId::Theorem35),
            other => Err(Error::Config(format!("unknown bound {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundParams {
    pub m: usize,
    pub d: usize,
    pub theta: f64,
    pub u: ProductDensity,
    pub p: f64,
    pub replications: usize,
    pub mc_z_samples: usize,
    pub seed: u64,
}

/// Empirical left side (importance-weighted draws from the cut partition,
/// discrepancy against `pi`) versus the closed-form right side.
pub fn verify_bound(bound: BoundId, params: &BoundParams) -> Result<BoundReport> {
    let p = match bound {
        BoundId::Corollary33 | BoundId::Theorem34 => 2.0,
        BoundId::Theorem35 => {
            if !(params.p > 2.0) {
                return Err(invalid(format!("theorem35 needs p > 2 (got {})", params.p)));
            }
            params.p
        }
    };
    let config = ExperimentConfig {
        scheme: Scheme::Theta,
        m: params.m,
        d: params.d,
        theta: params.theta,
        n: None,
        target: TargetMeasure::Density(params.u.clone()),
        weights: WeightScheme::Importance(params.u.clone()),
        p,
        replications: params.replications,
        mc_z_samples: params.mc_z_samples,
        seed: params.seed,
        ..ExperimentConfig::default()
    };
    let s = Summary::of(&replicate(&config)?);
    let rhs = match bound {
        BoundId::Corollary33 | BoundId::Theorem34 => theory::corollary33_rhs(params.m, params.d, params.theta, &params.u)?,
        BoundId::Theorem35 => theory::theorem35_rhs(p, &params.u, config.n_points(), params.d)?,
    };
    Ok(BoundReport::new(s.mean, s.stderr, rhs))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaScanRow {
    pub theta: f64,
    pub p_theta: f64,
    pub closed_form: f64,
    pub mean: f64,
    pub stderr: f64,
}

/// `steps + 1` equally spaced angles on `[0, pi/2]`.
pub fn uniform_theta_grid(steps: usize) -> Vec<f64> {
    (0..=steps)
        .map(|k| if k == steps { FRAC_PI_2 } else { FRAC_PI_2 * k as f64 / steps as f64 })
        .collect()
}

/// Closed form and empirical `E L_2^2` for each angle. All angles share the
/// master seed, so the uncut cells see the same draws in every row.
pub fn theta_scan(m: usize, d: usize, thetas: &[f64], replications: usize, seed: u64) -> Result<Vec<ThetaScanRow>> {
    thetas
        .iter()
        .map(|&theta| {
            let config = ExperimentConfig {
                scheme: Scheme::Theta,
                m,
                d,
                theta,
                replications,
                seed,
                ..ExperimentConfig::default()
            };
            let s = Summary::of(&replicate(&config)?);
            Ok(ThetaScanRow {
                theta,
                p_theta: theory::p_theta(theta)?,
                closed_form: theory::expected_l2_theta(m, d, theta)?,
                mean: s.mean,
                stderr: s.stderr,
            })
        })
        .collect()
}

pub fn write_theta_scan_csv<W: std::io::Write>(rows: &[ThetaScanRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Row with the smallest empirical mean.
pub fn empirical_argmin(rows: &[ThetaScanRow]) -> Option<&ThetaScanRow> {
    rows.iter().min_by(|a, b| a.mean.total_cmp(&b.mean))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub m: usize,
    pub d: usize,
    pub theta: f64,
    pub samples: usize,
    pub max_grid: usize,
    pub max_theta: usize,
    pub bound_grid: f64,
    pub bound_theta: f64,
    /// Largest `|count_theta - count_grid|` over the sampled anchors.
    pub max_pointwise_diff: usize,
    pub passed: bool,
}

/// Boundary-region counts of the grid and cut partitions at uniform anchors.
pub fn verify_boundary(m: usize, d: usize, theta: f64, samples: usize, seed: u64) -> Result<BoundaryReport> {
    use rand::Rng;

    let grid = Partition::grid(m, d)?;
    let cut = Partition::theta(m, d, theta)?;
    let mut rng = SeedSpec::new(seed).stream(StreamDomain::ZSamples, 0, 1);
    let mut z = vec![0.0; d];
    let (mut max_grid, mut max_theta, mut max_diff) = (0, 0, 0);
    for _ in 0..samples {
        z.iter_mut().for_each(|zj| *zj = rng.random::<f64>());
        let g = boundary_cell_count(&grid, &z);
        let t = boundary_cell_count(&cut, &z);
        max_grid = max_grid.max(g);
        max_theta = max_theta.max(t);
        max_diff = max_diff.max(g.abs_diff(t));
    }
    let n = grid.len();
    let bound_grid = theory::boundary_bound(n, d, false);
    let bound_theta = theory::boundary_bound(n, d, true);
    Ok(BoundaryReport {
        m,
        d,
        theta,
        samples,
        max_grid,
        max_theta,
        bound_grid,
        bound_theta,
        max_pointwise_diff: max_diff,
        passed: max_grid as f64 <= bound_grid + 1e-9 && max_theta as f64 <= bound_theta + 1e-9 && max_diff <= 1,
    })
}

/// Two-sample z statistic between two reports.
pub fn compare_reports(a: &ExperimentReport, b: &ExperimentReport) -> f64 {
    two_sample_z(&a.summary(), &b.summary())
}

/// Installs a global thread pool sized by `DISCREP_THREADS`, if set.
pub fn configure_threads_from_env() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        // a pool may already exist (e.g. in tests); keep it
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    Ok(())
}
