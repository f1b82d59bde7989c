//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage or configuration errors, 2 when a
//! verification runs but fails its threshold.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::density::ProductDensity;
use crate::discrepancy::{l2_exact, lp_mc, star_exact, BoxMode, TargetMeasure, WeightedSample};
use crate::error::{Error, Result};
use crate::experiments::{
    configure_threads_from_env, estimate_expected_lp, theta_scan, uniform_theta_grid, verify_boundary, verify_bound,
    verify_lemma32, write_theta_scan_csv, BoundId, BoundParams, ExperimentConfig, WeightScheme,
};
use crate::geometry::Partition;
use crate::sampler::{sample_srs, sample_stratified, PointSet, Scheme, SeedSpec};
use crate::theory;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILED: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "discrep", version, about = "Stratified sampling and weighted discrepancy toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw one point set and write it as CSV.
    Sample {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Replication index of the draw.
        #[arg(long, default_value_t = 0)]
        rep: u64,
    },
    /// Discrepancies of a point set read from CSV.
    Discrepancy {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Check a closed form or bound against replicated draws.
    Verify {
        #[arg(value_enum)]
        what: VerifyKind,
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Number of random anchors for `boundary`.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Empirical and closed-form expected L2 discrepancy over a grid of angles.
    ThetaScan {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Number of equal steps on [0, pi/2].
        #[arg(long, default_value_t = 8)]
        steps: usize,
        /// Explicit comma-separated angles (overrides --steps).
        #[arg(long, value_delimiter = ',')]
        thetas: Option<Vec<f64>>,
    },
    /// Evaluate P(theta), or locate its minimizer.
    Ptheta {
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        resolution: usize,
    },
    /// Estimate the expected L_p^p discrepancy for a configuration.
    Estimate {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum VerifyKind {
    Lemma32,
    Corollary33,
    Theorem34,
    Theorem35,
    Boundary,
}

#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// Key-value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    /// Point count for `srs` (default m^d).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    theta: Option<f64>,
    /// `lebesgue` or `density`.
    #[arg(long)]
    target: Option<String>,
    /// `uniform` or `importance`.
    #[arg(long)]
    weights: Option<String>,
    /// Density as coefficient lists, e.g. `[[1.0,0.5],[1.0,0.5]]`.
    #[arg(long)]
    u: Option<String>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, alias = "replications")]
    reps: Option<usize>,
    #[arg(long = "mc-samples")]
    mc_samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Pass/fail threshold in standard errors.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

impl ConfigArgs {
    fn build(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_kv_str(&fs::read_to_string(path)?)?,
            None => ExperimentConfig::default(),
        };
        let pairs: [(&str, Option<String>); 11] = [
            ("scheme", self.scheme.clone()),
            ("m", self.m.map(|v| v.to_string())),
            ("d", self.d.map(|v| v.to_string())),
            ("n", self.n.map(|v| v.to_string())),
            ("theta", self.theta.map(|v| v.to_string())),
            ("p", self.p.map(|v| v.to_string())),
            ("replications", self.reps.map(|v| v.to_string())),
            ("mc_z_samples", self.mc_samples.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("z_threshold", self.threshold.map(|v| v.to_string())),
            ("output", self.output.as_ref().map(|v| v.display().to_string())),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
        }
        let density = self
            .u
            .as_deref()
            .map(|s| {
                serde_json::from_str::<Vec<Vec<f64>>>(s)
                    .map_err(|e| Error::Config(format!("bad density {s:?}: {e}")))
                    .and_then(ProductDensity::from_coefficients)
            })
            .transpose()?;
        cfg.set_measures(self.target.as_deref(), self.weights.as_deref(), density)?;
        Ok(cfg)
    }
}

/// Parses `argv` (including the program name) and runs the subcommand,
/// writing results to `out` and diagnostics to `err`.
pub fn run_cli<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = write!(err, "{}", e.render());
            return code;
        }
    };
    if let Err(e) = configure_threads_from_env() {
        let _ = writeln!(err, "error: {e}");
        return EXIT_USAGE;
    }
    match dispatch(cli.command, out, err) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_FAILED,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            let _ = writeln!(err, "run `discrep --help` for usage");
            EXIT_USAGE
        }
    }
}

/// Writes either to the configured output file or to `out`.
fn emit(cfg: &ExperimentConfig, out: &mut dyn Write, body: &[u8]) -> Result<()> {
    match &cfg.output {
        Some(path) => fs::write(path, body)?,
        None => out.write_all(body)?,
    }
    Ok(())
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<bool> {
    match cmd {
        Command::Sample { cfg, rep } => {
            let cfg = cfg.build()?;
            let seed = SeedSpec::new(cfg.seed);
            let points = match cfg.scheme {
                Scheme::Srs => sample_srs(cfg.n_points(), cfg.d, seed, rep)?,
                Scheme::Grid => sample_stratified(&Partition::grid(cfg.m, cfg.d)?, seed, rep)?,
                Scheme::Theta => sample_stratified(&Partition::theta(cfg.m, cfg.d, cfg.theta)?, seed, rep)?,
                Scheme::External => return Err(Error::Config("cannot sample the external scheme".into())),
            };
            let mut buf = Vec::new();
            points.write_csv(&mut buf)?;
            emit(&cfg, out, &buf)?;
            Ok(true)
        }
        Command::Discrepancy { input, cfg } => {
            let cfg = cfg.build()?;
            let points = PointSet::read_csv(fs::File::open(&input)?)?;
            let n = points.len();
            let d = points.d;
            let ws = match &cfg.weights {
                WeightScheme::Uniform => WeightedSample::uniform(points)?,
                WeightScheme::Importance(u) => u.weights(points)?,
            };
            let params = json!({ "n": n, "d": d, "target": cfg.target, "weights": cfg.weights });
            let mut records = vec![json!({
                "quantity": "l2_squared",
                "value": l2_exact(&ws, &cfg.target)?,
                "stderr": 0.0,
                "params": params,
            })];
            if d <= 2 {
                records.push(json!({
                    "quantity": "star",
                    "value": star_exact(&ws, &cfg.target)?,
                    "stderr": 0.0,
                    "params": params,
                }));
            }
            if cfg.p != 2.0 {
                let est = lp_mc(&ws, &cfg.target, cfg.p, cfg.mc_z_samples, SeedSpec::new(cfg.seed), BoxMode::Closed)?;
                records.push(json!({
                    "quantity": format!("lp_pow_p(p={})", cfg.p),
                    "value": est.estimate,
                    "stderr": est.stderr,
                    "params": json!({ "n": n, "d": d, "p": cfg.p, "mc_z_samples": cfg.mc_z_samples, "seed": cfg.seed }),
                }));
            }
            emit(&cfg, out, &json_bytes(&records)?)?;
            Ok(true)
        }
        Command::Verify { what, cfg, samples } => {
            let p_given = cfg.p.is_some();
            let cfg = cfg.build()?;
            match what {
                VerifyKind::Lemma32 => {
                    let mut report = verify_lemma32(cfg.m, cfg.d, cfg.theta, cfg.replications, cfg.seed)?;
                    let passed = report.z_score.map(|z| z.abs() < cfg.z_threshold).unwrap_or(false);
                    report.passed = Some(passed);
                    let _ = writeln!(err, "wall time: {:.3}s", report.wall_time.as_secs_f64());
                    emit(&cfg, out, &json_bytes(&report)?)?;
                    Ok(passed)
                }
                VerifyKind::Corollary33 | VerifyKind::Theorem34 | VerifyKind::Theorem35 => {
                    let bound = match what {
                        VerifyKind::Corollary33 => BoundId::Corollary33,
                        VerifyKind::Theorem34 => BoundId::Theorem34,
                        _ => BoundId::Theorem35,
                    };
                    let u = match (&cfg.weights, &cfg.target) {
                        (WeightScheme::Importance(u), _) | (_, TargetMeasure::Density(u)) => u.clone(),
                        _ => ProductDensity::uniform(cfg.d),
                    };
                    let p = if bound == BoundId::Theorem35 && !p_given { 4.0 } else { cfg.p };
                    let params = BoundParams {
                        m: cfg.m,
                        d: cfg.d,
                        theta: cfg.theta,
                        u: u.clone(),
                        p,
                        replications: cfg.replications,
                        mc_z_samples: cfg.mc_z_samples,
                        seed: cfg.seed,
                    };
                    let report = verify_bound(bound, &params)?;
                    let passed = report.passes(cfg.z_threshold);
                    let body = json!({
                        "bound": bound,
                        "lhs": report.lhs,
                        "lhs_stderr": report.lhs_stderr,
                        "rhs": report.rhs,
                        "slack": report.slack,
                        "passed": passed,
                        "params": {
                            "m": cfg.m, "d": cfg.d, "theta": cfg.theta, "u": u, "p": p,
                            "replications": cfg.replications, "seed": cfg.seed,
                        },
                    });
                    emit(&cfg, out, &json_bytes(&body)?)?;
                    Ok(passed)
                }
                VerifyKind::Boundary => {
                    let report = verify_boundary(cfg.m, cfg.d, cfg.theta, samples, cfg.seed)?;
                    emit(&cfg, out, &json_bytes(&report)?)?;
                    Ok(report.passed)
                }
            }
        }
        Command::ThetaScan { cfg, steps, thetas } => {
            let cfg = cfg.build()?;
            if steps == 0 {
                return Err(Error::Config("--steps must be positive".into()));
            }
            let grid = thetas.unwrap_or_else(|| uniform_theta_grid(steps));
            let rows = theta_scan(cfg.m, cfg.d, &grid, cfg.replications, cfg.seed)?;
            let mut buf = Vec::new();
            write_theta_scan_csv(&rows, &mut buf)?;
            emit(&cfg, out, &buf)?;
            Ok(true)
        }
        Command::Ptheta { theta, resolution } => {
            let body = match theta {
                Some(t) => json!({ "theta": t, "p_theta": theory::p_theta(t)? }),
                None => {
                    let (t, v) = theory::theta_argmin(resolution)?;
                    json!({ "argmin_theta": t, "p_theta": v })
                }
            };
            out.write_all(&json_bytes(&body)?)?;
            Ok(true)
        }
        Command::Estimate { cfg } => {
            let cfg = cfg.build()?;
            let report = estimate_expected_lp(&cfg)?;
            let _ = writeln!(err, "wall time: {:.3}s", report.wall_time.as_secs_f64());
            emit(&cfg, out, &json_bytes(&report)?)?;
            Ok(report.passed.unwrap_or(true))
        }
    }
}
