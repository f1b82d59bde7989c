//! Stratified sampling on the unit cube with importance weights.
//!
//! The crate builds equivolume partitions of `[0,1]^d` (the `m^d` jittered
//! grid and a variant where the two top-right cells are merged and re-cut by
//! a line at angle `theta`), draws one uniform point per region, and measures
//! the resulting point sets with weighted and unweighted discrepancies.
//! The [`theory`] module carries the closed-form expected-L2 formula and the
//! bound constants; [`experiments`] checks them empirically by replication.

pub mod cli;
pub mod density;
pub mod discrepancy;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod sampler;
pub mod stats;
pub mod theory;

pub use density::{CdfIntegrals, Poly1D, ProductDensity};
pub use discrepancy::{BoxMode, McEstimate, TargetMeasure, WeightedSample};
pub use error::{Error, Result};
pub use geometry::{AxisBox, CutRegion, CutSide, Interval, Partition, Region};
pub use sampler::{PointSet, Provenance, Scheme, SeedSpec};
