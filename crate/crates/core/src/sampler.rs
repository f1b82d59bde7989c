//! Point-set generation: simple random samples and stratified samples with
//! one uniform point per partition region.
//!
//! Randomness is counter-based: every `(replication, region)` pair gets its
//! own ChaCha8 stream keyed by the master seed, so a draw never depends on
//! the order in which replications or regions are evaluated.

use std::fmt;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{AxisBox, Partition, Region};

/// Cap on rejection trials for a single cut-region draw.
pub const REJECTION_CAP: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Srs,
    Grid,
    Theta,
    External,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Scheme::Srs => "srs",
            Scheme::Grid => "grid",
            Scheme::Theta => "theta",
            Scheme::External => "external",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub scheme: Scheme,
    pub partition: Option<String>,
    pub seed: Option<u64>,
    pub replication: u64,
}

impl Provenance {
    pub fn external() -> Self {
        Provenance {
            scheme: Scheme::External,
            partition: None,
            seed: None,
            replication: 0,
        }
    }

    fn header(&self) -> String {
        let mut s = format!("# scheme={}", self.scheme);
        if let Some(p) = &self.partition {
            s.push_str(&format!(" partition={p}"));
        }
        if let Some(seed) = self.seed {
            s.push_str(&format!(" seed={seed} replication={}", self.replication));
        }
        s
    }
}

/// `N` points in `[0,1]^d`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    pub d: usize,
    coords: Vec<f64>,
    pub provenance: Provenance,
}

impl PointSet {
    pub fn new(d: usize, points: Vec<Vec<f64>>, provenance: Provenance) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * d);
        for p in points {
            if p.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: p.len() });
            }
            coords.extend(p);
        }
        Self::from_flat(d, coords, provenance)
    }

    pub fn from_flat(d: usize, coords: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if d == 0 {
            return Err(invalid("point dimension must be at least 1"));
        }
        if coords.len() % d != 0 {
            return Err(invalid("coordinate count is not a multiple of the dimension"));
        }
        if let Some(x) = coords.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(invalid(format!("coordinate {x} lies outside [0,1]")));
        }
        Ok(PointSet { d, coords, provenance })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.d)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.provenance.header())?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record((1..=self.d).map(|j| format!("x{j}")))?;
        for p in self.iter() {
            w.write_record(p.iter().map(|x| x.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a CSV with one header row; lines starting with `#` are ignored.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(input);
        let d = r.headers()?.len();
        let mut coords = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            if rec.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: rec.len() });
            }
            for field in rec.iter() {
                coords.push(field.parse::<f64>().map_err(|e| invalid(format!("bad coordinate {field:?}: {e}")))?);
            }
        }
        Self::from_flat(d, coords, Provenance::external())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum StreamDomain {
    Region,
    Srs,
    ZSamples,
}

impl StreamDomain {
    fn tag(self) -> u64 {
        match self {
            StreamDomain::Region => 0x5265_6769_6f6e_0001,
            StreamDomain::Srs => 0x5372_7353_616d_0002,
            StreamDomain::ZSamples => 0x5a53_616d_706c_0003,
        }
    }
}

/// Master seed from which every replication/region stream is derived.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master: u64,
}

impl SeedSpec {
    pub fn new(master: u64) -> Self {
        SeedSpec { master }
    }

    /// Independent stream for `(replication, index)`. The ChaCha key comes
    /// from the master seed and domain; the 64-bit stream id packs
    /// `replication` (high 32 bits) and `index` (low 32 bits), so distinct
    /// pairs never share a stream.
    pub(crate) fn stream(&self, domain: StreamDomain, replication: u64, index: u64) -> ChaCha8Rng {
        assert!(replication < 1 << 32 && index < 1 << 32, "stream indices must fit in 32 bits");
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(self.master ^ domain.tag()));
        rng.set_stream((replication << 32) | index);
        rng
    }

    pub fn region_stream(&self, replication: u64, region: u64) -> ChaCha8Rng {
        self.stream(StreamDomain::Region, replication, region)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// `n` i.i.d. uniform points in `[0,1]^d`.
pub fn sample_srs(n: usize, d: usize, seed: SeedSpec, replication: u64) -> Result<PointSet> {
    if n == 0 || d == 0 {
        return Err(invalid("simple random sampling needs n >= 1 and d >= 1"));
    }
    let mut rng = seed.stream(StreamDomain::Srs, replication, 0);
    let coords = (0..n * d).map(|_| rng.random::<f64>()).collect();
    PointSet::from_flat(
        d,
        coords,
        Provenance {
            scheme: Scheme::Srs,
            partition: None,
            seed: Some(seed.master),
            replication,
        },
    )
}

/// One uniform point per region, in region order.
pub fn sample_stratified(partition: &Partition, seed: SeedSpec, replication: u64) -> Result<PointSet> {
    let mut coords = Vec::with_capacity(partition.len() * partition.d);
    for (i, region) in partition.regions.iter().enumerate() {
        let mut rng = seed.region_stream(replication, i as u64);
        coords.extend(sample_region_uniform(region, &mut rng)?);
    }
    let scheme = if partition.theta.is_some() { Scheme::Theta } else { Scheme::Grid };
    PointSet::from_flat(
        partition.d,
        coords,
        Provenance {
            scheme,
            partition: Some(partition.id()),
            seed: Some(seed.master),
            replication,
        },
    )
}

pub fn sample_region_uniform<R: Rng + ?Sized>(region: &Region, rng: &mut R) -> Result<Vec<f64>> {
    sample_region_uniform_counted(region, rng).map(|(p, _)| p)
}

/// Like [`sample_region_uniform`], also returning the number of trials used
/// (always 1 for boxes).
pub fn sample_region_uniform_counted<R: Rng + ?Sized>(region: &Region, rng: &mut R) -> Result<(Vec<f64>, usize)> {
    match region {
        Region::Box(b) => Ok((uniform_in_box(b, rng), 1)),
        Region::Cut(c) => {
            for trial in 1..=REJECTION_CAP {
                let p = uniform_in_box(&c.base, rng);
                if c.on_side(p[0], p[1]) {
                    return Ok((p, trial));
                }
            }
            Err(Error::RejectionLimit(REJECTION_CAP))
        }
    }
}

fn uniform_in_box<R: Rng + ?Sized>(b: &AxisBox, rng: &mut R) -> Vec<f64> {
    b.intervals
        .iter()
        .map(|iv| iv.lo + iv.width() * rng.random::<f64>())
        .collect()
}
