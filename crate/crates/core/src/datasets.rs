//! Two-class synthetic generators and the bundled IRIS table.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Dataset;

const IRIS_CSV: &str = include_str!("../data/iris.csv");

/// Subsample seed for the 128-point binary IRIS set.
pub const IRIS_SUBSAMPLE_SEED: u64 = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Blobs,
    Moons,
    Circles,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Blobs => "blobs",
            Kind::Moons => "moons",
            Kind::Circles => "circles",
        })
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blobs" => Ok(Kind::Blobs),
            "moons" => Ok(Kind::Moons),
            "circles" => Ok(Kind::Circles),
            other => Err(Error::InvalidArgument(format!(
                "unknown generator '{other}' (blobs|moons|circles)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub kind: Kind,
    pub n: usize,
    /// Gaussian jitter (blobs: cluster standard deviation).
    pub noise: f64,
    pub seed: u64,
    /// Inner-to-outer radius ratio for circles.
    #[serde(default = "default_factor")]
    pub factor: f64,
}

fn default_factor() -> f64 {
    0.5
}

impl GeneratorSpec {
    pub fn new(kind: Kind, n: usize, noise: f64, seed: u64) -> Self {
        Self {
            kind,
            n,
            noise,
            seed,
            factor: default_factor(),
        }
    }

    pub fn generate(&self) -> Result<Dataset> {
        match self.kind {
            Kind::Blobs => blobs(self.n, self.noise, self.seed),
            Kind::Moons => moons(self.n, self.noise, self.seed),
            Kind::Circles => circles(self.n, self.noise, self.factor, self.seed),
        }
    }
}

fn check(n: usize, noise: f64) -> Result<()> {
    if n < 4 {
        return Err(Error::InvalidArgument(format!("need at least 4 points, got {n}")));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise must be nonnegative, got {noise}"
        )));
    }
    Ok(())
}

/// Splits `n` into the first class (the larger half) and the second.
fn halves(n: usize) -> (usize, usize) {
    (n - n / 2, n / 2)
}

/// Adds jitter and shuffles the row order.
fn finish(name: &str, rows: Vec<[f64; 2]>, labels: Vec<i64>, noise: f64, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = Normal::new(0.0, noise).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let n = rows.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut points = DMatrix::zeros(n, 2);
    for (i, &src) in order.iter().enumerate() {
        for c in 0..2 {
            points[(i, c)] = rows[src][c] + if noise > 0.0 { jitter.sample(&mut rng) } else { 0.0 };
        }
    }
    let labels = order.iter().map(|&src| labels[src]).collect();
    Dataset::new(name, points, Some(labels))
}

/// Two isotropic Gaussians centred at `(±2, 0)` with standard deviation `noise`.
pub fn blobs(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    check(n, noise)?;
    let (a, _) = halves(n);
    let rows = (0..n).map(|i| if i < a { [-2.0, 0.0] } else { [2.0, 0.0] }).collect();
    let labels = (0..n).map(|i| i64::from(i >= a)).collect::<Vec<_>>();
    finish("blobs", rows, labels, noise, seed)
}

/// Upper arc `(cos t, sin t)` and lower arc `(1 - cos t, 0.5 - sin t)`, `t ∈ [0, π]`.
pub fn moons(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    check(n, noise)?;
    let (a, b) = halves(n);
    let arc = |k: usize, m: usize| if m > 1 { PI * k as f64 / (m - 1) as f64 } else { 0.0 };
    let mut rows = Vec::with_capacity(n);
    rows.extend((0..a).map(|k| {
        let t = arc(k, a);
        [t.cos(), t.sin()]
    }));
    rows.extend((0..b).map(|k| {
        let t = arc(k, b);
        [1.0 - t.cos(), 0.5 - t.sin()]
    }));
    let labels = (0..n).map(|i| i64::from(i >= a)).collect();
    finish("moons", rows, labels, noise, seed)
}

/// Outer unit ring (label 0) and an inner ring of radius `factor` (label 1).
pub fn circles(n: usize, noise: f64, factor: f64, seed: u64) -> Result<Dataset> {
    check(n, noise)?;
    if !(factor > 0.0 && factor < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "factor must lie in (0, 1), got {factor}"
        )));
    }
    let (a, b) = halves(n);
    let ring = |k: usize, m: usize, r: f64| {
        let t = 2.0 * PI * k as f64 / m as f64;
        [r * t.cos(), r * t.sin()]
    };
    let mut rows: Vec<[f64; 2]> = (0..a).map(|k| ring(k, a, 1.0)).collect();
    rows.extend((0..b).map(|k| ring(k, b, factor)));
    let labels = (0..n).map(|i| i64::from(i >= a)).collect();
    finish("circles", rows, labels, noise, seed)
}

/// All 150 IRIS rows with the original three species labels.
pub fn iris() -> Dataset {
    Dataset::from_csv_reader("iris", IRIS_CSV.as_bytes()).expect("bundled IRIS table parses")
}

/// IRIS regrouped as setosa (0) against the other two species (1).
pub fn iris_binary() -> Dataset {
    let mut ds = iris();
    ds.name = "iris-binary".into();
    ds.labels = ds.labels.map(|l| l.into_iter().map(|v| i64::from(v != 0)).collect());
    ds
}

/// The 128-point binary IRIS subsample used for clustering runs.
pub fn iris_128() -> Dataset {
    iris_binary()
        .subsample(128, IRIS_SUBSAMPLE_SEED)
        .expect("150 rows hold 128")
}
