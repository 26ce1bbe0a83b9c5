//! Chronological partitions of the time axis.
//!
//! k-means and GMM produce unordered labels; [`chronologize`] turns them into a
//! contiguous partition. [`dp_segmentation`] finds the SSE-optimal contiguous
//! partition directly.

mod gmm;
mod kmeans;
mod segment;

pub use gmm::{gmm_assign, gmm_fit, GmmFit};
pub use kmeans::{kmeans_assign, kmeans_fit, KMeansFit};
pub use segment::{chronologize, dp_segmentation};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GepError, Result};
use crate::instance::GepInstance;
use crate::par::Execution;

/// Ordered, contiguous, non-empty clusters `[start, end)` covering `0..T`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(usize, usize)>", into = "Vec<(usize, usize)>")]
pub struct ChronoPartition {
    ranges: Vec<(usize, usize)>,
}

impl TryFrom<Vec<(usize, usize)>> for ChronoPartition {
    type Error = GepError;
    fn try_from(ranges: Vec<(usize, usize)>) -> Result<Self> {
        ChronoPartition::new(ranges)
    }
}

impl From<ChronoPartition> for Vec<(usize, usize)> {
    fn from(p: ChronoPartition) -> Self {
        p.ranges
    }
}

impl ChronoPartition {
    pub fn new(ranges: Vec<(usize, usize)>) -> Result<Self> {
        if ranges.is_empty() {
            return Err(GepError::InvalidArgument("partition has no clusters".into()));
        }
        let mut expect = 0;
        for (k, &(a, b)) in ranges.iter().enumerate() {
            if a != expect || b <= a {
                return Err(GepError::InvalidArgument(format!(
                    "cluster {k} = [{a}, {b}) breaks contiguity or is empty"
                )));
            }
            expect = b;
        }
        Ok(Self { ranges })
    }

    /// Partition of `0..t` cut before each (strictly increasing) breakpoint.
    pub fn from_breakpoints(t: usize, breaks: &[usize]) -> Result<Self> {
        let mut ranges = Vec::with_capacity(breaks.len() + 1);
        let mut start = 0;
        for &b in breaks.iter().chain(std::iter::once(&t)) {
            ranges.push((start, b));
            start = b;
        }
        Self::new(ranges)
    }

    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        let mut start = 0;
        let ranges = sizes
            .iter()
            .map(|&s| {
                let r = (start, start + s);
                start += s;
                r
            })
            .collect();
        Self::new(ranges)
    }

    pub fn singletons(t: usize) -> Self {
        Self {
            ranges: (0..t).map(|i| (i, i + 1)).collect(),
        }
    }

    pub fn num_clusters(&self) -> usize {
        self.ranges.len()
    }

    pub fn num_periods(&self) -> usize {
        self.ranges.last().map_or(0, |r| r.1)
    }

    pub fn ranges(&self) -> &[(usize, usize)] {
        &self.ranges
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.ranges.iter().map(|(a, b)| b - a).collect()
    }

    pub fn breakpoints(&self) -> Vec<usize> {
        self.ranges[1..].iter().map(|r| r.0).collect()
    }

    /// Cluster index of every period.
    pub fn labels(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.num_periods());
        for (k, &(a, b)) in self.ranges.iter().enumerate() {
            out.extend(std::iter::repeat(k).take(b - a));
        }
        out
    }

    pub(crate) fn check_len(&self, t: usize) -> Result<()> {
        if self.num_periods() == t {
            Ok(())
        } else {
            Err(GepError::Dimension(format!(
                "partition covers {} periods, instance has {t}",
                self.num_periods()
            )))
        }
    }
}

/// Per-period feature rows `(D_t, F_t, Z_ref_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(GepError::InvalidArgument("feature matrix has no rows".into()));
        }
        let d = rows[0].len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(GepError::Dimension("feature rows differ in length".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(GepError::InvalidArgument("feature matrix has non-finite entries".into()));
        }
        Ok(Self { rows })
    }

    /// Scalar feature per period.
    pub fn from_series(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| vec![v]).collect())
    }

    pub fn from_instance(inst: &GepInstance, standardize: bool) -> Self {
        let rows = (0..inst.t())
            .map(|t| {
                let mut r = vec![inst.demand[t]];
                r.extend_from_slice(&inst.cap_factor[t]);
                r.extend_from_slice(&inst.z_ref[t]);
                r
            })
            .collect();
        let m = Self { rows };
        if standardize {
            m.standardized()
        } else {
            m
        }
    }

    /// Z-score every column; constant columns become zero.
    pub fn standardized(&self) -> Self {
        let n = self.rows.len() as f64;
        let d = self.dim();
        let mut rows = self.rows.clone();
        for c in 0..d {
            let mean = self.rows.iter().map(|r| r[c]).sum::<f64>() / n;
            let var = self.rows.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            for r in rows.iter_mut() {
                r[c] = if sd > 1e-12 * (1.0 + mean.abs()) { (r[c] - mean) / sd } else { 0.0 };
            }
        }
        Self { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, |r| r.len())
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.rows[t]
    }

    /// Within-segment sum of squared errors, computed directly.
    pub fn sse(&self, partition: &ChronoPartition) -> f64 {
        partition
            .ranges()
            .iter()
            .map(|&(a, b)| {
                let seg = &self.rows[a..b];
                let n = seg.len() as f64;
                (0..self.dim())
                    .map(|c| {
                        let mean = seg.iter().map(|r| r[c]).sum::<f64>() / n;
                        seg.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>()
                    })
                    .sum::<f64>()
            })
            .sum()
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_k(t: usize, k: usize) -> Result<()> {
    if k == 0 || k > t {
        Err(GepError::InvalidArgument(format!("cluster count {k} must lie in 1..={t}")))
    } else {
        Ok(())
    }
}

/// Random chronological partition: `K − 1` distinct breakpoints drawn uniformly
/// from `1..T`.
pub fn sequential_partition(t: usize, k: usize, seed: u64) -> Result<ChronoPartition> {
    check_k(t, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut breaks: Vec<usize> = sample(&mut rng, t - 1, k - 1).into_iter().map(|b| b + 1).collect();
    breaks.sort_unstable();
    ChronoPartition::from_breakpoints(t, &breaks)
}

/// Near-equal blocks; the first `T mod K` blocks get one extra period.
pub fn uniform_partition(t: usize, k: usize) -> Result<ChronoPartition> {
    check_k(t, k)?;
    let (q, r) = (t / k, t % k);
    let sizes: Vec<usize> = (0..k).map(|i| q + usize::from(i < r)).collect();
    ChronoPartition::from_sizes(&sizes)
}

/// Clustering technique used by the bounds loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Technique {
    Sequential,
    Uniform,
    KMeans,
    Gmm,
    Dp,
}

impl std::str::FromStr for Technique {
    type Err = GepError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sequential" => Ok(Technique::Sequential),
            "uniform" => Ok(Technique::Uniform),
            "kmeans" | "k-means" => Ok(Technique::KMeans),
            "gmm" => Ok(Technique::Gmm),
            "dp" => Ok(Technique::Dp),
            other => Err(GepError::InvalidArgument(format!("unknown clustering technique {other:?}"))),
        }
    }
}

impl std::fmt::Display for Technique {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Technique::Sequential => "sequential",
            Technique::Uniform => "uniform",
            Technique::KMeans => "kmeans",
            Technique::Gmm => "gmm",
            Technique::Dp => "dp",
        })
    }
}

impl Technique {
    /// Chronological partition with `k` clusters. Label-based techniques are
    /// passed through [`chronologize`].
    pub fn partition(self, features: &FeatureMatrix, k: usize, seed: u64, exec: Execution) -> Result<ChronoPartition> {
        let t = features.len();
        match self {
            Technique::Sequential => sequential_partition(t, k, seed),
            Technique::Uniform => uniform_partition(t, k),
            Technique::KMeans => chronologize(&kmeans_assign(features, k, seed)?, features, k, exec),
            Technique::Gmm => chronologize(&gmm_assign(features, k, seed)?, features, k, exec),
            Technique::Dp => dp_segmentation(features, k, exec),
        }
    }
}
