use super::{sq_dist, ChronoPartition, FeatureMatrix};
use crate::error::{GepError, Result};
use crate::par::{self, Execution};

/// Dense upper-triangular table `cost[a][b − a − 1]` of segment `[a, b)`.
struct CostTable {
    rows: Vec<Vec<f64>>,
}

impl CostTable {
    fn get(&self, a: usize, b: usize) -> f64 {
        self.rows[a][b - a - 1]
    }
}

/// Optimal contiguous `k`-segmentation for a segment cost table. Among equal
/// costs, earlier breakpoints win.
fn segment_dp(t: usize, k: usize, cost: &CostTable) -> Result<ChronoPartition> {
    // best[j][b]: cheapest split of [0, b) into j + 1 segments.
    let mut best = vec![vec![f64::INFINITY; t + 1]; k];
    let mut arg = vec![vec![0usize; t + 1]; k];
    for b in 1..=t {
        best[0][b] = cost.get(0, b);
    }
    for j in 1..k {
        for b in (j + 1)..=t {
            let mut v = f64::INFINITY;
            let mut at = j;
            for s in j..b {
                let c = best[j - 1][s] + cost.get(s, b);
                if c < v {
                    v = c;
                    at = s;
                }
            }
            best[j][b] = v;
            arg[j][b] = at;
        }
    }
    let mut breaks = Vec::with_capacity(k - 1);
    let mut b = t;
    for j in (1..k).rev() {
        b = arg[j][b];
        breaks.push(b);
    }
    breaks.reverse();
    ChronoPartition::from_breakpoints(t, &breaks)
}

fn check(features: &FeatureMatrix, k: usize) -> Result<()> {
    let t = features.len();
    if k == 0 || k > t {
        return Err(GepError::InvalidArgument(format!(
            "cannot form {k} segments from {t} periods"
        )));
    }
    Ok(())
}

/// Minimum within-segment SSE contiguous segmentation.
pub fn dp_segmentation(features: &FeatureMatrix, k: usize, exec: Execution) -> Result<ChronoPartition> {
    check(features, k)?;
    let t = features.len();
    let dim = features.dim();
    let mut s1 = vec![vec![0.0; dim]; t + 1];
    let mut s2 = vec![vec![0.0; dim]; t + 1];
    for (i, r) in features.rows().iter().enumerate() {
        for d in 0..dim {
            s1[i + 1][d] = s1[i][d] + r[d];
            s2[i + 1][d] = s2[i][d] + r[d] * r[d];
        }
    }
    let rows = par::map_range(exec, t, |a| {
        ((a + 1)..=t)
            .map(|b| {
                let n = (b - a) as f64;
                (0..dim)
                    .map(|d| {
                        let sum = s1[b][d] - s1[a][d];
                        (s2[b][d] - s2[a][d] - sum * sum / n).max(0.0)
                    })
                    .sum()
            })
            .collect()
    });
    segment_dp(t, k, &CostTable { rows })
}

/// Contiguous `k`-partition closest to a labelling: centroids are fixed from
/// the labels, and each segment pays its distance to the best single centroid.
pub fn chronologize(labels: &[usize], features: &FeatureMatrix, k: usize, exec: Execution) -> Result<ChronoPartition> {
    let t = features.len();
    if labels.len() != t {
        return Err(GepError::Dimension(format!(
            "{} labels for {t} periods",
            labels.len()
        )));
    }
    check(features, k)?;
    let dim = features.dim();
    let num_labels = labels.iter().max().map_or(0, |m| m + 1);
    let mut centroids = vec![vec![0.0; dim]; num_labels];
    let mut counts = vec![0usize; num_labels];
    for (r, &l) in features.rows().iter().zip(labels) {
        counts[l] += 1;
        for (c, v) in centroids[l].iter_mut().zip(r) {
            *c += v;
        }
    }
    let used: Vec<usize> = (0..num_labels).filter(|&l| counts[l] > 0).collect();
    for &l in &used {
        centroids[l].iter_mut().for_each(|c| *c /= counts[l] as f64);
    }
    // prefix[j][i]: distance of periods 0..i to centroid of label used[j].
    let prefix: Vec<Vec<f64>> = par::map(exec, &used, |&l| {
        let mut p = vec![0.0; t + 1];
        for (i, r) in features.rows().iter().enumerate() {
            p[i + 1] = p[i] + sq_dist(r, &centroids[l]);
        }
        p
    });
    let rows = par::map_range(exec, t, |a| {
        ((a + 1)..=t)
            .map(|b| prefix.iter().map(|p| p[b] - p[a]).fold(f64::INFINITY, f64::min))
            .collect()
    });
    segment_dp(t, k, &CostTable { rows })
}
