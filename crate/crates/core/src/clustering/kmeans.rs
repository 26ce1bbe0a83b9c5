use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_k, sq_dist, FeatureMatrix};
use crate::error::Result;

const MAX_ITER: usize = 100;
const TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub sse: f64,
    pub iterations: usize,
}

/// Index of the nearest centroid; ties go to the lower index.
pub(crate) fn nearest(x: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centroids.iter().enumerate() {
        let d = sq_dist(x, c);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

/// k-means++ seeding followed by Lloyd iterations.
pub fn kmeans_fit(features: &FeatureMatrix, k: usize, seed: u64) -> Result<KMeansFit> {
    let t = features.len();
    check_k(t, k)?;
    let rows = features.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut centroids = vec![rows[rng.gen_range(0..t)].clone()];
    let mut d2: Vec<f64> = rows.iter().map(|r| sq_dist(r, &centroids[0])).collect();
    while centroids.len() < k {
        let next = match WeightedIndex::new(&d2) {
            Ok(w) => w.sample(&mut rng),
            // All points coincide with a centroid: take any unused one.
            Err(_) => rng.gen_range(0..t),
        };
        centroids.push(rows[next].clone());
        for (d, r) in d2.iter_mut().zip(rows) {
            *d = d.min(sq_dist(r, &centroids[centroids.len() - 1]));
        }
    }

    let dim = features.dim();
    let mut labels = vec![0; t];
    let mut iterations = 0;
    for it in 0..MAX_ITER {
        iterations = it + 1;
        for (l, r) in labels.iter_mut().zip(rows) {
            *l = nearest(r, &centroids).0;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (l, r) in labels.iter().zip(rows) {
            counts[*l] += 1;
            for (s, v) in sums[*l].iter_mut().zip(r) {
                *s += v;
            }
        }
        let mut shift: f64 = 0.0;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            let new: Vec<f64> = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            shift = shift.max(sq_dist(&new, &centroids[c]).sqrt());
            centroids[c] = new;
        }
        if shift <= TOL {
            break;
        }
    }
    for (l, r) in labels.iter_mut().zip(rows) {
        *l = nearest(r, &centroids).0;
    }
    let sse = labels.iter().zip(rows).map(|(&l, r)| sq_dist(r, &centroids[l])).sum();
    Ok(KMeansFit {
        labels,
        centroids,
        sse,
        iterations,
    })
}

/// Cluster label of every period (labels need not be chronological).
pub fn kmeans_assign(features: &FeatureMatrix, k: usize, seed: u64) -> Result<Vec<usize>> {
    Ok(kmeans_fit(features, k, seed)?.labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labeling_sse(x: &[f64], labels: &[usize], k: usize) -> f64 {
        (0..k)
            .map(|c| {
                let pts: Vec<f64> = x.iter().zip(labels).filter(|(_, &l)| l == c).map(|(v, _)| *v).collect();
                if pts.is_empty() {
                    return 0.0;
                }
                let m = pts.iter().sum::<f64>() / pts.len() as f64;
                pts.iter().map(|v| (v - m).powi(2)).sum::<f64>()
            })
            .sum()
    }

    #[test]
    fn single_cluster() {
        let f = FeatureMatrix::from_series(&[1.0, 5.0, 2.0]).unwrap();
        assert_eq!(kmeans_assign(&f, 1, 4).unwrap(), vec![0, 0, 0]);
    }

    #[test]
    fn separated_blocks_reach_brute_force_optimum() {
        let x = [0.0, 0.0, 0.0, 10.0, 10.0, 10.0];
        let f = FeatureMatrix::from_series(&x).unwrap();
        let labels = kmeans_assign(&f, 2, 11).unwrap();
        assert!(labels[..3].iter().all(|&l| l == labels[0]));
        assert!(labels[3..].iter().all(|&l| l == labels[3]));
        let best = (0u32..64)
            .map(|m| {
                let l: Vec<usize> = (0..6).map(|i| (m >> i & 1) as usize).collect();
                labeling_sse(&x, &l, 2)
            })
            .fold(f64::INFINITY, f64::min);
        assert!((labeling_sse(&x, &labels, 2) - best).abs() < 1e-12);
    }

    #[test]
    fn deterministic_per_seed() {
        let x: Vec<f64> = (0..50).map(|i| ((i * 7919) % 101) as f64).collect();
        let f = FeatureMatrix::from_series(&x).unwrap();
        assert_eq!(kmeans_fit(&f, 4, 3).unwrap(), kmeans_fit(&f, 4, 3).unwrap());
        assert!(kmeans_assign(&f, 51, 0).is_err());
    }
}
