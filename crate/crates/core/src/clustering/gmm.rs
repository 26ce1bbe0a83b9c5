use super::kmeans::kmeans_fit;
use super::{check_k, FeatureMatrix};
use crate::error::Result;

const MAX_ITER: usize = 200;
const VAR_FLOOR: f64 = 1e-6;
const LL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct GmmFit {
    pub labels: Vec<usize>,
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    /// Log-likelihood after each EM iteration.
    pub log_likelihood: Vec<f64>,
}

/// Diagonal-covariance Gaussian mixture fitted by EM, started from k-means.
pub fn gmm_fit(features: &FeatureMatrix, k: usize, seed: u64) -> Result<GmmFit> {
    let t = features.len();
    check_k(t, k)?;
    let rows = features.rows();
    let dim = features.dim();
    let init = kmeans_fit(features, k, seed)?;

    // M-step from hard k-means responsibilities.
    let mut resp = vec![vec![0.0; k]; t];
    for (r, &l) in resp.iter_mut().zip(&init.labels) {
        r[l] = 1.0;
    }
    let mut weights = vec![0.0; k];
    let mut means = vec![vec![0.0; dim]; k];
    let mut variances = vec![vec![1.0; dim]; k];
    m_step(rows, &resp, &mut weights, &mut means, &mut variances);

    let mut log_likelihood = Vec::new();
    for _ in 0..MAX_ITER {
        let ll = e_step(rows, &weights, &means, &variances, &mut resp);
        let done = log_likelihood
            .last()
            .is_some_and(|&prev: &f64| (ll - prev).abs() <= LL_TOL * (1.0 + ll.abs()));
        log_likelihood.push(ll);
        if done {
            break;
        }
        m_step(rows, &resp, &mut weights, &mut means, &mut variances);
    }

    let labels = resp
        .iter()
        .map(|r| {
            let mut best = 0;
            for c in 1..k {
                if r[c] > r[best] {
                    best = c;
                }
            }
            best
        })
        .collect();
    Ok(GmmFit {
        labels,
        weights,
        means,
        variances,
        log_likelihood,
    })
}

/// Most responsible component of every period.
pub fn gmm_assign(features: &FeatureMatrix, k: usize, seed: u64) -> Result<Vec<usize>> {
    Ok(gmm_fit(features, k, seed)?.labels)
}

fn log_density(x: &[f64], mean: &[f64], var: &[f64]) -> f64 {
    let ln2pi = (2.0 * std::f64::consts::PI).ln();
    x.iter()
        .zip(mean)
        .zip(var)
        .map(|((x, m), v)| -0.5 * (ln2pi + v.ln() + (x - m) * (x - m) / v))
        .sum()
}

/// Responsibilities in place; returns the log-likelihood.
fn e_step(rows: &[Vec<f64>], weights: &[f64], means: &[Vec<f64>], vars: &[Vec<f64>], resp: &mut [Vec<f64>]) -> f64 {
    let mut ll = 0.0;
    for (x, r) in rows.iter().zip(resp.iter_mut()) {
        for c in 0..weights.len() {
            r[c] = if weights[c] > 0.0 {
                weights[c].ln() + log_density(x, &means[c], &vars[c])
            } else {
                f64::NEG_INFINITY
            };
        }
        let top = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = top + r.iter().map(|v| (v - top).exp()).sum::<f64>().ln();
        ll += lse;
        r.iter_mut().for_each(|v| *v = (*v - lse).exp());
    }
    ll
}

fn m_step(rows: &[Vec<f64>], resp: &[Vec<f64>], weights: &mut [f64], means: &mut [Vec<f64>], vars: &mut [Vec<f64>]) {
    let t = rows.len() as f64;
    let dim = means.first().map_or(0, |m| m.len());
    for c in 0..weights.len() {
        let nk: f64 = resp.iter().map(|r| r[c]).sum();
        weights[c] = nk / t;
        if nk <= 0.0 {
            continue;
        }
        for d in 0..dim {
            let m = resp.iter().zip(rows).map(|(r, x)| r[c] * x[d]).sum::<f64>() / nk;
            let v = resp.iter().zip(rows).map(|(r, x)| r[c] * (x[d] - m).powi(2)).sum::<f64>() / nk;
            means[c][d] = m;
            vars[c][d] = v.max(VAR_FLOOR);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn single_component() {
        let f = FeatureMatrix::from_series(&[1.0, 2.0, 4.0]).unwrap();
        assert_eq!(gmm_assign(&f, 1, 0).unwrap(), vec![0; 3]);
    }

    #[test]
    fn separated_blobs_and_monotone_likelihood() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let centers = [[-4.0, 0.0], [4.0, 1.0]];
        let noise = Normal::new(0.0, 0.5).unwrap();
        let mut rows = Vec::new();
        let mut truth = Vec::new();
        for i in 0..60 {
            let c = i % 2;
            rows.push(vec![centers[c][0] + noise.sample(&mut rng), centers[c][1] + noise.sample(&mut rng)]);
            truth.push(c);
        }
        let f = FeatureMatrix::new(rows.clone()).unwrap();
        let fit = gmm_fit(&f, 2, 1).unwrap();
        // Oracle: nearest generating mean.
        let oracle: Vec<usize> = rows
            .iter()
            .map(|r| {
                let d: Vec<f64> = centers.iter().map(|c| (r[0] - c[0]).powi(2) + (r[1] - c[1]).powi(2)).collect();
                usize::from(d[1] < d[0])
            })
            .collect();
        assert_eq!(oracle, truth);
        let same = fit.labels.iter().zip(&oracle).all(|(a, b)| a == b);
        let swapped = fit.labels.iter().zip(&oracle).all(|(a, b)| *a != *b);
        assert!(same || swapped);
        for w in fit.log_likelihood.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0), "{w:?}");
        }
        assert_eq!(fit, gmm_fit(&f, 2, 1).unwrap());
    }
}
