use serde::Serialize;

use crate::error::{Error, Result};

/// A scalar estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
    pub n: usize,
}

impl Estimate {
    /// Sample mean with standard error `s / √n`.
    pub fn mean(values: &[f64]) -> Result<Estimate> {
        let est = empirical_cov(&rows_of(values))?;
        let n = values.len();
        Ok(Estimate {
            value: est.means[0],
            se: (est.cov[0] / n as f64).sqrt(),
            n,
        })
    }

    /// Unbiased sample variance with jackknife standard error.
    pub fn variance(values: &[f64]) -> Result<Estimate> {
        let est = empirical_cov(&rows_of(values))?;
        Ok(Estimate {
            value: est.cov[0],
            se: est.se[0],
            n: values.len(),
        })
    }

    pub fn z_against(&self, target: f64) -> f64 {
        (self.value - target) / self.se
    }
}

fn rows_of(values: &[f64]) -> Vec<Vec<f64>> {
    values.iter().map(|&v| vec![v]).collect()
}

/// Covariance matrix of replicate rows with jackknife standard errors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CovarianceEstimate {
    pub dim: usize,
    pub replicates: usize,
    pub means: Vec<f64>,
    /// Row-major unbiased covariance.
    pub cov: Vec<f64>,
    /// Row-major jackknife standard errors; infinite with only two replicates.
    pub se: Vec<f64>,
}

impl CovarianceEstimate {
    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.cov[i * self.dim + j]
    }

    pub fn se(&self, i: usize, j: usize) -> f64 {
        self.se[i * self.dim + j]
    }

    pub fn corr(&self, i: usize, j: usize) -> f64 {
        self.cov(i, j) / (self.cov(i, i) * self.cov(j, j)).sqrt()
    }
}

/// Unbiased covariance of `samples[replicate][dimension]`.
///
/// Leave-one-out covariances follow from the full centred cross products
/// by a rank-one downdate, so the jackknife costs `O(n d²)`.
pub fn empirical_cov(samples: &[Vec<f64>]) -> Result<CovarianceEstimate> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::TooFewSamples { required: 2, got: n });
    }
    let dim = samples[0].len();
    if dim == 0 {
        return Err(Error::Degenerate("replicates have no coordinates".into()));
    }
    if samples.iter().any(|r| r.len() != dim) {
        return Err(Error::Degenerate("replicates have differing dimensions".into()));
    }
    if samples.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite value in sample".into()));
    }
    let nf = n as f64;
    let mut means = vec![0.0; dim];
    for row in samples {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= nf;
    }
    let mut cross = vec![0.0; dim * dim];
    for row in samples {
        for a in 0..dim {
            let da = row[a] - means[a];
            for b in a..dim {
                cross[a * dim + b] += da * (row[b] - means[b]);
            }
        }
    }
    for a in 0..dim {
        for b in 0..a {
            cross[a * dim + b] = cross[b * dim + a];
        }
    }
    let cov: Vec<f64> = cross.iter().map(|c| c / (nf - 1.0)).collect();

    let se = if n < 3 {
        vec![f64::INFINITY; dim * dim]
    } else {
        // θ_(i) = (S - n/(n-1) d_i d_iᵀ) / (n - 2)
        let shrink = nf / (nf - 1.0);
        let mut sum = vec![0.0; dim * dim];
        let mut sum_sq = vec![0.0; dim * dim];
        for row in samples {
            for a in 0..dim {
                let da = row[a] - means[a];
                for b in a..dim {
                    let theta = (cross[a * dim + b] - shrink * da * (row[b] - means[b])) / (nf - 2.0);
                    sum[a * dim + b] += theta;
                    sum_sq[a * dim + b] += theta * theta;
                }
            }
        }
        let mut se = vec![0.0; dim * dim];
        for a in 0..dim {
            for b in a..dim {
                let mean = sum[a * dim + b] / nf;
                let spread = (sum_sq[a * dim + b] / nf - mean * mean).max(0.0);
                let v = ((nf - 1.0) * spread).sqrt();
                se[a * dim + b] = v;
                se[b * dim + a] = v;
            }
        }
        se
    };

    Ok(CovarianceEstimate {
        dim,
        replicates: n,
        means,
        cov,
        se,
    })
}
