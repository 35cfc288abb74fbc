//! Monte-Carlo covariance estimation of field pairings.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{compensated_sum, LatticeFunction, TestFunction};
use crate::rng::SeededRng;
use crate::sampler::{Sampler, SamplerConfig, SamplerRegistry};

/// Smallest sample count accepted by [`estimate_covariance`].
pub const MIN_SAMPLES: usize = 100;

/// Mean of the product of two pairings, with its standard error
/// `sd(product) / sqrt(M)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceEstimate {
    pub mean_product: f64,
    pub samples: usize,
    pub standard_error: f64,
    pub labels: (String, String),
}

impl CovarianceEstimate {
    pub fn from_products(products: &[f64], labels: (String, String)) -> Result<Self> {
        let m = products.len();
        if m < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 samples, got {m}")));
        }
        let mean = compensated_sum(products.iter().copied()) / m as f64;
        let ss = compensated_sum(products.iter().map(|p| (p - mean) * (p - mean)));
        let sd = (ss / (m - 1) as f64).sqrt();
        Ok(Self { mean_product: mean, samples: m, standard_error: sd / (m as f64).sqrt(), labels })
    }

    /// `|estimate - target| / SE`; zero when both agree exactly.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = (self.mean_product - target).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.standard_error
        }
    }
}

/// Pairings of `M` draws against a fixed list of probes; row `m` comes from
/// stream `m` of the seed.
#[derive(Debug, Clone)]
pub struct PairingSamples {
    labels: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl PairingSamples {
    pub fn from_rows(labels: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.iter().any(|r| r.len() != labels.len()) {
            return Err(Error::InvalidArgument("row length does not match the probe count".into()));
        }
        Ok(Self { labels, rows })
    }

    /// Draws `m` fields and pairs each with every probe. Work is spread over
    /// the rayon pool; the result does not depend on the number of threads.
    pub fn draw(sampler: &dyn Sampler, seed: u64, probes: &[(String, LatticeFunction)], m: usize) -> Result<Self> {
        for (name, p) in probes {
            sampler.grid().same_as(p.grid())?;
            if sampler.modulo_constant() && !p.is_mean_zero() {
                return Err(Error::InvalidArgument(format!(
                    "probe `{name}` must be mean-zero for a field defined modulo constants"
                )));
            }
        }
        let sparse: Vec<Vec<(usize, f64)>> = probes.iter().map(|(_, p)| p.sparse()).collect();
        let dv = sampler.grid().cell_volume();
        let rows = (0..m)
            .into_par_iter()
            .map(|i| {
                let field = sampler.sample(SeededRng::new(seed, i as u64))?;
                let v = field.values();
                Ok(sparse.iter().map(|sp| dv * sp.iter().map(|&(j, w)| v[j] * w).sum::<f64>()).collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(Self { labels: probes.iter().map(|(n, _)| n.clone()).collect(), rows })
    }

    /// Same as [`draw`](Self::draw) with an arbitrary per-draw map from a key
    /// to probe values; used for point evaluations and coupled draws.
    pub fn draw_with<F>(labels: Vec<String>, seed: u64, m: usize, f: F) -> Result<Self>
    where
        F: Fn(SeededRng) -> Result<Vec<f64>> + Sync,
    {
        let rows = (0..m).into_par_iter().map(|i| f(SeededRng::new(seed, i as u64))).collect::<Result<Vec<_>>>()?;
        Self::from_rows(labels, rows)
    }

    pub fn samples(&self) -> usize {
        self.rows.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn covariance(&self, i: usize, j: usize) -> Result<CovarianceEstimate> {
        let products: Vec<f64> = self.rows.iter().map(|r| r[i] * r[j]).collect();
        CovarianceEstimate::from_products(&products, (self.labels[i].clone(), self.labels[j].clone()))
    }

    /// Covariance of the linear combinations `sum a_i X_i` and `sum b_i X_i`.
    pub fn combination_covariance(&self, a: &[(usize, f64)], b: &[(usize, f64)], labels: (String, String)) -> Result<CovarianceEstimate> {
        let products: Vec<f64> = self
            .rows
            .iter()
            .map(|r| {
                let x: f64 = a.iter().map(|&(i, w)| w * r[i]).sum();
                let y: f64 = b.iter().map(|&(i, w)| w * r[i]).sum();
                x * y
            })
            .collect();
        CovarianceEstimate::from_products(&products, labels)
    }

    /// Estimated covariance matrix of all probes.
    pub fn gram(&self) -> Result<DMatrix<f64>> {
        let p = self.labels.len();
        let mut g = DMatrix::zeros(p, p);
        for i in 0..p {
            for j in i..p {
                let c = self.covariance(i, j)?.mean_product;
                g[(i, j)] = c;
                g[(j, i)] = c;
            }
        }
        Ok(g)
    }

    /// Smallest eigenvalue of the estimated Gram matrix.
    pub fn min_gram_eigenvalue(&self) -> Result<f64> {
        let eig = SymmetricEigen::new(self.gram()?);
        Ok(eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min))
    }

    /// First `m` rows only.
    pub fn truncated(&self, m: usize) -> Self {
        Self { labels: self.labels.clone(), rows: self.rows[..m.min(self.rows.len())].to_vec() }
    }
}

/// `Cov[(h, phi1), (h, phi2)]` from `m` draws of the configured construction.
pub fn estimate_covariance(config: &SamplerConfig, phi1: &TestFunction, phi2: &TestFunction, m: usize) -> Result<CovarianceEstimate> {
    if m < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!("need at least {MIN_SAMPLES} samples, got {m}")));
    }
    let sampler = SamplerRegistry::with_builtins().build(config)?;
    let probes = vec![
        ("phi1".to_string(), phi1.as_function().clone()),
        ("phi2".to_string(), phi2.as_function().clone()),
    ];
    PairingSamples::draw(sampler.as_ref(), config.seed, &probes, m)?.covariance(0, 1)
}
