//! White noise convolved with `psi_eps(z) = |z|^{-d/2} 1{eps < |z| < 1/eps}`.

use crate::dft::Spectrum;
use crate::error::{Error, Result};
use crate::field::{Construction, FieldMeta, LatticeField};
use crate::grid::LatticeGrid;
use crate::rng::SeededRng;
use crate::sampler::{radial_kernel_spectrum, radial_kernel_values, Sampler};
use crate::testfn::unit_ball_volume;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvolutionConfig {
    pub grid: LatticeGrid,
    pub epsilon: f64,
}

/// Every cutoff uses the white noise spectrum of the key unchanged, so draws
/// with a common key are coupled: the field for a larger cutoff is the
/// partial integral over its annulus.
pub struct ConvolutionSampler {
    config: ConvolutionConfig,
    multiplier: Vec<f64>,
    density: Vec<f64>,
}

pub fn truncated_kernel(dimension: usize, epsilon: f64) -> impl Fn(f64) -> f64 {
    move |r| {
        if r > epsilon && r < 1.0 / epsilon {
            r.powf(-(dimension as f64) / 2.0)
        } else {
            0.0
        }
    }
}

impl ConvolutionSampler {
    pub fn new(config: ConvolutionConfig) -> Result<Self> {
        let grid = config.grid;
        if !(config.epsilon > 0.0 && config.epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!("epsilon = {} must lie in (0, 1)", config.epsilon)));
        }
        if 1.0 / config.epsilon > grid.box_length() / 4.0 {
            return Err(Error::SupportTooLarge(format!(
                "kernel radius {} exceeds a quarter of the box {}",
                1.0 / config.epsilon,
                grid.box_length()
            )));
        }
        let root_vol = grid.box_length().powf(grid.dimension() as f64 / 2.0);
        let multiplier: Vec<f64> = radial_kernel_spectrum(&grid, truncated_kernel(grid.dimension(), config.epsilon))
            .into_iter()
            .map(|c| c * root_vol)
            .collect();
        let density = multiplier.iter().map(|m| m * m).collect();
        Ok(Self { config, multiplier, density })
    }

    /// `dx^d sum psi_eps^2` over the lattice.
    pub fn lattice_variance(&self) -> f64 {
        let grid = self.config.grid;
        let psi = radial_kernel_values(&grid, truncated_kernel(grid.dimension(), self.config.epsilon));
        grid.cell_volume() * psi.iter().map(|v| v * v).sum::<f64>()
    }

    /// `int psi_eps^2 = d v_d 2 log(1/eps)`.
    pub fn continuum_variance(&self) -> f64 {
        let d = self.config.grid.dimension();
        d as f64 * unit_ball_volume(d) * 2.0 * (1.0 / self.config.epsilon).ln()
    }
}

impl Sampler for ConvolutionSampler {
    fn construction(&self) -> Construction {
        Construction::Conv
    }

    fn grid(&self) -> &LatticeGrid {
        &self.config.grid
    }

    fn modulo_constant(&self) -> bool {
        false
    }

    fn sample(&self, key: SeededRng) -> Result<LatticeField> {
        let mut spec = Spectrum::white_noise(&self.config.grid, key);
        for (c, m) in spec.coeffs_mut().iter_mut().zip(&self.multiplier) {
            *c *= *m;
        }
        let meta = FieldMeta {
            construction: Construction::Conv,
            seed: key.seed,
            stream: key.stream,
            exponent: None,
            config: self.describe(),
        };
        LatticeField::new(self.config.grid, spec.inverse_real(), false, meta)
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({ "epsilon": self.config.epsilon })
    }

    fn spectral_density(&self) -> Option<&[f64]> {
        Some(&self.density)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::stationary_site_variance;

    #[test]
    fn spectral_variance_equals_kernel_norm() {
        let grid = LatticeGrid::new(1, 2048, 64.0).unwrap();
        let smp = ConvolutionSampler::new(ConvolutionConfig { grid, epsilon: (-2.0f64).exp() }).unwrap();
        let v = stationary_site_variance(&grid, smp.spectral_density().unwrap());
        assert!((v - smp.lattice_variance()).abs() < 1e-9 * v);
        assert!((smp.lattice_variance() / smp.continuum_variance() - 1.0).abs() < 0.02);
    }

    #[test]
    fn nested_cutoffs_share_noise() {
        let grid = LatticeGrid::new(1, 512, 64.0).unwrap();
        let key = SeededRng::new(4, 4);
        let coarse = ConvolutionSampler::new(ConvolutionConfig { grid, epsilon: 0.5 }).unwrap().sample(key).unwrap();
        let fine = ConvolutionSampler::new(ConvolutionConfig { grid, epsilon: 0.25 }).unwrap().sample(key).unwrap();
        assert_ne!(coarse.values(), fine.values());
        let again = ConvolutionSampler::new(ConvolutionConfig { grid, epsilon: 0.5 }).unwrap().sample(key).unwrap();
        assert_eq!(coarse.values(), again.values());
    }
}
