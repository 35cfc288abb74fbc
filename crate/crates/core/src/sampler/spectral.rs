//! Fractional Gaussian fields by Fourier filtering of white noise.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::dft::Spectrum;
use crate::error::{Error, Result};
use crate::field::{Construction, FieldMeta, LatticeField};
use crate::grid::LatticeGrid;
use crate::rng::SeededRng;
use crate::sampler::white::sample_white_noise;
use crate::sampler::Sampler;

/// Order `s >= 0` of `h = (-Delta)^{-s/2} W`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralExponent {
    s: f64,
}

impl SpectralExponent {
    pub fn new(s: f64, dimension: usize) -> Result<Self> {
        if !s.is_finite() || s < 0.0 {
            return Err(Error::UnsupportedRange(format!("exponent s = {s} must be finite and >= 0")));
        }
        let _ = dimension;
        Ok(Self { s })
    }

    pub fn value(&self) -> f64 {
        self.s
    }
}

/// Overall scale of the symbol `|k|^{-s}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolNormalization {
    /// Symbol exactly `|k|^{-s}`.
    #[default]
    Unit,
    /// Symbol `|k|^{-s} / sqrt(c_d)` with `c_d` the constant for which
    /// `c_d |k|^{-d}` is the transform of `-log|x|`; at `s = d/2` the
    /// covariance is then `-log|x - y|` with unit coefficient in every dimension.
    LogKernel,
}

impl SymbolNormalization {
    /// Multiplier applied to `|k|^{-s}`.
    pub fn amplitude(&self, dimension: usize) -> f64 {
        match self {
            Self::Unit => 1.0,
            Self::LogKernel => log_kernel_constant(dimension).powf(-0.5),
        }
    }
}

/// `1 / (2^{d-1} pi^{d/2} Gamma(d/2))`.
pub fn log_kernel_constant(dimension: usize) -> f64 {
    let gamma_half_d = match dimension {
        1 => PI.sqrt(),
        2 => 1.0,
        3 => PI.sqrt() / 2.0,
        4 => 1.0,
        _ => unreachable!("dimension checked by the grid"),
    };
    1.0 / (2f64.powi(dimension as i32 - 1) * PI.powf(dimension as f64 / 2.0) * gamma_half_d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralSamplerConfig {
    pub grid: LatticeGrid,
    pub exponent: SpectralExponent,
    pub normalization: SymbolNormalization,
}

pub struct SpectralSampler {
    config: SpectralSamplerConfig,
    multiplier: Vec<f64>,
    density: Vec<f64>,
}

impl SpectralSampler {
    pub fn new(config: SpectralSamplerConfig) -> Result<Self> {
        let grid = config.grid;
        let s = config.exponent.value();
        let amp = config.normalization.amplitude(grid.dimension());
        let multiplier: Vec<f64> = (0..grid.site_count())
            .map(|flat| if flat == 0 { 0.0 } else { amp * grid.wavenumber_sq(flat).powf(-s / 2.0) })
            .collect();
        let density = multiplier.iter().map(|m| m * m).collect();
        Ok(Self { config, multiplier, density })
    }

    pub fn exponent(&self) -> f64 {
        self.config.exponent.value()
    }
}

impl Sampler for SpectralSampler {
    fn construction(&self) -> Construction {
        Construction::Spectral
    }

    fn grid(&self) -> &LatticeGrid {
        &self.config.grid
    }

    fn modulo_constant(&self) -> bool {
        self.exponent() > 0.0
    }

    fn sample(&self, key: SeededRng) -> Result<LatticeField> {
        let grid = self.config.grid;
        let white = sample_white_noise(&grid, key)?;
        let mut spec = Spectrum::forward(&grid, white.values());
        for (c, m) in spec.coeffs_mut().iter_mut().zip(&self.multiplier) {
            *c *= *m;
        }
        let meta = FieldMeta {
            construction: Construction::Spectral,
            seed: key.seed,
            stream: key.stream,
            exponent: Some(self.exponent()),
            config: self.describe(),
        };
        LatticeField::new(grid, spec.inverse_real(), self.modulo_constant(), meta)
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({
            "s": self.exponent(),
            "normalization": self.config.normalization,
        })
    }

    fn spectral_density(&self) -> Option<&[f64]> {
        Some(&self.density)
    }
}

/// `(-Delta)^a h` by multiplying the spectrum with `|k|^{2a}`. For `a < 0` the
/// input must be defined modulo constants, since the zero mode has no inverse.
pub fn apply_fractional_laplacian(h: &LatticeField, a: f64) -> Result<LatticeField> {
    if a < 0.0 && !h.modulo_constant() {
        return Err(Error::InvalidArgument(
            "negative powers of the Laplacian need a field defined modulo constants".into(),
        ));
    }
    let grid = *h.grid();
    let mut spec = Spectrum::forward(&grid, h.values());
    let zero = if a == 0.0 { None } else { Some(Complex64::new(0.0, 0.0)) };
    spec.apply_symbol(|k2| k2.powf(a), zero);
    let mut meta = h.meta().clone();
    meta.exponent = meta.exponent.map(|s| s - 2.0 * a);
    LatticeField::new(grid, spec.inverse_real(), h.modulo_constant() || a < 0.0, meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampler(grid: LatticeGrid, s: f64) -> SpectralSampler {
        SpectralSampler::new(SpectralSamplerConfig {
            grid,
            exponent: SpectralExponent::new(s, grid.dimension()).unwrap(),
            normalization: SymbolNormalization::Unit,
        })
        .unwrap()
    }

    #[test]
    fn negative_exponent_is_rejected() {
        assert!(matches!(SpectralExponent::new(-0.1, 2), Err(Error::UnsupportedRange(_))));
    }

    #[test]
    fn zero_exponent_is_centered_white_noise() {
        let grid = LatticeGrid::new(2, 32, 1.0).unwrap();
        let key = SeededRng::new(11, 4);
        let h = sampler(grid, 0.0).sample(key).unwrap();
        let w = sample_white_noise(&grid, key).unwrap();
        let mean = w.values().iter().sum::<f64>() / w.values().len() as f64;
        assert!(!h.modulo_constant());
        for (a, b) in h.values().iter().zip(w.values()) {
            assert!((a - (b - mean)).abs() < 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn laplacian_inverts_the_filter() {
        let grid = LatticeGrid::new(1, 128, 1.0).unwrap();
        let key = SeededRng::new(5, 0);
        let h = sampler(grid, 1.0).sample(key).unwrap();
        let back = apply_fractional_laplacian(&h, 0.5).unwrap();
        let w = sampler(grid, 0.0).sample(key).unwrap();
        for (a, b) in back.values().iter().zip(w.values()) {
            assert!((a - b).abs() < 1e-8 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn negative_power_needs_modulo_constant() {
        let grid = LatticeGrid::new(1, 16, 1.0).unwrap();
        let w = sample_white_noise(&grid, SeededRng::new(0, 0)).unwrap();
        assert!(apply_fractional_laplacian(&w, -0.5).is_err());
    }

    #[test]
    fn log_kernel_constants() {
        assert!((log_kernel_constant(1) - 1.0 / PI).abs() < 1e-15);
        assert!((log_kernel_constant(2) - 0.5 / PI).abs() < 1e-15);
        assert!((log_kernel_constant(3) - 0.5 / (PI * PI)).abs() < 1e-15);
        assert!((log_kernel_constant(4) - 0.125 / (PI * PI)).abs() < 1e-15);
    }
}
