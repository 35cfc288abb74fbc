//! One-dimensional stationary field with covariance `log+(T / |x - y|)`.

use crate::dft::Spectrum;
use crate::error::{Error, Result};
use crate::field::{Construction, FieldMeta, LatticeField};
use crate::grid::LatticeGrid;
use crate::quadrature::integrate_with_breaks;
use crate::rng::SeededRng;
use crate::sampler::{synthesize, Sampler};

/// Negative covariance eigenvalues down to this fraction of the largest are
/// treated as rounding and clipped to zero.
pub const NEGATIVE_EIGENVALUE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolatilityConfig {
    pub grid: LatticeGrid,
    pub correlation_length: f64,
}

/// Site covariances are cell averages of the kernel, `C_j = E log+(T / |(j + U - V) dx|)`
/// with `U, V` independent uniforms, so `C_0` is finite and pairings against
/// piecewise-constant test functions are exact.
pub struct VolatilitySampler {
    config: VolatilityConfig,
    covariance: Vec<f64>,
    density: Vec<f64>,
    amplitude: Vec<f64>,
}

/// `int_{-1}^{1} (1 - |s|) log+(T / |(j + s) dx|) ds`.
pub fn cell_averaged_log_plus(j: f64, dx: f64, t: f64) -> f64 {
    let reach = t / dx;
    if j.abs() >= reach + 1.0 {
        return 0.0;
    }
    let f = |s: f64| {
        let r = (j + s).abs() * dx;
        if r >= t || r == 0.0 {
            0.0
        } else {
            (1.0 - s.abs()) * (t / r).ln()
        }
    };
    let breaks: Vec<f64> = [-j, 0.0, reach - j, -reach - j].into_iter().filter(|b| b.abs() < 1.0).collect();
    integrate_with_breaks(f, -1.0, 1.0, &breaks, 1e-15, 1e-13)
}

impl VolatilitySampler {
    pub fn new(config: VolatilityConfig) -> Result<Self> {
        let grid = config.grid;
        if grid.dimension() != 1 {
            return Err(Error::UnsupportedRange("the volatility field is one-dimensional".into()));
        }
        let t = config.correlation_length;
        if !(t > 0.0) {
            return Err(Error::InvalidArgument(format!("correlation length {t} must be positive")));
        }
        if t > grid.box_length() / 4.0 {
            return Err(Error::SupportTooLarge(format!("T = {t} exceeds a quarter of the box {}", grid.box_length())));
        }
        let n = grid.points_per_axis();
        let dx = grid.spacing();
        let covariance: Vec<f64> =
            (0..n).map(|j| cell_averaged_log_plus(grid.signed_frequency(j) as f64, dx, t)).collect();
        let spec = Spectrum::forward(&grid, &covariance);
        let root_vol = grid.box_length().sqrt();
        // S_n = dx * DFT(C)_n.
        let density: Vec<f64> = spec.coeffs().iter().map(|c| c.re * root_vol).collect();
        let max = density.iter().cloned().fold(f64::MIN, f64::max);
        let min = density.iter().cloned().fold(f64::MAX, f64::min);
        if min < -NEGATIVE_EIGENVALUE_TOLERANCE * max {
            return Err(Error::NegativeSpectrum { min, max });
        }
        let density: Vec<f64> = density.into_iter().map(|v| v.max(0.0)).collect();
        let amplitude = density.iter().map(|v| v.sqrt()).collect();
        Ok(Self { config, covariance, density, amplitude })
    }

    /// Site covariance at lag index `j` (periodic).
    pub fn covariance_sequence(&self) -> &[f64] {
        &self.covariance
    }
}

impl Sampler for VolatilitySampler {
    fn construction(&self) -> Construction {
        Construction::Volatility
    }

    fn grid(&self) -> &LatticeGrid {
        &self.config.grid
    }

    fn modulo_constant(&self) -> bool {
        false
    }

    fn sample(&self, key: SeededRng) -> Result<LatticeField> {
        let values = synthesize(&self.config.grid, &self.amplitude, key);
        let meta = FieldMeta {
            construction: Construction::Volatility,
            seed: key.seed,
            stream: key.stream,
            exponent: None,
            config: self.describe(),
        };
        LatticeField::new(self.config.grid, values, false, meta)
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({ "correlation_length": self.config.correlation_length })
    }

    fn spectral_density(&self) -> Option<&[f64]> {
        Some(&self.density)
    }
}
