//! Field constructions behind a common [`Sampler`] trait, selected by name
//! through a [`SamplerRegistry`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dft::Spectrum;
use crate::error::{Error, Result};
use crate::field::{Construction, LatticeField, LatticeFunction};
use crate::grid::LatticeGrid;
use crate::rng::SeededRng;

pub mod cascade;
pub mod cone;
pub mod convolution;
pub mod eigen;
pub mod kahane;
pub mod spectral;
pub mod volatility;
pub mod white;

pub use cascade::{split_level, CascadeConfig, CascadeSampler, CubeOrigin};
pub use cone::{ConeConfig, ConeSampler};
pub use convolution::{ConvolutionConfig, ConvolutionSampler};
pub use eigen::{EigenSeriesConfig, EigenSeriesSampler};
pub use kahane::{kahane_covariance, BumpKernel, KahaneConfig, KahaneSampler};
pub use spectral::{apply_fractional_laplacian, SpectralExponent, SpectralSampler, SpectralSamplerConfig, SymbolNormalization};
pub use volatility::{VolatilityConfig, VolatilitySampler};
pub use white::{sample_white_noise, WhiteNoiseSampler};

/// Geometric slabs per e-fold of the auxiliary scale axis (cone `y`, Kahane `u`).
pub const DEFAULT_SLABS_PER_EFOLD: usize = 8;

/// One field construction. Implementations are immutable and shareable across
/// threads; a draw is a pure function of the key.
pub trait Sampler: Send + Sync {
    fn construction(&self) -> Construction;

    fn grid(&self) -> &LatticeGrid;

    /// Whether drawn fields are only defined modulo an additive constant.
    fn modulo_constant(&self) -> bool;

    fn sample(&self, key: SeededRng) -> Result<LatticeField>;

    /// Parameters recorded in the field header.
    fn describe(&self) -> serde_json::Value;

    /// `E|h^(k)|^2` per spectral slot for stationary constructions.
    fn spectral_density(&self) -> Option<&[f64]> {
        None
    }

    /// Exact lattice-law covariance of two pairings, when available in closed form.
    fn pairing_covariance(&self, f: &LatticeFunction, g: &LatticeFunction) -> Option<f64> {
        let density = self.spectral_density()?;
        Some(stationary_pairing_covariance(density, f, g))
    }
}

/// `sum_k S(k) Re(f^(k) conj(g^(k)))`: covariance of `(h,f)` and `(h,g)` for a
/// stationary lattice field with spectral density `S`.
pub fn stationary_pairing_covariance(density: &[f64], f: &LatticeFunction, g: &LatticeFunction) -> f64 {
    let grid = *f.grid();
    let fh = Spectrum::forward(&grid, f.values());
    let gh = Spectrum::forward(&grid, g.values());
    fh.coeffs()
        .iter()
        .zip(gh.coeffs())
        .zip(density)
        .map(|((a, b), s)| s * (a * b.conj()).re)
        .sum()
}

/// Draws a stationary field with `h^(k) = amplitude(k) w^(k)`, `w` a white
/// noise spectrum keyed by `key`.
pub fn synthesize(grid: &LatticeGrid, amplitude: &[f64], key: SeededRng) -> Vec<f64> {
    let mut spec = Spectrum::white_noise(grid, key);
    for (c, a) in spec.coeffs_mut().iter_mut().zip(amplitude) {
        *c *= *a;
    }
    spec.inverse_real()
}

/// `E h(x)^2` of a stationary field with the given spectral density.
pub fn stationary_site_variance(grid: &LatticeGrid, density: &[f64]) -> f64 {
    crate::field::compensated_sum(density.iter().copied()) / grid.box_length().powi(grid.dimension() as i32)
}

/// Slab of a geometric partition of a log-scale axis: index `j` covers
/// `[j/p, (j+1)/p]` clipped to the requested range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricSlab {
    pub index: i64,
    pub log_lo: f64,
    pub log_hi: f64,
}

impl GeometricSlab {
    pub fn log_width(&self) -> f64 {
        self.log_hi - self.log_lo
    }
}

/// Partition of `[log_lo, log_hi]` into slabs aligned to multiples of `1/per_efold`.
pub fn geometric_slabs(log_lo: f64, log_hi: f64, per_efold: usize) -> Vec<GeometricSlab> {
    let p = per_efold as f64;
    let snap = |v: f64| if (v - v.round()).abs() < 1e-9 { v.round() } else { v };
    let first = snap(log_lo * p).floor() as i64;
    let last = snap(log_hi * p).ceil() as i64;
    (first..last)
        .filter_map(|j| {
            let lo = (j as f64 / p).max(log_lo);
            let hi = ((j + 1) as f64 / p).min(log_hi);
            (hi - lo > 1e-12).then_some(GeometricSlab { index: j, log_lo: lo, log_hi: hi })
        })
        .collect()
}

/// Real Fourier coefficients of a radially symmetric lattice kernel
/// `g(|x|)`, with `|x|` the minimum-image distance to the origin.
pub fn radial_kernel_spectrum(grid: &LatticeGrid, g: impl Fn(f64) -> f64) -> Vec<f64> {
    let values = radial_kernel_values(grid, g);
    Spectrum::forward(grid, &values).coeffs().iter().map(|c| c.re).collect()
}

pub fn radial_kernel_values(grid: &LatticeGrid, g: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..grid.site_count()).map(|flat| g(origin_distance(grid, flat))).collect()
}

/// Minimum-image distance from a site to the origin.
pub fn origin_distance(grid: &LatticeGrid, flat: usize) -> f64 {
    let idx = grid.unravel(flat);
    let dx = grid.spacing();
    (0..grid.dimension())
        .map(|a| {
            let t = grid.signed_frequency(idx[a]) as f64 * dx;
            t * t
        })
        .sum::<f64>()
        .sqrt()
}

/// Flat construction parameters, mirroring the command-line flags and the
/// JSON config file. Unused keys are ignored by constructions that do not
/// need them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub construction: Construction,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L_box")]
    pub box_length: f64,
    pub seed: u64,
    pub s: Option<f64>,
    pub normalization: SymbolNormalization,
    pub epsilon: Option<f64>,
    pub t: Option<f64>,
    pub kernel_radius: Option<f64>,
    pub correlation_length: Option<f64>,
    pub levels: Option<(i32, i32)>,
    pub alpha: Option<f64>,
    pub origin: CubeOrigin,
    pub n_max: Option<usize>,
    pub slabs_per_efold: Option<usize>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            construction: Construction::Spectral,
            d: 2,
            n: 256,
            box_length: 1.0,
            seed: 0,
            s: None,
            normalization: SymbolNormalization::Unit,
            epsilon: None,
            t: None,
            kernel_radius: None,
            correlation_length: None,
            levels: None,
            alpha: None,
            origin: CubeOrigin::HalfOpen,
            n_max: None,
            slabs_per_efold: None,
        }
    }
}

impl SamplerConfig {
    pub fn grid(&self) -> Result<LatticeGrid> {
        LatticeGrid::new(self.d, self.n, self.box_length)
    }

    fn require<T: Copy>(value: Option<T>, name: &str, construction: Construction) -> Result<T> {
        value.ok_or_else(|| Error::InvalidArgument(format!("construction `{construction}` requires `{name}`")))
    }
}

pub type SamplerFactory = fn(&SamplerConfig) -> Result<Box<dyn Sampler>>;

/// Maps construction tags to factories.
pub struct SamplerRegistry {
    factories: BTreeMap<&'static str, SamplerFactory>,
}

impl SamplerRegistry {
    pub fn empty() -> Self {
        Self { factories: BTreeMap::new() }
    }

    /// Registry with every built-in construction.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register(Construction::White.tag(), build_white);
        r.register(Construction::Spectral.tag(), build_spectral);
        r.register(Construction::Eigen.tag(), build_eigen);
        r.register(Construction::Cascade.tag(), build_cascade);
        r.register(Construction::Cone.tag(), build_cone);
        r.register(Construction::Conv.tag(), build_conv);
        r.register(Construction::Kahane.tag(), build_kahane);
        r.register(Construction::Volatility.tag(), build_volatility);
        r
    }

    pub fn register(&mut self, name: &'static str, factory: SamplerFactory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }

    pub fn build(&self, config: &SamplerConfig) -> Result<Box<dyn Sampler>> {
        let name = config.construction.tag();
        let factory = self.factories.get(name).ok_or_else(|| Error::UnknownConstruction(name.to_string()))?;
        factory(config)
    }
}

impl Default for SamplerRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

fn build_white(c: &SamplerConfig) -> Result<Box<dyn Sampler>> {
    Ok(Box::new(WhiteNoiseSampler::new(c.grid()?)))
}

fn build_spectral(c: &SamplerConfig) -> Result<Box<dyn Sampler>> {
    let s = c.s.unwrap_or(c.d as f64 / 2.0);
    Ok(Box::new(SpectralSampler::new(SpectralSamplerConfig {
        grid: c.grid()?,
        exponent: SpectralExponent::new(s, c.d)?,
        normalization: c.normalization,
    })?))
}

fn build_eigen(c: &SamplerConfig) -> Result<Box<dyn Sampler>> {
    let n_max = SamplerConfig::require(c.n_max, "n_max", c.construction)?;
    Ok(Box::new(EigenSeriesSampler::new(EigenSeriesConfig {
        dimension: c.d,
        points_per_axis: c.n,
        n_max,
        s: c.s.unwrap_or(c.d as f64 / 2.0),
    })?))
}

fn build_cascade(c: &SamplerConfig) -> Result<Box<dyn Sampler>> {
    let (k_min, k_max) = SamplerConfig::require(c.levels, "levels", c.construction)?;
    Ok(Box::new(CascadeSampler::new(
        c.grid()?,
        CascadeConfig { dimension: c.d, k_min, k_max, origin: c.origin, alpha: c.alpha.unwrap_or(1.0) },
    )?))
}

fn build_cone(c: &SamplerConfig) -> Result<Box<dyn Sampler>> {
    let epsilon = SamplerConfig::require(c.epsilon, "epsilon", c.construction)?;
    Ok(Box::new(ConeSampler::new(ConeConfig {
        grid: c.grid()?,
        epsilon,
        slabs_per_efold: c.slabs_per_efold.unwrap_or(DEFAULT_SLABS_PER_EFOLD),
    })?))
}

fn build_conv(c: &SamplerConfig) -> Result<Box<dyn Sampler>> {
    let epsilon = SamplerConfig::require(c.epsilon, "epsilon", c.construction)?;
    Ok(Box::new(ConvolutionSampler::new(ConvolutionConfig { grid: c.grid()?, epsilon })?))
}

fn build_kahane(c: &SamplerConfig) -> Result<Box<dyn Sampler>> {
    let t = SamplerConfig::require(c.t, "t", c.construction)?;
    Ok(Box::new(KahaneSampler::new(KahaneConfig {
        grid: c.grid()?,
        t,
        kernel: BumpKernel::new(c.d, c.kernel_radius.unwrap_or(0.5))?,
        slabs_per_efold: c.slabs_per_efold.unwrap_or(DEFAULT_SLABS_PER_EFOLD),
    })?))
}

fn build_volatility(c: &SamplerConfig) -> Result<Box<dyn Sampler>> {
    let t = SamplerConfig::require(c.correlation_length, "correlation_length", c.construction)?;
    Ok(Box::new(VolatilitySampler::new(VolatilityConfig { grid: c.grid()?, correlation_length: t })?))
}
