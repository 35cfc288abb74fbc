//! Kahane's scale-mixture cutoff `X_t(x) = int f(y - u x) u^{-1/2} W(dy, du)`
//! over `u in [1, e^t]`, with covariance `K_t(x) = int_1^{e^t} k(u x) / u du`
//! and `k = f * f`.

use std::sync::OnceLock;

use crate::dft::Spectrum;
use crate::error::{Error, Result};
use crate::field::{Construction, FieldMeta, LatticeField};
use crate::grid::LatticeGrid;
use crate::quadrature::{integrate, integrate_with_breaks};
use crate::rng::SeededRng;
use crate::sampler::{geometric_slabs, radial_kernel_spectrum, synthesize, GeometricSlab, Sampler};
use crate::testfn::{bump_shape, unit_sphere_area};

const SLAB_TAG: u64 = 0x0CA8_A9E0;

/// `f(z) = c bump(|z| / R)` with `c` chosen so that `k(0) = int f^2 = 1`.
/// `k = f * f` is then supported in `|x| <= 2R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpKernel {
    dimension: usize,
    radius: f64,
    scale: f64,
}

impl BumpKernel {
    pub fn new(dimension: usize, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("kernel radius {radius} must be positive")));
        }
        if dimension == 0 || dimension > 4 {
            return Err(Error::InvalidArgument(format!("dimension {dimension} out of range")));
        }
        let d = dimension as i32;
        let radial = integrate(|r| bump_shape(r).powi(2) * r.powi(d - 1), 0.0, 1.0, 1e-15, 1e-13);
        let norm_sq = unit_sphere_area(dimension) * radius.powi(d) * radial;
        Ok(Self { dimension, radius, scale: norm_sq.powf(-0.5) })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `f` as a function of `|z|`.
    pub fn f(&self, r: f64) -> f64 {
        self.scale * bump_shape(r / self.radius)
    }

    /// `k(v) = int f(y) f(y - v e_1) dy`, by nested quadrature over the
    /// axial coordinate and the transverse radius.
    pub fn k(&self, v: f64) -> f64 {
        let v = v.abs();
        let r = self.radius;
        if v >= 2.0 * r {
            return 0.0;
        }
        let d = self.dimension;
        let integrand_axial = |y1: f64| {
            let h2 = (r * r - y1 * y1).min(r * r - (y1 - v) * (y1 - v));
            if h2 <= 0.0 {
                return 0.0;
            }
            if d == 1 {
                return self.f(y1.abs()) * self.f((y1 - v).abs());
            }
            let area = unit_sphere_area(d - 1);
            let p = d as i32 - 2;
            area * integrate(
                |rho| {
                    let a = (y1 * y1 + rho * rho).sqrt();
                    let b = ((y1 - v) * (y1 - v) + rho * rho).sqrt();
                    rho.powi(p) * self.f(a) * self.f(b)
                },
                0.0,
                h2.sqrt(),
                1e-16,
                1e-12,
            )
        };
        integrate_with_breaks(integrand_axial, v - r, r, &[v / 2.0], 1e-16, 1e-12)
    }
}

/// `K_t(x) = int_1^{e^t} k(u |x|) / u du` by adaptive quadrature in `log u`.
pub fn kahane_covariance(x: &[f64], t: f64, kernel: &BumpKernel) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 {
        return t;
    }
    let lo = r.ln();
    let hi = (lo + t).min((2.0 * kernel.radius()).ln());
    if hi <= lo {
        return 0.0;
    }
    integrate(|w| kernel.k(w.exp()), lo, hi, 1e-14, 1e-10)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KahaneConfig {
    pub grid: LatticeGrid,
    pub t: f64,
    pub kernel: BumpKernel,
    pub slabs_per_efold: usize,
}

pub struct KahaneSampler {
    config: KahaneConfig,
    slabs: Vec<GeometricSlab>,
    density: Vec<f64>,
    amplitude: Vec<f64>,
    multipliers: OnceLock<Vec<Vec<f64>>>,
}

impl KahaneSampler {
    pub fn new(config: KahaneConfig) -> Result<Self> {
        let grid = config.grid;
        if grid.dimension() != config.kernel.dimension() {
            return Err(Error::GridMismatch("kernel and grid dimensions differ".into()));
        }
        if !(config.t >= 0.0 && config.t.is_finite()) {
            return Err(Error::InvalidArgument(format!("t = {} must be >= 0", config.t)));
        }
        if config.slabs_per_efold == 0 {
            return Err(Error::InvalidArgument("slabs_per_efold must be positive".into()));
        }
        let r = config.kernel.radius();
        if r > grid.box_length() / 4.0 {
            return Err(Error::SupportTooLarge(format!("kernel radius {r} exceeds a quarter of the box")));
        }
        let finest = r * (-config.t).exp();
        if finest < 2.0 * grid.spacing() {
            return Err(Error::Unresolvable(format!(
                "finest kernel radius {finest} is below two grid spacings ({})",
                grid.spacing()
            )));
        }
        let slabs = geometric_slabs(0.0, config.t, config.slabs_per_efold);
        let mut density = vec![0.0; grid.site_count()];
        for s in &slabs {
            let m = slab_multiplier(&config, s);
            for (acc, v) in density.iter_mut().zip(&m) {
                *acc += v * v;
            }
        }
        let amplitude = density.iter().map(|v: &f64| v.max(0.0).sqrt()).collect();
        Ok(Self { config, slabs, density, amplitude, multipliers: OnceLock::new() })
    }

    pub fn kernel(&self) -> &BumpKernel {
        &self.config.kernel
    }

    pub fn t(&self) -> f64 {
        self.config.t
    }

    /// `X_s` for each requested `s <= t` from one set of slab noises, so
    /// increments over disjoint `u`-ranges are independent.
    pub fn sample_at_times(&self, times: &[f64], key: SeededRng) -> Result<Vec<LatticeField>> {
        let grid = self.config.grid;
        if let Some(bad) = times.iter().find(|&&s| !(0.0..=self.config.t + 1e-12).contains(&s)) {
            return Err(Error::InvalidArgument(format!("time {bad} outside [0, {}]", self.config.t)));
        }
        let mults = self.multipliers.get_or_init(|| self.slabs.iter().map(|s| slab_multiplier(&self.config, s)).collect());
        let mut acc: Vec<Spectrum> = times.iter().map(|_| Spectrum::zeros(grid)).collect();
        for (s, m) in self.slabs.iter().zip(mults) {
            let noise = Spectrum::white_noise(&grid, key.fork(SLAB_TAG ^ s.index as u64));
            for (spec, &time) in acc.iter_mut().zip(times) {
                if s.log_hi <= time + 1e-12 {
                    spec.accumulate_weighted(&noise, m);
                }
            }
        }
        acc.iter()
            .zip(times)
            .map(|(spec, &time)| LatticeField::new(grid, spec.inverse_real(), false, self.meta(key, time)))
            .collect()
    }

    fn meta(&self, key: SeededRng, t: f64) -> FieldMeta {
        FieldMeta {
            construction: Construction::Kahane,
            seed: key.seed,
            stream: key.stream,
            exponent: None,
            config: serde_json::json!({
                "t": t,
                "kernel": "bump",
                "kernel_radius": self.config.kernel.radius(),
                "slabs_per_efold": self.config.slabs_per_efold,
            }),
        }
    }
}

/// `sqrt(dlog) L^{d/2} f_u^`, with `f_u(z) = u^{d/2} f(u z)` at the slab's
/// geometric midpoint, rescaled so that its lattice `L^2` norm is 1.
fn slab_multiplier(config: &KahaneConfig, slab: &GeometricSlab) -> Vec<f64> {
    let grid = config.grid;
    let u = (0.5 * (slab.log_lo + slab.log_hi)).exp();
    let kernel = config.kernel;
    let coeffs = radial_kernel_spectrum(&grid, |r| kernel.f(u * r));
    let norm_sq: f64 = coeffs.iter().map(|c| c * c).sum();
    let scale = slab.log_width().sqrt() * grid.box_length().powf(grid.dimension() as f64 / 2.0) / norm_sq.sqrt();
    coeffs.into_iter().map(|c| c * scale).collect()
}

impl Sampler for KahaneSampler {
    fn construction(&self) -> Construction {
        Construction::Kahane
    }

    fn grid(&self) -> &LatticeGrid {
        &self.config.grid
    }

    fn modulo_constant(&self) -> bool {
        false
    }

    fn sample(&self, key: SeededRng) -> Result<LatticeField> {
        let values = synthesize(&self.config.grid, &self.amplitude, key);
        LatticeField::new(self.config.grid, values, false, self.meta(key, self.config.t))
    }

    fn describe(&self) -> serde_json::Value {
        self.meta(SeededRng::new(0, 0), self.config.t).config
    }

    fn spectral_density(&self) -> Option<&[f64]> {
        Some(&self.density)
    }
}
