//! White-noise integral over truncated cones `{(x, y) : |x - a| < y^{-1/d}, eps < y < 1/eps}`.

use std::sync::OnceLock;

use crate::dft::Spectrum;
use crate::error::{Error, Result};
use crate::field::{Construction, FieldMeta, LatticeField};
use crate::grid::LatticeGrid;
use crate::rng::SeededRng;
use crate::sampler::{geometric_slabs, radial_kernel_spectrum, synthesize, GeometricSlab, Sampler};
use crate::testfn::unit_ball_volume;

const SLAB_TAG: u64 = 0xC0DE_0000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeConfig {
    pub grid: LatticeGrid,
    pub epsilon: f64,
    pub slabs_per_efold: usize,
}

/// One `y`-slab: its height `dy` and the ball radius `rho` with
/// `rho^d dy = log(y_hi / y_lo)`, so each slab carries the exact cone volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeSlab {
    pub slab: GeometricSlab,
    pub height: f64,
    pub radius: f64,
}

pub struct ConeSampler {
    config: ConeConfig,
    slabs: Vec<ConeSlab>,
    density: Vec<f64>,
    amplitude: Vec<f64>,
    multipliers: OnceLock<Vec<Vec<f64>>>,
}

pub fn cone_slabs(dimension: usize, epsilon: f64, per_efold: usize) -> Vec<ConeSlab> {
    let lam = (1.0 / epsilon).ln();
    geometric_slabs(-lam, lam, per_efold)
        .into_iter()
        .map(|slab| {
            let height = slab.log_hi.exp() - slab.log_lo.exp();
            let radius = (slab.log_width() / height).powf(1.0 / dimension as f64);
            ConeSlab { slab, height, radius }
        })
        .collect()
}

impl ConeSampler {
    pub fn new(config: ConeConfig) -> Result<Self> {
        let grid = config.grid;
        let d = grid.dimension();
        if !(config.epsilon > 0.0 && config.epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!("epsilon = {} must lie in (0, 1)", config.epsilon)));
        }
        if config.slabs_per_efold == 0 {
            return Err(Error::InvalidArgument("slabs_per_efold must be positive".into()));
        }
        let widest = config.epsilon.powf(-1.0 / d as f64);
        if widest > grid.box_length() / 4.0 {
            return Err(Error::Unresolvable(format!(
                "widest cone radius {widest} exceeds a quarter of the box {}",
                grid.box_length()
            )));
        }
        let narrowest = config.epsilon.powf(1.0 / d as f64);
        if narrowest < grid.spacing() {
            return Err(Error::Unresolvable(format!(
                "narrowest cone radius {narrowest} is below the grid spacing {}",
                grid.spacing()
            )));
        }
        let slabs = cone_slabs(d, config.epsilon, config.slabs_per_efold);
        let vol = grid.box_length().powi(d as i32);
        let mut density = vec![0.0; grid.site_count()];
        for s in &slabs {
            let b = ball_spectrum(&grid, s.radius);
            for (acc, v) in density.iter_mut().zip(&b) {
                *acc += s.height * vol * v * v;
            }
        }
        let amplitude = density.iter().map(|v: &f64| v.max(0.0).sqrt()).collect();
        Ok(Self { config, slabs, density, amplitude, multipliers: OnceLock::new() })
    }

    pub fn slabs(&self) -> &[ConeSlab] {
        &self.slabs
    }

    /// `|C_eps(a)| = 2 v_d log(1/eps)`.
    pub fn continuum_variance(&self) -> f64 {
        2.0 * unit_ball_volume(self.config.grid.dimension()) * (1.0 / self.config.epsilon).ln()
    }

    fn slab_multipliers(&self) -> &[Vec<f64>] {
        self.multipliers.get_or_init(|| {
            let grid = self.config.grid;
            let root_vol = grid.box_length().powf(grid.dimension() as f64 / 2.0);
            self.slabs
                .iter()
                .map(|s| ball_spectrum(&grid, s.radius).into_iter().map(|b| b * root_vol * s.height.sqrt()).collect())
                .collect()
        })
    }

    /// Fields for several cutoffs built from one set of slab noises; slabs
    /// belonging to every requested cutoff are shared exactly.
    pub fn sample_shared(&self, epsilons: &[f64], key: SeededRng) -> Result<Vec<LatticeField>> {
        let grid = self.config.grid;
        for &e in epsilons {
            if !(e >= self.config.epsilon && e < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "cutoff {e} outside [{}, 1) of this sampler",
                    self.config.epsilon
                )));
            }
        }
        let mut acc: Vec<Spectrum> = epsilons.iter().map(|_| Spectrum::zeros(grid)).collect();
        for (s, mult) in self.slabs.iter().zip(self.slab_multipliers()) {
            let noise = Spectrum::white_noise(&grid, key.fork(SLAB_TAG ^ s.slab.index as u64));
            for (spec, &e) in acc.iter_mut().zip(epsilons) {
                let lam = (1.0 / e).ln();
                if s.slab.log_lo >= -lam - 1e-12 && s.slab.log_hi <= lam + 1e-12 {
                    spec.accumulate_weighted(&noise, mult);
                }
            }
        }
        acc.iter()
            .zip(epsilons)
            .map(|(spec, &e)| LatticeField::new(grid, spec.inverse_real(), false, self.meta(key, e)))
            .collect()
    }

    fn meta(&self, key: SeededRng, epsilon: f64) -> FieldMeta {
        FieldMeta {
            construction: Construction::Cone,
            seed: key.seed,
            stream: key.stream,
            exponent: None,
            config: serde_json::json!({ "epsilon": epsilon, "slabs_per_efold": self.config.slabs_per_efold }),
        }
    }
}

/// Coefficients of the lattice indicator of the closed ball of radius `rho`.
fn ball_spectrum(grid: &LatticeGrid, rho: f64) -> Vec<f64> {
    radial_kernel_spectrum(grid, |r| if r <= rho { 1.0 } else { 0.0 })
}

impl Sampler for ConeSampler {
    fn construction(&self) -> Construction {
        Construction::Cone
    }

    fn grid(&self) -> &LatticeGrid {
        &self.config.grid
    }

    fn modulo_constant(&self) -> bool {
        false
    }

    fn sample(&self, key: SeededRng) -> Result<LatticeField> {
        let values = synthesize(&self.config.grid, &self.amplitude, key);
        LatticeField::new(self.config.grid, values, false, self.meta(key, self.config.epsilon))
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({ "epsilon": self.config.epsilon, "slabs_per_efold": self.config.slabs_per_efold })
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
    fn slabs_carry_the_cone_volume() {
        for d in 1..=3 {
            let slabs = cone_slabs(d, (-2.0f64).exp(), 8);
            let vol: f64 = slabs.iter().map(|s| s.height * s.radius.powi(d as i32)).sum();
            assert!((vol - 4.0).abs() < 1e-10);
        }
    }

    #[test]
    fn lattice_variance_is_close_to_cone_volume() {
        let grid = LatticeGrid::new(1, 4096, 32.0).unwrap();
        let smp = ConeSampler::new(ConeConfig { grid, epsilon: (-2.0f64).exp(), slabs_per_efold: 8 }).unwrap();
        let v = stationary_site_variance(&grid, smp.spectral_density().unwrap());
        assert!((v / smp.continuum_variance() - 1.0).abs() < 0.01, "{v}");
    }

    #[test]
    fn oversized_cutoff_is_rejected() {
        let grid = LatticeGrid::new(1, 256, 8.0).unwrap();
        let r = ConeSampler::new(ConeConfig { grid, epsilon: 0.1, slabs_per_efold: 8 });
        assert!(matches!(r, Err(Error::Unresolvable(_))));
    }
}
