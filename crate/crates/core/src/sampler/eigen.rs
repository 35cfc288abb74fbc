//! Truncated Dirichlet eigenfunction series on the unit box.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::{Construction, FieldMeta, LatticeField};
use crate::grid::LatticeGrid;
use crate::rng::SeededRng;
use crate::sampler::Sampler;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSeriesConfig {
    pub dimension: usize,
    /// Sites per axis; site `i` sits at `i / N`, so index 0 is the boundary.
    pub points_per_axis: usize,
    /// Modes `1..=n_max` per axis.
    pub n_max: usize,
    /// Coefficient of mode `n` is `(-lambda_n)^{-s/2}`.
    pub s: f64,
}

/// `Y = sum_n (-lambda_n)^{-s/2} beta_n e_n` with `e_n = 2^{d/2} prod sin(n_i pi x_i)`
/// and `lambda_n = -pi^2 |n|^2`.
pub struct EigenSeriesSampler {
    config: EigenSeriesConfig,
    grid: LatticeGrid,
    /// `sines[n-1][i] = sin(n pi i / N)`.
    sines: Vec<Vec<f64>>,
}

impl EigenSeriesSampler {
    pub fn new(config: EigenSeriesConfig) -> Result<Self> {
        if config.n_max == 0 {
            return Err(Error::InvalidArgument("n_max must be at least 1".into()));
        }
        if !config.s.is_finite() || config.s < 0.0 {
            return Err(Error::UnsupportedRange(format!("exponent s = {} must be >= 0", config.s)));
        }
        let grid = LatticeGrid::new(config.dimension, config.points_per_axis, 1.0)?;
        let n = config.points_per_axis;
        let sines = (1..=config.n_max).map(|m| (0..n).map(|i| sin_pi_ratio(m * i, n)).collect()).collect();
        Ok(Self { config, grid, sines })
    }

    pub fn config(&self) -> &EigenSeriesConfig {
        &self.config
    }

    fn coefficient(&self, modes: &[usize]) -> f64 {
        let n2: usize = modes.iter().map(|m| m * m).sum();
        (PI * PI * n2 as f64).powf(-self.config.s / 2.0)
    }

    /// `e_n` at a site.
    pub fn eigenfunction(&self, modes: &[usize], flat: usize) -> f64 {
        let idx = self.grid.unravel(flat);
        let d = self.config.dimension;
        let mut v = 2f64.powf(d as f64 / 2.0);
        for a in 0..d {
            v *= self.sines[modes[a] - 1][idx[a]];
        }
        v
    }

    /// `sum_n (-lambda_n)^{-s} e_n(x) e_n(y)` over the retained modes.
    pub fn truncated_covariance(&self, x: usize, y: usize) -> f64 {
        let mut total = 0.0;
        for_each_mode(self.config.dimension, self.config.n_max, |modes| {
            let c = self.coefficient(modes);
            total += c * c * self.eigenfunction(modes, x) * self.eigenfunction(modes, y);
        });
        total
    }
}

/// `sin(pi m / n)` with exact zeros at integer multiples of `pi`.
fn sin_pi_ratio(m: usize, n: usize) -> f64 {
    let r = m % (2 * n);
    if r == 0 || r == n {
        return 0.0;
    }
    (PI * r as f64 / n as f64).sin()
}

fn for_each_mode(d: usize, n_max: usize, mut f: impl FnMut(&[usize])) {
    let mut modes = vec![1usize; d];
    loop {
        f(&modes);
        let mut a = d;
        loop {
            if a == 0 {
                return;
            }
            a -= 1;
            if modes[a] < n_max {
                modes[a] += 1;
                break;
            }
            modes[a] = 1;
        }
    }
}

impl Sampler for EigenSeriesSampler {
    fn construction(&self) -> Construction {
        Construction::Eigen
    }

    fn grid(&self) -> &LatticeGrid {
        &self.grid
    }

    fn modulo_constant(&self) -> bool {
        false
    }

    fn sample(&self, key: SeededRng) -> Result<LatticeField> {
        let d = self.config.dimension;
        let m = self.config.n_max;
        let n = self.config.points_per_axis;
        let mut g = key.gaussians();
        // Coefficient tensor in row-major mode order, then contract one axis at a time.
        let mut data = Vec::with_capacity(m.pow(d as u32));
        for_each_mode(d, m, |modes| data.push(self.coefficient(modes) * g.standard_normal()));
        let mut dims = vec![m; d];
        for axis in 0..d {
            data = contract_axis(&data, &dims, axis, &self.sines, n);
            dims[axis] = n;
        }
        let scale = 2f64.powf(d as f64 / 2.0);
        data.iter_mut().for_each(|v| *v *= scale);
        let meta = FieldMeta {
            construction: Construction::Eigen,
            seed: key.seed,
            stream: key.stream,
            exponent: Some(self.config.s),
            config: self.describe(),
        };
        LatticeField::new(self.grid, data, false, meta)
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({ "n_max": self.config.n_max, "s": self.config.s, "boundary": "dirichlet" })
    }
}

/// `out[.., i, ..] = sum_m data[.., m, ..] * table[m][i]` along `axis`.
fn contract_axis(data: &[f64], dims: &[usize], axis: usize, table: &[Vec<f64>], new_len: usize) -> Vec<f64> {
    let outer: usize = dims[..axis].iter().product();
    let inner: usize = dims[axis + 1..].iter().product();
    let old_len = dims[axis];
    let mut out = vec![0.0; outer * new_len * inner];
    for o in 0..outer {
        for m in 0..old_len {
            let src = &data[(o * old_len + m) * inner..(o * old_len + m + 1) * inner];
            for (i, &w) in table[m].iter().enumerate().take(new_len) {
                if w == 0.0 {
                    continue;
                }
                let dst = &mut out[(o * new_len + i) * inner..(o * new_len + i + 1) * inner];
                for (t, s) in dst.iter_mut().zip(src) {
                    *t += w * s;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampler(d: usize, n: usize, n_max: usize) -> EigenSeriesSampler {
        EigenSeriesSampler::new(EigenSeriesConfig { dimension: d, points_per_axis: n, n_max, s: d as f64 / 2.0 }).unwrap()
    }

    #[test]
    fn zero_modes_is_an_error() {
        let r = EigenSeriesSampler::new(EigenSeriesConfig { dimension: 2, points_per_axis: 16, n_max: 0, s: 1.0 });
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn boundary_sites_are_exactly_zero() {
        let smp = sampler(2, 32, 12);
        let y = smp.sample(SeededRng::new(7, 1)).unwrap();
        let grid = smp.grid();
        for flat in 0..grid.site_count() {
            let idx = grid.unravel(flat);
            if idx[0] == 0 || idx[1] == 0 {
                assert_eq!(y.value_at(flat), 0.0);
            }
        }
    }

    #[test]
    fn contraction_matches_direct_sum() {
        let smp = sampler(2, 8, 3);
        let key = SeededRng::new(1, 2);
        let y = smp.sample(key).unwrap();
        let mut g = key.gaussians();
        let mut coeffs = Vec::new();
        for_each_mode(2, 3, |m| coeffs.push((m.to_vec(), smp.coefficient(m) * g.standard_normal())));
        for flat in 0..smp.grid().site_count() {
            let direct: f64 = coeffs.iter().map(|(m, c)| c * smp.eigenfunction(m, flat)).sum();
            assert!((direct - y.value_at(flat)).abs() < 1e-12);
        }
    }

    #[test]
    fn single_mode_covariance() {
        let smp = sampler(1, 16, 1);
        // e_1(x) = sqrt2 sin(pi x); coefficient pi^{-1/2}.
        let x = 4;
        let expect = 2.0 * (PI * 0.25).sin().powi(2) / PI;
        assert!((smp.truncated_covariance(x, x) - expect).abs() < 1e-14);
    }
}
