//! Dyadic additive cascade: independent piecewise-constant levels `Y_k` and
//! their partial sums.
//!
//! Level values are hashed from `(seed, stream, k, cube index)`, so any
//! region or point set queried with the same key sees the same realization.
//! Grid partial sums evaluate every level at the sites, including levels
//! finer than the spacing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Construction, FieldMeta, LatticeField, LatticeFunction};
use crate::grid::{LatticeGrid, MAX_DIMENSION};
use crate::rng::{hashed_normal, hashed_uniform, SeededRng};
use crate::sampler::Sampler;

const LEVEL_TAG: u64 = 0xCA5C_ADE0;
const SHIFT_TAG: u64 = 0x5A1F_7000;
/// No two distinct finite doubles agree past this many halvings.
const MAX_SPLIT_DEPTH: i32 = 1100;

/// Placement of the level-`k` cubes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CubeOrigin {
    /// Half-open translates of `[0, 2^-k)^d` by `2^-k Z^d`.
    #[default]
    HalfOpen,
    /// Translates of `[-1/2, 1/2)^d 2^-k`; levels are no longer nested.
    Centered,
    /// Half-open cubes moved by one uniform shift in `[0, 2^-k_min)^d` per draw,
    /// which makes every level stationary.
    Shifted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeConfig {
    pub dimension: usize,
    pub k_min: i32,
    pub k_max: i32,
    pub origin: CubeOrigin,
    /// Level `k` is weighted by `alpha^k`.
    pub alpha: f64,
}

impl CascadeConfig {
    /// Levels `-n..=n`, i.e. the partial sum `Z_n`.
    pub fn symmetric(dimension: usize, n: i32) -> Self {
        Self { dimension, k_min: -n, k_max: n, origin: CubeOrigin::HalfOpen, alpha: 1.0 }
    }

    fn validate(&self) -> Result<()> {
        if self.k_min > self.k_max {
            return Err(Error::InvalidArgument(format!("k_min {} > k_max {}", self.k_min, self.k_max)));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::InvalidArgument(format!("alpha = {} must be positive", self.alpha)));
        }
        if self.dimension == 0 || self.dimension > MAX_DIMENSION {
            return Err(Error::InvalidArgument(format!("dimension {} out of range", self.dimension)));
        }
        if self.k_min.abs() > 60 || self.k_max.abs() > 60 {
            return Err(Error::UnsupportedRange("cascade levels must lie in -60..=60".into()));
        }
        Ok(())
    }

    fn weight(&self, k: i32) -> f64 {
        self.alpha.powi(k)
    }
}

/// Smallest `k` such that the points lie in different half-open cubes of side `2^-k`.
pub fn split_level(x1: &[f64], x2: &[f64]) -> Result<i32> {
    if x1.len() != x2.len() {
        return Err(Error::InvalidArgument("points of different dimension".into()));
    }
    if x1.iter().chain(x2).any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidArgument("points must be finite and in [0, inf)^d".into()));
    }
    if x1 == x2 {
        return Err(Error::InvalidArgument("split level of a point with itself is infinite".into()));
    }
    let top = x1.iter().chain(x2).fold(1.0f64, |m, v| m.max(*v));
    // At k0 both points sit in the cube [0, 2^-k0).
    let mut k = -(top.log2().ceil() as i32) - 1;
    while k < MAX_SPLIT_DEPTH {
        if !same_cube(x1, x2, k, CubeOrigin::HalfOpen, &[0.0; MAX_DIMENSION]) {
            return Ok(k);
        }
        k += 1;
    }
    Err(Error::InvalidArgument("points do not separate".into()))
}

fn cube_index(x: f64, k: i32, origin: CubeOrigin, shift: f64) -> i64 {
    let scaled = match origin {
        CubeOrigin::HalfOpen => x * 2f64.powi(k),
        CubeOrigin::Centered => x * 2f64.powi(k) + 0.5,
        CubeOrigin::Shifted => (x + shift) * 2f64.powi(k),
    };
    scaled.floor() as i64
}

fn same_cube(x1: &[f64], x2: &[f64], k: i32, origin: CubeOrigin, shift: &[f64]) -> bool {
    (0..x1.len()).all(|a| cube_index(x1[a], k, origin, shift[a]) == cube_index(x2[a], k, origin, shift[a]))
}

pub struct CascadeSampler {
    grid: LatticeGrid,
    config: CascadeConfig,
}

impl CascadeSampler {
    pub fn new(grid: LatticeGrid, config: CascadeConfig) -> Result<Self> {
        config.validate()?;
        if grid.dimension() != config.dimension {
            return Err(Error::GridMismatch(format!(
                "cascade dimension {} on a {}-dimensional grid",
                config.dimension,
                grid.dimension()
            )));
        }
        Ok(Self { grid, config })
    }

    pub fn config(&self) -> &CascadeConfig {
        &self.config
    }

    fn shift(&self, key: SeededRng) -> [f64; MAX_DIMENSION] {
        let mut s = [0.0; MAX_DIMENSION];
        if self.config.origin == CubeOrigin::Shifted {
            let side = 2f64.powi(-self.config.k_min);
            for (a, v) in s.iter_mut().enumerate().take(self.config.dimension) {
                *v = side * hashed_uniform(&[SHIFT_TAG, key.seed, key.stream, a as u64]);
            }
        }
        s
    }

    fn cube_value(&self, key: SeededRng, k: i32, idx: &[i64]) -> f64 {
        let mut parts = [0u64; 5 + MAX_DIMENSION];
        parts[0] = LEVEL_TAG;
        parts[1] = key.seed;
        parts[2] = key.stream;
        parts[3] = k as i64 as u64;
        parts[4] = idx.len() as u64;
        for (p, i) in parts[5..].iter_mut().zip(idx) {
            *p = *i as u64;
        }
        hashed_normal(&parts[..5 + idx.len()])
    }

    fn level_at(&self, key: SeededRng, k: i32, x: &[f64], shift: &[f64]) -> f64 {
        let mut idx = [0i64; MAX_DIMENSION];
        for a in 0..x.len() {
            idx[a] = cube_index(x[a], k, self.config.origin, shift[a]);
        }
        self.cube_value(key, k, &idx[..x.len()])
    }

    /// `Y_k` at arbitrary points of `[0, inf)^d`.
    pub fn level_at_points(&self, k: i32, points: &[Vec<f64>], key: SeededRng) -> Vec<f64> {
        let shift = self.shift(key);
        points.iter().map(|x| self.level_at(key, k, x, &shift)).collect()
    }

    /// `sum_k alpha^k Y_k` at arbitrary points.
    pub fn sample_points(&self, points: &[Vec<f64>], key: SeededRng) -> Vec<f64> {
        let shift = self.shift(key);
        points
            .iter()
            .map(|x| {
                (self.config.k_min..=self.config.k_max)
                    .map(|k| self.config.weight(k) * self.level_at(key, k, x, &shift))
                    .sum()
            })
            .collect()
    }

    /// The single level `Y_k` (unweighted) on the grid sites.
    pub fn sample_level(&self, k: i32, key: SeededRng) -> Result<LatticeField> {
        let side = 2f64.powi(-k);
        if side < self.grid.spacing() {
            return Err(Error::Unresolvable(format!(
                "cube side 2^-{k} = {side} is below the grid spacing {}",
                self.grid.spacing()
            )));
        }
        let shift = self.shift(key);
        let d = self.config.dimension;
        let values = (0..self.grid.site_count())
            .map(|flat| self.level_at(key, k, &self.grid.coords(flat)[..d], &shift))
            .collect();
        LatticeField::new(self.grid, values, false, self.meta(key))
    }

    /// Expected `Cov(Z(x), Z(y))` for this level range and origin convention.
    pub fn covariance(&self, x: &[f64], y: &[f64]) -> f64 {
        let c = &self.config;
        (c.k_min..=c.k_max)
            .map(|k| {
                let w = c.weight(k).powi(2);
                match c.origin {
                    CubeOrigin::Shifted => {
                        let side = 2f64.powi(k);
                        w * x.iter().zip(y).map(|(a, b)| (1.0 - (a - b).abs() * side).max(0.0)).product::<f64>()
                    }
                    origin => {
                        if same_cube(x, y, k, origin, &[0.0; MAX_DIMENSION]) {
                            w
                        } else {
                            0.0
                        }
                    }
                }
            })
            .sum()
    }

    fn meta(&self, key: SeededRng) -> FieldMeta {
        FieldMeta {
            construction: Construction::Cascade,
            seed: key.seed,
            stream: key.stream,
            exponent: None,
            config: self.describe(),
        }
    }
}

impl Sampler for CascadeSampler {
    fn construction(&self) -> Construction {
        Construction::Cascade
    }

    fn grid(&self) -> &LatticeGrid {
        &self.grid
    }

    fn modulo_constant(&self) -> bool {
        false
    }

    fn sample(&self, key: SeededRng) -> Result<LatticeField> {
        let d = self.config.dimension;
        let points: Vec<Vec<f64>> =
            (0..self.grid.site_count()).map(|flat| self.grid.coords(flat)[..d].to_vec()).collect();
        let values = self.sample_points(&points, key);
        LatticeField::new(self.grid, values, false, self.meta(key))
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({
            "levels": [self.config.k_min, self.config.k_max],
            "alpha": self.config.alpha,
            "origin": self.config.origin,
        })
    }

    fn pairing_covariance(&self, f: &LatticeFunction, g: &LatticeFunction) -> Option<f64> {
        let d = self.config.dimension;
        let dv = self.grid.cell_volume();
        let fs = f.sparse();
        let gs = g.sparse();
        let mut total = 0.0;
        for &(i, a) in &fs {
            let x = self.grid.coords(i);
            for &(j, b) in &gs {
                let y = self.grid.coords(j);
                total += a * b * self.covariance(&x[..d], &y[..d]);
            }
        }
        Some(total * dv * dv)
    }
}
