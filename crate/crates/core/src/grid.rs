//! Periodic lattice geometry.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIMENSION: usize = 4;

/// A `d`-dimensional periodic lattice with `n` points per axis on a torus of
/// side `box_length`. Sites are stored row-major (last axis fastest).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeGrid {
    dimension: usize,
    points_per_axis: usize,
    box_length: f64,
}

impl LatticeGrid {
    pub fn new(dimension: usize, points_per_axis: usize, box_length: f64) -> Result<Self> {
        if dimension == 0 || dimension > MAX_DIMENSION {
            return Err(Error::InvalidGrid(format!(
                "dimension {dimension} outside 1..={MAX_DIMENSION}"
            )));
        }
        if points_per_axis < 2 || !points_per_axis.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis {points_per_axis} is not a power of two >= 2"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::InvalidGrid(format!("box length {box_length} must be positive")));
        }
        points_per_axis
            .checked_pow(dimension as u32)
            .ok_or_else(|| Error::InvalidGrid("site count overflows".into()))?;
        Ok(Self { dimension, points_per_axis, box_length })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.points_per_axis as f64
    }

    /// Volume of one lattice cell, `dx^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dimension as i32)
    }

    pub fn site_count(&self) -> usize {
        self.points_per_axis.pow(self.dimension as u32)
    }

    /// Multi-index of a flat site index.
    pub fn unravel(&self, mut flat: usize) -> [usize; MAX_DIMENSION] {
        let mut idx = [0usize; MAX_DIMENSION];
        for axis in (0..self.dimension).rev() {
            idx[axis] = flat % self.points_per_axis;
            flat /= self.points_per_axis;
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx[..self.dimension]
            .iter()
            .fold(0, |acc, &i| acc * self.points_per_axis + i % self.points_per_axis)
    }

    /// Physical coordinates of a site in `[0, box_length)^d`.
    pub fn coords(&self, flat: usize) -> [f64; MAX_DIMENSION] {
        let idx = self.unravel(flat);
        let dx = self.spacing();
        let mut x = [0.0; MAX_DIMENSION];
        for axis in 0..self.dimension {
            x[axis] = idx[axis] as f64 * dx;
        }
        x
    }

    /// Nearest site to a physical point (coordinates taken modulo the box).
    pub fn nearest_site(&self, point: &[f64]) -> usize {
        let dx = self.spacing();
        let n = self.points_per_axis as i64;
        let mut idx = [0usize; MAX_DIMENSION];
        for axis in 0..self.dimension {
            let i = (point[axis] / dx).round() as i64;
            idx[axis] = i.rem_euclid(n) as usize;
        }
        self.ravel(&idx)
    }

    /// Signed frequency index in `{-N/2, ..., N/2 - 1}` for array index `i`.
    pub fn signed_frequency(&self, i: usize) -> i64 {
        let n = self.points_per_axis as i64;
        let i = i as i64;
        if i >= n / 2 { i - n } else { i }
    }

    /// Squared wavenumber `|k|^2` of the spectral mode stored at flat index
    /// `flat`, with `k = 2 pi n / box_length` componentwise.
    pub fn wavenumber_sq(&self, flat: usize) -> f64 {
        let idx = self.unravel(flat);
        let scale = 2.0 * std::f64::consts::PI / self.box_length;
        (0..self.dimension)
            .map(|axis| {
                let k = self.signed_frequency(idx[axis]) as f64 * scale;
                k * k
            })
            .sum()
    }

    /// Flat index of the mode `-n` (mod N) paired with `flat` under Hermitian symmetry.
    pub fn conjugate_mode(&self, flat: usize) -> usize {
        let idx = self.unravel(flat);
        let n = self.points_per_axis;
        let mut conj = [0usize; MAX_DIMENSION];
        for axis in 0..self.dimension {
            conj[axis] = (n - idx[axis]) % n;
        }
        self.ravel(&conj)
    }

    /// Minimum-image displacement from `a` to `b` along each axis.
    pub fn periodic_delta(&self, a: &[f64], b: &[f64]) -> [f64; MAX_DIMENSION] {
        let l = self.box_length;
        let mut out = [0.0; MAX_DIMENSION];
        for axis in 0..self.dimension {
            let mut t = b[axis] - a[axis];
            t -= l * (t / l).round();
            out[axis] = t;
        }
        out
    }

    /// The `(d-1)`-dimensional grid obtained by fixing one coordinate.
    pub fn sliced(&self) -> Result<Self> {
        if self.dimension < 2 {
            return Err(Error::InvalidArgument("cannot slice a 1-dimensional grid".into()));
        }
        Self::new(self.dimension - 1, self.points_per_axis, self.box_length)
    }

    pub fn same_as(&self, other: &Self) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(LatticeGrid::new(0, 8, 1.0).is_err());
        assert!(LatticeGrid::new(5, 8, 1.0).is_err());
        assert!(LatticeGrid::new(2, 12, 1.0).is_err());
        assert!(LatticeGrid::new(2, 8, -1.0).is_err());
        assert!(LatticeGrid::new(2, 8, f64::NAN).is_err());
    }

    #[test]
    fn ravel_roundtrip_and_coords() {
        let g = LatticeGrid::new(3, 4, 2.0).unwrap();
        assert_eq!(g.site_count(), 64);
        for flat in 0..g.site_count() {
            assert_eq!(g.ravel(&g.unravel(flat)), flat);
        }
        let x = g.coords(g.ravel(&[1, 2, 3]));
        assert_eq!(&x[..3], &[0.5, 1.0, 1.5]);
    }

    #[test]
    fn frequencies_cover_symmetric_range() {
        let g = LatticeGrid::new(1, 8, 1.0).unwrap();
        let f: Vec<i64> = (0..8).map(|i| g.signed_frequency(i)).collect();
        assert_eq!(f, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert_eq!(g.conjugate_mode(1), 7);
        assert_eq!(g.conjugate_mode(4), 4);
        assert_eq!(g.conjugate_mode(0), 0);
    }
}
