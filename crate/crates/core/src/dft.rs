//! Discrete Fourier transform on the lattice torus.
//!
//! Normalization (recorded in field headers as [`DFT_NORMALIZATION`]):
//! the forward transform returns the coefficients of `f` in the orthonormal
//! Fourier basis `e_n(x) = L^{-d/2} exp(i k.x)`, `k = 2 pi n / L`,
//!
//! ```text
//! c_n = dx^d L^{-d/2} sum_x f(x) exp(-i k.x),      f(x) = L^{-d/2} sum_n c_n exp(i k.x),
//! ```
//!
//! so that `dx^d sum |f|^2 = sum |c_n|^2`. Signed frequencies run over
//! `n in {-N/2, ..., N/2 - 1}` per axis; array slot `i` holds `n = i` for
//! `i < N/2` and `n = i - N` otherwise.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::Result;
use crate::field::{FieldMeta, LatticeField, TestFunction};
use crate::grid::LatticeGrid;
use crate::rng::SeededRng;

pub const DFT_NORMALIZATION: &str =
    "orthonormal-fourier-series: c_n = dx^d L^(-d/2) sum_x f(x) exp(-i k.x), k = 2 pi n / L";

thread_local! {
    static PLANS: RefCell<HashMap<(usize, bool), Arc<dyn Fft<f64>>>> = RefCell::new(HashMap::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|p| {
        p.borrow_mut()
            .entry((n, inverse))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                if inverse {
                    planner.plan_fft_inverse(n)
                } else {
                    planner.plan_fft_forward(n)
                }
            })
            .clone()
    })
}

/// Unnormalized in-place d-dimensional FFT over a row-major array.
pub fn fft_in_place(grid: &LatticeGrid, data: &mut [Complex64], inverse: bool) {
    let n = grid.points_per_axis();
    let d = grid.dimension();
    let fft = plan(n, inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    // Last axis is contiguous.
    fft.process_with_scratch(data, &mut scratch);
    if d == 1 {
        return;
    }
    let total = data.len();
    let mut lines = vec![Complex64::new(0.0, 0.0); total];
    for axis in 0..d - 1 {
        let stride = n.pow((d - 1 - axis) as u32);
        let outer = total / (stride * n);
        // gather: line (o, s) -> lines[(o * stride + s) * n + j]
        for o in 0..outer {
            for j in 0..n {
                let base = o * stride * n + j * stride;
                for s in 0..stride {
                    lines[(o * stride + s) * n + j] = data[base + s];
                }
            }
        }
        fft.process_with_scratch(&mut lines, &mut scratch);
        for o in 0..outer {
            for j in 0..n {
                let base = o * stride * n + j * stride;
                for s in 0..stride {
                    data[base + s] = lines[(o * stride + s) * n + j];
                }
            }
        }
    }
}

/// Fourier-series coefficients of a lattice function.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: LatticeGrid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn forward(grid: &LatticeGrid, values: &[f64]) -> Self {
        let mut coeffs: Vec<Complex64> = values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        fft_in_place(grid, &mut coeffs, false);
        let scale = grid.cell_volume() / grid.box_length().powf(grid.dimension() as f64 / 2.0);
        for c in coeffs.iter_mut() {
            *c *= scale;
        }
        Self { grid: *grid, coeffs }
    }

    pub fn from_coeffs(grid: LatticeGrid, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), grid.site_count());
        Self { grid, coeffs }
    }

    pub fn zeros(grid: LatticeGrid) -> Self {
        Self { coeffs: vec![Complex64::new(0.0, 0.0); grid.site_count()], grid }
    }

    /// Coefficients of a real white noise with `Cov[(W,f),(W,g)] = (f,g)`:
    /// for each pair `n != -n` a complex normal with independent parts of
    /// variance 1/2 (mirrored as its conjugate at `-n`); self-conjugate modes
    /// (`n = -n mod N`, e.g. zero and Nyquist) get a real normal of variance 1.
    pub fn white_noise(grid: &LatticeGrid, key: SeededRng) -> Self {
        let mut g = key.gaussians();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.site_count()];
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for flat in 0..coeffs.len() {
            let conj = grid.conjugate_mode(flat);
            if conj == flat {
                coeffs[flat] = Complex64::new(g.standard_normal(), 0.0);
            } else if flat < conj {
                let z = Complex64::new(h * g.standard_normal(), h * g.standard_normal());
                coeffs[flat] = z;
                coeffs[conj] = z.conj();
            }
        }
        Self { grid: *grid, coeffs }
    }

    pub fn grid(&self) -> &LatticeGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Signed frequency multi-index of a slot.
    pub fn frequency(&self, flat: usize) -> Vec<i64> {
        let idx = self.grid.unravel(flat);
        (0..self.grid.dimension()).map(|a| self.grid.signed_frequency(idx[a])).collect()
    }

    /// Multiplies each coefficient by `symbol(|k|^2)`; the zero mode is set to `zero_mode`.
    pub fn apply_symbol(&mut self, symbol: impl Fn(f64) -> f64, zero_mode: Option<Complex64>) {
        for (flat, c) in self.coeffs.iter_mut().enumerate() {
            if flat == 0 {
                if let Some(z) = zero_mode {
                    *c = z;
                    continue;
                }
            }
            *c *= symbol(self.grid.wavenumber_sq(flat));
        }
    }

    /// `c <- c + a * other * weight(k)` slot by slot.
    pub fn accumulate_weighted(&mut self, other: &Spectrum, weights: &[f64]) {
        for ((c, o), w) in self.coeffs.iter_mut().zip(&other.coeffs).zip(weights) {
            *c += o * *w;
        }
    }

    /// Inverse transform; returns the real part.
    pub fn inverse_real(&self) -> Vec<f64> {
        let mut data = self.coeffs.clone();
        fft_in_place(&self.grid, &mut data, true);
        let scale = self.grid.box_length().powf(-(self.grid.dimension() as f64) / 2.0);
        data.into_iter().map(|c| c.re * scale).collect()
    }

    pub fn inverse_complex(&self) -> Vec<Complex64> {
        let mut data = self.coeffs.clone();
        fft_in_place(&self.grid, &mut data, true);
        let scale = self.grid.box_length().powf(-(self.grid.dimension() as f64) / 2.0);
        data.into_iter().map(|c| c * scale).collect()
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

pub fn dft_forward(f: &LatticeField) -> Spectrum {
    Spectrum::forward(f.grid(), f.values())
}

pub fn dft_inverse(spectrum: &Spectrum, modulo_constant: bool, meta: FieldMeta) -> Result<LatticeField> {
    LatticeField::new(spectrum.grid, spectrum.inverse_real(), modulo_constant, meta)
}

/// `sum_{k != 0} |k|^{2s} Re(f^(k) conj(g^(k)))`.
pub fn sobolev_inner_product(f: &TestFunction, g: &TestFunction, s: f64) -> Result<f64> {
    f.grid().same_as(g.grid())?;
    let grid = *f.grid();
    let fh = Spectrum::forward(&grid, f.values());
    let gh = Spectrum::forward(&grid, g.values());
    Ok(weighted_cross_energy(&fh, &gh, |k2| k2.powf(s)))
}

/// `sum_{k != 0} w(|k|^2) Re(a_k conj(b_k))`.
pub fn weighted_cross_energy(a: &Spectrum, b: &Spectrum, weight: impl Fn(f64) -> f64) -> f64 {
    let grid = a.grid;
    a.coeffs
        .iter()
        .zip(&b.coeffs)
        .enumerate()
        .skip(1)
        .map(|(flat, (x, y))| weight(grid.wavenumber_sq(flat)) * (x * y.conj()).re)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{project_mean_zero, LatticeFunction};
    use std::f64::consts::PI;

    fn naive_dft(grid: &LatticeGrid, values: &[f64]) -> Vec<Complex64> {
        let n = grid.site_count();
        let l = grid.box_length();
        let d = grid.dimension();
        let scale = grid.cell_volume() / l.powf(d as f64 / 2.0);
        (0..n)
            .map(|m| {
                let idx = grid.unravel(m);
                let freq: Vec<f64> = (0..d).map(|a| grid.signed_frequency(idx[a]) as f64 * 2.0 * PI / l).collect();
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, v) in values.iter().enumerate() {
                    let x = grid.coords(j);
                    let phase: f64 = (0..d).map(|a| freq[a] * x[a]).sum();
                    acc += Complex64::from_polar(*v, -phase);
                }
                acc * scale
            })
            .collect()
    }

    #[test]
    fn matches_naive_transform() {
        for (d, n) in [(1, 8), (2, 4), (3, 4)] {
            let grid = LatticeGrid::new(d, n, 1.7).unwrap();
            let values: Vec<f64> = (0..grid.site_count()).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
            let fast = Spectrum::forward(&grid, &values);
            let slow = naive_dft(&grid, &values);
            for (a, b) in fast.coeffs().iter().zip(&slow) {
                assert!((a - b).norm() < 1e-12, "d={d}");
            }
        }
    }

    #[test]
    fn constant_field_has_only_zero_mode() {
        let grid = LatticeGrid::new(2, 8, 2.0).unwrap();
        let s = Spectrum::forward(&grid, &vec![3.0; 64]);
        assert!((s.coeffs()[0].re - 3.0 * 2.0).abs() < 1e-12);
        assert!(s.coeffs()[1..].iter().all(|c| c.norm() < 1e-12));
    }

    #[test]
    fn cosine_mode_splits_between_plus_minus_one() {
        let l = 2.0;
        let grid = LatticeGrid::new(1, 16, l).unwrap();
        let f = LatticeFunction::from_fn(grid, |x| (2.0 * PI * x[0] / l).cos()).unwrap();
        let s = Spectrum::forward(&grid, f.values());
        let a = s.coeffs()[1];
        let b = s.coeffs()[15];
        assert!((a - b).norm() < 1e-12);
        assert!((a.re - l.sqrt() / 2.0).abs() < 1e-12);
        let rest: f64 = s.coeffs().iter().enumerate().filter(|(i, _)| *i != 1 && *i != 15).map(|(_, c)| c.norm()).sum();
        assert!(rest < 1e-12);
    }

    #[test]
    fn roundtrip_and_parseval() {
        let grid = LatticeGrid::new(2, 16, 3.0).unwrap();
        let mut g = SeededRng::new(5, 0).gaussians();
        let values: Vec<f64> = (0..grid.site_count()).map(|_| g.standard_normal()).collect();
        let s = Spectrum::forward(&grid, &values);
        let back = s.inverse_real();
        let err = values.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12);
        let site_energy: f64 = values.iter().map(|v| v * v).sum::<f64>() * grid.cell_volume();
        assert!((site_energy - s.energy()).abs() < 1e-10 * site_energy);
    }

    #[test]
    fn white_noise_spectrum_is_hermitian() {
        let grid = LatticeGrid::new(2, 8, 1.0).unwrap();
        let s = Spectrum::white_noise(&grid, SeededRng::new(3, 1));
        for flat in 0..grid.site_count() {
            let c = s.coeffs()[flat];
            let m = s.coeffs()[grid.conjugate_mode(flat)];
            assert_eq!(c, m.conj());
        }
        let x = s.inverse_complex();
        assert!(x.iter().all(|z| z.im.abs() < 1e-12));
    }

    #[test]
    fn sobolev_single_sine_mode() {
        let l = 1.5;
        let grid = LatticeGrid::new(1, 32, l).unwrap();
        let f = LatticeFunction::from_fn(grid, |x| (2.0 / l).sqrt() * (2.0 * PI * x[0] / l).sin()).unwrap();
        let f = project_mean_zero(&f).unwrap();
        let v = sobolev_inner_product(&f, &f, 1.0).unwrap();
        assert!((v - (2.0 * PI / l).powi(2)).abs() < 1e-10);
        let z = TestFunction::zeros(grid);
        assert_eq!(sobolev_inner_product(&z, &z, 1.0).unwrap(), 0.0);
    }
}
