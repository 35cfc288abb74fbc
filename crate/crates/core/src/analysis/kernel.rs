//! Deterministic kernel-pairing oracles.

use std::collections::HashMap;
use std::sync::Mutex;

use once_cell::sync::Lazy;

use crate::error::{Error, Result};
use crate::field::{LatticeFunction, TestFunction};
use crate::grid::{LatticeGrid, MAX_DIMENSION};
use crate::quadrature::{integrate, integrate_with_breaks};
use crate::sampler::split_level;

/// `dx^{2d} sum_{y,z} K(z - y) f(y) g(z)`, with `K` given on minimum-image
/// lattice offsets. Returns the value and the largest offset length seen.
pub fn kernel_pairing(f: &LatticeFunction, g: &LatticeFunction, kernel: impl Fn(&[i64]) -> f64) -> Result<(f64, f64)> {
    f.grid().same_as(g.grid())?;
    let grid = *f.grid();
    let d = grid.dimension();
    let n = grid.points_per_axis() as i64;
    let fs = f.sparse();
    let gs = g.sparse();
    let gi: Vec<([usize; MAX_DIMENSION], f64)> = gs.iter().map(|&(j, b)| (grid.unravel(j), b)).collect();
    let mut total = 0.0;
    let mut widest = 0i64;
    let mut off = [0i64; MAX_DIMENSION];
    for &(i, a) in &fs {
        let ii = grid.unravel(i);
        let mut row = 0.0;
        for (jj, b) in &gi {
            let mut r2 = 0;
            for ax in 0..d {
                let mut t = jj[ax] as i64 - ii[ax] as i64;
                t = (t + n / 2).rem_euclid(n) - n / 2;
                off[ax] = t;
                r2 += t * t;
            }
            widest = widest.max(r2);
            row += b * kernel(&off[..d]);
        }
        total += a * row;
    }
    let dv = grid.cell_volume();
    Ok((total * dv * dv, (widest as f64).sqrt() * grid.spacing()))
}

/// `int int -log|y - z| phi1(y) phi2(z)` as a double lattice sum in which each
/// site pair carries the average of `-log` over its two cells; near offsets
/// are integrated numerically and far ones expanded in moments.
pub fn log_kernel_pairing(phi1: &TestFunction, phi2: &TestFunction) -> Result<f64> {
    let grid = *phi1.grid();
    let d = grid.dimension();
    if d > 3 {
        return Err(Error::UnsupportedRange("log-kernel pairing is implemented for d <= 3".into()));
    }
    let shift = -grid.spacing().ln();
    let (v, widest) = kernel_pairing(phi1.as_function(), phi2.as_function(), |off| shift + cell_log_average(off))?;
    check_span(&grid, widest)?;
    Ok(v)
}

/// Supports further apart than a quarter box would feel the periodic images.
pub(crate) fn check_span(grid: &LatticeGrid, widest: f64) -> Result<()> {
    let limit = grid.box_length() / 4.0;
    if widest > limit + 0.5 * grid.spacing() {
        return Err(Error::SupportTooLarge(format!("supports span {widest}, beyond a quarter of the box ({limit})")));
    }
    Ok(())
}

/// Offsets with every component at most this far are integrated directly.
fn near_radius(d: usize) -> i64 {
    match d {
        1 => 3,
        2 => 3,
        _ => 1,
    }
}

static CELL_LOG: Lazy<Mutex<HashMap<(usize, [i64; MAX_DIMENSION]), f64>>> = Lazy::new(|| Mutex::new(HashMap::new()));

/// `E[-log|j + D|]` in lattice units, `D = U - V` a difference of independent
/// uniform points of the unit cell (density `prod (1 - |t_i|)` on `[-1,1]^d`).
pub fn cell_log_average(offset: &[i64]) -> f64 {
    let d = offset.len();
    let mut key = [0i64; MAX_DIMENSION];
    for (k, o) in key.iter_mut().zip(offset) {
        *k = o.abs();
    }
    key[..d].sort_unstable();
    if key[..d].iter().any(|&o| o > near_radius(d)) {
        return far_cell_log_average(&key[..d]);
    }
    if let Some(v) = CELL_LOG.lock().unwrap().get(&(d, key)) {
        return *v;
    }
    let v = near_cell_log_average(&key[..d]);
    CELL_LOG.lock().unwrap().insert((d, key), v);
    v
}

fn tent(t: f64) -> f64 {
    1.0 - t.abs()
}

fn near_cell_log_average(j: &[i64]) -> f64 {
    let (abs, rel) = (1e-14, 1e-12);
    let jf: Vec<f64> = j.iter().map(|&v| v as f64).collect();
    match j.len() {
        1 => integrate_with_breaks(|t| tent(t) * -(jf[0] + t).abs().ln(), -1.0, 1.0, &[0.0, -jf[0]], abs, rel),
        2 => integrate_with_breaks(
            |t1| {
                let a = jf[0] + t1;
                tent(t1)
                    * integrate_with_breaks(
                        |t2| {
                            let b = jf[1] + t2;
                            tent(t2) * -0.5 * (a * a + b * b).ln()
                        },
                        -1.0,
                        1.0,
                        &[0.0, -jf[1]],
                        abs,
                        rel,
                    )
            },
            -1.0,
            1.0,
            &[0.0, -jf[0]],
            abs,
            rel,
        ),
        _ => integrate_with_breaks(
            |t1| {
                let a = jf[0] + t1;
                tent(t1)
                    * integrate_with_breaks(
                        |t2| {
                            let b = jf[1] + t2;
                            tent(t2)
                                * integrate_with_breaks(
                                    |t3| {
                                        let c = jf[2] + t3;
                                        tent(t3) * -0.5 * (a * a + b * b + c * c).ln()
                                    },
                                    -1.0,
                                    1.0,
                                    &[0.0, -jf[2]],
                                    1e-12,
                                    1e-10,
                                )
                        },
                        -1.0,
                        1.0,
                        &[0.0, -jf[1]],
                        1e-12,
                        1e-10,
                    )
            },
            -1.0,
            1.0,
            &[0.0, -jf[0]],
            1e-12,
            1e-10,
        ),
    }
}

/// Moment expansion `f(j) + (1/12) Lap f(j) + ...` of the cell average.
fn far_cell_log_average(j: &[i64]) -> f64 {
    let d = j.len();
    let r2: f64 = j.iter().map(|&v| (v * v) as f64).sum();
    let base = -0.5 * r2.ln();
    if d == 1 {
        // E D^2 = 1/6, E D^4 = 1/15, E D^6 = 1/28.
        return base + 1.0 / (12.0 * r2) + 1.0 / (60.0 * r2 * r2) + 1.0 / (168.0 * r2 * r2 * r2);
    }
    base - (d as f64 - 2.0) / (12.0 * r2)
}

/// `dx^{2d} sum L(y, z) phi1(y) phi2(z)` with the split level `L` of the
/// half-open dyadic cubes, capped at `k_max + 1` (the value for sites that
/// share every level up to `k_max`, including `y = z`).
pub fn cascade_kernel_pairing(phi1: &TestFunction, phi2: &TestFunction, k_max: i32) -> Result<f64> {
    phi1.grid().same_as(phi2.grid())?;
    let grid = *phi1.grid();
    let d = grid.dimension();
    let fs = phi1.as_function().sparse();
    let gs = phi2.as_function().sparse();
    let mut total = 0.0;
    for &(i, a) in &fs {
        let x = grid.coords(i);
        for &(j, b) in &gs {
            let level = if i == j {
                k_max + 1
            } else {
                let y = grid.coords(j);
                split_level(&x[..d], &y[..d])?.min(k_max + 1)
            };
            total += a * b * level as f64;
        }
    }
    let dv = grid.cell_volume();
    Ok(total * dv * dv)
}

/// Volume of the intersection of two balls of radius `rho` at distance `r`.
pub fn ball_overlap_volume(d: usize, rho: f64, r: f64) -> Result<f64> {
    if r >= 2.0 * rho {
        return Ok(0.0);
    }
    let v = match d {
        1 => 2.0 * rho - r,
        2 => 2.0 * rho * rho * (r / (2.0 * rho)).acos() - 0.5 * r * (4.0 * rho * rho - r * r).sqrt(),
        3 => std::f64::consts::PI * (4.0 * rho + r) * (2.0 * rho - r).powi(2) / 12.0,
        _ => return Err(Error::UnsupportedRange(format!("ball overlap in d = {d}"))),
    };
    Ok(v)
}

/// `|C_eps(a) ∩ C_eps(b)|` for `|a - b| = r`: the integral over `eps < y < 1/eps`
/// of the overlap of the two cross-sections of radius `y^{-1/d}`.
pub fn cone_overlap_volume(d: usize, r: f64, epsilon: f64) -> Result<f64> {
    // In w = log y the cross-section radius is exp(-w/d); overlap vanishes
    // once 2 rho < r, i.e. w > d log(2/r).
    let lam = (1.0 / epsilon).ln();
    let lo = -lam;
    let mut hi = lam;
    if r > 0.0 {
        hi = hi.min(d as f64 * (2.0 / r).ln());
    }
    if hi <= lo {
        return Ok(0.0);
    }
    if d > 3 {
        return Err(Error::UnsupportedRange(format!("cone overlap in d = {d}")));
    }
    Ok(integrate(
        |w| {
            let rho = (-w / d as f64).exp();
            w.exp() * ball_overlap_volume(d, rho, r).unwrap_or(0.0)
        },
        lo,
        hi,
        1e-13,
        1e-11,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfn::TestFunctionSpec;

    #[test]
    fn zero_offset_cell_average_is_three_halves_in_one_dimension() {
        assert!((cell_log_average(&[0]) - 1.5).abs() < 1e-11);
    }

    #[test]
    fn moment_expansion_continues_the_quadrature() {
        let near = near_cell_log_average(&[4]);
        let far = far_cell_log_average(&[4]);
        assert!((near - far).abs() < 1e-7, "{near} {far}");
        let near2 = near_cell_log_average(&[3, 4]);
        let far2 = far_cell_log_average(&[3, 4]);
        assert!((near2 - far2).abs() < 1e-4, "{near2} {far2}");
    }

    #[test]
    fn log_pairing_is_symmetric_and_blind_to_constants() {
        let grid = LatticeGrid::new(1, 256, 1.0).unwrap();
        let a = TestFunctionSpec::dipole(&[0.4], &[0.5], 0.03).unwrap().discretize(&grid).unwrap();
        let b = TestFunctionSpec::dipole(&[0.44], &[0.58], 0.03).unwrap().discretize(&grid).unwrap();
        let ab = log_kernel_pairing(&a, &b).unwrap();
        let ba = log_kernel_pairing(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-14 * ab.abs().max(1.0));
        let shift = -grid.spacing().ln();
        let (plus7, _) = kernel_pairing(a.as_function(), b.as_function(), |o| shift + cell_log_average(o) + 7.0).unwrap();
        assert!((plus7 - ab).abs() < 1e-10 * ab.abs().max(1.0));
    }

    #[test]
    fn wide_supports_are_rejected() {
        let grid = LatticeGrid::new(1, 256, 1.0).unwrap();
        let a = TestFunctionSpec::dipole(&[0.2], &[0.6], 0.03).unwrap().discretize(&grid).unwrap();
        assert!(matches!(log_kernel_pairing(&a, &a), Err(Error::SupportTooLarge(_))));
    }

    #[test]
    fn overlap_volumes() {
        assert_eq!(ball_overlap_volume(1, 1.0, 0.5).unwrap(), 1.5);
        let full = ball_overlap_volume(2, 1.0, 0.0).unwrap();
        assert!((full - std::f64::consts::PI).abs() < 1e-14);
        let eps = (-1.0f64).exp();
        assert!((cone_overlap_volume(1, 0.0, eps).unwrap() - 4.0).abs() < 1e-9);
        assert!((cone_overlap_volume(2, 0.0, eps).unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-9);
    }
}
