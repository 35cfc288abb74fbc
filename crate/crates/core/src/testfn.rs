//! Analytic test-function profiles and their lattice discretization.
//!
//! A profile is a weighted sum of smooth compactly supported bumps
//! `b(z) = w * exp(1 - 1/(1 - |z-c|^2/R^2)) / (R^d I_d)`, normalized so each
//! bump integrates to its weight `w`. Discretizing samples the profile at the
//! sites and projects out the lattice mean.

use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{compensated_sum, LatticeFunction, TestFunction};
use crate::grid::{LatticeGrid, MAX_DIMENSION};
use crate::quadrature::integrate;

/// `I_d = int_{|u|<1} exp(1 - 1/(1-|u|^2)) du` for d = 1..4.
static BUMP_MASS: Lazy<[f64; MAX_DIMENSION]> = Lazy::new(|| {
    let mut out = [0.0; MAX_DIMENSION];
    for (i, slot) in out.iter_mut().enumerate() {
        let d = i + 1;
        let radial = integrate(|r| bump_shape(r) * r.powi(d as i32 - 1), 0.0, 1.0, 1e-15, 1e-14);
        *slot = unit_sphere_area(d) * radial;
    }
    out
});

/// Surface area of the unit sphere in R^d (`d * v_d`).
pub fn unit_sphere_area(d: usize) -> f64 {
    d as f64 * unit_ball_volume(d)
}

/// Volume `v_d` of the unit ball in R^d for d = 1..4.
pub fn unit_ball_volume(d: usize) -> f64 {
    use std::f64::consts::PI;
    match d {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        4 => PI * PI / 2.0,
        _ => panic!("unit ball volume requested for d = {d}"),
    }
}

/// Unnormalized bump `exp(1 - 1/(1 - r^2))` on `r < 1`, with value 1 at the center.
pub fn bump_shape(r: f64) -> f64 {
    let t = 1.0 - r * r;
    if t <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / t).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Vec<f64>,
    pub radius: f64,
    pub weight: f64,
}

impl Bump {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let d = self.center.len();
        let r2: f64 = self.center.iter().zip(x).map(|(c, xi)| (xi - c).powi(2)).sum();
        let r = r2.sqrt() / self.radius;
        if r >= 1.0 {
            return 0.0;
        }
        self.weight * bump_shape(r) / (self.radius.powi(d as i32) * BUMP_MASS[d - 1])
    }
}

/// A weighted sum of bumps whose weights sum to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionSpec {
    pub bumps: Vec<Bump>,
}

impl TestFunctionSpec {
    pub fn new(bumps: Vec<Bump>) -> Result<Self> {
        let d = bumps.first().map(|b| b.center.len()).unwrap_or(0);
        if bumps.is_empty() || d == 0 || d > MAX_DIMENSION {
            return Err(Error::InvalidArgument("test function needs at least one bump in 1..=4 dims".into()));
        }
        if bumps.iter().any(|b| b.center.len() != d || !(b.radius > 0.0)) {
            return Err(Error::InvalidArgument("bumps must share a dimension and have positive radius".into()));
        }
        let total: f64 = bumps.iter().map(|b| b.weight).sum();
        let scale: f64 = bumps.iter().map(|b| b.weight.abs()).sum();
        if total.abs() > 1e-12 * scale {
            return Err(Error::InvalidArgument(format!("bump weights sum to {total}, not zero")));
        }
        Ok(Self { bumps })
    }

    /// `+1` bump at `plus` minus a `-1` bump at `minus`, both of radius `radius`.
    pub fn dipole(plus: &[f64], minus: &[f64], radius: f64) -> Result<Self> {
        Self::new(vec![
            Bump { center: plus.to_vec(), radius, weight: 1.0 },
            Bump { center: minus.to_vec(), radius, weight: -1.0 },
        ])
    }

    pub fn dimension(&self) -> usize {
        self.bumps[0].center.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.bumps.iter().map(|b| b.eval(x)).sum()
    }

    /// `phi_a(z) = a^{-d} phi(o + (z - o)/a)`.
    pub fn dilated(&self, a: f64, origin: &[f64]) -> Self {
        let bumps = self
            .bumps
            .iter()
            .map(|b| Bump {
                center: b.center.iter().zip(origin).map(|(c, o)| o + a * (c - o)).collect(),
                radius: a * b.radius,
                weight: b.weight,
            })
            .collect();
        Self { bumps }
    }

    pub fn translated(&self, shift: &[f64]) -> Self {
        let bumps = self
            .bumps
            .iter()
            .map(|b| Bump {
                center: b.center.iter().zip(shift).map(|(c, s)| c + s).collect(),
                radius: b.radius,
                weight: b.weight,
            })
            .collect();
        Self { bumps }
    }

    /// Coordinates permuted: new axis `i` takes old axis `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let bumps = self
            .bumps
            .iter()
            .map(|b| Bump { center: perm.iter().map(|&p| b.center[p]).collect(), radius: b.radius, weight: b.weight })
            .collect();
        Self { bumps }
    }

    /// Smallest axis-aligned box `[lo, hi]` containing the support.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.dimension();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for b in &self.bumps {
            for a in 0..d {
                lo[a] = lo[a].min(b.center[a] - b.radius);
                hi[a] = hi[a].max(b.center[a] + b.radius);
            }
        }
        (lo, hi)
    }

    /// Largest extent of the support along any axis.
    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        lo.iter().zip(&hi).map(|(l, h)| h - l).fold(0.0, f64::max)
    }

    /// Samples the profile at the sites of `grid` and enforces zero sum.
    /// The support must lie inside `[0, box_length)^d`.
    pub fn discretize(&self, grid: &LatticeGrid) -> Result<TestFunction> {
        let d = grid.dimension();
        if d != self.dimension() {
            return Err(Error::GridMismatch(format!(
                "test function in {} dims on a {d}-dimensional grid",
                self.dimension()
            )));
        }
        let (lo, hi) = self.bounding_box();
        let l = grid.box_length();
        if lo.iter().any(|v| *v < 0.0) || hi.iter().any(|v| *v >= l) {
            return Err(Error::SupportTooLarge(format!("support {lo:?}..{hi:?} leaves [0, {l})^{d}")));
        }
        let dx = grid.spacing();
        let n = grid.points_per_axis();
        let mut values = vec![0.0; grid.site_count()];
        let dv = grid.cell_volume();
        for b in &self.bumps {
            let mut lo_i = [0usize; MAX_DIMENSION];
            let mut hi_i = [0usize; MAX_DIMENSION];
            for a in 0..d {
                lo_i[a] = ((b.center[a] - b.radius) / dx).floor().max(0.0) as usize;
                hi_i[a] = (((b.center[a] + b.radius) / dx).ceil() as usize).min(n - 1);
            }
            let mut sites = Vec::new();
            for_each_in_box(d, &lo_i, &hi_i, |idx| {
                let flat = grid.ravel(idx);
                let x = grid.coords(flat);
                let v = b.eval(&x[..d]);
                if v != 0.0 {
                    sites.push((flat, v));
                }
            });
            // Each bump carries exactly its weight on the lattice.
            let mass = compensated_sum(sites.iter().map(|(_, v)| v * dv));
            if mass == 0.0 {
                return Err(Error::Unresolvable(format!("bump of radius {} misses every site", b.radius)));
            }
            let scale = b.weight / mass;
            for (flat, v) in sites {
                values[flat] += v * scale;
            }
        }
        // Remove the rounding residue at the largest site; the support is unchanged.
        let residue = compensated_sum(values.iter().copied());
        if residue != 0.0 {
            let (imax, _) = values
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) });
            values[imax] -= residue;
        }
        TestFunction::new(LatticeFunction::new(*grid, values)?)
    }
}

/// Calls `f` on every multi-index in the inclusive box `[lo, hi]`.
pub(crate) fn for_each_in_box(d: usize, lo: &[usize], hi: &[usize], mut f: impl FnMut(&[usize])) {
    let mut idx = [0usize; MAX_DIMENSION];
    idx[..d].copy_from_slice(&lo[..d]);
    loop {
        f(&idx[..d]);
        let mut axis = d;
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            if idx[axis] < hi[axis] {
                idx[axis] += 1;
                break;
            }
            idx[axis] = lo[axis];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bumps_integrate_to_weight() {
        for d in 1..=3 {
            let n = if d == 3 { 128 } else { 256 };
            let g = LatticeGrid::new(d, n, 1.0).unwrap();
            let b = Bump { center: vec![0.5; d], radius: 0.2, weight: 2.0 };
            let f = LatticeFunction::from_fn(g, |x| b.eval(x)).unwrap();
            assert!((f.integral() - 2.0).abs() < 1e-6, "d={d}: {}", f.integral());
        }
    }

    #[test]
    fn dipole_discretizes_mean_zero() {
        let g = LatticeGrid::new(2, 64, 1.0).unwrap();
        let spec = TestFunctionSpec::dipole(&[0.4, 0.5], &[0.6, 0.5], 0.05).unwrap();
        let phi = spec.discretize(&g).unwrap();
        assert!(phi.as_function().is_mean_zero());
        assert!((phi.support_center()[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn dilation_maps_centers_and_radii() {
        let spec = TestFunctionSpec::dipole(&[0.45], &[0.55], 0.01).unwrap();
        let s2 = spec.dilated(2.0, &[0.5]);
        assert!((s2.bumps[0].center[0] - 0.4).abs() < 1e-15);
        assert!((s2.bumps[1].radius - 0.02).abs() < 1e-15);
        // phi_a(z) = a^{-d} phi(o + (z-o)/a)
        let z = [0.43];
        let direct = spec.eval(&[0.5 + (z[0] - 0.5) / 2.0]) / 2.0;
        assert!((s2.eval(&z) - direct).abs() < 1e-9 * direct.abs().max(1.0));
    }

    #[test]
    fn support_outside_box_rejected() {
        let g = LatticeGrid::new(1, 64, 1.0).unwrap();
        let spec = TestFunctionSpec::dipole(&[0.02], &[0.5], 0.05).unwrap();
        assert!(matches!(spec.discretize(&g), Err(Error::SupportTooLarge(_))));
        assert!(TestFunctionSpec::new(vec![Bump { center: vec![0.5], radius: 0.1, weight: 1.0 }]).is_err());
    }
}
