//! Deterministic identities: the inversion distance identity and discrete
//! radial polyharmonicity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Points closer than this to the origin or to each other are redrawn.
pub const INVERSION_MIN_NORM: f64 = 1e-3;
pub const INVERSION_MIN_SEPARATION: f64 = 1e-2;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `|z| |w| |z/|z|^2 - w/|w|^2|`, which equals `|z - w|`.
pub fn inverted_distance(z: &[f64], w: &[f64]) -> f64 {
    let (nz, nw) = (norm(z), norm(w));
    let (z2, w2) = (nz * nz, nw * nw);
    let diff: Vec<f64> = z.iter().zip(w).map(|(a, b)| a / z2 - b / w2).collect();
    nz * nw * norm(&diff)
}

/// Largest relative error of the inversion identity over `count` random pairs
/// in `[-1, 1]^d`.
pub fn inversion_identity_check(count: usize, dimension: usize, key: SeededRng) -> Result<f64> {
    if dimension == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let mut g = key.gaussians();
    let draw = |g: &mut crate::rng::GaussianStream| -> Vec<f64> {
        (0..dimension).map(|_| 2.0 * g.uniform() - 1.0).collect()
    };
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < count {
        let z = draw(&mut g);
        let w = draw(&mut g);
        let sep: Vec<f64> = z.iter().zip(&w).map(|(a, b)| a - b).collect();
        let direct = norm(&sep);
        if norm(&z) < INVERSION_MIN_NORM || norm(&w) < INVERSION_MIN_NORM || direct < INVERSION_MIN_SEPARATION {
            continue;
        }
        worst = worst.max((inverted_distance(&z, &w) - direct).abs() / direct);
        done += 1;
    }
    Ok(worst)
}

/// Radial profiles for the polyharmonic check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "k")]
pub enum RadialFunction {
    Log,
    /// `|x|^k`.
    Power(i32),
}

impl RadialFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        match *self {
            Self::Log => 0.5 * r2.ln(),
            Self::Power(k) => {
                if k % 2 == 0 {
                    r2.powi(k / 2)
                } else {
                    r2.sqrt().powi(k)
                }
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Log => "log|x|".into(),
            Self::Power(0) => "1".into(),
            Self::Power(k) => format!("|x|^{k}"),
        }
    }
}

/// Maximum of the iterated discrete Laplacian over the evaluation set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolyharmonicResidual {
    pub function: String,
    pub dimension: usize,
    pub spacing: f64,
    pub residual: f64,
}

/// Spacing of the fixed evaluation lattice; every stencil spacing used is a
/// power of two dividing it, so evaluation points are grid points at every
/// resolution.
pub const EVALUATION_SPACING: f64 = 0.125;

/// `max |Delta_h^{d/2} g|` over the points of `EVALUATION_SPACING Z^d` with
/// `0.25 <= |x| <= 0.75`, where `Delta_h` is the `(2d+1)`-point Laplacian.
pub fn radial_polyharmonic_residual(dimension: usize, g: RadialFunction, h: f64) -> Result<PolyharmonicResidual> {
    if dimension % 2 == 1 || !(dimension == 2 || dimension == 4) {
        return Err(Error::UnsupportedRange(format!(
            "polyharmonic check needs d in {{2, 4}}, got {dimension}"
        )));
    }
    if !(h > 0.0 && h <= 0.0625) {
        return Err(Error::InvalidArgument(format!("stencil spacing {h} must be in (0, 1/16]")));
    }
    let power = dimension / 2;
    let reach = (0.75 / EVALUATION_SPACING).floor() as i64;
    let mut worst = 0.0f64;
    let mut idx = vec![-reach; dimension];
    let mut x = vec![0.0; dimension];
    loop {
        let r2: f64 = idx.iter().map(|&i| (i as f64 * EVALUATION_SPACING).powi(2)).sum();
        if (0.0625..=0.5625).contains(&r2) {
            for (xa, &i) in x.iter_mut().zip(&idx) {
                *xa = i as f64 * EVALUATION_SPACING;
            }
            worst = worst.max(iterated_laplacian(&g, &mut x, h, power).abs());
        }
        let mut a = dimension;
        loop {
            if a == 0 {
                return Ok(PolyharmonicResidual { function: g.label(), dimension, spacing: h, residual: worst });
            }
            a -= 1;
            if idx[a] < reach {
                idx[a] += 1;
                break;
            }
            idx[a] = -reach;
        }
    }
}

fn iterated_laplacian(g: &RadialFunction, x: &mut [f64], h: f64, power: usize) -> f64 {
    if power == 0 {
        return g.eval(x);
    }
    let centre = iterated_laplacian(g, x, h, power - 1);
    let mut acc = -2.0 * x.len() as f64 * centre;
    for a in 0..x.len() {
        let keep = x[a];
        x[a] = keep + h;
        acc += iterated_laplacian(g, x, h, power - 1);
        x[a] = keep - h;
        acc += iterated_laplacian(g, x, h, power - 1);
        x[a] = keep;
    }
    acc / (h * h)
}
