//! Lattice fields, lattice functions, and mean-zero test functions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::LatticeGrid;

/// Relative tolerance of the zero-sum invariant: `|sum| <= tol * sum|v|`.
pub const ZERO_SUM_TOLERANCE: f64 = 1e-12;

/// Which construction produced a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Construction {
    White,
    Spectral,
    Eigen,
    Cascade,
    Cone,
    Conv,
    Kahane,
    Volatility,
}

impl Construction {
    pub const ALL: [Construction; 8] = [
        Construction::White,
        Construction::Spectral,
        Construction::Eigen,
        Construction::Cascade,
        Construction::Cone,
        Construction::Conv,
        Construction::Kahane,
        Construction::Volatility,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Construction::White => "white",
            Construction::Spectral => "spectral",
            Construction::Eigen => "eigen",
            Construction::Cascade => "cascade",
            Construction::Cone => "cone",
            Construction::Conv => "conv",
            Construction::Kahane => "kahane",
            Construction::Volatility => "volatility",
        }
    }
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Construction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Construction::ALL
            .into_iter()
            .find(|c| c.tag() == s)
            .ok_or_else(|| Error::UnknownConstruction(s.to_string()))
    }
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Real values on the sites of a grid with no further invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeFunction {
    grid: LatticeGrid,
    values: Vec<f64>,
}

impl LatticeFunction {
    pub fn new(grid: LatticeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.site_count() {
            return Err(Error::InvalidArgument(format!(
                "{} values for {} sites",
                values.len(),
                grid.site_count()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite lattice value".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: LatticeGrid) -> Self {
        Self { values: vec![0.0; grid.site_count()], grid }
    }

    pub fn from_fn(grid: LatticeGrid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.site_count()).map(|i| f(&grid.coords(i)[..grid.dimension()])).collect();
        Self::new(grid, values)
    }

    /// A point evaluation expressed as a lattice function: weight `dx^-d` at one site,
    /// so that pairing returns the site value.
    pub fn point_probe(grid: LatticeGrid, site: usize) -> Self {
        let mut values = vec![0.0; grid.site_count()];
        values[site] = 1.0 / grid.cell_volume();
        Self { grid, values }
    }

    pub fn grid(&self) -> &LatticeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `sum v * dx^d`.
    pub fn integral(&self) -> f64 {
        compensated_sum(self.values.iter().copied()) * self.grid.cell_volume()
    }

    pub fn l1_mass(&self) -> f64 {
        compensated_sum(self.values.iter().map(|v| v.abs())) * self.grid.cell_volume()
    }

    pub fn is_mean_zero(&self) -> bool {
        let sum = compensated_sum(self.values.iter().copied());
        let mass = compensated_sum(self.values.iter().map(|v| v.abs()));
        sum.abs() <= ZERO_SUM_TOLERANCE * mass
    }

    /// Discrete L2 inner product `dx^d sum f g`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.grid.same_as(&other.grid)?;
        Ok(compensated_sum(self.values.iter().zip(&other.values).map(|(a, b)| a * b))
            * self.grid.cell_volume())
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| a * v).collect() }
    }

    pub fn linear_combination(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.grid.same_as(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(Self { grid: self.grid, values })
    }

    /// Indices and values of the nonzero sites.
    pub fn sparse(&self) -> Vec<(usize, f64)> {
        self.values.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// A lattice function with zero sum: the discrete stand-in for a mean-zero
/// Schwartz test function.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    inner: LatticeFunction,
    support_center: [f64; crate::grid::MAX_DIMENSION],
    support_radius: f64,
}

impl TestFunction {
    /// Wraps values that already satisfy the zero-sum invariant.
    pub fn new(function: LatticeFunction) -> Result<Self> {
        let sum = compensated_sum(function.values.iter().copied());
        let mass = compensated_sum(function.values.iter().map(|v| v.abs()));
        if sum.abs() > ZERO_SUM_TOLERANCE * mass {
            return Err(Error::NotMeanZero { sum, mass });
        }
        let (support_center, support_radius) = support_geometry(&function);
        Ok(Self { inner: function, support_center, support_radius })
    }

    pub fn zeros(grid: LatticeGrid) -> Self {
        Self::new(LatticeFunction::zeros(grid)).expect("zero function is mean-zero")
    }

    pub fn grid(&self) -> &LatticeGrid {
        &self.inner.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.inner.values
    }

    pub fn as_function(&self) -> &LatticeFunction {
        &self.inner
    }

    /// `|phi|`-weighted centroid of the support (non-periodic coordinates).
    pub fn support_center(&self) -> &[f64] {
        &self.support_center[..self.inner.grid.dimension()]
    }

    /// Largest distance of a nonzero site from the support center.
    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self::new(self.inner.scaled(a)).expect("scaling preserves zero sum")
    }

    pub fn inner_product(&self, other: &Self) -> Result<f64> {
        self.inner.inner(&other.inner)
    }

    pub fn linear_combination(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        project_mean_zero(&self.inner.linear_combination(a, &other.inner, b)?)
    }
}

fn support_geometry(f: &LatticeFunction) -> ([f64; crate::grid::MAX_DIMENSION], f64) {
    let d = f.grid.dimension();
    let mut center = [0.0; crate::grid::MAX_DIMENSION];
    let mut weight = 0.0;
    for (i, v) in f.values.iter().enumerate() {
        if *v != 0.0 {
            let x = f.grid.coords(i);
            for axis in 0..d {
                center[axis] += v.abs() * x[axis];
            }
            weight += v.abs();
        }
    }
    if weight == 0.0 {
        return (center, 0.0);
    }
    for c in center.iter_mut().take(d) {
        *c /= weight;
    }
    let radius = f
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, _)| {
            let x = f.grid.coords(i);
            (0..d).map(|a| (x[a] - center[a]).powi(2)).sum::<f64>().sqrt()
        })
        .fold(0.0, f64::max);
    (center, radius)
}

/// Subtracts the site mean so the result satisfies the zero-sum invariant.
pub fn project_mean_zero(f: &LatticeFunction) -> Result<TestFunction> {
    let n = f.values.len() as f64;
    let mut values = f.values.clone();
    // Two passes: the second removes the rounding residue of the first.
    for _ in 0..2 {
        let mean = compensated_sum(values.iter().copied()) / n;
        if mean == 0.0 {
            break;
        }
        for v in values.iter_mut() {
            *v -= mean;
        }
    }
    TestFunction::new(LatticeFunction { grid: f.grid, values })
}

/// Provenance recorded alongside a sampled field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub construction: Construction,
    pub seed: u64,
    pub stream: u64,
    /// Order `s` of `(-Delta)^{-s/2}` when meaningful for the construction.
    pub exponent: Option<f64>,
    /// Construction parameters, serialized into the file header.
    pub config: serde_json::Value,
}

impl FieldMeta {
    pub fn new(construction: Construction) -> Self {
        Self { construction, seed: 0, stream: 0, exponent: None, config: serde_json::Value::Null }
    }
}

/// A sampled field on a grid. Fields defined modulo an additive constant store
/// the representative with site-mean zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    grid: LatticeGrid,
    values: Vec<f64>,
    modulo_constant: bool,
    meta: FieldMeta,
}

impl LatticeField {
    pub fn new(grid: LatticeGrid, mut values: Vec<f64>, modulo_constant: bool, meta: FieldMeta) -> Result<Self> {
        if values.len() != grid.site_count() {
            return Err(Error::InvalidArgument(format!(
                "{} values for {} sites",
                values.len(),
                grid.site_count()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite field value".into()));
        }
        if modulo_constant {
            let mean = compensated_sum(values.iter().copied()) / values.len() as f64;
            for v in values.iter_mut() {
                *v -= mean;
            }
        }
        Ok(Self { grid, values, modulo_constant, meta })
    }

    pub fn grid(&self) -> &LatticeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn modulo_constant(&self) -> bool {
        self.modulo_constant
    }

    pub fn meta(&self) -> &FieldMeta {
        &self.meta
    }

    pub fn construction(&self) -> Construction {
        self.meta.construction
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn value_at(&self, site: usize) -> f64 {
        self.values[site]
    }

    /// `(h, phi) = dx^d sum h(x) phi(x)`.
    pub fn pair(&self, phi: &TestFunction) -> Result<f64> {
        self.grid.same_as(phi.grid())?;
        Ok(dot(&self.values, phi.values()) * self.grid.cell_volume())
    }

    /// Pairing against an arbitrary lattice function. Rejected when the field is
    /// only defined modulo constants and `f` does not have zero sum.
    pub fn pair_function(&self, f: &LatticeFunction) -> Result<f64> {
        self.grid.same_as(f.grid())?;
        if self.modulo_constant && !f.is_mean_zero() {
            let sum = compensated_sum(f.values().iter().copied());
            let mass = compensated_sum(f.values().iter().map(|v| v.abs()));
            return Err(Error::NotMeanZero { sum, mass });
        }
        Ok(dot(&self.values, f.values()) * self.grid.cell_volume())
    }

    /// The field plus a constant, keeping the modulo-constant convention.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        let values = self.values.iter().map(|v| v + c).collect();
        Self::new(self.grid, values, self.modulo_constant, self.meta.clone())
    }

    pub fn negated(&self) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| -v).collect(),
            modulo_constant: self.modulo_constant,
            meta: self.meta.clone(),
        }
    }

    /// Restriction to the hyperplane `x[axis] = index * dx`.
    pub fn slice(&self, axis: usize, index: usize) -> Result<Self> {
        let d = self.grid.dimension();
        let n = self.grid.points_per_axis();
        if axis >= d {
            return Err(Error::InvalidArgument(format!("axis {axis} >= dimension {d}")));
        }
        if index >= n {
            return Err(Error::InvalidArgument(format!("index {index} >= points per axis {n}")));
        }
        let sub = self.grid.sliced()?;
        let mut values = Vec::with_capacity(sub.site_count());
        let mut full = [0usize; crate::grid::MAX_DIMENSION];
        for flat in 0..sub.site_count() {
            let idx = sub.unravel(flat);
            let mut j = 0;
            for (a, slot) in full.iter_mut().enumerate().take(d) {
                if a == axis {
                    *slot = index;
                } else {
                    *slot = idx[j];
                    j += 1;
                }
            }
            values.push(self.values[self.grid.ravel(&full)]);
        }
        Self::new(sub, values, self.modulo_constant, self.meta.clone())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
