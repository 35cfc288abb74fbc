//! Lattice samplers and verification tools for log-correlated and fractional
//! Gaussian fields.
//!
//! Fields live on periodic grids ([`LatticeGrid`]) and are paired against
//! mean-zero test functions. Each construction implements [`Sampler`] and is
//! selected by name through [`SamplerRegistry`].

pub mod analysis;
pub mod dft;
pub mod error;
pub mod field;
pub mod grid;
pub mod io;
pub mod quadrature;
pub mod rng;
pub mod sampler;
pub mod testfn;

pub use error::{Error, Result};
pub use field::{project_mean_zero, Construction, FieldMeta, LatticeField, LatticeFunction, TestFunction};
pub use grid::LatticeGrid;
pub use rng::SeededRng;
pub use sampler::{Sampler, SamplerConfig, SamplerRegistry};
pub use testfn::{Bump, TestFunctionSpec};
