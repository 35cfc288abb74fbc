//! Verification engine: Monte-Carlo estimators, deterministic oracles,
//! proportionality fits, identity checks and the named verification suite.

pub mod checks;
pub mod estimate;
pub mod fit;
pub mod identities;
pub mod kernel;

pub use checks::{restriction_check, scaling_check, CheckContext, CheckRegistry, CheckReport};
pub use estimate::{estimate_covariance, CovarianceEstimate, PairingSamples};
pub use fit::{fit_proportionality, ProportionalityFit};
pub use identities::{inversion_identity_check, radial_polyharmonic_residual, RadialFunction};
pub use kernel::{cascade_kernel_pairing, cone_overlap_volume, kernel_pairing, log_kernel_pairing};
