use serde::Serialize;

use crate::error::{Error, Result};

/// Pairs whose oracle value is below this fraction of the largest are left
/// out of the residual.
pub const DEFAULT_NOISE_FLOOR: f64 = 0.05;

/// Least-squares fit `estimate ≈ c oracle`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProportionalityFit {
    pub scale: f64,
    /// `max |e - c o| / |c o|` over pairs above the noise floor.
    pub residual: f64,
    pub pairs: usize,
}

pub fn fit_proportionality(pairs: &[(f64, f64)]) -> Result<ProportionalityFit> {
    fit_proportionality_with_floor(pairs, DEFAULT_NOISE_FLOOR)
}

pub fn fit_proportionality_with_floor(pairs: &[(f64, f64)], floor: f64) -> Result<ProportionalityFit> {
    if pairs.len() < 3 {
        return Err(Error::DegenerateFit(format!("need at least 3 pairs, got {}", pairs.len())));
    }
    let so2: f64 = pairs.iter().map(|(_, o)| o * o).sum();
    let max = pairs.iter().map(|(_, o)| o.abs()).fold(0.0, f64::max);
    if !(so2 > 0.0) || !so2.is_finite() || max < 1e-300 {
        return Err(Error::DegenerateFit("all oracle values vanish".into()));
    }
    let c = pairs.iter().map(|(e, o)| e * o).sum::<f64>() / so2;
    let residual = pairs
        .iter()
        .filter(|(_, o)| o.abs() >= floor * max)
        .map(|(e, o)| (e - c * o).abs() / (c * o).abs())
        .fold(0.0, f64::max);
    Ok(ProportionalityFit { scale: c, residual, pairs: pairs.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_multiple() {
        let pairs: Vec<_> = [1.0, -2.0, 0.5, 4.0].iter().map(|o| (3.0 * o, *o)).collect();
        let fit = fit_proportionality(&pairs).unwrap();
        assert!((fit.scale - 3.0).abs() < 1e-15);
        assert!(fit.residual < 1e-15);
        assert_eq!(fit.pairs, 4);
    }

    #[test]
    fn outlier_inflates_residual() {
        let fit = fit_proportionality(&[(1.0, 1.0), (2.0, 2.0), (9.0, 3.0)]).unwrap();
        assert!(fit.scale.is_finite());
        assert!(fit.residual > 0.3);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(fit_proportionality(&[(1.0, 0.0), (2.0, 0.0), (3.0, 0.0)]).is_err());
        assert!(fit_proportionality(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
    }
}
