use crate::error::Result;
use crate::field::{Construction, FieldMeta, LatticeField};
use crate::grid::LatticeGrid;
use crate::rng::SeededRng;
use crate::sampler::Sampler;

/// Lattice white noise: independent site values of variance `dx^-d`, so that
/// `Cov[(W,f),(W,g)] = (f,g)` exactly.
pub fn sample_white_noise(grid: &LatticeGrid, key: SeededRng) -> Result<LatticeField> {
    let mut values = vec![0.0; grid.site_count()];
    key.gaussians().fill_normal(&mut values, grid.cell_volume().powf(-0.5));
    let mut meta = FieldMeta::new(Construction::White);
    meta.seed = key.seed;
    meta.stream = key.stream;
    meta.exponent = Some(0.0);
    LatticeField::new(*grid, values, false, meta)
}

pub struct WhiteNoiseSampler {
    grid: LatticeGrid,
    density: Vec<f64>,
}

impl WhiteNoiseSampler {
    pub fn new(grid: LatticeGrid) -> Self {
        Self { density: vec![1.0; grid.site_count()], grid }
    }
}

impl Sampler for WhiteNoiseSampler {
    fn construction(&self) -> Construction {
        Construction::White
    }

    fn grid(&self) -> &LatticeGrid {
        &self.grid
    }

    fn modulo_constant(&self) -> bool {
        false
    }

    fn sample(&self, key: SeededRng) -> Result<LatticeField> {
        let mut field = sample_white_noise(&self.grid, key)?;
        let meta = FieldMeta { config: self.describe(), ..field.meta().clone() };
        field = LatticeField::new(self.grid, field.into_values(), false, meta)?;
        Ok(field)
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({})
    }

    fn spectral_density(&self) -> Option<&[f64]> {
        Some(&self.density)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn site_variance_is_inverse_cell_volume() {
        let grid = LatticeGrid::new(2, 64, 2.0).unwrap();
        let f = sample_white_noise(&grid, SeededRng::new(3, 0)).unwrap();
        let var = f.values().iter().map(|v| v * v).sum::<f64>() / f.values().len() as f64;
        let expect = 1.0 / grid.cell_volume();
        assert!((var / expect - 1.0).abs() < 0.05, "{var} vs {expect}");
        assert!(!f.modulo_constant());
    }
}
