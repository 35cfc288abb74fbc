use fgflab_core::analysis::PairingSamples;
use fgflab_core::io::FieldFile;
use fgflab_core::sampler::*;
use fgflab_core::{LatticeFunction, LatticeGrid, Sampler, SamplerConfig, SeededRng, TestFunctionSpec};

fn lgf(grid: LatticeGrid) -> SpectralSampler {
    SpectralSampler::new(SpectralSamplerConfig {
        grid,
        exponent: SpectralExponent::new(grid.dimension() as f64 / 2.0, grid.dimension()).unwrap(),
        normalization: SymbolNormalization::Unit,
    })
    .unwrap()
}

#[test]
fn standard_error_halves_when_samples_quadruple() {
    let grid = LatticeGrid::new(1, 256, 1.0).unwrap();
    let phi = TestFunctionSpec::dipole(&[0.4], &[0.5], 0.03).unwrap().discretize(&grid).unwrap();
    let s = PairingSamples::draw(&lgf(grid), 3, &[("phi".into(), phi.as_function().clone())], 8000).unwrap();
    let full = s.covariance(0, 0).unwrap().standard_error;
    let half = s.truncated(2000).covariance(0, 0).unwrap().standard_error;
    let ratio = half / full;
    assert!((ratio / 2.0 - 1.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn sign_flip_and_positive_gram() {
    let grid = LatticeGrid::new(1, 256, 1.0).unwrap();
    let phi = TestFunctionSpec::dipole(&[0.4], &[0.5], 0.03).unwrap().discretize(&grid).unwrap();
    let probes = vec![("phi".to_string(), phi.as_function().clone()), ("-phi".to_string(), phi.scaled(-1.0).as_function().clone())];
    let s = PairingSamples::draw(&lgf(grid), 5, &probes, 1000).unwrap();
    let var = s.covariance(0, 0).unwrap();
    let flipped = s.covariance(0, 1).unwrap();
    assert!((flipped.mean_product + var.mean_product).abs() < 1e-9 * var.mean_product);
    // Rank one Gram matrix: smallest eigenvalue is zero up to rounding.
    assert!(s.min_gram_eigenvalue().unwrap() > -1e-9 * var.mean_product);
}

#[test]
fn estimate_covariance_runs_from_a_config() {
    let config = SamplerConfig { construction: fgflab_core::Construction::White, d: 1, n: 64, seed: 9, ..Default::default() };
    let grid = config.grid().unwrap();
    let f = TestFunctionSpec::dipole(&[0.2], &[0.3], 0.05).unwrap().discretize(&grid).unwrap();
    let g = TestFunctionSpec::dipole(&[0.6], &[0.8], 0.05).unwrap().discretize(&grid).unwrap();
    let e = fgflab_core::analysis::estimate_covariance(&config, &f, &g, 4000).unwrap();
    assert!(e.z_score(0.0) < 5.0);
    assert_eq!(e.samples, 4000);
    assert!(fgflab_core::analysis::estimate_covariance(&config, &f, &g, 10).is_err());
}

#[test]
fn slicing_a_field_file_equals_pairing_on_the_plane() {
    let grid = LatticeGrid::new(3, 32, 1.0).unwrap();
    let h = lgf(grid).sample(SeededRng::new(7, 0)).unwrap();
    let sliced = FieldFile::new(h.clone()).slice(2, 16).unwrap();
    let plane = *sliced.field.grid();
    let phi = TestFunctionSpec::dipole(&[0.4, 0.4], &[0.55, 0.5], 0.1).unwrap().discretize(&plane).unwrap();
    let mut embedded = vec![0.0; grid.site_count()];
    for (flat, v) in phi.as_function().sparse() {
        let idx = plane.unravel(flat);
        embedded[grid.ravel(&[idx[0], idx[1], 16])] = v / grid.spacing();
    }
    let embedded = LatticeFunction::new(grid, embedded).unwrap();
    let direct = sliced.field.pair(&phi).unwrap();
    let via_3d = h.pair_function(&embedded).unwrap();
    assert!((direct - via_3d).abs() < 1e-12 * (1.0 + direct.abs()));
    assert_eq!(sliced.header.slices, vec![[2, 16]]);
}
