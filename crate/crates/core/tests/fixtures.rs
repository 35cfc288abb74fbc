//! Deterministic regression values with independent oracles.

use fgflab_core::analysis::{cascade_kernel_pairing, log_kernel_pairing};
use fgflab_core::{LatticeFunction, LatticeGrid, TestFunction, TestFunctionSpec};

/// Split level of sites `i != j` of a 16-site unit grid, from the binary digits.
fn split_level_bits(i: usize, j: usize) -> i32 {
    5 - (usize::BITS - (i ^ j).leading_zeros()) as i32
}

fn enumerated_cascade_pairing(f: &[(usize, f64)], g: &[(usize, f64)], k_max: i32) -> f64 {
    let mut total = 0.0;
    for &(i, a) in f {
        for &(j, b) in g {
            let l = if i == j { k_max + 1 } else { split_level_bits(i, j).min(k_max + 1) };
            total += a * b * l as f64;
        }
    }
    total
}

fn point_dipole(grid: LatticeGrid, plus: usize, minus: usize) -> TestFunction {
    let mut v = vec![0.0; grid.site_count()];
    v[plus] = 1.0 / grid.cell_volume();
    v[minus] = -1.0 / grid.cell_volume();
    TestFunction::new(LatticeFunction::new(grid, v).unwrap()).unwrap()
}

#[test]
fn cascade_pairing_on_sixteen_sites() {
    let grid = LatticeGrid::new(1, 16, 1.0).unwrap();
    let k_max = 3;
    // phi1 inside one level-3 cube is blind to the rest of the cascade.
    let inside = point_dipole(grid, 0, 1);
    let far = point_dipole(grid, 0, 5);
    let value = cascade_kernel_pairing(&inside, &far, k_max).unwrap();
    assert_eq!(enumerated_cascade_pairing(&[(0, 1.0), (1, -1.0)], &[(0, 1.0), (5, -1.0)], k_max), 0.0);
    assert!(value.abs() < 1e-12);

    let f = point_dipole(grid, 0, 3);
    let g = point_dipole(grid, 1, 6);
    let expected = enumerated_cascade_pairing(&[(0, 1.0), (3, -1.0)], &[(1, 1.0), (6, -1.0)], k_max);
    assert_eq!(expected, 1.0);
    assert!((cascade_kernel_pairing(&f, &g, k_max).unwrap() - expected).abs() < 1e-12);
    assert!((cascade_kernel_pairing(&f.scaled(2.0), &g, k_max).unwrap() - 2.0 * expected).abs() < 1e-12);
}

/// `sum f_i f_j (-log|x_i - x_j|)` on a fine 1D grid with the exact same-cell average.
fn fine_log_energy(spec: &TestFunctionSpec, n: usize) -> f64 {
    let dx = 1.0 / n as f64;
    let sites: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let x = i as f64 * dx;
            (x, spec.eval(&[x]))
        })
        .filter(|(_, v)| *v != 0.0)
        .collect();
    let mut total = 0.0;
    for &(x, a) in &sites {
        for &(y, b) in &sites {
            let k = if x == y { 1.5 - dx.ln() } else { -(x - y).abs().ln() };
            total += a * b * k;
        }
    }
    total * dx * dx
}

#[test]
fn log_pairing_of_two_compensated_bumps() {
    let spec = TestFunctionSpec::dipole(&[0.4], &[0.6], 0.025).unwrap();
    let reference = fine_log_energy(&spec, 4096);
    let grid = LatticeGrid::new(1, 256, 1.0).unwrap();
    let phi = spec.discretize(&grid).unwrap();
    let value = log_kernel_pairing(&phi, &phi).unwrap();
    assert!(((value - reference) / reference).abs() < 1e-3, "{value} vs {reference}");
}
