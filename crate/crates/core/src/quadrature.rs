//! Adaptive Gauss-Kronrod (7/15) quadrature.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 48;

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `abs_tol` or relative
/// tolerance `rel_tol`, whichever is looser for each panel.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (whole, err) = kronrod(&mut f, a, b);
    refine(&mut f, a, b, whole, err, abs_tol, rel_tol, 0)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    whole: f64,
    err: f64,
    abs_tol: f64,
    rel_tol: f64,
    depth: u32,
) -> f64 {
    if err <= abs_tol.max(rel_tol * whole.abs()) || depth >= MAX_DEPTH {
        return whole;
    }
    let m = 0.5 * (a + b);
    let (left, el) = kronrod(f, a, m);
    let (right, er) = kronrod(f, m, b);
    refine(f, a, m, left, el, 0.5 * abs_tol, rel_tol, depth + 1)
        + refine(f, m, b, right, er, 0.5 * abs_tol, rel_tol, depth + 1)
}

/// Integral over `[a, b]` split at interior breakpoints (kinks, singularities).
pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> f64 {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|x| *x > a && *x < b).collect();
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.insert(0, a);
    pts.push(b);
    let n = (pts.len() - 1) as f64;
    pts.windows(2).map(|w| integrate(&mut f, w[0], w[1], abs_tol / n, rel_tol)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_transcendental() {
        let v = integrate(|x| x.powi(5) - 2.0 * x, 0.0, 2.0, 1e-14, 1e-14);
        assert!((v - (64.0 / 6.0 - 4.0)).abs() < 1e-12);
        let v = integrate(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-14, 1e-14);
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn log_endpoint_singularity() {
        // int_0^1 -ln x dx = 1
        let v = integrate(|x| -x.ln(), 0.0, 1.0, 1e-12, 1e-12);
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn kink_with_breakpoint() {
        let v = integrate_with_breaks(|x: f64| (x - 0.3).abs(), 0.0, 1.0, &[0.3], 1e-14, 1e-14);
        assert!((v - (0.045 + 0.245)).abs() < 1e-13);
    }
}
