//! One test per acceptance criterion. Each prints a PASS/FAIL line with the
//! headline statistic, its tolerance and the wall-clock runtime bound.

use std::sync::Mutex;
use std::time::Duration;

use fgflab_core::analysis::{CheckContext, CheckRegistry, CheckReport};

// Runtime bounds are wall-clock, so checks run one at a time.
static SERIAL: Mutex<()> = Mutex::new(());

fn criterion(number: usize, check: &str, budget: Duration) -> CheckReport {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let report = CheckRegistry::with_builtins()
        .run(check, &CheckContext::default())
        .unwrap_or_else(|e| panic!("criterion {number} ({check}) errored: {e}"));
    let in_time = report.seconds <= budget.as_secs_f64();
    let pass = report.pass && in_time;
    println!(
        "{} criterion {number:>2} {check}: statistic {} tolerance {} runtime {:.1}s (limit {}s)",
        if pass { "PASS" } else { "FAIL" },
        report.statistic,
        report.tolerance,
        report.seconds,
        budget.as_secs(),
    );
    assert!(report.pass, "criterion {number} ({check}) failed: {}", serde_json::to_string_pretty(&report).unwrap());
    assert!(in_time, "criterion {number} ({check}) took {:.1}s", report.seconds);
    report
}

#[test]
fn criterion_01_inversion_identity() {
    criterion(1, "inversion", Duration::from_secs(1));
}

#[test]
fn criterion_02_cascade_covariance() {
    criterion(2, "cascade-cov", Duration::from_secs(120));
}

#[test]
fn criterion_03_spectral_lgf_fits_log_kernel() {
    criterion(3, "spectral-log", Duration::from_secs(300));
}

#[test]
fn criterion_04_restriction_to_a_plane() {
    criterion(4, "restriction", Duration::from_secs(600));
}

#[test]
fn criterion_05_hurst_scaling() {
    criterion(5, "scaling", Duration::from_secs(180));
}

#[test]
fn criterion_06_cone_construction() {
    criterion(6, "cone", Duration::from_secs(180));
}

#[test]
fn criterion_07_kahane_cutoff() {
    criterion(7, "kahane", Duration::from_secs(180));
}

#[test]
fn criterion_08_radial_polyharmonicity() {
    criterion(8, "polyharmonic", Duration::from_secs(30));
}

#[test]
fn criterion_09_white_noise_gram() {
    criterion(9, "white-noise", Duration::from_secs(60));
}

#[test]
fn criterion_10_volatility_field() {
    criterion(10, "volatility", Duration::from_secs(120));
}

#[test]
fn criterion_11_cross_backend_equivalence() {
    let guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let report = CheckRegistry::with_builtins().run("cross-backend", &CheckContext::default()).unwrap();
    drop(guard);
    for d in &report.details {
        let backend = d["backend"].as_str().unwrap_or("?");
        let residual = d["fit"]["residual"].as_f64().unwrap_or(f64::NAN);
        println!(
            "{} criterion 11 backend {backend}: residual {residual:.4} tolerance 0.1 (exact-law residual {})",
            if residual < 0.10 { "PASS" } else { "FAIL" },
            d["exact_law_fit"]["residual"],
        );
    }
    let in_time = report.seconds <= 600.0;
    println!(
        "{} criterion 11 cross-backend: statistic {} tolerance {} runtime {:.1}s (limit 600s)",
        if report.pass && in_time { "PASS" } else { "FAIL" },
        report.statistic,
        report.tolerance,
        report.seconds,
    );
    assert!(in_time);
    assert!(report.pass, "criterion 11 failed: residuals {}", report.statistic["residual"]);
}
