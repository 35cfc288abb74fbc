use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fgflab_core::io::{FieldFile, MaskFile};
use fgflab_core::{Construction, FieldMeta, LatticeField, LatticeGrid};
use serde_json::Value;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fgflab-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn fgflab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fgflab")).args(args).env_remove("FGFLAB_SEED").output().unwrap()
}

fn ok_json(out: Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn sample_writes_the_header_and_is_reproducible() {
    let dir = scratch("sample");
    let (a, b) = (dir.join("a.fgf"), dir.join("b.fgf"));
    for p in [&a, &b] {
        let v = ok_json(fgflab(&["sample", "--construction", "spectral", "--d", "2", "--s", "1.0", "--n", "256", "--seed", "7", "--out", s(p)]));
        assert_eq!(v["header"]["s"], 1.0);
        assert_eq!(v["header"]["N"], 256);
        assert_eq!(v["header"]["d"], 2);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let f = FieldFile::read(&a).unwrap();
    assert_eq!(f.field.values().len(), 256 * 256);
    assert_eq!(f.field.construction(), Construction::Spectral);
}

#[test]
fn sample_cascade_with_levels() {
    let dir = scratch("cascade");
    let out = dir.join("c.fgf");
    let v = ok_json(fgflab(&["sample", "--construction", "cascade", "--d", "1", "--levels", "-2:8", "--seed", "1", "--out", s(&out)]));
    assert_eq!(v["header"]["construction"], "cascade");
    assert_eq!(v["header"]["config"]["levels"], serde_json::json!([-2, 8]));
}

#[test]
fn config_file_merges_under_flags_and_env_seed_is_a_default() {
    let dir = scratch("config");
    let cfg = dir.join("cfg.json");
    std::fs::write(&cfg, r#"{"construction": "spectral", "d": 1, "N": 64, "s": 0.5, "seed": 3}"#).unwrap();
    let out = dir.join("f.fgf");
    let v = ok_json(fgflab(&["sample", "--config", s(&cfg), "--seed", "4", "--out", s(&out)]));
    assert_eq!(v["header"]["seed"], 4);
    assert_eq!(v["header"]["N"], 64);

    std::fs::write(&cfg, r#"{"construction": "white", "d": 1, "N": 32}"#).unwrap();
    let run = Command::new(env!("CARGO_BIN_EXE_fgflab"))
        .args(["sample", "--config", s(&cfg), "--out", s(&out)])
        .env("FGFLAB_SEED", "99")
        .output()
        .unwrap();
    assert_eq!(ok_json(run)["header"]["seed"], 99);
}

#[test]
fn invalid_parameters_are_usage_errors() {
    let dir = scratch("invalid");
    let out = dir.join("x.fgf");
    let run = fgflab(&["sample", "--construction", "cone", "--d", "1", "--out", s(&out)]);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("epsilon"));
    let run = fgflab(&["sample", "--construction", "nonsense", "--out", s(&out)]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn estimate_cov_does_not_depend_on_jobs() {
    let phi1 = r#"{"bumps": [{"center": [0.4], "radius": 0.05, "weight": 1}, {"center": [0.5], "radius": 0.05, "weight": -1}]}"#;
    let phi2 = r#"{"bumps": [{"center": [0.45], "radius": 0.05, "weight": 1}, {"center": [0.6], "radius": 0.05, "weight": -1}]}"#;
    let run = |jobs: &str| {
        ok_json(fgflab(&[
            "--jobs", jobs, "estimate-cov", "--construction", "spectral", "--d", "1", "--n", "128", "--seed", "5",
            "--samples", "300", "--phi1", phi1, "--phi2", phi2,
        ]))
    };
    let (one, two) = (run("1"), run("2"));
    assert_eq!(one["estimate"], two["estimate"]);
    assert_eq!(one["estimate"]["samples"], 300);
}

#[test]
fn verify_named_checks_and_fast_suite() {
    let v = ok_json(fgflab(&["verify", "inversion"]));
    assert_eq!(v["pass"], true);
    assert!(v["reports"][0]["statistic"].as_f64().unwrap() < 1e-12);
    assert_eq!(ok_json(fgflab(&["verify", "cascade-cov"]))["pass"], true);
    let fast = ok_json(fgflab(&["verify", "--suite", "fast"]));
    assert_eq!(fast["pass"], true);
    assert!(fast["checks"].as_u64().unwrap() >= 6);
    let run = fgflab(&["verify", "no-such-check"]);
    assert_eq!(run.status.code(), Some(2));
}

fn write_field(path: &Path, grid: LatticeGrid, values: Vec<f64>) {
    let f = LatticeField::new(grid, values, false, FieldMeta::new(Construction::White)).unwrap();
    FieldFile::new(f).write(path).unwrap();
}

#[test]
fn slices_of_constant_and_indexed_fields() {
    let dir = scratch("slice");
    let g = LatticeGrid::new(3, 8, 1.0).unwrap();
    let constant = dir.join("const.fgf");
    write_field(&constant, g, vec![2.5; 512]);
    let out = dir.join("const2.fgf");
    ok_json(fgflab(&["slice", s(&constant), "--axis", "1", "--index", "3", "--out", s(&out)]));
    let sliced = FieldFile::read(&out).unwrap();
    assert_eq!(sliced.field.grid().dimension(), 2);
    assert!(sliced.field.values().iter().all(|v| *v == 2.5));

    let indexed = dir.join("idx.fgf");
    write_field(&indexed, g, (0..512).map(|i| i as f64).collect());
    let (mid, line) = (dir.join("mid.fgf"), dir.join("line.fgf"));
    ok_json(fgflab(&["slice", s(&indexed), "--axis", "2", "--index", "5", "--out", s(&mid)]));
    ok_json(fgflab(&["slice", s(&mid), "--axis", "1", "--index", "6", "--out", s(&line)]));
    let line = FieldFile::read(&line).unwrap();
    let direct: Vec<f64> = (0..8).map(|i| g.ravel(&[i, 6, 5]) as f64).collect();
    assert_eq!(line.field.values(), &direct[..]);
    assert_eq!(line.header.slices, vec![[2, 5], [1, 6]]);

    let run = fgflab(&["slice", s(&indexed), "--axis", "0", "--index", "8", "--out", s(&out)]);
    assert!(!run.status.success());
}

#[test]
fn levelset_at_the_median_and_symmetry() {
    let dir = scratch("levelset");
    let field = dir.join("lgf.fgf");
    ok_json(fgflab(&["sample", "--construction", "spectral", "--d", "2", "--n", "256", "--seed", "11", "--out", s(&field)]));
    let f = FieldFile::read(&field).unwrap();
    let mut sorted = f.field.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let mask = dir.join("m.mask");
    let v = ok_json(fgflab(&["levelset", s(&field), "--threshold", &median.to_string(), "--out", s(&mask)]));
    let frac = v["true_fraction"].as_f64().unwrap();
    assert!((frac - 0.5).abs() < 0.02, "{frac}");
    assert!((MaskFile::read(&mask).unwrap().true_fraction() - frac).abs() < 1e-15);

    let below = sorted[0] - 1.0;
    let all = ok_json(fgflab(&["levelset", s(&field), "--threshold", &below.to_string(), "--out", s(&mask)]));
    assert_eq!(all["true_fraction"], 1.0);

    let neg = dir.join("neg.fgf");
    FieldFile::new(f.field.negated()).write(&neg).unwrap();
    let t = 0.3;
    let (m1, m2) = (dir.join("m1.mask"), dir.join("m2.mask"));
    ok_json(fgflab(&["levelset", s(&field), "--threshold", &t.to_string(), "--out", s(&m1)]));
    ok_json(fgflab(&["levelset", s(&neg), "--threshold", &(-t).to_string(), "--out", s(&m2)]));
    let (a, b) = (MaskFile::read(&m1).unwrap(), MaskFile::read(&m2).unwrap());
    let ties = f.field.values().iter().filter(|v| **v == t).count();
    let agree = a.mask.iter().zip(&b.mask).filter(|(x, y)| x == y).count();
    assert!(agree <= ties);
}

#[test]
fn export_writes_one_csv_row_per_site() {
    let dir = scratch("export");
    let field = dir.join("f.fgf");
    write_field(&field, LatticeGrid::new(2, 4, 2.0).unwrap(), (0..16).map(|i| i as f64 * 0.5).collect());
    let csv = dir.join("f.csv");
    let run = fgflab(&["export", s(&field), "--out", s(&csv)]);
    assert!(run.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "i0,i1,x0,x1,value");
    assert_eq!(lines.len(), 17);
    assert_eq!(lines[6], "1,1,0.5,0.5,2.5e0");

    let mask = dir.join("f.mask");
    ok_json(fgflab(&["levelset", s(&field), "--threshold", "4", "--out", s(&mask)]));
    let run = fgflab(&["export", s(&mask)]);
    let text = String::from_utf8(run.stdout).unwrap();
    assert_eq!(text.lines().last().unwrap(), "3,3,1.5,1.5,1");
}
