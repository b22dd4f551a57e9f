use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gam_core::io::{load_constellation, to_json_string};
use gam_core::metrics;
use serde_json::Value;

fn gam(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gam"))
        .args(args)
        .current_dir(out_dir)
        .env_remove("GAM_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn mi_column(csv: &str, scheme: &str) -> Vec<f64> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').collect::<Vec<_>>())
        .filter(|f| f[1] == scheme)
        .map(|f| f[3].parse().unwrap())
        .collect()
}

#[test]
fn generate_writes_normalized_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = gam(&["generate", "--scheme", "gb-hr", "--n", "1024", "--power", "1"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let c = load_constellation(dir.path().join("gb-hr-1024.json")).unwrap();
    assert_eq!(c.len(), 1024);
    assert!((c.mean_power() - 1.0).abs() < 1e-9);
}

#[test]
fn generate_disc_reports_three_db() {
    let dir = tempfile::tempdir().unwrap();
    let o = gam(&["generate", "--scheme", "disc", "--n", "1024"], dir.path());
    assert!(o.status.success());
    let line = stdout(&o).lines().find(|l| l.starts_with("PAPR [dB]")).unwrap().to_string();
    let db: f64 = line.split_whitespace().last().unwrap().parse().unwrap();
    assert!((db - 3.0).abs() < 0.01, "{line}");
}

#[test]
fn generate_rejects_odd_qam() {
    let dir = tempfile::tempdir().unwrap();
    let o = gam(&["generate", "--scheme", "qam", "--n", "15"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("not an even-side square"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["generate", "--scheme", "disc"][..],
        &["generate", "--scheme", "disc", "--n", "4", "--colour", "red"],
        &["mi-sweep", "--scheme", "disc", "--n", "4", "--snr", "0:1"],
        &["frobnicate"],
    ] {
        assert_eq!(gam(args, dir.path()).status.code(), Some(1), "{args:?}");
    }
    assert_eq!(gam(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn generate_then_metrics_matches_in_memory_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let o = gam(&["generate", "--scheme", "gb-hr", "--n", "64", "--power", "2.5", "--out", "c.json"], dir.path());
    assert!(o.status.success());
    let o = gam(&["metrics", "--input", "c.json", "--format", "json"], dir.path());
    assert!(o.status.success());
    let c = gam_core::Constellation::gb_gam_hr(64, 2.5).unwrap();
    assert_eq!(stdout(&o), to_json_string(&metrics::report(&c)).unwrap());
    assert_eq!(load_constellation(&path).unwrap(), c);
    assert_eq!(
        fs::read_to_string(&path).unwrap(),
        gam_core::io::constellation_to_json(&c).unwrap()
    );
}

#[test]
fn golden_single_point_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let o = gam(&["mi-sweep", "--scheme", "disc", "--n", "1", "--snr", "0,10", "--method", "grid"], dir.path());
    assert!(o.status.success());
    assert_eq!(stdout(&o), include_str!("golden/mi_sweep_single_point.csv"));
    let o = gam(&["mi-sweep", "--scheme", "disc", "--n", "1", "--snr", "0,10", "--samples", "5000"], dir.path());
    assert!(mi_column(&stdout(&o), "disc").iter().all(|v| v.abs() < 1e-9));
}

#[test]
fn golden_noiseless_ser_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let o = gam(
        &["ser-sweep", "--scheme", "qam", "--n", "4", "--snr", "60", "--symbols", "1000", "--seed", "1"],
        dir.path(),
    );
    assert!(o.status.success());
    assert_eq!(stdout(&o), include_str!("golden/ser_sweep_qam4_60db.csv"));
}

#[test]
fn hr_reference_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = gam(
        &["mi-sweep", "--scheme", "gb-hr", "--n", "16", "--snr", "4.771212547,11.76091259,15", "--method", "grid"],
        dir.path(),
    );
    assert!(o.status.success());
    let csv = stdout(&o);
    for (got, want) in mi_column(&csv, "gb-hr").iter().zip([1.921, 3.440, 3.828]) {
        assert!((got - want).abs() <= 0.02, "{got} vs {want}");
    }
    let cap = mi_column(&csv, "capacity");
    assert!((cap[1] - 4.0).abs() < 1e-6);
}

#[test]
fn sweeps_are_deterministic_under_seed() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["mi-sweep", "--scheme", "qam,gb-hr", "--n", "16", "--snr", "0:10:5", "--samples", "20000", "--seed", "7"];
    let a = stdout(&gam(&args, dir.path()));
    let b = stdout(&gam(&args, dir.path()));
    assert_eq!(a, b);
    let seq: Vec<&str> = args.iter().copied().chain(["--sequential"]).collect();
    assert_eq!(a, stdout(&gam(&seq, dir.path())));
    let mut other = args;
    other[10] = "8";
    assert_ne!(a, stdout(&gam(&other, dir.path())));

    let ser = ["ser-sweep", "--scheme", "disc", "--n", "16", "--snr", "5,10", "--symbols", "20000", "--seed", "3"];
    assert_eq!(stdout(&gam(&ser, dir.path())), stdout(&gam(&ser, dir.path())));
}

#[test]
fn json_tables_mirror_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = gam(&["mi-sweep", "--scheme", "psk", "--n", "2", "--snr", "0", "--method", "grid", "--format", "json"], dir.path());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for key in ["snr_db", "scheme", "n", "mi_bits", "std_err", "method"] {
        assert!(rows[0].get(key).is_some(), "{key}");
    }
    assert_eq!(rows[1]["scheme"], "capacity");
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");
    let o = Command::new(env!("CARGO_BIN_EXE_gam"))
        .args(["mi-sweep", "--scheme", "qam", "--n", "4", "--snr", "0", "--method", "grid", "--nodes", "64"])
        .current_dir(dir.path())
        .env("GAM_OUT_DIR", &out)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert!(fs::read_to_string(out.join("mi-sweep.csv")).unwrap().starts_with("snr_db,scheme"));
}

#[test]
fn optimize_writes_result_and_constellation() {
    let dir = tempfile::tempdir().unwrap();
    let o = gam(&["optimize", "--n", "16", "--snr", "4.771212547"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let rec: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("g1-16.result.json")).unwrap()).unwrap();
    let mi = rec["result"]["mi_bits"].as_f64().unwrap();
    assert!((mi - 1.961).abs() <= 0.02, "{mi}");
    assert!(mi >= rec["result"]["init_mi_bits"].as_f64().unwrap());
    assert!(rec["result"]["iterations"].as_u64().is_some());
    assert!(rec["result"]["constraint_residuals"]["power_eq"].as_f64().unwrap().abs() < 1e-6);
    let c = load_constellation(dir.path().join("g1-16.json")).unwrap();
    assert_eq!(c.scheme(), gam_core::Scheme::GbGamG1);
    assert_eq!(c.len(), 16);
}

#[test]
fn optimize_honours_papr_cap() {
    let dir = tempfile::tempdir().unwrap();
    let o = gam(
        &["optimize", "--n", "16", "--snr", "11.76091259", "--papr-cap", "2.0", "--out", "r.json", "--constellation-out", "c.json"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let rec: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert!(rec["result"]["papr"].as_f64().unwrap() <= 2.0 * (1.0 + 1e-6));
    let c = load_constellation(dir.path().join("c.json")).unwrap();
    assert!(c.peak_power() / c.mean_power() <= 2.0 * (1.0 + 1e-6));
}

#[test]
fn strict_non_convergence_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["optimize", "--n", "16", "--snr", "4.8", "--max-iter", "2"];
    assert_eq!(gam(&args, dir.path()).status.code(), Some(0));
    let strict: Vec<&str> = args.iter().copied().chain(["--strict"]).collect();
    assert_eq!(gam(&strict, dir.path()).status.code(), Some(3));
}

#[test]
fn compare_reads_sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let o = gam(
        &["mi-sweep", "--scheme", "gb-hr,qam", "--n", "16", "--snr", "0:20:1", "--method", "grid", "--nodes", "128", "--out", "s.csv"],
        dir.path(),
    );
    assert!(o.status.success());
    let o = gam(&["compare", "--target-mi", "3", "--input", "s.csv", "--format", "json"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let qam_vs_hr = v["pairwise"]
        .as_array()
        .unwrap()
        .iter()
        .find(|g| g["scheme"] == "qam-16" && g["reference"] == "gb-hr-16")
        .unwrap();
    let back = v["pairwise"]
        .as_array()
        .unwrap()
        .iter()
        .find(|g| g["scheme"] == "gb-hr-16" && g["reference"] == "qam-16")
        .unwrap();
    assert_eq!(qam_vs_hr["gap_db"].as_f64().unwrap(), -back["gap_db"].as_f64().unwrap());
    assert!(v["to_capacity"][0]["gap_db"].as_f64().unwrap() > 0.0);

    let o = gam(&["compare", "--target-mi", "5", "--input", "s.csv"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("unreachable"));
}

#[test]
fn failed_numerics_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    // every row fails: grid too coarse
    let o = gam(&["mi-sweep", "--scheme", "qam", "--n", "4", "--snr", "0,5", "--method", "grid", "--nodes", "4"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("row 0"));
}
