//! End-to-end tests of the `mcca` binary: exit codes, determinism, and the
//! full pipeline on toy instances.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mcca"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn assert_code(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Scratch directory unique to one test.
fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    if dir.exists() {
        fs::remove_dir_all(&dir).unwrap();
    }
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn path_str(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn gen_is_byte_identical_across_runs() {
    let dir = scratch("gen_deterministic");
    let a = path_str(&dir, "a.json");
    let b = path_str(&dir, "b.json");
    for out in [&a, &b] {
        let res = run(&["gen", "--kind", "gram", "--blocks", "1,1,1", "--seed", "7", "--out", out]);
        assert_code(&res, 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    // a different seed changes the file
    let c = path_str(&dir, "c.json");
    assert_code(&run(&["gen", "--kind", "gram", "--blocks", "1,1,1", "--seed", "8", "--out", &c]), 0);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn full_pipeline_produces_certificate_report() {
    let dir = scratch("pipeline");
    let problem = path_str(&dir, "problem.json");
    assert_code(
        &run(&["gen", "--kind", "spectrum", "--blocks", "2,1,2", "--seed", "3", "--out", &problem]),
        0,
    );

    let horst_out = path_str(&dir, "horst.json");
    let trace = path_str(&dir, "trace.csv");
    assert_code(
        &run(&[
            "horst", "--problem", &problem, "--restarts", "16", "--seed", "1", "--out", &horst_out,
            "--trace", &trace,
        ]),
        0,
    );
    let horst: serde_json::Value = serde_json::from_str(&fs::read_to_string(&horst_out).unwrap()).unwrap();
    // covariance input: weights in original coordinates are reported
    assert!(horst["weights"].is_object());
    let sumcor = horst["sumcor"].as_f64().unwrap();
    let objective = horst["objective"].as_f64().unwrap();
    assert!((objective - (2.0 * sumcor + 3.0)).abs() < 1e-9);
    assert!(fs::read_to_string(&trace).unwrap().starts_with("iteration,objective,log10_rel_change\n"));

    let sdp_out = path_str(&dir, "sdp.json");
    assert_code(&run(&["sdp", "--problem", &problem, "--out", &sdp_out]), 0);

    let report_out = path_str(&dir, "report.json");
    assert_code(
        &run(&["certify", "--problem", &problem, "--restarts", "32", "--seed", "5", "--out", &report_out]),
        0,
    );
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report_out).unwrap()).unwrap();
    let psi = report["psi"].as_f64().unwrap();
    assert!(report["psi_range_ok"].as_bool().unwrap());
    assert!((3.0..=9.0 + 1e-6).contains(&psi));
    assert!(objective <= psi + 1e-5);
    assert!(report["events"]["below_lower_bound"].is_boolean());
}

#[test]
fn invalid_input_exits_2() {
    // spec'd example: an experiment with zero trials is invalid
    let out = run(&["experiment", "--kind", "gram", "--m", "3", "--n-i", "1", "--trials", "0", "--seed", "1"]);
    assert_code(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("trial"));

    // unknown flags are usage errors
    let out = run(&["gen", "--bogus"]);
    assert_code(&out, 2);
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());

    // unparsable problem file
    let dir = scratch("invalid_input");
    let bad = path_str(&dir, "bad.json");
    fs::write(&bad, "{\"blocks\": [1, 1], \"matrix\": [[1.0]]}").unwrap();
    assert_code(&run(&["horst", "--problem", &bad, "--seed", "1"]), 2);
}

#[test]
fn solver_failure_exits_3() {
    let dir = scratch("solver_failure");
    let problem = path_str(&dir, "problem.json");
    assert_code(
        &run(&["gen", "--kind", "gram", "--blocks", "1,1,1", "--seed", "2", "--out", &problem]),
        0,
    );
    // one iteration cannot reach the tolerance
    let out = run(&["sdp", "--problem", &problem, "--maxiter", "1"]);
    assert_code(&out, 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("did not converge"));
}

#[test]
fn experiment_emits_frequency_table() {
    let dir = scratch("experiment");
    let out_path = path_str(&dir, "table.json");
    assert_code(
        &run(&[
            "experiment", "--kind", "gram", "--m", "2", "--n-i", "1", "--trials", "3", "--restarts",
            "8", "--seed", "4", "--out", &out_path,
        ]),
        0,
    );
    let table: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(table["freq"]["below_lower_bound"].as_f64().unwrap(), 0.0);
    assert_eq!(table["trials"].as_array().unwrap().len(), 3);
    assert_eq!(table["config"]["m"].as_u64().unwrap(), 2);
}

#[test]
fn kmcca_and_protocol_run_on_view_files() {
    let dir = scratch("views");
    // two 2-dimensional views of 12 observations, one shared coordinate
    let shared: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).sin()).collect();
    for (name, flip) in [("a.csv", 1.0), ("b.csv", -1.0)] {
        let row2: Vec<String> = (0..12).map(|i| format!("{}", (i as f64 * flip).cos())).collect();
        let row1: Vec<String> = shared.iter().map(|v| format!("{}", flip * v)).collect();
        fs::write(dir.join(name), format!("{}\n{}\n", row1.join(","), row2.join(","))).unwrap();
    }
    let a = path_str(&dir, "a.csv");
    let b = path_str(&dir, "b.csv");

    let bases = path_str(&dir, "bases.json");
    assert_code(
        &run(&["rpbasis", "--views", &a, &b, "--gamma", "0.5", "--k", "1", "--seed", "6", "--out", &bases]),
        0,
    );
    assert!(fs::read_to_string(&bases).unwrap().contains("\"gamma\""));

    let km = path_str(&dir, "kmcca.json");
    assert_code(
        &run(&[
            "kmcca", "--views", &a, &b, "--kappa", "0.1", "--k", "1", "--seed", "8", "--out", &km,
        ]),
        0,
    );
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&km).unwrap()).unwrap();
    // the shared coordinate correlates the views almost perfectly
    assert!(report["train_sumcor"][0].as_f64().unwrap() > 0.9);
    // rbf without --sigma is invalid input
    assert_code(&run(&["kmcca", "--views", &a, &b, "--kernel", "rbf", "--kappa", "0.1", "--seed", "1"]), 2);

    let train_csv = path_str(&dir, "train.csv");
    let test_csv = path_str(&dir, "test.csv");
    let grid_json = path_str(&dir, "grid.json");
    assert_code(
        &run(&[
            "protocol", "--synthetic", "--m", "3", "--n-i", "3", "--s", "40", "--noise", "0.3",
            "--gammas", "0.2,0.8", "--kappas", "0.3,0.6", "--seed", "9", "--train-out", &train_csv,
            "--test-out", &test_csv, "--json", &grid_json,
        ]),
        0,
    );
    let train = fs::read_to_string(&train_csv).unwrap();
    let mut lines = train.lines();
    assert!(lines.next().unwrap().starts_with("# "), "provenance note missing");
    assert_eq!(lines.next().unwrap(), "gamma,kappa=0.3,kappa=0.6");
    assert_eq!(lines.clone().count(), 2);
    assert!(fs::read_to_string(&grid_json).unwrap().contains("synthetic"));
}
