//! End-to-end tests of the command-line binary: configs in, CSV/JSON
//! out, exit codes by failure class.

use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lindblad-lie"))
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

fn lossless_pair_config(solver: &str, samples: usize) -> Value {
    json!({
        "modes": 2,
        "max_total": 2,
        "sigma": [0.0, 0.0],
        "gamma": [0.0, 0.0],
        "kappa": [1.0],
        "initial_state": {"type": "fock", "occupations": [1, 1]},
        "t_final": 2.0,
        "samples": samples,
        "solver": solver
    })
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process not killed by signal")
}

/// Parses a written CSV into a header row and numeric rows.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn evolve_reproduces_the_lossless_coincidence_formula() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", &lossless_pair_config("eigen", 81));
    let out_path = dir.path().join("series.csv");
    let out = bin().args(["evolve", "--config"]).arg(&cfg).arg("--out").arg(&out_path).output().unwrap();
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));

    let (header, rows) = read_csv(&out_path);
    assert_eq!(header, ["t", "trace", "n_1", "n_2", "G_12", "purity"]);
    assert_eq!(rows.len(), 81);
    for row in &rows {
        let t = row[0];
        assert!((row[1] - 1.0).abs() < 1e-9, "trace drifted at t = {t}");
        let expected = (2.0 * t).cos().powi(2);
        assert!(
            (row[4] - expected).abs() < 1e-9,
            "coincidence off at t = {t}: {} vs {expected}",
            row[4]
        );
    }
}

#[test]
fn evolve_with_all_solvers_writes_the_comparison_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", &lossless_pair_config("all", 21));
    let out_path = dir.path().join("series.csv");
    let out = bin().args(["evolve", "--config"]).arg(&cfg).arg("--out").arg(&out_path).output().unwrap();
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));

    let sidecar = dir.path().join("series.csv.compare.json");
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(&sidecar).unwrap()).unwrap();
    assert_eq!(summary["threshold"].as_f64().unwrap(), 1e-5);
    let pairs = ["oracle_vs_eigen", "oracle_vs_weinorman", "eigen_vs_weinorman"];
    let worst = pairs.iter().map(|k| summary[*k].as_f64().unwrap()).fold(0.0, f64::max);
    assert_eq!(summary["max_distance"].as_f64().unwrap(), worst);
    assert!(worst < 1e-6, "solvers disagree: {worst}");
    assert!(out_path.exists());
}

#[test]
fn compare_prints_the_summary_without_an_output_path() {
    let dir = tempfile::tempdir().unwrap();
    // The configured solver is ignored by compare.
    let cfg = write_config(dir.path(), "run.json", &lossless_pair_config("oracle", 11));
    let out = bin().args(["compare", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    let summary: Value = serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert!(summary["max_distance"].as_f64().unwrap() < 1e-6);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    // Ramped coupling exercises the scheduled-parameter path.
    let cfg = write_config(
        dir.path(),
        "run.json",
        &json!({
            "modes": 2,
            "max_total": 2,
            "sigma": [0.0, 0.0],
            "gamma": [1.0, 0.0],
            "kappa": [{"times": [0.0, 3.0], "values": [1.0, 1.5]}],
            "initial_state": {"type": "fock", "occupations": [1, 1]},
            "t_final": 3.0,
            "samples": 31,
            "solver": "weinorman"
        }),
    );
    let mut bytes = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let out_path = dir.path().join(name);
        let out =
            bin().args(["evolve", "--config"]).arg(&cfg).arg("--out").arg(&out_path).output().unwrap();
        assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
        bytes.push(std::fs::read(&out_path).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);

    let mut scans = Vec::new();
    for name in ["s1.csv", "s2.csv"] {
        let out_path = dir.path().join(name);
        let out = bin()
            .args(["hom-scan", "--kappa", "1.0", "--gammas", "0,0.5,1.0", "--out"])
            .arg(&out_path)
            .output()
            .unwrap();
        assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
        scans.push(std::fs::read(&out_path).unwrap());
    }
    assert_eq!(scans[0], scans[1]);
}

#[test]
fn evolve_accepts_a_mixture_initial_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        &json!({
            "modes": 2,
            "max_total": 2,
            "sigma": [0.0, 0.0],
            "gamma": [0.5, 0.0],
            "kappa": [1.0],
            "initial_state": {"type": "mixture", "terms": [
                {"weight": 0.75, "occupations": [1, 1]},
                {"weight": 0.25, "occupations": [0, 0]}
            ]},
            "t_final": 1.0,
            "samples": 5,
            "solver": "eigen"
        }),
    );
    let out_path = dir.path().join("series.csv");
    let out = bin().args(["evolve", "--config"]).arg(&cfg).arg("--out").arg(&out_path).output().unwrap();
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    let (_, rows) = read_csv(&out_path);
    assert!((rows[0][1] - 1.0).abs() < 1e-12);
    // Purity of the initial statistical mixture, not of a pure state.
    assert!((rows[0][5] - 0.625).abs() < 1e-9);
}

#[test]
fn configuration_problems_exit_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("series.csv");

    let mut empty_grid = lossless_pair_config("oracle", 0);
    empty_grid["samples"] = json!(0);
    let bad_cases: Vec<(&str, Value)> = vec![
        ("empty_grid.json", empty_grid),
        ("unknown_field.json", {
            let mut c = lossless_pair_config("oracle", 5);
            c["typo"] = json!(1.0);
            c
        }),
        ("late_schedule.json", {
            let mut c = lossless_pair_config("oracle", 5);
            c["kappa"] = json!([{"times": [0.5, 3.0], "values": [1.0, 1.5]}]);
            c
        }),
        ("bad_weights.json", {
            let mut c = lossless_pair_config("oracle", 5);
            c["initial_state"] = json!({"type": "mixture", "terms": [
                {"weight": 0.3, "occupations": [1, 1]},
                {"weight": 0.3, "occupations": [0, 0]}
            ]});
            c
        }),
        ("overfull_state.json", {
            let mut c = lossless_pair_config("oracle", 5);
            c["initial_state"] = json!({"type": "fock", "occupations": [2, 1]});
            c
        }),
        ("mode_count_mismatch.json", {
            let mut c = lossless_pair_config("oracle", 5);
            c["gamma"] = json!([0.0]);
            c
        }),
    ];
    for (name, cfg) in &bad_cases {
        let path = write_config(dir.path(), name, cfg);
        let out = bin().args(["evolve", "--config"]).arg(&path).arg("--out").arg(&out_path).output().unwrap();
        assert_eq!(exit_code(&out), 1, "{name} should be rejected");
        assert!(stderr_of(&out).starts_with("error: config:"), "{name}: {}", stderr_of(&out));
        assert!(!out_path.exists(), "{name} must not leave output behind");
    }

    let garbled = dir.path().join("garbled.json");
    std::fs::write(&garbled, "{not json").unwrap();
    let out = bin().args(["evolve", "--config"]).arg(&garbled).arg("--out").arg(&out_path).output().unwrap();
    assert_eq!(exit_code(&out), 1);
    assert!(stderr_of(&out).starts_with("error: config:"));
}

#[test]
fn numerical_failures_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    // Equal eigenvalue pair: the spectral route must refuse, not guess.
    let cfg = write_config(
        dir.path(),
        "run.json",
        &json!({
            "modes": 2,
            "max_total": 2,
            "sigma": [0.0, 0.0],
            "gamma": [2.0, 0.0],
            "kappa": [1.0],
            "initial_state": {"type": "fock", "occupations": [1, 1]},
            "t_final": 1.0,
            "samples": 5,
            "solver": "eigen"
        }),
    );
    let out_path = dir.path().join("series.csv");
    let out = bin().args(["evolve", "--config"]).arg(&cfg).arg("--out").arg(&out_path).output().unwrap();
    assert_eq!(exit_code(&out), 2, "stderr: {}", stderr_of(&out));
    assert!(stderr_of(&out).starts_with("error: numerical:"));
}

#[test]
fn spectrum_reports_the_coupled_pair_eigenvalues() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        &json!({
            "modes": 2,
            "max_total": 2,
            "sigma": [0.0, 0.0],
            "gamma": [1.0, 0.0],
            "kappa": [1.0],
            "initial_state": {"type": "fock", "occupations": [1, 1]},
            "t_final": 1.0,
            "samples": 5,
            "solver": "eigen"
        }),
    );
    let out = bin().args(["spectrum", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    let spec: Value = serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();

    // Balanced pair under the closed form: -mean loss +- i sqrt(k^2 - d^2).
    let om = (1.0f64 - 0.25).sqrt();
    let lam = &spec["lambdas"];
    assert!((lam[0]["re"].as_f64().unwrap() + 0.5).abs() < 1e-12);
    assert!((lam[0]["im"].as_f64().unwrap() + om).abs() < 1e-12);
    assert!((lam[1]["re"].as_f64().unwrap() + 0.5).abs() < 1e-12);
    assert!((lam[1]["im"].as_f64().unwrap() - om).abs() < 1e-12);
    assert!(spec["ep_condition"].as_f64().unwrap() >= 1.0);

    // Replication closure: 4 eigenvalues per mode, slowest-decaying first.
    let multiset = spec["liouville_multiset"].as_array().unwrap();
    assert_eq!(multiset.len(), 8);
    assert!((multiset[0]["re"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((multiset[7]["re"].as_f64().unwrap() + 0.5).abs() < 1e-12);

    // The leading exponent is the steady state; 6x6 state pairs in all.
    let exps = spec["exponents"].as_array().unwrap();
    assert_eq!(exps.len(), 36);
    assert_eq!(exps[0]["alpha"], json!([0, 0]));
    assert_eq!(exps[0]["beta"], json!([0, 0]));
    assert!(exps[0]["re"].as_f64().unwrap().abs() < 1e-12);
    let decreasing = exps
        .windows(2)
        .all(|w| w[0]["re"].as_f64().unwrap() >= w[1]["re"].as_f64().unwrap() - 1e-12);
    assert!(decreasing, "exponents must be sorted slowest first");
}

#[test]
fn spectrum_finds_the_slow_real_branch_past_the_transition() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        &json!({
            "modes": 2,
            "max_total": 2,
            "sigma": [0.0, 0.0],
            "gamma": [2.5, 0.0],
            "kappa": [1.0],
            "initial_state": {"type": "fock", "occupations": [1, 1]},
            "t_final": 1.0,
            "samples": 5,
            "solver": "eigen"
        }),
    );
    let out = bin().args(["spectrum", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    let spec: Value = serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();

    // Past the transition both eigenvalues are real: -1.25 +- 0.75.
    let lam = &spec["lambdas"];
    assert!((lam[0]["re"].as_f64().unwrap() + 0.5).abs() < 1e-12);
    assert!(lam[0]["im"].as_f64().unwrap().abs() < 1e-12);
    assert!((lam[1]["re"].as_f64().unwrap() + 2.0).abs() < 1e-12);

    // The slowest nonzero decay exponent sits at the slow eigenvalue.
    let exps = spec["exponents"].as_array().unwrap();
    assert!((exps[1]["re"].as_f64().unwrap() + 0.5).abs() < 1e-12);
    assert!(exps[1]["im"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn spectrum_of_a_single_lossy_mode_closes_into_four_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        &json!({
            "modes": 1,
            "max_total": 2,
            "sigma": [0.0],
            "gamma": [1.0],
            "kappa": [],
            "initial_state": {"type": "fock", "occupations": [1]},
            "t_final": 1.0,
            "samples": 5,
            "solver": "eigen"
        }),
    );
    let out = bin().args(["spectrum", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    let spec: Value = serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    let lam = &spec["lambdas"];
    assert!((lam[0]["re"].as_f64().unwrap() + 1.0).abs() < 1e-12);
    assert!(lam[0]["im"].as_f64().unwrap().abs() < 1e-12);
    let reals: Vec<f64> = spec["liouville_multiset"]
        .as_array()
        .unwrap()
        .iter()
        .map(|z| z["re"].as_f64().unwrap())
        .collect();
    assert_eq!(reals.len(), 4);
    assert_eq!(reals.iter().filter(|&&r| (r - 1.0).abs() < 1e-12).count(), 2);
    assert_eq!(reals.iter().filter(|&&r| (r + 1.0).abs() < 1e-12).count(), 2);
}

#[test]
fn hom_scan_locates_the_known_dips() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("scan.csv");
    let out = bin()
        .args(["hom-scan", "--kappa", "1.0", "--gammas", "0,1,1.998,2.5", "--out"])
        .arg(&out_path)
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));

    let (header, rows) = read_csv(&out_path);
    assert_eq!(header, ["gamma_over_kappa", "kappa_t_dip", "Gamma_min", "outside_pt_phase"]);
    assert_eq!(rows.len(), 4);

    // Lossless pair: perfect interference dip at kt = pi/4.
    assert!((rows[0][1] - std::f64::consts::FRAC_PI_4).abs() < 1e-6);
    assert!(rows[0][2].abs() < 1e-9);
    assert_eq!(rows[0][3], 0.0);

    // Loss at the coupling rate shifts the dip to arccos(1/4)/sqrt(3).
    let shifted = 0.25f64.acos() / 3f64.sqrt();
    assert!((rows[1][1] - shifted).abs() < 1e-6);
    assert_eq!(rows[1][3], 0.0);

    // Near the phase boundary the dip approaches kt = 1/sqrt(2).
    assert!((rows[2][1] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-2);
    assert_eq!(rows[2][3], 0.0);

    // Beyond the boundary the row is flagged but still carries the dip.
    assert_eq!(rows[3][3], 1.0);
    assert!(rows[3][1].is_finite() && rows[3][2].is_finite());
}

#[test]
fn hom_scan_rejects_a_nonpositive_coupling() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("scan.csv");
    let out = bin()
        .args(["hom-scan", "--kappa", "0.0", "--gammas", "0.5", "--out"])
        .arg(&out_path)
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 1);
    assert!(stderr_of(&out).starts_with("error: config:"));
}

#[test]
fn structure_prints_the_decomposition_both_ways() {
    let out = bin().args(["structure", "--modes", "2"]).output().unwrap();
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(text.contains("12 = 4 (nilpotent) + 2 (abelian) + 3 + 3"), "report was: {text}");

    let out = bin().args(["structure", "--modes", "2", "--json"]).output().unwrap();
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    let report: Value = serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(report["dims"]["total"], json!(12));
    assert_eq!(report["dims"]["nilpotent"], json!(4));
    assert_eq!(report["dims"]["abelian"], json!(2));
    assert_eq!(report["dims"]["sl_left"], json!(3));
    assert_eq!(report["dims"]["sl_right"], json!(3));
    assert_eq!(report["killing_signature"]["positive"], json!(5));
    assert_eq!(report["killing_signature"]["negative"], json!(2));
    assert_eq!(report["killing_signature"]["zero"], json!(5));
    assert!(report["closure_residual"].as_f64().unwrap() < 1e-10);
    assert!(report["jacobi_residual"].as_f64().unwrap() < 1e-10);

    let out = bin().args(["structure", "--modes", "0"]).output().unwrap();
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn command_line_misuse_exits_with_code_one() {
    let out = bin().output().unwrap();
    assert_eq!(exit_code(&out), 1, "bare invocation should fail usage parsing");

    let out = bin().args(["evolve", "--config", "x.json"]).output().unwrap();
    assert_eq!(exit_code(&out), 1, "missing --out should fail usage parsing");

    let out = bin().arg("--help").output().unwrap();
    assert_eq!(exit_code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("hom-scan"));
}
