//! CLI-level acceptance checks: the exit-code table for the classification
//! command (the end-to-end half of the classification criterion) and the
//! bit-identical CSV round trip of the spectrum command.

use std::fs;
use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_dirac-spectral");

fn write_potential(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn qb_json(re: f64, im: f64) -> String {
    format!(
        r#"{{"a1": {{}}, "a2": {{"fourier": [[0, {}, {}]]}}, "a3": {{"fourier": [[0, {re}, {im}]]}}, "a4": {{}}}}"#,
        -re, -im
    )
}

#[test]
fn classification_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let zero = write_potential(dir.path(), "zero.json", r#"{"a1":{},"a2":{},"a3":{},"a4":{}}"#);
    let qb = write_potential(dir.path(), "qb.json", &qb_json(1.2, 0.0));
    let large = write_potential(
        dir.path(),
        "large.json",
        r#"{"a1": {"fourier": [[0, 2.0, 0.0]]},
            "a2": {"fourier": [[0, -1.2, 0.0]]},
            "a3": {"fourier": [[0, 1.2, 0.0]]},
            "a4": {}}"#,
    );

    let classify = |potential: &str| {
        Command::new(BIN)
            .args([
                "classify",
                "--potential",
                potential,
                "--t-nodes",
                "7",
                "--n-range=-3:3",
                "--random-sets",
                "8",
                "--out",
            ])
            .arg(dir.path())
            .output()
            .unwrap()
    };

    let zero_out = classify(&zero);
    assert_eq!(zero_out.status.code(), Some(2), "zero potential must exit 2");
    let qb_out = classify(&qb);
    assert_eq!(qb_out.status.code(), Some(0), "reference potential must exit 0");
    assert!(String::from_utf8_lossy(&qb_out.stdout).contains("\"spectral\""));
    let large_out = classify(&large);
    assert_eq!(large_out.status.code(), Some(3), "large perturbation must exit 3");
    assert!(String::from_utf8_lossy(&large_out.stdout).contains("asymptotically_spectral"));

    println!(
        "ACCEPTANCE 10 (CLI exit codes): PASS — zero → 2, reference → 0, large perturbation → 3"
    );
}

#[test]
fn check_exit_codes_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let qb = write_potential(dir.path(), "qb.json", &qb_json(1.2, 0.0));
    let zero = write_potential(dir.path(), "zero.json", r#"{"a1":{},"a2":{},"a3":{},"a4":{}}"#);
    let bad = write_potential(dir.path(), "bad.json", r#"{"a1": {}}"#);

    let run_check = |potential: &str| {
        Command::new(BIN)
            .args(["check", "--potential", potential, "--out"])
            .arg(dir.path())
            .output()
            .unwrap()
    };
    let ok = run_check(&qb);
    assert_eq!(ok.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(report["regime"], "lemma1");
    assert!(report["condition2"]["satisfied"].as_bool().unwrap());

    assert_eq!(run_check(&zero).status.code(), Some(2));
    assert_eq!(run_check(&bad).status.code(), Some(1));

    // Purely imaginary b: condition fails although the potential is nonzero.
    let imag = write_potential(dir.path(), "imag.json", &qb_json(0.0, 1.0));
    assert_eq!(run_check(&imag).status.code(), Some(2));
}

#[test]
fn spectrum_csv_roundtrip_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let qb = write_potential(dir.path(), "qb.json", &qb_json(1.0, 0.0));
    let status = Command::new(BIN)
        .args([
            "spectrum",
            "--potential",
            &qb,
            "--rect=-5:5:-2:2",
            "--t-nodes",
            "5",
            "--out",
        ])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());

    let csv = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert!(csv.ends_with('\n') && !csv.contains('\r'), "LF line endings");
    let parsed = dirac_spectral::bloch::parse_eigenvalue_table(&csv).unwrap();
    assert!(!parsed.is_empty());
    let rewritten = dirac_spectral::bloch::eigenvalue_table_csv(&parsed);
    assert_eq!(csv, rewritten, "CSV must survive a parse/serialize round trip");

    let svg = fs::read_to_string(dir.path().join("spectrum.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    // Two dashed reference lines at Im λ = ±Re b.
    assert_eq!(svg.matches("stroke-dasharray").count(), 2);
}

#[test]
fn expand_exit_code_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let qb = write_potential(dir.path(), "qb.json", &qb_json(1.2, 0.0));
    let zero = write_potential(dir.path(), "zero.json", r#"{"a1":{},"a2":{},"a3":{},"a4":{}}"#);

    // Separation-condition failure exits 2 before any heavy work.
    let fail = Command::new(BIN)
        .args(["expand", "--potential", &zero, "--gaussian", "0.3", "--k", "2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(fail.status.code(), Some(2));

    let ok = Command::new(BIN)
        .args([
            "expand",
            "--potential",
            &qb,
            "--gaussian",
            "0.3",
            "--k",
            "2",
            "--t-nodes",
            "8",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("expand.json")).unwrap()).unwrap();
    assert!(summary["l2_error"].as_f64().unwrap().is_finite());
    assert!(summary["complete"].as_bool().unwrap());
    let recon = fs::read_to_string(dir.path().join("reconstruction.csv")).unwrap();
    assert!(recon.starts_with("x,re_f1,im_f1,re_f2,im_f2\n"));
}

#[test]
fn oracle_reports_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(BIN)
        .args(["oracle", "--terms", "200000", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["lemma1_attained"].as_bool().unwrap());
    assert!(report["doubling_change"].as_f64().unwrap() < 1e-8);
    for row in report["lemma2"].as_array().unwrap() {
        assert!(row["below"].as_bool().unwrap());
    }
}

#[test]
fn malformed_configs_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let qb = write_potential(dir.path(), "qb.json", &qb_json(1.2, 0.0));

    // Missing file.
    let missing = Command::new(BIN)
        .args(["check", "--potential", "/nonexistent/q.json"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));

    // Bad rectangle.
    let bad_rect = Command::new(BIN)
        .args(["spectrum", "--potential", &qb, "--rect", "1:0:0:1", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(bad_rect.status.code(), Some(1));

    // Unknown argument.
    let unknown = Command::new(BIN).args(["frobnicate"]).output().unwrap();
    assert_eq!(unknown.status.code(), Some(1));

    // Negative tolerance.
    let bad_tol = Command::new(BIN)
        .args(["check", "--potential", &qb, "--tol", "-1e-9", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(bad_tol.status.code(), Some(1));
}
