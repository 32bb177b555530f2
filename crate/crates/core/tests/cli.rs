use std::path::Path;
use std::process::{Command, Output};

use eltqc::dilation::DilatedUnitary;
use eltqc::linalg::ComplexMatrix;
use eltqc::synthesis::SynthesisReport;

fn eltqc(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eltqc"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("ELTQC_OUT")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn dilate_identity() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "id.json",
        r#"{"rows":2,"cols":2,"re":[1,0,0,1],"im":[0,0,0,0]}"#,
    );
    let out = eltqc(&["dilate", "--input", &input], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let u: DilatedUnitary =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("dilated.json")).unwrap())
            .unwrap();
    let expected = ComplexMatrix::from_real(
        4,
        4,
        &[
            1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, -1.0,
        ],
    );
    assert!(u.matrix.max_diff(&expected) < 1e-15);
}

#[test]
fn non_contraction_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "big.json",
        r#"{"rows":2,"cols":2,"re":[2,0,0,1],"im":[0,0,0,0]}"#,
    );
    let out = eltqc(&["dilate", "--input", &input], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("contraction"));
}

#[test]
fn malformed_input_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "bad.json",
        "{\n  \"rows\": 2,\n  \"cols\": 2\n  \"re\": [1, 0, 0, 1],\n  \"im\": [0, 0, 0, 0]\n}",
    );
    let out = eltqc(&["dilate", "--input", &input], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4"), "{err}");

    let input = write(
        dir.path(),
        "short.json",
        r#"{"rows":2,"cols":2,"re":[1,0,0],"im":[0,0,0,0]}"#,
    );
    let out = eltqc(&["dilate", "--input", &input], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("re has 3 entries"));

    let config = write(dir.path(), "cfg.json", "{\n \"grid\": {\"points\": -1}\n}");
    let out = eltqc(&["markovian", "--config", &config], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn synthesize_damping_dilation() {
    let dir = tempfile::tempdir().unwrap();
    let out = eltqc(
        &[
            "synthesize",
            "--gamma-t",
            &std::f64::consts::LN_2.to_string(),
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let reports: Vec<SynthesisReport> =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("synthesis.json")).unwrap())
            .unwrap();
    assert_eq!(reports.len(), 2);
    for r in reports {
        assert!(r.fidelity >= 1.0 - 1e-9);
        assert!(r.cnot_count <= 3);
    }
}

#[test]
fn synthesize_accepts_dilation_output() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(
        dir.path(),
        "m.json",
        r#"{"rows":2,"cols":2,"re":[0.6,0,0,0.3],"im":[0,0.2,0,0]}"#,
    );
    assert!(eltqc(&["dilate", "--input", &m], dir.path())
        .status
        .success());
    let dilated = dir.path().join("dilated.json");
    let out = eltqc(
        &["synthesize", "--input", dilated.to_str().unwrap()],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn zero_shots_writes_statevector_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = eltqc(&["markovian", "--shots", "0"], dir.path());
    assert!(out.status.success());
    assert!(dir.path().join("markovian_exact.csv").exists());
    assert!(dir.path().join("markovian_statevector.csv").exists());
    assert!(!dir.path().join("markovian_shots.csv").exists());
}

#[test]
fn env_var_sets_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_eltqc"))
        .args(["oracle", "--regime", "detuned"])
        .env("ELTQC_OUT", dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.path().join("jc_detuned_exact.csv").exists());
}

#[test]
fn custom_wide_bath_is_nearly_markovian() {
    let dir = tempfile::tempdir().unwrap();
    let out = eltqc(
        &[
            "jc", "--regime", "custom", "--lambda", "100", "--shots", "0",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let load = |name: &str| {
        eltqc::elt::PopulationSeries::from_csv(
            &std::fs::read_to_string(dir.path().join(name)).unwrap(),
        )
        .unwrap()
    };
    let exact = load("jc_custom_exact.csv");
    let elt = load("jc_custom_elt_statevector.csv");
    for k in 0..exact.len() {
        assert!((exact.excited[k] - (-exact.times[k]).exp()).abs() < 0.02);
        assert!((elt.excited[k] - exact.excited[k]).abs() < 5e-3);
    }
}

#[test]
fn fit_weights_from_reference_csv() {
    let dir = tempfile::tempdir().unwrap();
    assert!(eltqc(&["oracle", "--regime", "strong"], dir.path())
        .status
        .success());
    let reference = dir.path().join("jc_strong_exact.csv");
    let out = eltqc(
        &["fit-weights", "--reference", reference.to_str().unwrap()],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fit_report.json")).unwrap())
            .unwrap();
    assert!(report["max_residual"].as_f64().unwrap() < 5e-3);
    assert!(report["outside_hull"]
        .as_array()
        .unwrap()
        .iter()
        .all(|f| f == false));
}
