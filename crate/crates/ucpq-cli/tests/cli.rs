//! End-to-end checks of the binary: exit codes, output shapes, and the
//! JSON mode contract (one JSON document on stdout, diagnostics on stderr).

use std::path::Path;
use std::process::{Command, Output};

fn ucpq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ucpq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_example(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("example.json");
    let text = ucpq::save_instance(&ucpq::two_unit_example()).unwrap();
    std::fs::write(&path, text).unwrap();
    path
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn validate_accepts_the_example() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_example(dir.path());
    let out = ucpq(&["validate", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("ok"));
}

#[test]
fn validate_rejects_bad_bounds_naming_the_unit() {
    let dir = tempfile::tempdir().unwrap();
    let mut inst = ucpq::two_unit_example();
    inst.units[0].min_gen = 2.0; // above max_gen = 1
    let path = dir.path().join("bad.json");
    std::fs::write(&path, serde_json::to_string(&inst).unwrap()).unwrap();
    let out = ucpq(&["validate", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).contains("Unit 0"), "stdout: {}", stdout(&out));
}

#[test]
fn validate_rejects_missing_file() {
    let out = ucpq(&["validate", "/nonexistent/instance.json"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn compile_prints_the_published_metrics_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_example(dir.path());
    let out = ucpq(&[
        "compile",
        path.to_str().unwrap(),
        "--penalties",
        "1900,97,96,96",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).trim(), "n=20 nnz=55 density=13.75% max_incident=5");
}

#[test]
fn compile_rejects_boundary_penalties() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_example(dir.path());
    let out = ucpq(&[
        "compile",
        path.to_str().unwrap(),
        "--penalties",
        "1900,96,96,96",
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("strictly exceed"));
}

#[test]
fn compile_writes_matrix_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_example(dir.path());
    let matrix_path = dir.path().join("matrix.coo");
    let out = ucpq(&[
        "compile",
        path.to_str().unwrap(),
        "--penalties",
        "1900,97,96,96",
        "--out",
        matrix_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let matrix_text = std::fs::read_to_string(&matrix_path).unwrap();
    assert!(matrix_text.ends_with("# offset 20900"));
    let parsed = ucpq::QuboMatrix::parse_coo(&matrix_text, 20).unwrap();
    assert_eq!(parsed.nnz(), 55);
    let sidecar: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("matrix.coo.meta.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(sidecar["formulation"], "tailored");
    assert_eq!(sidecar["layout"]["T"], 5);
    assert_eq!(sidecar["layout"]["ordering"], "on,start,gen; t-major, i-minor");
}

#[test]
fn solve_with_robust_start_logic_factor_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_example(dir.path());
    let out = ucpq(&[
        "solve",
        path.to_str().unwrap(),
        "--penalties",
        "1900,200,96,96",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("bitstring: 01111011010110000100"));
    assert!(text.contains("energy: 370"));
    assert!(text.contains("raw energy: -20530"));
    assert!(text.contains("feasible: yes"));
    assert!(text.contains("true cost: 370"));
}

#[test]
fn solve_at_published_factors_reports_the_artifact_and_recovery() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_example(dir.path());
    let out = ucpq(&[
        "solve",
        path.to_str().unwrap(),
        "--penalties",
        "1900,97,96,96",
    ]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    assert!(text.contains("energy: 243"));
    assert!(text.contains("feasible: no"));
    assert!(text.contains("best feasible state: 01111011010110000100 energy 370"));
}

#[test]
fn solve_unreachable_demand_exits_one_with_violations() {
    let dir = tempfile::tempdir().unwrap();
    let mut inst = ucpq::two_unit_example();
    inst.residual_demand = vec![9.0; 5];
    let path = dir.path().join("unreachable.json");
    std::fs::write(&path, serde_json::to_string(&inst).unwrap()).unwrap();
    let out = ucpq(&["solve", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("demand"));
}

#[test]
fn solve_both_reports_the_anneal_gap() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_example(dir.path());
    let out = ucpq(&[
        "solve",
        path.to_str().unwrap(),
        "--penalties",
        "1900,200,96,96",
        "--solver",
        "both",
        "--seed",
        "3",
        "--restarts",
        "30",
        "--sweeps",
        "400",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("solver: exhaustive"));
    assert!(text.contains("solver: anneal"));
    assert!(text.contains("anneal gap over exhaustive:"));
}

#[test]
fn compare_prints_both_rows_and_reference_counts() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_example(dir.path());
    let out = ucpq(&[
        "compare",
        path.to_str().unwrap(),
        "--penalties",
        "1900,97,96,96",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("tailored     20"));
    assert!(text.contains("generic      55"));
    assert!(text.contains("tailored 20/38"));
    assert!(text.contains("generic 50/106"));
}

#[test]
fn compare_rejects_discrete_instances() {
    let dir = tempfile::tempdir().unwrap();
    let mut inst = ucpq::two_unit_example();
    inst.units[0].max_gen = 3.0;
    inst.units[0].step_size = Some(1.0);
    let path = dir.path().join("discrete.json");
    std::fs::write(&path, serde_json::to_string(&inst).unwrap()).unwrap();
    let out = ucpq(&["compare", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("discrete"));
}

#[test]
fn export_writes_the_matrix_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_example(dir.path());
    let out_path = dir.path().join("matrix.json");
    let out = ucpq(&[
        "export",
        path.to_str().unwrap(),
        "--penalties",
        "1900,97,96,96",
        "--format",
        "json",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let parsed = ucpq::QuboMatrix::parse_json(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(parsed.n(), 20);
    assert_eq!(parsed.offset(), 20900.0);
}

#[test]
fn reproduce_paper_passes() {
    let out = ucpq(&["reproduce-paper"]);
    assert_eq!(code(&out), 0, "stdout: {}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("PASS feasible-minimum-bitstring = 01111011010110000100"));
    assert!(text.contains("all assertions passed"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn reproduce_paper_with_corrupted_b_fails() {
    let out = ucpq(&["reproduce-paper", "--override-b", "96"]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("FAIL penalty-rule"));
}

#[test]
fn json_mode_emits_one_document_on_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_example(dir.path());
    let instance = path.to_str().unwrap();
    let commands: Vec<Vec<&str>> = vec![
        vec!["validate", instance, "--json"],
        vec!["compile", instance, "--penalties", "1900,97,96,96", "--json"],
        vec![
            "solve", instance, "--penalties", "1900,200,96,96", "--solver", "anneal", "--restarts",
            "5", "--sweeps", "50", "--json",
        ],
        vec!["compare", instance, "--penalties", "1900,97,96,96", "--json"],
        vec!["reproduce-paper", "--json"],
    ];
    for args in commands {
        let out = ucpq(&args);
        assert_eq!(code(&out), 0, "{args:?} stderr: {}", stderr(&out));
        let text = stdout(&out);
        let doc: serde_json::Value = serde_json::from_str(&text)
            .unwrap_or_else(|e| panic!("{args:?} stdout is not a single JSON doc: {e}\n{text}"));
        assert!(doc.is_object(), "{args:?}");
    }
}

#[test]
fn reproduce_paper_json_carries_all_assertions() {
    let out = ucpq(&["reproduce-paper", "--json"]);
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["pass"], true);
    let assertions = doc["assertions"].as_array().unwrap();
    assert!(assertions.len() >= 12);
    assert!(assertions.iter().all(|a| a["pass"] == true));
    assert!(doc["notes"].as_array().unwrap().len() >= 2);
}
