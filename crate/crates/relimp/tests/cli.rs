use std::path::PathBuf;
use std::process::Command;

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/food_inflation_fy92_fy16.csv")
}

fn relimp(args: &[&str]) -> (bool, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_relimp")).args(args).output().unwrap();
    (
        out.status.success(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn load_check_reports_fixture_shape() {
    let input = fixture();
    let (ok, stdout, _) = relimp(&["load-check", "--input", input.to_str().unwrap(), "--response", "FCPI"]);
    assert!(ok);
    assert!(stdout.contains("rows: 25, columns: 8, response: FCPI"));
    assert!(stdout.contains("periods: FY92 .. FY16"));
    let protein = stdout.lines().find(|l| l.starts_with("ProteinExp")).unwrap();
    assert_eq!(protein.split_whitespace().nth(2), Some("3"));
}

#[test]
fn unknown_response_fails_cleanly() {
    let input = fixture();
    let (ok, _, stderr) = relimp(&["regress", "--input", input.to_str().unwrap(), "--response", "CPI"]);
    assert!(!ok);
    assert!(stderr.contains("response column `CPI` not found"), "{stderr}");
}

#[test]
fn run_then_report_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let input = fixture();
    let (ok, stdout, stderr) = relimp(&[
        "run", "--input", input.to_str().unwrap(), "--response", "FCPI", "--skip-step1",
        "--trees", "300", "--learn-rate", "0.05", "--shuffles", "3", "--pdp-grid", "10",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(ok, "{stderr}");
    assert!(stdout.contains("skipped (variables supplied a priori)"));
    let (ok, report, _) = relimp(&["report", "--out", out.to_str().unwrap()]);
    assert!(ok);
    assert_eq!(report, std::fs::read_to_string(out.join("report.txt")).unwrap());

    let model = out.join("model.json");
    let (ok, stdout, stderr) = relimp(&[
        "importance", "--input", input.to_str().unwrap(), "--response", "FCPI",
        "--model", model.to_str().unwrap(), "--shuffles", "3",
    ]);
    assert!(ok, "{stderr}");
    assert!(stdout.contains("permutation importance"));
}

#[test]
fn econometric_subcommands_write_json() {
    let tmp = tempfile::tempdir().unwrap();
    let input = fixture();
    for (cmd, file) in [("regress", "regression.json"), ("dominance", "dominance.json"), ("relweights", "relative_weights.json")] {
        let (ok, _, stderr) = relimp(&[
            cmd, "--input", input.to_str().unwrap(), "--response", "FCPI", "--out", tmp.path().to_str().unwrap(),
        ]);
        assert!(ok, "{cmd}: {stderr}");
        let text = std::fs::read_to_string(tmp.path().join(file)).unwrap();
        serde_json::from_str::<serde_json::Value>(&text).unwrap();
    }
}
