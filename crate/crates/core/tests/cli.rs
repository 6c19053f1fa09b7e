use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn altproof(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_altproof"))
        .args(args)
        .current_dir(dir)
        .env_remove("ALTPROOF_EXACT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn best_c_writes_a_verifiable_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let o = altproof(dir.path(), &["best-c", "100"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("best_c 1.414214"), "{text}");
    assert!(text.contains("certificate 100.json"));
    assert!(dir.path().join("100.json").exists());

    let v = altproof(dir.path(), &["verify", "100.json"]);
    assert_eq!(v.status.code(), Some(0));
    assert_eq!(stdout(&v), "valid\n");

    let p = altproof(dir.path(), &["print", "100.json"]);
    assert_eq!(p.status.code(), Some(0));
    assert!(stdout(&p).contains("(Slowdown)"));
}

#[test]
fn tampered_certificate_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = altproof(dir.path(), &["best-c", "1100100", "--certificate", "cert.json"]);
    assert_eq!(o.status.code(), Some(0));
    let path = dir.path().join("cert.json");
    let mut json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    json["initial"] = serde_json::Value::String("3".into());
    fs::write(&path, serde_json::to_string(&json).unwrap()).unwrap();
    let v = altproof(dir.path(), &["verify", "cert.json"]);
    assert_eq!(v.status.code(), Some(1));
    assert!(stdout(&v).starts_with("invalid\n"));
}

#[test]
fn enumerate_lists_and_counts() {
    let dir = tempfile::tempdir().unwrap();
    let o = altproof(dir.path(), &["enumerate", "--length", "9", "--count-only"]);
    assert_eq!(stdout(&o), "14\n");
    let o = altproof(dir.path(), &["enumerate", "--length", "7"]);
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines.len(), 5);
    assert!(lines.contains(&"1100100".to_string()));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(altproof(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(altproof(dir.path(), &["enumerate", "--length", "4"]).status.code(), Some(2));
    assert_eq!(altproof(dir.path(), &["search", "--max-length", "8"]).status.code(), Some(2));
    assert_eq!(altproof(dir.path(), &["best-c", "100", "--precision", "0"]).status.code(), Some(2));
    assert_eq!(altproof(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn domain_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = altproof(dir.path(), &["best-c", "1010"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: invalid annotation"));
    assert_eq!(altproof(dir.path(), &["verify", "missing.json"]).status.code(), Some(1));
}

#[test]
fn export_lp_writes_a_listing() {
    let dir = tempfile::tempdir().unwrap();
    let o = altproof(dir.path(), &["export-lp", "100", "--c", "7/5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("Subject To"));
    assert!(text.contains("d2_dts: a_2_1 - 1.4 a_1_1 >= 0"));
    assert!(text.trim_end().ends_with("End"));

    let o = altproof(dir.path(), &["export-lp", "11000", "--c", "1.5", "--output", "m.lp"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(fs::read_to_string(dir.path().join("m.lp")).unwrap().contains("Minimize"));
}

#[test]
fn search_writes_ledger_report_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["search", "--max-length", "7", "--workers", "2", "--ledger", "r.jsonl", "--report-csv", "r.csv"];
    let o = altproof(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("1100100"));
    let ledger = fs::read_to_string(dir.path().join("r.jsonl")).unwrap();
    assert_eq!(ledger.lines().count(), 8);
    assert!(dir.path().join("certificates/1100100.json").exists());
    let csv = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);

    let again = altproof(dir.path(), &args);
    assert_eq!(again.status.code(), Some(0));
    let mut before: Vec<&str> = ledger.lines().collect();
    let after = fs::read_to_string(dir.path().join("r.jsonl")).unwrap();
    let mut after: Vec<&str> = after.lines().collect();
    before.sort();
    after.sort();
    assert_eq!(before, after);
}

#[test]
fn family_sweep_prints_one_row_per_member() {
    let dir = tempfile::tempdir().unwrap();
    let o = altproof(dir.path(), &["family", "fvm", "--max", "3", "--workers", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let rows: Vec<Vec<String>> = stdout(&o)
        .lines()
        .map(|l| l.split('\t').map(String::from).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][1], "1.414214");
    assert_eq!(rows[2][2], "1110000");
}
