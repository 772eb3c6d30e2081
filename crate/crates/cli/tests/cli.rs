use std::path::Path;
use std::process::{Command, Output};

fn zl(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_zeno-learn"));
    cmd.args(args).env_remove("ZENO_LEARN_OUT");
    if let Some(dir) = env_out {
        cmd.env("ZENO_LEARN_OUT", dir);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn error_object(o: &Output) -> serde_json::Value {
    serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap()
}

const CONFIG: &str = r#"
[protocol]
n_qubits = 4
T = 0.3
r = 4
shots = 200
seed = 11

[hamiltonian.random]
seed = 5

[sweep]
axis = "kicks"
grid = [2.0, 8.0]
repeats = 2
"#;

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn plan_lists_three_configurations() {
    let o = zl(&["plan", "--n", "6"], None);
    assert!(o.status.success());
    let text = stdout(&o);
    for frozen in ["{2,5}", "{0,3}", "{1,4}"] {
        assert!(text.contains(frozen), "{text}");
    }
    assert!(text.contains("(0) (2,3) (5)"));
    let o = zl(&["plan", "--n", "6", "--json"], None);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
}

#[test]
fn bounds_prints_tomography_constant() {
    let o = zl(&["bounds", "--n-patch", "2", "--eps", "0.1", "--delta", "0.01"], None);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("C_QPT = 55296"));
    assert!(text.contains("copies per patch = 56127363"));
    let o = zl(&["bounds", "--n", "6", "--t", "0.01"], None);
    let text = stdout(&o);
    let json: serde_json::Value = serde_json::from_str(&text[text.find('{').unwrap()..]).unwrap();
    assert!(json["report"]["r_required"].as_u64().unwrap() >= 1);
    assert_eq!(json["report"]["aggregate"]["n_c"], 3);
}

fn strip_timestamp(mut v: serde_json::Value) -> serde_json::Value {
    v["provenance"]["created_unix"] = serde_json::Value::Null;
    v
}

#[test]
fn run_is_reproducible_and_report_rerenders() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), CONFIG);
    let mut reports = Vec::new();
    for sub in ["a", "b"] {
        let out = dir.path().join(sub);
        let o = zl(&["run", "--config", &config, "--out", out.to_str().unwrap()], None);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join("terms.csv").exists());
        assert_eq!(std::fs::read_dir(out.join("records")).unwrap().count(), 5);
        let text = std::fs::read_to_string(out.join("report.json")).unwrap();
        reports.push(strip_timestamp(serde_json::from_str(&text).unwrap()));
    }
    assert_eq!(
        serde_json::to_string(&reports[0]).unwrap(),
        serde_json::to_string(&reports[1]).unwrap()
    );

    let csv_dir = dir.path().join("csv");
    let report = dir.path().join("a/report.json");
    let o = zl(&["report", report.to_str().unwrap(), "--csv-dir", csv_dir.to_str().unwrap()], None);
    assert!(o.status.success());
    assert!(stdout(&o).contains("l2 error"));
    assert_eq!(
        std::fs::read_to_string(csv_dir.join("terms.csv")).unwrap(),
        std::fs::read_to_string(dir.path().join("a/terms.csv")).unwrap()
    );
}

#[test]
fn output_directory_defaults_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), CONFIG);
    let env_dir = dir.path().join("env-out");
    let o = zl(&["run", "--config", &config], Some(&env_dir));
    assert!(o.status.success());
    assert!(env_dir.join("report.json").exists());
}

#[test]
fn sweep_writes_axis_series() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), CONFIG);
    let out = dir.path().join("s");
    let o = zl(&["sweep", "--config", &config, "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("error-vs-kicks.csv")).unwrap();
    assert!(csv.starts_with("# zeno-learn series v1: error-vs-kicks\n"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn ising_runs_small_chain() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = zl(&["ising", "--n", "4", "--shots", "exact", "--lambda", "0.2", "--out", out], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("ising.json")).unwrap()).unwrap();
    assert_eq!(v["kind"], "ising");
    assert!((v["median_lambda"].as_f64().unwrap() - 0.2).abs() < 1e-3);
}

#[test]
fn invalid_config_exits_one_with_error_object() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &CONFIG.replace("seed = 11", "seed = 11\nunknown = 3"));
    let o = zl(&["run", "--config", &config], Some(dir.path()));
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_object(&o)["error"], "parse");
    assert!(!dir.path().join("report.json").exists());

    let o = zl(&["run", "--config", "/nonexistent/run.toml"], None);
    assert_eq!(o.status.code(), Some(1));
    let o = zl(&["frobnicate"], None);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_object(&o)["error"], "usage");
}

#[test]
fn numeric_failure_exits_two() {
    // Evolution far past the matrix-log branch cut.
    let dir = tempfile::tempdir().unwrap();
    let text = CONFIG.replace("T = 0.3", "T = 40.0").replace("shots = 200", "shots = \"exact\"");
    let config = write_config(dir.path(), &text);
    let o = zl(&["run", "--config", &config], Some(dir.path()));
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(error_object(&o)["error"], "numeric");
}
