use std::fs;
use std::process::{Command, Output};

fn probqn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_probqn"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const CONFIG: &str = r#"
problem = "linear_ssm"
optimizer = "classic_bfgs"
runs = 2
data_length = 40
k_max = 20
"#;

#[test]
fn missing_config_exits_one_and_names_path() {
    let o = probqn(&["run", "--config", "missing.file"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing.file"));
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, format!("{CONFIG}\nbogus = 1\n")).unwrap();
    let o = probqn(&[
        "run",
        "--config",
        path.to_str().unwrap(),
        "--out-dir",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bogus"));
}

#[test]
fn validate_exits_zero() {
    let o = probqn(&["validate"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
}

#[test]
fn run_screen_bode_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(&cfg, CONFIG).unwrap();
    let out = dir.path().join("out");
    let o = probqn(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "42",
        "--runs",
        "3",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("seed = 42"));
    assert!(manifest.contains("runs = 3"));
    assert!(manifest.contains("master_seed = 42"));
    assert!(manifest.contains("config = "));

    let summary = out.join("summary.csv");
    let o = probqn(&[
        "screen",
        "--summary",
        summary.to_str().unwrap(),
        "--threshold",
        "0.05",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let line = stdout(&o);
    assert!(
        line.starts_with("retained ") && line.contains("/3 runs (threshold 0.05)"),
        "{line}"
    );

    let bode = dir.path().join("bode.csv");
    let o = probqn(&[
        "bode",
        "--summary",
        summary.to_str().unwrap(),
        "--out",
        bode.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&bode).unwrap();
    assert!(text.starts_with("run_id,omega,mag,phase,true_mag,true_phase\n"));
}

#[test]
fn screen_on_missing_summary_is_runtime_failure() {
    let o = probqn(&["screen", "--summary", "/nonexistent/summary.csv"]);
    assert_eq!(o.status.code(), Some(2));
}
