use std::process::Command;

fn bubblelab(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_bubblelab")).args(args).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap(), text)
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(bubblelab(&["run", "no_such_experiment"]).0, 1);
    assert_eq!(bubblelab(&["sweep", "--param", "eps"]).0, 1);
    assert_eq!(bubblelab(&["run", "zero_speed", "--config", "/nonexistent.toml"]).0, 1);
}

#[test]
fn help_exits_zero() {
    let (code, text) = bubblelab(&["--help"]);
    assert_eq!(code, 0);
    assert!(text.contains("sweep"));
}

#[test]
fn run_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, text) = bubblelab(&["--threads", "2", "run", "commutator_sweep", "--out", out]);
    assert_eq!(code, 0, "{text}");
    let csv = std::fs::read_to_string(dir.path().join("commutator_sweep.csv")).unwrap();
    assert!(csv.starts_with("d,m,s,sigma,epsilon,h_k,N,dt,"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["pass"], true);
}

#[test]
fn under_resolved_run_aborts_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, text) = bubblelab(&["run", "modulated_scaling", "--resolution", "256", "--out", out]);
    assert_eq!(code, 3, "{text}");
    assert!(text.contains("epsilon = 0.025"), "{text}");
}

#[test]
fn failed_assertion_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/commutator_sweep.toml"))
        .unwrap()
        .replace("alphas = [0.3, 0.7]", "alphas = [0.3, 0.7]\nmax_spread = 1.0");
    std::fs::write(&cfg, text).unwrap();
    let (code, out) = bubblelab(&[
        "run",
        "commutator_sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 2, "{out}");
    assert!(out.contains("FAIL spread_alpha"));
}

#[test]
fn sweep_replaces_epsilons() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/modulated_scaling.toml");
    let (code, text) = bubblelab(&[
        "sweep",
        "--param",
        "eps",
        "--values",
        "0.2,0.1,0.05",
        "--config",
        cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{text}");
    let csv = std::fs::read_to_string(dir.path().join("modulated_scaling.csv")).unwrap();
    assert!(!csv.contains(",0.025,"));
    assert!(csv.contains(",0.05,"));
}

#[test]
fn mismatched_config_is_a_usage_error() {
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/zero_speed.toml");
    assert_eq!(bubblelab(&["run", "bubble_norms", "--config", cfg]).0, 1);
}

#[test]
fn preset_prints_loadable_toml() {
    let (code, text) = bubblelab(&["preset", "zero_speed"]);
    assert_eq!(code, 0);
    bubblelab::experiments::ExperimentConfig::from_toml(&text).unwrap();
}
