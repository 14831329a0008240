use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fockcut(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fockcut")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn rows(path: &Path) -> Vec<Value> {
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v["rows"].as_array().unwrap().clone()
}

fn json_rows(out: &Output) -> Vec<Value> {
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    v["rows"].as_array().unwrap().clone()
}

#[test]
fn verify_default_passes() {
    let out = fockcut(&["verify", "--format", "json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = json_rows(&out);
    assert!(rows.iter().any(|r| r["check"] == "lowering-shift"));
    assert!(rows.iter().all(|r| r["passed"] == true));
}

#[test]
fn verify_range_beyond_ambient_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "small.toml", "[model]\nkind = \"free\"\n[truncation]\nambient_dim = 2\nidentity_range = 5\n");
    let out = fockcut(&["verify", "--config", &cfg]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("identity_range"));
}

#[test]
fn injected_fault_names_the_shift_identity() {
    let out = fockcut(&["verify", "--inject-fault"]);
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(err.lines().next().unwrap().contains("identity lowering-shift"), "{err}");
}

#[test]
fn free_evolution_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "free.toml", "times = [1.0]\ncutoffs = [8]\n[model]\nkind = \"free\"\n");
    let out = fockcut(&["evolve", "--config", &cfg, "--format", "json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = json_rows(&out);
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert_eq!(r["cutoff"], 8);
        assert!(r["residual"].as_f64().unwrap() <= 1e-9);
    }
}

#[test]
fn two_mode_b_is_invariant() {
    let out = fockcut(&["evolve", "--model", "two_mode", "--format", "json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for r in json_rows(&out) {
        assert_eq!(r["observable"], "B");
        assert!(r["residual"].as_f64().unwrap() <= 1e-10);
    }
}

#[test]
fn time_zero_residuals_vanish() {
    let dir = TempDir::new().unwrap();
    let models = [
        "kind = \"free\"",
        "kind = \"displaced\"\ngamma = 0.2",
        "kind = \"two_mode\"",
        "kind = \"spin_boson\"\nj = 0.5\ngamma = 0.5\nsites = 2",
        "kind = \"spin_boson_multi\"\nj = 0.5\ngammas = [0.5, 0.3]\nsites = 2",
    ];
    for model in models {
        let cfg = write_config(&dir, "zero.toml", &format!("times = [0.0]\ncutoffs = [2, 4]\n[model]\n{model}\n"));
        let out = fockcut(&["evolve", "--config", &cfg, "--format", "json"]);
        assert_eq!(code(&out), 0, "{model}: {}", stderr(&out));
        for r in json_rows(&out) {
            assert_eq!(r["residual"].as_f64().unwrap(), 0.0, "{model}");
        }
    }
}

#[test]
fn free_study_passes_and_writes_both_formats() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("free.json");
    let out = fockcut(&["study", "--model", "free", "--format", "json", "--out", out_path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = rows(&out_path);
    assert!(rows.iter().any(|r| r["check"] == "free_gap"));
    assert!(rows.iter().all(|r| r["satisfied"] == true));
    let csv = std::fs::read_to_string(dir.path().join("free.csv")).unwrap();
    assert_eq!(csv.lines().count(), rows.len() + 1);
    assert!(csv.starts_with("check,cutoff,cutoff_ref,volume,t,decay,k,measured"));
}

#[test]
fn spin_boson_study_bounds_hold() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "sb.toml",
        "[model]\nkind = \"spin_boson\"\nj = 0.5\ngamma = 0.5\nsites = 2\nr = 2\n",
    );
    let out_path = dir.path().join("sb.json");
    let out = fockcut(&["study", "--config", &cfg, "--format", "json", "--out", out_path.to_str().unwrap()]);
    let rows = rows(&out_path);
    let satisfied = |prefix: &str| {
        let picked: Vec<_> = rows.iter().filter(|r| r["check"].as_str().unwrap().starts_with(prefix)).collect();
        assert!(!picked.is_empty(), "{prefix}");
        picked.iter().all(|r| r["satisfied"] == true)
    };
    assert!(satisfied("spin_commutator_l"));
    assert!(satisfied("field_power_l"));
    assert!(satisfied("interaction_spin_tail"));
    assert!(satisfied("spin_closed_form_limit"));
    assert!(satisfied("mode_tail"));
    // the only rows allowed to fail compare the two orders of limits
    let failing: Vec<_> = rows.iter().filter(|r| r["satisfied"] == false).collect();
    assert!(failing.iter().all(|r| r["check"] == "order_of_limits"));
    assert_eq!(code(&out), if failing.is_empty() { 0 } else { 1 });
}

#[test]
fn empty_time_grid_fails_before_computing() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "empty.toml", "times = []\n[model]\nkind = \"free\"\n");
    let out_path = dir.path().join("never.json");
    let out = fockcut(&["study", "--config", &cfg, "--out", out_path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("time grid"));
    assert!(!out_path.exists());
}

#[test]
fn study_needs_a_model() {
    assert_eq!(code(&fockcut(&["study"])), 2);
}

#[test]
fn output_is_byte_identical_across_runs_and_thread_counts() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let run = |path: &Path, jobs: &str| {
        let out = fockcut(&["study", "--model", "displaced", "--format", "json", "--seed", "7", "--jobs", jobs, "--out", path.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    };
    run(&a, "1");
    run(&b, "4");
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let va = fockcut(&["verify", "--seed", "11", "--format", "json"]);
    let vb = fockcut(&["verify", "--seed", "11", "--format", "json", "--jobs", "3"]);
    assert_eq!(va.stdout, vb.stdout);
}

#[test]
fn flags_override_the_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "fmt.toml", "format = \"csv\"\n[model]\nkind = \"free\"\n");
    let out = fockcut(&["verify", "--config", &cfg, "--format", "json"]);
    assert_eq!(code(&out), 0);
    assert!(serde_json::from_slice::<Value>(&out.stdout).is_ok());
    let out = fockcut(&["verify", "--config", &cfg]);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("check,formula"));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "typo.toml", "timez = [1.0]\n[model]\nkind = \"free\"\n");
    assert_eq!(code(&fockcut(&["evolve", "--config", &cfg])), 2);
}
