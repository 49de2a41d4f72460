use std::path::Path;
use std::process::{Command, Output};

fn bml(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bml")).args(args).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn bound_reports_general_and_isotropic_exponents() {
    let out = bml(&["bound", "--d", "100", "--isotropic", "--mu-norm", "2", "--mean-k", "1", "--n", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let e = v["upper"]["exponent"].as_f64().unwrap();
    let iso = v["upper"]["isotropic_exponent"].as_f64().unwrap();
    assert!((e - 16.0 / 15.0).abs() < 1e-14);
    assert!((iso - 8.0 / 7.0).abs() < 1e-14);
    assert_eq!(v["config"]["n"], 10);
    assert_eq!(v["assumptions"]["all_hold"], true);
}

#[test]
fn exit_codes() {
    assert_eq!(bml(&["bound", "--d", "10", "--isotropic", "--n", "5", "--nope"]).status.code(), Some(2));
    assert_eq!(bml(&["bound", "--isotropic", "--n", "5"]).status.code(), Some(2));
    assert_eq!(bml(&["bound", "--d", "0", "--isotropic", "--n", "5"]).status.code(), Some(1));
    assert_eq!(bml(&["sweep", "--config", "/nonexistent/sweep.toml"]).status.code(), Some(2));
}

#[test]
fn sample_is_reproducible_and_echoes_config() {
    let args = ["sample", "--d", "6", "--isotropic", "--mu-norm", "1", "--n", "4", "--seed", "7"];
    let a = bml(&args);
    let b = bml(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config "));
    assert_eq!(lines.next().unwrap(), "y,x1,x2,x3,x4,x5,x6");
    assert_eq!(lines.count(), 4);
}

#[test]
fn solve_emits_one_line_per_solver_plus_trace() {
    let out = bml(&["solve", "--d", "30", "--isotropic", "--mu-norm", "2", "--n", "5", "--iters", "2000"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[..3].iter().all(|l| l["config"]["n"] == 5));
    assert!(lines[3]["checkpoints"].as_array().unwrap().len() > 1);
}

fn run_sweep_into(dir: &Path) {
    let cfg = dir.join("tiny.toml");
    std::fs::write(
        &cfg,
        "alpha = [0.0, 0.5]\nd = [40]\nn = [5]\nr = [0.0, 2.0]\ntrials = 4\nseed = 3\n",
    )
    .unwrap();
    let out = bml(&["sweep", "--config", cfg.to_str().unwrap(), "--out-dir", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["records"], 16);
}

#[test]
fn sweep_outputs_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_sweep_into(a.path());
    run_sweep_into(b.path());
    for f in ["tiny_records.csv", "tiny_cells.csv", "tiny_regression.json", "tiny.gp", "tiny_config.json"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(!x.is_empty(), "{f}");
        assert_eq!(x, y, "{f}");
    }
}
