use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str = r#"
[grid]
n_x = 32
n_k = 32
L_x = 8.0
L_k = 8.0

[run]
t = 0.5
n_paths = 200
"#;

fn lrk(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lrk"));
    cmd.current_dir(dir).args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn setup(config: &str) -> TempDir {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("cfg.toml"), config).unwrap();
    dir
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn values(path: &Path) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn invalid_configs_list_every_problem() {
    let dir = setup("[model]\nalpha = 0.4\n[run]\ngamma = 1.0\n");
    let out = lrk(dir.path(), &["constants", "--config", "cfg.toml"], &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("model.alpha"), "{err}");
    assert!(err.contains("run.gamma") && err.contains("(0, 1)"), "{err}");

    let dir = setup("[grid]\nnx = 32\n");
    let out = lrk(dir.path(), &["solve", "--config", "cfg.toml"], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid.nx: unknown key"));

    let out = lrk(dir.path(), &["solve", "--config", "missing.toml"], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn constants_and_manifest() {
    let dir = setup("");
    let out = lrk(dir.path(), &["constants", "--config", "cfg.toml", "--out", "res"], &[]);
    ok(&out);
    let csv = fs::read_to_string(dir.path().join("res/constants.csv")).unwrap();
    let kappa0 = csv.lines().find(|l| l.starts_with("kappa0,")).unwrap();
    assert_eq!(kappa0, "kappa0,7.5000000000000000e-1");
    let manifest = fs::read_to_string(dir.path().join("res/manifest-constants.toml")).unwrap();
    let doc: toml::Table = manifest.parse().unwrap();
    assert_eq!(doc["manifest"]["command"].as_str(), Some("constants"));
    assert_eq!(doc["config"]["model"]["alpha"].as_float(), Some(0.75));
}

#[test]
fn zero_time_returns_the_input_field() {
    let dir = setup(SMALL);
    ok(&lrk(dir.path(), &["solve", "--config", "cfg.toml", "--out", "a"], &[("LRK_RUN_T", "0")]));
    let first = dir.path().join("a/wigner_fourier.csv");
    let env = [("LRK_RUN_T", "0"), ("LRK_RUN_W0_FILE", "a/wigner_fourier.csv")];
    ok(&lrk(dir.path(), &["solve", "--config", "cfg.toml", "--out", "b"], &env));
    assert_eq!(values(&first), values(&dir.path().join("b/wigner_fourier.csv")));
}

#[test]
fn monte_carlo_output_is_reproducible() {
    let dir = setup(SMALL);
    let run = |out: &str, threads: &str| {
        ok(&lrk(
            dir.path(),
            &["mc", "--config", "cfg.toml", "--seed", "7", "--threads", threads, "--out", out],
            &[],
        ));
        fs::read(dir.path().join(out).join("wigner_mc.csv")).unwrap()
    };
    let a = run("a", "1");
    assert_eq!(a, run("b", "1"));
    assert_eq!(a, run("c", "3"));
    ok(&lrk(dir.path(), &["mc", "--config", "cfg.toml", "--seed", "8", "--out", "d"], &[]));
    assert_ne!(a, fs::read(dir.path().join("d/wigner_mc.csv")).unwrap());
}

#[test]
fn every_solver_writes_a_field() {
    let dir = setup(SMALL);
    for (cmd, file) in [
        ("series", "wigner_series.csv"),
        ("fractional", "wigner_fractional.csv"),
        ("solve", "wigner_fourier.csv"),
    ] {
        ok(&lrk(dir.path(), &[cmd, "--config", "cfg.toml", "--out", "r"], &[]));
        let v = values(&dir.path().join("r").join(file));
        assert_eq!(v.len(), 32 * 32);
        assert!(v.iter().all(|x| x.is_finite()));
    }
}

#[test]
fn field_synthesis_and_eta_sweep() {
    let dir = setup(SMALL);
    ok(&lrk(dir.path(), &["synth-field", "--config", "cfg.toml", "--out", "r"], &[]));
    let field = fs::read_to_string(dir.path().join("r/field.csv")).unwrap();
    assert_eq!(field.lines().count(), 1 + 1024);
    ok(&lrk(dir.path(), &["eta-sweep", "--config", "cfg.toml", "--out", "r"], &[]));
    let sweep = fs::read_to_string(dir.path().join("r/eta_sweep.csv")).unwrap();
    assert_eq!(sweep.lines().next(), Some("eta,l2_error,runtime_seconds"));
    assert_eq!(sweep.lines().count(), 5);
}

#[test]
fn schrodinger_writes_observables() {
    let dir = setup(
        "[run]\nt = 0.05\nepsilons = [0.5]\nn_realizations = 3\nmixture_size = 2\n[grid]\nn_x = 64\nn_k = 64\n",
    );
    ok(&lrk(dir.path(), &["schrodinger", "--config", "cfg.toml", "--out", "r"], &[]));
    let obs = fs::read_to_string(dir.path().join("r/schrodinger_observables.csv")).unwrap();
    assert_eq!(obs.lines().count(), 1 + 16);
    assert!(dir.path().join("r/wigner_schrodinger_eps0.5.csv").exists());
}

#[test]
fn cross_validation_matrix() {
    let dir = setup("[run]\nn_paths = 4000\n");
    let out = lrk(dir.path(), &["cross-validate", "--config", "cfg.toml", "--out", "r"], &[]);
    ok(&out);
    let csv = fs::read_to_string(dir.path().join("r/cross_validation.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true")), "{csv}");
}
