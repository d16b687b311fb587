use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BINARY: &str = r#"
[mechanism]
setting = "discrete"
d = 0.0
c = 1.0

[mechanism.pi]
1 = 1.0

[run]
x0 = 3
t_max = 20.0
replicas = 20
"#;

const BINARY_DEATHS: &str = r#"
[mechanism]
setting = "discrete"
d = 1.0
c = 1.0

[mechanism.pi]
1 = 1.0
"#;

const FELLER: &str = r#"
[mechanism]
setting = "continuous"
b = 1.0
gamma = 1.0
c = 1.0

[run]
t_max = 2.0
dt = 1e-3
replicas = 10
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn lbp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lbp"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn discrete_run_writes_path_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", BINARY);
    let o = lbp(
        dir.path(),
        &[
            "simulate-discrete",
            "--config",
            cfg.to_str().unwrap(),
            "--plot",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,z"));
    assert_eq!(lines.next(), Some("0,3"));
    assert!(csv.contains("# seed=1"));
    let samples = fs::read_to_string(dir.path().join("out/samples.csv")).unwrap();
    assert_eq!(samples.lines().count(), 21);
    assert!(dir.path().join("out/trajectory.svg").exists());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["command"], "simulate-discrete");
    assert_eq!(report["config"]["run"]["x0"], 3.0);
    assert_eq!(report["pass"], true);
}

#[test]
fn same_seed_same_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", BINARY);
    let cfg = cfg.to_str().unwrap();
    for (out, seed) in [("a", "7"), ("b", "7"), ("c", "8")] {
        let o = lbp(
            dir.path(),
            &[
                "simulate-discrete",
                "--config",
                cfg,
                "--seed",
                seed,
                "--out-dir",
                out,
            ],
        );
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let read = |d: &str, f: &str| fs::read(dir.path().join(d).join(f)).unwrap();
    for f in ["trajectory.csv", "samples.csv"] {
        assert_eq!(read("a", f), read("b", f));
        assert_ne!(read("a", f), read("c", f));
    }
}

#[test]
fn unknown_field_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        &BINARY.replace("c = 1.0", "c = 1.0\ncompetition = 2.0"),
    );
    let o = lbp(
        dir.path(),
        &["simulate-discrete", "--config", cfg.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("`competition`"), "{err}");
    assert!(err.contains("line"), "{err}");
}

#[test]
fn overrides_reach_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", BINARY);
    let cfg = cfg.to_str().unwrap();
    let o = lbp(
        dir.path(),
        &[
            "simulate-discrete",
            "--config",
            cfg,
            "--run.x0=5",
            "--set",
            "run.replicas=4",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().ends_with(",5"));
    assert_eq!(
        fs::read_to_string(dir.path().join("out/samples.csv"))
            .unwrap()
            .lines()
            .count(),
        5
    );

    let o = lbp(
        dir.path(),
        &["simulate-discrete", "--config", cfg, "--run.bogus=1"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`bogus`"));
}

#[test]
fn extinction_without_deaths_is_a_regime_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", BINARY);
    let o = lbp(
        dir.path(),
        &["analyze", "extinction", "--config", cfg.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("regime"), "{}", stderr(&o));
}

#[test]
fn stationary_with_deaths_is_a_regime_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", BINARY_DEATHS);
    let o = lbp(
        dir.path(),
        &["analyze", "stationary", "--config", cfg.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("regime"), "{}", stderr(&o));
}

#[test]
fn stationary_table_is_conditioned_poisson() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", BINARY);
    let o = lbp(
        dir.path(),
        &["analyze", "stationary", "--config", cfg.to_str().unwrap()],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/stationary.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("i,mu,mu_closed_form"));
    // P(N = i | N > 0) for N ~ Poisson(1).
    let mut fact = 1.0;
    for (i, line) in lines.enumerate() {
        let i = i + 1;
        fact *= i as f64;
        let mu: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        let expect = (-1f64).exp() / (1.0 - (-1f64).exp()) / fact;
        assert!((mu - expect).abs() < 1e-12, "i = {i}: {mu} vs {expect}");
    }
}

#[test]
fn riccati_table_has_s_w_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", BINARY_DEATHS);
    let o = lbp(
        dir.path(),
        &["analyze", "riccati", "--config", cfg.to_str().unwrap()],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/riccati.csv")).unwrap();
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "s,w,W");
    let rows = csv.lines().filter(|l| !l.starts_with('#')).skip(1).count();
    assert!(rows > 10);
}

#[test]
fn extinction_table_ends_with_infinity_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", BINARY_DEATHS);
    let o = lbp(
        dir.path(),
        &["analyze", "extinction", "--config", cfg.to_str().unwrap()],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/extinction.csv")).unwrap();
    let last = csv.lines().last().unwrap();
    let cols: Vec<&str> = last.split(',').collect();
    assert_eq!(cols[0], "inf");
    // Closed forms for ρ = d = c = 1, evaluated independently.
    assert!((cols[1].parse::<f64>().unwrap() - 2.08764162).abs() < 1e-7);
    assert!((cols[2].parse::<f64>().unwrap() - 0.22091353).abs() < 1e-7);
}

#[test]
fn sde_and_lamperti_routes_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", FELLER);
    let cfg = cfg.to_str().unwrap();
    let o = lbp(
        dir.path(),
        &["simulate-sde", "--config", cfg, "--out-dir", "sde"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = lbp(
        dir.path(),
        &[
            "simulate-lamperti",
            "--config",
            cfg,
            "--out-dir",
            "lam",
            "--plot",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    for f in [
        "sde/trajectory.csv",
        "lam/trajectory.csv",
        "lam/ou_path.csv",
        "lam/jumps.csv",
        "lam/ou_path.svg",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let jumps = fs::read_to_string(dir.path().join("lam/jumps.csv")).unwrap();
    assert_eq!(jumps.lines().next(), Some("t,size"));
}

#[test]
fn converge_reports_both_schedules() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", FELLER);
    let o = lbp(dir.path(), &["converge", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/converge.csv")).unwrap();
    assert!(csv.contains("\nprimary,0,"));
    assert!(csv.contains("\nalternate,0,"));
}

#[test]
fn validate_stationary_passes_at_reduced_size() {
    let dir = tempfile::tempdir().unwrap();
    let o = lbp(dir.path(), &["validate", "stationary", "--scale", "0.2"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{stdout}{}", stderr(&o));
    assert!(stdout.contains("PASS criterion  1"));
    assert!(stdout.contains("PASS criterion  2"));
}

#[test]
fn missing_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = lbp(dir.path(), &["analyze", "riccati"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--config"));
}
