use std::path::Path;
use std::process::{Command, Output};

use ve_fracture::benchmarks::{GRIFFITH_STRIP, TWO_WELL};
use ve_fracture::cli_io::{load_archive, save_archive};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ve-fracture")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn run_into(dir: &Path, config: &str, out: &str) -> String {
    let out = dir.join(out).to_string_lossy().into_owned();
    let o = cli(&["run", config, "--output", &out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn run_writes_archive_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "tw.toml", TWO_WELL);
    let out = run_into(dir.path(), &cfg, "tw");
    for f in ["archive.json", "energy.csv", "dissipation.csv", "balance.csv"] {
        assert!(Path::new(&out).join(f).exists(), "{f}");
    }
    assert!(!Path::new(&out).join("tips.csv").exists());
}

#[test]
fn audit_reports_failures_without_failing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "tw.toml", TWO_WELL);
    let out = run_into(dir.path(), &cfg, "tw");
    let path = Path::new(&out).join("archive.json");
    let o = cli(&["audit", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("PASS balance_residual"), "{}", stdout(&o));

    let mut a = load_archive(&path).unwrap();
    a.steps.last_mut().unwrap().record.energy += 0.01;
    let bad = dir.path().join("tampered.json");
    save_archive(&a, &bad).unwrap();
    let o = cli(&["audit", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("FAIL balance_residual"), "{}", stdout(&o));
}

#[test]
fn jumpcost_and_griffith_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "tw.toml", TWO_WELL);
    let out = run_into(dir.path(), &cfg, "tw");
    let archive = Path::new(&out).join("archive.json");
    let o = cli(&["jumpcost", archive.to_str().unwrap(), "--left", "56", "--right", "57"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("c = "), "{}", stdout(&o));
    let o = cli(&["jumpcost", archive.to_str().unwrap(), "--left", "0", "--right", "999"]);
    assert_eq!(o.status.code(), Some(1));
    // No tip paths in the two-well configuration.
    assert_eq!(cli(&["griffith", archive.to_str().unwrap()]).status.code(), Some(1));

    let gcfg = write_config(dir.path(), "gs.toml", GRIFFITH_STRIP);
    let gout = run_into(dir.path(), &gcfg, "gs");
    let garchive = Path::new(&gout).join("archive.json");
    let tips_dir = dir.path().join("tips");
    let o = cli(&["griffith", garchive.to_str().unwrap(), "--paths", "0.5,0,1.5,0", "--output", tips_dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("PASS complementarity"), "{}", stdout(&o));
    assert!(tips_dir.join("tips.csv").exists());
}

#[test]
fn compare_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let ve = write_config(dir.path(), "ve.toml", TWO_WELL);
    let en = write_config(dir.path(), "en.toml", &TWO_WELL.replace("lambda = 0.1", "mode = \"energetic\"\nlambda = 0.1"));
    let o = cli(&["compare", &en, &ve]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("first configuration changes earlier"), "{}", stdout(&o));

    let o = cli(&["sweep", &ve, "--param", "mode", "--values", "ve,energetic"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 3);
    assert_eq!(cli(&["sweep", &ve, "--param", "colour", "--values", "1"]).status.code(), Some(1));
}

#[test]
fn bad_input_exit_codes() {
    let o = cli(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &TWO_WELL.replace("lambda = 0.1", "lambda = 0"));
    let o = cli(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lambda must be positive"));
    assert_eq!(cli(&["audit", "/nonexistent/archive.json"]).status.code(), Some(1));
}
