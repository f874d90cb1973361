use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use annulus_vm::io::{read_columns, DIAGNOSTICS_FILE, FAILED_MARKER, FIELDS_FILE, FINAL_FIELDS_FILE, ORACLE_FILE};
use tempfile::TempDir;

const BASE: &str = r#"
[annulus]
r1 = 1.0
r2 = 3.0
delta0 = 0.5
delta = 0.25

[grid]
nr = 32
np = 17
p_max = 1.0
allow_undersized_box = true

[time]
t_end = 0.5

[initial]
center_r = 2.0
width_r = 0.15
temperature = 0.1
amplitude = 1.0
m0 = 0.3
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_annulus-vm"))
}

fn write_cfg(dir: &Path, extra: &str) -> std::path::PathBuf {
    let p = dir.join("cfg.toml");
    fs::write(&p, format!("{BASE}\n{extra}")).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let (header, mut cols) = read_columns(path).unwrap();
    let k = header.iter().position(|h| h == name).unwrap();
    cols.swap_remove(k)
}

#[test]
fn zero_data_stays_zero() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "");
    let text = fs::read_to_string(&cfg).unwrap().replace("[initial]", "[initial]\nkind = \"zero\"");
    fs::write(&cfg, text).unwrap();
    let out = tmp.path().join("run");
    let o = run(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "run"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["E_r", "E_theta", "B"] {
        assert!(column(&out.join(FIELDS_FILE), name).iter().all(|v| *v == 0.0), "{name}");
    }
    assert!(!out.join(FAILED_MARKER).exists());
}

#[test]
fn free_streaming_writes_oracle() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "[diagnostics]\noracle = \"free-streaming\"\nbounds = false\n");
    let out = tmp.path().join("fs");
    let o = run(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "run"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rel = column(&out.join(ORACLE_FILE), "relative_error");
    assert!(rel[0] < 0.1, "{rel:?}");
}

#[test]
fn identical_seeds_give_identical_files() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(
        tmp.path(),
        "[potential]\nkind = \"explicit-csc\"\n",
    );
    let text = fs::read_to_string(&cfg)
        .unwrap()
        .replace("m0 = 0.3", "m0 = 0.3\nmodulation_modes = 3\nmodulation_strength = 0.2");
    fs::write(&cfg, text).unwrap();
    let dirs: Vec<_> = ["a", "b"].iter().map(|d| tmp.path().join(d)).collect();
    for d in &dirs {
        let o = run(&[
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            d.to_str().unwrap(),
            "--seed",
            "7",
            "--cadence",
            "4",
            "run",
        ]);
        assert!(o.status.code().is_some_and(|c| c < 2), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in [DIAGNOSTICS_FILE, FIELDS_FILE, FINAL_FIELDS_FILE] {
        assert_eq!(fs::read(dirs[0].join(f)).unwrap(), fs::read(dirs[1].join(f)).unwrap(), "{f}");
    }
}

#[test]
fn potential_matches_base_below_bar() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "[potential]\nkind = \"explicit-csc\"\n");
    let csv = tmp.path().join("psi.csv");
    let o = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "potential",
        "--t",
        "0",
        "--samples",
        "201",
        "--output",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let base = column(&csv, "psi_base");
    let ext = column(&csv, "psi_ext");
    let bar = column(&csv, "L_bar");
    let mut below = 0;
    for i in 0..base.len() {
        assert!(ext[i] <= bar[i] + 1.0 + 1e-12);
        if base[i] <= bar[i] {
            assert_eq!(ext[i], base[i]);
            below += 1;
        }
    }
    assert!(below > 0);
}

#[test]
fn vacuum_trace_follows_chord() {
    let tmp = TempDir::new().unwrap();
    let csv = tmp.path().join("trace.csv");
    let o = run(&[
        "trace", "--r", "2", "--pr", "0", "--ptheta", "0.5", "--t1", "0.5", "--dt", "1e-3", "--output",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = column(&csv, "t");
    let r = column(&csv, "r");
    let l = column(&csv, "r_ptheta");
    let v = 0.5 / 1.25f64.sqrt();
    for i in 0..t.len() {
        let exact = (4.0 + (v * t[i]).powi(2)).sqrt();
        assert!((r[i] - exact).abs() < 1e-10, "t={} r={} exact={exact}", t[i], r[i]);
        assert!((l[i] - 1.0).abs() < 1e-10);
    }
}

#[test]
fn trace_reports_wall_contact() {
    let o = run(&["trace", "--r", "2.9", "--pr", "0.9", "--ptheta", "0", "--t1", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn check_reads_back_snapshot() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "[potential]\nkind = \"explicit-csc\"\n");
    let out = tmp.path().join("snap");
    let c = cfg.to_str().unwrap();
    let o = run(&["--config", c, "--out", out.to_str().unwrap(), "run"]);
    assert!(o.status.code().is_some_and(|c| c < 2));
    let o = run(&["--config", c, "check", "--snapshot", out.to_str().unwrap()]);
    assert!(o.status.code().is_some_and(|c| c < 2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("total charge"));
}

#[test]
fn bad_configs_exit_with_named_errors() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "");
    let text = fs::read_to_string(&cfg).unwrap();
    fs::write(&cfg, text.replace("delta0 = 0.5", "delta0 = 1.0")).unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "run"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("delta0"));

    fs::write(&cfg, format!("{text}\n[run]\nbogus = 1\n")).unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "run"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
}

#[test]
fn off_unit_cfl_needs_the_override() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_cfg(tmp.path(), "");
    let text = fs::read_to_string(&cfg).unwrap().replace("t_end = 0.5", "t_end = 0.25\ncfl = 0.5");
    fs::write(&cfg, text).unwrap();
    let out = tmp.path().join("cfl");
    let c = cfg.to_str().unwrap();
    let o = run(&["--config", c, "--out", out.to_str().unwrap(), "run"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(out.join(FAILED_MARKER).exists() || !out.join(DIAGNOSTICS_FILE).exists());
    let o = run(&["--config", c, "--out", out.to_str().unwrap(), "--force-unit-cfl-off", "run"]);
    assert!(o.status.code().is_some_and(|c| c < 2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bounds_without_config_uses_unit_norms() {
    let o = run(&["bounds", "--unit-norms", "--t", "1"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let row: Vec<f64> = s.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(&row[1..3], &[13.0, 55.0]);
}
