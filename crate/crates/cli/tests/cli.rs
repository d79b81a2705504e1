use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const GRID: &str = "[group]\nn = 1\n[grid]\nhalf_widths = [2.0, 2.0, 4.0]\nspacing = 0.25\n";

fn hwave(args: &[&str], dir: &Path, threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hwave"));
    cmd.args(args).current_dir(dir).env_remove("HWAVE_THREADS");
    if let Some(t) = threads {
        cmd.env("HWAVE_THREADS", t);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, format!("{GRID}{body}")).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn simulate_succeeds_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sim.toml", "[solver]\nt_end = 0.5\n[experiment]\nname = \"simulate\"\n");
    let out = hwave(&["simulate", "--config", &cfg, "--out-dir", "run"], dir.path(), None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("run/series.csv").exists());
    assert!(dir.path().join("run/report.json").exists());
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(
        dir.path(),
        "bad.toml",
        "[solver]\nt_end = 0.5\nspeed = 2\n[experiment]\nname = \"simulate\"\n",
    );
    let out = hwave(&["simulate", "--config", &unknown], dir.path(), None);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("speed") && err.contains("line"), "{err}");

    let sim = write_config(dir.path(), "sim.toml", "[experiment]\nname = \"simulate\"\n");
    let out = hwave(&["decay", "--config", &sim], dir.path(), None);
    assert_eq!(out.status.code(), Some(2));

    let out = hwave(&["simulate", "--config", "missing.toml"], dir.path(), None);
    assert_eq!(out.status.code(), Some(2));

    let selector = write_config(
        dir.path(),
        "ineq.toml",
        "[experiment]\nname = \"inequality\"\nselector = \"young\"\n",
    );
    let out = hwave(&["inequality", "--config", &selector], dir.path(), None);
    assert_eq!(out.status.code(), Some(2));

    let out = hwave(&["simulate"], dir.path(), None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn empty_fit_window_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "decay.toml",
        "[solver]\nt_end = 1.0\n[data]\nkind = \"plateau_bump\"\n[experiment]\nname = \"decay\"\nfit_windows = [[5.0, 9.0]]\n",
    );
    let out = hwave(&["decay", "--config", &cfg], dir.path(), None);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn numeric_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "linear.toml",
        "[solver]\nt_end = 1.0\nblowup_threshold = 0.5\n[data]\nkind = \"plateau_bump\"\n[experiment]\nname = \"simulate\"\n",
    );
    let out = hwave(&["simulate", "--config", &cfg], dir.path(), None);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn thread_count_and_seed_do_not_change_deterministic_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sim.toml",
        "[solver]\np = 1.5\nt_end = 1.0\n[data]\nkind = \"plateau_bump\"\n[experiment]\nname = \"simulate\"\n",
    );
    let a = hwave(&["simulate", "--config", &cfg, "--out-dir", "a", "--threads", "1"], dir.path(), None);
    let b = hwave(&["simulate", "--config", &cfg, "--out-dir", "b"], dir.path(), Some("4"));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    let read = |d: &str, f: &str| fs::read(dir.path().join(d).join(f)).unwrap();
    assert_eq!(read("a", "series.csv"), read("b", "series.csv"));
    assert_eq!(read("a", "report.json"), read("b", "report.json"));

    let l1 = write_config(
        dir.path(),
        "l1.toml",
        "[experiment]\nname = \"inequality\"\nselector = \"l1l2\"\nfamily_size = 5\n",
    );
    let s1 = hwave(&["inequality", "--config", &l1, "--out-dir", "s1", "--seed", "9"], dir.path(), None);
    let s2 = hwave(&["inequality", "--config", &l1, "--out-dir", "s2", "--seed", "9"], dir.path(), None);
    assert_eq!(s1.status.code(), Some(0));
    assert_eq!(s2.status.code(), Some(0));
    assert_eq!(read("s1", "report.json"), read("s2", "report.json"));
    let text = String::from_utf8(read("s1", "report.json")).unwrap();
    assert!(text.contains("seed = 9"), "{text}");
}
