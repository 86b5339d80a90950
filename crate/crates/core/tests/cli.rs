use std::path::Path;
use std::process::{Command, Output};

fn rissat(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rissat"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("RISSAT_THREADS", t),
        None => cmd.env_remove("RISSAT_THREADS"),
    };
    cmd.output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

#[test]
fn baseline_writes_one_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", "[scenario]\nfrequency_ghz = 2.0\n");
    let out = tmp.path().join("out");
    let o = rissat(&["run", &cfg, "--experiment", "baseline", "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(files(&out), vec!["fig1_baseline_sweep.csv", "summary.json"]);
    let csv = std::fs::read_to_string(out.join("fig1_baseline_sweep.csv")).unwrap();
    assert!(csv.starts_with("# table=fig1_baseline_sweep\n# config_hash="));
    assert!(csv.contains("\n# seed=none\n"));
    assert!(csv.contains("n_elements,phase_rad,eta\n"));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["experiment"], "baseline");
    assert!(summary["defaults"].as_array().unwrap().iter().any(|k| k == "sweeps.n_values"));
}

#[test]
fn seed_is_required_for_stochastic_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", "");
    let out = tmp.path().join("out");
    let o = rissat(&["run", &cfg, "--experiment", "nie", "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write(tmp.path(), "bad.toml", "[scenario.user]\nlat_deg = 200.0\n");
    let o = rissat(&["validate", &bad], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("scenario.user.lat_deg"));

    let unknown = write(tmp.path(), "unknown.toml", "[adam]\nlr = 0.1\n");
    assert_eq!(rissat(&["validate", &unknown], None).status.code(), Some(2));

    let good = write(tmp.path(), "good.toml", "seed = 1\n");
    let o = rissat(&["validate", &good], None);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("ok config_hash="));

    let o = rissat(&["run", &good, "--experiment", "fig3", "--out", tmp.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    let o = rissat(&["run", &good, "--experiment", "baseline", "--out", tmp.path().join("o").to_str().unwrap()], Some("zero"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn describe_schema() {
    let o = rissat(&["describe-schema", "fig7_multistart"], None);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("run") && text.contains("expected_eta"));
    assert_eq!(rissat(&["describe-schema", "fig4"], None).status.code(), Some(0));
    assert_eq!(rissat(&["describe-schema", "fig3"], None).status.code(), Some(2));
    let o = rissat(&["describe-schema"], None);
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 9);
}

#[test]
fn nie_runs_are_reproducible_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", "seed = 77\n[adam]\nmax_iters = 60\nmc_samples = 100\n[sweeps]\nmultistart_runs = 3\n");
    let mut dirs = Vec::new();
    for (i, threads) in ["1", "4", "4"].iter().enumerate() {
        let out = tmp.path().join(format!("out{i}"));
        let o = rissat(&["run", &cfg, "--experiment", "nie", "--out", out.to_str().unwrap()], Some(threads));
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        dirs.push(out);
    }
    let names = files(&dirs[0]);
    assert_eq!(names.len(), 6);
    for name in names.iter().filter(|n| n.ends_with(".csv")) {
        let first = std::fs::read(dirs[0].join(name)).unwrap();
        for d in &dirs[1..] {
            assert_eq!(first, std::fs::read(d.join(name)).unwrap(), "{name}");
        }
    }
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", "seed = 1\nexperiment = \"baseline\"\n");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(rissat(&["run", &cfg, "--out", a.to_str().unwrap()], None).status.success());
    assert!(rissat(&["run", &cfg, "--out", b.to_str().unwrap(), "--seed", "2"], None).status.success());
    let ta = std::fs::read_to_string(a.join("fig1_baseline_sweep.csv")).unwrap();
    let tb = std::fs::read_to_string(b.join("fig1_baseline_sweep.csv")).unwrap();
    assert!(ta.contains("# seed=1\n") && tb.contains("# seed=2\n"));
    assert_ne!(ta.lines().nth(1), tb.lines().nth(1));
}
