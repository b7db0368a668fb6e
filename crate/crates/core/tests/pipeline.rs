use shearlayer::ns::fit_slope;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shearlayer"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(cfg: &Path, out: &Path) -> i32 {
    let o = bin().arg("run").arg(cfg).arg("--out").arg(out).output().unwrap();
    o.status.code().unwrap()
}

fn manifest(out: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

fn listed(out: &Path) -> Vec<String> {
    let m = manifest(out);
    let mut files: Vec<String> = m["files"].as_array().unwrap().iter().map(|f| f["path"].as_str().unwrap().to_string()).collect();
    files.sort();
    files
}

fn on_disk(out: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n != "manifest.json")
        .collect();
    v.sort();
    v
}

#[test]
fn couette_run_passes_and_reports_zeros() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run(&config("couette.toml"), d.path()), 0);
    let rate = std::fs::read_to_string(d.path().join("rate_study.csv")).unwrap();
    for line in rate.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[1] <= 1e-10 && v[2] <= 1e-10, "{line}");
    }
    assert_eq!(listed(d.path()), on_disk(d.path()));
    let p = bin().arg("plot").arg(d.path()).output().unwrap();
    assert!(p.status.success());
    for f in on_disk(d.path()).iter().filter(|f| f.ends_with(".svg")) {
        assert!(!std::fs::read_to_string(d.path().join(f)).unwrap().contains("NaN"), "{f}");
    }
    assert_eq!(listed(d.path()), on_disk(d.path()));
}

#[test]
fn invalid_profile_stops_after_validation() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run(&config("quadratic.toml"), d.path()), 1);
    let m = manifest(d.path());
    let stages = m["stages"].as_array().unwrap();
    assert_eq!(stages[0]["name"], "validate");
    assert!(stages[1..].iter().all(|s| s["status"] == "skipped"));
    assert_eq!(on_disk(d.path()), vec!["profile.csv".to_string(), "report.json".to_string()]);
}

#[test]
fn bump_run_is_deterministic_and_plots_match_the_fit() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(run(&config("bump.toml"), a.path()), 0);
    assert_eq!(run(&config("bump.toml"), b.path()), 0);
    let csvs: Vec<String> = on_disk(a.path()).into_iter().filter(|f| f.ends_with(".csv")).collect();
    assert!(csvs.len() > 10);
    for f in &csvs {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let rate = std::fs::read_to_string(a.path().join("rate_study.csv")).unwrap();
    let rows: Vec<Vec<f64>> = rate.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    let eps: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let err: Vec<f64> = rows.iter().map(|r| r[1] + r[2]).collect();
    let fit = fit_slope(&eps, &err);
    assert!(bin().arg("plot").arg(a.path()).status().unwrap().success());
    let svg = std::fs::read_to_string(a.path().join("rate_study.svg")).unwrap();
    let shown: f64 = svg.split("fitted slope = ").nth(1).unwrap().split('<').next().unwrap().parse().unwrap();
    assert!((shown - fit).abs() <= 1e-6, "{shown} vs {fit}");
    assert!(bin().arg("plot").arg(b.path()).status().unwrap().success());
    for f in on_disk(a.path()).iter().filter(|f| f.ends_with(".svg")) {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    assert_eq!(listed(a.path()), on_disk(a.path()));
}

#[test]
fn check_config_and_bad_input() {
    assert!(bin().arg("check-config").arg(config("bump.toml")).status().unwrap().success());
    let d = tempfile::tempdir().unwrap();
    let bad = d.path().join("bad.toml");
    std::fs::write(&bad, "[profile]\nname = \"couette\"\n[grid]\nnx = \"many\"\n").unwrap();
    let o = bin().arg("check-config").arg(&bad).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));
    let o = bin().arg("run").arg(d.path().join("missing.toml")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().arg("run").arg(config("couette.toml")).env("SHEARLAYER_THREADS", "zero").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn plot_on_empty_directory_writes_nothing() {
    let d = tempfile::tempdir().unwrap();
    let o = bin().arg("plot").arg(d.path()).output().unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    assert_eq!(std::fs::read_dir(d.path()).unwrap().count(), 0);
}
