use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_helm-control"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn helm-control")
}

fn config_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/configs"))
}

#[test]
fn list_shows_bundled_scenarios() {
    let out = run(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let names: Vec<&str> = text.lines().collect();
    assert_eq!(
        names,
        ["freespace_null", "freespace_plane", "ocean_null", "ocean_plane", "ocean_two_controls"]
    );
}

#[test]
fn validate_bundled_files() {
    for entry in std::fs::read_dir(config_dir()).unwrap() {
        let path = entry.unwrap().path();
        let out = run(&["validate", path.to_str().unwrap()]);
        assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
    }
}

fn patched(dir: &Path, from: &str, to: &str) -> std::path::PathBuf {
    let text = std::fs::read_to_string(config_dir().join("freespace_null.toml")).unwrap();
    assert!(text.contains(from));
    let path = dir.join("patched.toml");
    std::fs::write(&path, text.replace(from, to)).unwrap();
    path
}

#[test]
fn region_overlapping_the_source_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = patched(dir.path(), "r = [0.02, 0.03]", "r = [0.012, 0.03]");
    let out = run(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("W1"));
    let out = run(&["run", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = patched(dir.path(), "k = 10.0", "k = -1.0");
    assert_eq!(run(&["validate", cfg.to_str().unwrap()]).status.code(), Some(2));
    let cfg = patched(dir.path(), "n_lon = 18", "n_lon = 18\nbogus = 1");
    assert_eq!(run(&["validate", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["validate", "no_such_scenario"]).status.code(), Some(2));
    let out = run(&["run", "freespace_null", "--epsilon-rel", "2.0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runs_are_reproducible_and_complete() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, threads) in [(&a, "1"), (&b, "2")] {
        let o = run(&["run", "freespace_null", "--out", out.to_str().unwrap(), "--threads", threads]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    let files = manifest["files"].as_array().unwrap();
    assert!(files.len() >= 10);
    for f in files {
        let name = f["path"].as_str().unwrap();
        let left = std::fs::read(a.join(name)).unwrap();
        assert!(!left.is_empty(), "{name} is empty");
        assert_eq!(left.len() as u64, f["bytes"].as_u64().unwrap());
        assert_eq!(left, std::fs::read(b.join(name)).unwrap(), "{name} differs between runs");
    }
    for expected in ["density.csv", "diagnostics.json", "near_W1.csv", "near_W1_offset.csv", "power.json", "errors.json"] {
        assert!(files.iter().any(|f| f["path"] == expected), "missing {expected}");
    }
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn thread_count_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .env("HELM_CONTROL_THREADS", "1")
        .args(["run", "freespace_plane", "--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("freespace_plane"));
}
