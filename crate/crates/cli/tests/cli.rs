use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use onsager_core::isingcore::{brute_partition, partition_to_z, GridSpec};
use serde_json::Value;

fn onsager(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_onsager"))
        .args(args)
        .env("ONSAGER_CACHE_DIR", cache)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json artifact")
}

fn only_entry(cache: &Path) -> std::path::PathBuf {
    let entries: Vec<_> = fs::read_dir(cache).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(entries.len(), 1, "{entries:?}");
    entries[0].clone()
}

#[test]
fn zseries_of_the_two_by_two_torus() {
    let dir = tempfile::tempdir().unwrap();
    let out = onsager(dir.path(), &["zseries", "--n1", "2", "--n2", "2", "-R", "8", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    let grid = GridSpec::new(2, 2).unwrap();
    let z = partition_to_z(&brute_partition(grid).unwrap().at_y_one(), grid).unwrap();
    let want: Vec<String> = (0..=8).map(|k| z.coeff(k).to_string()).collect();
    let got: Vec<String> =
        v["series"]["coeffs"].as_array().unwrap().iter().map(|c| c.as_str().unwrap().into()).collect();
    assert_eq!(got, want);
    assert_eq!(v["series"]["order"], 8);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["zseries", "--n1", "3", "--n2", "4", "-R", "10", "--format", "json"][..],
        &["verify-onsager", "-R", "10"][..],
        &["magnetize", "--n1", "6", "--x", "3"][..],
    ] {
        let first = onsager(dir.path(), args);
        let second = onsager(dir.path(), args);
        assert_eq!(first.status.code(), Some(0), "{args:?}: {}", stderr(&first));
        assert!(stderr(&first).contains("cache miss"));
        assert!(stderr(&second).contains("cache hit"));
        assert_eq!(first.stdout, second.stdout, "{args:?}");
    }
}

#[test]
fn corrupted_entry_is_recomputed() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["zseries", "--n1", "3", "--n2", "3", "-R", "8", "--format", "json"];
    let first = onsager(dir.path(), &args);
    let path = only_entry(dir.path());
    let mut raw = fs::read(&path).unwrap();
    // flip one byte inside the payload
    let at = raw.windows(7).position(|w| w == b"payload").unwrap() + 12;
    raw[at] ^= 0x01;
    fs::write(&path, &raw).unwrap();
    let second = onsager(dir.path(), &args);
    assert_eq!(second.status.code(), Some(0));
    assert!(stderr(&second).contains("is corrupt"), "{}", stderr(&second));
    assert_eq!(first.stdout, second.stdout);
    // and the entry was rewritten
    let third = onsager(dir.path(), &args);
    assert!(stderr(&third).contains("cache hit"));
}

#[test]
fn stale_version_is_recomputed() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["ising-polys", "-R", "20", "--format", "json"];
    let first = onsager(dir.path(), &args);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    let path = only_entry(dir.path());
    let mut entry: Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
    entry["version"] = Value::from("0.0.1-old");
    fs::write(&path, serde_json::to_vec(&entry).unwrap()).unwrap();
    let second = onsager(dir.path(), &args);
    let log = stderr(&second);
    assert!(log.contains("written by version 0.0.1-old") && log.contains("recomputing"), "{log}");
    assert_eq!(first.stdout, second.stdout);
    let p20 = &json(&second)["polynomials"][9];
    assert_eq!(p20["e"], 20);
}

#[test]
fn full_derivation_at_low_order_reports_an_underdetermined_guess() {
    let dir = tempfile::tempdir().unwrap();
    let out = onsager(dir.path(), &["full-derivation", "-R", "12", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["guess"]["status"], "underdetermined");
    assert_eq!(v["pass"], true);
    assert_eq!(v["closed_form_rows"].as_array().unwrap().len(), 6);
}

#[test]
fn full_derivation_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let out = onsager(dir.path(), &["full-derivation", "-R", "20"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("b_{2r+2}/b_{2r} = r*(2*r+1)^2/(r+1)^3"));
    assert!(text.contains("p_20 = "));
    let verify = onsager(dir.path(), &["verify-onsager", "-R", "20"]);
    assert_eq!(verify.status.code(), Some(0));
    assert!(stderr(&verify).contains("cache hit: guess-g"));
    let text = String::from_utf8(verify.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("b_") && l.ends_with("PASS")).count(), 10);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| onsager(dir.path(), args).status.code();
    assert_eq!(code(&["zseries", "--n1", "2"]), Some(2));
    assert_eq!(code(&["no-such-stage"]), Some(2));
    assert_eq!(code(&["guess-g", "-R", "8", "--c", "3"]), Some(2));
    assert_eq!(code(&["brute", "--n1", "5", "--n2", "6"]), Some(3));
    assert_eq!(code(&["zseries", "--n1", "15", "--n2", "15", "-R", "4"]), Some(3));
    assert_eq!(code(&["verify-onsager", "-R", "8", "--c", "3", "--allow-nonstandard-c"]), Some(4));
}

#[test]
fn relation_json_layout() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&onsager(dir.path(), &["relation", "--format", "json"]));
    let rel = &v["relation"];
    assert!(rel["coeffs"].is_array() && rel["labels"].is_array());
    assert_eq!(rel["coeffs"].as_array().unwrap().len(), 22);
    assert!(rel["residual"].as_str().unwrap().contains('e'));
    assert_eq!(v["matches_oracle"], true);
    let v = json(&onsager(dir.path(), &["relation", "--precision", "6", "--format", "json"]));
    assert!(v["relation"].is_null());
}

#[test]
fn cache_dir_flag_overrides_the_environment() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let out = onsager(
        env_dir.path(),
        &["zseries", "--n1", "2", "--n2", "2", "--cache-dir", flag_dir.path().to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read_dir(env_dir.path()).unwrap().count(), 0);
    assert_eq!(fs::read_dir(flag_dir.path()).unwrap().count(), 1);
}
