use std::process::Command;

fn qelab(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_qelab")).args(args).output().expect("run qelab");
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn zoo_lists_catalog() {
    let (code, text) = qelab(&["zoo"]);
    assert_eq!(code, 0);
    assert!(text.lines().count() >= 12);
    let (_, text) = qelab(&["zoo", "--dim", "3"]);
    assert!(text.lines().all(|l| l.contains(" 3D ")));
    let (_, json) = qelab(&["zoo", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["schema_version"], 1);
}

#[test]
fn exit_codes() {
    assert_eq!(qelab(&["verify", "table1-line-exp", "--m", "2"]).0, 0);
    assert_eq!(qelab(&["verify", "thm1-iii", "--m", "1"]).0, 2);
    assert_eq!(qelab(&["verify", "no-such-entry"]).0, 2);
    assert_eq!(qelab(&["asympt", "log-growth"]).0, 1);
    assert_eq!(qelab(&["dim", "euclid3", "--lambda", "0"]).0, 0);
}

#[test]
fn json_report_is_stable() {
    let args = ["asympt", "synthetic", "--tau", "0.8", "--json", "--seed", "5"];
    let strip = |s: String| -> serde_json::Value {
        let mut v: serde_json::Value = serde_json::from_str(&s).unwrap();
        v.as_object_mut().unwrap().remove("wall_time_s");
        v
    };
    let (code, a) = qelab(&args);
    assert_eq!(code, 0);
    let a = strip(a);
    assert_eq!(a, strip(qelab(&args).1));
    assert_eq!(a["seed"], 5);
}

#[test]
fn config_file_and_unknown_keys() {
    let dir = std::env::temp_dir();
    let good = dir.join("qelab-good.json");
    std::fs::write(&good, r#"{"example": "thm1-ii", "grid": "3"}"#).unwrap();
    assert_eq!(qelab(&["verify", "--config", good.to_str().unwrap()]).0, 0);
    let bad = dir.join("qelab-bad.json");
    std::fs::write(&bad, r#"{"example": "thm1-ii", "colour": "red"}"#).unwrap();
    assert_eq!(qelab(&["verify", "--config", bad.to_str().unwrap()]).0, 2);
}

#[test]
fn profile_csv() {
    let (code, csv) = qelab(&["profile", "thm1-ii"]);
    assert_eq!(code, 0);
    assert!(csv.starts_with("t,f,fp,fpp,residual"));
    assert_eq!(csv.lines().count(), 302);
}
