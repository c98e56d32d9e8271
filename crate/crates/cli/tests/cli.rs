use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_mrtrim");

fn mrtrim(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .env_remove("MRTRIM_SEED")
        .output()
        .unwrap()
}

#[track_caller]
fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = mrtrim(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn stagewise_matches_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let fuzz = ["--preset", "rq2", "--count", "150", "--seed", "4"];
    let methods = "average,geometric_mean,durbinWatson,add_values";

    let mut args = vec!["pipeline", "-q", "-o", "e2e", "--methods", methods];
    args.extend(fuzz);
    ok(d, &args);

    let mut args = vec!["gen", "-o", "s/td.json"];
    args.extend(fuzz);
    ok(d, &args);
    ok(d, &["transform", "-i", "s/td.json", "-o", "s/transformed.json"]);
    ok(d, &["run", "-i", "s/transformed.json", "-o", "s/raw", "--methods", methods]);
    let raw: Vec<String> = methods.split(',').map(|m| format!("s/raw/{m}.json")).collect();
    let mut args = vec!["check", "-o", "s"];
    args.extend(raw.iter().map(String::as_str));
    ok(d, &args);
    let checked: Vec<String> = methods.split(',').rev().map(|m| format!("s/{m}.json")).collect();
    let mut args = vec!["analyze", "-o", "s/analysis.json"];
    args.extend(checked.iter().map(String::as_str));
    ok(d, &args);
    let mut args = vec!["mine", "s/analysis.json"];
    args.extend(checked.iter().map(String::as_str));
    ok(d, &args);

    for name in ["td.json", "transformed.json", "analysis.json", "durbinWatson.json"] {
        let a = std::fs::read(d.join("e2e").join(name)).unwrap();
        let b = std::fs::read(d.join("s").join(name)).unwrap();
        assert!(a == b, "{name} differs");
    }
    let manifest = json(d.join("e2e/manifest.json"));
    assert_eq!(manifest, json(d.join("e2e/analysis.json"))["manifest"]);
    assert_eq!(manifest["created_at"], 1_700_000_000);
}

#[test]
fn gen_writes_the_requested_data() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = "gen --low 1 --high 50 --input-type int --count 1000 --seed 7 -o td.json";
    ok(d, &args.split(' ').collect::<Vec<_>>());
    let td = json(d.join("td.json"));
    assert_eq!(td["schema"], "mrtrim/td/v1");
    let data = td["data"].as_array().unwrap();
    assert_eq!(data.len(), 1000);
    for datum in data {
        for v in datum["td"].as_array().unwrap() {
            let v = v.as_i64().expect("integers are written without a fraction");
            assert!((1..=50).contains(&v));
        }
    }

    let args = "gen --low -15 --high 15 --min-len 0 --count 500 --seed 7 -o rq2.json";
    ok(d, &args.split(' ').collect::<Vec<_>>());
    let rq2 = json(d.join("rq2.json"));
    let data = rq2["data"].as_array().unwrap();
    assert!(data.iter().any(|x| x["td"].as_array().unwrap().is_empty()));
    assert!(data.iter().flat_map(|x| x["td"].as_array().unwrap()).any(|v| v.as_i64().unwrap() < 0));
}

#[test]
fn seed_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let run = |seed_env: Option<&str>, extra: &[&str], out: &str| {
        let mut c = Command::new(BIN);
        c.args(["gen", "--count", "20", "-o", out]).args(extra).current_dir(d);
        match seed_env {
            Some(s) => c.env("MRTRIM_SEED", s),
            None => c.env_remove("MRTRIM_SEED"),
        };
        assert!(c.output().unwrap().status.success());
        std::fs::read(d.join(out)).unwrap()
    };
    let from_env = run(Some("99"), &[], "a.json");
    let from_flag = run(None, &["--seed", "99"], "b.json");
    let default = run(None, &[], "c.json");
    assert_eq!(from_env, from_flag);
    assert_ne!(from_env, default);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let code = |args: &[&str]| mrtrim(d, args).status.code();

    assert_eq!(code(&["gen", "--low", "5", "--high", "1", "-o", "x.json"]), Some(2));
    assert_eq!(code(&["gen", "--count", "0", "-o", "x.json"]), Some(2));
    assert_eq!(code(&["analyze", "missing.json"]), Some(3));
    assert_eq!(code(&["transform", "-i", "missing.json"]), Some(3));

    ok(d, &["gen", "--count", "5", "-o", "td.json"]);
    let text = std::fs::read_to_string(d.join("td.json")).unwrap();
    std::fs::write(d.join("future.json"), text.replace("mrtrim/td/v1", "mrtrim/td/v999")).unwrap();
    assert_eq!(code(&["transform", "-i", "future.json"]), Some(3));
    std::fs::write(d.join("cut.json"), &text[..text.len() / 3]).unwrap();
    assert_eq!(code(&["transform", "-i", "cut.json"]), Some(3));

    ok(d, &["transform"]);
    assert_eq!(code(&["run", "--methods", "no_such_method"]), Some(4));
    assert_eq!(code(&["run", "--external", "/no/such/program"]), Some(4));
    assert_eq!(code(&["serve", "no_such_method"]), Some(4));

    ok(d, &["run", "--methods", "average"]);
    assert_eq!(code(&["analyze", "executions/average.json"]), Some(2), "unchecked artifact");
    assert_eq!(code(&["check", "--tolerance", "-1", "executions/average.json"]), Some(2));
    ok(d, &["check", "executions/average.json"]);
    ok(d, &["analyze", "executions/average.json"]);
    assert_eq!(code(&["analyze", "executions/average.json", "absent.json"]), Some(3));
}

#[test]
fn external_program_matches_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let base = ["pipeline", "-q", "--preset", "rq2", "--count", "100", "--seed", "3"];
    let mut builtin = base.to_vec();
    builtin.extend(["-o", "builtin", "--methods", "kurtosis"]);
    ok(d, &builtin);
    let mut external = base.to_vec();
    external.extend([
        "-o",
        "external",
        "--external",
        BIN,
        "--external-arg",
        "serve",
        "--external-arg",
        "kurtosis",
        "--name",
        "kurtosis",
    ]);
    ok(d, &external);

    let verdicts = |p: &str| -> Vec<Value> {
        json(d.join(p))["records"]
            .as_array()
            .unwrap()
            .iter()
            .map(|r| r["verdict"]["status"].clone())
            .collect()
    };
    assert_eq!(verdicts("builtin/kurtosis.json"), verdicts("external/kurtosis.json"));
    let a = json(d.join("builtin/analysis.json"))["reports"].clone();
    let b = json(d.join("external/analysis.json"))["reports"].clone();
    assert_eq!(a, b);
}

#[test]
fn show_prints_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["pipeline", "-q", "--preset", "rq1", "--count", "50", "--methods", "durbinWatson,average"]);
    let out = ok(d, &["show", "mrtrim-out/analysis.json"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("method") && lines[0].contains("MR_EXC"));
    assert!(lines[2].starts_with("durbinWatson") && lines[2].contains("N 0.0/100.0"), "{text}");
}
