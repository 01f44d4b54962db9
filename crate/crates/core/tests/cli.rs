use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_entroprune");
const GEN: &str = "n=8,d=120,classes=2,accuracy=0.75,correlation=0.3,test_d=120";

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("ENTROPRUNE_SEED")
        .output()
        .expect("binary runs")
}

fn json_ok(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn validator() -> jsonschema::Validator {
    let text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas/report.schema.json")).unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn assert_valid(report: &Value) {
    let v = validator();
    let errors: Vec<String> = v.iter_errors(report).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "schema violations: {errors:#?}");
}

/// Drops every key ending in `_s` (wall times) so reports can be compared.
fn strip_times(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.retain(|k, _| !k.ends_with("_s") && k != "speedup" && k != "efficiency");
            map.values_mut().for_each(strip_times);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_times),
        _ => {}
    }
}

fn error_of(out: &Output) -> Value {
    assert!(!out.status.success());
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("stderr is not empty");
    serde_json::from_str(line).unwrap_or_else(|_| panic!("stderr is not an error object: {text}"))
}

#[test]
fn every_subcommand_emits_schema_valid_json() {
    let cases: Vec<Vec<&str>> = vec![
        vec!["prune", "--generator", GEN, "--k", "3"],
        vec!["prune", "--generator", GEN, "--k", "3", "--algo", "domep", "--machines", "2"],
        vec!["prune", "--generator", GEN, "--k", "3", "--algo", "epfd:kappa", "--machines", "3", "--criterion", "voted-accuracy"],
        vec!["prune", "--generator", GEN, "--k", "3", "--algo", "reduce-error"],
        vec!["sweep-lambda", "--generator", GEN, "--ks", "2,4", "--lambdas", "0,0.5,1"],
        vec!["validate-objective", "--generator", GEN],
        vec!["benchmark", "--generator", GEN, "--k", "3", "--m-list", "1,2", "--repetitions", "1"],
        vec!["oracle", "--generator", GEN, "--k", "3", "--machines", "2"],
        vec!["oracle", "--instances", "5", "--n-max", "8", "--k-max", "3"],
    ];
    for args in cases {
        let report = json_ok(&args);
        assert_eq!(report["command"], args[0]);
        assert_valid(&report);
    }
}

#[test]
fn reports_replay_exactly_apart_from_timings() {
    for args in [
        vec!["prune", "--generator", GEN, "--algo", "random", "--k", "4", "--seed", "9"],
        vec!["prune", "--generator", GEN, "--algo", "domep", "--machines", "3", "--seed", "9"],
        vec!["benchmark", "--generator", GEN, "--m-list", "2", "--repetitions", "1"],
    ] {
        let mut a = json_ok(&args);
        let mut b = json_ok(&args);
        strip_times(&mut a);
        strip_times(&mut b);
        assert_eq!(a, b, "{args:?}");
    }
}

#[test]
fn sweep_rows_cover_the_grid() {
    let report = json_ok(&["sweep-lambda", "--generator", GEN, "--ks", "2,3", "--lambdas", "0.1,0.9"]);
    assert_eq!(report["result"].as_array().unwrap().len(), 4);
}

#[test]
fn csv_output_has_a_header() {
    let out = run(&["prune", "--generator", GEN, "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("algo,lambda,k,"));
    assert!(lines.next().unwrap().starts_with("comep,0.5,5,"));
}

#[test]
fn file_inputs_and_out_path() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.csv");
    let l = dir.path().join("l.csv");
    std::fs::write(&p, "# three members\n0,1,1,0\n0,1,0,0\n\n1,1,1,0\n").unwrap();
    std::fs::write(&l, "0,1,1,0\n").unwrap();
    let out = dir.path().join("report.json");
    let result = run(&[
        "prune",
        "--predictions",
        p.to_str().unwrap(),
        "--labels",
        l.to_str().unwrap(),
        "--k",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    assert!(result.stdout.is_empty(), "nothing on stdout when --out is given");
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_valid(&written);
    // Member 0 matches the labels, so it goes first. Members 1 and 2 are
    // mirror images relative to it and tie; the smaller index wins. The
    // two-member vote ties at position 2 and resolves to class 0.
    assert_eq!(written["result"]["selected"], serde_json::json!([0, 1]));
    assert_eq!(written["result"]["validation_accuracy"], 0.75);
}

#[test]
fn dataset_input_bags_learners() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.csv");
    let mut text = String::from("x,y,label\n");
    for i in 0..90 {
        let c = i % 2;
        let v = if c == 0 { -1.0 } else { 1.0 } + (i as f64 * 0.37).sin() * 0.8;
        text.push_str(&format!("{v},{},{c}\n", (i as f64 * 0.11).cos()));
    }
    std::fs::write(&path, text).unwrap();
    let report = json_ok(&["prune", "--dataset", path.to_str().unwrap(), "--estimators", "7", "--k", "3"]);
    assert_valid(&report);
    assert_eq!(report["result"]["n"], 7);
}

#[test]
fn parse_errors_are_json_on_stderr_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.csv");
    let l = dir.path().join("l.csv");
    std::fs::write(&p, "0,1,1\n0,x,1\n").unwrap();
    std::fs::write(&l, "0,1,1\n").unwrap();
    let out_path = dir.path().join("out.json");
    let out = run(&[
        "prune",
        "--predictions",
        p.to_str().unwrap(),
        "--labels",
        l.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    let err = error_of(&out);
    assert_eq!(err["error"]["kind"], "parse");
    let msg = err["error"]["message"].as_str().unwrap();
    assert!(msg.contains("line 2") && msg.contains("column 2"), "{msg}");
    assert!(out.stdout.is_empty());
    assert!(!out_path.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2, "no stray temp files");
}

#[test]
fn configuration_errors_exit_nonzero() {
    for (args, kind) in [
        (vec!["prune", "--generator", GEN, "--algo", "nope"], "config"),
        (vec!["prune", "--generator", GEN, "--criterion", "nope"], "config"),
        (vec!["prune", "--generator", GEN, "--lambda", "1.5"], "invalid_input"),
        (vec!["prune", "--generator", "n=zero"], "config"),
        (vec!["prune", "--labels", "x.csv"], "config"),
        (vec!["oracle", "--generator", "n=40,d=50", "--k", "20"], "oracle_too_large"),
        (vec!["prune", "--predictions", "/nonexistent/p", "--labels", "/nonexistent/l"], "io"),
    ] {
        let err = error_of(&run(&args));
        assert_eq!(err["error"]["kind"], kind, "{args:?}: {err}");
    }
}

#[test]
fn failed_run_keeps_an_existing_report_intact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    std::fs::write(&out, "previous").unwrap();
    let result = run(&["prune", "--generator", GEN, "--algo", "nope", "--out", out.to_str().unwrap()]);
    assert!(!result.status.success());
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "previous");
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn flags_override_config_file_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(
        &cfg,
        format!("# defaults\nk = 2\nlambda = 0.3\nseed = 5\nalgo = random\ngenerator = {GEN}\n"),
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    let from_file = json_ok(&["prune", "--config", c]);
    assert_eq!(from_file["config"]["k"], 2);
    assert_eq!(from_file["config"]["lambda"], 0.3);
    assert_eq!(from_file["config"]["seed"], 5);
    assert_eq!(from_file["config"]["algo"], "random");

    let overridden = json_ok(&["prune", "--config", c, "--k", "4", "--seed", "6"]);
    assert_eq!(overridden["config"]["k"], 4);
    assert_eq!(overridden["config"]["seed"], 6);
    assert_eq!(overridden["config"]["lambda"], 0.3);
}

#[test]
fn seed_falls_back_to_environment_then_zero() {
    let with_env = |seed: &str, extra: &[&str]| -> Value {
        let out = Command::new(BIN)
            .args(["prune", "--generator", GEN])
            .args(extra)
            .env("ENTROPRUNE_SEED", seed)
            .output()
            .unwrap();
        assert!(out.status.success());
        serde_json::from_slice(&out.stdout).unwrap()
    };
    assert_eq!(with_env("17", &[])["config"]["seed"], 17);
    assert_eq!(with_env("17", &["--seed", "3"])["config"]["seed"], 3);
    assert_eq!(json_ok(&["prune", "--generator", GEN])["config"]["seed"], 0);

    let out = Command::new(BIN)
        .args(["prune", "--generator", GEN])
        .env("ENTROPRUNE_SEED", "abc")
        .output()
        .unwrap();
    assert_eq!(error_of(&out)["error"]["kind"], "config");
}
