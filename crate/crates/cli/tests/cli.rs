use std::process::{Command, Output};

use serde_json::Value;

fn pdwf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdwf"))
        .args(args)
        .output()
        .expect("run pdwf")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid json")
}

#[test]
fn esf_lists_all_partitions_of_three() {
    let v = json(&pdwf(&["esf", "--n", "3", "--theta", "1"]));
    let m = v.as_object().unwrap();
    assert_eq!(m.len(), 5);
    let s: f64 = m.values().map(|x| x.as_f64().unwrap()).sum();
    assert!((s - 1.0).abs() < 1e-12);
}

#[test]
fn shipped_schema_matches_binary() {
    let live = json(&pdwf(&["schema"]));
    let path = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../docs/command-schema.json"
    );
    let shipped: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(
        live, shipped,
        "regenerate with `pdwf schema --out docs/command-schema.json`"
    );
}

#[test]
fn exit_codes() {
    assert_eq!(pdwf(&["--help"]).status.code(), Some(0));
    assert_eq!(pdwf(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(
        pdwf(&["esf", "--n", "3", "--theta", "-1"]).status.code(),
        Some(1)
    );
    assert_eq!(
        pdwf(&["--threads", "0", "esf", "--n", "2", "--theta", "1"])
            .status
            .code(),
        Some(1)
    );
    let r = pdwf(&[
        "verify", "tv", "--N", "50", "--theta", "1", "--n", "9", "--reps", "1000",
    ]);
    assert_eq!(
        r.status.code(),
        Some(2),
        "stderr: {}",
        String::from_utf8_lossy(&r.stderr)
    );
}

#[test]
fn seed_controls_output() {
    let run = |seed: &str| {
        pdwf(&[
            "--seed",
            seed,
            "crp-sample",
            "--n",
            "6",
            "--theta",
            "1.5",
            "--reps",
            "200",
        ])
        .stdout
    };
    assert_eq!(run("3"), run("3"));
    assert_ne!(run("3"), run("4"));
}

#[test]
fn seed_from_environment() {
    let a = Command::new(env!("CARGO_BIN_EXE_pdwf"))
        .env("PDWF_SEED", "11")
        .args(["crp-sample", "--n", "4", "--theta", "1", "--reps", "100"])
        .output()
        .unwrap();
    let b = pdwf(&[
        "--seed",
        "11",
        "crp-sample",
        "--n",
        "4",
        "--theta",
        "1",
        "--reps",
        "100",
    ]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn bounds_report_is_vacuous_at_small_n() {
    let v = json(&pdwf(&[
        "bounds", "--N", "1000", "--theta", "1", "--n", "3",
    ]));
    assert_eq!(v["corollary"]["vacuous"], true);
    assert_eq!(v["corollary"]["inputs"]["k32_source"]["mode"], "theorem");
    assert!(v["kn2_bound"].as_f64().unwrap() > 1.0);
}

#[test]
fn quick_verify_passes() {
    let v = json(&pdwf(&["--seed", "5", "verify", "all", "--quick"]));
    assert_eq!(v["manifest"]["seed"], 5);
    assert!(v["esf"]["pass"].as_bool().unwrap());
    assert!(v["crp_proposition"]["pass"].as_bool().unwrap());
}
