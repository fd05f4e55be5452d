use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const D4: &str = "A,B,C,D\n1,1,1,1\n1,2,1,2\n2,2,1,1\n2,1,2,2\n";
const D4_FDS: &str = "A -> B\nC -> D\n";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fdrepair"))
}

struct Work {
    dir: TempDir,
}

impl Work {
    fn new() -> Self {
        Work {
            dir: TempDir::new().unwrap(),
        }
    }

    fn file(&self, name: &str, text: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        bin().current_dir(self.dir.path()).args(args).output().unwrap()
    }
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "bad json ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn d4(w: &Work) {
    w.file("d4.csv", D4);
    w.file("d4.fds", D4_FDS);
}

fn schema_for(definition: &str) -> jsonschema::JSONSchema {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/report.schema.json");
    let mut schema: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    let obj = schema.as_object_mut().unwrap();
    obj.remove("oneOf");
    obj.insert("$ref".into(), Value::String(format!("#/definitions/{definition}")));
    jsonschema::JSONSchema::compile(&schema).unwrap()
}

fn assert_valid(definition: &str, doc: &Value) {
    let schema = schema_for(definition);
    if let Err(errors) = schema.validate(doc) {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("{definition} invalid: {msgs:?}\n{doc:#}");
    };
}

#[test]
fn consistent_input_needs_nothing() {
    let w = Work::new();
    w.file("ok.csv", "A,B\n1,1\n2,2\n1,1\n");
    w.file("ok.fds", "A -> B\n");
    let out = w.run(&["repair", "--data", "ok.csv", "--fds", "ok.fds", "--tau", "0"]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_eq!(r["status"], "repaired");
    assert_eq!(r["repair"]["extensions"], serde_json::json!([[]]));
    assert_eq!(r["repair"]["edits"], serde_json::json!([]));
    assert_eq!(r["delta_p_input"], 0);
}

#[test]
fn zero_budget_relaxes_fds_only() {
    let w = Work::new();
    d4(&w);
    let out = w.run(&["repair", "--data", "d4.csv", "--fds", "d4.fds", "--tau", "0", "--weight", "count"]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_eq!(r["repair"]["dist_d"], 0);
    assert_eq!(r["repair"]["edits"], serde_json::json!([]));
    assert!(r["repair"]["dist_c"].as_f64().unwrap() > 0.0);
}

#[test]
fn unresolvable_input_exits_two() {
    let w = Work::new();
    w.file("u.csv", "A,B\n1,1\n1,2\n");
    w.file("u.fds", "A -> B\n");
    let out = w.run(&["repair", "--data", "u.csv", "--fds", "u.fds", "--tau", "0"]);
    assert_eq!(code(&out), 2);
    let r = json(&out);
    assert_eq!(r["status"], "empty");
    assert!(r["reason"].as_str().unwrap().contains("tau = 0"));
    assert!(!out.stderr.is_empty());
    assert_valid("repairReport", &r);
}

#[test]
fn input_errors_exit_one() {
    let w = Work::new();
    d4(&w);
    w.file("bad.fds", "A -> Z\n");
    let cases: Vec<Vec<&str>> = vec![
        vec!["repair", "--data", "missing.csv", "--fds", "d4.fds", "--tau", "1"],
        vec!["repair", "--data", "d4.csv", "--fds", "bad.fds", "--tau", "1"],
        vec!["repair", "--data", "d4.csv", "--fds", "d4.fds"],
        vec!["repair", "--data", "d4.csv", "--fds", "d4.fds", "--tau", "1", "--tau-rel", "0.5"],
        vec!["repair", "--data", "d4.csv", "--fds", "d4.fds", "--tau-rel", "1.5"],
        vec!["repair-range", "--data", "d4.csv", "--fds", "d4.fds", "--tau-min", "3", "--tau-max", "1"],
        vec!["frobnicate"],
    ];
    for args in cases {
        let out = w.run(&args);
        assert_eq!(code(&out), 1, "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
    }
    assert_eq!(code(&w.run(&["--help"])), 0);
}

#[test]
fn d4_budget_two() {
    let w = Work::new();
    d4(&w);
    let out = w.run(&[
        "repair", "--data", "d4.csv", "--fds", "d4.fds", "--tau", "2", "--weight", "count",
        "--repaired-out", "r.csv", "--fds-out", "r.fds",
    ]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_eq!(r["repair"]["fds"], serde_json::json!(["A,C -> B", "C -> D"]));
    assert_eq!(r["repair"]["dist_c"], 1.0);
    assert_eq!(fs::read_to_string(w.path("r.fds")).unwrap().trim(), "A,C -> B\nC -> D");
    let repaired = fs::read_to_string(w.path("r.csv")).unwrap();
    assert_eq!(repaired.lines().count(), 5);
    assert_valid("repairReport", &r);
}

#[test]
fn relative_budget_uses_input_bound() {
    let w = Work::new();
    d4(&w);
    let out = w.run(&["repair", "--data", "d4.csv", "--fds", "d4.fds", "--tau-rel", "0.5", "--weight", "count"]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_eq!(r["tau"], 2);
    assert_eq!(r["tau_relative"], 0.5);
    assert_eq!(r["tau_basis"], "delta_p");
}

#[test]
fn degenerate_range_matches_single_budget() {
    let w = Work::new();
    d4(&w);
    for weight in ["count", "distinct"] {
        for tau in 0..=4 {
            let t = tau.to_string();
            let single = w.run(&[
                "repair", "--data", "d4.csv", "--fds", "d4.fds", "--tau", &t, "--weight", weight, "--seed", "7",
            ]);
            let range = w.run(&[
                "repair-range", "--data", "d4.csv", "--fds", "d4.fds", "--tau-min", &t, "--tau-max", &t,
                "--weight", weight, "--seed", "7",
            ]);
            assert_eq!(code(&single), 0);
            assert_eq!(code(&range), 0);
            let s = json(&single);
            let r = json(&range);
            let entries = r.as_array().unwrap();
            assert_eq!(entries.len(), 1);
            let a = serde_json::to_string_pretty(&s["repair"]).unwrap();
            let b = serde_json::to_string_pretty(&entries[0]["report"]["repair"]).unwrap();
            assert_eq!(a, b, "weight {weight}, tau {tau}");
        }
    }
}

#[test]
fn full_range_decreases_bound() {
    let w = Work::new();
    d4(&w);
    let out = w.run(&["repair-range", "--data", "d4.csv", "--fds", "d4.fds", "--weight", "count"]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_valid("frontierReport", &r);
    let entries = r.as_array().unwrap();
    let bounds: Vec<u64> = entries
        .iter()
        .map(|e| e["report"]["repair"]["delta_p"].as_u64().unwrap())
        .collect();
    assert_eq!(bounds, vec![4, 2, 0]);
    let bands: Vec<(u64, u64)> = entries
        .iter()
        .map(|e| (e["tau_lo"].as_u64().unwrap(), e["tau_hi"].as_u64().unwrap()))
        .collect();
    assert_eq!(bands, vec![(4, 4), (2, 3), (0, 1)]);
    assert_eq!(entries[1]["tau_r_lo"], 0.5);
}

#[test]
fn range_matches_per_budget_runs() {
    let w = Work::new();
    w.file(
        "e.csv",
        "A,B,C,D\n1,1,1,1\n1,2,1,2\n2,2,1,1\n2,1,2,2\n1,1,2,2\n3,1,1,2\n3,2,2,1\n",
    );
    w.file("e.fds", "A -> B\nC -> D\nB -> D\n");
    let range = json(&w.run(&["repair-range", "--data", "e.csv", "--fds", "e.fds", "--weight", "count"]));
    for entry in range.as_array().unwrap() {
        let (lo, hi) = (entry["tau_lo"].as_u64().unwrap(), entry["tau_hi"].as_u64().unwrap());
        for tau in lo..=hi {
            let t = tau.to_string();
            let single = json(&w.run(&["repair", "--data", "e.csv", "--fds", "e.fds", "--tau", &t, "--weight", "count"]));
            assert_eq!(single["repair"]["fds"], entry["report"]["repair"]["fds"], "tau {tau}");
        }
    }
}

#[test]
fn empty_range_exits_two() {
    let w = Work::new();
    w.file("u.csv", "A,B\n1,1\n1,2\n");
    w.file("u.fds", "A -> B\n");
    let out = w.run(&["repair-range", "--data", "u.csv", "--fds", "u.fds", "--tau-min", "0", "--tau-max", "0"]);
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out), serde_json::json!([]));
}

#[test]
fn inject_with_zero_rates_copies_inputs() {
    let w = Work::new();
    d4(&w);
    let out = w.run(&[
        "inject", "--data", "d4.csv", "--fds", "d4.fds", "--data-out", "dirty.csv", "--fds-out", "dirty.fds",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read_to_string(w.path("dirty.csv")).unwrap(), D4);
    assert_eq!(fs::read_to_string(w.path("dirty.fds")).unwrap().trim(), D4_FDS.trim());
    let r = json(&out);
    assert_eq!(r["injected"], serde_json::json!([]));
    assert_valid("injectReport", &r);
}

#[test]
fn perfect_repair_scores_one() {
    let w = Work::new();
    d4(&w);
    let out = w.run(&[
        "score", "--clean", "d4.csv", "--dirty", "d4.csv", "--repaired", "d4.csv", "--fds-clean", "d4.fds",
        "--fds-dirty", "d4.fds", "--fds-repaired", "d4.fds",
    ]);
    assert_eq!(code(&out), 0);
    let s = json(&out);
    assert_valid("qualityScores", &s);
    for (_, v) in s.as_object().unwrap() {
        assert_eq!(v.as_f64().unwrap(), 1.0);
    }
}

#[test]
fn misaligned_scores_exit_one() {
    let w = Work::new();
    d4(&w);
    w.file("short.csv", "A,B,C,D\n1,1,1,1\n");
    let out = w.run(&[
        "score", "--clean", "d4.csv", "--dirty", "short.csv", "--repaired", "d4.csv", "--fds-clean", "d4.fds",
        "--fds-dirty", "d4.fds", "--fds-repaired", "d4.fds",
    ]);
    assert_eq!(code(&out), 1);
}

fn synthetic_csv(rows: usize) -> String {
    let mut s = String::from("A,B,C,D\n");
    for i in 0..rows {
        let (a, b) = (i % 6, (i / 6) % 3);
        s.push_str(&format!("{a},{b},c{},{}\n", a * 3 + b, i % 2));
    }
    s
}

#[test]
fn pipeline_runs_end_to_end() {
    let w = Work::new();
    w.file("clean.csv", &synthetic_csv(36));
    w.file("clean.fds", "A,B -> C\nA,B,C -> D\n");
    let inject = w.run(&[
        "inject", "--data", "clean.csv", "--fds", "clean.fds", "--data-rate", "0.05", "--fd-rate", "0.3",
        "--seed", "3", "--data-out", "dirty.csv", "--fds-out", "dirty.fds", "--out", "truth.json",
    ]);
    assert_eq!(code(&inject), 0, "{}", String::from_utf8_lossy(&inject.stderr));
    let truth: Value = serde_json::from_str(&fs::read_to_string(w.path("truth.json")).unwrap()).unwrap();
    assert!(!truth["injected"].as_array().unwrap().is_empty());

    let repair = w.run(&[
        "repair", "--data", "dirty.csv", "--fds", "dirty.fds", "--tau-rel", "1", "--repaired-out", "rep.csv",
        "--fds-out", "rep.fds",
    ]);
    assert_eq!(code(&repair), 0, "{}", String::from_utf8_lossy(&repair.stderr));

    let score = w.run(&[
        "score", "--clean", "clean.csv", "--dirty", "dirty.csv", "--repaired", "rep.csv", "--fds-clean",
        "clean.fds", "--fds-dirty", "dirty.fds", "--fds-repaired", "rep.fds",
    ]);
    assert_eq!(code(&score), 0, "{}", String::from_utf8_lossy(&score.stderr));
    let s = json(&score);
    assert_valid("qualityScores", &s);

    let table = w.run(&[
        "score", "--clean", "clean.csv", "--dirty", "dirty.csv", "--repaired", "rep.csv", "--fds-clean",
        "clean.fds", "--fds-dirty", "dirty.fds", "--fds-repaired", "rep.fds", "--format", "table",
    ]);
    let text = String::from_utf8(table.stdout).unwrap();
    assert!(text.starts_with("metric"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn graph_dump_lists_edges() {
    let w = Work::new();
    d4(&w);
    let out = w.run(&["graph", "--data", "d4.csv", "--fds", "d4.fds"]);
    assert_eq!(code(&out), 0);
    let g = json(&out);
    assert_valid("graphDump", &g);
    assert_eq!(g["vertices"], 4);
    assert_eq!(g["edges"].as_array().unwrap().len(), 3);
}

#[test]
fn repeated_commands_are_byte_identical() {
    let w = Work::new();
    d4(&w);
    w.file("clean.csv", &synthetic_csv(30));
    w.file("clean.fds", "A,B -> C\n");
    let commands: Vec<Vec<&str>> = vec![
        vec!["repair", "--data", "d4.csv", "--fds", "d4.fds", "--tau", "2", "--seed", "5"],
        vec!["repair", "--data", "d4.csv", "--fds", "d4.fds", "--tau", "3", "--format", "table"],
        vec!["repair-range", "--data", "d4.csv", "--fds", "d4.fds", "--seed", "9"],
        vec!["graph", "--data", "d4.csv", "--fds", "d4.fds"],
        vec![
            "inject", "--data", "clean.csv", "--fds", "clean.fds", "--data-rate", "0.1", "--seed", "4",
            "--data-out", "x.csv", "--fds-out", "x.fds",
        ],
    ];
    for args in commands {
        let a = w.run(&args);
        let b = w.run(&args);
        assert_eq!(code(&a), code(&b));
        assert!(!a.stdout.is_empty(), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}
