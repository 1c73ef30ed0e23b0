use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proptest::prelude::*;
use serde_json::Value;

fn fflao() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fflao"));
    c.env_remove("FFLAO_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    fflao().args(args).output().expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn arg(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    fn write(&self, name: &str, text: &str) -> String {
        std::fs::write(self.path(name), text).unwrap();
        self.arg(name)
    }

    /// Generates a bundled problem into `<stem>-domain.pddl` and `<stem>.pddl`.
    fn gen(&self, stem: &str, args: &[&str]) -> (String, String) {
        let (d, p) = (self.arg(&format!("{stem}-domain.pddl")), self.arg(&format!("{stem}.pddl")));
        let mut full = vec!["gen"];
        full.extend_from_slice(args);
        full.extend_from_slice(&["--domain-out", &d, "--problem-out", &p]);
        stdout(&full);
        (d, p)
    }
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let w = Workspace::new();
    let (d, p) = w.gen("tire", &["tireworld", "--n", "1"]);
    let missing = w.arg("missing.pddl");
    assert_eq!(code(&["plan", "--domain", &missing, "--problem", &p]), 2);
    let bad = w.write("bad.pddl", "(define (domain x)");
    assert_eq!(code(&["plan", "--domain", &bad, "--problem", &p]), 2);
    let zero = w.write(
        "zero.pddl",
        "(define (domain z) (:requirements :action-costs) (:predicates (a)) (:functions (total-cost))
           (:action x :parameters () :precondition (and) :effect (and (a) (increase (total-cost) 0))))",
    );
    let zp = w.write("zp.pddl", "(define (problem z1) (:domain z) (:init) (:goal (a)))");
    assert_eq!(code(&["plan", "--domain", &zero, "--problem", &zp]), 3);
    let u = w.write(
        "u.pddl",
        "(define (domain u) (:predicates (a) (b)) (:action x :parameters () :precondition (not (a)) :effect (a)))",
    );
    let up = w.write("up.pddl", "(define (problem u1) (:domain u) (:init) (:goal (b)))");
    assert_eq!(code(&["detplan", "solve", "--domain", &u, "--problem", &up, "--all-outcomes"]), 4);
    assert_eq!(code(&["plan", "--domain", &d, "--problem", &p, "--k", "-1"]), 1);
    assert_eq!(code(&["plan", "--domain", &d, "--problem", &p, "--epsilon", "0"]), 1);
    assert_eq!(code(&["plan", "--domain", &d, "--problem", &p, "--det-mlo", "--det-index", "0"]), 1);
    assert_eq!(code(&["plan", "--domain", &d, "--problem", &p, "--det-index", "7"]), 1);
    assert_eq!(code(&["simulate", "--domain", &d, "--problem", &p, "--time-budget", "0"]), 1);
    assert_eq!(code(&["no-such-command"]), 1);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn plan_value_matches_oracle_value_iteration() {
    let w = Workspace::new();
    let (d, p) = w.gen("tire", &["tireworld", "--n", "2"]);
    for k in ["0", "1", "2"] {
        let common = ["--domain", &d, "--problem", &p, "--det-index", "0", "--k", k];
        let plan: Value = serde_json::from_str(&stdout(&[&["plan", "--epsilon", "1e-9"][..], &common].concat())).unwrap();
        let vi: Value = serde_json::from_str(&stdout(&[&["oracle", "vi"][..], &common].concat())).unwrap();
        let (a, b) = (plan["report"]["value_s0"].as_f64().unwrap(), vi["value_s0"].as_f64().unwrap());
        assert!((a - b).abs() < 1e-6, "k={k}: plan {a} vs oracle {b}");
        assert_eq!(plan["schema_version"], 1);
    }
}

#[test]
fn empty_bench_prints_only_the_header() {
    let w = Workspace::new();
    let (d, _) = w.gen("tire", &["tireworld", "--n", "1"]);
    let out = stdout(&["bench", "--domain", &d]);
    assert_eq!(out.lines().count(), 1);
    assert!(out.starts_with("problem,"));
}

#[test]
fn bench_reports_each_problem() {
    let w = Workspace::new();
    let (d, p1) = w.gen("t1", &["tireworld", "--n", "1"]);
    let (_, p2) = w.gen("t2", &["tireworld", "--n", "2"]);
    let out = stdout(&["bench", "--domain", &d, "--problem", &p1, "--problem", &p2, "--rounds", "5", "--seed", "1"]);
    let mut rows = csv::Reader::from_reader(out.as_bytes());
    let rows: Vec<csv::StringRecord> = rows.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| &r[1] == "ok"));
}

#[test]
fn csv_and_json_print_the_same_numbers() {
    let w = Workspace::new();
    let (d, p) = w.gen("tire", &["tireworld", "--n", "2"]);
    let (csv_path, json_path) = (w.arg("s.csv"), w.arg("s.json"));
    stdout(&[
        "simulate", "--domain", &d, "--problem", &p, "--rounds", "20", "--seed", "9", "--det-index", "1", "--csv",
        &csv_path, "--out", &json_path,
    ]);
    let json = read_json(&w.path("s.json"));
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    let header = reader.headers().unwrap().clone();
    let rows: Vec<_> = reader.records().map(Result::unwrap).collect();
    let rounds = json["rounds"].as_array().unwrap();
    assert_eq!(rows.len(), rounds.len());
    for (row, round) in rows.iter().zip(rounds) {
        for (name, field) in header.iter().zip(row.iter()) {
            let v = &round[name];
            let text = v.as_str().map_or_else(|| v.to_string(), str::to_string);
            assert_eq!(field, text, "column {name}");
        }
    }

    let learn_json = w.arg("l.json");
    let table = stdout(&["learn-det", "--domain", &d, "--training-problem", &p, "--rounds", "10", "--json", &learn_json]);
    let report = read_json(&w.path("l.json"));
    let mut reader = csv::Reader::from_reader(table.as_bytes());
    for row in reader.records().map(Result::unwrap) {
        let c = &report["candidates"][row[1].parse::<usize>().unwrap()];
        assert_eq!(row[0], c["rank"].to_string());
        assert_eq!(row[2], c["stats"]["success_probability"].to_string());
        assert_eq!(row[3], c["stats"]["expected_cost"].to_string());
    }
}

#[test]
fn timings_appear_only_on_request() {
    let w = Workspace::new();
    let (d, p) = w.gen("tire", &["tireworld", "--n", "1"]);
    let plain = stdout(&["simulate", "--domain", &d, "--problem", &p, "--rounds", "2"]);
    assert!(!plain.contains("secs"));
    let timed = stdout(&["simulate", "--domain", &d, "--problem", &p, "--rounds", "2", "--timings"]);
    assert!(timed.contains("wall_time_secs"));
}

#[test]
fn seed_from_environment_equals_flag() {
    let w = Workspace::new();
    let (d, p) = w.gen("tire", &["tireworld", "--n", "2"]);
    let base = ["simulate", "--domain", &d, "--problem", &p, "--rounds", "5"];
    let flag = stdout(&[&base[..], &["--seed", "42"]].concat());
    let env = fflao().args(base).env("FFLAO_SEED", "42").output().unwrap();
    assert_eq!(flag.as_bytes(), env.stdout.as_slice());
}

#[test]
fn gen_stdout_matches_files() {
    let w = Workspace::new();
    let (d, p) = w.gen("trap", &["trap"]);
    let printed = stdout(&["gen", "trap"]);
    let files = std::fs::read_to_string(&d).unwrap() + &std::fs::read_to_string(&p).unwrap();
    assert_eq!(printed.replace('\n', ""), files.replace('\n', ""));
}

#[test]
fn learned_determinization_file_feeds_plan() {
    let w = Workspace::new();
    let (d, p) = w.gen("tire", &["tireworld", "--n", "1"]);
    let det = w.arg("learned.det");
    stdout(&["learn-det", "--domain", &d, "--training-problem", &p, "--rounds", "20", "--seed", "2", "--out", &det]);
    assert_eq!(std::fs::read_to_string(&det).unwrap(), "move-car/0 -> 0\n");
    let plan: Value = serde_json::from_str(&stdout(&["plan", "--domain", &d, "--problem", &p, "--det-file", &det])).unwrap();
    assert_eq!(plan["report"]["value_s0"], 10.0);
    assert_eq!(plan["initial_action"], "(move-car l-1-1 l-2-1)");
}

#[test]
fn oracle_enumerate_dumps_states() {
    let w = Workspace::new();
    let (d, p) = w.gen("chain", &["chain", "--len", "3"]);
    let dump: Value = serde_json::from_str(&stdout(&["oracle", "enumerate", "--domain", &d, "--problem", &p])).unwrap();
    assert_eq!(dump["states"].as_array().unwrap().len(), 4);
}

#[test]
fn serve_and_client_talk_over_pipes() {
    let w = Workspace::new();
    let (d, p) = w.gen("retry", &["retry", "--p", "0.5"]);
    let mut server = fflao()
        .args(["serve", "--domain", &d, "--problem", &p, "--rounds", "4", "--seed", "3"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    let report = w.arg("client.json");
    let client = fflao()
        .args(["client", "--domain", &d, "--problem", &p, "--rounds", "4", "--det-mlo", "--out", &report])
        .stdin(server.stdout.take().unwrap())
        .stdout(server.stdin.take().unwrap())
        .status()
        .unwrap();
    assert!(client.success());
    assert!(server.wait().unwrap().success());
    let json = read_json(&w.path("client.json"));
    assert_eq!(json["stats"]["successes"], 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn simulate_json_numbers_reparse_exactly(seed in 0u64..1000) {
        let w = Workspace::new();
        let (d, p) = w.gen("retry", &["retry", "--p", "0.3"]);
        let s = seed.to_string();
        let text = stdout(&["simulate", "--domain", &d, "--problem", &p, "--rounds", "10", "--seed", &s, "--det-index", "0"]);
        let json: Value = serde_json::from_str(&text).unwrap();
        let total: f64 = json["rounds"].as_array().unwrap().iter().map(|r| r["accumulated_cost"].as_f64().unwrap()).sum();
        prop_assert!((json["stats"]["expected_cost"].as_f64().unwrap() - total / 10.0).abs() < 1e-9);
    }
}
