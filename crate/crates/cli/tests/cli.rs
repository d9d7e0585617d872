use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use syzygy_cli::output::{EVENT_HEADER, TRAJECTORY_HEADER};
use syzygy_cli::{run_command, Command as Cmd, Scenario, Status};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn syzygy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_syzygy")).args(args).output().unwrap()
}

fn run(cmd: &str, scenario: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--scenario", scenario.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    syzygy(&args)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn shipped_scenarios_load_and_echo_canonically() {
    for entry in std::fs::read_dir(scenario("")).unwrap() {
        let path = entry.unwrap().path();
        let s = Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let echoed = Scenario::from_json(&s.canonical_json()).unwrap();
        assert_eq!(echoed, s);
        assert_eq!(echoed.canonical_json(), s.canonical_json());
    }
}

#[test]
fn figure_eight_theorem_one_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("verify-thm1", &scenario("figure_eight.json"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&dir.path().join("report.json"));
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["status"], "ok");
    let t0 = r["report"]["outcome"]["t0"].as_f64().unwrap();
    assert!(t0 > 0.0 && t0 <= r["report"]["bound"].as_f64().unwrap());
    let echoed = Scenario::from_json(&std::fs::read_to_string(dir.path().join("scenario.json")).unwrap()).unwrap();
    assert_eq!(echoed, Scenario::load(&scenario("figure_eight.json")).unwrap());
}

#[test]
fn hypothesis_failures_exit_two_with_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("verify-thm3", &scenario("lagrange.json"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    let r = json(&dir.path().join("report.json"));
    assert_eq!(r["status"], "hypothesis_not_met");
    assert!(r["message"].as_str().unwrap().contains("antisymmetric"));
    assert!(r["report"].is_null());
    // Rotating triangle has angular momentum, so Theorem 1 does not apply either.
    assert_eq!(run("verify-thm1", &scenario("lagrange.json"), dir.path(), &[]).status.code(), Some(2));
}

#[test]
fn collinear_orbit_is_certified_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("verify-thm2", &scenario("euler.json"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&dir.path().join("report.json"));
    assert_eq!(r["report"]["outcome"]["conclusion"], "syzygy_everywhere");
    assert_eq!(r["report"]["rigidity"]["verdict"], "rigid");
}

#[test]
fn approaching_pair_exits_three_and_keeps_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("simulate", &scenario("head_on.json"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(3));
    let summary = json(&dir.path().join("summary.json"));
    assert_eq!(summary["report"]["termination"]["reason"], "collision_approach");
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some(TRAJECTORY_HEADER));
    assert_eq!(csv.lines().count(), 1002);
    assert!(csv.lines().skip(1).all(|l| l.split(',').count() == 17));
}

#[test]
fn rotating_triangle_has_header_only_event_table() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("events", &scenario("lagrange.json"), dir.path(), &[]).status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("events.csv")).unwrap();
    assert_eq!(csv, format!("{EVENT_HEADER}\n"));
    assert_eq!(json(&dir.path().join("events.json"))["report"]["count"], 0);
}

#[test]
fn reruns_reproduce_every_digest() {
    let tmp = tempfile::tempdir().unwrap();
    let digests = |sub: &str| {
        let out = tmp.path().join(sub);
        assert_eq!(run("events", &scenario("figure_eight.json"), &out, &[]).status.code(), Some(0));
        let m = json(&out.join("manifest.json"));
        for f in m["files"].as_array().unwrap() {
            let bytes = std::fs::read(out.join(f["path"].as_str().unwrap())).unwrap();
            assert_eq!(f["bytes"], bytes.len());
        }
        m
    };
    let a = digests("a");
    assert_eq!(a["files"].as_array().unwrap().len(), 3);
    assert_eq!(a, digests("b"));
}

#[test]
fn seed_flag_reaches_the_sampler() {
    let tmp = tempfile::tempdir().unwrap();
    let reports = |seed: &str, sub: &str| {
        let out = tmp.path().join(sub);
        let o = run("sweep", &scenario("sweep_free_fall.json"), &out, &["--seed", seed, "--workers", "2"]);
        assert_eq!(o.status.code(), Some(0));
        std::fs::read(out.join("sweep_reports.json")).unwrap()
    };
    assert_eq!(reports("5", "a"), reports("5", "b"));
    assert_ne!(reports("5", "a"), reports("6", "c"));
}

#[test]
fn library_and_binary_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let s = Scenario::load(&scenario("sweep_thm3.json")).unwrap().with_seed(9);
    let lib = run_command(Cmd::Sweep, &s, &tmp.path().join("lib"), 3).unwrap();
    assert_eq!(lib.status, Status::Ok);
    let o = run("sweep", &scenario("sweep_thm3.json"), &tmp.path().join("bin"), &["--seed", "9", "--workers", "5"]);
    assert_eq!(o.status.code(), Some(0));
    for name in ["aggregate.json", "sweep_reports.json", "scenario.json", "manifest.json"] {
        assert_eq!(
            std::fs::read(tmp.path().join("lib").join(name)).unwrap(),
            std::fs::read(tmp.path().join("bin").join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn minimisation_oracle_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("oracle-minf", &scenario("minf.json"), dir.path(), &["--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&dir.path().join("minf.json"));
    assert_eq!(r["config"]["seed"], 3);
    assert_eq!(r["value_agrees"], true);
    assert_eq!(r["argmin_agrees"], true);
}

#[test]
fn bad_inputs_exit_one_naming_the_problem() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.json");
    let o = run("simulate", &missing, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.json"));

    let bad = tmp.path().join("bad.json");
    std::fs::write(
        &bad,
        "{\n  \"schema_version\": 1,\n  \"masses\": [1, 1, 1],\n  \"initial_condition\": {\"fixture\": {\"name\": \"figure_eight\"}},\n  \"integrator\": {\"rtool\": 1e-9}\n}\n",
    )
    .unwrap();
    let o = run("simulate", &bad, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("rtool") && err.contains("line 5"), "{err}");

    let o = syzygy(&["teleport", "--scenario", "x", "--out", "y"]);
    assert_eq!(o.status.code(), Some(2), "clap usage errors");
}
