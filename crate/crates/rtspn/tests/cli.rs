//! End-to-end checks of the command-line interface: exit codes, report
//! determinism, metadata sidecars, and partial-failure semantics.

use rtspn::model::SystemSpec;
use rtspn::simulator::config_digest;
use std::path::Path;
use std::process::{Command, Output};

fn rtspn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rtspn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("not signal-terminated")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn write_spec(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, json).expect("write spec");
    path.to_str().expect("utf8 path").to_string()
}

fn single_task(requirement: f64) -> String {
    format!(
        r#"{{
  "frame_length": 1.0,
  "resources": ["cpu"],
  "tasks": [{{"id": 1, "rate": 1.0, "requirement": {requirement}, "resources": ["cpu"]}}],
  "arrivals": {{"kind": "every_frame"}}
}}"#
    )
}

const TWO_RESOURCE: &str = r#"{
  "frame_length": 1.0,
  "resources": ["a", "b"],
  "tasks": [
    {"id": 1, "rate": 1.0, "requirement": 0.2, "resources": ["a"]},
    {"id": 2, "rate": 1.0, "requirement": 0.2, "resources": ["b"]},
    {"id": 3, "rate": 1.3, "requirement": 0.15, "resources": ["a", "b"]}
  ],
  "arrivals": {"kind": "every_frame"}
}"#;

// Equal rates force the sampled idle estimate, and the requirements put
// the pair subset on the boundary within the 4-sigma band.
const BOUNDARY_TWIN: &str = r#"{
  "frame_length": 1.0,
  "resources": ["r"],
  "tasks": [
    {"id": 1, "rate": 1.0, "requirement": 0.4482, "resources": ["r"]},
    {"id": 2, "rate": 1.0, "requirement": 0.4482, "resources": ["r"]}
  ],
  "arrivals": {"kind": "every_frame"}
}"#;

#[test]
fn check_exit_codes_span_feasible_infeasible_and_uncertain() {
    let dir = tempfile::tempdir().unwrap();
    let feasible = write_spec(dir.path(), "feasible.json", &single_task(0.6));
    let infeasible = write_spec(dir.path(), "infeasible.json", &single_task(0.64));
    let uncertain = write_spec(dir.path(), "uncertain.json", BOUNDARY_TWIN);

    assert_eq!(exit_code(&rtspn(&["check", "--spec", &feasible])), 0);
    assert_eq!(exit_code(&rtspn(&["check", "--spec", &infeasible])), 3);
    assert_eq!(exit_code(&rtspn(&["check", "--spec", &uncertain])), 4);
}

#[test]
fn usage_and_validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "one.json", &single_task(0.5));
    let broken = write_spec(dir.path(), "broken.json", "{ not json");

    let unknown_policy = rtspn(&[
        "simulate", "--spec", &spec, "--policy", "bogus", "--frames", "10",
    ]);
    assert_eq!(exit_code(&unknown_policy), 2);

    let missing_task = rtspn(&[
        "sweep", "--spec", &spec, "--param", "requirement", "--from", "0.1", "--to", "0.5",
        "--steps", "3",
    ]);
    assert_eq!(exit_code(&missing_task), 2);

    assert_eq!(exit_code(&rtspn(&["check", "--spec", &broken])), 2);
}

#[test]
fn sweep_partial_failure_reports_rows_then_footer_and_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "one.json", &single_task(0.3));

    // Rate values at or below zero fail validation mid-grid.
    let output = rtspn(&[
        "sweep", "--spec", &spec, "--param", "rate", "--task", "1", "--from", "-0.5", "--to",
        "1.0", "--steps", "4",
    ]);
    assert_eq!(exit_code(&output), 5);
    let text = stdout(&output);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.last(), Some(&"partial=true"));
    assert!(lines[0].starts_with("param_value,feasible,min_slack"));
    // The two positive grid points still produce rows.
    assert_eq!(lines.len(), 4, "header, two rows, footer: {text}");
}

#[test]
fn sweep_is_byte_identical_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "one.json", &single_task(0.5));
    let args = |jobs: &'static str| {
        vec![
            "sweep", "--spec", &spec, "--param", "requirement", "--task", "1", "--from", "0.4",
            "--to", "0.7", "--steps", "5", "--simulate", "--frames", "5000", "--seed", "21",
            "--jobs", jobs,
        ]
    };
    let serial = rtspn(&args("1"));
    let parallel = rtspn(&args("4"));
    assert_eq!(exit_code(&serial), 0);
    assert_eq!(exit_code(&parallel), 0);
    assert_eq!(stdout(&serial), stdout(&parallel));
}

#[test]
fn simulate_out_writes_report_and_metadata_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = write_spec(dir.path(), "one.json", &single_task(0.5));
    let out = dir.path().join("metrics.csv");

    let output = rtspn(&[
        "simulate", "--spec", &spec_path, "--policy", "ldf", "--frames", "2000", "--seed", "17",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0);

    let csv = std::fs::read_to_string(&out).expect("report written");
    assert!(csv.starts_with(
        "task_id,arrivals,completions,service_time,throughput,throughput_stderr,required_q,met"
    ));
    assert_eq!(csv.lines().count(), 2, "header plus one task row");

    let sidecar_path = dir.path().join("metrics.csv.json");
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&sidecar_path).expect("sidecar written"))
            .expect("sidecar is json");
    assert_eq!(sidecar["seed"], 17);
    assert_eq!(sidecar["frames"], 2000);
    assert_eq!(sidecar["replications"], 1);
    assert_eq!(sidecar["policy"], "ldf");
    assert!(sidecar["idle"]["total"].as_f64().is_some());
    assert!(sidecar["idle"]["mean_per_frame"].as_f64().is_some());
    assert!(sidecar["idle"]["std_error"].as_f64().is_some());
    assert!(sidecar["wall_clock_seconds"].as_f64().is_some());

    let spec = SystemSpec::load(&spec_path).expect("spec loads");
    assert_eq!(
        sidecar["config_digest"],
        config_digest(&spec, "ldf", 2000, 17)
    );
}

#[test]
fn reduce_output_is_a_loadable_single_resource_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "two.json", TWO_RESOURCE);
    let out = dir.path().join("reduced.json");

    let output = rtspn(&["reduce", "--spec", &spec, "--out", out.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 0);

    let reduced = SystemSpec::load(&out).expect("annotated output loads");
    assert_eq!(reduced.resources.len(), 1);
    assert_eq!(reduced.tasks.len(), 4, "pair, residuals, and combined task");

    // The reduced spec feeds straight back into the other subcommands.
    assert_eq!(exit_code(&rtspn(&["check", "--spec", out.to_str().unwrap()])), 0);
}

#[test]
fn idle_reports_every_subset_with_both_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "one.json", &single_task(0.5));

    let output = rtspn(&["idle", "--spec", &spec, "--samples", "20000", "--seed", "3"]);
    assert_eq!(exit_code(&output), 0);
    let text = stdout(&output);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "subset,analytic_value,mc_value,mc_stderr,samples");
    assert_eq!(lines.len(), 3, "header plus empty subset and singleton");

    let repeat = rtspn(&["idle", "--spec", &spec, "--samples", "20000", "--seed", "3"]);
    assert_eq!(stdout(&repeat), text, "idle report is seed-deterministic");
}
