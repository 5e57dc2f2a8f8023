//! Feasibility check of a system loaded from JSON.
//!
//! Parses an inline spec, runs the subset workload-plus-idle test, and
//! prints the verdict followed by the full slack table.

use rtspn::feasibility::{check, render_verdict};
use rtspn::model::{subset_label, SystemSpec};

fn main() {
    // Three tasks sharing one CPU; task 3 is the heavy one.
    let spec = SystemSpec::from_json_str(
        r#"{
            "frame_length": 1.0,
            "resources": ["cpu"],
            "tasks": [
                {"id": 1, "rate": 1.0, "requirement": 0.20, "resources": ["cpu"]},
                {"id": 2, "rate": 2.0, "requirement": 0.30, "resources": ["cpu"]},
                {"id": 3, "rate": 0.5, "requirement": 0.05, "resources": ["cpu"]}
            ],
            "arrivals": {"kind": "every_frame"}
        }"#,
    )
    .expect("valid spec");

    let verdict = check(&spec).expect("supported topology");
    println!("{}", render_verdict(&verdict));

    // Slack table: T - (sum of workloads + expected idle) per subset.
    println!();
    println!("{:>10} {:>10} {:>10} {:>8} {:>10}", "subset", "workload", "idle", "load", "slack");
    for record in &verdict.slack_table {
        println!(
            "{:>10} {:>10.4} {:>10.4} {:>8.4} {:>+10.4}",
            subset_label(&record.subset),
            record.workload,
            record.idle.value,
            record.load,
            record.slack
        );
    }
}
