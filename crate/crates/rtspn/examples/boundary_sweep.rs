//! Locate the feasibility boundary of a single always-arriving task.
//!
//! With rate 1 and frame length 1 the ceiling is q = 1 - 1/e ≈ 0.632:
//! below it the analytic check passes and the simulator fulfills the
//! requirement, above it both fail. Sweeps the requirement across the
//! boundary and prints both readings per grid point.

use rtspn::feasibility::check_single_resource;
use rtspn::model::{single_resource_spec, ArrivalModel, TaskId};
use rtspn::policy::LargestDebtFirst;
use rtspn::simulator::run;

fn main() {
    let frames = 100_000;
    let ceiling = 1.0 - (-1.0f64).exp();
    println!("analytic ceiling: 1 - 1/e = {ceiling:.6}");
    println!();
    println!("{:>6} {:>9} {:>10} {:>9} {:>9} {:>5}", "q", "feasible", "min_slack", "q_hat", "stderr", "met");

    for step in 0..=10 {
        let q = 0.58 + 0.01 * step as f64;
        let spec = single_resource_spec(1.0, &[(1, 1.0, q)], ArrivalModel::EveryFrame);

        // Analytic reading: min slack over subsets signs the verdict.
        let verdict = check_single_resource(&spec).expect("distinct rates");

        // Simulated reading: same seed per point keeps runs comparable.
        let mut policy = LargestDebtFirst::new(&spec).expect("single resource");
        let metrics = run(&spec, &mut policy, frames, 11).expect("run");
        let m = metrics.task(TaskId(1)).expect("tracked");
        let met = m.throughput >= q - 3.0 * m.throughput_std_error;

        println!(
            "{:>6.2} {:>9} {:>+10.4} {:>9.4} {:>9.4} {:>5}",
            q, verdict.feasible, verdict.margin, m.throughput, m.throughput_std_error, met
        );
    }
}
