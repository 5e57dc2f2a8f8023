//! Expected idle time per task subset: closed form vs Monte Carlo.
//!
//! For every subset S of a four-task system, prints E[I_S] from the
//! hypoexponential closed form next to a Monte Carlo estimate and the
//! z-score of their difference.

use rtspn::feasibility::enumerate_subsets;
use rtspn::idle::{idle_time_expected, idle_time_monte_carlo};
use rtspn::model::{single_resource_spec, subset_label, ArrivalModel};

fn main() {
    let spec = single_resource_spec(
        1.0,
        &[(1, 0.7, 0.0), (2, 1.0, 0.0), (3, 1.6, 0.0), (4, 2.3, 0.0)],
        ArrivalModel::EveryFrame,
    );
    let samples = 100_000;

    println!("{:>10} {:>12} {:>12} {:>10} {:>8}", "subset", "analytic", "monte_carlo", "stderr", "z");
    for (index, subset) in enumerate_subsets(&spec.task_ids()).iter().enumerate() {
        let analytic = idle_time_expected(subset, &spec).expect("distinct rates");
        let mc = idle_time_monte_carlo(subset, &spec, samples, index as u64).expect("sampling");
        // The empty subset idles the whole frame with zero variance.
        let z = if mc.std_error > 0.0 {
            (analytic.value - mc.value) / mc.std_error
        } else {
            0.0
        };
        println!(
            "{:>10} {:>12.6} {:>12.6} {:>10.6} {:>8.2}",
            subset_label(subset),
            analytic.value,
            mc.value,
            mc.std_error,
            z
        );
    }
}
