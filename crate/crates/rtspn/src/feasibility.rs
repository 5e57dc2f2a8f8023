//! Timely-throughput feasibility checks.
//!
//! Single resource: a requirement vector is feasible if and only if for
//! every task subset `S` the implied workloads plus the forced idle time
//! fit in the frame, `Σ_{n∈S} q_n/λ_n + E[I_S] ≤ T`. All `2^|N|` subsets
//! are checked in size-then-lexicographic order.
//!
//! Two resources (one task per lone resource, the rest on both): the
//! system is feasible if and only if a reduced requirement vector
//! `q_{1*}, …, q_{c*}` exists that covers the original requirements and
//! is itself single-resource feasible. That region is a polytope, probed
//! with the LP solver; the returned witness maximizes `q_{c*}`.

use itertools::Itertools;
use thiserror::Error;

use crate::idle::{idle_time, IdleError, IdleEstimate};
use crate::model::{subset_label, SystemSpec, TaskId, TaskSet};
use crate::reduction::{reduce, ReducedSystem, ReductionError};
use crate::rng::split;
use crate::simplex::{lp_max, LinearProgram, LpError, LpSolution, Relation};

impl From<LpError> for FeasibilityError {
    fn from(e: LpError) -> Self {
        FeasibilityError::LpNumericalFailure(e.to_string())
    }
}

/// Feasibility slack tolerance, relative to the frame length.
pub const EPSILON_FEAS_REL: f64 = 1e-9;

/// Subset-enumeration guard: 2^20 subsets is the supported ceiling.
pub const MAX_TASKS: usize = 20;

/// Monte Carlo fallback configuration for near-equal rates.
const MC_FALLBACK_SAMPLES: u64 = 200_000;
const MC_FALLBACK_SEED_BASE: u64 = 0x5eed_1d7e;

#[derive(Debug, Error)]
pub enum FeasibilityError {
    #[error("spec must have exactly one resource")]
    NotSingleResource,
    #[error("{0} tasks exceed the subset-enumeration limit of {MAX_TASKS}")]
    TooManyTasks(usize),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error("linear program failed: {0}")]
    LpNumericalFailure(String),
    #[error(transparent)]
    Idle(IdleError),
    #[error("spec has {0} resources; only 1 and 2 are supported")]
    UnsupportedResourceCount(usize),
}

/// One checked subset: its total load and slack against the frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetRecord {
    pub subset: TaskSet,
    /// Σ_{n∈S} q_n/λ_n at the checked requirement point.
    pub workload: f64,
    pub idle: IdleEstimate,
    /// workload + idle.value.
    pub load: f64,
    /// T − load.
    pub slack: f64,
    pub violated: bool,
    /// Sampled idle estimate too close to the boundary to call.
    pub uncertain: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityVerdict {
    pub feasible: bool,
    /// Violated subsets, in enumeration order; empty iff feasible.
    pub violations: Vec<SubsetRecord>,
    /// Every checked subset, in size-then-lexicographic order. For the
    /// two-resource check these are subsets of the reduced system,
    /// evaluated at the witness (or, if infeasible, at the point with the
    /// least-negative worst slack).
    pub slack_table: Vec<SubsetRecord>,
    /// Some subset was within 4 standard errors of the boundary, so the
    /// sharp verdict cannot be certified from a sampled idle estimate.
    pub boundary_uncertain: bool,
    /// Reduced requirement vector maximizing q_{c*} (two-resource only).
    pub witness: Option<Vec<(TaskId, f64)>>,
    /// Worst slack over nonempty subsets; for the two-resource check,
    /// the largest uniform slack any cover vector can achieve. Positive
    /// margins mean feasible with room.
    pub margin: f64,
}

/// Per-frame time budget a task needs: w = q/λ.
pub fn implied_workload(requirement: f64, rate: f64) -> f64 {
    debug_assert!(requirement >= 0.0 && rate > 0.0);
    requirement / rate
}

/// All subsets of `ids`, sized small to large, lexicographic within a
/// size. The order is part of the reporting contract.
pub fn enumerate_subsets(ids: &[TaskId]) -> Vec<TaskSet> {
    let mut sorted: Vec<TaskId> = ids.to_vec();
    sorted.sort();
    (0..=sorted.len())
        .flat_map(|size| {
            sorted
                .iter()
                .copied()
                .combinations(size)
                .map(|combo| combo.into_iter().collect())
        })
        .collect()
}

fn subset_idle(
    subset: &TaskSet,
    spec: &SystemSpec,
    index: usize,
) -> Result<IdleEstimate, FeasibilityError> {
    idle_time(
        subset,
        spec,
        MC_FALLBACK_SAMPLES,
        split(MC_FALLBACK_SEED_BASE, index as u64),
    )
    .map_err(FeasibilityError::Idle)
}

fn record_for(
    subset: TaskSet,
    workload: f64,
    idle: IdleEstimate,
    frame_length: f64,
) -> SubsetRecord {
    let epsilon = EPSILON_FEAS_REL * frame_length;
    // + 0.0 turns the empty sum's IEEE −0.0 into +0.0 for clean reports.
    let workload = workload + 0.0;
    let load = workload + idle.value;
    let slack = frame_length - load;
    let band = 4.0 * idle.std_error;
    let violated = slack < -(epsilon + band);
    let uncertain = band > 0.0 && !violated && slack <= band;
    SubsetRecord {
        subset,
        workload,
        idle,
        load,
        slack,
        violated,
        uncertain,
    }
}

/// Sharp single-resource check over all task subsets.
pub fn check_single_resource(spec: &SystemSpec) -> Result<FeasibilityVerdict, FeasibilityError> {
    if spec.resources.len() != 1 {
        return Err(FeasibilityError::NotSingleResource);
    }
    if spec.tasks.len() > MAX_TASKS {
        return Err(FeasibilityError::TooManyTasks(spec.tasks.len()));
    }
    let ids = spec.task_ids();
    let mut slack_table = Vec::with_capacity(1 << ids.len());
    for (index, subset) in enumerate_subsets(&ids).into_iter().enumerate() {
        let workload: f64 = subset
            .iter()
            .map(|t| {
                let task = spec.task(*t).expect("enumerated from spec");
                implied_workload(task.requirement, task.rate)
            })
            .sum();
        let idle = subset_idle(&subset, spec, index)?;
        slack_table.push(record_for(subset, workload, idle, spec.frame_length));
    }
    let violations: Vec<SubsetRecord> = slack_table
        .iter()
        .filter(|r| r.violated)
        .cloned()
        .collect();
    let margin = slack_table
        .iter()
        .filter(|r| !r.subset.is_empty())
        .map(|r| r.slack)
        .fold(f64::INFINITY, f64::min);
    Ok(FeasibilityVerdict {
        feasible: violations.is_empty(),
        boundary_uncertain: slack_table.iter().any(|r| r.uncertain),
        violations,
        slack_table,
        witness: None,
        margin,
    })
}

/// The reduced-system cover-and-capacity polytope of a two-resource spec.
struct ReducedPolytope {
    reduced: ReducedSystem,
    /// Reduced task ids in ascending order; LP variable order.
    vars: Vec<TaskId>,
    /// Nonempty reduced subsets (enumeration order) with idle estimates.
    subsets: Vec<(TaskSet, IdleEstimate)>,
}

impl ReducedPolytope {
    fn build(spec: &SystemSpec) -> Result<Self, FeasibilityError> {
        let reduced = reduce(spec)?;
        if reduced.spec.tasks.len() > MAX_TASKS {
            return Err(FeasibilityError::TooManyTasks(reduced.spec.tasks.len()));
        }
        let vars = reduced.spec.task_ids();
        let mut subsets = Vec::new();
        for (index, subset) in enumerate_subsets(&vars).into_iter().enumerate() {
            if subset.is_empty() {
                continue;
            }
            let idle = subset_idle(&subset, &reduced.spec, index)?;
            subsets.push((subset, idle));
        }
        Ok(Self {
            reduced,
            vars,
            subsets,
        })
    }

    fn var_index(&self, id: TaskId) -> usize {
        self.vars.iter().position(|&v| v == id).expect("known id")
    }

    /// Cover rows: the lifted reduced throughputs dominate every
    /// original requirement.
    fn cover_rows(&self, spec: &SystemSpec) -> Vec<(Vec<f64>, Relation, f64)> {
        let n = self.vars.len();
        let r = &self.reduced;
        let original_req = |id: TaskId| spec.task(id).expect("role ids exist").requirement;
        let mut rows = Vec::new();

        let mut row = vec![0.0; n];
        row[self.var_index(r.c_star)] = r.rate_two / r.pair_rate();
        row[self.var_index(r.one_star)] = 1.0;
        rows.push((row, Relation::Ge, original_req(r.one_star)));

        let mut row = vec![0.0; n];
        row[self.var_index(r.c_star)] = r.rate_one / r.pair_rate();
        row[self.var_index(r.two_star)] = 1.0;
        rows.push((row, Relation::Ge, original_req(r.two_star)));

        for &id in &self.vars {
            if id == r.c_star || id == r.one_star || id == r.two_star {
                continue;
            }
            let mut row = vec![0.0; n];
            row[self.var_index(id)] = 1.0;
            rows.push((row, Relation::Ge, original_req(id)));
        }
        rows
    }

    /// Capacity row for one reduced subset with a given idle value: the
    /// coefficient vector of Σ q_{n*}/λ_{n*} and its capacity bound.
    fn capacity_row(&self, subset: &TaskSet, idle_value: f64) -> (Vec<f64>, f64) {
        let mut row = vec![0.0; self.vars.len()];
        for id in subset {
            row[self.var_index(*id)] = 1.0 / self.reduced.spec.task(*id).expect("member").rate;
        }
        (row, self.reduced.spec.frame_length - idle_value)
    }

    /// Largest uniform slack δ achievable by any cover vector, with the
    /// achieving point: maximize δ subject to covers and
    /// Σ q/λ + E[I_{S*}] + δ ≤ T for every nonempty S*. Feasible iff
    /// δ ≥ 0. `idle_shift` scales each subset's standard error and is
    /// added to its idle value (for boundary-uncertainty probes).
    fn margin_lp(&self, spec: &SystemSpec, idle_shift: f64) -> Result<(Vec<f64>, f64), FeasibilityError> {
        let n = self.vars.len();
        let mut objective = vec![0.0; n + 1];
        objective[n] = 1.0;
        let mut lp = LinearProgram::new(objective);
        lp.nonneg = vec![true; n + 1];
        lp.nonneg[n] = false;
        for (row, relation, rhs) in self.cover_rows(spec) {
            let mut row = row;
            row.push(0.0);
            lp.push_row(row, relation, rhs);
        }
        for (subset, idle) in &self.subsets {
            let shifted = idle.value + idle_shift * idle.std_error;
            let (mut row, rhs) = self.capacity_row(subset, shifted);
            row.push(1.0);
            lp.push_row(row, Relation::Le, rhs);
        }
        match lp_max(&lp)? {
            LpSolution::Optimal { mut point, value } => {
                point.truncate(n);
                Ok((point, value))
            }
            // Covers are satisfiable by large q and δ is bounded by the
            // capacity rows, so neither outcome can occur for a
            // well-formed build.
            other => Err(FeasibilityError::LpNumericalFailure(format!(
                "margin program reported {other:?}, expected an optimum"
            ))),
        }
    }

    /// The canonical witness: maximize q_{c*} over the feasible polytope.
    fn witness_lp(&self, spec: &SystemSpec) -> Result<Option<Vec<f64>>, FeasibilityError> {
        let n = self.vars.len();
        let mut objective = vec![0.0; n];
        objective[self.var_index(self.reduced.c_star)] = 1.0;
        let mut lp = LinearProgram::new(objective);
        for row in self.cover_rows(spec) {
            lp.push_row(row.0, row.1, row.2);
        }
        for (subset, idle) in &self.subsets {
            let (row, rhs) = self.capacity_row(subset, idle.value);
            lp.push_row(row, Relation::Le, rhs);
        }
        match lp_max(&lp)? {
            LpSolution::Optimal { point, .. } => Ok(Some(point)),
            LpSolution::Infeasible => Ok(None),
            LpSolution::Unbounded => Err(FeasibilityError::LpNumericalFailure(
                "witness program is unbounded; a capacity row is missing".to_string(),
            )),
        }
    }

    /// Slack table at a concrete reduced requirement point.
    fn table_at(&self, point: &[f64], frame_length: f64) -> Vec<SubsetRecord> {
        let empty_idle = IdleEstimate {
            value: frame_length,
            std_error: 0.0,
            method: crate::idle::Method::Analytic,
        };
        let mut table = vec![record_for(TaskSet::new(), 0.0, empty_idle, frame_length)];
        for (subset, idle) in &self.subsets {
            let workload: f64 = subset
                .iter()
                .map(|id| point[self.var_index(*id)] / self.reduced.spec.task(*id).expect("member").rate)
                .sum();
            table.push(record_for(subset.clone(), workload, *idle, frame_length));
        }
        table
    }
}

/// Two-resource check via the reduced cover polytope.
pub fn check_two_resource(spec: &SystemSpec) -> Result<FeasibilityVerdict, FeasibilityError> {
    let polytope = ReducedPolytope::build(spec)?;
    let t = spec.frame_length;
    let epsilon = EPSILON_FEAS_REL * t;

    let (margin_point, margin) = polytope.margin_lp(spec, 0.0)?;

    let boundary_uncertain = if polytope.subsets.iter().any(|(_, i)| i.std_error > 0.0) {
        let (_, pessimistic) = polytope.margin_lp(spec, 4.0)?;
        let (_, optimistic) = polytope.margin_lp(spec, -4.0)?;
        (pessimistic >= -epsilon) != (optimistic >= -epsilon)
    } else {
        false
    };

    let witness_point = if margin >= -epsilon {
        polytope.witness_lp(spec)?
    } else {
        None
    };
    let table_point = witness_point.clone().unwrap_or(margin_point);

    let slack_table = polytope.table_at(&table_point, t);
    let violations: Vec<SubsetRecord> = slack_table
        .iter()
        .filter(|r| r.violated)
        .cloned()
        .collect();

    Ok(FeasibilityVerdict {
        feasible: violations.is_empty(),
        violations,
        slack_table,
        boundary_uncertain,
        witness: witness_point
            .map(|point| polytope.vars.iter().copied().zip(point).collect()),
        margin,
    })
}

/// Dispatch on resource count.
pub fn check(spec: &SystemSpec) -> Result<FeasibilityVerdict, FeasibilityError> {
    match spec.resources.len() {
        1 => check_single_resource(spec),
        2 => check_two_resource(spec),
        n => Err(FeasibilityError::UnsupportedResourceCount(n)),
    }
}

/// Human-readable verdict summary (used by the CLI).
pub fn render_verdict(verdict: &FeasibilityVerdict) -> String {
    let mut out = String::new();
    let status = if verdict.boundary_uncertain {
        "uncertain (sampled idle estimate within 4 standard errors of the boundary)"
    } else if verdict.feasible {
        "feasible"
    } else {
        "infeasible"
    };
    out.push_str(&format!("verdict: {status}\n"));
    out.push_str(&format!("margin: {:.9}\n", verdict.margin));
    if let Some(witness) = &verdict.witness {
        let rendered = witness
            .iter()
            .map(|(id, q)| format!("q[{id}]={q:.6}"))
            .collect::<Vec<_>>()
            .join(" ");
        out.push_str(&format!("witness: {rendered}\n"));
    }
    if !verdict.violations.is_empty() {
        out.push_str("violated subsets:\n");
        for record in &verdict.violations {
            out.push_str(&format!(
                "  {}: load {:.6} exceeds frame by {:.6}\n",
                subset_label(&record.subset),
                record.load,
                -record.slack
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;
    use crate::model::{single_resource_spec, task_set, two_resource_spec, ArrivalModel};
    use proptest::prelude::*;

    #[test]
    fn workload_is_requirement_over_rate() {
        assert_eq!(implied_workload(0.0, 5.0), 0.0);
        assert_eq!(implied_workload(0.5, 2.0), 0.25);
        assert_eq!(implied_workload(1.0, 1.0), 1.0);
    }

    #[test]
    fn subsets_enumerate_by_size_then_lexicographic() {
        let ids = [TaskId(2), TaskId(1), TaskId(3)];
        let labels: Vec<String> = enumerate_subsets(&ids)
            .iter()
            .map(subset_label)
            .collect();
        assert_eq!(
            labels,
            ["-", "1", "2", "3", "1+2", "1+3", "2+3", "1+2+3"]
        );
    }

    #[test]
    fn single_task_boundary_is_sharp() {
        // Capacity for one always-arriving unit-rate task on a unit frame
        // is q_max = 1 − e⁻¹ ≈ 0.6321.
        let feasible_spec =
            single_resource_spec(1.0, &[(1, 1.0, 0.6)], ArrivalModel::EveryFrame);
        let verdict = check_single_resource(&feasible_spec).unwrap();
        assert!(verdict.feasible);
        assert!(verdict.violations.is_empty());
        assert!(!verdict.boundary_uncertain);
        let expected_margin = 1.0 - 0.6 - (-1.0f64).exp();
        assert!((verdict.margin - expected_margin).abs() < 1e-12);

        let infeasible_spec =
            single_resource_spec(1.0, &[(1, 1.0, 0.64)], ArrivalModel::EveryFrame);
        let verdict = check_single_resource(&infeasible_spec).unwrap();
        assert!(!verdict.feasible);
        assert_eq!(verdict.violations.len(), 1);
        assert_eq!(verdict.violations[0].subset, task_set(&[1]));
        assert!(verdict.margin < 0.0);
    }

    #[test]
    fn zero_requirements_are_always_feasible() {
        let spec = single_resource_spec(
            1.0,
            &[(1, 0.7, 0.0), (2, 1.3, 0.0), (3, 2.1, 0.0)],
            ArrivalModel::EveryFrame,
        );
        let verdict = check_single_resource(&spec).unwrap();
        assert!(verdict.feasible);
        for record in &verdict.slack_table {
            assert!(record.slack >= -1e-12);
            assert!((record.workload).abs() < 1e-15);
        }
    }

    #[test]
    fn slack_is_recomputable_from_load() {
        let spec = single_resource_spec(
            2.0,
            &[(1, 1.0, 0.4), (2, 2.5, 0.8)],
            ArrivalModel::EveryFrame,
        );
        let verdict = check_single_resource(&spec).unwrap();
        assert_eq!(verdict.slack_table.len(), 4);
        for record in &verdict.slack_table {
            assert_eq!(record.load, record.workload + record.idle.value);
            assert_eq!(record.slack, 2.0 - record.load);
        }
        // The empty subset idles the whole frame: slack exactly zero.
        assert_eq!(verdict.slack_table[0].slack, 0.0);
    }

    #[test]
    fn resource_and_size_guards_fire() {
        let two = two_resource_spec(1.0, &[(1, 1.0, 0.0), (2, 1.0, 0.0)]);
        assert!(matches!(
            check_single_resource(&two),
            Err(FeasibilityError::NotSingleResource)
        ));

        let tasks: Vec<(u32, f64, f64)> =
            (1..=21).map(|i| (i, 1.0 + i as f64, 0.0)).collect();
        let big = single_resource_spec(1.0, &tasks, ArrivalModel::EveryFrame);
        assert!(matches!(
            check_single_resource(&big),
            Err(FeasibilityError::TooManyTasks(21))
        ));

        let mut three = two_resource_spec(1.0, &[(1, 1.0, 0.0), (2, 1.0, 0.0)]);
        three.resources.insert("c".to_string());
        assert!(matches!(
            check(&three),
            Err(FeasibilityError::UnsupportedResourceCount(3))
        ));
    }

    #[test]
    fn two_resource_zero_requirements_witness_maximizes_pair_rate_capacity() {
        let spec = two_resource_spec(1.0, &[(1, 3.0, 0.0), (2, 1.0, 0.0), (3, 1.5, 0.0)]);
        let verdict = check_two_resource(&spec).unwrap();
        assert!(verdict.feasible);
        let witness: BTreeMap<TaskId, f64> =
            verdict.witness.clone().unwrap().into_iter().collect();
        // q_{c*} is capped by its singleton capacity row alone.
        let c_star = TaskId(4);
        let idle_c =
            crate::idle::residual_deficit(&[4.0], 1.0).unwrap();
        let expected = 4.0 * (1.0 - idle_c);
        assert!(
            (witness[&c_star] - expected).abs() < 1e-6,
            "witness {witness:?}, expected q_c {expected}"
        );
    }

    #[test]
    fn two_resource_witness_satisfies_cover_and_capacity() {
        let spec = two_resource_spec(1.0, &[(1, 2.0, 0.05), (2, 2.0, 0.05), (3, 1.0, 0.0)]);
        let verdict = check_two_resource(&spec).unwrap();
        assert!(verdict.feasible, "margin {}", verdict.margin);
        let witness: BTreeMap<TaskId, f64> =
            verdict.witness.clone().unwrap().into_iter().collect();
        let reduced = reduce(&spec).unwrap();

        let q = |id: u32| witness[&TaskId(id)];
        for value in witness.values() {
            assert!(*value >= -1e-9);
        }
        let lifted = reduced.lift_throughputs(&witness);
        assert!(lifted[&TaskId(1)] >= 0.05 - 1e-9);
        assert!(lifted[&TaskId(2)] >= 0.05 - 1e-9);
        assert!(lifted[&TaskId(3)] >= -1e-9);

        for record in &verdict.slack_table {
            let workload: f64 = record
                .subset
                .iter()
                .map(|id| q(id.0) / reduced.spec.task(*id).unwrap().rate)
                .sum();
            assert!(workload + record.idle.value <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn two_resource_overload_is_reported_with_subsets() {
        let spec = two_resource_spec(1.0, &[(1, 1.0, 0.8), (2, 1.0, 0.0), (3, 1.7, 0.0)]);
        let verdict = check_two_resource(&spec).unwrap();
        assert!(!verdict.feasible);
        assert!(!verdict.violations.is_empty());
        assert!(verdict.margin < 0.0);
        assert!(verdict.witness.is_none());
    }

    #[test]
    fn verdict_matches_violations_exactly() {
        for q in [0.0, 0.3, 0.62, 0.64, 0.9] {
            let spec = single_resource_spec(1.0, &[(1, 1.0, q)], ArrivalModel::EveryFrame);
            let verdict = check_single_resource(&spec).unwrap();
            assert_eq!(verdict.feasible, verdict.violations.is_empty());
        }
    }

    proptest! {
        /// Scaling all requirements by α ∈ (0,1] keeps a feasible
        /// single-resource verdict feasible.
        #[test]
        fn shrinking_requirements_preserves_feasibility(alpha in 0.01f64..=1.0) {
            let base = single_resource_spec(
                1.0,
                &[(1, 1.0, 0.25), (2, 2.0, 0.45)],
                ArrivalModel::EveryFrame,
            );
            prop_assume!(check_single_resource(&base).unwrap().feasible);
            let mut scaled = base;
            for task in &mut scaled.tasks {
                task.requirement *= alpha;
            }
            prop_assert!(check_single_resource(&scaled).unwrap().feasible);
        }
    }
}
