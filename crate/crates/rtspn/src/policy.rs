//! Debt accounting and scheduling policies.
//!
//! A task's time-based debt after `k−1` frames is `d_n(k) = (k−1)·w_n −
//! Σ_{j<k} γ_n(j)`: the service budget it was owed minus the service it
//! received. Largest Debt First (single resource) serves tasks in
//! descending debt order preemptively. Largest Total Debt First (two
//! resources) picks, among the conflict-free candidate sets, the one with
//! the largest sum of positive debt parts. Static, random-order, and
//! proportional-share baselines share the same interface.
//!
//! Policies are non-clairvoyant by construction: a [`FrameView`] exposes
//! arrivals, completions, and elapsed time, never the hidden processing
//! times.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::feasibility::implied_workload;
use crate::model::{ResourceId, SystemSpec, TaskId, TaskSet};
use crate::reduction::{two_resource_roles, TwoResourceRoles};
use crate::rng::SimRng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("task {task}: frame service {service} exceeds the frame length {frame_length}")]
    ServiceExceedsFrame {
        task: TaskId,
        service: f64,
        frame_length: f64,
    },
    #[error("policy {policy:?} does not support this system: {reason}")]
    UnsupportedTopology { policy: String, reason: String },
    #[error("unknown policy {0:?}; expected ldf, ltdf, static, random, or share")]
    UnknownPolicy(String),
    #[error("bad policy argument: {0}")]
    BadPolicyArg(String),
    #[error("no debt entry for task {0}")]
    UnknownTask(TaskId),
}

/// Per-task time-based debt bookkeeping. Debts are derived, not stored:
/// `debt(n) = (frame_index − 1)·w_n − cumulative_service(n)` always holds
/// by construction.
#[derive(Debug, Clone)]
pub struct DebtLedger {
    frame_length: f64,
    /// Current frame index k, 1-based; debts refer to its start.
    frame_index: u64,
    entries: BTreeMap<TaskId, LedgerEntry>,
}

#[derive(Debug, Clone, Copy)]
struct LedgerEntry {
    workload: f64,
    cumulative_service: f64,
}

impl DebtLedger {
    /// Ledger over the spec's tasks with workloads w_n = q_n/λ_n.
    pub fn new(spec: &SystemSpec) -> Self {
        Self {
            frame_length: spec.frame_length,
            frame_index: 1,
            entries: spec
                .tasks
                .iter()
                .map(|t| {
                    (
                        t.id,
                        LedgerEntry {
                            workload: implied_workload(t.requirement, t.rate),
                            cumulative_service: 0.0,
                        },
                    )
                })
                .collect(),
        }
    }

    pub fn frame_index(&self) -> u64 {
        self.frame_index
    }

    pub fn workload(&self, task: TaskId) -> Result<f64, PolicyError> {
        Ok(self.entry(task)?.workload)
    }

    /// d_n(k) = (k−1)·w_n − Σ_{j<k} γ_n(j). May be negative.
    pub fn debt(&self, task: TaskId) -> Result<f64, PolicyError> {
        let entry = self.entry(task)?;
        Ok((self.frame_index - 1) as f64 * entry.workload - entry.cumulative_service)
    }

    /// All (task, debt) pairs in ascending task order.
    pub fn debts(&self) -> Vec<(TaskId, f64)> {
        self.entries
            .keys()
            .map(|&t| (t, self.debt(t).expect("own key")))
            .collect()
    }

    /// Close the current frame: record each task's service γ_n(k) and
    /// advance to frame k+1. Tasks absent from the map received none.
    pub fn update(&mut self, frame_service: &BTreeMap<TaskId, f64>) -> Result<(), PolicyError> {
        for (&task, &service) in frame_service {
            if !(0.0..=self.frame_length).contains(&service) {
                return Err(PolicyError::ServiceExceedsFrame {
                    task,
                    service,
                    frame_length: self.frame_length,
                });
            }
            self.entries
                .get_mut(&task)
                .ok_or(PolicyError::UnknownTask(task))?
                .cumulative_service += service;
        }
        self.frame_index += 1;
        Ok(())
    }

    fn entry(&self, task: TaskId) -> Result<&LedgerEntry, PolicyError> {
        self.entries.get(&task).ok_or(PolicyError::UnknownTask(task))
    }
}

/// What a policy may observe when deciding: frame bookkeeping and job
/// states, never hidden processing times.
#[derive(Debug, Clone, Copy)]
pub struct FrameView<'a> {
    /// 1-based frame index.
    pub frame: u64,
    pub frame_length: f64,
    /// Time elapsed within the current frame.
    pub elapsed: f64,
    /// Tasks that generated a job this frame.
    pub arrivals: &'a TaskSet,
    /// Arrived and not yet completed.
    pub pending: &'a TaskSet,
    /// Completed this frame.
    pub completed: &'a TaskSet,
}

/// Conflict-free set of tasks to process now.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ScheduleDecision {
    pub active: TaskSet,
}

impl ScheduleDecision {
    pub fn idle() -> Self {
        Self::default()
    }

    pub fn of(ids: impl IntoIterator<Item = TaskId>) -> Self {
        Self {
            active: ids.into_iter().collect(),
        }
    }
}

/// A scheduling policy driven by the simulator. `select` is re-invoked at
/// frame start and after every completion; `frame_end` closes the frame
/// with the realized per-task service.
pub trait Policy {
    fn name(&self) -> &'static str;

    /// Called once per frame before the first `select`.
    fn frame_start(&mut self, _view: &FrameView, _rng: &mut SimRng) {}

    fn select(&self, view: &FrameView) -> ScheduleDecision;

    fn frame_end(&mut self, _frame_service: &BTreeMap<TaskId, f64>) -> Result<(), PolicyError> {
        Ok(())
    }
}

/// Tasks sorted by debt descending, ties by ascending id.
pub fn ldf_order(ledger: &DebtLedger) -> Vec<TaskId> {
    let mut order = ledger.debts();
    order.sort_by(|(id_a, debt_a), (id_b, debt_b)| {
        debt_b
            .partial_cmp(debt_a)
            .expect("debts are finite")
            .then(id_a.cmp(id_b))
    });
    order.into_iter().map(|(id, _)| id).collect()
}

/// Walk `order`, keeping every pending task whose resources are still
/// free. The result is maximal: nothing pending and non-conflicting is
/// left out.
fn greedy_pack(
    order: impl IntoIterator<Item = TaskId>,
    pending: &TaskSet,
    resources: &BTreeMap<TaskId, BTreeSet<ResourceId>>,
) -> ScheduleDecision {
    let mut active = TaskSet::new();
    let mut used: BTreeSet<&ResourceId> = BTreeSet::new();
    for id in order {
        if !pending.contains(&id) {
            continue;
        }
        let footprint = &resources[&id];
        if footprint.iter().all(|r| !used.contains(r)) {
            used.extend(footprint.iter());
            active.insert(id);
        }
    }
    ScheduleDecision { active }
}

/// The candidate set with the largest Σ d⁺ among the two-resource
/// conflict-free sets with pending jobs: {1,2}, {1}, {2}, or a c-type
/// singleton. Ties prefer larger cardinality, then the lexicographically
/// smallest set, which keeps the choice work-conserving and
/// deterministic.
pub fn ltdf_select(
    ledger: &DebtLedger,
    pending: &TaskSet,
    roles: &TwoResourceRoles,
) -> ScheduleDecision {
    let positive_debt = |id: TaskId| ledger.debt(id).expect("ledger covers spec").max(0.0);
    let mut candidates: Vec<TaskSet> = Vec::new();
    let one = pending.contains(&roles.task_one);
    let two = pending.contains(&roles.task_two);
    if one && two {
        candidates.push([roles.task_one, roles.task_two].into_iter().collect());
    }
    if one {
        candidates.push([roles.task_one].into_iter().collect());
    }
    if two {
        candidates.push([roles.task_two].into_iter().collect());
    }
    for &n in &roles.c_type {
        if pending.contains(&n) {
            candidates.push([n].into_iter().collect());
        }
    }

    let mut best: Option<(f64, TaskSet)> = None;
    for candidate in candidates {
        let score: f64 = candidate.iter().map(|&id| positive_debt(id)).sum();
        let better = match &best {
            None => true,
            Some((best_score, best_set)) => {
                score > *best_score
                    || (score == *best_score
                        && (candidate.len() > best_set.len()
                            || (candidate.len() == best_set.len() && candidate < *best_set)))
            }
        };
        if better {
            best = Some((score, candidate));
        }
    }
    match best {
        Some((_, active)) => ScheduleDecision { active },
        None => ScheduleDecision::idle(),
    }
}

// ── Policy implementations ────────────────────────────────────────────

/// Largest Debt First on a single resource: strict preemptive priority by
/// descending debt.
pub struct LargestDebtFirst {
    ledger: DebtLedger,
    resources: BTreeMap<TaskId, BTreeSet<ResourceId>>,
}

impl LargestDebtFirst {
    pub fn new(spec: &SystemSpec) -> Result<Self, PolicyError> {
        if spec.resources.len() != 1 {
            return Err(PolicyError::UnsupportedTopology {
                policy: "ldf".to_string(),
                reason: format!("{} resources, need exactly 1", spec.resources.len()),
            });
        }
        Ok(Self {
            ledger: DebtLedger::new(spec),
            resources: footprints(spec),
        })
    }
}

impl Policy for LargestDebtFirst {
    fn name(&self) -> &'static str {
        "ldf"
    }

    fn select(&self, view: &FrameView) -> ScheduleDecision {
        greedy_pack(ldf_order(&self.ledger), view.pending, &self.resources)
    }

    fn frame_end(&mut self, frame_service: &BTreeMap<TaskId, f64>) -> Result<(), PolicyError> {
        self.ledger.update(frame_service)
    }
}

/// Largest Total Debt First on the two-resource topology.
pub struct LargestTotalDebtFirst {
    ledger: DebtLedger,
    roles: TwoResourceRoles,
}

impl LargestTotalDebtFirst {
    pub fn new(spec: &SystemSpec) -> Result<Self, PolicyError> {
        let roles = two_resource_roles(spec).map_err(|e| PolicyError::UnsupportedTopology {
            policy: "ltdf".to_string(),
            reason: e.to_string(),
        })?;
        Ok(Self {
            ledger: DebtLedger::new(spec),
            roles,
        })
    }
}

impl Policy for LargestTotalDebtFirst {
    fn name(&self) -> &'static str {
        "ltdf"
    }

    fn select(&self, view: &FrameView) -> ScheduleDecision {
        ltdf_select(&self.ledger, view.pending, &self.roles)
    }

    fn frame_end(&mut self, frame_service: &BTreeMap<TaskId, f64>) -> Result<(), PolicyError> {
        self.ledger.update(frame_service)
    }
}

/// Fixed ascending-id priority order.
pub struct StaticPriority {
    order: Vec<TaskId>,
    resources: BTreeMap<TaskId, BTreeSet<ResourceId>>,
}

impl StaticPriority {
    pub fn new(spec: &SystemSpec) -> Self {
        Self {
            order: spec.task_ids(),
            resources: footprints(spec),
        }
    }

    /// Explicit priority order; must mention every task exactly once.
    pub fn with_order(spec: &SystemSpec, order: Vec<TaskId>) -> Result<Self, PolicyError> {
        let given: BTreeSet<TaskId> = order.iter().copied().collect();
        let all: BTreeSet<TaskId> = spec.task_ids().into_iter().collect();
        if given != all || order.len() != all.len() {
            return Err(PolicyError::BadPolicyArg(format!(
                "order must list every task id exactly once, got {order:?}"
            )));
        }
        Ok(Self {
            order,
            resources: footprints(spec),
        })
    }
}

impl Policy for StaticPriority {
    fn name(&self) -> &'static str {
        "static"
    }

    fn select(&self, view: &FrameView) -> ScheduleDecision {
        greedy_pack(self.order.iter().copied(), view.pending, &self.resources)
    }
}

/// Priority order reshuffled at every frame start from the policy RNG
/// stream.
pub struct RandomOrder {
    order: Vec<TaskId>,
    resources: BTreeMap<TaskId, BTreeSet<ResourceId>>,
}

impl RandomOrder {
    pub fn new(spec: &SystemSpec) -> Self {
        Self {
            order: spec.task_ids(),
            resources: footprints(spec),
        }
    }
}

impl Policy for RandomOrder {
    fn name(&self) -> &'static str {
        "random"
    }

    fn frame_start(&mut self, _view: &FrameView, rng: &mut SimRng) {
        rng.shuffle(&mut self.order);
    }

    fn select(&self, view: &FrameView) -> ScheduleDecision {
        greedy_pack(self.order.iter().copied(), view.pending, &self.resources)
    }
}

/// Serves the task furthest below its service share: ascending
/// cumulative_service/w_n, ties by id. Zero-requirement tasks sort last.
pub struct ProportionalShare {
    ledger: DebtLedger,
    resources: BTreeMap<TaskId, BTreeSet<ResourceId>>,
}

impl ProportionalShare {
    pub fn new(spec: &SystemSpec) -> Self {
        Self {
            ledger: DebtLedger::new(spec),
            resources: footprints(spec),
        }
    }

    fn order(&self) -> Vec<TaskId> {
        let mut keyed: Vec<(TaskId, f64)> = self
            .ledger
            .entries
            .iter()
            .map(|(&id, entry)| {
                let ratio = if entry.workload > 0.0 {
                    entry.cumulative_service / entry.workload
                } else {
                    f64::INFINITY
                };
                (id, ratio)
            })
            .collect();
        keyed.sort_by(|(id_a, ratio_a), (id_b, ratio_b)| {
            ratio_a
                .partial_cmp(ratio_b)
                .expect("ratios are not NaN")
                .then(id_a.cmp(id_b))
        });
        keyed.into_iter().map(|(id, _)| id).collect()
    }
}

impl Policy for ProportionalShare {
    fn name(&self) -> &'static str {
        "share"
    }

    fn select(&self, view: &FrameView) -> ScheduleDecision {
        greedy_pack(self.order(), view.pending, &self.resources)
    }

    fn frame_end(&mut self, frame_service: &BTreeMap<TaskId, f64>) -> Result<(), PolicyError> {
        self.ledger.update(frame_service)
    }
}

fn footprints(spec: &SystemSpec) -> BTreeMap<TaskId, BTreeSet<ResourceId>> {
    spec.tasks
        .iter()
        .map(|t| (t.id, t.resources.clone()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    StaticPriority,
    RandomOrder,
    ProportionalShare,
}

/// A baseline with the same decision interface as LDF/LTDF.
pub fn baseline_policy(kind: BaselineKind, spec: &SystemSpec) -> Box<dyn Policy> {
    match kind {
        BaselineKind::StaticPriority => Box::new(StaticPriority::new(spec)),
        BaselineKind::RandomOrder => Box::new(RandomOrder::new(spec)),
        BaselineKind::ProportionalShare => Box::new(ProportionalShare::new(spec)),
    }
}

/// Policy by CLI name, with optional `key=value` arguments
/// (`order=3,1,2` selects an explicit static priority order).
pub fn make_policy(
    name: &str,
    spec: &SystemSpec,
    args: &BTreeMap<String, String>,
) -> Result<Box<dyn Policy>, PolicyError> {
    let reject_args = || -> Result<(), PolicyError> {
        match args.keys().next() {
            Some(key) => Err(PolicyError::BadPolicyArg(format!(
                "policy {name:?} takes no argument {key:?}"
            ))),
            None => Ok(()),
        }
    };
    match name {
        "ldf" => {
            reject_args()?;
            Ok(Box::new(LargestDebtFirst::new(spec)?))
        }
        "ltdf" => {
            reject_args()?;
            Ok(Box::new(LargestTotalDebtFirst::new(spec)?))
        }
        "static" => {
            for key in args.keys() {
                if key != "order" {
                    return Err(PolicyError::BadPolicyArg(format!(
                        "policy \"static\" takes only order=..., got {key:?}"
                    )));
                }
            }
            match args.get("order") {
                Some(order) => {
                    let ids = order
                        .split(',')
                        .map(|part| {
                            part.trim()
                                .parse::<u32>()
                                .map(TaskId)
                                .map_err(|_| {
                                    PolicyError::BadPolicyArg(format!(
                                        "order entry {part:?} is not a task id"
                                    ))
                                })
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    Ok(Box::new(StaticPriority::with_order(spec, ids)?))
                }
                None => Ok(Box::new(StaticPriority::new(spec))),
            }
        }
        "random" => {
            reject_args()?;
            Ok(Box::new(RandomOrder::new(spec)))
        }
        "share" => {
            reject_args()?;
            Ok(Box::new(ProportionalShare::new(spec)))
        }
        other => Err(PolicyError::UnknownPolicy(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{single_resource_spec, task_set, two_resource_spec, ArrivalModel};
    use proptest::prelude::*;

    fn ledger_with_workloads(workloads: &[(u32, f64)]) -> DebtLedger {
        // requirement = workload since λ = 1.
        let tasks: Vec<(u32, f64, f64)> =
            workloads.iter().map(|&(id, w)| (id, 1.0, w)).collect();
        let spec = single_resource_spec(1.0, &tasks, ArrivalModel::EveryFrame);
        DebtLedger::new(&spec)
    }

    #[test]
    fn debts_start_at_zero() {
        let ledger = ledger_with_workloads(&[(1, 0.3), (2, 0.5)]);
        assert_eq!(ledger.frame_index(), 1);
        assert_eq!(ledger.debt(TaskId(1)).unwrap(), 0.0);
        assert_eq!(ledger.debt(TaskId(2)).unwrap(), 0.0);
    }

    #[test]
    fn debt_accrues_workload_minus_service() {
        let mut ledger = ledger_with_workloads(&[(1, 0.3)]);
        ledger
            .update(&BTreeMap::from([(TaskId(1), 0.2)]))
            .unwrap();
        assert!((ledger.debt(TaskId(1)).unwrap() - 0.1).abs() < 1e-15);

        let mut ledger = ledger_with_workloads(&[(1, 0.3)]);
        ledger
            .update(&BTreeMap::from([(TaskId(1), 0.5)]))
            .unwrap();
        assert!((ledger.debt(TaskId(1)).unwrap() + 0.2).abs() < 1e-15);
    }

    #[test]
    fn service_beyond_frame_is_rejected() {
        let mut ledger = ledger_with_workloads(&[(1, 0.3)]);
        let err = ledger
            .update(&BTreeMap::from([(TaskId(1), 1.5)]))
            .unwrap_err();
        assert!(matches!(err, PolicyError::ServiceExceedsFrame { .. }));
    }

    #[test]
    fn ldf_orders_by_debt_then_id() {
        let mut ledger = ledger_with_workloads(&[(1, 0.5), (2, 0.2), (3, 0.9)]);
        ledger.update(&BTreeMap::new()).unwrap();
        // Debts now equal the workloads.
        assert_eq!(ldf_order(&ledger), vec![TaskId(3), TaskId(1), TaskId(2)]);

        let ledger = ledger_with_workloads(&[(1, 0.4), (2, 0.4), (3, 0.4)]);
        assert_eq!(ldf_order(&ledger), vec![TaskId(1), TaskId(2), TaskId(3)]);
    }

    fn roles_123() -> TwoResourceRoles {
        TwoResourceRoles {
            task_one: TaskId(1),
            task_two: TaskId(2),
            c_type: vec![TaskId(3)],
        }
    }

    fn ledger_with_debts(debts: &[(u32, f64)]) -> DebtLedger {
        // One update with zero service turns workloads into debts.
        let mut ledger = ledger_with_workloads(debts);
        ledger.update(&BTreeMap::new()).unwrap();
        ledger
    }

    #[test]
    fn ltdf_prefers_the_pair_when_its_total_wins() {
        let ledger = ledger_with_debts(&[(1, 0.3), (2, 0.2), (3, 0.4)]);
        let pending = task_set(&[1, 2, 3]);
        let decision = ltdf_select(&ledger, &pending, &roles_123());
        assert_eq!(decision.active, task_set(&[1, 2]));
    }

    #[test]
    fn ltdf_takes_the_c_task_when_it_dominates() {
        let ledger = ledger_with_debts(&[(1, 0.1), (2, 0.1), (3, 0.5)]);
        let pending = task_set(&[1, 2, 3]);
        let decision = ltdf_select(&ledger, &pending, &roles_123());
        assert_eq!(decision.active, task_set(&[3]));
    }

    #[test]
    fn ltdf_stays_work_conserving_on_nonpositive_debts() {
        let ledger = ledger_with_debts(&[(1, 0.0), (2, 0.0), (3, 0.0)]);
        let pending = task_set(&[1, 2, 3]);
        let decision = ltdf_select(&ledger, &pending, &roles_123());
        assert_eq!(decision.active, task_set(&[1, 2]));

        let after_pair = task_set(&[3]);
        let decision = ltdf_select(&ledger, &after_pair, &roles_123());
        assert_eq!(decision.active, task_set(&[3]));

        let decision = ltdf_select(&ledger, &TaskSet::new(), &roles_123());
        assert_eq!(decision, ScheduleDecision::idle());
    }

    #[test]
    fn ltdf_after_pair_completion_picks_among_singletons() {
        let ledger = ledger_with_debts(&[(1, 0.1), (2, 0.2), (3, 0.3)]);
        let pending = task_set(&[1, 3]);
        let decision = ltdf_select(&ledger, &pending, &roles_123());
        assert_eq!(decision.active, task_set(&[3]));
    }

    #[test]
    fn static_priority_on_two_resources_packs_the_pair_first() {
        let spec = two_resource_spec(1.0, &[(1, 1.0, 0.1), (2, 1.0, 0.1), (3, 1.0, 0.1)]);
        let policy = StaticPriority::new(&spec);
        let arrivals = task_set(&[1, 2, 3]);
        let all_pending = arrivals.clone();
        let completed = TaskSet::new();
        let view = FrameView {
            frame: 1,
            frame_length: 1.0,
            elapsed: 0.0,
            arrivals: &arrivals,
            pending: &all_pending,
            completed: &completed,
        };
        assert_eq!(policy.select(&view).active, task_set(&[1, 2]));

        let after_one = task_set(&[2, 3]);
        let view = FrameView {
            pending: &after_one,
            ..view
        };
        assert_eq!(policy.select(&view).active, task_set(&[2]));
    }

    #[test]
    fn random_order_is_reproducible_per_seed() {
        let spec = single_resource_spec(
            1.0,
            &[(1, 1.0, 0.1), (2, 1.0, 0.1), (3, 1.0, 0.1)],
            ArrivalModel::EveryFrame,
        );
        let arrivals = task_set(&[1, 2, 3]);
        let pending = arrivals.clone();
        let completed = TaskSet::new();
        let view = FrameView {
            frame: 1,
            frame_length: 1.0,
            elapsed: 0.0,
            arrivals: &arrivals,
            pending: &pending,
            completed: &completed,
        };
        let run = |seed: u64| -> Vec<TaskSet> {
            let mut policy = RandomOrder::new(&spec);
            let mut rng = SimRng::new(seed);
            (0..16)
                .map(|_| {
                    policy.frame_start(&view, &mut rng);
                    policy.select(&view).active
                })
                .collect()
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9), run(10));
    }

    #[test]
    fn proportional_share_serves_the_most_starved_task() {
        let spec = single_resource_spec(
            1.0,
            &[(1, 1.0, 0.4), (2, 1.0, 0.4)],
            ArrivalModel::EveryFrame,
        );
        let mut policy = ProportionalShare::new(&spec);
        policy
            .frame_end(&BTreeMap::from([(TaskId(1), 0.8), (TaskId(2), 0.1)]))
            .unwrap();
        let arrivals = task_set(&[1, 2]);
        let pending = arrivals.clone();
        let completed = TaskSet::new();
        let view = FrameView {
            frame: 2,
            frame_length: 1.0,
            elapsed: 0.0,
            arrivals: &arrivals,
            pending: &pending,
            completed: &completed,
        };
        assert_eq!(policy.select(&view).active, task_set(&[2]));
    }

    #[test]
    fn policy_lookup_enforces_names_and_topology() {
        let single = single_resource_spec(1.0, &[(1, 1.0, 0.1)], ArrivalModel::EveryFrame);
        let two = two_resource_spec(1.0, &[(1, 1.0, 0.1), (2, 1.0, 0.1)]);
        let no_args = BTreeMap::new();

        assert!(make_policy("ldf", &single, &no_args).is_ok());
        assert!(matches!(
            make_policy("ldf", &two, &no_args),
            Err(PolicyError::UnsupportedTopology { .. })
        ));
        assert!(make_policy("ltdf", &two, &no_args).is_ok());
        assert!(matches!(
            make_policy("ltdf", &single, &no_args),
            Err(PolicyError::UnsupportedTopology { .. })
        ));
        assert!(matches!(
            make_policy("edf", &single, &no_args),
            Err(PolicyError::UnknownPolicy(_))
        ));

        let order_args = BTreeMap::from([("order".to_string(), "1".to_string())]);
        assert!(make_policy("static", &single, &order_args).is_ok());
        let bad_order = BTreeMap::from([("order".to_string(), "1,1".to_string())]);
        assert!(make_policy("static", &single, &bad_order).is_err());
        let stray = BTreeMap::from([("alpha".to_string(), "2".to_string())]);
        assert!(matches!(
            make_policy("random", &single, &stray),
            Err(PolicyError::BadPolicyArg(_))
        ));
    }

    proptest! {
        /// The stored bookkeeping always reproduces the closed form
        /// d_n(k) = (k−1)·w_n − Σ γ_n(j).
        #[test]
        fn ledger_matches_closed_form(
            services in proptest::collection::vec(0.0f64..=1.0, 1..20),
            workload in 0.0f64..1.0,
        ) {
            let mut ledger = ledger_with_workloads(&[(1, workload)]);
            let mut total = 0.0;
            for (j, &gamma) in services.iter().enumerate() {
                ledger.update(&BTreeMap::from([(TaskId(1), gamma)])).unwrap();
                total += gamma;
                let k = (j + 2) as f64;
                let expected = (k - 1.0) * workload - total;
                prop_assert!((ledger.debt(TaskId(1)).unwrap() - expected).abs() < 1e-12);
            }
        }

        /// While both pair jobs are pending, any LTDF decision touching
        /// the pair contains both of them.
        #[test]
        fn ltdf_never_splits_the_pending_pair(
            d1 in -1.0f64..1.0,
            d2 in -1.0f64..1.0,
            d3 in -1.0f64..1.0,
        ) {
            // Plant debt d after one frame: workload d⁺ and service (−d)⁺
            // give (k−1)w − Σγ = d exactly.
            let spec = single_resource_spec(
                1.0,
                &[
                    (1, 1.0, d1.max(0.0)),
                    (2, 1.0, d2.max(0.0)),
                    (3, 1.0, d3.max(0.0)),
                ],
                ArrivalModel::EveryFrame,
            );
            let mut ledger = DebtLedger::new(&spec);
            ledger.update(&BTreeMap::from([
                (TaskId(1), (-d1).max(0.0)),
                (TaskId(2), (-d2).max(0.0)),
                (TaskId(3), (-d3).max(0.0)),
            ])).unwrap();
            let pending = task_set(&[1, 2, 3]);
            let decision = ltdf_select(&ledger, &pending, &roles_123());
            let touches_pair = decision.active.contains(&TaskId(1))
                || decision.active.contains(&TaskId(2));
            if touches_pair {
                prop_assert!(decision.active.contains(&TaskId(1)));
                prop_assert!(decision.active.contains(&TaskId(2)));
            }
        }
    }
}
