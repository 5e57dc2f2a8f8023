//! Domain types for real-time stochastic processing networks.
//!
//! A system is a set of tasks sharing a set of resources. Time is divided
//! into frames of length `T`; at each frame start some subset of tasks
//! generates one job each, every job needs the concurrent use of its task's
//! resource set, its processing time is exponential with the task's rate,
//! and jobs left unfinished at the frame boundary expire. Each task carries
//! a timely-throughput requirement `q_n`: the long-run average number of
//! on-time completions per frame it must receive.
//!
//! All types here are immutable after validation and safe to share across
//! threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for "subset probabilities sum to 1".
pub const DIST_SUM_TOL: f64 = 1e-12;

/// Task identifier (small integer, unique within a system).
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct TaskId(pub u32);

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A set of task ids. `BTreeSet` keeps every subset in canonical sorted
/// order, so subsets are directly comparable and printable.
pub type TaskSet = BTreeSet<TaskId>;

/// Resource identifier.
pub type ResourceId = String;

/// Render a task subset as `-` (empty) or ids joined by `+`, e.g. `1+3`.
pub fn subset_label(s: &TaskSet) -> String {
    if s.is_empty() {
        return "-".to_string();
    }
    s.iter()
        .map(|t| t.to_string())
        .collect::<Vec<_>>()
        .join("+")
}

/// One task: completion rate, per-frame throughput requirement, resources.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskSpec {
    pub id: TaskId,
    /// Completion rate λ: processing times are Exponential with mean 1/λ.
    pub rate: f64,
    /// Required completed jobs per frame, `q`.
    pub requirement: f64,
    /// Resources a job of this task occupies, all concurrently.
    pub resources: BTreeSet<ResourceId>,
}

/// Per-frame joint arrival distribution over subsets of tasks.
///
/// The analysis modules only consume the stationary quantities `r(S)` (the
/// probability that exactly the subset `S` arrives) and `r_n` (the marginal
/// arrival rate of task `n`), so an i.i.d.-per-frame model is sufficient.
#[derive(Clone, Debug, PartialEq)]
pub enum ArrivalModel {
    /// Every task generates a job in every frame.
    EveryFrame,
    /// Independent per-task Bernoulli arrivals with probability `p_n`.
    Bernoulli(BTreeMap<TaskId, f64>),
    /// Explicit joint distribution over arrival subsets.
    Subsets(BTreeMap<TaskSet, f64>),
}

/// A complete system description; the single source of truth for an
/// experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    /// Frame length `T` in time units.
    pub frame_length: f64,
    pub resources: BTreeSet<ResourceId>,
    pub tasks: Vec<TaskSpec>,
    pub arrivals: ArrivalModel,
}

/// One job inside the simulator. `required_time` is the hidden processing
/// time draw; policies never observe it (non-clairvoyance is enforced by
/// keeping these fields crate-private).
#[derive(Clone, Debug)]
pub struct Job {
    pub task: TaskId,
    pub frame: u64,
    pub(crate) required_time: f64,
    pub(crate) remaining_time: f64,
}

impl Job {
    pub(crate) fn new(task: TaskId, frame: u64, required_time: f64) -> Self {
        Self {
            task,
            frame,
            required_time,
            remaining_time: required_time,
        }
    }

    /// Service received so far. Exactly `required_time` on completion.
    pub fn received_time(&self) -> f64 {
        self.required_time - self.remaining_time
    }

    pub fn is_complete(&self) -> bool {
        self.remaining_time <= 0.0
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidationError {
    #[error("task {0}: rate must be positive")]
    NonPositiveRate(TaskId),
    #[error("task {0}: requirement must be nonnegative and finite")]
    NegativeRequirement(TaskId),
    #[error("task {task}: requirement {requirement} exceeds mean arrival rate {arrival_rate}")]
    RequirementExceedsArrivalRate {
        task: TaskId,
        requirement: f64,
        arrival_rate: f64,
    },
    #[error("task {0}: resource set is empty")]
    EmptyResourceSet(TaskId),
    #[error("task {task}: unknown resource {resource:?}")]
    UnknownResource { task: TaskId, resource: ResourceId },
    #[error("system has no tasks")]
    EmptyTaskList,
    #[error("duplicate task id {0}")]
    DuplicateTaskId(TaskId),
    #[error("frame length must be positive and finite")]
    NonPositiveFrameLength,
    #[error("arrival distribution: {0}")]
    BadDistribution(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown task {0}")]
    UnknownTask(TaskId),
    #[error("subset distribution over {0} tasks is too large to enumerate")]
    TooManySubsets(usize),
}

/// Errors from reading a spec document.
#[derive(Debug, Error)]
pub enum SpecError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema: {0}")]
    Schema(String),
    #[error("invalid spec: {}", format_validation_errors(.0))]
    Invalid(Vec<ValidationError>),
}

fn format_validation_errors(errors: &[ValidationError]) -> String {
    errors
        .iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

impl ArrivalModel {
    /// Joint distribution of the arrival subset restricted to `tasks`:
    /// `r'(A) = Pr[arrival set ∩ tasks = A]`. Probabilities sum to 1.
    pub fn subset_distribution(
        &self,
        tasks: &[TaskId],
    ) -> Result<BTreeMap<TaskSet, f64>, ModelError> {
        if tasks.len() > 25 {
            return Err(ModelError::TooManySubsets(tasks.len()));
        }
        match self {
            ArrivalModel::EveryFrame => {
                let all: TaskSet = tasks.iter().copied().collect();
                Ok(BTreeMap::from([(all, 1.0)]))
            }
            ArrivalModel::Bernoulli(p) => {
                let mut probs = Vec::with_capacity(tasks.len());
                for t in tasks {
                    let pt = *p.get(t).ok_or(ModelError::UnknownTask(*t))?;
                    probs.push(pt);
                }
                let mut dist = BTreeMap::new();
                for mask in 0u32..(1u32 << tasks.len()) {
                    let mut prob = 1.0;
                    let mut subset = TaskSet::new();
                    for (i, t) in tasks.iter().enumerate() {
                        if mask & (1 << i) != 0 {
                            prob *= probs[i];
                            subset.insert(*t);
                        } else {
                            prob *= 1.0 - probs[i];
                        }
                    }
                    if prob > 0.0 {
                        *dist.entry(subset).or_insert(0.0) += prob;
                    }
                }
                Ok(dist)
            }
            ArrivalModel::Subsets(dist) => {
                let keep: TaskSet = tasks.iter().copied().collect();
                let mut out: BTreeMap<TaskSet, f64> = BTreeMap::new();
                for (subset, prob) in dist {
                    let restricted: TaskSet = subset.intersection(&keep).copied().collect();
                    *out.entry(restricted).or_insert(0.0) += prob;
                }
                Ok(out)
            }
        }
    }

    /// Marginal arrival rate `r_n = Σ_{S ∋ n} r(S)`.
    pub fn mean_rate(&self, task: TaskId) -> Result<f64, ModelError> {
        match self {
            ArrivalModel::EveryFrame => Ok(1.0),
            ArrivalModel::Bernoulli(p) => {
                p.get(&task).copied().ok_or(ModelError::UnknownTask(task))
            }
            ArrivalModel::Subsets(dist) => Ok(dist
                .iter()
                .filter(|(s, _)| s.contains(&task))
                .map(|(_, p)| p)
                .sum()),
        }
    }
}

impl SystemSpec {
    pub fn task(&self, id: TaskId) -> Option<&TaskSpec> {
        self.tasks.iter().find(|t| t.id == id)
    }

    /// Task ids in ascending order.
    pub fn task_ids(&self) -> Vec<TaskId> {
        let mut ids: Vec<TaskId> = self.tasks.iter().map(|t| t.id).collect();
        ids.sort();
        ids
    }

    /// Marginal arrival rate of a task of this system.
    pub fn mean_arrival_rate(&self, id: TaskId) -> Result<f64, ModelError> {
        if self.task(id).is_none() {
            return Err(ModelError::UnknownTask(id));
        }
        self.arrivals.mean_rate(id)
    }

    /// Check every invariant, collecting all violations.
    pub fn validate(&self) -> Result<(), Vec<ValidationError>> {
        let mut errors = Vec::new();
        if !(self.frame_length.is_finite() && self.frame_length > 0.0) {
            errors.push(ValidationError::NonPositiveFrameLength);
        }
        if self.tasks.is_empty() {
            errors.push(ValidationError::EmptyTaskList);
        }
        let mut seen = BTreeSet::new();
        for t in &self.tasks {
            if !seen.insert(t.id) {
                errors.push(ValidationError::DuplicateTaskId(t.id));
            }
            if !(t.rate.is_finite() && t.rate > 0.0) {
                errors.push(ValidationError::NonPositiveRate(t.id));
            }
            if !(t.requirement.is_finite() && t.requirement >= 0.0) {
                errors.push(ValidationError::NegativeRequirement(t.id));
            }
            if t.resources.is_empty() {
                errors.push(ValidationError::EmptyResourceSet(t.id));
            }
            for r in &t.resources {
                if !self.resources.contains(r) {
                    errors.push(ValidationError::UnknownResource {
                        task: t.id,
                        resource: r.clone(),
                    });
                }
            }
        }
        let task_ids: BTreeSet<TaskId> = self.tasks.iter().map(|t| t.id).collect();
        let arrivals_ok = self.validate_arrivals(&task_ids, &mut errors);
        if arrivals_ok {
            for t in &self.tasks {
                if let Ok(r) = self.arrivals.mean_rate(t.id) {
                    if t.requirement > r + DIST_SUM_TOL {
                        errors.push(ValidationError::RequirementExceedsArrivalRate {
                            task: t.id,
                            requirement: t.requirement,
                            arrival_rate: r,
                        });
                    }
                }
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    fn validate_arrivals(
        &self,
        task_ids: &BTreeSet<TaskId>,
        errors: &mut Vec<ValidationError>,
    ) -> bool {
        let before = errors.len();
        match &self.arrivals {
            ArrivalModel::EveryFrame => {}
            ArrivalModel::Bernoulli(p) => {
                for (t, prob) in p {
                    if !task_ids.contains(t) {
                        errors.push(ValidationError::BadDistribution(format!(
                            "probability given for unknown task {t}"
                        )));
                    }
                    if !(prob.is_finite() && (0.0..=1.0).contains(prob)) {
                        errors.push(ValidationError::BadDistribution(format!(
                            "task {t}: probability {prob} outside [0, 1]"
                        )));
                    }
                }
                for t in task_ids {
                    if !p.contains_key(t) {
                        errors.push(ValidationError::BadDistribution(format!(
                            "no arrival probability for task {t}"
                        )));
                    }
                }
            }
            ArrivalModel::Subsets(dist) => {
                let mut total = 0.0;
                for (subset, prob) in dist {
                    if !(prob.is_finite() && *prob >= 0.0) {
                        errors.push(ValidationError::BadDistribution(format!(
                            "subset {}: probability {prob} is negative",
                            subset_label(subset)
                        )));
                    }
                    for t in subset {
                        if !task_ids.contains(t) {
                            errors.push(ValidationError::BadDistribution(format!(
                                "subset {} references unknown task {t}",
                                subset_label(subset)
                            )));
                        }
                    }
                    total += prob;
                }
                if (total - 1.0).abs() > DIST_SUM_TOL {
                    errors.push(ValidationError::BadDistribution(format!(
                        "probabilities sum to {total}, not 1"
                    )));
                }
            }
        }
        errors.len() == before
    }

    /// Parse and validate a spec from JSON text.
    pub fn from_json_str(text: &str) -> Result<Self, SpecError> {
        let doc: SpecDoc = serde_json::from_str(text)?;
        let (spec, mut errors) = doc.into_model()?;
        if let Err(more) = spec.validate() {
            errors.extend(more);
        }
        if errors.is_empty() {
            Ok(spec)
        } else {
            Err(SpecError::Invalid(errors))
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SpecError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    /// Serialize to the JSON document schema (pretty-printed, stable key
    /// order). `task_map` annotations, if any, are supplied by the caller.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&SpecDoc::from_model(self, None)).expect("spec serializes")
    }

    pub(crate) fn to_json_with_task_map(&self, task_map: Vec<TaskMapEntry>) -> String {
        serde_json::to_string_pretty(&SpecDoc::from_model(self, Some(task_map)))
            .expect("spec serializes")
    }

    /// Canonical compact serialization used for config digests.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&SpecDoc::from_model(self, None)).expect("spec serializes")
    }
}

/// Validate a spec document, returning it unchanged if every invariant
/// holds and the full list of violations otherwise. Idempotent.
pub fn validate_spec(spec: SystemSpec) -> Result<SystemSpec, Vec<ValidationError>> {
    spec.validate()?;
    Ok(spec)
}

// ── JSON document schema ──────────────────────────────────────────────

/// On-disk schema. Unknown keys are rejected so that typos surface as
/// errors instead of silently changing an experiment.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDoc {
    frame_length: f64,
    resources: Vec<String>,
    tasks: Vec<TaskDoc>,
    arrivals: serde_json::Value,
    /// Annotation written by the `reduce` command; carried through but not
    /// interpreted on load.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    task_map: Option<Vec<TaskMapEntry>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskDoc {
    id: u32,
    rate: f64,
    requirement: f64,
    resources: Vec<String>,
}

/// `reduce` output annotation: one reduced task and the original task set
/// it stands for.
#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub(crate) struct TaskMapEntry {
    pub reduced: u32,
    pub original: Vec<u32>,
}

impl SpecDoc {
    fn into_model(self) -> Result<(SystemSpec, Vec<ValidationError>), SpecError> {
        let mut errors = Vec::new();
        let arrivals = parse_arrivals(&self.arrivals, &mut errors)?;
        let spec = SystemSpec {
            frame_length: self.frame_length,
            resources: self.resources.into_iter().collect(),
            tasks: self
                .tasks
                .into_iter()
                .map(|t| TaskSpec {
                    id: TaskId(t.id),
                    rate: t.rate,
                    requirement: t.requirement,
                    resources: t.resources.into_iter().collect(),
                })
                .collect(),
            arrivals,
        };
        Ok((spec, errors))
    }

    fn from_model(spec: &SystemSpec, task_map: Option<Vec<TaskMapEntry>>) -> Self {
        SpecDoc {
            frame_length: spec.frame_length,
            resources: spec.resources.iter().cloned().collect(),
            tasks: spec
                .tasks
                .iter()
                .map(|t| TaskDoc {
                    id: t.id.0,
                    rate: t.rate,
                    requirement: t.requirement,
                    resources: t.resources.iter().cloned().collect(),
                })
                .collect(),
            arrivals: arrivals_to_value(&spec.arrivals),
            task_map,
        }
    }
}

/// Strict parse of the `arrivals` object. Internally tagged enums cannot
/// reject unknown keys through serde derive, so this is done by hand.
fn parse_arrivals(
    value: &serde_json::Value,
    errors: &mut Vec<ValidationError>,
) -> Result<ArrivalModel, SpecError> {
    use serde_json::Value;
    let obj = value
        .as_object()
        .ok_or_else(|| SpecError::Schema("arrivals must be an object".into()))?;
    let kind = obj
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| SpecError::Schema("arrivals.kind must be a string".into()))?;
    let check_keys = |allowed: &[&str]| -> Result<(), SpecError> {
        for key in obj.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(SpecError::Schema(format!(
                    "arrivals: unknown key {key:?} for kind {kind:?}"
                )));
            }
        }
        Ok(())
    };
    match kind {
        "every_frame" => {
            check_keys(&["kind"])?;
            Ok(ArrivalModel::EveryFrame)
        }
        "bernoulli" => {
            check_keys(&["kind", "p"])?;
            let p = obj
                .get("p")
                .and_then(Value::as_object)
                .ok_or_else(|| SpecError::Schema("arrivals.p must be an object".into()))?;
            let mut map = BTreeMap::new();
            for (key, v) in p {
                let id: u32 = key.parse().map_err(|_| {
                    SpecError::Schema(format!("arrivals.p: key {key:?} is not a task id"))
                })?;
                let prob = v
                    .as_f64()
                    .ok_or_else(|| SpecError::Schema(format!("arrivals.p[{key}] not a number")))?;
                map.insert(TaskId(id), prob);
            }
            Ok(ArrivalModel::Bernoulli(map))
        }
        "subset" => {
            check_keys(&["kind", "dist"])?;
            let dist = obj
                .get("dist")
                .and_then(Value::as_array)
                .ok_or_else(|| SpecError::Schema("arrivals.dist must be an array".into()))?;
            let mut map: BTreeMap<TaskSet, f64> = BTreeMap::new();
            for entry in dist {
                let row: SubsetProbDoc = serde_json::from_value(entry.clone())?;
                let subset: TaskSet = row.subset.into_iter().map(TaskId).collect();
                if map.insert(subset.clone(), row.prob).is_some() {
                    errors.push(ValidationError::BadDistribution(format!(
                        "duplicate subset {}",
                        subset_label(&subset)
                    )));
                }
            }
            Ok(ArrivalModel::Subsets(map))
        }
        other => Err(SpecError::Schema(format!(
            "arrivals.kind {other:?} is not one of every_frame, bernoulli, subset"
        ))),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubsetProbDoc {
    subset: Vec<u32>,
    prob: f64,
}

fn arrivals_to_value(model: &ArrivalModel) -> serde_json::Value {
    use serde_json::json;
    match model {
        ArrivalModel::EveryFrame => json!({ "kind": "every_frame" }),
        ArrivalModel::Bernoulli(p) => {
            let map: BTreeMap<String, f64> = p.iter().map(|(t, v)| (t.to_string(), *v)).collect();
            json!({ "kind": "bernoulli", "p": map })
        }
        ArrivalModel::Subsets(dist) => {
            let rows: Vec<serde_json::Value> = dist
                .iter()
                .map(|(s, p)| {
                    json!({
                        "subset": s.iter().map(|t| t.0).collect::<Vec<_>>(),
                        "prob": p,
                    })
                })
                .collect();
            json!({ "kind": "subset", "dist": rows })
        }
    }
}

// ── Convenience constructors (used heavily by tests and examples) ─────

/// Single-resource system on resource `"r"` from `(id, rate, requirement)`
/// triples.
pub fn single_resource_spec(
    frame_length: f64,
    tasks: &[(u32, f64, f64)],
    arrivals: ArrivalModel,
) -> SystemSpec {
    SystemSpec {
        frame_length,
        resources: BTreeSet::from(["r".to_string()]),
        tasks: tasks
            .iter()
            .map(|&(id, rate, requirement)| TaskSpec {
                id: TaskId(id),
                rate,
                requirement,
                resources: BTreeSet::from(["r".to_string()]),
            })
            .collect(),
        arrivals,
    }
}

/// Two-resource system in the supported topology: task 1 on resource
/// `"a"`, task 2 on resource `"b"`, every other task on both. Tasks are
/// `(id, rate, requirement)`; ids 1 and 2 must be present.
pub fn two_resource_spec(frame_length: f64, tasks: &[(u32, f64, f64)]) -> SystemSpec {
    SystemSpec {
        frame_length,
        resources: BTreeSet::from(["a".to_string(), "b".to_string()]),
        tasks: tasks
            .iter()
            .map(|&(id, rate, requirement)| TaskSpec {
                id: TaskId(id),
                rate,
                requirement,
                resources: match id {
                    1 => BTreeSet::from(["a".to_string()]),
                    2 => BTreeSet::from(["b".to_string()]),
                    _ => BTreeSet::from(["a".to_string(), "b".to_string()]),
                },
            })
            .collect(),
        arrivals: ArrivalModel::EveryFrame,
    }
}

#[cfg(test)]
pub(crate) fn task_set(ids: &[u32]) -> TaskSet {
    ids.iter().map(|&i| TaskId(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn basic_spec() -> SystemSpec {
        single_resource_spec(1.0, &[(1, 1.0, 0.5)], ArrivalModel::EveryFrame)
    }

    #[test]
    fn valid_spec_passes_and_validation_is_idempotent() {
        let spec = basic_spec();
        let validated = validate_spec(spec.clone()).unwrap();
        assert_eq!(validated, spec);
        let again = validate_spec(validated.clone()).unwrap();
        assert_eq!(again, validated);
    }

    #[test]
    fn zero_rate_is_rejected() {
        let spec = single_resource_spec(1.0, &[(1, 0.0, 0.0)], ArrivalModel::EveryFrame);
        let errors = validate_spec(spec).unwrap_err();
        assert!(errors.contains(&ValidationError::NonPositiveRate(TaskId(1))));
    }

    #[test]
    fn requirement_above_arrival_rate_is_rejected() {
        let arrivals = ArrivalModel::Bernoulli(BTreeMap::from([(TaskId(1), 0.5)]));
        let spec = single_resource_spec(1.0, &[(1, 1.0, 0.6)], arrivals);
        let errors = validate_spec(spec).unwrap_err();
        assert!(matches!(
            errors[0],
            ValidationError::RequirementExceedsArrivalRate { task: TaskId(1), .. }
        ));
    }

    #[test]
    fn requirement_at_arrival_rate_is_allowed() {
        let spec = single_resource_spec(1.0, &[(1, 1.0, 0.5)], ArrivalModel::EveryFrame);
        assert!(validate_spec(spec).is_ok());
    }

    #[test]
    fn all_violations_are_collected() {
        let mut spec = single_resource_spec(
            -1.0,
            &[(1, 0.0, -0.5), (1, 2.0, 0.1)],
            ArrivalModel::EveryFrame,
        );
        spec.tasks[0].resources = BTreeSet::from(["ghost".to_string()]);
        let errors = validate_spec(spec).unwrap_err();
        assert!(errors.len() >= 4, "got {errors:?}");
    }

    #[test]
    fn every_frame_distribution_is_point_mass_on_full_set() {
        let dist = ArrivalModel::EveryFrame
            .subset_distribution(&[TaskId(1), TaskId(2)])
            .unwrap();
        assert_eq!(dist.len(), 1);
        assert_eq!(dist[&task_set(&[1, 2])], 1.0);
    }

    #[test]
    fn bernoulli_half_half_gives_four_quarters() {
        let model = ArrivalModel::Bernoulli(BTreeMap::from([
            (TaskId(1), 0.5),
            (TaskId(2), 0.5),
        ]));
        let dist = model.subset_distribution(&[TaskId(1), TaskId(2)]).unwrap();
        assert_eq!(dist.len(), 4);
        for p in dist.values() {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn subset_distribution_restriction_is_identity_on_own_support() {
        let model = ArrivalModel::Subsets(BTreeMap::from([
            (task_set(&[1]), 0.5),
            (task_set(&[2]), 0.5),
        ]));
        let dist = model.subset_distribution(&[TaskId(1), TaskId(2)]).unwrap();
        assert_eq!(dist[&task_set(&[1])], 0.5);
        assert_eq!(dist[&task_set(&[2])], 0.5);
    }

    #[test]
    fn mean_rate_examples() {
        assert_eq!(ArrivalModel::EveryFrame.mean_rate(TaskId(9)).unwrap(), 1.0);
        let bern = ArrivalModel::Bernoulli(BTreeMap::from([(TaskId(1), 0.3)]));
        assert_eq!(bern.mean_rate(TaskId(1)).unwrap(), 0.3);
        let subsets = ArrivalModel::Subsets(BTreeMap::from([
            (task_set(&[1]), 0.2),
            (task_set(&[1, 2]), 0.3),
            (task_set(&[]), 0.5),
        ]));
        assert!((subsets.mean_rate(TaskId(1)).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip_and_strict_keys() {
        let text = r#"{
            "frame_length": 1.0,
            "resources": ["r"],
            "tasks": [{"id": 1, "rate": 2.0, "requirement": 0.5, "resources": ["r"]}],
            "arrivals": {"kind": "bernoulli", "p": {"1": 0.9}}
        }"#;
        let spec = SystemSpec::from_json_str(text).unwrap();
        let round = SystemSpec::from_json_str(&spec.to_json_string()).unwrap();
        assert_eq!(spec, round);

        let bad = text.replace("\"frame_length\"", "\"frame_legnth\"");
        assert!(matches!(
            SystemSpec::from_json_str(&bad),
            Err(SpecError::Json(_))
        ));

        let bad_arrivals = text.replace("\"p\":", "\"probs\":");
        assert!(SystemSpec::from_json_str(&bad_arrivals).is_err());
    }

    #[test]
    fn duplicate_subsets_in_json_are_rejected() {
        let text = r#"{
            "frame_length": 1.0,
            "resources": ["r"],
            "tasks": [{"id": 1, "rate": 2.0, "requirement": 0.0, "resources": ["r"]}],
            "arrivals": {"kind": "subset", "dist": [
                {"subset": [1], "prob": 0.5},
                {"subset": [1], "prob": 0.5}
            ]}
        }"#;
        match SystemSpec::from_json_str(text) {
            Err(SpecError::Invalid(errors)) => {
                assert!(errors.iter().any(|e| matches!(e, ValidationError::BadDistribution(_))))
            }
            other => panic!("expected duplicate-subset rejection, got {other:?}"),
        }
    }

    proptest! {
        /// For any Bernoulli model, the joint subset distribution sums to 1
        /// and its marginals reproduce `mean_rate` to floating-point error.
        #[test]
        fn marginals_are_consistent(ps in proptest::collection::vec(0.0f64..=1.0, 1..6)) {
            let ids: Vec<TaskId> = (0..ps.len() as u32).map(TaskId).collect();
            let model = ArrivalModel::Bernoulli(
                ids.iter().copied().zip(ps.iter().copied()).collect(),
            );
            let dist = model.subset_distribution(&ids).unwrap();
            let total: f64 = dist.values().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            for id in &ids {
                let marginal: f64 = dist
                    .iter()
                    .filter(|(s, _)| s.contains(id))
                    .map(|(_, p)| p)
                    .sum();
                prop_assert!((marginal - model.mean_rate(*id).unwrap()).abs() < 1e-9);
            }
        }
    }
}
