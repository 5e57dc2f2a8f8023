//! Reduction of the supported two-resource topology to an equivalent
//! single-resource system.
//!
//! Topology: two resources; exactly one task occupying only the first
//! (role 1), exactly one occupying only the second (role 2), every other
//! task occupying both (c-type); every task generates a job each frame.
//! Jobs 1 and 2 run in parallel, so the pair behaves like one job of rate
//! λ₁+λ₂ (the time to the first completion) followed by the survivor,
//! which by memorylessness is a fresh exponential of the surviving task's
//! rate. The reduced system models this as a task `c*` arriving every
//! frame plus exactly one of `1*`/`2*` with probabilities λ₁/(λ₁+λ₂) and
//! λ₂/(λ₁+λ₂); c-type tasks carry over unchanged.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{ArrivalModel, SystemSpec, TaskId, TaskSet, TaskSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReductionError {
    #[error("not a reducible two-resource system: {0}")]
    NotTwoResourceTopology(String),
    #[error("schedule does not correspond to any two-resource schedule: {0}")]
    InvalidCorrespondence(String),
}

/// The two single-resource tasks and the c-type tasks of a reducible
/// system, identified by their resource footprints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoResourceRoles {
    /// Task occupying only the lexicographically first resource.
    pub task_one: TaskId,
    /// Task occupying only the second resource.
    pub task_two: TaskId,
    /// Tasks occupying both resources, ascending.
    pub c_type: Vec<TaskId>,
}

/// Classify a spec into the supported two-resource topology.
pub fn two_resource_roles(spec: &SystemSpec) -> Result<TwoResourceRoles, ReductionError> {
    let fail = |msg: String| Err(ReductionError::NotTwoResourceTopology(msg));
    if spec.resources.len() != 2 {
        return fail(format!("{} resources, need exactly 2", spec.resources.len()));
    }
    if spec.arrivals != ArrivalModel::EveryFrame {
        return fail("arrivals must be every-frame".to_string());
    }
    let mut resources = spec.resources.iter();
    let first = resources.next().expect("two resources").clone();
    let second = resources.next().expect("two resources").clone();
    let only_first: BTreeSet<_> = [first.clone()].into();
    let only_second: BTreeSet<_> = [second].into();

    let mut task_one = None;
    let mut task_two = None;
    let mut c_type = Vec::new();
    for task in &spec.tasks {
        if task.resources == only_first {
            if task_one.replace(task.id).is_some() {
                return fail(format!("two tasks occupy only resource {first:?}"));
            }
        } else if task.resources == only_second {
            if task_two.replace(task.id).is_some() {
                return fail("two tasks occupy only the second resource".to_string());
            }
        } else {
            c_type.push(task.id);
        }
    }
    let Some(task_one) = task_one else {
        return fail("no task occupies only the first resource".to_string());
    };
    let Some(task_two) = task_two else {
        return fail("no task occupies only the second resource".to_string());
    };
    c_type.sort();
    Ok(TwoResourceRoles {
        task_one,
        task_two,
        c_type,
    })
}

/// A two-resource system rewritten over one resource, with the task
/// correspondence needed to lift schedules and throughputs back.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem {
    /// Single-resource spec over tasks {1*, 2*, c*, n*}. Requirements are
    /// zero; the admissible requirement region lives in the feasibility
    /// polytope, not here.
    pub spec: SystemSpec,
    pub one_star: TaskId,
    pub two_star: TaskId,
    pub c_star: TaskId,
    /// Reduced task id to the original task ids it stands for.
    pub task_map: BTreeMap<TaskId, TaskSet>,
    /// Rates of the original single-resource pair.
    pub rate_one: f64,
    pub rate_two: f64,
}

impl ReducedSystem {
    /// λ₁ + λ₂, the c* rate.
    pub fn pair_rate(&self) -> f64 {
        self.rate_one + self.rate_two
    }

    /// Per-frame arrival probability the construction assigns to 1*,
    /// λ₁/(λ₁+λ₂). Intended to model the chance that job 1 outlasts
    /// job 2; the measured race frequency for independent exponentials
    /// is λ₂/(λ₁+λ₂), so the two coincide only for λ₁ = λ₂ (see the
    /// coupled-run metrics).
    pub fn prob_one_star(&self) -> f64 {
        self.rate_one / self.pair_rate()
    }

    /// Map reduced per-frame throughputs back to original tasks:
    /// q₁ = (λ₂/Λ)·q_{c*} + q_{1*}, q₂ = (λ₁/Λ)·q_{c*} + q_{2*},
    /// q_n = q_{n*}.
    pub fn lift_throughputs(&self, reduced_q: &BTreeMap<TaskId, f64>) -> BTreeMap<TaskId, f64> {
        let q = |id: TaskId| reduced_q.get(&id).copied().unwrap_or(0.0);
        let q_c = q(self.c_star);
        let mut lifted = BTreeMap::new();
        for (reduced, originals) in &self.task_map {
            if *reduced == self.c_star {
                continue;
            }
            let original = *originals.first().expect("non-c* entries are singletons");
            let value = if *reduced == self.one_star {
                self.rate_two / self.pair_rate() * q_c + q(self.one_star)
            } else if *reduced == self.two_star {
                self.rate_one / self.pair_rate() * q_c + q(self.two_star)
            } else {
                q(*reduced)
            };
            lifted.insert(original, value);
        }
        lifted
    }

    /// Original task set to process for a reduced-task choice, given the
    /// set of original jobs already completed this frame. Rejects choices
    /// that correspond to no two-resource schedule.
    pub fn decision_correspondence(
        &self,
        reduced_choice: TaskId,
        completed: &TaskSet,
    ) -> Result<TaskSet, ReductionError> {
        let one = *self.task_map[&self.one_star].first().expect("singleton");
        let two = *self.task_map[&self.two_star].first().expect("singleton");
        if reduced_choice == self.c_star {
            if completed.contains(&one) || completed.contains(&two) {
                return Err(ReductionError::InvalidCorrespondence(format!(
                    "{} chosen after the pair's first completion",
                    self.c_star
                )));
            }
            return Ok(self.task_map[&self.c_star].clone());
        }
        if reduced_choice == self.one_star {
            if !completed.contains(&two) {
                return Err(ReductionError::InvalidCorrespondence(format!(
                    "{} chosen while the job of task {two} is incomplete",
                    self.one_star
                )));
            }
            return Ok([one].into_iter().collect());
        }
        if reduced_choice == self.two_star {
            if !completed.contains(&one) {
                return Err(ReductionError::InvalidCorrespondence(format!(
                    "{} chosen while the job of task {one} is incomplete",
                    self.two_star
                )));
            }
            return Ok([two].into_iter().collect());
        }
        match self.task_map.get(&reduced_choice) {
            Some(originals) => Ok(originals.clone()),
            None => Err(ReductionError::InvalidCorrespondence(format!(
                "unknown reduced task {reduced_choice}"
            ))),
        }
    }

    /// Reduced spec JSON annotated with the task correspondence.
    pub fn to_annotated_json(&self) -> String {
        let entries = self
            .task_map
            .iter()
            .map(|(reduced, originals)| crate::model::TaskMapEntry {
                reduced: reduced.0,
                original: originals.iter().map(|t| t.0).collect(),
            })
            .collect();
        self.spec.to_json_with_task_map(entries)
    }
}

/// Build the equivalent single-resource system.
///
/// Reduced ids: 1*, 2*, n* keep their original ids; c* takes the smallest
/// unused id above them.
pub fn reduce(spec: &SystemSpec) -> Result<ReducedSystem, ReductionError> {
    let roles = two_resource_roles(spec)?;
    let rate_of = |id: TaskId| spec.task(id).expect("role ids exist").rate;
    let rate_one = rate_of(roles.task_one);
    let rate_two = rate_of(roles.task_two);
    let c_star = TaskId(spec.tasks.iter().map(|t| t.id.0).max().expect("nonempty") + 1);

    let resource: BTreeSet<String> = ["r".to_string()].into();
    let mut tasks = vec![
        TaskSpec {
            id: roles.task_one,
            rate: rate_one,
            requirement: 0.0,
            resources: resource.clone(),
        },
        TaskSpec {
            id: roles.task_two,
            rate: rate_two,
            requirement: 0.0,
            resources: resource.clone(),
        },
        TaskSpec {
            id: c_star,
            rate: rate_one + rate_two,
            requirement: 0.0,
            resources: resource.clone(),
        },
    ];
    for &n in &roles.c_type {
        tasks.push(TaskSpec {
            id: n,
            rate: rate_of(n),
            requirement: 0.0,
            resources: resource.clone(),
        });
    }
    tasks.sort_by_key(|t| t.id);

    // Exactly one of 1*/2* per frame; c* and every n* always arrive.
    let every_frame: TaskSet = roles
        .c_type
        .iter()
        .copied()
        .chain([c_star])
        .collect();
    let with_one: TaskSet = every_frame
        .iter()
        .copied()
        .chain([roles.task_one])
        .collect();
    let with_two: TaskSet = every_frame
        .iter()
        .copied()
        .chain([roles.task_two])
        .collect();
    let total = rate_one + rate_two;
    let arrivals = ArrivalModel::Subsets(BTreeMap::from([
        (with_one, rate_one / total),
        (with_two, rate_two / total),
    ]));

    let mut task_map = BTreeMap::new();
    task_map.insert(roles.task_one, [roles.task_one].into_iter().collect());
    task_map.insert(roles.task_two, [roles.task_two].into_iter().collect());
    task_map.insert(
        c_star,
        [roles.task_one, roles.task_two].into_iter().collect(),
    );
    for &n in &roles.c_type {
        task_map.insert(n, [n].into_iter().collect());
    }

    Ok(ReducedSystem {
        spec: SystemSpec {
            frame_length: spec.frame_length,
            resources: resource,
            tasks,
            arrivals,
        },
        one_star: roles.task_one,
        two_star: roles.task_two,
        c_star,
        task_map,
        rate_one,
        rate_two,
    })
}
