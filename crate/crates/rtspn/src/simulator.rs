//! Frame-based discrete-event simulator.
//!
//! Each frame: sample the arrival subset, draw one hidden exponential
//! processing time per arriving job, then execute the policy's decisions
//! preemptively. A decision holds until a job completes or the frame
//! ends; completions re-invoke the policy; unfinished jobs expire at the
//! frame boundary. Runs are deterministic given (spec, policy, frames,
//! seed): arrival and processing draws come from one RNG stream and
//! policy randomness from a second, so different policies see identical
//! workload realizations for the same seed.

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{ArrivalModel, Job, SystemSpec, TaskId, TaskSet, ValidationError};
use crate::policy::{Policy, PolicyError};
use crate::reduction::ReducedSystem;
use crate::rng::{split, SimRng};
use crate::stats::{batch_std_error, replication_summary, BatchMeans, SampleStats};

/// Batch count for within-run standard errors; batch means absorb the
/// serial correlation that debt dynamics induce across frames.
const BATCHES: u64 = 100;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid spec: {0:?}")]
    InvalidSpec(Vec<ValidationError>),
    #[error("frame {frame} at {elapsed:.6}: {detail}")]
    PolicyConflict {
        frame: u64,
        elapsed: f64,
        detail: String,
    },
    #[error("frame {frame} at {elapsed:.6}: policy idled while jobs were pending")]
    NonWorkConserving { frame: u64, elapsed: f64 },
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("arrival generator: {0}")]
    InvalidGenerator(String),
    #[error("coupled run: {0}")]
    CoupledSetup(String),
}

// ── Arrival generation ────────────────────────────────────────────────

/// Per-frame arrival-subset source. Implementations must consume a
/// deterministic number of RNG draws per frame for a given model, so that
/// seeds reproduce runs exactly.
pub trait ArrivalGenerator {
    fn next_arrivals(&mut self, frame: u64, rng: &mut SimRng) -> TaskSet;
}

/// Independent draws each frame from the spec's arrival model.
pub struct IidArrivals {
    kind: IidKind,
}

enum IidKind {
    EveryFrame(TaskSet),
    Bernoulli(Vec<(TaskId, f64)>),
    Subsets {
        subsets: Vec<TaskSet>,
        cumulative: Vec<f64>,
    },
}

impl IidArrivals {
    pub fn new(spec: &SystemSpec) -> Self {
        let kind = match &spec.arrivals {
            ArrivalModel::EveryFrame => IidKind::EveryFrame(spec.task_ids().into_iter().collect()),
            ArrivalModel::Bernoulli(p) => {
                IidKind::Bernoulli(p.iter().map(|(&t, &prob)| (t, prob)).collect())
            }
            ArrivalModel::Subsets(dist) => {
                let mut subsets = Vec::with_capacity(dist.len());
                let mut cumulative = Vec::with_capacity(dist.len());
                let mut acc = 0.0;
                for (subset, prob) in dist {
                    acc += prob;
                    subsets.push(subset.clone());
                    cumulative.push(acc);
                }
                IidKind::Subsets {
                    subsets,
                    cumulative,
                }
            }
        };
        Self { kind }
    }
}

impl ArrivalGenerator for IidArrivals {
    fn next_arrivals(&mut self, _frame: u64, rng: &mut SimRng) -> TaskSet {
        match &self.kind {
            IidKind::EveryFrame(all) => all.clone(),
            IidKind::Bernoulli(probs) => probs
                .iter()
                .filter(|(_, p)| rng.bernoulli(*p))
                .map(|(t, _)| *t)
                .collect(),
            IidKind::Subsets {
                subsets,
                cumulative,
            } => subsets[rng.categorical(cumulative)].clone(),
        }
    }
}

/// Markov-modulated arrivals: a state chain where each state emits a
/// fixed arrival subset. Supported by the simulator only; the analytic
/// feasibility results assume frame-i.i.d. arrivals.
pub struct MarkovArrivals {
    /// Row-stochastic transition matrix.
    transition: Vec<Vec<f64>>,
    /// Cumulative rows, precomputed for sampling.
    cumulative: Vec<Vec<f64>>,
    per_state: Vec<TaskSet>,
    state: usize,
}

impl MarkovArrivals {
    pub fn new(
        transition: Vec<Vec<f64>>,
        per_state: Vec<TaskSet>,
        initial_state: usize,
    ) -> Result<Self, SimError> {
        let states = transition.len();
        let fail = |msg: String| Err(SimError::InvalidGenerator(msg));
        if states == 0 {
            return fail("no states".to_string());
        }
        if per_state.len() != states {
            return fail(format!(
                "{} arrival subsets for {states} states",
                per_state.len()
            ));
        }
        if initial_state >= states {
            return fail(format!("initial state {initial_state} out of range"));
        }
        for (i, row) in transition.iter().enumerate() {
            if row.len() != states {
                return fail(format!("transition row {i} has {} entries", row.len()));
            }
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return fail(format!("transition row {i} has negative entries"));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return fail(format!("transition row {i} sums to {sum}"));
            }
        }
        let cumulative = transition
            .iter()
            .map(|row| {
                let mut acc = 0.0;
                row.iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            transition,
            cumulative,
            per_state,
            state: initial_state,
        })
    }

    pub fn states(&self) -> usize {
        self.transition.len()
    }
}

impl ArrivalGenerator for MarkovArrivals {
    fn next_arrivals(&mut self, _frame: u64, rng: &mut SimRng) -> TaskSet {
        let arrivals = self.per_state[self.state].clone();
        self.state = rng.categorical(&self.cumulative[self.state]);
        arrivals
    }
}

// ── Observation ───────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq)]
pub enum FrameEventKind {
    DecisionPoint,
    Completion(TaskId),
    FrameEnd,
}

/// Timestamped within-frame event; per frame, times are nondecreasing
/// and `FrameEnd` is last.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameEvent {
    pub time: f64,
    pub kind: FrameEventKind,
}

/// Hooks into a run. Observers see hidden processing times (they are
/// harness instrumentation, not schedulers); policies never do.
pub trait RunObserver {
    fn frame_begin(&mut self, _frame: u64, _arrivals: &TaskSet, _required: &BTreeMap<TaskId, f64>) {
    }
    fn event(&mut self, _frame: u64, _event: &FrameEvent) {}
    /// A maximal interval during which `active` ran uninterrupted.
    fn span(&mut self, _frame: u64, _start: f64, _duration: f64, _active: &TaskSet) {}
    fn frame_complete(
        &mut self,
        _frame: u64,
        _completed: &TaskSet,
        _service: &BTreeMap<TaskId, f64>,
        _idle: f64,
    ) {
    }
}

pub struct NoObserver;

impl RunObserver for NoObserver {}

// ── Metrics ───────────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq)]
pub struct TaskMetrics {
    pub task: TaskId,
    /// Σ g_n(k): frames in which the task generated a job.
    pub arrivals: u64,
    /// Σ e_n(k): on-time completions.
    pub completions: u64,
    /// Σ γ_n(k): total service time received.
    pub service: f64,
    /// q̂_n = completions / frames.
    pub throughput: f64,
    /// Batch-means standard error of q̂_n.
    pub throughput_std_error: f64,
    /// ŵ_n = service / frames.
    pub service_rate: f64,
    /// Per-batch means of e_n, γ_n, g_n (full batches only).
    pub completion_batches: Vec<f64>,
    pub service_batches: Vec<f64>,
    pub arrival_batches: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub frames: u64,
    pub seed: u64,
    pub policy: String,
    /// SHA-256 over the canonical spec, policy name, frames, and seed;
    /// identical digests identify regenerable reports.
    pub config_digest: String,
    pub total_idle: f64,
    pub idle_mean: f64,
    pub idle_std_error: f64,
    pub idle_batches: Vec<f64>,
    /// Ascending task id.
    pub tasks: Vec<TaskMetrics>,
}

impl RunMetrics {
    pub fn task(&self, id: TaskId) -> Option<&TaskMetrics> {
        self.tasks.iter().find(|t| t.task == id)
    }

    /// Empirical gap q̂_n − λ_n·ŵ_n with its batch-means standard error.
    /// Memorylessness makes the gap mean-zero for any non-clairvoyant
    /// policy.
    pub fn completion_service_gap(&self, id: TaskId, rate: f64) -> Option<(f64, f64)> {
        let task = self.task(id)?;
        let gap = task.throughput - rate * task.service_rate;
        let batches: Vec<f64> = task
            .completion_batches
            .iter()
            .zip(&task.service_batches)
            .map(|(c, s)| c - rate * s)
            .collect();
        Some((gap, batch_std_error(&batches)))
    }
}

struct TaskAccumulator {
    arrivals: u64,
    completions: u64,
    service: f64,
    completion_batches: BatchMeans,
    service_batches: BatchMeans,
    arrival_batches: BatchMeans,
}

struct Accumulator {
    frames_done: u64,
    total_idle: f64,
    idle_batches: BatchMeans,
    tasks: BTreeMap<TaskId, TaskAccumulator>,
}

impl Accumulator {
    fn new(ids: &[TaskId], frames: u64) -> Self {
        Self {
            frames_done: 0,
            total_idle: 0.0,
            idle_batches: BatchMeans::new(frames, BATCHES),
            tasks: ids
                .iter()
                .map(|&id| {
                    (
                        id,
                        TaskAccumulator {
                            arrivals: 0,
                            completions: 0,
                            service: 0.0,
                            completion_batches: BatchMeans::new(frames, BATCHES),
                            service_batches: BatchMeans::new(frames, BATCHES),
                            arrival_batches: BatchMeans::new(frames, BATCHES),
                        },
                    )
                })
                .collect(),
        }
    }

    fn record_frame(
        &mut self,
        arrivals: &TaskSet,
        completed: &TaskSet,
        service: &BTreeMap<TaskId, f64>,
        idle: f64,
    ) {
        self.frames_done += 1;
        self.total_idle += idle;
        self.idle_batches.push(idle);
        for (&id, acc) in &mut self.tasks {
            let arrived = arrivals.contains(&id);
            let done = completed.contains(&id);
            let gamma = service.get(&id).copied().unwrap_or(0.0);
            acc.arrivals += arrived as u64;
            acc.completions += done as u64;
            acc.service += gamma;
            acc.completion_batches.push(done as u64 as f64);
            acc.service_batches.push(gamma);
            acc.arrival_batches.push(arrived as u64 as f64);
        }
    }

    fn finish(self, seed: u64, policy: String, config_digest: String) -> RunMetrics {
        let frames = self.frames_done;
        let tasks = self
            .tasks
            .into_iter()
            .map(|(id, acc)| TaskMetrics {
                task: id,
                arrivals: acc.arrivals,
                completions: acc.completions,
                service: acc.service,
                throughput: acc.completions as f64 / frames as f64,
                throughput_std_error: acc.completion_batches.std_error(),
                service_rate: acc.service / frames as f64,
                completion_batches: acc.completion_batches.batch_means().to_vec(),
                service_batches: acc.service_batches.batch_means().to_vec(),
                arrival_batches: acc.arrival_batches.batch_means().to_vec(),
            })
            .collect();
        RunMetrics {
            frames,
            seed,
            policy,
            config_digest,
            total_idle: self.total_idle,
            idle_mean: self.total_idle / frames as f64,
            idle_std_error: self.idle_batches.std_error(),
            idle_batches: self.idle_batches.batch_means().to_vec(),
            tasks,
        }
    }
}

/// SHA-256 digest identifying a run configuration. Reports carrying the
/// same digest and seed regenerate byte-identically.
pub fn config_digest(spec: &SystemSpec, policy: &str, frames: u64, seed: u64) -> String {
    let mut hasher = Sha256::new();
    hasher.update(spec.canonical_json().as_bytes());
    hasher.update(b"\n");
    hasher.update(policy.as_bytes());
    hasher.update(b"\n");
    hasher.update(frames.to_le_bytes());
    hasher.update(seed.to_le_bytes());
    hex::encode(hasher.finalize())
}

// ── Engine ────────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Fail with [`SimError::NonWorkConserving`] if the policy idles
    /// while jobs are pending.
    pub strict_work_conserving: bool,
}

/// Simulate `frames` frames with i.i.d. arrivals from the spec.
pub fn run(
    spec: &SystemSpec,
    policy: &mut dyn Policy,
    frames: u64,
    seed: u64,
) -> Result<RunMetrics, SimError> {
    run_with(
        spec,
        policy,
        frames,
        seed,
        RunOptions::default(),
        &mut NoObserver,
    )
}

/// [`run`] with options and an observer.
pub fn run_with(
    spec: &SystemSpec,
    policy: &mut dyn Policy,
    frames: u64,
    seed: u64,
    options: RunOptions,
    observer: &mut dyn RunObserver,
) -> Result<RunMetrics, SimError> {
    let mut generator = IidArrivals::new(spec);
    run_with_generator(spec, policy, &mut generator, frames, seed, options, observer)
}

/// [`run`] with an arbitrary arrival generator (e.g. Markov-modulated).
pub fn run_with_generator(
    spec: &SystemSpec,
    policy: &mut dyn Policy,
    generator: &mut dyn ArrivalGenerator,
    frames: u64,
    seed: u64,
    options: RunOptions,
    observer: &mut dyn RunObserver,
) -> Result<RunMetrics, SimError> {
    spec.validate().map_err(SimError::InvalidSpec)?;
    assert!(frames >= 1, "need at least one frame");
    let t = spec.frame_length;
    let ids = spec.task_ids();
    let rates: BTreeMap<TaskId, f64> = spec.tasks.iter().map(|task| (task.id, task.rate)).collect();
    let footprints: BTreeMap<TaskId, &std::collections::BTreeSet<String>> = spec
        .tasks
        .iter()
        .map(|task| (task.id, &task.resources))
        .collect();

    // Draw stream and policy stream are split so that policy randomness
    // cannot perturb the sampled workload.
    let mut rng_draws = SimRng::new(split(seed, 0));
    let mut rng_policy = SimRng::new(split(seed, 1));
    let mut acc = Accumulator::new(&ids, frames);

    for frame in 1..=frames {
        let arrivals = generator.next_arrivals(frame, &mut rng_draws);
        let required: BTreeMap<TaskId, f64> = arrivals
            .iter()
            .map(|&id| (id, rng_draws.exp(rates[&id])))
            .collect();
        observer.frame_begin(frame, &arrivals, &required);

        let mut jobs: BTreeMap<TaskId, Job> = required
            .iter()
            .map(|(&id, &need)| (id, Job::new(id, frame, need)))
            .collect();
        let mut pending: TaskSet = arrivals.clone();
        let mut completed = TaskSet::new();
        let mut service: BTreeMap<TaskId, f64> = BTreeMap::new();
        let mut elapsed = 0.0;
        let mut busy = 0.0;

        let view = FrameView::new(frame, t, elapsed, &arrivals, &pending, &completed);
        policy.frame_start(&view, &mut rng_policy);

        while elapsed < t && !pending.is_empty() {
            let view = FrameView::new(frame, t, elapsed, &arrivals, &pending, &completed);
            observer.event(
                frame,
                &FrameEvent {
                    time: elapsed,
                    kind: FrameEventKind::DecisionPoint,
                },
            );
            let decision = policy.select(&view);
            validate_decision(&decision.active, &pending, &footprints, frame, elapsed)?;
            if decision.active.is_empty() {
                if options.strict_work_conserving {
                    return Err(SimError::NonWorkConserving { frame, elapsed });
                }
                break;
            }

            let nearest_completion = decision
                .active
                .iter()
                .map(|id| jobs[id].remaining_time)
                .fold(f64::INFINITY, f64::min);
            let time_left = t - elapsed;
            let dt = nearest_completion.min(time_left);
            for id in &decision.active {
                jobs.get_mut(id).expect("active ⊆ pending").remaining_time -= dt;
                *service.entry(*id).or_insert(0.0) += dt;
            }
            busy += dt;
            observer.span(frame, elapsed, dt, &decision.active);
            if nearest_completion < time_left {
                elapsed += dt;
            } else {
                elapsed = t;
            }

            for id in decision.active.iter().copied().collect::<Vec<_>>() {
                if jobs[&id].remaining_time <= 0.0 {
                    pending.remove(&id);
                    completed.insert(id);
                    observer.event(
                        frame,
                        &FrameEvent {
                            time: elapsed,
                            kind: FrameEventKind::Completion(id),
                        },
                    );
                }
            }
        }

        let idle = t - busy;
        observer.event(
            frame,
            &FrameEvent {
                time: t,
                kind: FrameEventKind::FrameEnd,
            },
        );
        policy.frame_end(&service)?;
        acc.record_frame(&arrivals, &completed, &service, idle);
        observer.frame_complete(frame, &completed, &service, idle);
    }

    let digest = config_digest(spec, policy.name(), frames, seed);
    Ok(acc.finish(seed, policy.name().to_string(), digest))
}

use crate::policy::FrameView;

impl<'a> FrameView<'a> {
    fn new(
        frame: u64,
        frame_length: f64,
        elapsed: f64,
        arrivals: &'a TaskSet,
        pending: &'a TaskSet,
        completed: &'a TaskSet,
    ) -> Self {
        Self {
            frame,
            frame_length,
            elapsed,
            arrivals,
            pending,
            completed,
        }
    }
}

fn validate_decision(
    active: &TaskSet,
    pending: &TaskSet,
    footprints: &BTreeMap<TaskId, &std::collections::BTreeSet<String>>,
    frame: u64,
    elapsed: f64,
) -> Result<(), SimError> {
    let conflict = |detail: String| SimError::PolicyConflict {
        frame,
        elapsed,
        detail,
    };
    let mut used: std::collections::BTreeSet<&String> = std::collections::BTreeSet::new();
    for id in active {
        if !pending.contains(id) {
            return Err(conflict(format!("task {id} has no pending job")));
        }
        for resource in footprints[id].iter() {
            if !used.insert(resource) {
                return Err(conflict(format!(
                    "resource {resource:?} assigned to two tasks"
                )));
            }
        }
    }
    Ok(())
}

// ── Replication ───────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq)]
pub struct TaskAggregate {
    pub task: TaskId,
    /// Mean over replications of q̂_n.
    pub throughput: f64,
    /// Standard error across replications.
    pub throughput_std_error: f64,
    pub service_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationAggregate {
    pub replications: u64,
    pub idle_mean: f64,
    pub idle_std_error: f64,
    pub tasks: Vec<TaskAggregate>,
}

/// Independent replications with seeds `split(base_seed, i)`, folded in
/// replication order.
pub fn replicate(
    spec: &SystemSpec,
    mut fresh_policy: impl FnMut(&SystemSpec) -> Result<Box<dyn Policy>, PolicyError>,
    frames: u64,
    base_seed: u64,
    replications: u64,
) -> Result<(Vec<RunMetrics>, ReplicationAggregate), SimError> {
    assert!(replications >= 1, "need at least one replication");
    let mut runs = Vec::with_capacity(replications as usize);
    for index in 0..replications {
        let mut policy = fresh_policy(spec)?;
        runs.push(run(spec, policy.as_mut(), frames, split(base_seed, index))?);
    }

    let ids: Vec<TaskId> = runs[0].tasks.iter().map(|t| t.task).collect();
    let tasks = ids
        .iter()
        .map(|&id| {
            let throughputs: Vec<f64> = runs
                .iter()
                .map(|r| r.task(id).expect("same spec").throughput)
                .collect();
            let service_rates: Vec<f64> = runs
                .iter()
                .map(|r| r.task(id).expect("same spec").service_rate)
                .collect();
            let (throughput, throughput_std_error) = replication_summary(&throughputs);
            let (service_rate, _) = replication_summary(&service_rates);
            TaskAggregate {
                task: id,
                throughput,
                throughput_std_error,
                service_rate,
            }
        })
        .collect();
    let idles: Vec<f64> = runs.iter().map(|r| r.idle_mean).collect();
    let (idle_mean, idle_std_error) = replication_summary(&idles);
    Ok((
        runs,
        ReplicationAggregate {
            replications,
            idle_mean,
            idle_std_error,
            tasks,
        },
    ))
}

// ── Coupled two-resource / reduced run ────────────────────────────────

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledMetrics {
    pub two_resource: RunMetrics,
    /// Metrics of the reduced single-resource trajectory derived from the
    /// same draws via the schedule correspondence.
    pub reduced: RunMetrics,
    /// Spans whose active set corresponds to no reduced schedule. Zero
    /// for any policy that never splits the pending pair.
    pub correspondence_violations: u64,
    /// Empirical mean of min(t₁,t₂); the reduced c* rate predicts
    /// 1/(λ₁+λ₂).
    pub pair_min_mean: f64,
    pub pair_min_std_error: f64,
    /// Fraction of frames with t₁ > t₂. For independent exponentials
    /// this converges to λ₂/(λ₁+λ₂); the reduced construction assigns
    /// 1* the arrival probability λ₁/(λ₁+λ₂), so the two agree only for
    /// λ₁ = λ₂. The acceptance suite documents the discrepancy.
    pub one_outlasts_frequency: f64,
    pub one_outlasts_std_error: f64,
}

struct CoupledObserver<'a> {
    reduced: &'a ReducedSystem,
    acc: Accumulator,
    pair_min: SampleStats,
    one_outlasts: SampleStats,
    violations: u64,
    // Per-frame state.
    frame_required: BTreeMap<TaskId, f64>,
    frame_completed: TaskSet,
    reduced_service: BTreeMap<TaskId, f64>,
    reduced_arrivals: TaskSet,
    survivor: TaskId,
}

impl<'a> CoupledObserver<'a> {
    fn new(reduced: &'a ReducedSystem, frames: u64) -> Self {
        let ids = reduced.spec.task_ids();
        Self {
            reduced,
            acc: Accumulator::new(&ids, frames),
            pair_min: SampleStats::default(),
            one_outlasts: SampleStats::default(),
            violations: 0,
            frame_required: BTreeMap::new(),
            frame_completed: TaskSet::new(),
            reduced_service: BTreeMap::new(),
            reduced_arrivals: TaskSet::new(),
            survivor: TaskId(0),
        }
    }

    /// The reduced task a two-resource active set stands for.
    fn reduced_choice(&self, active: &TaskSet) -> Option<TaskId> {
        let r = self.reduced;
        let one = r.one_star;
        let two = r.two_star;
        if active.len() == 2 && active.contains(&one) && active.contains(&two) {
            return Some(r.c_star);
        }
        if active.len() != 1 {
            return None;
        }
        let only = *active.first().expect("singleton");
        if only == one {
            Some(one)
        } else if only == two {
            Some(two)
        } else {
            Some(only)
        }
    }
}

impl RunObserver for CoupledObserver<'_> {
    fn frame_begin(&mut self, _frame: u64, _arrivals: &TaskSet, required: &BTreeMap<TaskId, f64>) {
        let r = self.reduced;
        let t1 = required[&r.one_star];
        let t2 = required[&r.two_star];
        self.pair_min.push(t1.min(t2));
        self.one_outlasts.push((t1 > t2) as u64 as f64);
        self.survivor = if t1 > t2 { r.one_star } else { r.two_star };

        self.frame_required = required.clone();
        self.frame_completed.clear();
        self.reduced_service.clear();
        self.reduced_arrivals = r
            .task_map
            .keys()
            .copied()
            .filter(|&id| id != r.one_star && id != r.two_star)
            .chain([self.survivor])
            .collect();
    }

    fn event(&mut self, _frame: u64, event: &FrameEvent) {
        if let FrameEventKind::Completion(task) = event.kind {
            self.frame_completed.insert(task);
        }
    }

    fn span(&mut self, _frame: u64, _start: f64, duration: f64, active: &TaskSet) {
        let Some(choice) = self.reduced_choice(active) else {
            self.violations += 1;
            return;
        };
        match self
            .reduced
            .decision_correspondence(choice, &self.frame_completed)
        {
            Ok(corresponding) if corresponding == *active => {
                *self.reduced_service.entry(choice).or_insert(0.0) += duration;
            }
            _ => self.violations += 1,
        }
    }

    fn frame_complete(
        &mut self,
        _frame: u64,
        completed: &TaskSet,
        _service: &BTreeMap<TaskId, f64>,
        idle: f64,
    ) {
        let r = self.reduced;
        let mut reduced_completed = TaskSet::new();
        if completed.contains(&r.one_star) || completed.contains(&r.two_star) {
            reduced_completed.insert(r.c_star);
        }
        if completed.contains(&self.survivor) {
            reduced_completed.insert(self.survivor);
        }
        for id in completed {
            if *id != r.one_star && *id != r.two_star {
                reduced_completed.insert(*id);
            }
        }
        let arrivals = std::mem::take(&mut self.reduced_arrivals);
        let service = std::mem::take(&mut self.reduced_service);
        self.acc.record_frame(&arrivals, &reduced_completed, &service, idle);
    }
}

/// Run a policy on the two-resource system while deriving the reduced
/// system's trajectory from the same draws: the c* job is min(t₁,t₂),
/// the survivor's residual becomes the 1*/2* arrival, c-type jobs carry
/// over, and every span maps through the schedule correspondence.
pub fn coupled_run(
    spec: &SystemSpec,
    reduced: &ReducedSystem,
    policy: &mut dyn Policy,
    frames: u64,
    seed: u64,
) -> Result<CoupledMetrics, SimError> {
    let rebuilt = crate::reduction::reduce(spec)
        .map_err(|e| SimError::CoupledSetup(e.to_string()))?;
    if rebuilt != *reduced {
        return Err(SimError::CoupledSetup(
            "reduced system was not derived from this spec".to_string(),
        ));
    }
    let mut observer = CoupledObserver::new(reduced, frames);
    let two_resource = run_with(
        spec,
        policy,
        frames,
        seed,
        RunOptions::default(),
        &mut observer,
    )?;
    let reduced_digest = config_digest(
        &reduced.spec,
        &format!("{}+coupled", two_resource.policy),
        frames,
        seed,
    );
    let reduced_metrics = observer.acc.finish(
        seed,
        format!("{}+coupled", two_resource.policy),
        reduced_digest,
    );
    Ok(CoupledMetrics {
        two_resource,
        reduced: reduced_metrics,
        correspondence_violations: observer.violations,
        pair_min_mean: observer.pair_min.mean(),
        pair_min_std_error: observer.pair_min.std_error(),
        one_outlasts_frequency: observer.one_outlasts.mean(),
        one_outlasts_std_error: observer.one_outlasts.std_error(),
    })
}
