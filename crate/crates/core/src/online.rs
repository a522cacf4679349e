//! Discrete-time online simulation.
//!
//! The engine owns the clock, the machine and every irreversible decision. A
//! [`Policy`] only sees a [`PolicyObservation`] at each integer time step and
//! answers [`PolicyAction::Wait`] or [`PolicyAction::ReplenishAndFlush`]; the
//! latter replenishes at `now` and starts every pending job back-to-back in
//! release order. After a flush the clock jumps over the block just scheduled;
//! jobs released meanwhile are delivered at the next observation.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{evaluate, Cost, CostBreakdown, Instance, ModelError, Solution, Time};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("policy {policy} flushed at t={now} with no pending jobs")]
    EmptyFlush { policy: String, now: Time },
    #[error("release {release} does not follow {previous}")]
    NonIncreasingRelease { release: Time, previous: Time },
    #[error("release {release} delivered at t={now} is in the future")]
    FutureRelease { release: Time, now: Time },
    #[error("release source ended without announcing the last job")]
    UnterminatedStream,
    #[error("no decision for {steps} steps while jobs were pending (t={now})")]
    Diverged { steps: Time, now: Time },
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;

/// What a policy sees at one decision point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyObservation {
    pub now: Time,
    pub k: Cost,
    /// Released but unscheduled jobs as `(job index, release)`, release order.
    pub pending: Vec<(usize, Time)>,
    pub machine_free_at: Time,
    pub last_job_announced: bool,
    pub f_max_so_far: Time,
    pub repl_count_so_far: usize,
}

impl PolicyObservation {
    /// Maximum flow time of the pending jobs if flushed now.
    pub fn pending_fmax(&self) -> Time {
        pending_fmax(self.pending.iter().map(|&(_, r)| r), self.now, self.machine_free_at)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyAction {
    Wait,
    ReplenishAndFlush,
}

impl PolicyAction {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyAction::Wait => "wait",
            PolicyAction::ReplenishAndFlush => "replenish",
        }
    }
}

/// Maximum flow time of jobs with the given (sorted) releases if they run
/// back-to-back from `max(t, machine_free_at)`. Zero when there are none.
pub fn pending_fmax(releases: impl IntoIterator<Item = Time>, t: Time, machine_free_at: Time) -> Time {
    let start = t.max(machine_free_at);
    releases
        .into_iter()
        .enumerate()
        .map(|(k, r)| start + k as Time + 1 - r)
        .max()
        .unwrap_or(0)
}

pub trait Policy {
    fn name(&self) -> &str;

    fn decide(&mut self, obs: &PolicyObservation) -> PolicyAction;

    /// Earliest time `>= obs.now` at which the policy could act if no new job
    /// arrives, or `None` if unknown. Only consulted when idle skipping is on.
    fn next_decision_hint(&self, _obs: &PolicyObservation) -> Option<Time> {
        None
    }
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn decide(&mut self, obs: &PolicyObservation) -> PolicyAction {
        (**self).decide(obs)
    }
    fn next_decision_hint(&self, obs: &PolicyObservation) -> Option<Time> {
        (**self).next_decision_hint(obs)
    }
}

/// Threshold policy: replenish and flush exactly when the pending maximum
/// flow time reaches the current maximum flow time plus `K`.
#[derive(Debug, Clone)]
pub struct Algorithm1 {
    k: Cost,
    f_max: Time,
    flush_on_last: bool,
}

impl Algorithm1 {
    pub fn new(k: Cost) -> Self {
        Algorithm1 {
            k,
            f_max: 0,
            flush_on_last: false,
        }
    }

    /// Variant that also flushes as soon as the last job has been announced.
    pub fn flush_on_last(k: Cost) -> Self {
        Algorithm1 {
            flush_on_last: true,
            ..Algorithm1::new(k)
        }
    }

    pub fn threshold(&self) -> Time {
        self.f_max + self.k
    }
}

/// Constructor matching the policy registry.
pub fn algorithm1_policy(k: Cost) -> Algorithm1 {
    Algorithm1::new(k)
}

impl Policy for Algorithm1 {
    fn name(&self) -> &str {
        if self.flush_on_last {
            "flush_on_last"
        } else {
            "algorithm1"
        }
    }

    fn decide(&mut self, obs: &PolicyObservation) -> PolicyAction {
        if obs.pending.is_empty() {
            return PolicyAction::Wait;
        }
        // With integral data the pending maximum grows by one per step, so
        // `>=` fires at equality.
        if obs.pending_fmax() >= self.threshold() {
            self.f_max += self.k;
            return PolicyAction::ReplenishAndFlush;
        }
        if self.flush_on_last && obs.last_job_announced {
            self.f_max = self.f_max.max(obs.pending_fmax());
            return PolicyAction::ReplenishAndFlush;
        }
        PolicyAction::Wait
    }

    fn next_decision_hint(&self, obs: &PolicyObservation) -> Option<Time> {
        if obs.pending.is_empty() {
            return Some(Time::MAX);
        }
        if self.flush_on_last && obs.last_job_announced {
            return Some(obs.now);
        }
        let gap = self.threshold() - obs.pending_fmax();
        let base = obs.now.max(obs.machine_free_at);
        Some(if gap <= 0 { obs.now } else { base + gap })
    }
}

/// Baseline that replenishes as soon as anything is pending.
#[derive(Debug, Clone, Default)]
pub struct Immediate;

impl Policy for Immediate {
    fn name(&self) -> &str {
        "immediate"
    }

    fn decide(&mut self, obs: &PolicyObservation) -> PolicyAction {
        if obs.pending.is_empty() {
            PolicyAction::Wait
        } else {
            PolicyAction::ReplenishAndFlush
        }
    }

    fn next_decision_hint(&self, obs: &PolicyObservation) -> Option<Time> {
        Some(if obs.pending.is_empty() { Time::MAX } else { obs.now })
    }
}

pub const POLICY_NAMES: [&str; 3] = ["algorithm1", "flush_on_last", "immediate"];

/// Builds a shipped policy by name.
pub fn policy_by_name(name: &str, k: Cost) -> Option<Box<dyn Policy + Send>> {
    match name {
        "algorithm1" => Some(Box::new(Algorithm1::new(k))),
        "flush_on_last" => Some(Box::new(Algorithm1::flush_on_last(k))),
        "immediate" => Some(Box::new(Immediate)),
        _ => None,
    }
}

/// A job handed to the engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arrival {
    pub release: Time,
    /// No job follows this one.
    pub last: bool,
}

/// Read-only view of the decisions made so far.
#[derive(Debug, Clone, Copy)]
pub struct ScheduleView<'a> {
    pub now: Time,
    /// Start time per delivered job, `None` while pending.
    pub starts: &'a [Option<Time>],
    pub replenishments: &'a [Time],
}

pub trait ReleaseSource {
    /// Every not yet delivered job whose release is `<= now`, in order.
    fn poll(&mut self, view: &ScheduleView<'_>) -> Vec<Arrival>;

    /// Whether the last job has been delivered.
    fn exhausted(&self) -> bool;

    /// Next release time if it is already determined.
    fn next_release(&self) -> Option<Time> {
        None
    }
}

/// Replays a fixed, strictly increasing release list; announces the final
/// job when it is delivered.
#[derive(Debug, Clone)]
pub struct StaticReleases {
    releases: Vec<Time>,
    next: usize,
}

impl StaticReleases {
    pub fn new(releases: Vec<Time>) -> Self {
        StaticReleases { releases, next: 0 }
    }
}

impl From<&Instance> for StaticReleases {
    fn from(inst: &Instance) -> Self {
        StaticReleases::new(inst.releases().to_vec())
    }
}

impl ReleaseSource for StaticReleases {
    fn poll(&mut self, view: &ScheduleView<'_>) -> Vec<Arrival> {
        let mut out = Vec::new();
        while self.next < self.releases.len() && self.releases[self.next] <= view.now {
            self.next += 1;
            out.push(Arrival {
                release: self.releases[self.next - 1],
                last: self.next == self.releases.len(),
            });
        }
        out
    }

    fn exhausted(&self) -> bool {
        self.next >= self.releases.len()
    }

    fn next_release(&self) -> Option<Time> {
        self.releases.get(self.next).copied()
    }
}

/// One observed decision point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub time: Time,
    pub action: PolicyAction,
    /// Pending jobs when the decision was made.
    pub pending: usize,
    /// What flushing would have cost in flow time at this step.
    pub pending_fmax: Time,
    /// Maximum flow time of all scheduled jobs after the action.
    pub f_max_after: Time,
}

impl fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "t={} action={} pending={} fmax={}",
            self.time,
            self.action.as_str(),
            self.pending,
            self.f_max_after
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub entries: Vec<TraceEntry>,
    pub solution: Solution,
}

impl Trace {
    /// Line-oriented log, one entry per line.
    pub fn to_log(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            s.push_str(&e.to_string());
            s.push('\n');
        }
        s
    }

    pub fn replenishments(&self) -> impl Iterator<Item = &TraceEntry> {
        self.entries
            .iter()
            .filter(|e| e.action == PolicyAction::ReplenishAndFlush)
    }
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub instance: Instance,
    pub solution: Solution,
    pub trace: Trace,
    pub cost: CostBreakdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SimOptions {
    /// Abort after this many consecutive waits while jobs are pending.
    pub idle_limit: Option<Time>,
    /// Jump straight to the next time something can change, using
    /// [`ReleaseSource::next_release`] and [`Policy::next_decision_hint`].
    /// Skipped waits are not traced; the schedule is unchanged.
    pub skip_idle: bool,
}

/// Runs `policy` against `source` until the last job is scheduled.
pub fn simulate(
    source: &mut dyn ReleaseSource,
    policy: &mut dyn Policy,
    k: Cost,
    options: SimOptions,
) -> Result<SimOutcome> {
    let mut now: Time = 0;
    let mut releases: Vec<Time> = Vec::new();
    let mut starts: Vec<Option<Time>> = Vec::new();
    let mut replenishments: Vec<Time> = Vec::new();
    let mut pending: Vec<(usize, Time)> = Vec::new();
    let mut entries = Vec::new();
    let mut free: Time = 0;
    let mut f_max: Time = 0;
    let mut announced = false;
    let mut idle: Time = 0;

    loop {
        let view = ScheduleView {
            now,
            starts: &starts,
            replenishments: &replenishments,
        };
        for a in source.poll(&view) {
            if a.release > now {
                return Err(SimError::FutureRelease {
                    release: a.release,
                    now,
                });
            }
            if let Some(&previous) = releases.last() {
                if a.release <= previous {
                    return Err(SimError::NonIncreasingRelease {
                        release: a.release,
                        previous,
                    });
                }
            }
            pending.push((releases.len(), a.release));
            releases.push(a.release);
            starts.push(None);
            announced |= a.last;
        }
        if announced && pending.is_empty() {
            break;
        }
        if source.exhausted() && !announced {
            return Err(SimError::UnterminatedStream);
        }

        let obs = PolicyObservation {
            now,
            k,
            pending: pending.clone(),
            machine_free_at: free,
            last_job_announced: announced,
            f_max_so_far: f_max,
            repl_count_so_far: replenishments.len(),
        };
        let fu = obs.pending_fmax();
        match policy.decide(&obs) {
            PolicyAction::Wait => {
                entries.push(TraceEntry {
                    time: now,
                    action: PolicyAction::Wait,
                    pending: pending.len(),
                    pending_fmax: fu,
                    f_max_after: f_max,
                });
                let mut next = now + 1;
                if options.skip_idle {
                    let hint = policy.next_decision_hint(&obs).unwrap_or(next);
                    let arrival = if announced {
                        Time::MAX
                    } else {
                        source.next_release().unwrap_or(next)
                    };
                    next = next.max(hint.min(arrival));
                }
                if pending.is_empty() {
                    idle = 0;
                } else {
                    idle += next - now;
                    if let Some(limit) = options.idle_limit {
                        if idle > limit {
                            return Err(SimError::Diverged { steps: idle, now });
                        }
                    }
                }
                now = next;
            }
            PolicyAction::ReplenishAndFlush => {
                if pending.is_empty() {
                    return Err(SimError::EmptyFlush {
                        policy: policy.name().to_string(),
                        now,
                    });
                }
                idle = 0;
                replenishments.push(now);
                let mut start = now.max(free);
                for &(job, r) in &pending {
                    starts[job] = Some(start);
                    f_max = f_max.max(start + 1 - r);
                    start += 1;
                }
                free = start;
                let block = pending.len() as Time;
                entries.push(TraceEntry {
                    time: now,
                    action: PolicyAction::ReplenishAndFlush,
                    pending: pending.len(),
                    pending_fmax: fu,
                    f_max_after: f_max,
                });
                pending.clear();
                now += block;
            }
        }
    }

    let instance = Instance::new(releases, k)?;
    let solution = Solution {
        starts: starts.into_iter().map(|s| s.expect("all scheduled")).collect(),
        replenishments,
    };
    let cost = evaluate(&instance, &solution)?;
    Ok(SimOutcome {
        instance,
        trace: Trace {
            entries,
            solution: solution.clone(),
        },
        solution,
        cost,
    })
}

/// Simulates `policy` on a fixed instance.
pub fn simulate_instance(inst: &Instance, policy: &mut dyn Policy, options: SimOptions) -> Result<SimOutcome> {
    simulate(&mut StaticReleases::from(inst), policy, inst.k(), options)
}

/// Simulates the threshold policy on a fixed instance.
pub fn run_algorithm1(inst: &Instance, options: SimOptions) -> Result<SimOutcome> {
    simulate_instance(inst, &mut Algorithm1::new(inst.k()), options)
}

/// A property of a threshold-policy run that did not hold. Indices `i` count
/// replenishments from 1.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceViolation {
    #[error("replenishment {i}: cost {cost}, expected {expected}")]
    Cost { i: usize, cost: Cost, expected: Cost },
    #[error("replenishment {i}: F_max {f_max}, expected {expected}")]
    Fmax { i: usize, f_max: Time, expected: Time },
    #[error("replenishment {i}: fired with pending F_max {pending_fmax} != threshold {threshold}")]
    Overshoot {
        i: usize,
        pending_fmax: Time,
        threshold: Time,
    },
    #[error("first replenishment at {time}, expected {expected}")]
    FirstTrigger { time: Time, expected: Time },
    #[error("replenishment {i}: gap {gap} below {bound}")]
    GapBelowBound { i: usize, gap: Time, bound: Time },
    #[error("block {i} ends at {finish} after the next replenishment at {next}")]
    BlockOverrun { i: usize, finish: Time, next: Time },
    #[error("replenishment {i}: gap {gap} not above the previous gap {previous}")]
    GapNotIncreasing { i: usize, previous: Time, gap: Time },
}

/// Checks a plain threshold-policy run replenishment by replenishment: cost `2Ki`
/// and F_max `Ki` after the i-th, firing exactly at the threshold, the first
/// firing at `r_1 + K - 1`, gaps `tau_i - tau_{i-1} >= Ki` for `i >= 2`,
/// every block done by the next replenishment, and strictly growing gaps.
pub fn audit_algorithm1(out: &SimOutcome) -> Vec<TraceViolation> {
    let k = out.instance.k();
    let reps: Vec<&TraceEntry> = out.trace.replenishments().collect();
    let mut v = Vec::new();
    if let Some(first) = reps.first() {
        let expected = out.instance.first_release() + k - 1;
        if first.time != expected {
            v.push(TraceViolation::FirstTrigger {
                time: first.time,
                expected,
            });
        }
    }
    for (idx, e) in reps.iter().enumerate() {
        let i = idx + 1;
        let ki = k * i as Time;
        if e.pending_fmax != ki {
            v.push(TraceViolation::Overshoot {
                i,
                pending_fmax: e.pending_fmax,
                threshold: ki,
            });
        }
        if e.f_max_after != ki {
            v.push(TraceViolation::Fmax {
                i,
                f_max: e.f_max_after,
                expected: ki,
            });
        }
        let cost = ki + e.f_max_after;
        if cost != 2 * ki {
            v.push(TraceViolation::Cost {
                i,
                cost,
                expected: 2 * ki,
            });
        }
        if let Some(next) = reps.get(idx + 1) {
            let finish = e.time + e.pending as Time;
            if finish > next.time {
                v.push(TraceViolation::BlockOverrun {
                    i,
                    finish,
                    next: next.time,
                });
            }
        }
        if idx >= 1 {
            let gap = e.time - reps[idx - 1].time;
            if gap < ki {
                v.push(TraceViolation::GapBelowBound { i, gap, bound: ki });
            }
            if idx >= 2 {
                let previous = reps[idx - 1].time - reps[idx - 2].time;
                if gap <= previous {
                    v.push(TraceViolation::GapNotIncreasing { i, previous, gap });
                }
            }
        }
    }
    v
}
