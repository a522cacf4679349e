//! Adaptive lower-bound games.
//!
//! The adversary releases the first job at 0 and then waits for the policy to
//! start it; every further job is released one unit after the previous job was
//! started. The final job is announced as the last one. The resulting instance
//! is audited against the exact optimum (brute force) and against the closed
//! form obtained by listing every replenishment pattern.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Cost, Time};
use crate::offline::{brute_force_opt, SolverError};
use crate::online::{simulate, Arrival, Policy, ReleaseSource, ScheduleView, SimError, SimOptions, Trace};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("replenishment cost must be at least 1, got {0}")]
    InvalidCost(Cost),
    #[error("policy {policy} made no decision within {horizon} time units")]
    Diverged { policy: String, horizon: Time },
    #[error("closed-form optimum {formula} disagrees with brute force {oracle} on {releases:?}")]
    OracleMismatch {
        formula: Cost,
        oracle: Cost,
        releases: Vec<Time>,
    },
    #[error(transparent)]
    Sim(SimError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

impl From<SimError> for GameError {
    fn from(e: SimError) -> Self {
        GameError::Sim(e)
    }
}

pub type Result<T, E = GameError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Game {
    TwoJob,
    ThreeJob,
}

impl Game {
    pub fn jobs(self) -> usize {
        match self {
            Game::TwoJob => 2,
            Game::ThreeJob => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Game::TwoJob => "two_job",
            Game::ThreeJob => "three_job",
        }
    }
}

impl fmt::Display for Game {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Game {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "two_job" => Ok(Game::TwoJob),
            "three_job" => Ok(Game::ThreeJob),
            other => Err(format!("unknown game {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameReport {
    pub game: Game,
    pub policy: String,
    pub k: Cost,
    pub releases: Vec<Time>,
    /// Start time the policy chose for each job.
    pub starts: Vec<Time>,
    pub alg_cost: Cost,
    pub opt_cost: Cost,
    /// Optimum from the closed-form menu; always equal to `opt_cost`.
    pub formula_opt: Cost,
    pub ratio: f64,
    pub transcript: Vec<String>,
    pub trace: Trace,
}

impl GameReport {
    pub const CSV_HEADER: &'static str = "game,policy,K,releases,starts,alg_cost,opt_cost,formula_opt,ratio";

    pub fn csv_row(&self) -> String {
        let join = |v: &[Time]| v.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ");
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.game,
            self.policy,
            self.k,
            join(&self.releases),
            join(&self.starts),
            self.alg_cost,
            self.opt_cost,
            self.formula_opt,
            self.ratio
        )
    }
}

/// Optimum for releases `[0, t + 1]`: one replenishment at `t + 1`, or one at
/// each release.
pub fn two_job_formula_opt(k: Cost, t: Time) -> Cost {
    (2 * k + 1).min(k + t + 2)
}

/// Optimum for releases `[0, t1 + 1, t2 + 1]` with `t2 > t1 >= 0`.
///
/// Candidates by replenishment set: `{t2+1}`, `{t1+1, t2+1}`, `{0, t2+1}` and
/// all three releases. Serving the first two jobs from `t1 + 1` makes the first
/// job's flow time `t1 + 2`.
pub fn three_job_formula_opt(k: Cost, t1: Time, t2: Time) -> Cost {
    [k + t2 + 2, 2 * k + t1 + 2, 2 * k + (t2 - t1 + 1).max(2), 3 * k + 1]
        .into_iter()
        .min()
        .unwrap()
}

/// Default number of idle time units before a game is declared divergent.
pub fn default_horizon(k: Cost) -> Time {
    10 * k + 10
}

struct AdaptiveSource {
    jobs: usize,
    released: Vec<Time>,
    transcript: Vec<String>,
}

impl AdaptiveSource {
    fn new(jobs: usize) -> Self {
        AdaptiveSource {
            jobs,
            released: Vec::new(),
            transcript: Vec::new(),
        }
    }
}

impl ReleaseSource for AdaptiveSource {
    fn poll(&mut self, view: &ScheduleView<'_>) -> Vec<Arrival> {
        let mut out = Vec::new();
        while self.released.len() < self.jobs {
            let idx = self.released.len();
            let release = if idx == 0 {
                0
            } else {
                match view.starts.get(idx - 1).copied().flatten() {
                    Some(start) => start + 1,
                    None => break,
                }
            };
            if release > view.now {
                break;
            }
            let last = idx + 1 == self.jobs;
            if idx == 0 {
                self.transcript.push(format!("release job 1 at {release}"));
            } else {
                self.transcript.push(format!(
                    "job {idx} started at {}; release job {} at {release}{}",
                    release - 1,
                    idx + 1,
                    if last { " (last)" } else { "" }
                ));
            }
            self.released.push(release);
            out.push(Arrival { release, last });
        }
        out
    }

    fn exhausted(&self) -> bool {
        self.released.len() == self.jobs
    }
}

/// Plays `game` against `policy` with replenishment cost `k`.
pub fn play(game: Game, policy: &mut dyn Policy, k: Cost, horizon: Time) -> Result<GameReport> {
    if k < 1 {
        return Err(GameError::InvalidCost(k));
    }
    let mut source = AdaptiveSource::new(game.jobs());
    let options = SimOptions {
        idle_limit: Some(horizon),
        skip_idle: false,
    };
    let out = match simulate(&mut source, policy, k, options) {
        Ok(out) => out,
        Err(SimError::Diverged { .. }) => {
            return Err(GameError::Diverged {
                policy: policy.name().to_string(),
                horizon,
            })
        }
        Err(e) => return Err(e.into()),
    };

    let oracle = brute_force_opt(&out.instance)?.cost;
    let starts = out.solution.starts.clone();
    let formula = match game {
        Game::TwoJob => two_job_formula_opt(k, starts[0]),
        Game::ThreeJob => three_job_formula_opt(k, starts[0], starts[1]),
    };
    let releases = out.instance.releases().to_vec();
    if formula != oracle {
        return Err(GameError::OracleMismatch {
            formula,
            oracle,
            releases,
        });
    }
    let alg_cost = out.cost.total;
    let mut transcript = source.transcript;
    transcript.push(format!(
        "ALG = {alg_cost}, OPT = {oracle}, ratio = {}",
        alg_cost as f64 / oracle as f64
    ));
    Ok(GameReport {
        game,
        policy: policy.name().to_string(),
        k,
        releases,
        starts,
        alg_cost,
        opt_cost: oracle,
        formula_opt: formula,
        ratio: alg_cost as f64 / oracle as f64,
        transcript,
        trace: out.trace,
    })
}

/// Two jobs: the second arrives right after the policy starts the first.
pub fn two_job_game(policy: &mut dyn Policy, k: Cost) -> Result<GameReport> {
    play(Game::TwoJob, policy, k, default_horizon(k))
}

/// Three jobs, each released one unit after the previous one is started.
pub fn three_job_game(policy: &mut dyn Policy, k: Cost) -> Result<GameReport> {
    play(Game::ThreeJob, policy, k, default_horizon(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::online::{Algorithm1, Immediate, PolicyAction, PolicyObservation};

    #[test]
    fn two_job_vs_algorithm1_k2() {
        let r = two_job_game(&mut Algorithm1::new(2), 2).unwrap();
        assert_eq!(r.starts[0], 1);
        assert_eq!(r.releases, vec![0, 2]);
        assert_eq!(r.alg_cost, 8);
        assert_eq!(r.opt_cost, 5);
        assert_eq!(r.ratio, 1.6);
    }

    #[test]
    fn two_job_vs_flush_on_last() {
        for k in 1..30 {
            let r = two_job_game(&mut Algorithm1::flush_on_last(k), k).unwrap();
            let t = r.starts[0];
            assert_eq!(r.alg_cost, 2 * k + t + 1);
        }
    }

    #[test]
    fn three_job_vs_algorithm1_k2() {
        let r = three_job_game(&mut Algorithm1::new(2), 2).unwrap();
        assert_eq!(r.releases, vec![0, 2, 6]);
        assert_eq!(&r.starts[..2], &[1, 5]);
        assert_eq!(r.alg_cost, 12);
        assert_eq!(r.opt_cost, 7);
    }

    #[test]
    fn immediate_policy_games() {
        let r = two_job_game(&mut Immediate, 20).unwrap();
        assert_eq!(r.releases, vec![0, 1]);
        assert_eq!(r.alg_cost, 41);
        assert_eq!(r.opt_cost, 22);
        let r = three_job_game(&mut Immediate, 20).unwrap();
        assert_eq!(r.opt_cost, 23);
    }

    struct Never;
    impl Policy for Never {
        fn name(&self) -> &str {
            "never"
        }
        fn decide(&mut self, _: &PolicyObservation) -> PolicyAction {
            PolicyAction::Wait
        }
    }

    #[test]
    fn divergent_policy_is_reported() {
        let err = two_job_game(&mut Never, 3).unwrap_err();
        assert_eq!(
            err,
            GameError::Diverged {
                policy: "never".into(),
                horizon: 40
            }
        );
        assert_eq!(two_job_game(&mut Never, 0).unwrap_err(), GameError::InvalidCost(0));
    }

    #[test]
    fn transcript_and_csv() {
        let r = two_job_game(&mut Algorithm1::new(2), 2).unwrap();
        assert_eq!(r.transcript[0], "release job 1 at 0");
        assert_eq!(r.transcript[1], "job 1 started at 1; release job 2 at 2 (last)");
        assert_eq!(r.csv_row(), "two_job,algorithm1,2,0 2,1 5,8,5,5,1.6");
        assert_eq!(
            GameReport::CSV_HEADER.split(',').count(),
            r.csv_row().split(',').count()
        );
    }
}
