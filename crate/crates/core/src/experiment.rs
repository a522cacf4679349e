//! ALG-vs-OPT experiments over generated instances, with CSV output.
//!
//! Every instance gets a seed derived from the master seed and its index, and
//! results are assembled in index order, so the CSV does not depend on the
//! number of worker threads. Wall-clock timings are only written when asked
//! for; otherwise the `runtime_ms` column is 0 and the file is byte-stable.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generators::{derive_seed, GenError, GenKind, GenSpec};
use crate::model::{Cost, Instance, Time};
use crate::offline::{
    block_partition_greedy, brute_force_opt, pregular_opt, pregular_opt_result, threshold_dp_opt, OptMethod, OptResult,
    SolverError, BRUTE_FORCE_CAP, THRESHOLD_DP_CAP,
};
use crate::online::{policy_by_name, simulate_instance, SimError, SimOptions};

pub const CSV_HEADER: &str =
    "instance_id,kind,n,p_or_beta,K,seed,alg_cost,alg_q,opt_cost,opt_q,opt_method,ratio,runtime_ms";

pub const SUMMARY_HEADER: &str = "kind,p_or_beta,n,K,count,mean_ratio,min_ratio,max_ratio";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error("instance {id}: {source}")]
    Generate { id: u64, source: GenError },
    #[error("instance {id}: {source}")]
    Solver { id: u64, source: SolverError },
    #[error("instance {id}: {source}")]
    Simulation { id: u64, source: SimError },
    #[error("could not build worker pool: {0}")]
    Pool(String),
}

impl ExperimentError {
    /// Whether the error is an exact-solver size refusal.
    pub fn is_cap_refusal(&self) -> bool {
        matches!(
            self,
            ExperimentError::Solver {
                source: SolverError::CapExceeded { .. },
                ..
            }
        )
    }
}

pub type Result<T, E = ExperimentError> = std::result::Result<T, E>;

/// How the offline optimum is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptChoice {
    /// Closed form on regular inputs, brute force up to its cap, the threshold
    /// DP up to `dp_cap`, and a greedy/bracket interval beyond.
    Auto {
        dp_cap: usize,
    },
    Fixed(OptMethod),
}

impl Default for OptChoice {
    fn default() -> Self {
        OptChoice::Auto {
            dp_cap: THRESHOLD_DP_CAP,
        }
    }
}

impl std::str::FromStr for OptChoice {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            Ok(OptChoice::default())
        } else {
            s.parse().map(OptChoice::Fixed)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: GenKind,
    pub n: Vec<usize>,
    /// Grid for `pregular` and `pbounded_uniform`.
    pub p: Vec<Time>,
    /// Grid for `geometric`.
    pub beta: Vec<f64>,
    pub k: Vec<Cost>,
    pub replication: usize,
    pub seed: u64,
    pub opt: OptChoice,
    pub policy: String,
    /// Record wall-clock runtimes (makes the CSV non-reproducible).
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: GenKind::Geometric,
            n: vec![100],
            p: vec![1],
            beta: vec![0.01],
            k: vec![1],
            replication: 100,
            seed: 0,
            opt: OptChoice::default(),
            policy: "algorithm1".to_string(),
            timing: false,
        }
    }
}

/// Value of the `p_or_beta` column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Param {
    None,
    P(Time),
    Beta(f64),
}

impl std::fmt::Display for Param {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Param::None => Ok(()),
            Param::P(p) => write!(f, "{p}"),
            Param::Beta(b) => write!(f, "{b}"),
        }
    }
}

/// One ALG-vs-OPT trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub instance_id: u64,
    pub kind: GenKind,
    pub n: usize,
    pub p_or_beta: Param,
    pub k: Cost,
    pub seed: u64,
    pub alg_cost: Cost,
    pub alg_q: usize,
    /// Exact optimum, or the greedy upper bound for `bracket_bound` rows.
    pub opt_cost: Cost,
    pub opt_q: usize,
    /// `brute_force`, `threshold_dp`, `greedy_heuristic`, `closed_form` or
    /// `bracket_bound`.
    pub opt_method: String,
    /// `alg_cost / opt_cost`.
    pub ratio: f64,
    /// For `bracket_bound` rows: `alg_cost` over the bracket lower bound.
    pub ratio_upper: Option<f64>,
    pub runtime_ms: u64,
}

impl ExperimentRecord {
    pub fn csv_row(&self) -> String {
        let ratio = match self.ratio_upper {
            Some(hi) => format!("{}..{}", self.ratio, hi),
            None => self.ratio.to_string(),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.instance_id,
            self.kind,
            self.n,
            self.p_or_beta,
            self.k,
            self.seed,
            self.alg_cost,
            self.alg_q,
            self.opt_cost,
            self.opt_q,
            self.opt_method,
            ratio,
            self.runtime_ms
        )
    }
}

/// Mean/min/max ratio over one `(kind, parameter, n, K)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub kind: GenKind,
    pub p_or_beta: Param,
    pub n: usize,
    pub k: Cost,
    pub count: usize,
    pub mean_ratio: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

impl CellSummary {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.kind, self.p_or_beta, self.n, self.k, self.count, self.mean_ratio, self.min_ratio, self.max_ratio
        )
    }
}

struct Task {
    id: u64,
    spec: GenSpec,
    param: Param,
}

impl ExperimentConfig {
    fn params(&self) -> Vec<Param> {
        match self.kind {
            GenKind::Pregular | GenKind::PboundedUniform => self.p.iter().map(|&p| Param::P(p)).collect(),
            GenKind::Geometric => self.beta.iter().map(|&b| Param::Beta(b)).collect(),
            GenKind::Regular | GenKind::Sparse => vec![Param::None],
        }
    }

    /// Checks the whole grid before any work starts.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.n.is_empty() || self.k.is_empty() {
            return bad("empty n or K grid".into());
        }
        if self.replication == 0 {
            return bad("replication must be at least 1".into());
        }
        if self.params().is_empty() {
            return bad(format!("kind {} needs a parameter grid", self.kind));
        }
        if policy_by_name(&self.policy, 1).is_none() {
            return bad(format!("unknown policy {:?}", self.policy));
        }
        for task in self.tasks() {
            task.spec
                .validate()
                .map_err(|source| ExperimentError::Generate { id: task.id, source })?;
        }
        let max_n = self.n.iter().copied().max().unwrap_or(0);
        match self.opt {
            OptChoice::Fixed(OptMethod::BruteForce) if max_n > BRUTE_FORCE_CAP => Err(ExperimentError::Solver {
                id: 0,
                source: SolverError::CapExceeded {
                    n: max_n,
                    cap: BRUTE_FORCE_CAP,
                },
            }),
            OptChoice::Fixed(OptMethod::ClosedForm) if !matches!(self.kind, GenKind::Regular | GenKind::Pregular) => {
                bad(format!("closed_form only applies to regular inputs, not {}", self.kind))
            }
            _ => Ok(()),
        }
    }

    fn tasks(&self) -> Vec<Task> {
        let mut out = Vec::new();
        let mut id = 0u64;
        for param in self.params() {
            for &n in &self.n {
                for &k in &self.k {
                    for _ in 0..self.replication {
                        let (p, beta) = match param {
                            Param::P(p) => (Some(p), None),
                            Param::Beta(b) => (None, Some(b)),
                            Param::None => (None, None),
                        };
                        out.push(Task {
                            id,
                            spec: GenSpec {
                                kind: self.kind,
                                n,
                                p,
                                k,
                                beta,
                                seed: derive_seed(self.seed, id),
                            },
                            param,
                        });
                        id += 1;
                    }
                }
            }
        }
        out
    }
}

enum OptOutcome {
    Exact(OptResult),
    Bracket { upper: OptResult, lower: Cost },
}

fn regular_step(inst: &Instance) -> Option<Time> {
    let p = if inst.len() > 1 {
        inst.releases()[1] - inst.releases()[0]
    } else {
        1
    };
    (inst.first_release() == 0 && inst.is_p_regular(p)).then_some(p)
}

/// Lower bound from the job count alone: with `q` replenishments some
/// replenishment is the last one before the start of at least `ceil(n/q)`
/// jobs, and the last of those finishes at least that many units after its
/// release. That is the optimum of the regular input with `n` jobs.
fn count_lower_bound(inst: &Instance) -> Result<Cost, SolverError> {
    Ok(pregular_opt(inst.len() as i64, 1, inst.k())?.0)
}

fn solve(inst: &Instance, choice: OptChoice) -> Result<OptOutcome, SolverError> {
    let n = inst.len();
    let method = match choice {
        OptChoice::Fixed(m) => m,
        OptChoice::Auto { dp_cap } => {
            if regular_step(inst).is_some() {
                OptMethod::ClosedForm
            } else if n <= BRUTE_FORCE_CAP {
                OptMethod::BruteForce
            } else if n <= dp_cap {
                OptMethod::ThresholdDp
            } else {
                let upper = block_partition_greedy(inst)?;
                let lower = count_lower_bound(inst)?;
                return Ok(OptOutcome::Bracket { upper, lower });
            }
        }
    };
    let res = match method {
        OptMethod::BruteForce => brute_force_opt(inst)?,
        OptMethod::ThresholdDp => threshold_dp_opt(inst)?,
        OptMethod::GreedyHeuristic => block_partition_greedy(inst)?,
        OptMethod::ClosedForm => {
            let p = regular_step(inst).ok_or(SolverError::InvalidParameters {
                n: n as i64,
                p: 0,
                k: inst.k(),
            })?;
            pregular_opt_result(n as i64, p, inst.k())?
        }
    };
    Ok(OptOutcome::Exact(res))
}

fn run_task(cfg: &ExperimentConfig, task: &Task) -> Result<ExperimentRecord> {
    let started = Instant::now();
    let id = task.id;
    let inst = task
        .spec
        .generate()
        .map_err(|source| ExperimentError::Generate { id, source })?;
    let mut policy = policy_by_name(&cfg.policy, inst.k())
        .ok_or_else(|| ExperimentError::Config(format!("unknown policy {:?}", cfg.policy)))?;
    let options = SimOptions {
        idle_limit: None,
        skip_idle: true,
    };
    let alg =
        simulate_instance(&inst, &mut policy, options).map_err(|source| ExperimentError::Simulation { id, source })?;
    let opt = solve(&inst, cfg.opt).map_err(|source| ExperimentError::Solver { id, source })?;

    let alg_cost = alg.cost.total;
    let (opt_cost, opt_q, opt_method, ratio_upper) = match opt {
        OptOutcome::Exact(r) => (r.cost, r.q, r.method.as_str().to_string(), None),
        OptOutcome::Bracket { upper, lower } => (
            upper.cost,
            upper.q,
            "bracket_bound".to_string(),
            Some(alg_cost as f64 / lower as f64),
        ),
    };
    Ok(ExperimentRecord {
        instance_id: id,
        kind: cfg.kind,
        n: inst.len(),
        p_or_beta: task.param,
        k: inst.k(),
        seed: task.spec.seed,
        alg_cost,
        alg_q: alg.cost.repl_count,
        opt_cost,
        opt_q,
        opt_method,
        ratio: alg_cost as f64 / opt_cost as f64,
        ratio_upper,
        runtime_ms: if cfg.timing {
            started.elapsed().as_millis() as u64
        } else {
            0
        },
    })
}

/// Runs every instance of the grid on `jobs` worker threads (0 = rayon's
/// default). Records come back in instance order.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    let tasks = cfg.tasks();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;
    pool.install(|| tasks.par_iter().map(|t| run_task(cfg, t)).collect())
}

/// Groups records by cell in first-appearance order.
pub fn summarize(records: &[ExperimentRecord]) -> Vec<CellSummary> {
    let mut out: Vec<(CellSummary, f64)> = Vec::new();
    for r in records {
        let key = (r.kind, r.p_or_beta, r.n, r.k);
        let pos = out.iter().position(|(c, _)| (c.kind, c.p_or_beta, c.n, c.k) == key);
        let i = match pos {
            Some(i) => i,
            None => {
                out.push((
                    CellSummary {
                        kind: r.kind,
                        p_or_beta: r.p_or_beta,
                        n: r.n,
                        k: r.k,
                        count: 0,
                        mean_ratio: 0.0,
                        min_ratio: f64::INFINITY,
                        max_ratio: f64::NEG_INFINITY,
                    },
                    0.0,
                ));
                out.len() - 1
            }
        };
        let (cell, sum) = &mut out[i];
        cell.count += 1;
        *sum += r.ratio;
        cell.min_ratio = cell.min_ratio.min(r.ratio);
        cell.max_ratio = cell.max_ratio.max(r.ratio);
    }
    out.into_iter()
        .map(|(mut c, sum)| {
            c.mean_ratio = sum / c.count as f64;
            c
        })
        .collect()
}

pub fn records_csv(records: &[ExperimentRecord]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(s, "{}", r.csv_row());
    }
    s
}

pub fn summary_csv(cells: &[CellSummary]) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for c in cells {
        let _ = writeln!(s, "{}", c.csv_row());
    }
    s
}
