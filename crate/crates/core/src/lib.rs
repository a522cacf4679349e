//! Online joint replenishment combined with single machine scheduling.
//!
//! Unit jobs arrive over time and share one resource. A job may start only
//! after a replenishment at or after its release date; each replenishment
//! costs `K`. The objective is `K * (replenishments) + max flow time`.
//!
//! - [`model`]: instances, solutions, feasibility, ASAP scheduling.
//! - [`offline`]: exact optimum (brute force and threshold DP), greedy bound,
//!   closed forms for regular inputs.
//! - [`online`]: the irreversible discrete-time engine and the threshold
//!   policy that is 2-competitive.
//! - [`adversary`]: adaptive two- and three-job lower-bound games.
//! - [`generators`]: seeded instance families.
//! - [`experiment`]: ALG-vs-OPT trials with reproducible CSV output.

pub mod adversary;
pub mod experiment;
pub mod generators;
pub mod model;
pub mod offline;
pub mod online;

pub use adversary::{three_job_game, two_job_game, Game, GameError, GameReport};
pub use experiment::{ExperimentConfig, ExperimentRecord, OptChoice};
pub use generators::{GenKind, GenSpec};
pub use model::{
    asap_schedule, bracket_inputs, evaluate, validate_instance, Cost, CostBreakdown, GeneralInstance, Instance,
    ModelError, Solution, Time,
};
pub use offline::{
    block_partition_greedy, brute_force_opt, pregular_bounds, pregular_cost_with_q, pregular_opt, pregular_witness,
    threshold_dp_opt, OptMethod, OptResult, PRegularBounds, SolverError,
};
pub use online::{
    algorithm1_policy, audit_algorithm1, simulate, Algorithm1, Policy, PolicyAction, PolicyObservation, SimError,
    SimOptions, SimOutcome, Trace, TraceViolation,
};
