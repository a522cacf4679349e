//! Offline optimum: brute force over replenishment subsets, an exact
//! threshold/block dynamic program, a greedy block heuristic, and closed forms
//! for `p`-regular inputs.
//!
//! Both exact methods rely on the same structural facts: jobs can be served in
//! release order, and replenishing only at release dates loses nothing. An
//! optimal solution is therefore a partition of the release-ordered jobs into
//! consecutive blocks, each replenished at the release of its last job.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{asap_schedule, evaluate, Cost, Instance, ModelError, Solution, Time};

/// Default job cap for [`brute_force_opt`].
pub const BRUTE_FORCE_CAP: usize = 16;
/// Default job cap under which the threshold DP is treated as certified.
pub const THRESHOLD_DP_CAP: usize = 2000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("brute force refused: {n} jobs exceeds the cap of {cap}")]
    CapExceeded { n: usize, cap: usize },
    #[error("parameters must be positive (n = {n}, p = {p}, K = {k})")]
    InvalidParameters { n: i64, p: i64, k: i64 },
    #[error("replenishment count {q} outside 1..={n}")]
    InvalidCount { q: i64, n: i64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T, E = SolverError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptMethod {
    BruteForce,
    ThresholdDp,
    GreedyHeuristic,
    ClosedForm,
}

impl OptMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            OptMethod::BruteForce => "brute_force",
            OptMethod::ThresholdDp => "threshold_dp",
            OptMethod::GreedyHeuristic => "greedy_heuristic",
            OptMethod::ClosedForm => "closed_form",
        }
    }

    /// Whether the method certifies the optimum.
    pub fn is_exact(self) -> bool {
        !matches!(self, OptMethod::GreedyHeuristic)
    }
}

impl fmt::Display for OptMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OptMethod {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "brute_force" => Ok(OptMethod::BruteForce),
            "threshold_dp" => Ok(OptMethod::ThresholdDp),
            "greedy_heuristic" => Ok(OptMethod::GreedyHeuristic),
            "closed_form" => Ok(OptMethod::ClosedForm),
            other => Err(format!("unknown method {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptResult {
    pub cost: Cost,
    pub solution: Solution,
    pub q: usize,
    pub method: OptMethod,
}

impl OptResult {
    fn from_replenishments(inst: &Instance, q: &[Time], method: OptMethod) -> Result<Self> {
        let solution = asap_schedule(inst, q)?;
        let cost = evaluate(inst, &solution)?.total;
        Ok(OptResult {
            cost,
            q: q.len(),
            solution,
            method,
        })
    }
}

/// `(cost, q, lexicographic Q)` ordering used for every tie-break.
fn better(a: (Cost, usize, &[Time]), b: (Cost, usize, &[Time])) -> bool {
    a.0.cmp(&b.0).then(a.1.cmp(&b.1)).then_with(|| a.2.cmp(b.2)) == Ordering::Less
}

/// Cost of the ASAP schedule whose replenishment set is the releases selected
/// by `mask` (bit `j` for job `j < n - 1`) plus the last release.
fn masked_cost(releases: &[Time], k: Cost, mask: u64, next_tau: &mut [Time]) -> (Cost, usize) {
    let n = releases.len();
    let mut tau = releases[n - 1];
    for j in (0..n).rev() {
        if j == n - 1 || mask >> j & 1 == 1 {
            tau = releases[j];
        }
        next_tau[j] = tau;
    }
    let mut free = Time::MIN;
    let mut f_max = 0;
    for j in 0..n {
        let start = next_tau[j].max(free);
        f_max = f_max.max(start + 1 - releases[j]);
        free = start + 1;
    }
    let q = mask.count_ones() as usize + 1;
    (k * q as Cost + f_max, q)
}

fn mask_to_q(releases: &[Time], mask: u64) -> Vec<Time> {
    let n = releases.len();
    (0..n)
        .filter(|&j| j == n - 1 || mask >> j & 1 == 1)
        .map(|j| releases[j])
        .collect()
}

/// Exhaustive optimum with the default cap of [`BRUTE_FORCE_CAP`] jobs.
pub fn brute_force_opt(inst: &Instance) -> Result<OptResult> {
    brute_force_opt_with_cap(inst, BRUTE_FORCE_CAP)
}

/// Enumerates every replenishment set drawn from the release dates that
/// contains the last release, schedules ASAP and keeps the cheapest.
pub fn brute_force_opt_with_cap(inst: &Instance, cap: usize) -> Result<OptResult> {
    let n = inst.len();
    if n > cap || n > 63 {
        return Err(SolverError::CapExceeded { n, cap: cap.min(63) });
    }
    let releases = inst.releases();
    let mut scratch = vec![0; n];
    let mut best: Option<(Cost, usize, Vec<Time>)> = None;
    for mask in 0..(1u64 << (n - 1)) {
        let (cost, q) = masked_cost(releases, inst.k(), mask, &mut scratch);
        let replace = match &best {
            None => true,
            Some((bc, bq, bset)) => {
                (cost, q) < (*bc, *bq)
                    || ((cost, q) == (*bc, *bq) && better((cost, q, &mask_to_q(releases, mask)), (*bc, *bq, bset)))
            }
        };
        if replace {
            best = Some((cost, q, mask_to_q(releases, mask)));
        }
    }
    let (_, _, q) = best.expect("at least one subset");
    OptResult::from_replenishments(inst, &q, OptMethod::BruteForce)
}

/// Minimum cost over replenishment sets of each size: entry `q` holds the best
/// cost using exactly `q` replenishments (`None` at index 0).
pub fn brute_force_cost_by_count(inst: &Instance, cap: usize) -> Result<Vec<Option<Cost>>> {
    let n = inst.len();
    if n > cap || n > 63 {
        return Err(SolverError::CapExceeded { n, cap: cap.min(63) });
    }
    let mut scratch = vec![0; n];
    let mut out = vec![None; n + 1];
    for mask in 0..(1u64 << (n - 1)) {
        let (cost, q) = masked_cost(inst.releases(), inst.k(), mask, &mut scratch);
        let slot: &mut Option<Cost> = &mut out[q];
        *slot = Some(slot.map_or(cost, |c| c.min(cost)));
    }
    Ok(out)
}

/// Distinct candidate values `r_k - r_j + 1` (`j <= k`) not exceeding `limit`,
/// sorted ascending. The maximum flow time of an ASAP schedule is always one
/// of these: it is attained by a job that starts a busy period right at a
/// replenishment, which sits at some release date.
pub fn flow_candidates(releases: &[Time], limit: Time) -> Vec<Time> {
    let mut out = Vec::new();
    for (j, &rj) in releases.iter().enumerate() {
        for &rk in &releases[j..] {
            let f = rk - rj + 1;
            if f > limit {
                break;
            }
            out.push(f);
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

struct Node {
    blocks: u32,
    free: Time,
    parent: u32,
    last: u32,
}

const NO_PARENT: u32 = u32::MAX;

/// Minimum number of blocks such that every job's flow time is at most `f`.
///
/// Forward search over block boundaries. For each first-uncovered job it keeps
/// the Pareto frontier of `(blocks used, machine free time)`; a free time at or
/// below the next release is clamped to it since it cannot delay anything.
/// Returns the block count and the index of the last job of every block.
fn min_blocks(releases: &[Time], f: Time) -> Option<(usize, Vec<usize>)> {
    let n = releases.len();
    let mut arena: Vec<Node> = vec![Node {
        blocks: 0,
        free: releases[0],
        parent: NO_PARENT,
        last: 0,
    }];
    let mut frontier: Vec<Vec<u32>> = vec![Vec::new(); n + 1];
    frontier[0].push(0);

    for i in 0..n {
        let states = std::mem::take(&mut frontier[i]);
        let ri = releases[i];
        for &id in &states {
            let (blocks, free) = (arena[id as usize].blocks, arena[id as usize].free);
            if free + 1 - ri > f {
                continue;
            }
            for k in i..n {
                let rk = releases[k];
                if rk + 1 - ri > f {
                    break;
                }
                let start = rk.max(free);
                let mut next_free = start + (k - i + 1) as Time;
                if k + 1 < n {
                    next_free = next_free.max(releases[k + 1]);
                }
                let cand = (blocks + 1, next_free);
                let slot = &mut frontier[k + 1];
                if slot.iter().any(|&e| {
                    let e = &arena[e as usize];
                    e.blocks <= cand.0 && e.free <= cand.1
                }) {
                    continue;
                }
                slot.retain(|&e| {
                    let e = &arena[e as usize];
                    !(cand.0 <= e.blocks && cand.1 <= e.free)
                });
                slot.push(arena.len() as u32);
                arena.push(Node {
                    blocks: cand.0,
                    free: cand.1,
                    parent: id,
                    last: k as u32,
                });
            }
        }
        frontier[i] = states;
    }

    let best = frontier[n]
        .iter()
        .copied()
        .min_by_key(|&e| (arena[e as usize].blocks, arena[e as usize].free))?;
    let mut ends = Vec::new();
    let mut cur = best;
    while arena[cur as usize].parent != NO_PARENT {
        ends.push(arena[cur as usize].last as usize);
        cur = arena[cur as usize].parent;
    }
    ends.reverse();
    Some((arena[best as usize].blocks as usize, ends))
}

#[derive(Clone, Copy)]
struct Best {
    cost: Cost,
    q: usize,
    f: Time,
}

impl Best {
    fn offer(&mut self, k: Cost, f: Time, q: usize) {
        let cost = k * q as Cost + f;
        if (cost, q) < (self.cost, self.q) {
            *self = Best { cost, q, f };
        }
    }
}

/// Exact optimum via candidate maximum flow times and a minimum-block search.
///
/// `q(F)` is non-increasing in `F`, so for each value of `q` only the smallest
/// `F` attaining it matters. The candidate list is bisected: an interval whose
/// endpoints share the same `q` contains nothing better than its left end.
pub fn threshold_dp_opt(inst: &Instance) -> Result<OptResult> {
    let releases = inst.releases();
    let k = inst.k();
    let n = inst.len();
    // Every job replenished at its release: F = 1, q = n.
    let mut best = Best {
        cost: k * n as Cost + 1,
        q: n,
        f: 1,
    };
    let cands = flow_candidates(releases, best.cost - k);
    let q_of = |f: Time| min_blocks(releases, f).expect("F >= 1 is always feasible").0;

    if cands.len() > 1 {
        let hi = cands.len() - 1;
        let q_lo = q_of(cands[0]);
        let q_hi = q_of(cands[hi]);
        best.offer(k, cands[0], q_lo);
        best.offer(k, cands[hi], q_hi);
        let mut stack = vec![(0usize, hi, q_lo, q_hi)];
        while let Some((lo, hi, q_lo, q_hi)) = stack.pop() {
            if hi - lo <= 1 || q_lo == q_hi {
                continue;
            }
            let bound = k * q_hi as Cost + cands[lo + 1];
            if bound > best.cost || (bound == best.cost && q_hi >= best.q) {
                continue;
            }
            let mid = lo + (hi - lo) / 2;
            let q_mid = q_of(cands[mid]);
            best.offer(k, cands[mid], q_mid);
            stack.push((mid, hi, q_mid, q_hi));
            stack.push((lo, mid, q_lo, q_mid));
        }
    }

    let (_, ends) = min_blocks(releases, best.f).expect("feasible");
    let q: Vec<Time> = ends.iter().map(|&e| releases[e]).collect();
    OptResult::from_replenishments(inst, &q, OptMethod::ThresholdDp)
}

/// Greedy block partition for a fixed flow bound: every block is extended as
/// far as the bound allows. Returns the replenishment set, or `None` if the
/// greedy gets stuck.
fn greedy_blocks(releases: &[Time], f: Time) -> Option<Vec<Time>> {
    let n = releases.len();
    let mut q = Vec::new();
    let mut free = Time::MIN;
    let mut i = 0;
    while i < n {
        let ri = releases[i];
        if ri.max(free) + 1 - ri > f {
            return None;
        }
        let mut k = i;
        while k + 1 < n && releases[k + 1].max(free) + 1 - ri <= f {
            k += 1;
        }
        let start = releases[k].max(free);
        free = start + (k - i + 1) as Time;
        q.push(releases[k]);
        i = k + 1;
    }
    Some(q)
}

/// Fast heuristic upper bound on the optimum; used where the exact methods
/// are too slow.
pub fn block_partition_greedy(inst: &Instance) -> Result<OptResult> {
    let releases = inst.releases();
    let k = inst.k();
    let n = inst.len();
    let mut best_q: Vec<Time> = releases.to_vec();
    let mut best = (k * n as Cost + 1, n);
    for f in flow_candidates(releases, best.0 - k) {
        if k + f > best.0 {
            break;
        }
        let Some(q) = greedy_blocks(releases, f) else {
            continue;
        };
        let cost = k * q.len() as Cost + f;
        if better((cost, q.len(), &q), (best.0, best.1, &best_q)) {
            best = (cost, q.len());
            best_q = q;
        }
    }
    OptResult::from_replenishments(inst, &best_q, OptMethod::GreedyHeuristic)
}

fn check_params(n: i64, p: i64, k: i64) -> Result<()> {
    if n < 1 || p < 1 || k < 1 {
        return Err(SolverError::InvalidParameters { n, p, k });
    }
    Ok(())
}

/// Minimum cost on the `p`-regular input of `n` jobs using exactly `q`
/// replenishments: `qK + (ceil(n/q) - 1)p + 1`.
pub fn pregular_cost_with_q(n: i64, p: i64, k: i64, q: i64) -> Result<Cost> {
    check_params(n, p, k)?;
    if q < 1 || q > n {
        return Err(SolverError::InvalidCount { q, n });
    }
    let ceil = (n + q - 1) / q;
    Ok(q * k + (ceil - 1) * p + 1)
}

/// Optimum on the `p`-regular input and the smallest optimal replenishment
/// count.
pub fn pregular_opt(n: i64, p: i64, k: i64) -> Result<(Cost, i64)> {
    check_params(n, p, k)?;
    let mut best = (Cost::MAX, 0);
    for q in 1..=n {
        let c = pregular_cost_with_q(n, p, k, q)?;
        if c < best.0 {
            best = (c, q);
        }
    }
    Ok(best)
}

/// A solution on the `p`-regular input with exactly `q` replenishments that
/// attains [`pregular_cost_with_q`].
///
/// With `n = q * floor(n/q) + r`, the jobs are cut into `r` blocks of
/// `ceil(n/q)` jobs followed by `q - r` blocks of `floor(n/q)` jobs; each block
/// is replenished at its last release and scheduled ASAP. The explicit
/// replenishment times `i * p * ceil(n/q)` / `i * p * floor(n/q)` that appear in
/// the literature are not monotone for some `(n, q)` (e.g. `n = 7, q = 3`), so
/// they are not used.
pub fn pregular_witness(n: i64, p: i64, k: i64, q: i64) -> Result<Solution> {
    check_params(n, p, k)?;
    if q < 1 || q > n {
        return Err(SolverError::InvalidCount { q, n });
    }
    let floor = n / q;
    let rem = n % q;
    let mut ends = Vec::with_capacity(q as usize);
    let mut last = -1;
    for b in 0..q {
        last += if b < rem { floor + 1 } else { floor };
        ends.push(last * p);
    }
    let inst = Instance::new((0..n).map(|j| j * p).collect(), k)?;
    Ok(asap_schedule(&inst, &ends)?)
}

/// Closed-form optimum on the `p`-regular input, with its witness solution.
pub fn pregular_opt_result(n: i64, p: i64, k: i64) -> Result<OptResult> {
    let (cost, q) = pregular_opt(n, p, k)?;
    Ok(OptResult {
        cost,
        solution: pregular_witness(n, p, k, q)?,
        q: q as usize,
        method: OptMethod::ClosedForm,
    })
}

/// Real-valued bracket on the `p`-regular optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PRegularBounds {
    /// `2 sqrt(npK) - p + 1`, the continuous relaxation minimum.
    pub lower: f64,
    /// `2 sqrt(npK) + K + 1`.
    pub upper: f64,
}

impl PRegularBounds {
    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

pub fn pregular_bounds(n: i64, p: i64, k: i64) -> Result<PRegularBounds> {
    check_params(n, p, k)?;
    let root = 2.0 * ((n * p * k) as f64).sqrt();
    Ok(PRegularBounds {
        lower: root - p as f64 + 1.0,
        upper: root + k as f64 + 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_instance;

    fn inst(r: &[Time], k: Cost) -> Instance {
        validate_instance(r, k).unwrap()
    }

    fn regular(n: i64, p: i64, k: i64) -> Instance {
        inst(&(0..n).map(|j| j * p).collect::<Vec<_>>(), k)
    }

    #[test]
    fn brute_force_examples() {
        let r = brute_force_opt(&inst(&[0, 5], 3)).unwrap();
        assert_eq!((r.cost, r.solution.replenishments.clone()), (7, vec![0, 5]));
        assert_eq!(brute_force_opt(&inst(&[0, 1, 2], 1)).unwrap().cost, 4);
        let r = brute_force_opt(&inst(&[0], 5)).unwrap();
        assert_eq!((r.cost, r.solution.replenishments), (6, vec![0]));
    }

    #[test]
    fn brute_force_refuses_over_cap() {
        let big = regular(17, 1, 1);
        assert_eq!(brute_force_opt(&big), Err(SolverError::CapExceeded { n: 17, cap: 16 }));
        assert!(brute_force_opt_with_cap(&regular(5, 1, 1), 4).is_err());
    }

    #[test]
    fn brute_force_tie_break_prefers_fewer_then_earlier() {
        // K = 1, releases [0, 1]: {1} costs 1 + 2 = 3, {0, 1} costs 2 + 1 = 3.
        let r = brute_force_opt(&inst(&[0, 1], 1)).unwrap();
        assert_eq!(r.cost, 3);
        assert_eq!(r.solution.replenishments, vec![1]);
    }

    #[test]
    fn threshold_dp_examples() {
        assert_eq!(threshold_dp_opt(&inst(&[0, 5], 3)).unwrap().cost, 7);
        let r = threshold_dp_opt(&regular(7, 2, 3)).unwrap();
        assert_eq!((r.cost, r.q), (13, 2));
        let r = threshold_dp_opt(&inst(&[0], 1)).unwrap();
        assert_eq!((r.cost, r.q), (2, 1));
        assert_eq!(r.method, OptMethod::ThresholdDp);
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(block_partition_greedy(&inst(&[0, 1, 2], 1)).unwrap().cost, 4);
        // Zero-slack sparse input, n = 5, K = 2.
        let sparse = inst(&[0, 2, 6, 12, 20], 2);
        assert_eq!(block_partition_greedy(&sparse).unwrap().cost, 11);
    }

    #[test]
    fn pregular_examples() {
        assert_eq!(pregular_opt(7, 2, 3).unwrap(), (13, 2));
        assert_eq!(pregular_opt(1, 1, 1).unwrap(), (2, 1));
        assert_eq!(pregular_opt(6, 1, 1).unwrap(), (5, 2));
        assert_eq!(pregular_cost_with_q(7, 2, 3, 2).unwrap(), 13);
        assert_eq!(pregular_cost_with_q(9, 3, 4, 9).unwrap(), 9 * 4 + 1);
        assert_eq!(pregular_cost_with_q(6, 1, 1, 4).unwrap(), 6);
        assert!(pregular_cost_with_q(6, 1, 1, 7).is_err());
        assert!(pregular_opt(0, 1, 1).is_err());
    }

    #[test]
    fn witness_examples() {
        let w = pregular_witness(6, 1, 1, 2).unwrap();
        assert_eq!(w.replenishments, vec![2, 5]);
        assert_eq!(evaluate(&regular(6, 1, 1), &w).unwrap().total, 5);

        let w = pregular_witness(4, 2, 1, 4).unwrap();
        assert_eq!(w.replenishments, vec![0, 2, 4, 6]);
        assert_eq!(evaluate(&regular(4, 2, 1), &w).unwrap().total, 5);

        let w = pregular_witness(7, 2, 3, 2).unwrap();
        assert_eq!(evaluate(&regular(7, 2, 3), &w).unwrap().total, 13);
    }

    #[test]
    fn bounds_examples() {
        let b = pregular_bounds(7, 2, 3).unwrap();
        assert!((b.lower - 11.9615).abs() < 1e-3);
        assert!((b.upper - 16.9615).abs() < 1e-3);
        assert!(b.contains(13.0));
        let b = pregular_bounds(1, 1, 1).unwrap();
        assert_eq!((b.lower, b.upper), (2.0, 4.0));
    }

    #[test]
    fn cost_by_count_matches_opt() {
        let i = inst(&[0, 1, 3, 4, 8], 2);
        let by_q = brute_force_cost_by_count(&i, 16).unwrap();
        let best = by_q.iter().flatten().min().copied().unwrap();
        assert_eq!(best, brute_force_opt(&i).unwrap().cost);
        assert_eq!(by_q[0], None);
    }

    #[test]
    fn candidates_are_sorted_and_bounded() {
        assert_eq!(flow_candidates(&[0, 2, 3], 10), vec![1, 2, 3, 4]);
        assert_eq!(flow_candidates(&[0, 2, 3], 2), vec![1, 2]);
    }
}
