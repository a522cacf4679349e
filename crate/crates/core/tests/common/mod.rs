//! Test-only oracles that share no code path with the library solvers.
#![allow(dead_code)]

use jrp_core::{Cost, Instance, Time};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Kuhn's augmenting-path matching of jobs to time slots.
fn try_assign(job: usize, adj: &[Vec<usize>], slot_owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
    for &s in &adj[job] {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        if slot_owner[s].is_none() || try_assign(slot_owner[s].unwrap(), adj, slot_owner, seen) {
            slot_owner[s] = Some(job);
            return true;
        }
    }
    false
}

/// Whether every job can get its own unit slot `t` with a replenishment in
/// `[r_j, t]` and flow `t + 1 - r_j <= f`.
fn feasible_with(releases: &[Time], q: &[Time], f: Time, horizon: Time) -> bool {
    let adj: Vec<Vec<usize>> = releases
        .iter()
        .map(|&r| {
            (r..=horizon.min(r + f - 1))
                .filter(|&t| q.iter().any(|&tau| r <= tau && tau <= t))
                .map(|t| t as usize)
                .collect()
        })
        .collect();
    let mut owner = vec![None; horizon as usize + 1];
    (0..releases.len()).all(|j| {
        let mut seen = vec![false; horizon as usize + 1];
        try_assign(j, &adj, &mut owner, &mut seen)
    })
}

/// Exact optimum by enumerating every replenishment set over the whole time
/// window `[r_1, r_n + n]` and every flow bound, checking feasibility by
/// bipartite matching. Exponential in the window length; keep it short.
pub fn matching_opt(inst: &Instance) -> Cost {
    let releases = inst.releases();
    let n = releases.len() as Time;
    let lo = releases[0];
    let horizon = releases[releases.len() - 1] + n;
    let width = (horizon - lo + 1) as u32;
    assert!(width <= 16, "window too wide for the matching oracle");
    let mut best = Cost::MAX;
    for mask in 1u32..(1 << width) {
        let q: Vec<Time> = (0..width)
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| lo + b as Time)
            .collect();
        let base = inst.k() * q.len() as Cost;
        if base + 1 >= best {
            continue;
        }
        for f in 1..=(horizon - lo + 1) {
            if base + f >= best {
                break;
            }
            if feasible_with(releases, &q, f, horizon) {
                best = base + f;
                break;
            }
        }
    }
    best
}

/// Minimum `F_max` over every start assignment feasible for a fixed `Q`,
/// by exhaustive search over starts in `[r_j, horizon]`.
pub fn min_fmax_for_q(releases: &[Time], q: &[Time], horizon: Time) -> Option<Time> {
    fn rec(
        j: usize,
        releases: &[Time],
        q: &[Time],
        horizon: Time,
        used: &mut Vec<Time>,
        cur: Time,
        best: &mut Option<Time>,
    ) {
        if j == releases.len() {
            *best = Some(best.map_or(cur, |b| b.min(cur)));
            return;
        }
        for t in releases[j]..=horizon {
            if used.contains(&t) || !q.iter().any(|&tau| releases[j] <= tau && tau <= t) {
                continue;
            }
            let f = cur.max(t + 1 - releases[j]);
            if best.is_some_and(|b| f >= b) {
                continue;
            }
            used.push(t);
            rec(j + 1, releases, q, horizon, used, f, best);
            used.pop();
        }
    }
    let mut best = None;
    rec(0, releases, q, horizon, &mut Vec::new(), 0, &mut best);
    best
}

/// Random instance with `n` jobs and gaps in `1..=max_gap`, first release in
/// `0..first_max`.
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, max_gap: Time, first_max: Time, k: Cost) -> Instance {
    let mut r = rng.gen_range(0..first_max.max(1));
    let mut releases = vec![r];
    for _ in 1..n {
        r += rng.gen_range(1..=max_gap);
        releases.push(r);
    }
    Instance::new(releases, k).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn regular(n: i64, p: i64, k: i64) -> Instance {
    Instance::new((0..n).map(|j| j * p).collect(), k).unwrap()
}
