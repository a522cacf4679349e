//! Problem data model: instances, solutions, feasibility and cost.
//!
//! Every job has unit processing time and an integer release date. A job may
//! start at `S_j` only if the machine is free and some replenishment lies in
//! `[r_j, S_j]`. The cost of a solution is `K * |Q| + F_max`.
//!
//! All arithmetic is exact `i64`; overflow is reported as an error instead of
//! wrapping.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Integer time point.
pub type Time = i64;
/// Integer cost.
pub type Cost = i64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("instance has no jobs")]
    Empty,
    #[error("job {index} has a negative release date {release}")]
    NegativeRelease { index: usize, release: Time },
    #[error("job {index} repeats release date {release}")]
    DuplicateRelease { index: usize, release: Time },
    #[error("release dates must be strictly increasing (job {index}: {release} after {previous})")]
    NotIncreasing {
        index: usize,
        release: Time,
        previous: Time,
    },
    #[error("replenishment cost must be at least 1, got {0}")]
    InvalidCost(Cost),
    #[error("replenishment times must be strictly increasing (position {0})")]
    ReplenishmentsNotIncreasing(usize),
    #[error("job {job} has no replenishment at or after its release date")]
    InfeasibleReplenishments { job: usize },
    #[error("solution has {starts} start times for {jobs} jobs")]
    LengthMismatch { starts: usize, jobs: usize },
    #[error("job {job} starts at {start} before its release date {release}")]
    StartBeforeRelease { job: usize, start: Time, release: Time },
    #[error("job {job} overlaps job {other} on the machine")]
    Overlap { job: usize, other: usize },
    #[error("job {job} has no replenishment in [{release}, {start}]")]
    Uncovered { job: usize, release: Time, start: Time },
    #[error("bound p must be at least 1, got {0}")]
    InvalidBound(Time),
    #[error("gap {gap} between jobs {index} and {} exceeds p = {p}", index + 1)]
    NotPBounded { index: usize, gap: Time, p: Time },
    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),
    #[error("malformed instance line: {0}")]
    Parse(String),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

/// A validated instance: strictly increasing non-negative release dates and a
/// replenishment cost `K >= 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct Instance {
    releases: Vec<Time>,
    k: Cost,
}

#[derive(Serialize, Deserialize)]
struct RawInstance {
    #[serde(rename = "K")]
    k: Cost,
    releases: Vec<Time>,
}

impl TryFrom<RawInstance> for Instance {
    type Error = ModelError;
    fn try_from(raw: RawInstance) -> Result<Self> {
        Instance::new(raw.releases, raw.k)
    }
}

impl From<Instance> for RawInstance {
    fn from(inst: Instance) -> Self {
        RawInstance {
            k: inst.k,
            releases: inst.releases,
        }
    }
}

/// Validates release dates and cost and builds an [`Instance`].
pub fn validate_instance(releases: &[Time], k: Cost) -> Result<Instance> {
    Instance::new(releases.to_vec(), k)
}

impl Instance {
    pub fn new(releases: Vec<Time>, k: Cost) -> Result<Self> {
        if releases.is_empty() {
            return Err(ModelError::Empty);
        }
        if k < 1 {
            return Err(ModelError::InvalidCost(k));
        }
        for (index, &release) in releases.iter().enumerate() {
            if release < 0 {
                return Err(ModelError::NegativeRelease { index, release });
            }
            if index > 0 {
                let previous = releases[index - 1];
                if release == previous {
                    return Err(ModelError::DuplicateRelease { index, release });
                }
                if release < previous {
                    return Err(ModelError::NotIncreasing {
                        index,
                        release,
                        previous,
                    });
                }
            }
        }
        // Guarantees that every completion time below stays representable.
        let last = *releases.last().unwrap();
        last.checked_add(2 * releases.len() as Time)
            .ok_or(ModelError::Overflow("release horizon"))?;
        Ok(Instance { releases, k })
    }

    #[inline]
    pub fn releases(&self) -> &[Time] {
        &self.releases
    }

    #[inline]
    pub fn k(&self) -> Cost {
        self.k
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.releases.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.releases.is_empty()
    }

    #[inline]
    pub fn first_release(&self) -> Time {
        self.releases[0]
    }

    #[inline]
    pub fn last_release(&self) -> Time {
        self.releases[self.releases.len() - 1]
    }

    /// Same releases, different replenishment cost.
    pub fn with_cost(&self, k: Cost) -> Result<Self> {
        Instance::new(self.releases.clone(), k)
    }

    /// Sub-instance keeping the jobs whose index is set in `keep`.
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        let releases = keep.iter().map(|&j| self.releases[j]).collect();
        Instance::new(releases, self.k)
    }

    /// Largest gap between consecutive releases (0 for a single job).
    pub fn max_gap(&self) -> Time {
        self.releases.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    /// Consecutive gaps are all at most `p`.
    pub fn is_p_bounded(&self, p: Time) -> bool {
        self.releases.windows(2).all(|w| w[1] - w[0] <= p)
    }

    /// Releases are exactly `0, p, 2p, ...`.
    pub fn is_p_regular(&self, p: Time) -> bool {
        self.releases.iter().enumerate().all(|(j, &r)| r == j as Time * p)
    }

    /// `r_{j+1} - r_j >= K j` for every 1-based `j < n`.
    pub fn is_sparse(&self) -> bool {
        self.releases
            .windows(2)
            .enumerate()
            .all(|(j, w)| w[1] - w[0] >= self.k * (j as Time + 1))
    }
}

/// Text form `K;r_1,r_2,...,r_n`.
impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};", self.k)?;
        for (i, r) in self.releases.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

impl FromStr for Instance {
    type Err = ModelError;

    fn from_str(line: &str) -> Result<Self> {
        let line = line.trim();
        let (k, rest) = line
            .split_once(';')
            .ok_or_else(|| ModelError::Parse(format!("missing ';' in {line:?}")))?;
        let k: Cost = k
            .trim()
            .parse()
            .map_err(|e| ModelError::Parse(format!("bad K {k:?}: {e}")))?;
        let releases = rest
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<Time>()
                    .map_err(|e| ModelError::Parse(format!("bad release {s:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Instance::new(releases, k)
    }
}

/// Parses a file body with one instance per line. Blank lines and lines
/// starting with `#` are skipped.
pub fn parse_instances(text: &str) -> Result<Vec<Instance>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::parse)
        .collect()
}

/// Start time per job (in release order) plus the sorted replenishment set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Solution {
    pub starts: Vec<Time>,
    pub replenishments: Vec<Time>,
}

impl Solution {
    pub fn completion(&self, job: usize) -> Time {
        self.starts[job] + 1
    }
}

/// Cost of a feasible solution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub flow_times: Vec<Time>,
    pub f_max: Time,
    pub repl_count: usize,
    pub repl_cost: Cost,
    pub total: Cost,
}

fn check_replenishments(q: &[Time]) -> Result<()> {
    match q.windows(2).position(|w| w[1] <= w[0]) {
        Some(pos) => Err(ModelError::ReplenishmentsNotIncreasing(pos + 1)),
        None => Ok(()),
    }
}

/// Index of the earliest replenishment `>= release`.
#[inline]
fn first_at_or_after(q: &[Time], release: Time) -> Option<usize> {
    let i = q.partition_point(|&tau| tau < release);
    (i < q.len()).then_some(i)
}

/// Schedules the jobs in release order, each as early as the machine and the
/// earliest replenishment at or after its release allow.
///
/// For a fixed `Q` this minimises every completion time simultaneously.
pub fn asap_schedule(inst: &Instance, q: &[Time]) -> Result<Solution> {
    check_replenishments(q)?;
    let mut starts = Vec::with_capacity(inst.len());
    let mut free = Time::MIN;
    for (job, &r) in inst.releases().iter().enumerate() {
        let tau = first_at_or_after(q, r)
            .map(|i| q[i])
            .ok_or(ModelError::InfeasibleReplenishments { job })?;
        let start = tau.max(free);
        starts.push(start);
        free = start.checked_add(1).ok_or(ModelError::Overflow("completion time"))?;
    }
    Ok(Solution {
        starts,
        replenishments: q.to_vec(),
    })
}

/// Checks feasibility of `sol` for `inst` and returns its cost breakdown.
pub fn evaluate(inst: &Instance, sol: &Solution) -> Result<CostBreakdown> {
    let n = inst.len();
    if sol.starts.len() != n {
        return Err(ModelError::LengthMismatch {
            starts: sol.starts.len(),
            jobs: n,
        });
    }
    let q = &sol.replenishments;
    check_replenishments(q)?;

    let mut flow_times = Vec::with_capacity(n);
    for (job, (&r, &start)) in inst.releases().iter().zip(&sol.starts).enumerate() {
        if start < r {
            return Err(ModelError::StartBeforeRelease { job, start, release: r });
        }
        match first_at_or_after(q, r) {
            Some(i) if q[i] <= start => {}
            _ => return Err(ModelError::Uncovered { job, release: r, start }),
        }
        let flow = start
            .checked_add(1)
            .and_then(|c| c.checked_sub(r))
            .ok_or(ModelError::Overflow("flow time"))?;
        flow_times.push(flow);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&j| (sol.starts[j], j));
    for w in order.windows(2) {
        if sol.starts[w[1]] < sol.starts[w[0]] + 1 {
            return Err(ModelError::Overlap { job: w[1], other: w[0] });
        }
    }

    let f_max = flow_times.iter().copied().max().unwrap_or(0);
    let repl_count = q.len();
    let repl_cost = inst
        .k()
        .checked_mul(repl_count as Cost)
        .ok_or(ModelError::Overflow("replenishment cost"))?;
    let total = repl_cost.checked_add(f_max).ok_or(ModelError::Overflow("total cost"))?;
    Ok(CostBreakdown {
        flow_times,
        f_max,
        repl_count,
        repl_cost,
        total,
    })
}

/// Jobs with arbitrary processing times. Only used to express the
/// equivalence between duplicate unit releases and longer jobs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneralInstance {
    /// `(release, processing_time)` with strictly increasing releases.
    pub jobs: Vec<(Time, u64)>,
}

/// Merges every group of equal unit releases `t` into one job `(t, |group|)`.
pub fn to_general(releases: &[Time]) -> GeneralInstance {
    let mut sorted = releases.to_vec();
    sorted.sort_unstable();
    let mut jobs: Vec<(Time, u64)> = Vec::new();
    for r in sorted {
        match jobs.last_mut() {
            Some((t, p)) if *t == r => *p += 1,
            _ => jobs.push((r, 1)),
        }
    }
    GeneralInstance { jobs }
}

/// Expands each job into `p_j` unit jobs released at `r_j`.
pub fn to_unit(gen: &GeneralInstance) -> Vec<Time> {
    gen.jobs
        .iter()
        .flat_map(|&(r, p)| std::iter::repeat_n(r, p as usize))
        .collect()
}

/// Returns the dense (every integer) and the `p`-regular inputs spanning the
/// same interval `[t_min, t]` as `inst`.
///
/// The dense input's optimum is never below that of `inst`. The `p`-regular
/// one is not a lower bound in general: `[1,4,7,9,11,13,16,19]` with `K = 3`,
/// `p = 3` costs 15 while its regular counterpart costs 16.
pub fn bracket_inputs(inst: &Instance, p: Time) -> Result<(Instance, Instance)> {
    if p < 1 {
        return Err(ModelError::InvalidBound(p));
    }
    if let Some((index, gap)) = inst
        .releases()
        .windows(2)
        .map(|w| w[1] - w[0])
        .enumerate()
        .find(|&(_, g)| g > p)
    {
        return Err(ModelError::NotPBounded { index, gap, p });
    }
    let (lo, hi) = (inst.first_release(), inst.last_release());
    let dense = Instance::new((lo..=hi).collect(), inst.k())?;
    let sparse = Instance::new((lo..=hi).step_by(p as usize).collect(), inst.k())?;
    Ok((dense, sparse))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(r: &[Time], k: Cost) -> Instance {
        validate_instance(r, k).unwrap()
    }

    #[test]
    fn validation_errors_are_distinct() {
        assert!(validate_instance(&[0, 5], 3).is_ok());
        assert_eq!(validate_instance(&[], 1), Err(ModelError::Empty));
        assert!(matches!(
            validate_instance(&[0, 0], 1),
            Err(ModelError::DuplicateRelease { index: 1, .. })
        ));
        assert!(matches!(
            validate_instance(&[3, 1], 1),
            Err(ModelError::NotIncreasing { index: 1, .. })
        ));
        assert_eq!(validate_instance(&[0], 0), Err(ModelError::InvalidCost(0)));
        assert!(matches!(
            validate_instance(&[-1, 2], 1),
            Err(ModelError::NegativeRelease { index: 0, .. })
        ));
        assert!(matches!(
            validate_instance(&[0, i64::MAX], 1),
            Err(ModelError::Overflow(_))
        ));
    }

    #[test]
    fn asap_examples() {
        let sol = asap_schedule(&inst(&[0, 3, 4], 1), &[4]).unwrap();
        assert_eq!(sol.starts, vec![4, 5, 6]);
        let c = evaluate(&inst(&[0, 3, 4], 1), &sol).unwrap();
        assert_eq!(c.flow_times, vec![5, 3, 3]);
        assert_eq!(c.f_max, 5);

        let sol = asap_schedule(&inst(&[0, 5], 1), &[0, 5]).unwrap();
        assert_eq!(sol.starts, vec![0, 5]);
        assert_eq!(evaluate(&inst(&[0, 5], 1), &sol).unwrap().f_max, 1);

        let sol = asap_schedule(&inst(&[0, 5], 1), &[5]).unwrap();
        assert_eq!(sol.starts, vec![5, 6]);
        let c = evaluate(&inst(&[0, 5], 1), &sol).unwrap();
        assert_eq!(c.f_max, 6);
        assert_eq!(c.flow_times, vec![6, 2]);
    }

    #[test]
    fn asap_rejects_uncovered_and_unsorted() {
        assert_eq!(
            asap_schedule(&inst(&[0, 5], 1), &[0]),
            Err(ModelError::InfeasibleReplenishments { job: 1 })
        );
        assert_eq!(
            asap_schedule(&inst(&[0, 5], 1), &[5, 5]),
            Err(ModelError::ReplenishmentsNotIncreasing(1))
        );
    }

    #[test]
    fn evaluate_examples() {
        let i = inst(&[0, 5], 3);
        let total = |starts: Vec<Time>, q: Vec<Time>| {
            evaluate(
                &i,
                &Solution {
                    starts,
                    replenishments: q,
                },
            )
            .map(|c| c.total)
        };
        assert_eq!(total(vec![0, 5], vec![0, 5]), Ok(7));
        assert_eq!(total(vec![5, 6], vec![5]), Ok(9));
        let single = inst(&[0], 1);
        let c = evaluate(
            &single,
            &Solution {
                starts: vec![0],
                replenishments: vec![0],
            },
        )
        .unwrap();
        assert_eq!(c.total, 2);
    }

    #[test]
    fn evaluate_reports_offending_job() {
        let i = inst(&[0, 1, 5], 1);
        let sol = |starts: Vec<Time>, q: Vec<Time>| Solution {
            starts,
            replenishments: q,
        };
        assert_eq!(
            evaluate(&i, &sol(vec![1, 1, 5], vec![1, 5])),
            Err(ModelError::Overlap { job: 1, other: 0 })
        );
        assert!(matches!(
            evaluate(&i, &sol(vec![0, 1, 4], vec![0, 1, 4])),
            Err(ModelError::StartBeforeRelease { job: 2, .. })
        ));
        assert!(matches!(
            evaluate(&i, &sol(vec![0, 1, 6], vec![0, 1])),
            Err(ModelError::Uncovered { job: 2, .. })
        ));
        assert!(matches!(
            evaluate(&i, &sol(vec![0, 1], vec![0, 1])),
            Err(ModelError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn general_round_trip() {
        assert_eq!(to_general(&[0, 0, 0, 4]).jobs, vec![(0, 3), (4, 1)]);
        assert_eq!(to_unit(&GeneralInstance { jobs: vec![(2, 1)] }), vec![2]);
        let g = to_general(&[1, 1, 5, 5, 5]);
        assert_eq!(g.jobs, vec![(1, 2), (5, 3)]);
        assert_eq!(to_unit(&g), vec![1, 1, 5, 5, 5]);
    }

    #[test]
    fn bracket_examples() {
        let (d, r) = bracket_inputs(&inst(&[0, 2, 3, 6], 2), 3).unwrap();
        assert_eq!(d.releases(), &[0, 1, 2, 3, 4, 5, 6]);
        assert_eq!(r.releases(), &[0, 3, 6]);
        assert_eq!(d.k(), 2);

        let (d, r) = bracket_inputs(&inst(&[0], 1), 1).unwrap();
        assert_eq!(d.releases(), &[0]);
        assert_eq!(r.releases(), &[0]);

        assert_eq!(
            bracket_inputs(&inst(&[0, 5], 1), 3),
            Err(ModelError::NotPBounded { index: 0, gap: 5, p: 3 })
        );
    }

    #[test]
    fn text_format() {
        let i: Instance = "3;0,5".parse().unwrap();
        assert_eq!(i, inst(&[0, 5], 3));
        assert_eq!(i.to_string(), "3;0,5");
        assert!("3;0,0".parse::<Instance>().is_err());
        assert!("x;0".parse::<Instance>().is_err());
        assert!("0,1".parse::<Instance>().is_err());
        let all = parse_instances("# header\n1;0,1\n\n2;4\n").unwrap();
        assert_eq!(all.len(), 2);
    }

    #[test]
    fn class_predicates() {
        assert!(inst(&[0, 2, 4], 1).is_p_regular(2));
        assert!(!inst(&[0, 2, 5], 1).is_p_regular(2));
        assert!(inst(&[0, 2, 6], 2).is_sparse());
        assert!(!inst(&[0, 2, 5], 2).is_sparse());
        assert!(inst(&[0, 2, 5], 2).is_p_bounded(3));
        assert_eq!(inst(&[0, 2, 5], 2).max_gap(), 3);
    }
}
