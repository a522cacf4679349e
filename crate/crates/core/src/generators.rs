//! Seeded instance generators.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`) seeded with
//! `SeedableRng::seed_from_u64`. Uniform reals are `rand`'s 53-bit `Standard`
//! draw, and logarithms go through `libm`, so a given seed yields the same
//! releases on every platform.
//!
//! Geometric gaps use inverse-CDF sampling with one uniform draw each:
//! `X = max(1, ceil(ln(U) / ln(1 - beta)))` with `U` in `(0, 1]`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Cost, Instance, ModelError, Time};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("beta must lie in (0, 1), got {0}")]
    InvalidBeta(f64),
    #[error("{0} must be at least 1")]
    NonPositive(&'static str),
    #[error("sparse slack needs {expected} entries, got {got}")]
    SlackLength { expected: usize, got: usize },
    #[error("kind {kind} requires parameter {param}")]
    MissingParameter { kind: GenKind, param: &'static str },
    #[error("release dates overflow")]
    Overflow,
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T, E = GenError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenKind {
    Regular,
    Pregular,
    Sparse,
    PboundedUniform,
    Geometric,
}

impl GenKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GenKind::Regular => "regular",
            GenKind::Pregular => "pregular",
            GenKind::Sparse => "sparse",
            GenKind::PboundedUniform => "pbounded_uniform",
            GenKind::Geometric => "geometric",
        }
    }

    /// Whether the generator consumes the seed.
    pub fn is_random(self) -> bool {
        matches!(self, GenKind::PboundedUniform | GenKind::Geometric)
    }
}

impl fmt::Display for GenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GenKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "regular" => Ok(GenKind::Regular),
            "pregular" => Ok(GenKind::Pregular),
            "sparse" => Ok(GenKind::Sparse),
            "pbounded_uniform" => Ok(GenKind::PboundedUniform),
            "geometric" => Ok(GenKind::Geometric),
            other => Err(format!("unknown generator kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub kind: GenKind,
    pub n: usize,
    pub p: Option<Time>,
    pub k: Cost,
    pub beta: Option<f64>,
    pub seed: u64,
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(GenError::NonPositive("n"));
        }
        if self.k < 1 {
            return Err(GenError::NonPositive("K"));
        }
        match self.kind {
            GenKind::Pregular | GenKind::PboundedUniform => {
                let p = self.p.ok_or(GenError::MissingParameter {
                    kind: self.kind,
                    param: "p",
                })?;
                if p < 1 {
                    return Err(GenError::NonPositive("p"));
                }
            }
            GenKind::Geometric => {
                let beta = self.beta.ok_or(GenError::MissingParameter {
                    kind: self.kind,
                    param: "beta",
                })?;
                check_beta(beta)?;
            }
            GenKind::Regular | GenKind::Sparse => {}
        }
        Ok(())
    }

    /// Builds the instance described by this spec. Sparse inputs use zero
    /// slack.
    pub fn generate(&self) -> Result<Instance> {
        self.validate()?;
        let releases = match self.kind {
            GenKind::Regular => gen_pregular(self.n, 1)?,
            GenKind::Pregular => gen_pregular(self.n, self.p.unwrap())?,
            GenKind::Sparse => gen_sparse(self.n, self.k, &vec![0; self.n - 1])?,
            GenKind::PboundedUniform => gen_pbounded_uniform(self.n, self.p.unwrap(), self.seed)?,
            GenKind::Geometric => gen_geometric(self.n, self.beta.unwrap(), self.seed)?,
        };
        Ok(Instance::new(releases, self.k)?)
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(GenError::InvalidBeta(beta))
    }
}

/// Per-instance seed derived from a master seed and an instance index
/// (SplitMix64 finaliser over `master + (index + 1) * golden_gamma`).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `0, p, 2p, ..., (n-1)p`.
pub fn gen_pregular(n: usize, p: Time) -> Result<Vec<Time>> {
    if p < 1 {
        return Err(GenError::NonPositive("p"));
    }
    (0..n as Time)
        .map(|j| j.checked_mul(p).ok_or(GenError::Overflow))
        .collect()
}

/// `r_1 = 0`, `r_{j+1} = r_j + K j + slack_j`.
pub fn gen_sparse(n: usize, k: Cost, slack: &[Time]) -> Result<Vec<Time>> {
    if n < 1 {
        return Err(GenError::NonPositive("n"));
    }
    if slack.len() != n - 1 {
        return Err(GenError::SlackLength {
            expected: n - 1,
            got: slack.len(),
        });
    }
    let mut out = Vec::with_capacity(n);
    let mut r: Time = 0;
    out.push(r);
    for (j, &s) in slack.iter().enumerate() {
        let step = k
            .checked_mul(j as Time + 1)
            .and_then(|x| x.checked_add(s.max(0)))
            .ok_or(GenError::Overflow)?;
        r = r.checked_add(step).ok_or(GenError::Overflow)?;
        out.push(r);
    }
    Ok(out)
}

/// Starts at 0 with gaps drawn uniformly from `1..=p`.
pub fn gen_pbounded_uniform(n: usize, p: Time, seed: u64) -> Result<Vec<Time>> {
    if p < 1 {
        return Err(GenError::NonPositive("p"));
    }
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(n);
    let mut r: Time = 0;
    for j in 0..n {
        if j > 0 {
            r = r.checked_add(rng.gen_range(1..=p)).ok_or(GenError::Overflow)?;
        }
        out.push(r);
    }
    Ok(out)
}

/// One geometric gap on `{1, 2, ...}` with success probability `beta`.
pub fn geometric_gap<R: Rng>(rng: &mut R, log_q: f64) -> Time {
    let u = 1.0 - rng.gen::<f64>();
    let x = libm::ceil(libm::log(u) / log_q);
    if x < 1.0 {
        1
    } else if x >= Time::MAX as f64 {
        Time::MAX
    } else {
        x as Time
    }
}

/// `r_j = X_1 + ... + X_j` with i.i.d. geometric gaps, so `r_1 >= 1`.
pub fn gen_geometric(n: usize, beta: f64, seed: u64) -> Result<Vec<Time>> {
    check_beta(beta)?;
    let log_q = libm::log1p(-beta);
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(n);
    let mut r: Time = 0;
    for _ in 0..n {
        r = r
            .checked_add(geometric_gap(&mut rng, log_q))
            .ok_or(GenError::Overflow)?;
        out.push(r);
    }
    Ok(out)
}
