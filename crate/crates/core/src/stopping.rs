//! Self-stopping doubling searches for the edge count and the ℓ²-mixing time.
//!
//! Both algorithms run rounds `q = 0, 1, 2, ...`. Round `q` performs `R_q`
//! independent experiments and stops when strictly more than half succeed.
//! Experiment `r` of round `q` draws its walks from the master seed
//! `derive_seed(derive_seed(seed, q), r)`, so any round can be replayed alone.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimators::{pair_counts, EstimateError};
use crate::intersections::{profile_pairwise_weighted, IntersectError, WindowSpec};
use crate::walk::{derive_seed, WalkError, WalkSource};

pub const DEFAULT_K: usize = 32;
pub const DEFAULT_C: f64 = 4.0;
pub const DEFAULT_MAX_Q: u32 = 60;

/// Recorded in output metadata.
pub const LOG_BASE: &str = "natural";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StoppingError {
    #[error("no stop after {max_q} rounds")]
    RoundBudgetExhausted { max_q: u32 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("replay of round {q} gave {replayed} successes, log has {logged}")]
    ReplayMismatch {
        q: u32,
        logged: usize,
        replayed: usize,
    },
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Intersect(#[from] IntersectError),
}

/// `R_q = ⌈8 ln(4/ε) + 16 ln(q+1)⌉`.
pub fn repetitions(q: u32, eps: f64) -> usize {
    (8.0 * (4.0 / eps).ln() + 16.0 * ((q + 1) as f64).ln()).ceil() as usize
}

/// `t_q = ⌈τ^{3/4} √(2 · 2^q)⌉`.
pub fn edges_walk_length(tau: usize, q: u32) -> usize {
    ((tau as f64).powf(0.75) * (2.0 * 2f64.powi(q as i32)).sqrt()).ceil() as usize
}

/// `18 τ^{3/2}`.
pub fn edges_success_threshold(tau: usize) -> f64 {
    18.0 * (tau as f64).powf(1.5)
}

/// `K_q = ⌈C δ⁻² ⌈√m t^{−1/4}⌉⌉`.
pub fn mixing_walk_count(c: f64, delta: f64, m: usize, t: usize) -> usize {
    let inner = ((m as f64).sqrt() / (t as f64).powf(0.25)).ceil();
    (c / (delta * delta) * inner).ceil() as usize
}

/// `(1 + δ/2) t² / 2m`.
pub fn mixing_success_threshold(delta: f64, t: usize, m: usize) -> f64 {
    (1.0 + delta / 2.0) * (t * t) as f64 / (2.0 * m as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum StoppingParams {
    Edges {
        x: usize,
        tau: usize,
        eps: f64,
        #[serde(rename = "K")]
        k: usize,
        max_q: u32,
    },
    Mixing {
        x: usize,
        m: usize,
        delta: f64,
        eps: f64,
        #[serde(rename = "C")]
        c: f64,
        max_q: u32,
    },
}

impl StoppingParams {
    fn validate(&self) -> Result<(), StoppingError> {
        let bad = |m: &str| Err(StoppingError::InvalidParameter(m.into()));
        let in_unit = |v: f64| v > 0.0 && v < 1.0;
        match *self {
            StoppingParams::Edges { tau, eps, k, .. } => {
                if tau == 0 {
                    return bad("tau must be at least 1");
                }
                if !in_unit(eps) {
                    return bad("eps must lie in (0, 1)");
                }
                if k == 0 {
                    return bad("K must be at least 1");
                }
            }
            StoppingParams::Mixing {
                m, delta, eps, c, ..
            } => {
                if m == 0 {
                    return bad("m must be at least 1");
                }
                if !in_unit(delta) || !in_unit(eps) {
                    return bad("delta and eps must lie in (0, 1)");
                }
                if !(c > 0.0 && c.is_finite()) {
                    return bad("C must be positive");
                }
            }
        }
        Ok(())
    }

    fn max_q(&self) -> u32 {
        match *self {
            StoppingParams::Edges { max_q, .. } | StoppingParams::Mixing { max_q, .. } => max_q,
        }
    }

    fn eps(&self) -> f64 {
        match *self {
            StoppingParams::Edges { eps, .. } | StoppingParams::Mixing { eps, .. } => eps,
        }
    }
}

/// One round of a doubling search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub q: u32,
    /// `t_q` for the edge search; `2^q` for the mixing search.
    pub t: usize,
    /// Walk pairs per experiment (edges) or walks per experiment (mixing).
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "R")]
    pub r: usize,
    pub threshold: f64,
    /// `𝓠_t` or `𝓛_t` of each experiment, in experiment order.
    pub statistics: Vec<f64>,
    pub successes: usize,
    pub stopped: bool,
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppingLog {
    pub params: StoppingParams,
    pub seed: u64,
    pub rounds: Vec<Round>,
    /// `2^q` of the stopping round.
    pub final_value: u64,
    pub total_steps: u64,
}

impl StoppingLog {
    /// Rounds are `0, 1, ...`, only the last is a stop and the step total adds up.
    pub fn is_consistent(&self) -> bool {
        let ordered = self
            .rounds
            .iter()
            .enumerate()
            .all(|(i, r)| r.q as usize == i);
        let stops = self.rounds.iter().filter(|r| r.stopped).count();
        let last = self.rounds.last().is_some_and(|r| r.stopped);
        let steps: u64 = self.rounds.iter().map(|r| r.steps).sum();
        ordered
            && stops == 1
            && last
            && steps == self.total_steps
            && self.final_value == 1u64 << (self.rounds.len() - 1)
    }
}

/// Strict majority: a tie does not stop.
pub fn majority(successes: usize, r: usize) -> bool {
    2 * successes > r
}

/// Successes among `statistics`: `≥ threshold` for edges, `≤` for mixing.
pub fn count_successes(params: &StoppingParams, statistics: &[f64], threshold: f64) -> usize {
    match params {
        StoppingParams::Edges { .. } => statistics.iter().filter(|&&s| s >= threshold).count(),
        StoppingParams::Mixing { .. } => statistics.iter().filter(|&&s| s <= threshold).count(),
    }
}

/// Algorithm for the edge count: returns `2^q` with its log.
pub fn selfstop_edges<S: WalkSource + ?Sized>(
    src: &S,
    x: usize,
    tau: usize,
    eps: f64,
    k: usize,
    seed: u64,
) -> Result<(u64, StoppingLog), StoppingError> {
    let params = StoppingParams::Edges {
        x,
        tau,
        eps,
        k,
        max_q: DEFAULT_MAX_Q,
    };
    let log = run(src, &params, seed)?;
    Ok((log.final_value, log))
}

/// Algorithm for the ℓ²-mixing time from `x`, given the edge count `m`.
pub fn selfstop_mixing<S: WalkSource + ?Sized>(
    src: &S,
    x: usize,
    m: usize,
    delta: f64,
    eps: f64,
    c: f64,
    seed: u64,
) -> Result<(u64, StoppingLog), StoppingError> {
    let params = StoppingParams::Mixing {
        x,
        m,
        delta,
        eps,
        c,
        max_q: DEFAULT_MAX_Q,
    };
    let log = run(src, &params, seed)?;
    Ok((log.final_value, log))
}

/// Runs either algorithm to completion.
pub fn run<S: WalkSource + ?Sized>(
    src: &S,
    params: &StoppingParams,
    seed: u64,
) -> Result<StoppingLog, StoppingError> {
    params.validate()?;
    let mut rounds = Vec::new();
    for q in 0..=params.max_q() {
        let round = run_round(src, params, seed, q)?;
        let stopped = round.stopped;
        rounds.push(round);
        if stopped {
            let total_steps = rounds.iter().map(|r| r.steps).sum();
            return Ok(StoppingLog {
                params: params.clone(),
                seed,
                rounds,
                final_value: 1u64 << q,
                total_steps,
            });
        }
    }
    Err(StoppingError::RoundBudgetExhausted {
        max_q: params.max_q(),
    })
}

/// Round `q` on its own.
pub fn run_round<S: WalkSource + ?Sized>(
    src: &S,
    params: &StoppingParams,
    seed: u64,
    q: u32,
) -> Result<Round, StoppingError> {
    let r = repetitions(q, params.eps());
    let round_seed = derive_seed(seed, q as u64);
    let (t, k, threshold, walk_len, walks) = match *params {
        StoppingParams::Edges { tau, k, .. } => {
            let t = edges_walk_length(tau, q);
            (t, k, edges_success_threshold(tau), t, 2 * k)
        }
        StoppingParams::Mixing { m, delta, c, .. } => {
            let t = 1usize << q;
            let k = mixing_walk_count(c, delta, m, t);
            (t, k, mixing_success_threshold(delta, t, m), 2 * t, k)
        }
    };
    let statistics = (0..r)
        .into_par_iter()
        .map(|e| experiment(src, params, derive_seed(round_seed, e as u64), t, k))
        .collect::<Result<Vec<f64>, StoppingError>>()?;
    let successes = count_successes(params, &statistics, threshold);
    Ok(Round {
        q,
        t,
        k,
        r,
        threshold,
        statistics,
        successes,
        stopped: majority(successes, r),
        steps: (r * walks * walk_len) as u64,
    })
}

fn experiment<S: WalkSource + ?Sized>(
    src: &S,
    params: &StoppingParams,
    master: u64,
    t: usize,
    k: usize,
) -> Result<f64, StoppingError> {
    match *params {
        StoppingParams::Edges { x, .. } => {
            let counts = pair_counts(src, x, WindowSpec::prefix(t)?, k, master)?;
            Ok(counts.weighted.iter().sum::<f64>() / k as f64)
        }
        StoppingParams::Mixing { x, .. } => {
            if k < 2 {
                return Err(StoppingError::InvalidParameter(
                    "mixing search needs at least two walks per experiment".into(),
                ));
            }
            let seeds: Vec<u64> = (0..k as u64).map(|i| derive_seed(master, i)).collect();
            let profile = src.profile(x, 2 * t, &seeds)?;
            Ok(profile_pairwise_weighted(
                &profile,
                WindowSpec::new(t, 2 * t)?,
            )?)
        }
    }
}

/// Re-runs every logged round and checks the success counts.
pub fn replay<S: WalkSource + ?Sized>(src: &S, log: &StoppingLog) -> Result<(), StoppingError> {
    for logged in &log.rounds {
        let again = run_round(src, &log.params, log.seed, logged.q)?;
        if again.successes != logged.successes || again.statistics != logged.statistics {
            return Err(StoppingError::ReplayMismatch {
                q: logged.q,
                logged: logged.successes,
                replayed: again.successes,
            });
        }
    }
    Ok(())
}
