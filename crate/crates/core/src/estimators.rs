//! Fixed-horizon estimators of the vertex and edge counts.
//!
//! Estimators only ever see walk [`Profile`]s obtained through a
//! [`WalkSource`]; vertex identities are never exposed to them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intersections::{profile_pair_counts, IntersectError, WindowSpec};
use crate::walk::{derive_seed, Profile, WalkError, WalkSource};

/// Number of walk pairs used when the caller does not choose.
pub const DEFAULT_PAIRS: usize = 400;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("no intersections observed with t = {t} over {pairs} pairs; increase t or K")]
    InsufficientT { t: usize, pairs: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("walks visited vertices of different degrees; the graph is not regular")]
    NotRegular,
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Intersect(#[from] IntersectError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Mean of the per-pair statistic the estimate is built from.
    pub mean_intersections: f64,
    /// Unbiased sample variance of that statistic.
    pub sample_variance: f64,
    pub burn_in: Option<usize>,
    /// Positions simulated per walk.
    pub steps_per_walk: usize,
    pub total_steps: u64,
    /// Time average of `1/deg` along the walk (vertex estimator from the mean degree).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_inverse_degree: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub value: f64,
    pub t: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub seed: u64,
    pub diagnostics: Diagnostics,
}

/// Per-pair intersection counts of `pairs` independent walk pairs from `x`
/// on the window `[lo, hi)`.
///
/// Pair `i` uses seeds `derive_seed(seed, 2i)` and `derive_seed(seed, 2i + 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCounts {
    pub plain: Vec<u64>,
    pub weighted: Vec<f64>,
    /// Degree seen at every visited position, if it was the same everywhere.
    pub common_degree: Option<u32>,
}

pub fn pair_counts<S: WalkSource + ?Sized>(
    src: &S,
    x: usize,
    window: WindowSpec,
    pairs: usize,
    seed: u64,
) -> Result<PairCounts, EstimateError> {
    use rayon::prelude::*;
    if pairs == 0 {
        return Err(EstimateError::InvalidParameter(
            "K must be at least 1".into(),
        ));
    }
    let per_pair: Vec<(u64, f64, Option<u32>)> = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let seeds = [
                derive_seed(seed, 2 * i as u64),
                derive_seed(seed, 2 * i as u64 + 1),
            ];
            let profile = src.profile(x, window.hi, &seeds)?;
            let (plain, weighted) = profile_pair_counts(&profile, 0, 1, window)?;
            Ok((plain, weighted, profile.common_degree()))
        })
        .collect::<Result<_, EstimateError>>()?;
    let first = per_pair[0].2;
    let common_degree = first.filter(|_| per_pair.iter().all(|p| p.2 == first));
    Ok(PairCounts {
        plain: per_pair.iter().map(|p| p.0).collect(),
        weighted: per_pair.iter().map(|p| p.1).collect(),
        common_degree,
    })
}

/// Mean and unbiased sample variance, summed in index order.
pub fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

fn check_params(t: usize, k: usize) -> Result<(), EstimateError> {
    if t == 0 {
        return Err(EstimateError::InvalidParameter(
            "t must be at least 1".into(),
        ));
    }
    if k == 0 {
        return Err(EstimateError::InvalidParameter(
            "K must be at least 1".into(),
        ));
    }
    Ok(())
}

/// `n̂_t = t² / mean I_t` on a regular graph.
pub fn estimate_vertices_regular<S: WalkSource + ?Sized>(
    src: &S,
    x: usize,
    t: usize,
    k: usize,
    seed: u64,
) -> Result<EstimateResult, EstimateError> {
    check_params(t, k)?;
    let counts = pair_counts(src, x, WindowSpec::prefix(t)?, k, seed)?;
    if counts.common_degree.is_none() {
        return Err(EstimateError::NotRegular);
    }
    let plain: Vec<f64> = counts.plain.iter().map(|&c| c as f64).collect();
    let (mean, var) = mean_and_variance(&plain);
    if mean == 0.0 {
        return Err(EstimateError::InsufficientT { t, pairs: k });
    }
    Ok(EstimateResult {
        value: vertices_from_mean(t, mean),
        t,
        k,
        seed,
        diagnostics: Diagnostics {
            mean_intersections: mean,
            sample_variance: var,
            burn_in: None,
            steps_per_walk: t,
            total_steps: (2 * k * t) as u64,
            mean_inverse_degree: None,
        },
    })
}

/// `t² / mean`.
pub fn vertices_from_mean(t: usize, mean: f64) -> f64 {
    (t * t) as f64 / mean
}

/// `t² / (2 · mean)`.
pub fn edges_from_mean(t: usize, mean: f64) -> f64 {
    (t * t) as f64 / (2.0 * mean)
}

/// `m̂_t = t² / (2 · mean 𝓘_t)`.
pub fn estimate_edges<S: WalkSource + ?Sized>(
    src: &S,
    x: usize,
    t: usize,
    k: usize,
    seed: u64,
) -> Result<EstimateResult, EstimateError> {
    estimate_edges_window(src, x, t, k, 0, seed)
}

/// `m̃_t = t² / (2 · mean 𝓙_t)`, counting only from `burn_in` onwards.
pub fn estimate_edges_burnin<S: WalkSource + ?Sized>(
    src: &S,
    x: usize,
    t: usize,
    k: usize,
    burn_in: usize,
    seed: u64,
) -> Result<EstimateResult, EstimateError> {
    let mut r = estimate_edges_window(src, x, t, k, burn_in, seed)?;
    r.diagnostics.burn_in = Some(burn_in);
    Ok(r)
}

fn estimate_edges_window<S: WalkSource + ?Sized>(
    src: &S,
    x: usize,
    t: usize,
    k: usize,
    burn_in: usize,
    seed: u64,
) -> Result<EstimateResult, EstimateError> {
    check_params(t, k)?;
    let counts = pair_counts(src, x, WindowSpec::new(burn_in, burn_in + t)?, k, seed)?;
    let (mean, var) = mean_and_variance(&counts.weighted);
    if mean == 0.0 {
        return Err(EstimateError::InsufficientT { t, pairs: k });
    }
    Ok(EstimateResult {
        value: edges_from_mean(t, mean),
        t,
        k,
        seed,
        diagnostics: Diagnostics {
            mean_intersections: mean,
            sample_variance: var,
            burn_in: None,
            steps_per_walk: burn_in + t,
            total_steps: (2 * k * (burn_in + t)) as u64,
            mean_inverse_degree: None,
        },
    })
}

/// `n̂ = 2 m̂ · (1/t) Σ_{s<t} 1/deg(X_{r+s})` along one walk from `x`,
/// which uses seed `derive_seed(seed, 0)`.
pub fn estimate_vertices_general<S: WalkSource + ?Sized>(
    src: &S,
    x: usize,
    m_hat: f64,
    burn_in: usize,
    t: usize,
    seed: u64,
) -> Result<EstimateResult, EstimateError> {
    if !(m_hat > 0.0 && m_hat.is_finite()) {
        return Err(EstimateError::InvalidParameter(format!(
            "m_hat must be positive, got {m_hat}"
        )));
    }
    check_params(t, 1)?;
    let profile = src.profile(x, burn_in + t, &[derive_seed(seed, 0)])?;
    let avg = mean_inverse_degree(&profile, burn_in, burn_in + t);
    Ok(EstimateResult {
        value: 2.0 * m_hat * avg,
        t,
        k: 1,
        seed,
        diagnostics: Diagnostics {
            mean_intersections: 0.0,
            sample_variance: 0.0,
            burn_in: Some(burn_in),
            steps_per_walk: burn_in + t,
            total_steps: (burn_in + t) as u64,
            mean_inverse_degree: Some(avg),
        },
    })
}

fn mean_inverse_degree(profile: &Profile, lo: usize, hi: usize) -> f64 {
    let sum: f64 = profile.degrees[lo..hi]
        .iter()
        .map(|&d| 1.0 / d as f64)
        .sum();
    sum / (hi - lo) as f64
}

/// `⌈2√6 · t_rel^{3/4} √n⌉`.
pub fn vertices_threshold(t_rel: usize, n: usize) -> usize {
    (2.0 * 6f64.sqrt() * (t_rel as f64).powf(0.75) * (n as f64).sqrt()).ceil() as usize
}

/// `⌈4√3 · t_rel^{3/4} √(m/d)⌉`.
pub fn edges_threshold(t_rel: usize, m: usize, d: usize) -> usize {
    (4.0 * 3f64.sqrt() * (t_rel as f64).powf(0.75) * (m as f64 / d as f64).sqrt()).ceil() as usize
}

/// `⌈16 Var_π f / (ε (E_π f)²) · t_rel⌉` for `f = 1/deg`.
pub fn mean_degree_horizon(degrees: &[usize], t_rel: usize, eps: f64) -> usize {
    let two_m: usize = degrees.iter().sum();
    let pi = |d: usize| d as f64 / two_m as f64;
    let mean: f64 = degrees.iter().map(|&d| pi(d) / d as f64).sum();
    let second: f64 = degrees.iter().map(|&d| pi(d) / (d * d) as f64).sum();
    let var = second - mean * mean;
    (16.0 * var / (eps * mean * mean) * t_rel as f64).ceil() as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_barbell, gen_clique_with_paths, gen_complete, gen_cycle};
    use crate::intersections::count_intersections;
    use crate::walk::simulate_lazy_walk;

    #[test]
    fn direct_formulas() {
        assert_eq!(vertices_from_mean(10, 2.0), 50.0);
        assert_eq!(edges_from_mean(12, 1.5), 48.0);
        // doubling t quadruples the numerator
        assert_eq!(
            vertices_from_mean(20, 2.0),
            4.0 * vertices_from_mean(10, 2.0)
        );
    }

    #[test]
    fn pair_counts_follow_the_seed_contract() {
        let g = gen_cycle(10).unwrap();
        let counts = pair_counts(&g, 3, WindowSpec::prefix(40).unwrap(), 5, 99).unwrap();
        for i in 0..5u64 {
            let a = simulate_lazy_walk(&g, 3, 40, derive_seed(99, 2 * i)).unwrap();
            let b = simulate_lazy_walk(&g, 3, 40, derive_seed(99, 2 * i + 1)).unwrap();
            let c = count_intersections(&a, &b, WindowSpec::prefix(40).unwrap()).unwrap();
            assert_eq!(counts.plain[i as usize], c);
            assert_eq!(counts.weighted[i as usize], c as f64 / 2.0);
        }
        assert_eq!(counts.common_degree, Some(2));
    }

    #[test]
    fn regular_graph_edges_and_vertices_agree() {
        // m̂ = (d/2) n̂ when both come from the same traces
        let g = gen_complete(6).unwrap();
        let n_hat = estimate_vertices_regular(&g, 0, 30, 50, 5).unwrap();
        let m_hat = estimate_edges(&g, 0, 30, 50, 5).unwrap();
        assert!((m_hat.value - 2.5 * n_hat.value).abs() < 1e-9 * m_hat.value);
    }

    #[test]
    fn burn_in_zero_reduces_to_plain_estimator() {
        let g = gen_barbell(4, 2).unwrap();
        let a = estimate_edges(&g, 1, 25, 40, 8).unwrap();
        let b = estimate_edges_burnin(&g, 1, 25, 40, 0, 8).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(b.diagnostics.burn_in, Some(0));
        let c = estimate_edges_burnin(&g, 1, 25, 40, 7, 8).unwrap();
        assert_eq!(c.diagnostics.steps_per_walk, 32);
        assert_eq!(c.diagnostics.total_steps, 2 * 40 * 32);
    }

    #[test]
    fn irregular_graph_rejected_by_vertex_estimator() {
        let g = gen_barbell(4, 3).unwrap();
        assert_eq!(
            estimate_vertices_regular(&g, 0, 50, 20, 1).unwrap_err(),
            EstimateError::NotRegular
        );
    }

    /// Every position is a fresh vertex, so no two walks ever meet.
    struct Disjoint;

    impl WalkSource for Disjoint {
        fn profile(&self, _: usize, len: usize, seeds: &[u64]) -> Result<Profile, WalkError> {
            let total = len * seeds.len();
            Ok(Profile {
                ranks: (1..=total as u32).collect(),
                degrees: vec![2; total],
                segments: vec![len; seeds.len()],
            })
        }
    }

    #[test]
    fn zero_intersections_is_an_error() {
        assert_eq!(
            estimate_edges(&Disjoint, 0, 5, 3, 1).unwrap_err(),
            EstimateError::InsufficientT { t: 5, pairs: 3 }
        );
        assert_eq!(
            estimate_vertices_regular(&Disjoint, 0, 4, 2, 1).unwrap_err(),
            EstimateError::InsufficientT { t: 4, pairs: 2 }
        );
    }

    #[test]
    fn general_vertex_estimator_on_regular_graph_is_exact() {
        let g = gen_cycle(12).unwrap();
        let r = estimate_vertices_general(&g, 0, 12.0, 3, 50, 1).unwrap();
        assert_eq!(r.value, 12.0);
        assert_eq!(r.diagnostics.mean_inverse_degree, Some(0.5));
        assert!(estimate_vertices_general(&g, 0, 0.0, 3, 50, 1).is_err());
    }

    #[test]
    fn stationary_mean_of_inverse_degree() {
        for g in [
            gen_barbell(4, 4).unwrap(),
            gen_clique_with_paths(5, 3).unwrap(),
            gen_cycle(9).unwrap(),
        ] {
            let pi = g.stationary_measure().weights();
            let mean: f64 = (0..g.vertex_count())
                .map(|u| pi[u] / g.degree(u) as f64)
                .sum();
            let expect = g.vertex_count() as f64 / (2 * g.edge_count()) as f64;
            assert!((mean - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn thresholds() {
        assert_eq!(vertices_threshold(1, 4), 10);
        assert_eq!(edges_threshold(1, 3, 3), 7);
        assert_eq!(mean_degree_horizon(&[3, 3, 3, 3], 5, 0.5), 0);
    }
}
