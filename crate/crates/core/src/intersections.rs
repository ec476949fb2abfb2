//! Intersection counts between walk trajectories.
//!
//! An intersection is a pair of times `(i, j)` with `X_i = Y_j`, both inside a
//! half-open window `[lo, hi)`. Counts are aggregated through per-vertex visit
//! counts, `Σ_u visits_X(u) · visits_Y(u)`, in `O(window)` time.
//!
//! The weighted variant gives each pair weight `1 / deg(X_i)`. On regular
//! inputs the integer count is divided once at the end.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;
use crate::walk::{Profile, WalkTrace};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IntersectError {
    #[error("window [{lo}, {hi}) is empty")]
    EmptyWindow { lo: usize, hi: usize },
    #[error("window end {hi} exceeds trace length {len}")]
    WindowOutOfBounds { hi: usize, len: usize },
    #[error("traces come from different graphs")]
    GraphMismatch,
    #[error("need at least two traces, got {0}")]
    TooFewTraces(usize),
}

/// Half-open time window `[lo, hi)` applied to both trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub lo: usize,
    pub hi: usize,
}

impl WindowSpec {
    pub fn new(lo: usize, hi: usize) -> Result<Self, IntersectError> {
        if hi <= lo {
            return Err(IntersectError::EmptyWindow { lo, hi });
        }
        Ok(WindowSpec { lo, hi })
    }

    /// `[0, t)`.
    pub fn prefix(t: usize) -> Result<Self, IntersectError> {
        Self::new(0, t)
    }

    pub fn len(&self) -> usize {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }

    fn check(&self, len: usize) -> Result<(), IntersectError> {
        if self.hi > len {
            return Err(IntersectError::WindowOutOfBounds { hi: self.hi, len });
        }
        Ok(())
    }
}

/// Number of visits to each vertex within a window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisitCounts {
    pub window: WindowSpec,
    pub counts: BTreeMap<usize, u64>,
}

impl VisitCounts {
    pub fn from_trace(trace: &WalkTrace, window: WindowSpec) -> Result<Self, IntersectError> {
        window.check(trace.len())?;
        let mut counts = BTreeMap::new();
        for &v in &trace.steps[window.lo..window.hi] {
            *counts.entry(v).or_insert(0) += 1;
        }
        Ok(VisitCounts { window, counts })
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn get(&self, v: usize) -> u64 {
        self.counts.get(&v).copied().unwrap_or(0)
    }

    /// `Σ_u self(u) · other(u)`.
    pub fn dot(&self, other: &VisitCounts) -> u64 {
        let (small, large) = if self.counts.len() <= other.counts.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.counts.iter().map(|(&v, &c)| c * large.get(v)).sum()
    }

    /// `Σ_u self(u) · other(u) / deg(u)`, summed in vertex order.
    pub fn weighted_dot(&self, other: &VisitCounts, g: &Graph) -> f64 {
        if let Some(d) = g.regular_degree() {
            return self.dot(other) as f64 / d as f64;
        }
        self.counts
            .iter()
            .map(|(&v, &c)| (c * other.get(v)) as f64 / g.degree(v) as f64)
            .sum()
    }
}

fn same_graph(x: &WalkTrace, y: &WalkTrace) -> Result<(), IntersectError> {
    if x.graph_fingerprint != y.graph_fingerprint {
        return Err(IntersectError::GraphMismatch);
    }
    Ok(())
}

fn on_graph(x: &WalkTrace, g: &Graph) -> Result<(), IntersectError> {
    if x.graph_fingerprint != g.fingerprint() {
        return Err(IntersectError::GraphMismatch);
    }
    Ok(())
}

/// `I = #{(i, j) ∈ window² : X_i = Y_j}`.
pub fn count_intersections(
    x: &WalkTrace,
    y: &WalkTrace,
    w: WindowSpec,
) -> Result<u64, IntersectError> {
    same_graph(x, y)?;
    let cx = VisitCounts::from_trace(x, w)?;
    let cy = VisitCounts::from_trace(y, w)?;
    Ok(cx.dot(&cy))
}

/// `Σ_{(i, j) ∈ window²} 1{X_i = Y_j} / deg(X_i)`.
pub fn count_weighted_intersections(
    x: &WalkTrace,
    y: &WalkTrace,
    w: WindowSpec,
    g: &Graph,
) -> Result<f64, IntersectError> {
    on_graph(x, g)?;
    on_graph(y, g)?;
    let cx = VisitCounts::from_trace(x, w)?;
    let cy = VisitCounts::from_trace(y, w)?;
    Ok(cx.weighted_dot(&cy, g))
}

/// Weighted intersections over `[burn_in, burn_in + t)`.
pub fn count_j(
    x: &WalkTrace,
    y: &WalkTrace,
    t: usize,
    burn_in: usize,
    g: &Graph,
) -> Result<f64, IntersectError> {
    count_weighted_intersections(x, y, WindowSpec::new(burn_in, burn_in + t)?, g)
}

/// Result of [`count_l_pairwise`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairwiseL {
    /// Average of the weighted window counts over all unordered pairs.
    pub value: f64,
    pub pairs: usize,
    /// Pairs whose two traces are identical (seed reuse).
    pub identical_pairs: usize,
}

/// Average over unordered pairs of weighted intersections on `[t, 2t)`.
pub fn count_l_pairwise(
    traces: &[WalkTrace],
    t: usize,
    g: &Graph,
) -> Result<PairwiseL, IntersectError> {
    if traces.len() < 2 {
        return Err(IntersectError::TooFewTraces(traces.len()));
    }
    let w = WindowSpec::new(t, 2 * t)?;
    let counts = traces
        .iter()
        .map(|tr| {
            on_graph(tr, g)?;
            VisitCounts::from_trace(tr, w)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut sum = 0.0;
    let mut identical = 0;
    for a in 0..traces.len() {
        for b in a + 1..traces.len() {
            sum += counts[a].weighted_dot(&counts[b], g);
            if traces[a].steps == traces[b].steps {
                identical += 1;
            }
        }
    }
    let pairs = traces.len() * (traces.len() - 1) / 2;
    Ok(PairwiseL {
        value: sum / pairs as f64,
        pairs,
        identical_pairs: identical,
    })
}

// Profile kernels. Ranks are dense in `1..=distinct`, so visit counts live in
// plain vectors indexed by rank.

fn rank_counts(ranks: &[u32], lo: usize, hi: usize, size: usize) -> Vec<u32> {
    let mut c = vec![0u32; size];
    for &r in &ranks[lo..hi] {
        c[r as usize] += 1;
    }
    c
}

/// Unweighted and weighted intersections between segments `a` and `b` of a
/// profile, over `window` measured within each segment.
pub fn profile_pair_counts(
    profile: &Profile,
    a: usize,
    b: usize,
    window: WindowSpec,
) -> Result<(u64, f64), IntersectError> {
    let ra = profile.segment_ranks(a);
    let rb = profile.segment_ranks(b);
    window.check(ra.len().min(rb.len()))?;
    let size = profile.distinct() + 1;
    let ca = rank_counts(ra, window.lo, window.hi, size);
    let cb = rank_counts(rb, window.lo, window.hi, size);
    let deg = profile.degree_by_rank();
    let mut plain = 0u64;
    let mut weighted = 0.0;
    for r in 1..size {
        let prod = ca[r] as u64 * cb[r] as u64;
        if prod != 0 {
            plain += prod;
            weighted += prod as f64 / deg[r] as f64;
        }
    }
    if let Some(d) = profile.common_degree() {
        weighted = plain as f64 / d as f64;
    }
    Ok((plain, weighted))
}

/// Average weighted intersections over all unordered segment pairs on
/// `window`, via `(‖Σ_l c_l‖²_w − Σ_l ‖c_l‖²_w) / 2`.
pub fn profile_pairwise_weighted(
    profile: &Profile,
    window: WindowSpec,
) -> Result<f64, IntersectError> {
    let k = profile.segments.len();
    if k < 2 {
        return Err(IntersectError::TooFewTraces(k));
    }
    let size = profile.distinct() + 1;
    let mut total = vec![0u64; size];
    let mut self_sq = vec![0u64; size];
    for seg in 0..k {
        let ranks = profile.segment_ranks(seg);
        window.check(ranks.len())?;
        let c = rank_counts(ranks, window.lo, window.hi, size);
        for r in 1..size {
            let v = c[r] as u64;
            total[r] += v;
            self_sq[r] += v * v;
        }
    }
    let pairs = (k * (k - 1) / 2) as f64;
    let cross = |r: usize| (total[r] * total[r] - self_sq[r]) / 2;
    if let Some(d) = profile.common_degree() {
        let sum: u64 = (1..size).map(cross).sum();
        return Ok(sum as f64 / d as f64 / pairs);
    }
    let deg = profile.degree_by_rank();
    let sum: f64 = (1..size).map(|r| cross(r) as f64 / deg[r] as f64).sum();
    Ok(sum / pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_barbell, gen_complete, gen_cycle};
    use crate::walk::{compute_profile, derive_seed, simulate_lazy_walk};
    use proptest::prelude::*;

    fn trace(g: &Graph, steps: Vec<usize>) -> WalkTrace {
        WalkTrace {
            start: steps[0],
            steps,
            seed: 0,
            graph_fingerprint: g.fingerprint(),
        }
    }

    /// Direct double loop over all pairs of times.
    fn naive(x: &[usize], y: &[usize], lo: usize, hi: usize, g: &Graph) -> (u64, f64) {
        let mut plain = 0;
        let mut weighted = 0.0;
        for i in lo..hi {
            for j in lo..hi {
                if x[i] == y[j] {
                    plain += 1;
                    weighted += 1.0 / g.degree(x[i]) as f64;
                }
            }
        }
        (plain, weighted)
    }

    #[test]
    fn hand_counted_examples() {
        let g = gen_complete(3).unwrap();
        let single = trace(&g, vec![1]);
        assert_eq!(
            count_intersections(&single, &single, WindowSpec::prefix(1).unwrap()).unwrap(),
            1
        );
        let x = trace(&g, vec![0, 1]);
        let y = trace(&g, vec![0, 0]);
        let w = WindowSpec::prefix(2).unwrap();
        assert_eq!(count_intersections(&x, &y, w).unwrap(), 2);
        assert_eq!(count_weighted_intersections(&x, &y, w, &g).unwrap(), 1.0);
    }

    #[test]
    fn window_errors() {
        let g = gen_cycle(4).unwrap();
        let x = trace(&g, vec![0, 1, 2]);
        assert_eq!(
            WindowSpec::new(2, 2),
            Err(IntersectError::EmptyWindow { lo: 2, hi: 2 })
        );
        assert_eq!(
            count_intersections(&x, &x, WindowSpec::new(0, 4).unwrap()),
            Err(IntersectError::WindowOutOfBounds { hi: 4, len: 3 })
        );
        let h = gen_cycle(5).unwrap();
        let z = trace(&h, vec![0, 1, 2]);
        assert_eq!(
            count_intersections(&x, &z, WindowSpec::prefix(2).unwrap()),
            Err(IntersectError::GraphMismatch)
        );
        assert_eq!(
            count_l_pairwise(&[x], 1, &g),
            Err(IntersectError::TooFewTraces(1))
        );
    }

    #[test]
    fn aggregation_matches_double_loop_on_c8() {
        let g = gen_cycle(8).unwrap();
        let w = WindowSpec::prefix(16).unwrap();
        for case in 0..1000u64 {
            let x = simulate_lazy_walk(&g, 0, 16, derive_seed(case, 0)).unwrap();
            let y = simulate_lazy_walk(&g, 0, 16, derive_seed(case, 1)).unwrap();
            let (plain, weighted) = naive(&x.steps, &y.steps, 0, 16, &g);
            assert_eq!(count_intersections(&x, &y, w).unwrap(), plain);
            let fast = count_weighted_intersections(&x, &y, w, &g).unwrap();
            assert!((fast - weighted).abs() < 1e-12);
            // regular: weighted = unweighted / d, and symmetric
            assert_eq!(fast, plain as f64 / 2.0);
            assert_eq!(count_weighted_intersections(&y, &x, w, &g).unwrap(), fast);
        }
    }

    #[test]
    fn j_with_zero_burn_in_is_prefix_count() {
        let g = gen_barbell(4, 3).unwrap();
        let x = simulate_lazy_walk(&g, 0, 30, 1).unwrap();
        let y = simulate_lazy_walk(&g, 0, 30, 2).unwrap();
        assert_eq!(
            count_j(&x, &y, 20, 0, &g).unwrap(),
            count_weighted_intersections(&x, &y, WindowSpec::prefix(20).unwrap(), &g).unwrap()
        );
        assert!(count_j(&x, &y, 20, 11, &g).is_err());
    }

    #[test]
    fn pairwise_l_single_pair_and_duplicates() {
        let g = gen_barbell(4, 3).unwrap();
        let x = simulate_lazy_walk(&g, 0, 12, 1).unwrap();
        let y = simulate_lazy_walk(&g, 0, 12, 2).unwrap();
        let l = count_l_pairwise(&[x.clone(), y.clone()], 6, &g).unwrap();
        let direct =
            count_weighted_intersections(&x, &y, WindowSpec::new(6, 12).unwrap(), &g).unwrap();
        assert_eq!(l.value, direct);
        assert_eq!(l.identical_pairs, 0);

        let dup = count_l_pairwise(&[x.clone(), x.clone(), x.clone()], 6, &g).unwrap();
        let own =
            count_weighted_intersections(&x, &x, WindowSpec::new(6, 12).unwrap(), &g).unwrap();
        assert!((dup.value - own).abs() < 1e-12);
        assert_eq!(dup.identical_pairs, 3);
    }

    #[test]
    fn profile_kernels_match_trace_counts() {
        let g = gen_barbell(5, 4).unwrap();
        let traces: Vec<_> = (0..5)
            .map(|i| simulate_lazy_walk(&g, 3, 40, derive_seed(9, i)).unwrap())
            .collect();
        let profile = compute_profile(&traces, &g).unwrap();
        let w = WindowSpec::new(5, 40).unwrap();
        let (plain, weighted) = profile_pair_counts(&profile, 1, 3, w).unwrap();
        assert_eq!(
            plain,
            count_intersections(&traces[1], &traces[3], w).unwrap()
        );
        let expect = count_weighted_intersections(&traces[1], &traces[3], w, &g).unwrap();
        assert!((weighted - expect).abs() < 1e-12);

        let wl = WindowSpec::new(20, 40).unwrap();
        let pw = profile_pairwise_weighted(&profile, wl).unwrap();
        let expect = count_l_pairwise(&traces, 20, &g).unwrap().value;
        assert!((pw - expect).abs() < 1e-12);
    }

    #[test]
    fn weighted_count_divides_by_degree_and_is_symmetric() {
        let g = gen_barbell(3, 2).unwrap();
        // 2 = attachment vertex (degree 3), 3 = path interior (degree 2).
        let x = trace(&g, vec![2, 3]);
        let y = trace(&g, vec![3, 3]);
        let w = WindowSpec::prefix(2).unwrap();
        let xy = count_weighted_intersections(&x, &y, w, &g).unwrap();
        assert_eq!(xy, 1.0);
        assert_eq!(count_weighted_intersections(&y, &x, w, &g).unwrap(), xy);
        assert_eq!(count_intersections(&x, &y, w).unwrap(), 2);
    }

    proptest! {
        #[test]
        fn aggregation_identity(
            xs in proptest::collection::vec(0usize..11, 1..64),
            ys in proptest::collection::vec(0usize..11, 1..64),
            lo_frac in 0.0f64..1.0,
        ) {
            let g = gen_barbell(4, 4).unwrap();
            let len = xs.len().min(ys.len());
            let lo = ((len as f64 * lo_frac) as usize).min(len - 1);
            let x = trace(&g, xs[..len].to_vec());
            let y = trace(&g, ys[..len].to_vec());
            let w = WindowSpec::new(lo, len).unwrap();
            let (plain, weighted) = naive(&x.steps, &y.steps, lo, len, &g);
            prop_assert_eq!(count_intersections(&x, &y, w).unwrap(), plain);
            prop_assert_eq!(count_intersections(&y, &x, w).unwrap(), plain);
            let fast = count_weighted_intersections(&x, &y, w, &g).unwrap();
            prop_assert!((fast - weighted).abs() < 1e-9);
        }

        #[test]
        fn enlarging_window_never_decreases(
            seed in any::<u64>(), lo in 0usize..10, extra_lo in 0usize..5, extra_hi in 0usize..10
        ) {
            let g = gen_barbell(4, 4).unwrap();
            let x = simulate_lazy_walk(&g, 0, 40, derive_seed(seed, 0)).unwrap();
            let y = simulate_lazy_walk(&g, 0, 40, derive_seed(seed, 1)).unwrap();
            let inner = WindowSpec::new(lo + extra_lo, lo + extra_lo + 10).unwrap();
            let outer = WindowSpec::new(lo, lo + extra_lo + 10 + extra_hi).unwrap();
            prop_assert!(
                count_intersections(&x, &y, outer).unwrap()
                    >= count_intersections(&x, &y, inner).unwrap()
            );
            prop_assert!(
                count_weighted_intersections(&x, &y, outer, &g).unwrap()
                    >= count_weighted_intersections(&x, &y, inner, &g).unwrap()
            );
        }
    }
}
