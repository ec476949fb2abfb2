//! Lazy random walks, relabeling-invariant profiles and the edge-revelation
//! experiment.
//!
//! # Seeding contract
//!
//! All randomness comes from [`ChaCha8Rng`] seeded with a 64-bit value. Batches
//! derive the seed of item `i` as [`derive_seed`]`(master, i)`, so results do
//! not depend on thread count or on the order in which items complete.
//!
//! A lazy step draws one `u32`; its low bit decides hold (`0`) or move (`1`).
//! A move then draws a neighbour index uniformly from `0..deg` over the sorted
//! adjacency list.

use std::collections::{HashMap, HashSet};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;

/// Name of the pinned generator, recorded in experiment metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng/rand_chacha-0.3";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WalkError {
    #[error("start vertex {start} out of range for n = {n}")]
    InvalidStart { start: usize, n: usize },
    #[error("walk length must be at least 1")]
    EmptyWalk,
    #[error("trace was simulated on a different graph")]
    FingerprintMismatch,
    #[error("no traces supplied")]
    NoTraces,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of item `index` in a batch with master seed `master`.
///
/// `splitmix64(master ^ splitmix64(index + 0x632BE59BD9B4E019))`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(0x632B_E59B_D9B4_E019)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[inline]
fn lazy_step<R: RngCore>(g: &Graph, u: usize, rng: &mut R) -> usize {
    if rng.next_u32() & 1 == 0 {
        return u;
    }
    let nbrs = g.neighbors(u);
    nbrs[rng.gen_range(0..nbrs.len())] as usize
}

/// One lazy random walk `X_0, ..., X_{t-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkTrace {
    pub start: usize,
    pub steps: Vec<usize>,
    pub seed: u64,
    pub graph_fingerprint: u64,
}

impl WalkTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Checks `steps[0] = start` and that every move follows an edge.
    pub fn is_valid_on(&self, g: &Graph) -> bool {
        self.graph_fingerprint == g.fingerprint()
            && self.steps.first() == Some(&self.start)
            && self
                .steps
                .windows(2)
                .all(|w| w[0] == w[1] || g.has_edge(w[0], w[1]))
    }
}

fn walk_vertices(g: &Graph, start: usize, t: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng_from_seed(seed);
    let mut steps = Vec::with_capacity(t);
    let mut u = start;
    steps.push(u);
    for _ in 1..t {
        u = lazy_step(g, u, &mut rng);
        steps.push(u);
    }
    steps
}

fn check_start(g: &Graph, start: usize, t: usize) -> Result<(), WalkError> {
    if start >= g.vertex_count() {
        return Err(WalkError::InvalidStart {
            start,
            n: g.vertex_count(),
        });
    }
    if t == 0 {
        return Err(WalkError::EmptyWalk);
    }
    Ok(())
}

/// Simulates `t` positions of the lazy walk from `start` (so `t - 1` moves).
pub fn simulate_lazy_walk(
    g: &Graph,
    start: usize,
    t: usize,
    seed: u64,
) -> Result<WalkTrace, WalkError> {
    check_start(g, start, t)?;
    Ok(WalkTrace {
        start,
        steps: walk_vertices(g, start, t, seed),
        seed,
        graph_fingerprint: g.fingerprint(),
    })
}

/// `count` independent walks; walk `i` uses `derive_seed(master, i)`.
pub fn simulate_batch(
    g: &Graph,
    start: usize,
    t: usize,
    master: u64,
    count: usize,
) -> Result<Vec<WalkTrace>, WalkError> {
    check_start(g, start, t)?;
    Ok((0..count)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(master, i as u64);
            WalkTrace {
                start,
                steps: walk_vertices(g, start, t, seed),
                seed,
                graph_fingerprint: g.fingerprint(),
            }
        })
        .collect())
}

/// Relabeling-invariant summary of concatenated trajectories: first-occurrence
/// ranks (1-based) and the degree at every position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Profile {
    pub ranks: Vec<u32>,
    pub degrees: Vec<u32>,
    /// Lengths of the concatenated trajectories, in order.
    pub segments: Vec<usize>,
}

impl Profile {
    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// Number of distinct vertices seen.
    pub fn distinct(&self) -> usize {
        self.ranks.iter().copied().max().unwrap_or(0) as usize
    }

    /// Start offset and length of segment `i`.
    pub fn segment(&self, i: usize) -> (usize, usize) {
        let start = self.segments[..i].iter().sum();
        (start, self.segments[i])
    }

    pub fn segment_ranks(&self, i: usize) -> &[u32] {
        let (s, l) = self.segment(i);
        &self.ranks[s..s + l]
    }

    /// Degree of the vertex with the given rank, indexed `0..=distinct()`
    /// (entry 0 unused).
    pub fn degree_by_rank(&self) -> Vec<u32> {
        let mut out = vec![0u32; self.distinct() + 1];
        for (&r, &d) in self.ranks.iter().zip(&self.degrees) {
            out[r as usize] = d;
        }
        out
    }

    /// Whether every observed degree is the same.
    pub fn common_degree(&self) -> Option<u32> {
        let d = *self.degrees.first()?;
        self.degrees.iter().all(|&x| x == d).then_some(d)
    }
}

struct RankMap {
    dense: Option<Vec<u32>>,
    sparse: HashMap<usize, u32>,
    next: u32,
}

impl RankMap {
    fn new(n: usize, expected_len: usize) -> Self {
        let dense = (n <= 4 * expected_len.max(1)).then(|| vec![0u32; n]);
        RankMap {
            dense,
            sparse: HashMap::new(),
            next: 0,
        }
    }

    fn rank(&mut self, v: usize) -> u32 {
        let next = &mut self.next;
        match &mut self.dense {
            Some(table) => {
                if table[v] == 0 {
                    *next += 1;
                    table[v] = *next;
                }
                table[v]
            }
            None => *self.sparse.entry(v).or_insert_with(|| {
                *next += 1;
                *next
            }),
        }
    }
}

fn profile_of_sequences<'a, I>(g: &Graph, seqs: I, total: usize) -> Profile
where
    I: IntoIterator<Item = &'a [usize]>,
{
    let mut map = RankMap::new(g.vertex_count(), total);
    let mut ranks = Vec::with_capacity(total);
    let mut degrees = Vec::with_capacity(total);
    let mut segments = Vec::new();
    for seq in seqs {
        segments.push(seq.len());
        for &v in seq {
            ranks.push(map.rank(v));
            degrees.push(g.degree(v) as u32);
        }
    }
    Profile {
        ranks,
        degrees,
        segments,
    }
}

/// Profile of the concatenation of `traces`.
pub fn compute_profile(traces: &[WalkTrace], g: &Graph) -> Result<Profile, WalkError> {
    if traces.is_empty() {
        return Err(WalkError::NoTraces);
    }
    if traces
        .iter()
        .any(|t| t.graph_fingerprint != g.fingerprint())
    {
        return Err(WalkError::FingerprintMismatch);
    }
    let total = traces.iter().map(WalkTrace::len).sum();
    Ok(profile_of_sequences(
        g,
        traces.iter().map(|t| t.steps.as_slice()),
        total,
    ))
}

/// First-occurrence ranks of an arbitrary label sequence.
pub fn first_occurrence_ranks<T: std::hash::Hash + Eq>(seq: &[T]) -> Vec<u32> {
    let mut seen: HashMap<&T, u32> = HashMap::new();
    seq.iter()
        .map(|v| {
            let next = seen.len() as u32 + 1;
            *seen.entry(v).or_insert(next)
        })
        .collect()
}

/// Black-box walk access: the estimator side only ever sees profiles.
pub trait WalkSource: Sync {
    /// Profile of independent lazy walks of `len` positions from `start`,
    /// one walk per seed, concatenated in seed order.
    fn profile(&self, start: usize, len: usize, seeds: &[u64]) -> Result<Profile, WalkError>;
}

impl WalkSource for Graph {
    fn profile(&self, start: usize, len: usize, seeds: &[u64]) -> Result<Profile, WalkError> {
        check_start(self, start, len)?;
        if seeds.is_empty() {
            return Err(WalkError::NoTraces);
        }
        let walks: Vec<Vec<usize>> = seeds
            .iter()
            .map(|&s| walk_vertices(self, start, len, s))
            .collect();
        Ok(profile_of_sequences(
            self,
            walks.iter().map(Vec::as_slice),
            len * seeds.len(),
        ))
    }
}

/// Whether the distinct edges traversed by the first `s` positions of the
/// concatenated traces form a forest.
///
/// Holds (`X_i = X_{i+1}`) traverse nothing and the jump from the end of one
/// trace to the start of the next is not an edge.
pub fn visited_edge_subgraph_is_tree(traces: &[WalkTrace], s: usize) -> bool {
    let mut parent: HashMap<usize, usize> = HashMap::new();
    fn find(parent: &mut HashMap<usize, usize>, v: usize) -> usize {
        let mut root = v;
        while let Some(&p) = parent.get(&root) {
            if p == root {
                break;
            }
            root = p;
        }
        let mut cur = v;
        while cur != root {
            let next = parent[&cur];
            parent.insert(cur, root);
            cur = next;
        }
        root
    }

    let mut edges = HashSet::new();
    let mut budget = s;
    for trace in traces {
        if budget == 0 {
            break;
        }
        let take = trace.steps.len().min(budget);
        budget -= take;
        for w in trace.steps[..take].windows(2) {
            let (u, v) = (w[0], w[1]);
            if u == v || !edges.insert((u.min(v), u.max(v))) {
                continue;
            }
            parent.entry(u).or_insert(u);
            parent.entry(v).or_insert(v);
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru == rv {
                return false;
            }
            parent.insert(ru, rv);
        }
    }
    true
}

/// Drops lazy holds, leaving the jump chain (a simple random walk).
pub fn jump_chain(trace: &WalkTrace) -> WalkTrace {
    let mut out = trace.clone();
    out.steps.dedup();
    out
}

/// One run of the edge-revelation experiment: walks of `walk_len` moves each
/// (hold-free, restarted at `x` between walks) are concatenated until `s`
/// positions are collected; returns whether the revealed edges form a tree.
pub fn tree_revelation_trial(
    g: &Graph,
    x: usize,
    walk_len: usize,
    s: usize,
    seed: u64,
) -> Result<bool, WalkError> {
    check_start(g, x, walk_len)?;
    let mut traces = Vec::new();
    let mut collected = 0;
    let mut index = 0u64;
    while collected < s {
        let walk_seed = derive_seed(seed, index);
        index += 1;
        let mut rng = rng_from_seed(walk_seed);
        let mut steps = vec![x];
        let mut u = x;
        while steps.len() < walk_len {
            let v = lazy_step(g, u, &mut rng);
            if v != u {
                steps.push(v);
                u = v;
            }
        }
        collected += steps.len();
        traces.push(WalkTrace {
            start: x,
            steps,
            seed: walk_seed,
            graph_fingerprint: g.fingerprint(),
        });
    }
    Ok(visited_edge_subgraph_is_tree(&traces, s))
}

/// Outcome of [`first_intersection_time`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FirstIntersection {
    At(usize),
    CapExceeded,
}

/// Smallest `t` with `{X_0..X_t} ∩ {Y_0..Y_t} ≠ ∅` for independent lazy walks
/// from `x` (seed `derive_seed(seed, 0)`) and `y` (`derive_seed(seed, 1)`).
pub fn first_intersection_time(
    g: &Graph,
    x: usize,
    y: usize,
    cap: usize,
    seed: u64,
) -> Result<FirstIntersection, WalkError> {
    check_start(g, x, 1)?;
    check_start(g, y, 1)?;
    if x == y {
        return Ok(FirstIntersection::At(0));
    }
    let n = g.vertex_count();
    let mut seen_x = vec![false; n];
    let mut seen_y = vec![false; n];
    seen_x[x] = true;
    seen_y[y] = true;
    let mut rx = rng_from_seed(derive_seed(seed, 0));
    let mut ry = rng_from_seed(derive_seed(seed, 1));
    let (mut u, mut v) = (x, y);
    for t in 1..=cap {
        u = lazy_step(g, u, &mut rx);
        v = lazy_step(g, v, &mut ry);
        seen_x[u] = true;
        seen_y[v] = true;
        if seen_y[u] || seen_x[v] {
            return Ok(FirstIntersection::At(t));
        }
    }
    Ok(FirstIntersection::CapExceeded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_complete, gen_cycle};
    use proptest::prelude::*;

    #[test]
    fn single_position_walk_is_start() {
        let g = gen_cycle(5).unwrap();
        for seed in 0..20 {
            assert_eq!(simulate_lazy_walk(&g, 3, 1, seed).unwrap().steps, vec![3]);
        }
    }

    #[test]
    fn invalid_start_rejected() {
        let g = gen_cycle(5).unwrap();
        assert_eq!(
            simulate_lazy_walk(&g, 5, 3, 0),
            Err(WalkError::InvalidStart { start: 5, n: 5 })
        );
        assert_eq!(simulate_lazy_walk(&g, 0, 0, 0), Err(WalkError::EmptyWalk));
    }

    #[test]
    fn walks_are_reproducible_and_valid() {
        let g = gen_cycle(12).unwrap();
        let a = simulate_lazy_walk(&g, 0, 500, 99).unwrap();
        let b = simulate_lazy_walk(&g, 0, 500, 99).unwrap();
        assert_eq!(a, b);
        assert!(a.is_valid_on(&g));
        let c = simulate_lazy_walk(&g, 0, 500, 100).unwrap();
        assert_ne!(a.steps, c.steps);
    }

    #[test]
    fn batch_matches_sequential() {
        let g = gen_complete(6).unwrap();
        let batch = simulate_batch(&g, 2, 40, 7, 16).unwrap();
        for (i, trace) in batch.iter().enumerate() {
            let seq = simulate_lazy_walk(&g, 2, 40, derive_seed(7, i as u64)).unwrap();
            assert_eq!(&seq, trace);
        }
    }

    #[test]
    fn hold_frequency_on_single_edge() {
        let g = gen_complete(2).unwrap();
        let trace = simulate_lazy_walk(&g, 0, 100_001, 5).unwrap();
        let holds = trace.steps.windows(2).filter(|w| w[0] == w[1]).count();
        let freq = holds as f64 / 100_000.0;
        assert!((freq - 0.5).abs() < 0.01, "hold frequency {freq}");
    }

    #[test]
    fn profile_of_mixed_sequence() {
        // (g,a,a,c,g,d,a,b,d)
        let seq = ['g', 'a', 'a', 'c', 'g', 'd', 'a', 'b', 'd'];
        assert_eq!(
            first_occurrence_ranks(&seq),
            vec![1, 2, 2, 3, 1, 4, 2, 5, 4]
        );
    }

    #[test]
    fn profile_of_repeated_vertex() {
        let g = gen_cycle(4).unwrap();
        let trace = WalkTrace {
            start: 1,
            steps: vec![1; 6],
            seed: 0,
            graph_fingerprint: g.fingerprint(),
        };
        let p = compute_profile(&[trace], &g).unwrap();
        assert_eq!(p.ranks, vec![1; 6]);
        assert_eq!(p.degrees, vec![2; 6]);
    }

    #[test]
    fn profile_rejects_foreign_trace() {
        let g = gen_cycle(4).unwrap();
        let h = gen_cycle(5).unwrap();
        let trace = simulate_lazy_walk(&h, 0, 4, 1).unwrap();
        assert_eq!(
            compute_profile(&[trace], &g),
            Err(WalkError::FingerprintMismatch)
        );
    }

    #[test]
    fn graph_source_matches_trace_profile() {
        let g = gen_cycle(9).unwrap();
        let seeds = [3u64, 4, 5];
        let traces: Vec<_> = seeds
            .iter()
            .map(|&s| simulate_lazy_walk(&g, 2, 30, s).unwrap())
            .collect();
        assert_eq!(
            g.profile(2, 30, &seeds).unwrap(),
            compute_profile(&traces, &g).unwrap()
        );
    }

    #[test]
    fn tree_detection_examples() {
        let g = gen_complete(3).unwrap();
        let mk = |steps: Vec<usize>| WalkTrace {
            start: steps[0],
            steps,
            seed: 0,
            graph_fingerprint: g.fingerprint(),
        };
        assert!(visited_edge_subgraph_is_tree(&[mk(vec![0, 0, 1, 1])], 4));
        assert!(!visited_edge_subgraph_is_tree(&[mk(vec![0, 1, 2, 0])], 4));
        // Back-and-forth reuses a single edge.
        assert!(visited_edge_subgraph_is_tree(&[mk(vec![0, 1, 0, 1, 0])], 5));
        // Prefix stops before the closing edge.
        assert!(visited_edge_subgraph_is_tree(&[mk(vec![0, 1, 2, 0])], 3));
        // Restart jump is not an edge, but the second walk closes the triangle.
        assert!(!visited_edge_subgraph_is_tree(
            &[mk(vec![0, 1, 2]), mk(vec![0, 2])],
            5
        ));
        assert!(visited_edge_subgraph_is_tree(
            &[mk(vec![0, 1]), mk(vec![0, 1])],
            4
        ));
    }

    #[test]
    fn first_intersection_shared_start() {
        let g = gen_cycle(8).unwrap();
        assert_eq!(
            first_intersection_time(&g, 3, 3, 10, 0).unwrap(),
            FirstIntersection::At(0)
        );
    }

    #[test]
    fn first_intersection_respects_cap() {
        let g = gen_cycle(64).unwrap();
        assert_eq!(
            first_intersection_time(&g, 0, 32, 1, 0).unwrap(),
            FirstIntersection::CapExceeded
        );
    }

    #[test]
    fn jump_chain_has_no_holds() {
        let g = gen_cycle(6).unwrap();
        let t = simulate_lazy_walk(&g, 0, 200, 1).unwrap();
        let j = jump_chain(&t);
        assert!(j.steps.windows(2).all(|w| w[0] != w[1]));
        assert!(j.is_valid_on(&g));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn profile_is_relabeling_invariant(perm_seed in any::<u64>(), walk_seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let g = gen_cycle(10).unwrap();
            let mut perm: Vec<usize> = (0..10).collect();
            perm.shuffle(&mut rng_from_seed(perm_seed));
            let h = g.relabel(&perm);
            let trace = simulate_lazy_walk(&g, 0, 40, walk_seed).unwrap();
            let moved = WalkTrace {
                start: perm[trace.start],
                steps: trace.steps.iter().map(|&v| perm[v]).collect(),
                seed: trace.seed,
                graph_fingerprint: h.fingerprint(),
            };
            prop_assert!(moved.is_valid_on(&h));
            prop_assert_eq!(
                compute_profile(&[trace], &g).unwrap(),
                compute_profile(&[moved], &h).unwrap()
            );
        }

        #[test]
        fn ranks_grow_by_one(seq in proptest::collection::vec(0u8..6, 1..40)) {
            let ranks = first_occurrence_ranks(&seq);
            prop_assert_eq!(ranks[0], 1);
            let mut max = 0;
            for (i, &r) in ranks.iter().enumerate() {
                if r > max {
                    prop_assert_eq!(r, max + 1);
                    max = r;
                }
                let first = seq.iter().position(|v| *v == seq[i]).unwrap();
                prop_assert_eq!(r, ranks[first]);
            }
        }
    }
}
