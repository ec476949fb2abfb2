//! Graph families used as examples, tight instances and lower-bound
//! constructions.
//!
//! Random families draw from a ChaCha8 stream seeded by the caller, so a
//! `(family, parameters, seed)` triple always yields the same graph.

use std::collections::HashSet;
use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, GraphError};
use crate::oracle;
use crate::walk::rng_from_seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown family {0:?}")]
    UnknownFamily(String),
    #[error("missing parameter {0:?}")]
    MissingParameter(String),
    #[error("no acceptable sample after {attempts} attempts")]
    RetryBudgetExhausted { attempts: usize },
    #[error("graph construction failed: {0}")]
    Graph(#[from] GraphError),
    #[error("spectral check failed: {0}")]
    Oracle(String),
}

fn invalid(msg: impl Into<String>) -> GenError {
    GenError::InvalidParameter(msg.into())
}

pub fn gen_cycle(n: usize) -> Result<Graph, GenError> {
    if n < 3 {
        return Err(invalid(format!("cycle needs n >= 3, got {n}")));
    }
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    Ok(Graph::from_edges(n, &edges)?)
}

fn clique_edges(first: usize, size: usize, edges: &mut Vec<(usize, usize)>) {
    for a in 0..size {
        for b in a + 1..size {
            edges.push((first + a, first + b));
        }
    }
}

pub fn gen_complete(n: usize) -> Result<Graph, GenError> {
    if n < 2 {
        return Err(invalid(format!("complete graph needs n >= 2, got {n}")));
    }
    let mut edges = Vec::new();
    clique_edges(0, n, &mut edges);
    Ok(Graph::from_edges(n, &edges)?)
}

/// Two copies of `K_c` whose designated vertices are joined by a path with
/// `path_length` edges.
///
/// Clique A is `0..c`, attached at `c − 1`; the path interior is
/// `c..c + L − 1`; clique B starts at `c + L − 1`, which is its attachment.
pub fn gen_barbell(clique_size: usize, path_length: usize) -> Result<Graph, GenError> {
    if clique_size < 3 {
        return Err(invalid(format!(
            "barbell needs clique_size >= 3, got {clique_size}"
        )));
    }
    if path_length < 1 {
        return Err(invalid("barbell needs path_length >= 1"));
    }
    let c = clique_size;
    let n = 2 * c + path_length - 1;
    let b_start = c + path_length - 1;
    let mut edges = Vec::new();
    clique_edges(0, c, &mut edges);
    clique_edges(b_start, c, &mut edges);
    for v in c - 1..b_start {
        edges.push((v, v + 1));
    }
    Ok(Graph::from_edges(n, &edges)?)
}

/// Options for the configuration-model sampler.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegularOptions {
    pub max_attempts: usize,
    /// Largest accepted second eigenvalue of the lazy walk; `None` disables
    /// the spectral check.
    pub lambda2_max: Option<f64>,
    /// The spectral check applies for `spectral_min_k ≤ k ≤ spectral_max_k`.
    pub spectral_min_k: usize,
    pub spectral_max_k: usize,
}

/// Default lazy `λ₂` ceiling: a non-lazy second eigenvalue of at most 0.95.
pub const DEFAULT_LAMBDA2_MAX: f64 = 0.975;

impl Default for RegularOptions {
    fn default() -> Self {
        RegularOptions {
            max_attempts: 1000,
            lambda2_max: Some(DEFAULT_LAMBDA2_MAX),
            spectral_min_k: 16,
            spectral_max_k: 512,
        }
    }
}

/// An accepted sample and the number of attempts it took.
#[derive(Debug, Clone)]
pub struct RegularSample {
    pub graph: Graph,
    pub attempts: usize,
    /// Lazy `λ₂`, when the spectral check ran.
    pub lambda2: Option<f64>,
}

pub fn gen_random_regular_3(k: usize, seed: u64) -> Result<Graph, GenError> {
    Ok(sample_random_regular_3(k, seed, &RegularOptions::default())?.graph)
}

/// Uniform simple connected 3-regular graph on `k` vertices by rejection from
/// the configuration model.
pub fn sample_random_regular_3(
    k: usize,
    seed: u64,
    opts: &RegularOptions,
) -> Result<RegularSample, GenError> {
    if k < 4 || !k.is_multiple_of(2) {
        return Err(invalid(format!("k must be even and >= 4, got {k}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut stubs: Vec<usize> = (0..k).flat_map(|v| [v, v, v]).collect();
    let spectral = opts
        .lambda2_max
        .filter(|_| (opts.spectral_min_k..=opts.spectral_max_k).contains(&k));
    for attempt in 1..=opts.max_attempts {
        stubs.shuffle(&mut rng);
        let Some(edges) = simple_pairing(&stubs) else {
            continue;
        };
        let graph = match Graph::from_edges(k, &edges) {
            Ok(g) => g,
            Err(GraphError::Disconnected { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        let mut lambda2 = None;
        if let Some(limit) = spectral {
            let l2 =
                oracle::second_eigenvalue(&graph).map_err(|e| GenError::Oracle(e.to_string()))?;
            if l2 > limit {
                continue;
            }
            lambda2 = Some(l2);
        }
        return Ok(RegularSample {
            graph,
            attempts: attempt,
            lambda2,
        });
    }
    Err(GenError::RetryBudgetExhausted {
        attempts: opts.max_attempts,
    })
}

fn simple_pairing(stubs: &[usize]) -> Option<Vec<(usize, usize)>> {
    let mut seen = HashSet::with_capacity(stubs.len() / 2);
    let mut edges = Vec::with_capacity(stubs.len() / 2);
    for pair in stubs.chunks_exact(2) {
        let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
        if a == b || !seen.insert((a, b)) {
            return None;
        }
        edges.push((a, b));
    }
    Some(edges)
}

/// Base expander with every edge replaced by a path of `ell` edges, plus
/// distance-two chords inside each path so every vertex has degree 3.
///
/// Interior vertices are numbered from `k` upwards, edge by edge in sorted
/// edge order, running from the smaller endpoint to the larger. Interiors
/// `i₁..i_{ℓ−1}` are chorded in blocks of four: `{i₁,i₃}, {i₂,i₄}, {i₅,i₇}, …`.
pub fn gen_subdivided_expander(k: usize, ell: usize, seed: u64) -> Result<Graph, GenError> {
    if ell < 5 || !(ell - 1).is_multiple_of(4) {
        return Err(invalid(format!(
            "ell must satisfy ell >= 5 and ell = 1 mod 4, got {ell}"
        )));
    }
    let base = gen_random_regular_3(k, seed)?;
    let interior = ell - 1;
    let n = k + base.edge_count() * interior;
    let mut edges = Vec::with_capacity(3 * n / 2);
    let mut next = k;
    for (a, b) in base.edges() {
        let ids: Vec<usize> = (next..next + interior).collect();
        next += interior;
        let mut prev = a;
        for &v in &ids {
            edges.push((prev, v));
            prev = v;
        }
        edges.push((prev, b));
        for block in ids.chunks_exact(4) {
            edges.push((block[0], block[2]));
            edges.push((block[1], block[3]));
        }
    }
    Ok(Graph::from_edges(n, &edges)?)
}

/// Base expander with every vertex blown up into `K_q` and every edge
/// replaced by a path of `q` edges.
///
/// Base vertex `v` owns clique vertices `v·q..v·q + q`. The path towards the
/// `j`-th neighbour of `v` (sorted order) leaves from clique vertex `j mod q`.
pub fn gen_clique_expander(k: usize, q: usize, seed: u64) -> Result<Graph, GenError> {
    if q < 2 {
        return Err(invalid(format!("clique expander needs q >= 2, got {q}")));
    }
    let base = gen_random_regular_3(k, seed)?;
    let interior = q - 1;
    let n = k * q + base.edge_count() * interior;
    let mut edges = Vec::new();
    for v in 0..k {
        clique_edges(v * q, q, &mut edges);
    }
    let port = |v: usize, w: usize| {
        let j = base
            .neighbors(v)
            .iter()
            .position(|&u| u as usize == w)
            .expect("base edge");
        v * q + j % q
    };
    let mut next = k * q;
    for (a, b) in base.edges() {
        let mut prev = port(a, b);
        for v in next..next + interior {
            edges.push((prev, v));
            prev = v;
        }
        next += interior;
        edges.push((prev, port(b, a)));
    }
    Ok(Graph::from_edges(n, &edges)?)
}

/// `K_ℓ` on `0..ℓ` with a pendant path of `q` edges hanging from each vertex.
pub fn gen_clique_with_paths(ell: usize, q: usize) -> Result<Graph, GenError> {
    if ell < 3 {
        return Err(invalid(format!(
            "clique_with_paths needs ell >= 3, got {ell}"
        )));
    }
    if q < 1 {
        return Err(invalid("clique_with_paths needs q >= 1"));
    }
    let n = ell * (q + 1);
    let mut edges = Vec::new();
    clique_edges(0, ell, &mut edges);
    let mut next = ell;
    for v in 0..ell {
        let mut prev = v;
        for w in next..next + q {
            edges.push((prev, w));
            prev = w;
        }
        next += q;
    }
    Ok(Graph::from_edges(n, &edges)?)
}

/// A graph family with its parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Cycle {
        n: usize,
    },
    Complete {
        n: usize,
    },
    Barbell {
        clique_size: usize,
        path_length: usize,
    },
    RandomRegular3 {
        k: usize,
    },
    SubdividedExpander {
        k: usize,
        ell: usize,
    },
    CliqueExpander {
        k: usize,
        q: usize,
    },
    CliqueWithPaths {
        ell: usize,
        q: usize,
    },
}

pub const FAMILY_NAMES: [&str; 7] = [
    "cycle",
    "complete",
    "barbell",
    "random_regular_3",
    "subdivided_expander",
    "clique_expander",
    "clique_with_paths",
];

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Cycle { .. } => "cycle",
            Family::Complete { .. } => "complete",
            Family::Barbell { .. } => "barbell",
            Family::RandomRegular3 { .. } => "random_regular_3",
            Family::SubdividedExpander { .. } => "subdivided_expander",
            Family::CliqueExpander { .. } => "clique_expander",
            Family::CliqueWithPaths { .. } => "clique_with_paths",
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(
            self,
            Family::RandomRegular3 { .. }
                | Family::SubdividedExpander { .. }
                | Family::CliqueExpander { .. }
        )
    }

    /// Parses `name` and a `key=value,key=value` parameter list.
    pub fn parse(name: &str, params: &str) -> Result<Family, GenError> {
        let mut values = std::collections::BTreeMap::new();
        for item in params.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| invalid(format!("expected key=value, got {item:?}")))?;
            let value: usize = value
                .trim()
                .parse()
                .map_err(|_| invalid(format!("{key}: not a non-negative integer: {value:?}")))?;
            values.insert(key.trim().to_string(), value);
        }
        let mut take = |key: &str| {
            values
                .remove(key)
                .ok_or_else(|| GenError::MissingParameter(key.into()))
        };
        let family = match name {
            "cycle" => Family::Cycle { n: take("n")? },
            "complete" => Family::Complete { n: take("n")? },
            "barbell" => Family::Barbell {
                clique_size: take("clique_size")?,
                path_length: take("path_length")?,
            },
            "random_regular_3" => Family::RandomRegular3 { k: take("k")? },
            "subdivided_expander" => Family::SubdividedExpander {
                k: take("k")?,
                ell: take("ell")?,
            },
            "clique_expander" => Family::CliqueExpander {
                k: take("k")?,
                q: take("q")?,
            },
            "clique_with_paths" => Family::CliqueWithPaths {
                ell: take("ell")?,
                q: take("q")?,
            },
            other => return Err(GenError::UnknownFamily(other.into())),
        };
        if let Some(extra) = values.keys().next() {
            return Err(invalid(format!(
                "unexpected parameter {extra:?} for {name}"
            )));
        }
        Ok(family)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Family::Cycle { n } => write!(f, "cycle(n={n})"),
            Family::Complete { n } => write!(f, "complete(n={n})"),
            Family::Barbell {
                clique_size,
                path_length,
            } => write!(
                f,
                "barbell(clique_size={clique_size},path_length={path_length})"
            ),
            Family::RandomRegular3 { k } => write!(f, "random_regular_3(k={k})"),
            Family::SubdividedExpander { k, ell } => {
                write!(f, "subdivided_expander(k={k},ell={ell})")
            }
            Family::CliqueExpander { k, q } => write!(f, "clique_expander(k={k},q={q})"),
            Family::CliqueWithPaths { ell, q } => write!(f, "clique_with_paths(ell={ell},q={q})"),
        }
    }
}

/// A family, its parameters and the seed for random families.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenSpec {
    #[serde(flatten)]
    pub family: Family,
    #[serde(default)]
    pub seed: u64,
}

impl GenSpec {
    pub fn new(family: Family, seed: u64) -> Self {
        GenSpec { family, seed }
    }

    pub fn parse(name: &str, params: &str, seed: u64) -> Result<Self, GenError> {
        Ok(GenSpec::new(Family::parse(name, params)?, seed))
    }

    pub fn build(&self) -> Result<Graph, GenError> {
        let s = self.seed;
        match self.family {
            Family::Cycle { n } => gen_cycle(n),
            Family::Complete { n } => gen_complete(n),
            Family::Barbell {
                clique_size,
                path_length,
            } => gen_barbell(clique_size, path_length),
            Family::RandomRegular3 { k } => gen_random_regular_3(k, s),
            Family::SubdividedExpander { k, ell } => gen_subdivided_expander(k, ell, s),
            Family::CliqueExpander { k, q } => gen_clique_expander(k, q, s),
            Family::CliqueWithPaths { ell, q } => gen_clique_with_paths(ell, q),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn counts(g: &Graph) -> (usize, usize) {
        (g.vertex_count(), g.edge_count())
    }

    #[test]
    fn cycles() {
        assert_eq!(gen_cycle(3).unwrap(), gen_complete(3).unwrap());
        let c4 = gen_cycle(4).unwrap();
        assert_eq!(counts(&c4), (4, 4));
        assert_eq!(c4.regular_degree(), Some(2));
        let c64 = gen_cycle(64).unwrap();
        assert_eq!((c64.edge_count(), c64.min_degree()), (64, 2));
        assert!(gen_cycle(2).is_err());
    }

    #[test]
    fn complete_graphs() {
        assert_eq!(gen_complete(4).unwrap().edge_count(), 6);
        assert_eq!(counts(&gen_complete(2).unwrap()), (2, 1));
        assert_eq!(gen_complete(10).unwrap().edge_count(), 45);
        assert!(gen_complete(1).is_err());
    }

    #[test]
    fn barbells() {
        let b = gen_barbell(4, 4).unwrap();
        assert_eq!(counts(&b), (11, 16));
        assert_eq!(b.min_degree(), 2);
        assert_eq!(b.degree(3), 4);
        assert_eq!(counts(&gen_barbell(3, 1).unwrap()), (6, 7));
        assert_eq!(counts(&gen_barbell(5, 5).unwrap()), (14, 25));
        assert!(gen_barbell(2, 3).is_err());
        assert!(gen_barbell(3, 0).is_err());
    }

    #[test]
    fn random_regular_small_cases() {
        let k4 = gen_random_regular_3(4, 9).unwrap();
        assert_eq!(k4, gen_complete(4).unwrap());
        let g = gen_random_regular_3(20, 1).unwrap();
        assert_eq!(g.edge_count(), 30);
        assert_eq!(g.regular_degree(), Some(3));
        assert!(matches!(
            gen_random_regular_3(5, 1),
            Err(GenError::InvalidParameter(_))
        ));
    }

    #[test]
    fn random_regular_is_deterministic() {
        let a = gen_random_regular_3(30, 77).unwrap();
        let b = gen_random_regular_3(30, 77).unwrap();
        assert_eq!(a.to_edge_list_string(), b.to_edge_list_string());
        let c = gen_random_regular_3(30, 78).unwrap();
        assert_ne!(a.to_edge_list_string(), c.to_edge_list_string());
    }

    #[test]
    fn expander_check_applies_from_sixteen() {
        for seed in 0..5 {
            let s = sample_random_regular_3(32, seed, &RegularOptions::default()).unwrap();
            let l2 = s.lambda2.unwrap();
            assert!(l2 <= DEFAULT_LAMBDA2_MAX);
            let exact = oracle::second_eigenvalue(&s.graph).unwrap();
            assert!((exact - l2).abs() < 1e-12);
        }
        let small = sample_random_regular_3(8, 0, &RegularOptions::default()).unwrap();
        assert!(small.lambda2.is_none());
    }

    #[test]
    fn retry_budget_is_an_error() {
        let opts = RegularOptions {
            max_attempts: 3,
            lambda2_max: Some(0.0),
            ..RegularOptions::default()
        };
        assert_eq!(
            sample_random_regular_3(20, 1, &opts).unwrap_err(),
            GenError::RetryBudgetExhausted { attempts: 3 }
        );
    }

    #[test]
    fn large_random_regular() {
        let s = sample_random_regular_3(10_000, 3, &RegularOptions::default()).unwrap();
        assert_eq!(s.graph.edge_count(), 15_000);
        assert_eq!(s.graph.regular_degree(), Some(3));
        assert!(s.attempts >= 1);
    }

    #[test]
    fn subdivided_expander_counts() {
        let g = gen_subdivided_expander(8, 5, 7).unwrap();
        assert_eq!(g.vertex_count(), 8 * 14 / 2);
        assert_eq!(g.edge_count(), 84);
        assert_eq!(g.regular_degree(), Some(3));
        assert!(matches!(
            gen_subdivided_expander(8, 4, 7),
            Err(GenError::InvalidParameter(_))
        ));
        let g9 = gen_subdivided_expander(8, 9, 7).unwrap();
        assert_eq!(g9.vertex_count(), 8 * 26 / 2);
        assert_eq!(g9.regular_degree(), Some(3));
    }

    #[test]
    fn subdivided_chord_pattern() {
        let g = gen_subdivided_expander(4, 5, 1).unwrap();
        // the first base edge is (0, 1); its interiors are 4, 5, 6, 7
        let (i1, i2, i3, i4) = (4, 5, 6, 7);
        assert!(g.has_edge(0, i1) && g.has_edge(i4, 1));
        assert!(g.has_edge(i1, i2) && g.has_edge(i2, i3) && g.has_edge(i3, i4));
        assert!(g.has_edge(i1, i3) && g.has_edge(i2, i4));
        assert!(!g.has_edge(i1, i4));
    }

    #[test]
    fn clique_expander_counts() {
        let g = gen_clique_expander(4, 3, 2).unwrap();
        assert_eq!(counts(&g), (24, 30));
        for v in 0..12 {
            assert_eq!(
                g.degree(v),
                3,
                "every clique vertex carries one path when q = 3"
            );
        }
        for v in 12..24 {
            assert_eq!(g.degree(v), 2);
        }
        assert_eq!(gen_clique_expander(4, 2, 2).unwrap().vertex_count(), 14);

        let g = gen_clique_expander(4, 5, 2).unwrap();
        let clique_degrees: Vec<usize> = (0..5).map(|v| g.degree(v)).collect();
        assert_eq!(clique_degrees, vec![5, 5, 5, 4, 4]);
    }

    #[test]
    fn clique_with_paths_counts() {
        assert_eq!(counts(&gen_clique_with_paths(3, 2).unwrap()), (9, 9));
        assert_eq!(counts(&gen_clique_with_paths(5, 1).unwrap()), (10, 15));
        assert_eq!(counts(&gen_clique_with_paths(4, 3).unwrap()), (16, 18));
        assert!(gen_clique_with_paths(2, 3).is_err());
    }

    #[test]
    fn spec_parsing_and_serde() {
        let s = GenSpec::parse("barbell", "clique_size=4, path_length=4", 0).unwrap();
        assert_eq!(counts(&s.build().unwrap()), (11, 16));
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(
            json,
            r#"{"family":"barbell","clique_size":4,"path_length":4,"seed":0}"#
        );
        let back: GenSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        assert_eq!(
            Family::parse("clique_expander", "k=4").unwrap_err(),
            GenError::MissingParameter("q".into())
        );
        assert!(matches!(
            Family::parse("star", "n=4"),
            Err(GenError::UnknownFamily(_))
        ));
        assert!(Family::parse("cycle", "n=4,q=2").is_err());
        for name in FAMILY_NAMES {
            assert!(!matches!(
                Family::parse(name, ""),
                Err(GenError::UnknownFamily(_))
            ));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn generated_graphs_satisfy_handshake(c in 3usize..8, l in 1usize..6, q in 1usize..4) {
            for g in [gen_barbell(c, l).unwrap(), gen_clique_with_paths(c, q).unwrap()] {
                let total: usize = g.degrees().iter().sum();
                prop_assert_eq!(total, 2 * g.edge_count());
                for u in 0..g.vertex_count() {
                    for &v in g.neighbors(u) {
                        prop_assert!(g.has_edge(v as usize, u));
                    }
                }
            }
        }

        #[test]
        fn random_families_are_reproducible(seed in any::<u64>()) {
            let a = GenSpec::new(Family::CliqueExpander { k: 6, q: 3 }, seed).build().unwrap();
            let b = GenSpec::new(Family::CliqueExpander { k: 6, q: 3 }, seed).build().unwrap();
            prop_assert_eq!(a.to_edge_list_string(), b.to_edge_list_string());
        }
    }
}
