//! Immutable simple undirected graphs in compressed adjacency form.
//!
//! Every walk, estimator and oracle in this crate runs on a [`Graph`]. A graph
//! is validated once at construction (simple, connected, symmetric) and never
//! mutated afterwards, so it can be shared freely between worker threads.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::BufRead;

use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: self-loop at vertex {vertex}")]
    SelfLoop { line: usize, vertex: usize },
    #[error("line {line}: duplicate edge {{{u}, {v}}}")]
    DuplicateEdge { line: usize, u: usize, v: usize },
    #[error("line {line}: vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange {
        line: usize,
        vertex: usize,
        n: usize,
    },
    #[error("edge count mismatch: declared {declared}, got {actual}")]
    EdgeCountMismatch { declared: usize, actual: usize },
    #[error("graph is disconnected: {reached} of {n} vertices reachable from vertex 0")]
    Disconnected { reached: usize, n: usize },
    #[error("graph must have at least one edge and two vertices")]
    Empty,
    #[error("i/o error: {0}")]
    Io(String),
}

/// Undirected simple connected graph with dense vertex ids `0..n`.
///
/// Adjacency is stored in CSR form with each neighbour list sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    edge_count: usize,
    fingerprint: u64,
}

impl Graph {
    /// Builds a graph from an undirected edge list.
    ///
    /// Edge positions are reported as 1-based "lines" in errors, offset by one
    /// so they line up with the edge-list file format (line 1 is the header).
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let numbered: Vec<_> = edges
            .iter()
            .enumerate()
            .map(|(i, &(u, v))| (i + 2, u, v))
            .collect();
        Self::build(n, &numbered)
    }

    fn build(n: usize, edges: &[(usize, usize, usize)]) -> Result<Self, GraphError> {
        if n < 2 || edges.is_empty() {
            return Err(GraphError::Empty);
        }
        let mut seen = HashSet::with_capacity(edges.len());
        let mut degree = vec![0usize; n];
        for &(line, u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(GraphError::VertexOutOfRange { line, vertex: w, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop { line, vertex: u });
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(GraphError::DuplicateEdge {
                    line,
                    u: key.0,
                    v: key.1,
                });
            }
            degree[u] += 1;
            degree[v] += 1;
        }

        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0u32; offsets[n]];
        for &(_, u, v) in edges {
            targets[fill[u]] = v as u32;
            fill[u] += 1;
            targets[fill[v]] = u as u32;
            fill[v] += 1;
        }
        for u in 0..n {
            targets[offsets[u]..offsets[u + 1]].sort_unstable();
        }

        let mut graph = Graph {
            offsets,
            targets,
            edge_count: edges.len(),
            fingerprint: 0,
        };
        let reached = graph.reachable_from_zero();
        if reached != n {
            return Err(GraphError::Disconnected { reached, n });
        }
        graph.fingerprint = fingerprint_of(&graph.to_edge_list_string());
        Ok(graph)
    }

    fn reachable_from_zero(&self) -> usize {
        let n = self.vertex_count();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in self.neighbors(u) {
                let v = v as usize;
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    #[inline]
    pub fn neighbors(&self, u: usize) -> &[u32] {
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    #[inline]
    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.vertex_count()).map(|u| self.degree(u)).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// Minimum degree `d`.
    pub fn min_degree(&self) -> usize {
        (0..self.vertex_count())
            .map(|u| self.degree(u))
            .min()
            .unwrap()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.vertex_count())
            .map(|u| self.degree(u))
            .max()
            .unwrap()
    }

    /// Returns the common degree if the graph is regular.
    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.degree(0);
        (0..self.vertex_count())
            .all(|u| self.degree(u) == d)
            .then_some(d)
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.vertex_count()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .map(|&v| v as usize)
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    /// Hash of the canonical edge-list serialization.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn stationary_measure(&self) -> StationaryMeasure {
        StationaryMeasure {
            degrees: self.degrees(),
            total: 2 * self.edge_count,
        }
    }

    /// Canonical edge-list text: header `n m`, then one `u v` line per edge
    /// with `u < v`, sorted.
    pub fn to_edge_list_string(&self) -> String {
        let mut out = String::with_capacity(12 * (self.edge_count + 1));
        writeln!(out, "{} {}", self.vertex_count(), self.edge_count).unwrap();
        for (u, v) in self.edges() {
            writeln!(out, "{u} {v}").unwrap();
        }
        out
    }

    /// Applies a vertex permutation: vertex `u` becomes `perm[u]`.
    pub fn relabel(&self, perm: &[usize]) -> Graph {
        assert_eq!(perm.len(), self.vertex_count(), "permutation length");
        let edges: Vec<_> = self.edges().map(|(u, v)| (perm[u], perm[v])).collect();
        Graph::from_edges(self.vertex_count(), &edges).expect("relabeling preserves validity")
    }
}

fn fingerprint_of(text: &str) -> u64 {
    let digest = Sha256::digest(text.as_bytes());
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    u64::from_be_bytes(head)
}

/// Parses the edge-list text format.
///
/// ```text
/// n m
/// u v
/// ...
/// ```
///
/// Blank lines and lines starting with `#` are ignored.
pub fn load_graph<R: BufRead>(reader: R) -> Result<Graph, GraphError> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| GraphError::Io(e.to_string()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (a, b) = parse_pair(trimmed, line_no)?;
        if header.is_none() {
            header = Some((a, b));
        } else {
            edges.push((line_no, a, b));
        }
    }
    let (n, declared) = header.ok_or(GraphError::Parse {
        line: 1,
        message: "missing header \"n m\"".into(),
    })?;
    if n < 2 {
        return Err(GraphError::Empty);
    }
    for &(line, u, v) in &edges {
        if u == v {
            return Err(GraphError::SelfLoop { line, vertex: u });
        }
        for w in [u, v] {
            if w >= n {
                return Err(GraphError::VertexOutOfRange { line, vertex: w, n });
            }
        }
    }
    if edges.len() != declared {
        return Err(GraphError::EdgeCountMismatch {
            declared,
            actual: edges.len(),
        });
    }
    Graph::build(n, &edges)
}

pub fn parse_graph(text: &str) -> Result<Graph, GraphError> {
    load_graph(text.as_bytes())
}

fn parse_pair(line: &str, line_no: usize) -> Result<(usize, usize), GraphError> {
    let mut fields = line.split_whitespace();
    let mut next = || -> Result<usize, GraphError> {
        let field = fields.next().ok_or_else(|| GraphError::Parse {
            line: line_no,
            message: format!("expected two integers, got {line:?}"),
        })?;
        field.parse().map_err(|_| GraphError::Parse {
            line: line_no,
            message: format!("invalid integer {field:?}"),
        })
    };
    let a = next()?;
    let b = next()?;
    if fields.next().is_some() {
        return Err(GraphError::Parse {
            line: line_no,
            message: format!("expected two integers, got {line:?}"),
        });
    }
    Ok((a, b))
}

/// Stationary law of the lazy walk, `π(u) = deg(u) / 2m`.
///
/// Kept in rational form; [`StationaryMeasure::weight`] gives the float.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StationaryMeasure {
    degrees: Vec<usize>,
    total: usize,
}

impl StationaryMeasure {
    /// `(deg(u), 2m)`.
    pub fn rational(&self, u: usize) -> (usize, usize) {
        (self.degrees[u], self.total)
    }

    pub fn weight(&self, u: usize) -> f64 {
        self.degrees[u] as f64 / self.total as f64
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.degrees.len()).map(|u| self.weight(u)).collect()
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    /// Exact check that the numerators sum to the common denominator.
    pub fn sums_to_one_exactly(&self) -> bool {
        self.degrees.iter().sum::<usize>() == self.total
    }
}
