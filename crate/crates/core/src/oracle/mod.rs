//! Exact computations for the lazy walk on small graphs.
//!
//! Everything here is deterministic double-precision linear algebra on the
//! lazy transition operator `P = (I + D⁻¹A) / 2`. Distributions are evolved
//! with sparse row updates (`p ↦ pP`); the spectrum comes from the symmetric
//! conjugate `D_π^{1/2} P D_π^{-1/2}`.
//!
//! Graphs larger than [`oracle_cap`] vertices are refused.

mod bounds;

pub use bounds::{
    intersection_second_moment, l_cross_moment, pair_time_matrix, verify_bounds,
    verify_bounds_with, BoundCheck, BoundReport, BoundSweep, FittedConstant, InequalityReport,
};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;

pub const DEFAULT_ORACLE_CAP: usize = 4096;

/// Environment variable overriding [`DEFAULT_ORACLE_CAP`].
pub const ORACLE_CAP_ENV: &str = "RWEST_ORACLE_CAP";

/// Largest vertex count the dense oracle accepts.
pub fn oracle_cap() -> usize {
    std::env::var(ORACLE_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_ORACLE_CAP)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("graph has {n} vertices, dense oracle cap is {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("vertex {0} out of range")]
    InvalidVertex(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("did not converge: {0}")]
    NoConvergence(String),
}

fn check_cap(g: &Graph) -> Result<(), OracleError> {
    cap_check(g.vertex_count(), oracle_cap())
}

fn cap_check(n: usize, cap: usize) -> Result<(), OracleError> {
    if n > cap {
        return Err(OracleError::TooLarge { n, cap });
    }
    Ok(())
}

fn check_vertex(g: &Graph, x: usize) -> Result<(), OracleError> {
    check_cap(g)?;
    if x >= g.vertex_count() {
        return Err(OracleError::InvalidVertex(x));
    }
    Ok(())
}

/// Dense lazy transition matrix: `P(u,u) = 1/2`, `P(u,v) = 1/(2 deg u)` on edges.
pub fn lazy_transition_matrix(g: &Graph) -> Result<DMatrix<f64>, OracleError> {
    check_cap(g)?;
    let n = g.vertex_count();
    let mut p = DMatrix::zeros(n, n);
    for u in 0..n {
        p[(u, u)] = 0.5;
        let w = 0.5 / g.degree(u) as f64;
        for &v in g.neighbors(u) {
            p[(u, v as usize)] = w;
        }
    }
    Ok(p)
}

/// `out = p · P` for a row vector `p`.
pub(crate) fn lazy_step_row(g: &Graph, p: &[f64], out: &mut [f64]) {
    for v in 0..g.vertex_count() {
        let mut acc = 0.5 * p[v];
        for &u in g.neighbors(v) {
            let u = u as usize;
            acc += p[u] / (2 * g.degree(u)) as f64;
        }
        out[v] = acc;
    }
}

/// Successive laws `P^s(x, ·)` for `s = 0, 1, 2, ...`.
pub(crate) struct RowEvolution<'g> {
    g: &'g Graph,
    current: Vec<f64>,
    scratch: Vec<f64>,
    time: usize,
}

impl<'g> RowEvolution<'g> {
    pub(crate) fn new(g: &'g Graph, x: usize) -> Self {
        let n = g.vertex_count();
        let mut current = vec![0.0; n];
        current[x] = 1.0;
        RowEvolution {
            g,
            current,
            scratch: vec![0.0; n],
            time: 0,
        }
    }

    pub(crate) fn row(&self) -> &[f64] {
        &self.current
    }

    pub(crate) fn time(&self) -> usize {
        self.time
    }

    pub(crate) fn advance(&mut self) {
        lazy_step_row(self.g, &self.current, &mut self.scratch);
        std::mem::swap(&mut self.current, &mut self.scratch);
        self.time += 1;
    }
}

/// `P^s(x, x)` for `s = 0..=smax`.
pub fn return_probabilities(g: &Graph, x: usize, smax: usize) -> Result<Vec<f64>, OracleError> {
    check_vertex(g, x)?;
    let mut evo = RowEvolution::new(g, x);
    let mut out = Vec::with_capacity(smax + 1);
    out.push(1.0);
    for _ in 0..smax {
        evo.advance();
        out.push(evo.row()[x]);
    }
    Ok(out)
}

/// Laws `P^s(x, ·)` for `s = 0..=smax`.
pub fn distribution_rows(g: &Graph, x: usize, smax: usize) -> Result<Vec<Vec<f64>>, OracleError> {
    check_vertex(g, x)?;
    let mut evo = RowEvolution::new(g, x);
    let mut rows = Vec::with_capacity(smax + 1);
    rows.push(evo.row().to_vec());
    for _ in 0..smax {
        evo.advance();
        rows.push(evo.row().to_vec());
    }
    Ok(rows)
}

/// Spectral data of the lazy walk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralSummary {
    /// Eigenvalues of `P`, descending.
    pub eigenvalues: Vec<f64>,
    pub lambda2: f64,
    /// `⌈1 / (1 − λ₂)⌉`.
    pub t_rel: usize,
    /// First `t` with `max_{x,y} |P^t(x,y)/π(y) − 1| ≤ 1/4`.
    pub t_unif: usize,
    pub pi: Vec<f64>,
    /// `max_j ‖PΨ_j − λ_j Ψ_j‖_∞`.
    pub residual: f64,
    #[serde(skip)]
    eigenvectors: Option<DMatrix<f64>>,
}

impl SpectralSummary {
    /// Right eigenvectors `Ψ_j` of `P` as columns, orthonormal in `ℓ²(π)`.
    pub fn eigenvectors(&self) -> Option<&DMatrix<f64>> {
        self.eigenvectors.as_ref()
    }
}

const EIGEN_TOL: f64 = 1e-9;

/// Eigen-decomposition of the lazy operator; returns descending eigenvalues,
/// `ℓ²(π)`-orthonormal right eigenvectors and the residual.
fn lazy_spectrum(g: &Graph) -> Result<(Vec<f64>, DMatrix<f64>, f64), OracleError> {
    check_cap(g)?;
    let n = g.vertex_count();
    let mut s = DMatrix::zeros(n, n);
    for u in 0..n {
        s[(u, u)] = 0.5;
        for &v in g.neighbors(u) {
            let v = v as usize;
            s[(u, v)] = 0.5 / ((g.degree(u) * g.degree(v)) as f64).sqrt();
        }
    }
    let eig = SymmetricEigen::try_new(s, 1e-15, 100_000)
        .ok_or_else(|| OracleError::NoConvergence("symmetric eigensolver".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let pi = g.stationary_measure().weights();
    let eigenvalues: Vec<f64> = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let mut psi = DMatrix::zeros(n, n);
    for (col, &j) in order.iter().enumerate() {
        for u in 0..n {
            psi[(u, col)] = eig.eigenvectors[(u, j)] / pi[u].sqrt();
        }
    }

    let mut residual: f64 = 0.0;
    let mut image = vec![0.0; n];
    for (col, &lambda) in eigenvalues.iter().enumerate() {
        // (PΨ)(u) = Σ_v P(u,v) Ψ(v)
        for (u, slot) in image.iter_mut().enumerate() {
            let mut acc = 0.5 * psi[(u, col)];
            let w = 0.5 / g.degree(u) as f64;
            for &v in g.neighbors(u) {
                acc += w * psi[(v as usize, col)];
            }
            *slot = acc;
        }
        for u in 0..n {
            residual = residual.max((image[u] - lambda * psi[(u, col)]).abs());
        }
    }
    if residual > 1e-8 {
        return Err(OracleError::NoConvergence(format!(
            "eigen residual {residual:e} exceeds 1e-8"
        )));
    }
    Ok((eigenvalues, psi, residual))
}

/// Second-largest eigenvalue of the lazy operator.
pub fn second_eigenvalue(g: &Graph) -> Result<f64, OracleError> {
    let (values, _, _) = lazy_spectrum(g)?;
    Ok(values[1])
}

/// `⌈1/(1−λ₂)⌉`, tolerant of round-off when `1/(1−λ₂)` is an integer.
pub fn relaxation_time_from(lambda2: f64) -> usize {
    let raw = 1.0 / (1.0 - lambda2);
    (raw - 1e-9).ceil().max(1.0) as usize
}

pub fn spectral_summary(g: &Graph) -> Result<SpectralSummary, OracleError> {
    let (eigenvalues, psi, residual) = lazy_spectrum(g)?;
    let top = eigenvalues[0];
    if (top - 1.0).abs() > EIGEN_TOL {
        return Err(OracleError::NoConvergence(format!(
            "leading eigenvalue {top} is not 1"
        )));
    }
    if let Some(&bad) = eigenvalues
        .iter()
        .find(|&&l| !(-EIGEN_TOL..=1.0 + EIGEN_TOL).contains(&l))
    {
        return Err(OracleError::NoConvergence(format!(
            "eigenvalue {bad} outside [0, 1]"
        )));
    }
    let lambda2 = eigenvalues[1];
    if lambda2 >= 1.0 - 1e-12 {
        return Err(OracleError::NoConvergence(
            "spectral gap vanished; graph appears disconnected".into(),
        ));
    }
    let t_rel = relaxation_time_from(lambda2);
    let t_unif = uniform_mixing_time(g, t_rel)?;
    Ok(SpectralSummary {
        eigenvalues,
        lambda2,
        t_rel,
        t_unif,
        pi: g.stationary_measure().weights(),
        residual,
        eigenvectors: Some(psi),
    })
}

/// Smallest `t` with `max_{x,y} |P^t(x,y)/π(y) − 1| ≤ 1/4`, by powering the
/// full matrix one lazy step at a time.
pub fn uniform_mixing_time(g: &Graph, t_rel: usize) -> Result<usize, OracleError> {
    check_cap(g)?;
    let n = g.vertex_count();
    let pi = g.stationary_measure().weights();
    let min_pi = pi.iter().copied().fold(f64::INFINITY, f64::min);
    // t_unif ≤ t_rel · ln(4/π_min) + O(t_rel); leave generous room.
    let limit = 1000 + 8 * t_rel * (1.0 + (4.0 / min_pi).ln()).ceil() as usize;

    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|x| {
            let mut r = vec![0.0; n];
            r[x] = 1.0;
            r
        })
        .collect();
    let mut scratch = vec![0.0; n];
    for t in 0..=limit {
        let worst = rows
            .iter()
            .flat_map(|r| r.iter().zip(&pi).map(|(p, q)| (p / q - 1.0).abs()))
            .fold(0.0, f64::max);
        if worst <= 0.25 + 1e-12 {
            return Ok(t);
        }
        for r in rows.iter_mut() {
            lazy_step_row(g, r, &mut scratch);
            r.copy_from_slice(&scratch);
        }
    }
    Err(OracleError::NoConvergence(format!(
        "uniform mixing time exceeds {limit}"
    )))
}

/// Green's function row `g_t(x, u) = Σ_{i<t} P^i(x, u)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GreenRow {
    pub x: usize,
    pub t: usize,
    pub values: Vec<f64>,
}

pub fn green_row(g: &Graph, x: usize, t: usize) -> Result<GreenRow, OracleError> {
    let values = window_green(g, x, 0, t)?;
    Ok(GreenRow { x, t, values })
}

/// `Σ_{lo ≤ i < hi} P^i(x, ·)`.
pub fn window_green(g: &Graph, x: usize, lo: usize, hi: usize) -> Result<Vec<f64>, OracleError> {
    check_vertex(g, x)?;
    if hi <= lo {
        return Err(OracleError::InvalidParameter(format!(
            "empty window [{lo}, {hi})"
        )));
    }
    let mut evo = RowEvolution::new(g, x);
    let mut acc = vec![0.0; g.vertex_count()];
    while evo.time() < hi {
        if evo.time() >= lo {
            for (a, p) in acc.iter_mut().zip(evo.row()) {
                *a += p;
            }
        }
        evo.advance();
    }
    Ok(acc)
}

fn weighted_square_norm(g: &Graph, v: &[f64]) -> f64 {
    v.iter()
        .enumerate()
        .map(|(u, &x)| x * x / g.degree(u) as f64)
        .sum()
}

/// `E_x 𝓘_t = Σ_u g_t(x,u)² / deg(u)`.
pub fn expected_weighted_intersections(g: &Graph, x: usize, t: usize) -> Result<f64, OracleError> {
    expected_window_intersections(g, x, 0, t)
}

/// `E_x 𝓘_t = Σ_{i,j<t} P^{i+j}(x,x) / deg(x)`.
pub fn expected_weighted_intersections_return_form(
    g: &Graph,
    x: usize,
    t: usize,
) -> Result<f64, OracleError> {
    if t == 0 {
        return Err(OracleError::InvalidParameter("t must be at least 1".into()));
    }
    let r = return_probabilities(g, x, 2 * t - 2)?;
    Ok(pair_sum(&r, 0, t) / g.degree(x) as f64)
}

/// `Σ_{i,j ∈ [lo,hi)} r[i+j]`.
fn pair_sum(r: &[f64], lo: usize, hi: usize) -> f64 {
    let w = hi - lo;
    (2 * lo..=2 * hi - 2)
        .map(|s| {
            let k = s - 2 * lo;
            let mult = (k + 1).min(2 * w - 1 - k);
            mult as f64 * r[s]
        })
        .sum()
}

/// Expected weighted intersections over the window `[lo, hi)` for two
/// independent walks from `x`: `Σ_u (g_hi − g_lo)(x,u)² / deg(u)`.
pub fn expected_window_intersections(
    g: &Graph,
    x: usize,
    lo: usize,
    hi: usize,
) -> Result<f64, OracleError> {
    let gw = window_green(g, x, lo, hi)?;
    Ok(weighted_square_norm(g, &gw))
}

/// `E_x 𝓙_t` with the given burn-in.
pub fn expected_j(g: &Graph, x: usize, t: usize, burn_in: usize) -> Result<f64, OracleError> {
    expected_window_intersections(g, x, burn_in, burn_in + t)
}

/// `E_x 𝓙_t` through the mixture `Σ_{y,z} P^b(x,y) P^b(x,z) E_{y,z} 𝓘_t`,
/// building the full matrix of `E_{y,z} 𝓘_t`.
pub fn expected_j_mixture_form(
    g: &Graph,
    x: usize,
    t: usize,
    burn_in: usize,
) -> Result<f64, OracleError> {
    check_vertex(g, x)?;
    let n = g.vertex_count();
    let mut green = DMatrix::zeros(n, n);
    for y in 0..n {
        let row = window_green(g, y, 0, t)?;
        for u in 0..n {
            green[(y, u)] = row[u];
        }
    }
    let mut scaled = green.clone();
    for u in 0..n {
        let d = g.degree(u) as f64;
        for y in 0..n {
            scaled[(y, u)] /= d;
        }
    }
    let pair_expectations = &scaled * green.transpose();
    let law = distribution_rows(g, x, burn_in)?.pop().unwrap();
    let mut total = 0.0;
    for y in 0..n {
        for z in 0..n {
            total += law[y] * law[z] * pair_expectations[(y, z)];
        }
    }
    Ok(total)
}

/// `d_x(t)² = Σ_y π(y) (P^t(x,y)/π(y) − 1)²`.
pub fn l2_distance_sq(g: &Graph, x: usize, t: usize) -> Result<f64, OracleError> {
    let law = distribution_rows(g, x, t)?.pop().unwrap();
    Ok(l2_of_law(g, &law))
}

fn l2_of_law(g: &Graph, law: &[f64]) -> f64 {
    let two_m = 2.0 * g.edge_count() as f64;
    law.iter()
        .enumerate()
        .map(|(y, &p)| {
            let pi = g.degree(y) as f64 / two_m;
            pi * (p / pi - 1.0).powi(2)
        })
        .sum()
}

/// `d_x(t)² = P^{2t}(x,x)/π(x) − 1` (reversibility).
pub fn l2_distance_sq_return_form(g: &Graph, x: usize, t: usize) -> Result<f64, OracleError> {
    let r = return_probabilities(g, x, 2 * t)?;
    Ok(r[2 * t] / pi_of(g, x) - 1.0)
}

fn pi_of(g: &Graph, x: usize) -> f64 {
    g.degree(x) as f64 / (2.0 * g.edge_count() as f64)
}

/// `t_x(δ) = inf{t ≥ 0 : d_x(t)² ≤ δ}`.
pub fn mixing_time_from(g: &Graph, x: usize, delta: f64) -> Result<usize, OracleError> {
    check_vertex(g, x)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(OracleError::InvalidParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let lambda2 = second_eigenvalue(g)?;
    // d_x(t)² ≤ λ₂^{2t} d_x(0)²
    let d0 = 1.0 / pi_of(g, x) - 1.0;
    let limit = if lambda2 <= 0.0 {
        1
    } else {
        ((delta / d0).ln() / (2.0 * lambda2.ln())).ceil().max(0.0) as usize + 2
    };
    let mut evo = RowEvolution::new(g, x);
    loop {
        if l2_of_law(g, evo.row()) <= delta {
            return Ok(evo.time());
        }
        if evo.time() > limit {
            return Err(OracleError::NoConvergence(format!(
                "d_x(t)^2 still above {delta} at t = {}",
                evo.time()
            )));
        }
        evo.advance();
    }
}

/// `E_x 𝓛_t = Σ_{i,j=t}^{2t−1} (d_x((i+j)/2)² + 1) / 2m`, with the half-integer
/// distance read as `P^{i+j}(x,x)/π(x) − 1`.
pub fn expected_l(g: &Graph, x: usize, t: usize) -> Result<f64, OracleError> {
    if t == 0 {
        return Err(OracleError::InvalidParameter("t must be at least 1".into()));
    }
    let r = return_probabilities(g, x, 4 * t - 2)?;
    let pi_x = pi_of(g, x);
    let two_m = 2.0 * g.edge_count() as f64;
    let mut total = 0.0;
    for i in t..2 * t {
        for j in t..2 * t {
            let d2 = r[i + j] / pi_x - 1.0;
            total += (d2 + 1.0) / two_m;
        }
    }
    Ok(total)
}
