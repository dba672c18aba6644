//! Satisfaction scores and the fixed-point solver.
//!
//! A rater's score is pinned to its rating. A non-rater's score is the
//! trust-weighted average of its trustees' discounted scores, with rater
//! neighbours weighted by `alpha` and non-rater neighbours by `1 - alpha`:
//!
//! ```text
//! w_ij = t_ij^2 * (alpha if j rates else 1 - alpha)
//!        / (alpha * sum_{rater j} t_ij + (1 - alpha) * sum_{non-rater j} t_ij)
//! s_i  = sum_j w_ij * s_j
//! ```
//!
//! Nodes with no trust path to any rater score exactly 0.

mod dense;

pub use dense::{solve_dense_oracle, DENSE_ORACLE_MAX_NODES};

use std::collections::VecDeque;
use std::hash::{Hash, Hasher};
use std::io::Write;

use crate::error::{Error, Result};
use crate::fmt::sig;
use crate::graph::{NodeId, Thresholds, TrustGraph};

/// Raters, their ratings, thresholds and the rater weight `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionState {
    ratings: Vec<Option<f64>>,
    thresholds: Thresholds,
    alpha: f64,
}

impl SessionState {
    pub fn new(thresholds: Thresholds, alpha: f64) -> Result<Self> {
        if !(0.5..=1.0).contains(&alpha) {
            return Err(Error::invalid(format!("alpha {alpha} is outside [0.5, 1]")));
        }
        let ratings = vec![None; thresholds.len()];
        Ok(SessionState { ratings, thresholds, alpha })
    }

    pub fn with_raters<I>(thresholds: Thresholds, alpha: f64, raters: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        let mut state = Self::new(thresholds, alpha)?;
        for (node, rating) in raters {
            state.add_rater(node, rating)?;
        }
        Ok(state)
    }

    /// Records `node`'s rating. Re-rating an existing rater is an error.
    pub fn add_rater(&mut self, node: usize, rating: f64) -> Result<()> {
        let n_nodes = self.ratings.len();
        let slot = self.ratings.get_mut(node).ok_or(Error::NodeOutOfRange { node, n_nodes })?;
        if !(0.0..=1.0).contains(&rating) {
            return Err(Error::invalid(format!("rating {rating} of node {node} is outside [0, 1]")));
        }
        if slot.is_some() {
            return Err(Error::invalid(format!("node {node} is already a rater")));
        }
        *slot = Some(rating);
        Ok(())
    }

    /// Drops every rating, as after a document edit.
    pub fn clear_raters(&mut self) {
        self.ratings.iter_mut().for_each(|r| *r = None);
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.ratings.len()
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn thresholds(&self) -> &Thresholds {
        &self.thresholds
    }

    #[inline]
    pub fn is_rater(&self, i: usize) -> bool {
        self.ratings[i].is_some()
    }

    #[inline]
    pub fn rating(&self, i: usize) -> Option<f64> {
        self.ratings[i]
    }

    pub fn ratings(&self) -> &[Option<f64>] {
        &self.ratings
    }

    pub fn n_raters(&self) -> usize {
        self.ratings.iter().filter(|r| r.is_some()).count()
    }

    pub fn raters(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.ratings.iter().enumerate().filter_map(|(i, r)| r.map(|r| (NodeId(i), r)))
    }

    pub fn non_raters(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.ratings.iter().enumerate().filter(|(_, r)| r.is_none()).map(|(i, _)| NodeId(i))
    }

    /// Hash of the rater set (not the ratings).
    pub fn fingerprint(&self) -> u64 {
        rater_set_fingerprint(self.n_nodes(), self.raters().map(|(i, _)| i.index()))
    }

    pub(crate) fn check_graph(&self, g: &TrustGraph) -> Result<()> {
        if g.n_nodes() != self.n_nodes() {
            return Err(Error::DimensionMismatch { expected: g.n_nodes(), found: self.n_nodes() });
        }
        Ok(())
    }
}

/// Order-sensitive hash of `n` and ascending rater indices.
pub(crate) fn rater_set_fingerprint(n: usize, raters: impl Iterator<Item = usize>) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    n.hash(&mut h);
    for i in raters {
        i.hash(&mut h);
    }
    h.finish()
}

/// Per-edge weights aligned with the graph's CSR order. Rater rows are unused.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    values: Vec<f64>,
    alpha: f64,
}

impl Weights {
    #[inline]
    pub fn row<'a>(&'a self, g: &TrustGraph, i: usize) -> &'a [f64] {
        &self.values[g.out_range(i)]
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// At `alpha = 0.5` the weights reduce to `t_ij^2 / sum_j t_ij` and do not
    /// depend on the rater set, so one table serves a whole session.
    pub fn is_rater_independent(&self) -> bool {
        self.alpha == 0.5
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Computes the weight table for all non-rater rows.
///
/// At `alpha = 1` a node with no rater neighbour would have a zero
/// denominator; it takes the `alpha -> 1` limit `t_ij^2 / sum_j t_ij`.
pub fn compute_weights(g: &TrustGraph, state: &SessionState) -> Result<Weights> {
    state.check_graph(g)?;
    let alpha = state.alpha();
    let mut values = vec![0.0; g.n_edges()];
    for i in 0..g.n_nodes() {
        if alpha != 0.5 && state.is_rater(i) {
            continue;
        }
        let (targets, trust) = g.out_edges(i);
        let row = &mut values[g.out_range(i)];
        if alpha == 0.5 {
            let total: f64 = trust.iter().sum();
            for (w, &t) in row.iter_mut().zip(trust) {
                *w = t * t / total;
            }
            continue;
        }
        let (mut rated, mut unrated) = (0.0, 0.0);
        for (&j, &t) in targets.iter().zip(trust) {
            if state.is_rater(j) {
                rated += t;
            } else {
                unrated += t;
            }
        }
        let denom = alpha * rated + (1.0 - alpha) * unrated;
        for ((w, &j), &t) in row.iter_mut().zip(targets).zip(trust) {
            *w = if denom > 0.0 {
                let share = if state.is_rater(j) { alpha } else { 1.0 - alpha };
                t * t * share / denom
            } else {
                t * t / unrated
            };
        }
    }
    Ok(Weights { values, alpha })
}

/// Marks nodes with a directed trust path to at least one rater, by
/// breadth-first search over the transpose graph from all raters.
pub fn reachability_mask(g: &TrustGraph, raters: &[Option<f64>]) -> Vec<bool> {
    let mut mask = vec![false; g.n_nodes()];
    let mut queue: VecDeque<usize> = raters.iter().enumerate().filter(|(_, r)| r.is_some()).map(|(i, _)| i).collect();
    for &i in &queue {
        mask[i] = true;
    }
    while let Some(j) = queue.pop_front() {
        for &i in g.in_edges(j).0 {
            if !mask[i] {
                mask[i] = true;
                queue.push_back(i);
            }
        }
    }
    mask
}

/// Stopping rule for the fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Stop once every coordinate moves by at most this much in one sweep.
    pub tolerance: f64,
    /// Sweep budget; `None` uses `max(10 * N, 1000)`.
    pub max_iterations: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tolerance: 1e-10, max_iterations: None }
    }
}

impl SolverConfig {
    pub fn with_tolerance(tolerance: f64) -> Self {
        SolverConfig { tolerance, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid(format!("tolerance {} must be positive", self.tolerance)));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::invalid("max_iterations must be at least 1"));
        }
        Ok(())
    }

    pub fn budget(&self, n_nodes: usize) -> usize {
        self.max_iterations.unwrap_or_else(|| (10 * n_nodes).max(1000))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SatisfactionVector {
    pub scores: Vec<f64>,
    pub iterations_used: usize,
    /// Largest coordinate change in the final sweep.
    pub max_residual: f64,
    pub converged: bool,
}

impl SatisfactionVector {
    pub fn zeros(n: usize) -> Self {
        SatisfactionVector { scores: vec![0.0; n], iterations_used: 0, max_residual: 0.0, converged: true }
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.scores[i]
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Solves from the zero start (ratings at raters, 0 elsewhere).
///
/// With no raters the result is the all-zero vector.
pub fn solve_iterative(g: &TrustGraph, state: &SessionState, cfg: &SolverConfig) -> Result<SatisfactionVector> {
    let weights = compute_weights(g, state)?;
    solve_with_weights(g, state, &weights, cfg, None)
}

/// Solves starting from `start` (typically the previous session vector).
pub fn solve_iterative_warm(
    g: &TrustGraph,
    state: &SessionState,
    cfg: &SolverConfig,
    start: &[f64],
) -> Result<SatisfactionVector> {
    let weights = compute_weights(g, state)?;
    solve_with_weights(g, state, &weights, cfg, Some(start))
}

/// Core Jacobi sweep `s <- A s` over reachable non-raters, with a
/// caller-supplied weight table.
///
/// Unreachable nodes are pinned to 0 and raters to their ratings whatever
/// `start` holds.
pub fn solve_with_weights(
    g: &TrustGraph,
    state: &SessionState,
    weights: &Weights,
    cfg: &SolverConfig,
    start: Option<&[f64]>,
) -> Result<SatisfactionVector> {
    state.check_graph(g)?;
    cfg.validate()?;
    if weights.len() != g.n_edges() {
        return Err(Error::DimensionMismatch { expected: g.n_edges(), found: weights.len() });
    }
    if weights.alpha() != state.alpha() {
        return Err(Error::invalid("weight table was computed for a different alpha"));
    }
    let n = g.n_nodes();
    let reachable = reachability_mask(g, state.ratings());

    let mut current = vec![0.0; n];
    if let Some(start) = start {
        if start.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: start.len() });
        }
        for i in 0..n {
            if reachable[i] {
                current[i] = start[i].clamp(0.0, 1.0);
            }
        }
    }
    for (i, r) in state.raters() {
        current[i.index()] = r;
    }
    let active: Vec<usize> = (0..n).filter(|&i| reachable[i] && !state.is_rater(i)).collect();
    let budget = cfg.budget(n);
    let monotone = start.is_none();

    let mut next = current.clone();
    let mut iterations = 0;
    let mut residual = 0.0f64;
    let mut converged = active.is_empty();
    let targets = g.targets();
    while !converged && iterations < budget {
        iterations += 1;
        residual = 0.0;
        for &i in &active {
            let range = g.out_range(i);
            let w = &weights.values[range.clone()];
            let mut acc = 0.0;
            for (wij, &j) in w.iter().zip(&targets[range]) {
                acc += wij * current[j];
            }
            let acc = acc.min(1.0);
            debug_assert!(!monotone || acc >= current[i], "zero-start iterate decreased at node {i}");
            residual = residual.max((acc - current[i]).abs());
            next[i] = acc;
        }
        std::mem::swap(&mut current, &mut next);
        converged = residual <= cfg.tolerance;
    }
    Ok(SatisfactionVector { scores: current, iterations_used: iterations, max_residual: residual, converged })
}

/// Users with `s_i > b_i` (strict).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Satisfied {
    pub count: usize,
    pub mask: Vec<bool>,
}

impl Satisfied {
    pub fn fraction(&self) -> f64 {
        if self.mask.is_empty() {
            0.0
        } else {
            self.count as f64 / self.mask.len() as f64
        }
    }
}

pub fn satisfied_count(scores: &[f64], thresholds: &Thresholds) -> Satisfied {
    let mask: Vec<bool> = scores.iter().zip(thresholds.as_slice()).map(|(s, b)| s > b).collect();
    Satisfied { count: mask.iter().filter(|&&m| m).count(), mask }
}

/// Writes `node,score,satisfied` rows with scores to 12 significant digits.
pub fn write_satisfaction_csv<W: Write>(mut out: W, s: &SatisfactionVector, thresholds: &Thresholds) -> Result<()> {
    let satisfied = satisfied_count(&s.scores, thresholds);
    writeln!(out, "node,score,satisfied")?;
    for (i, (&score, &ok)) in s.scores.iter().zip(&satisfied.mask).enumerate() {
        writeln!(out, "{i},{},{}", sig(score, 12), u8::from(ok))?;
    }
    out.flush()?;
    Ok(())
}
