//! Pairwise influence coefficients for the `alpha = 0.5` greedy fast path.
//!
//! `delta(i, j)` is the rise in non-rater `j`'s score per unit rise pinned at
//! non-rater `i`, with every rater held fixed. Promoting `i` to a rater with
//! rating `r` moves every other non-rater by `(r - s_i) * delta(i, j)`, so
//! one table answers every candidate's marginal satisfaction in `O(N)`.
//!
//! When `k` joins the raters, paths through `k` stop carrying influence:
//!
//! ```text
//! raw(i, j)    = delta(i, j) - delta(i, k) * delta(k, j)
//! delta'(i, j) = raw(i, j) / raw(i, i)
//! ```
//!
//! `raw(i, i) = 1 - delta(i, k) * delta(k, i)` differs from 1 exactly when
//! `i` and `k` lie on a common trust cycle; dividing it out restores
//! `delta'(i, i) = 1`.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{NodeId, TrustGraph};
use crate::satisfaction::{compute_weights, rater_set_fingerprint, satisfied_count, SessionState, SolverConfig, Weights};

/// The dense table is `N x N` doubles; beyond this many non-raters callers
/// should fall back to re-solving.
pub const DELTA_MAX_NON_RATERS: usize = 5000;

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaMatrix {
    n: usize,
    /// Row-major; row `i` holds the influence of `i` on every node.
    values: Vec<f64>,
    active: Vec<bool>,
    fingerprint: u64,
}

impl DeltaMatrix {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// Whether `i` is still a non-rater in this table.
    pub fn is_active(&self, i: usize) -> bool {
        self.active[i]
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn is_valid_for(&self, state: &SessionState) -> bool {
        self.n == state.n_nodes() && self.fingerprint == state.fingerprint()
    }

    /// Largest entry-wise difference over active pairs; `inf` if the
    /// non-rater sets differ.
    pub fn max_abs_diff(&self, other: &DeltaMatrix) -> f64 {
        if self.n != other.n || self.active != other.active {
            return f64::INFINITY;
        }
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Applies the promotion of `k` in place.
    pub fn promote(&mut self, k: usize) -> Result<()> {
        if k >= self.n || !self.active[k] {
            return Err(Error::StaleDelta);
        }
        let n = self.n;
        let pivot: Vec<f64> = self.row(k).to_vec();
        let active = &self.active;
        self.values.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            if i == k || !active[i] {
                return;
            }
            let through = row[k];
            if through != 0.0 {
                for j in 0..n {
                    row[j] -= through * pivot[j];
                }
                let scale = row[i];
                debug_assert!(scale > 0.0);
                for v in row.iter_mut() {
                    *v /= scale;
                }
            }
            row[k] = 0.0;
        });
        self.values[k * n..(k + 1) * n].iter_mut().for_each(|v| *v = 0.0);
        self.active[k] = false;
        self.fingerprint = rater_set_fingerprint(n, (0..n).filter(|&i| !self.active[i]));
        Ok(())
    }
}

/// Builds the table by one unit-injection solve per non-rater.
///
/// For source `i`: pin `s_i = 1`, pin every rater at 0 and iterate
/// `s_j <- sum_l w_jl s_l` over the non-raters upstream of `i` until no
/// coordinate moves by more than `cfg.tolerance`.
pub fn delta_init(g: &TrustGraph, state: &SessionState, cfg: &SolverConfig) -> Result<DeltaMatrix> {
    if state.alpha() != 0.5 {
        return Err(Error::AlphaUnsupported(state.alpha()));
    }
    cfg.validate()?;
    let weights = compute_weights(g, state)?;
    let n = g.n_nodes();
    let non_raters = n - state.n_raters();
    if non_raters > DELTA_MAX_NON_RATERS {
        return Err(Error::TooLarge { what: "non-rater count", size: non_raters, limit: DELTA_MAX_NON_RATERS });
    }
    let active: Vec<bool> = (0..n).map(|i| !state.is_rater(i)).collect();
    let mut values = vec![0.0; n * n];
    values.par_chunks_mut(n.max(1)).enumerate().take(n).for_each(|(i, row)| {
        if active[i] {
            unit_injection(g, &weights, &active, i, cfg, row);
        }
    });
    Ok(DeltaMatrix { n, values, active, fingerprint: state.fingerprint() })
}

fn unit_injection(g: &TrustGraph, weights: &Weights, active: &[bool], source: usize, cfg: &SolverConfig, out: &mut [f64]) {
    // Only non-raters with a rater-free path to `source` can feel it.
    let mut upstream = Vec::new();
    let mut seen = vec![false; g.n_nodes()];
    seen[source] = true;
    let mut queue = VecDeque::from([source]);
    while let Some(j) = queue.pop_front() {
        for &i in g.in_edges(j).0 {
            if !seen[i] && active[i] {
                seen[i] = true;
                upstream.push(i);
                queue.push_back(i);
            }
        }
    }
    upstream.sort_unstable();

    let mut current = vec![0.0; g.n_nodes()];
    current[source] = 1.0;
    let mut next = current.clone();
    let budget = cfg.budget(g.n_nodes());
    for _ in 0..budget {
        let mut residual = 0.0f64;
        for &j in &upstream {
            let (targets, _) = g.out_edges(j);
            let acc: f64 = weights.row(g, j).iter().zip(targets).map(|(w, &l)| w * current[l]).sum();
            residual = residual.max((acc - current[j]).abs());
            next[j] = acc;
        }
        std::mem::swap(&mut current, &mut next);
        if residual <= cfg.tolerance {
            break;
        }
    }
    out.copy_from_slice(&current);
}

/// Returns a copy of `dm` with `k` promoted to rater.
pub fn delta_promote(mut dm: DeltaMatrix, k: NodeId) -> Result<DeltaMatrix> {
    dm.promote(k.index())?;
    Ok(dm)
}

/// Marginal satisfaction of every non-rater from the table, in index order.
///
/// `scores` must be the solved vector for `state`.
pub fn marginal_gains_fast(
    state: &SessionState,
    scores: &[f64],
    dm: &DeltaMatrix,
    assumed_rating: f64,
) -> Result<Vec<(NodeId, i64)>> {
    if state.alpha() != 0.5 {
        return Err(Error::AlphaUnsupported(state.alpha()));
    }
    if !dm.is_valid_for(state) || scores.len() != dm.n {
        return Err(Error::StaleDelta);
    }
    let b = state.thresholds().as_slice();
    let before = satisfied_count(scores, state.thresholds()).mask;
    let gains = (0..dm.n)
        .into_par_iter()
        .filter(|&i| dm.active[i])
        .map(|i| {
            let lift = assumed_rating - scores[i];
            let row = dm.row(i);
            let mut gain = i64::from(assumed_rating > b[i]) - i64::from(before[i]);
            for j in 0..dm.n {
                if j != i && row[j] != 0.0 {
                    let after = scores[j] + lift * row[j] > b[j];
                    gain += i64::from(after) - i64::from(before[j]);
                }
            }
            (NodeId(i), gain)
        })
        .collect();
    Ok(gains)
}

/// Greedy marginal-satisfaction pick from the table; agrees with the
/// re-solving selector up to solver tolerance.
pub fn marginal_greedy_fast(
    g: &TrustGraph,
    state: &SessionState,
    scores: &[f64],
    dm: &DeltaMatrix,
    assumed_rating: f64,
) -> Result<NodeId> {
    state.check_graph(g)?;
    let gains = marginal_gains_fast(state, scores, dm, assumed_rating)?;
    super::argmax_gain(&gains).map(|(i, _)| i).ok_or(Error::NoNonRaters)
}
