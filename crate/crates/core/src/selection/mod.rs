//! Rater selection strategies.
//!
//! Every strategy picks one new rater among the current non-raters and breaks
//! ties by the smallest node index.

mod delta;

pub use delta::{delta_init, delta_promote, marginal_gains_fast, marginal_greedy_fast, DeltaMatrix, DELTA_MAX_NON_RATERS};

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{NodeId, TrustGraph};
use crate::satisfaction::{
    compute_weights, satisfied_count, solve_with_weights, SatisfactionVector, SessionState, SolverConfig, Weights,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionStrategy {
    /// Uniform over non-raters, drawn from the caller's generator.
    Random,
    /// Largest total incoming trust from non-raters.
    TrustGreedy,
    /// Largest marginal satisfaction assuming the candidate rates `assumed_rating`.
    MarginalGreedy { assumed_rating: f64 },
}

impl SelectionStrategy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SelectionStrategy::MarginalGreedy { assumed_rating } if !(assumed_rating > 0.0 && assumed_rating <= 1.0) => {
                Err(Error::invalid(format!("assumed rating {assumed_rating} is outside (0, 1]")))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SelectionStrategy::Random => "random",
            SelectionStrategy::TrustGreedy => "trust",
            SelectionStrategy::MarginalGreedy { .. } => "marginal",
        }
    }
}

impl fmt::Display for SelectionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses the CLI names `random`, `trust` and `marginal`; the assumed
/// rating defaults to 1.
impl FromStr for SelectionStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "random" => Ok(SelectionStrategy::Random),
            "trust" => Ok(SelectionStrategy::TrustGreedy),
            "marginal" => Ok(SelectionStrategy::MarginalGreedy { assumed_rating: 1.0 }),
            other => Err(Error::invalid(format!("unknown strategy {other:?}; expected random, trust or marginal"))),
        }
    }
}

pub fn select_random<R: Rng + ?Sized>(state: &SessionState, rng: &mut R) -> Result<NodeId> {
    let candidates: Vec<NodeId> = state.non_raters().collect();
    if candidates.is_empty() {
        return Err(Error::NoNonRaters);
    }
    Ok(candidates[rng.random_range(0..candidates.len())])
}

/// Non-rater with the largest `sum_{j non-rater} t_ji`.
pub fn select_trust_greedy(g: &TrustGraph, state: &SessionState) -> Result<NodeId> {
    state.check_graph(g)?;
    let mut best: Option<(usize, f64)> = None;
    for i in state.non_raters().map(NodeId::index) {
        let (sources, trust) = g.in_edges(i);
        let incoming: f64 = sources.iter().zip(trust).filter(|(&j, _)| !state.is_rater(j)).map(|(_, &t)| t).sum();
        if best.is_none_or(|(_, b)| incoming > b) {
            best = Some((i, incoming));
        }
    }
    best.map(|(i, _)| NodeId(i)).ok_or(Error::NoNonRaters)
}

/// Weight table suitable for `state`, reusing `cached` when it is rater-independent.
fn weights_for(g: &TrustGraph, state: &SessionState, cached: Option<&Weights>) -> Result<Weights> {
    match cached {
        Some(w) if w.is_rater_independent() && w.alpha() == state.alpha() => Ok(w.clone()),
        _ => compute_weights(g, state),
    }
}

/// Change in the number of satisfied users if `candidate` joins the raters
/// with rating `assumed_rating`. Solves both systems from scratch.
pub fn marginal_satisfaction(
    g: &TrustGraph,
    state: &SessionState,
    candidate: NodeId,
    assumed_rating: f64,
    cfg: &SolverConfig,
) -> Result<i64> {
    let weights = compute_weights(g, state)?;
    let current = solve_with_weights(g, state, &weights, cfg, None)?;
    marginal_satisfaction_from(g, state, &current, &weights, candidate, assumed_rating, cfg)
}

fn marginal_satisfaction_from(
    g: &TrustGraph,
    state: &SessionState,
    current: &SatisfactionVector,
    weights: &Weights,
    candidate: NodeId,
    assumed_rating: f64,
    cfg: &SolverConfig,
) -> Result<i64> {
    if state.is_rater(candidate.index()) {
        return Err(Error::invalid(format!("node {candidate} is already a rater")));
    }
    let before = satisfied_count(&current.scores, state.thresholds()).count as i64;
    let mut hypothetical = state.clone();
    hypothetical.add_rater(candidate.index(), assumed_rating)?;
    let weights = weights_for(g, &hypothetical, Some(weights))?;
    let after = solve_with_weights(g, &hypothetical, &weights, cfg, Some(&current.scores))?;
    Ok(satisfied_count(&after.scores, state.thresholds()).count as i64 - before)
}

/// Marginal satisfaction of every non-rater by re-solving, in index order.
pub fn marginal_gains(
    g: &TrustGraph,
    state: &SessionState,
    current: &SatisfactionVector,
    assumed_rating: f64,
    cfg: &SolverConfig,
) -> Result<Vec<(NodeId, i64)>> {
    let weights = compute_weights(g, state)?;
    state
        .non_raters()
        .map(|i| Ok((i, marginal_satisfaction_from(g, state, current, &weights, i, assumed_rating, cfg)?)))
        .collect()
}

pub(crate) fn argmax_gain(gains: &[(NodeId, i64)]) -> Option<(NodeId, i64)> {
    let mut best: Option<(NodeId, i64)> = None;
    for &(i, gain) in gains {
        if best.is_none_or(|(_, b)| gain > b) {
            best = Some((i, gain));
        }
    }
    best
}

/// Greedy pick by marginal satisfaction using full re-solves.
pub fn select_marginal_greedy(
    g: &TrustGraph,
    state: &SessionState,
    assumed_rating: f64,
    cfg: &SolverConfig,
) -> Result<NodeId> {
    let weights = compute_weights(g, state)?;
    let current = solve_with_weights(g, state, &weights, cfg, None)?;
    select_marginal_greedy_from(g, state, &current, assumed_rating, cfg)
}

/// As [`select_marginal_greedy`], reusing an already solved `current` vector.
pub fn select_marginal_greedy_from(
    g: &TrustGraph,
    state: &SessionState,
    current: &SatisfactionVector,
    assumed_rating: f64,
    cfg: &SolverConfig,
) -> Result<NodeId> {
    let gains = marginal_gains(g, state, current, assumed_rating, cfg)?;
    argmax_gain(&gains).map(|(i, _)| i).ok_or(Error::NoNonRaters)
}

/// Combinatorial limits for [`select_optimal_exhaustive`].
pub const EXHAUSTIVE_MAX_NON_RATERS: usize = 20;
pub const EXHAUSTIVE_MAX_BUDGET: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExhaustiveResult {
    pub raters: Vec<NodeId>,
    pub satisfied: usize,
}

/// Best set of at most `budget` new raters, all rating `assumed_rating`.
///
/// Ties go to the smaller set, then to the lexicographically smaller one.
pub fn select_optimal_exhaustive(
    g: &TrustGraph,
    state: &SessionState,
    budget: usize,
    assumed_rating: f64,
    cfg: &SolverConfig,
) -> Result<ExhaustiveResult> {
    state.check_graph(g)?;
    let candidates: Vec<usize> = state.non_raters().map(NodeId::index).collect();
    if candidates.len() > EXHAUSTIVE_MAX_NON_RATERS {
        return Err(Error::TooLarge { what: "non-rater count", size: candidates.len(), limit: EXHAUSTIVE_MAX_NON_RATERS });
    }
    if budget > EXHAUSTIVE_MAX_BUDGET {
        return Err(Error::TooLarge { what: "rater budget", size: budget, limit: EXHAUSTIVE_MAX_BUDGET });
    }
    let base_weights = compute_weights(g, state)?;
    let evaluate = |chosen: &[usize]| -> Result<usize> {
        let mut trial = state.clone();
        for &i in chosen {
            trial.add_rater(i, assumed_rating)?;
        }
        let weights = weights_for(g, &trial, Some(&base_weights))?;
        let s = solve_with_weights(g, &trial, &weights, cfg, None)?;
        Ok(satisfied_count(&s.scores, state.thresholds()).count)
    };

    let mut best = ExhaustiveResult { raters: Vec::new(), satisfied: evaluate(&[])? };
    for size in 1..=budget.min(candidates.len()) {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            let chosen: Vec<usize> = idx.iter().map(|&k| candidates[k]).collect();
            let count = evaluate(&chosen)?;
            if count > best.satisfied {
                best = ExhaustiveResult { raters: chosen.into_iter().map(NodeId).collect(), satisfied: count };
            }
            if !next_combination(&mut idx, candidates.len()) {
                break;
            }
        }
    }
    Ok(best)
}

/// Advances `idx` to the next `k`-combination of `0..n` in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for pos in (0..k).rev() {
        if idx[pos] < n - k + pos {
            idx[pos] += 1;
            for later in pos + 1..k {
                idx[later] = idx[later - 1] + 1;
            }
            return true;
        }
    }
    false
}
