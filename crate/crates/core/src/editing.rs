//! Review sessions: pick raters one at a time until enough users are
//! satisfied, optionally refreshing rater-rater trust as ratings arrive.

use std::fmt;
use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{NodeId, Thresholds, TrustGraph};
use crate::satisfaction::{
    compute_weights, satisfied_count, solve_with_weights, SatisfactionVector, SessionState, SolverConfig, Weights,
};
use crate::selection::{
    delta_init, marginal_greedy_fast, select_marginal_greedy_from, select_random, select_trust_greedy, DeltaMatrix,
    SelectionStrategy, DELTA_MAX_NON_RATERS,
};

#[derive(Debug, Clone, PartialEq)]
pub enum RatingSource {
    Constant(f64),
    /// One rating per node, used when that node becomes a rater.
    PerNode(Vec<f64>),
}

impl RatingSource {
    pub fn rating(&self, node: NodeId) -> f64 {
        match self {
            RatingSource::Constant(r) => *r,
            RatingSource::PerNode(v) => v[node.index()],
        }
    }

    fn validate(&self, n_nodes: usize) -> Result<()> {
        let bad = |r: f64| !(0.0..=1.0).contains(&r);
        match self {
            RatingSource::Constant(r) if bad(*r) => Err(Error::invalid(format!("rating {r} is outside [0, 1]"))),
            RatingSource::PerNode(v) if v.len() != n_nodes => {
                Err(Error::DimensionMismatch { expected: n_nodes, found: v.len() })
            }
            RatingSource::PerNode(v) => match v.iter().position(|&r| bad(r)) {
                Some(i) => Err(Error::invalid(format!("rating {} of node {i} is outside [0, 1]", v[i]))),
                None => Ok(()),
            },
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustUpdateConfig {
    pub gamma: f64,
    pub p: f64,
}

impl Default for TrustUpdateConfig {
    fn default() -> Self {
        TrustUpdateConfig { gamma: 0.5, p: 16.0 }
    }
}

impl TrustUpdateConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::invalid(format!("gamma {} is outside [0, 1]", self.gamma)));
        }
        if !(self.p > 0.0 && self.p.is_finite()) {
            return Err(Error::invalid(format!("p must be positive and finite, got {}", self.p)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EditingConfig {
    pub strategy: SelectionStrategy,
    /// Fraction of satisfied users needed to publish.
    pub eta: f64,
    /// `None` allows one round per node.
    pub max_rounds: Option<usize>,
    pub rating_source: RatingSource,
    pub trust_update: Option<TrustUpdateConfig>,
    pub alpha: f64,
}

impl EditingConfig {
    pub fn new(strategy: SelectionStrategy, rating_source: RatingSource) -> Self {
        EditingConfig { strategy, eta: 1.0, max_rounds: None, rating_source, trust_update: None, alpha: 0.5 }
    }

    pub fn validate(&self, n_nodes: usize) -> Result<()> {
        self.strategy.validate()?;
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::invalid(format!("eta {} is outside (0, 1]", self.eta)));
        }
        self.rating_source.validate(n_nodes)?;
        if let Some(tu) = &self.trust_update {
            tu.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionStatus {
    Published,
    Deadlock,
    BudgetExhausted,
}

impl SessionStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SessionStatus::Published => "published",
            SessionStatus::Deadlock => "deadlock",
            SessionStatus::BudgetExhausted => "budget_exhausted",
        }
    }
}

impl fmt::Display for SessionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub rater: NodeId,
    pub rating: f64,
    pub satisfied: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub rounds: Vec<RoundRecord>,
    pub status: SessionStatus,
    /// Raters whose rating did not exceed their own threshold.
    pub dissatisfied_raters: Vec<NodeId>,
    pub restarts: usize,
    pub warnings: Vec<String>,
}

impl SessionLog {
    pub fn n_raters(&self) -> usize {
        self.rounds.len()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "round,rater,rating,satisfied,fraction")?;
        for r in &self.rounds {
            writeln!(out, "{},{},{},{},{}", r.round, r.rater, r.rating, r.satisfied, r.fraction)?;
        }
        writeln!(out, "# status={}", self.status)?;
        Ok(())
    }
}

/// `gamma * t_old + (1 - gamma) / (1 + p |r_i - r_j|)`.
pub fn trust_update(t_old: f64, r_i: f64, r_j: f64, cfg: &TrustUpdateConfig) -> f64 {
    cfg.gamma * t_old + (1.0 - cfg.gamma) / (1.0 + cfg.p * (r_i - r_j).abs())
}

/// Blends trust both ways between `new_rater` and every other rater.
/// Missing edges count as `t_old = 0`.
pub fn apply_rater_trust_updates(
    g: &TrustGraph,
    state: &SessionState,
    new_rater: NodeId,
    cfg: &TrustUpdateConfig,
) -> Result<TrustGraph> {
    state.check_graph(g)?;
    let i = new_rater.index();
    let r_i = state.rating(i).ok_or_else(|| Error::invalid(format!("node {new_rater} has no rating")))?;
    let mut updates = Vec::new();
    for (j, r_j) in state.raters() {
        let j = j.index();
        if j == i {
            continue;
        }
        for (src, dst) in [(i, j), (j, i)] {
            let t = trust_update(g.trust(src, dst).unwrap_or(0.0), r_i, r_j, cfg);
            updates.push((src, dst, t.min(1.0)));
        }
    }
    if updates.is_empty() {
        return Ok(g.clone());
    }
    g.with_edge_updates(updates)
}

/// A single review session as a state machine.
///
/// The graph is owned because trust updates rewrite it; take it back with
/// [`EditingSession::into_parts`].
pub struct EditingSession<R> {
    graph: TrustGraph,
    cfg: EditingConfig,
    solver: SolverConfig,
    state: SessionState,
    weights: Weights,
    current: SatisfactionVector,
    delta: Option<DeltaMatrix>,
    rng: R,
    log: SessionLog,
    status: Option<SessionStatus>,
}

impl<R: Rng> EditingSession<R> {
    pub fn new(graph: TrustGraph, thresholds: Thresholds, cfg: EditingConfig, solver: SolverConfig, rng: R) -> Result<Self> {
        let n = graph.n_nodes();
        cfg.validate(n)?;
        solver.validate()?;
        let state = SessionState::new(thresholds, cfg.alpha)?;
        state.check_graph(&graph)?;
        let weights = compute_weights(&graph, &state)?;
        let mut session = EditingSession {
            graph,
            cfg,
            solver,
            state,
            weights,
            current: SatisfactionVector::zeros(n),
            delta: None,
            rng,
            log: SessionLog {
                rounds: Vec::new(),
                status: SessionStatus::BudgetExhausted,
                dissatisfied_raters: Vec::new(),
                restarts: 0,
                warnings: Vec::new(),
            },
            status: None,
        };
        session.status = session.terminal_status();
        Ok(session)
    }

    pub fn graph(&self) -> &TrustGraph {
        &self.graph
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn scores(&self) -> &SatisfactionVector {
        &self.current
    }

    pub fn log(&self) -> &SessionLog {
        &self.log
    }

    /// `Some` once the session has ended.
    pub fn status(&self) -> Option<SessionStatus> {
        self.status
    }

    /// Adds one rater. Returns `None` if the session had already ended.
    pub fn step(&mut self) -> Result<Option<&RoundRecord>> {
        if self.status.is_some() {
            return Ok(None);
        }
        let pick = self.select()?;
        let rating = self.cfg.rating_source.rating(pick);
        self.state.add_rater(pick.index(), rating)?;
        if rating <= self.state.thresholds().get(pick.index()) {
            self.log.dissatisfied_raters.push(pick);
        }
        if let Some(delta) = &mut self.delta {
            delta.promote(pick.index())?;
        }
        if let Some(tu) = self.cfg.trust_update {
            self.graph = apply_rater_trust_updates(&self.graph, &self.state, pick, &tu)?;
        }
        if self.cfg.trust_update.is_some() || !self.weights.is_rater_independent() {
            // trust updates shift edge positions even though non-rater rows keep their values
            self.weights = compute_weights(&self.graph, &self.state)?;
        }
        let next = solve_with_weights(&self.graph, &self.state, &self.weights, &self.solver, Some(&self.current.scores))?;
        if !next.converged {
            self.log.warnings.push(format!(
                "round {}: solver stopped after {} iterations with residual {:e}",
                self.log.rounds.len() + 1,
                next.iterations_used,
                next.max_residual
            ));
        }
        self.current = next;
        let sat = satisfied_count(&self.current.scores, self.state.thresholds());
        self.log.rounds.push(RoundRecord {
            round: self.log.rounds.len() + 1,
            rater: pick,
            rating,
            satisfied: sat.count,
            fraction: sat.fraction(),
        });
        self.status = self.terminal_status();
        Ok(self.log.rounds.last())
    }

    /// Models a document edit: every rating is discarded and scores return to
    /// zero. Trust learned so far is kept.
    pub fn restart(&mut self) -> Result<()> {
        self.state.clear_raters();
        self.current = SatisfactionVector::zeros(self.graph.n_nodes());
        self.delta = None;
        self.weights = compute_weights(&self.graph, &self.state)?;
        self.log.restarts += 1;
        self.status = self.terminal_status();
        Ok(())
    }

    /// Steps until the session ends.
    pub fn run(&mut self) -> Result<SessionStatus> {
        while self.status.is_none() {
            self.step()?;
        }
        Ok(self.status.unwrap())
    }

    pub fn into_parts(self) -> (TrustGraph, SessionLog) {
        let mut log = self.log;
        if let Some(status) = self.status {
            log.status = status;
        }
        (self.graph, log)
    }

    fn select(&mut self) -> Result<NodeId> {
        match self.cfg.strategy {
            SelectionStrategy::Random => select_random(&self.state, &mut self.rng),
            SelectionStrategy::TrustGreedy => select_trust_greedy(&self.graph, &self.state),
            SelectionStrategy::MarginalGreedy { assumed_rating } => {
                let non_raters = self.state.n_nodes() - self.state.n_raters();
                if non_raters > DELTA_MAX_NON_RATERS || self.state.alpha() != 0.5 {
                    return select_marginal_greedy_from(&self.graph, &self.state, &self.current, assumed_rating, &self.solver);
                }
                if self.delta.is_none() {
                    self.delta = Some(delta_init(&self.graph, &self.state, &self.solver)?);
                }
                let delta = self.delta.as_ref().unwrap();
                marginal_greedy_fast(&self.graph, &self.state, &self.current.scores, delta, assumed_rating)
            }
        }
    }

    fn terminal_status(&self) -> Option<SessionStatus> {
        let n = self.state.n_nodes();
        if n == 0 {
            return Some(SessionStatus::Published);
        }
        let sat = satisfied_count(&self.current.scores, self.state.thresholds());
        if sat.count as f64 >= self.cfg.eta * n as f64 {
            return Some(SessionStatus::Published);
        }
        // raters rating at or below their own threshold can never be satisfied
        let ceiling = n - self.log.dissatisfied_raters.len();
        if (ceiling as f64) < self.cfg.eta * n as f64 || self.state.n_raters() == n {
            return Some(SessionStatus::Deadlock);
        }
        let budget = self.cfg.max_rounds.unwrap_or(n);
        if self.log.rounds.len() >= budget {
            return Some(SessionStatus::BudgetExhausted);
        }
        None
    }
}

/// Runs a session to completion on a copy of `g`.
///
/// Returns the final graph (which differs from `g` only when trust updates
/// are enabled) together with the log.
pub fn run_session<R: Rng>(
    g: &TrustGraph,
    thresholds: &Thresholds,
    cfg: &EditingConfig,
    solver: &SolverConfig,
    rng: R,
) -> Result<(TrustGraph, SessionLog)> {
    let mut session = EditingSession::new(g.clone(), thresholds.clone(), cfg.clone(), *solver, rng)?;
    session.run()?;
    Ok(session.into_parts())
}
