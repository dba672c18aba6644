#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trustsat::graph::{generate_erdos_renyi, ErdosRenyiSpec, TrustDist};
use trustsat::satisfaction::{reachability_mask, solve_iterative, solve_iterative_warm};
use trustsat::{SessionState, SolverConfig, Thresholds, TrustGraph};

pub type Check = Result<(), String>;

#[derive(Debug, Clone)]
pub struct Instance {
    pub g: TrustGraph,
    pub state: SessionState,
    /// Raters in the order they were added.
    pub raters: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Copy)]
pub struct InstanceShape {
    pub nodes: (usize, usize),
    pub degree: (f64, f64),
    pub rater_fraction: (f64, f64),
    pub alpha: f64,
    /// Every rater gets this rating when set.
    pub common_rating: Option<f64>,
    pub trust: TrustDist,
}

impl InstanceShape {
    pub fn small(alpha: f64) -> Self {
        InstanceShape { nodes: (2, 60), degree: (0.5, 6.0), rater_fraction: (0.0, 0.4), alpha, common_rating: None, trust: TrustDist::Uniform { lo: 0.0, hi: 1.0 } }
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo { rng.random_range(lo..=hi) } else { lo }
}

pub fn random_instance(seed: u64, shape: &InstanceShape) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(shape.nodes.0..=shape.nodes.1);
    let degree = uniform(&mut rng, shape.degree);
    let spec = ErdosRenyiSpec::with_mean_degree(n, degree, shape.trust, rng.random());
    let g = generate_erdos_renyi(&spec).unwrap();
    let b: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let k = uniform(&mut rng, shape.rater_fraction);
    let count = ((k * n as f64).round() as usize).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let raters: Vec<(usize, f64)> = order[..count]
        .iter()
        .map(|&i| (i, shape.common_rating.unwrap_or_else(|| rng.random())))
        .collect();
    let state = SessionState::with_raters(Thresholds::new(b).unwrap(), shape.alpha, raters.iter().copied()).unwrap();
    Instance { g, state, raters }
}

pub fn with_alpha(state: &SessionState, alpha: f64) -> SessionState {
    SessionState::with_raters(state.thresholds().clone(), alpha, state.raters().map(|(i, r)| (i.index(), r))).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn check_bounded(inst: &Instance, cfg: &SolverConfig) -> Check {
    let s = solve_iterative(&inst.g, &inst.state, cfg).map_err(|e| e.to_string())?;
    match s.scores.iter().position(|x| !(0.0..=1.0).contains(x)) {
        Some(i) => Err(format!("s[{i}] = {} outside [0, 1]", s.scores[i])),
        None => Ok(()),
    }
}

/// Every reachable non-rater sits between the smallest and largest
/// trust-discounted neighbour score.
pub fn check_conservative(inst: &Instance, cfg: &SolverConfig) -> Check {
    let s = solve_iterative(&inst.g, &inst.state, cfg).map_err(|e| e.to_string())?;
    let slack = 10.0 * cfg.tolerance;
    for i in 0..inst.g.n_nodes() {
        if inst.state.is_rater(i) || s.get(i) <= 0.0 {
            continue;
        }
        let (dst, t) = inst.g.out_edges(i);
        let discounted = dst.iter().zip(t).map(|(&j, &t)| t * s.get(j));
        let (lo, hi) = discounted.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if s.get(i) < lo - slack || s.get(i) > hi + slack {
            return Err(format!("s[{i}] = {} outside [{lo}, {hi}]", s.get(i)));
        }
    }
    Ok(())
}

/// Nodes with no path to a rater score exactly zero, raters keep their rating.
pub fn check_assumption_zeros(inst: &Instance, cfg: &SolverConfig) -> Check {
    let s = solve_iterative(&inst.g, &inst.state, cfg).map_err(|e| e.to_string())?;
    let reach = reachability_mask(&inst.g, inst.state.ratings());
    for i in 0..inst.g.n_nodes() {
        if let Some(r) = inst.state.rating(i) {
            if s.get(i) != r {
                return Err(format!("rater {i} scored {} instead of {r}", s.get(i)));
            }
        } else if !reach[i] && s.get(i) != 0.0 {
            return Err(format!("unreachable node {i} scored {}", s.get(i)));
        }
    }
    // a warm start full of ones must not leak into rater-free regions
    let warm = solve_iterative_warm(&inst.g, &inst.state, cfg, &vec![1.0; inst.g.n_nodes()]).map_err(|e| e.to_string())?;
    match (0..inst.g.n_nodes()).find(|&i| !reach[i] && warm.get(i) != 0.0) {
        Some(i) => Err(format!("warm start left {} at unreachable node {i}", warm.get(i))),
        None => Ok(()),
    }
}

pub fn check_rater_edge_deletion(inst: &Instance, cfg: &SolverConfig) -> Check {
    let before = solve_iterative(&inst.g, &inst.state, cfg).map_err(|e| e.to_string())?;
    let kept: Vec<_> = inst
        .g
        .edges()
        .filter(|&(s, d, _)| !(inst.state.is_rater(s) && inst.state.is_rater(d)))
        .collect();
    let pruned = TrustGraph::from_edges(inst.g.n_nodes(), kept).map_err(|e| e.to_string())?;
    let after = solve_iterative(&pruned, &inst.state, cfg).map_err(|e| e.to_string())?;
    if before.scores != after.scores {
        return Err(format!("scores moved by {}", max_abs_diff(&before.scores, &after.scores)));
    }
    Ok(())
}

fn reach_from(g: &TrustGraph, start: usize, forward: bool) -> Vec<bool> {
    let mut seen = vec![false; g.n_nodes()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(u) = stack.pop() {
        let next = if forward { g.out_edges(u).0 } else { g.in_edges(u).0 };
        for &v in next {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

/// Removes a node sharing no directed path with `focus` (either way) and
/// compares the focus score.
pub fn check_disconnected_deletion(inst: &Instance, cfg: &SolverConfig, focus: usize) -> Check {
    let n = inst.g.n_nodes();
    let focus = focus % n;
    let down = reach_from(&inst.g, focus, true);
    let up = reach_from(&inst.g, focus, false);
    let Some(victim) = (0..n).rev().find(|&m| !down[m] && !up[m]) else {
        return Ok(());
    };
    let remap = |i: usize| if i > victim { i - 1 } else { i };
    let edges: Vec<_> = inst
        .g
        .edges()
        .filter(|&(s, d, _)| s != victim && d != victim)
        .map(|(s, d, t)| (remap(s), remap(d), t))
        .collect();
    let g2 = TrustGraph::from_edges(n - 1, edges).map_err(|e| e.to_string())?;
    let b: Vec<f64> = (0..n).filter(|&i| i != victim).map(|i| inst.state.thresholds().get(i)).collect();
    let raters = inst.state.raters().filter(|(i, _)| i.index() != victim).map(|(i, r)| (remap(i.index()), r));
    let state2 = SessionState::with_raters(Thresholds::new(b).unwrap(), inst.state.alpha(), raters).unwrap();
    let s1 = solve_iterative(&inst.g, &inst.state, cfg).map_err(|e| e.to_string())?;
    let s2 = solve_iterative(&g2, &state2, cfg).map_err(|e| e.to_string())?;
    let diff = (s1.get(focus) - s2.get(remap(focus))).abs();
    if diff > 10.0 * cfg.tolerance {
        return Err(format!("deleting node {victim} moved s[{focus}] by {diff}"));
    }
    Ok(())
}

/// Same rater set built in two orders, solving after every addition with a
/// warm start, ends at the same vector.
pub fn check_order_irrelevance(inst: &Instance, cfg: &SolverConfig, shuffle_seed: u64) -> Check {
    let mut shuffled = inst.raters.clone();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
    let build = |order: &[(usize, f64)]| -> Result<Vec<f64>, String> {
        let mut state = SessionState::new(inst.state.thresholds().clone(), inst.state.alpha()).unwrap();
        let mut s = vec![0.0; inst.g.n_nodes()];
        for &(i, r) in order {
            state.add_rater(i, r).map_err(|e| e.to_string())?;
            s = solve_iterative_warm(&inst.g, &state, cfg, &s).map_err(|e| e.to_string())?.scores;
        }
        Ok(s)
    };
    let a = build(&inst.raters)?;
    let b = build(&shuffled)?;
    let fresh = solve_iterative(&inst.g, &inst.state, cfg).map_err(|e| e.to_string())?;
    let diff = max_abs_diff(&a, &b).max(max_abs_diff(&a, &fresh.scores));
    if diff > 10.0 * cfg.tolerance {
        return Err(format!("orders disagree by {diff}"));
    }
    Ok(())
}

/// Complete graph, a single rater, alpha = 1: each score is trust times rating.
pub fn check_single_rater_reduction(n: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                edges.push((i, j, 1.0 - rng.random::<f64>()));
            }
        }
    }
    let g = TrustGraph::from_edges(n, edges).unwrap();
    let rater = rng.random_range(0..n);
    let rating: f64 = rng.random();
    let state = SessionState::with_raters(Thresholds::constant(n, 0.5).unwrap(), 1.0, [(rater, rating)]).unwrap();
    let s = solve_iterative(&g, &state, &SolverConfig::default()).map_err(|e| e.to_string())?;
    for i in (0..n).filter(|&i| i != rater) {
        let want = g.trust(i, rater).unwrap() * rating;
        if (s.get(i) - want).abs() > 1e-12 {
            return Err(format!("s[{i}] = {} but t * r = {want}", s.get(i)));
        }
    }
    Ok(())
}

/// Coordinate-wise `s(alpha) >= s(0.5) - slack` when every rater shares a rating.
pub fn check_alpha_monotone(inst: &Instance, alpha: f64, cfg: &SolverConfig, slack: f64) -> Check {
    let base = solve_iterative(&inst.g, &with_alpha(&inst.state, 0.5), cfg).map_err(|e| e.to_string())?;
    let tilted = solve_iterative(&inst.g, &with_alpha(&inst.state, alpha), cfg).map_err(|e| e.to_string())?;
    for i in 0..inst.g.n_nodes() {
        if tilted.get(i) < base.get(i) - slack {
            return Err(format!("alpha {alpha}: s[{i}] fell from {} to {}", base.get(i), tilted.get(i)));
        }
    }
    Ok(())
}

/// Grows the rater set one node at a time at alpha = 0.5 and a fixed rating,
/// only ever adding non-raters whose score is at most that rating.
pub fn check_progressive(inst: &Instance, rating: f64, steps: usize, seed: u64, cfg: &SolverConfig, slack: f64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = SessionState::new(inst.state.thresholds().clone(), 0.5).unwrap();
    let mut s = solve_iterative(&inst.g, &state, cfg).map_err(|e| e.to_string())?;
    for step in 0..steps {
        let eligible: Vec<usize> =
            state.non_raters().map(|i| i.index()).filter(|&i| s.get(i) <= rating).collect();
        let Some(&pick) = eligible.get(rng.random_range(0..eligible.len().max(1))) else {
            break;
        };
        state.add_rater(pick, rating).map_err(|e| e.to_string())?;
        let next = solve_iterative_warm(&inst.g, &state, cfg, &s.scores).map_err(|e| e.to_string())?;
        if let Some(i) = (0..s.len()).find(|&i| next.get(i) < s.get(i) - slack) {
            return Err(format!("step {step}: adding {pick} dropped s[{i}] from {} to {}", s.get(i), next.get(i)));
        }
        s = next;
    }
    Ok(())
}
