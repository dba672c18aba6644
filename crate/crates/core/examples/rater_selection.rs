//! Compares rater picks from the three greedy strategies and the exact
//! optimum on a small graph, then checks the influence table against
//! re-solving.
//!
//!     cargo run --release --example rater_selection

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use trustsat::graph::{generate_erdos_renyi, ErdosRenyiSpec, TrustDist};
use trustsat::satisfaction::{satisfied_count, solve_iterative};
use trustsat::selection::{
    delta_init, delta_promote, marginal_gains, marginal_greedy_fast, select_marginal_greedy,
    select_optimal_exhaustive, select_random, select_trust_greedy,
};
use trustsat::{NodeId, SessionState, SolverConfig, Thresholds, TrustGraph};

const BUDGET: usize = 3;

fn satisfied_after(g: &TrustGraph, base: &SessionState, picks: &[NodeId], cfg: &SolverConfig) -> trustsat::Result<usize> {
    let mut state = base.clone();
    for p in picks {
        state.add_rater(p.index(), 1.0)?;
    }
    let s = solve_iterative(g, &state, cfg)?;
    Ok(satisfied_count(&s.scores, state.thresholds()).count)
}

fn main() -> trustsat::Result<()> {
    let cfg = SolverConfig::default();
    let spec = ErdosRenyiSpec::with_mean_degree(18, 3.0, TrustDist::Uniform { lo: 0.2, hi: 1.0 }, 5);
    let g = generate_erdos_renyi(&spec)?;
    let base = SessionState::new(Thresholds::constant(18, 0.25)?, 0.5)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    let s0 = solve_iterative(&g, &base, &cfg)?;
    let mut gains = marginal_gains(&g, &base, &s0, 1.0, &cfg)?;
    gains.sort_by_key(|&(i, gain)| (-gain, i));
    println!("best single raters: {:?}", &gains[..4]);

    let mut picks: Vec<(&str, Vec<NodeId>)> = vec![("marginal", vec![]), ("trust", vec![]), ("random", vec![])];
    for (name, chosen) in picks.iter_mut() {
        let mut state = base.clone();
        for _ in 0..BUDGET {
            let next = match *name {
                "marginal" => select_marginal_greedy(&g, &state, 1.0, &cfg)?,
                "trust" => select_trust_greedy(&g, &state)?,
                _ => select_random(&state, &mut rng)?,
            };
            state.add_rater(next.index(), 1.0)?;
            chosen.push(next);
        }
    }
    for (name, chosen) in &picks {
        println!("{name:>8}: {:?} -> {} satisfied", chosen, satisfied_after(&g, &base, chosen, &cfg)?);
    }
    let best = select_optimal_exhaustive(&g, &base, BUDGET, 1.0, &cfg)?;
    println!(" optimum: {:?} -> {} satisfied", best.raters, best.satisfied);

    // same greedy sequence from the influence table
    let mut state = base.clone();
    let mut dm = delta_init(&g, &state, &cfg)?;
    let mut fast = Vec::new();
    for _ in 0..BUDGET {
        let s = solve_iterative(&g, &state, &cfg)?;
        let next = marginal_greedy_fast(&g, &state, &s.scores, &dm, 1.0)?;
        state.add_rater(next.index(), 1.0)?;
        dm = delta_promote(dm, next)?;
        fast.push(next);
    }
    let drift = dm.max_abs_diff(&delta_init(&g, &state, &cfg)?);
    println!("table picks {fast:?}, drift from a fresh table {drift:.1e}");
    Ok(())
}
