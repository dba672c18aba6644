//! Three users in a line: 0 trusts 1, 1 trusts 2, and 2 reads the document.
//!
//!     cargo run --example solve_path

use trustsat::graph::{Thresholds, TrustGraph};
use trustsat::satisfaction::{satisfied_count, solve_dense_oracle, solve_iterative, SessionState, SolverConfig};

fn main() -> trustsat::Result<()> {
    let g = TrustGraph::from_edges(3, [(0, 1, 0.5), (1, 2, 0.6)])?;
    let thresholds = Thresholds::constant(3, 0.3)?;
    let state = SessionState::with_raters(thresholds.clone(), 0.5, [(2, 0.8)])?;

    let s = solve_iterative(&g, &state, &SolverConfig::default())?;
    let dense = solve_dense_oracle(&g, &state)?;
    let sat = satisfied_count(&s.scores, &thresholds);

    println!("node  score   dense   satisfied");
    for i in 0..3 {
        println!("{i:>4}  {:.4}  {:.4}  {}", s.get(i), dense.get(i), sat.mask[i]);
    }
    println!("{} sweeps, {} of 3 satisfied", s.iterations_used, sat.count);

    // raising alpha only matters when a node sees both raters and non-raters
    let g = TrustGraph::from_edges(3, [(0, 1, 0.9), (0, 2, 0.9)])?;
    for alpha in [0.5, 0.75, 1.0] {
        let state = SessionState::with_raters(Thresholds::constant(3, 0.3)?, alpha, [(2, 1.0)])?;
        let s = solve_iterative(&g, &state, &SolverConfig::default())?;
        println!("alpha {alpha:.2}: s0 = {:.4}", s.get(0));
    }
    Ok(())
}
