//! Full review sessions: publishing, deadlock and trust updates.
//!
//!     cargo run --release --example editing_session

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use trustsat::editing::{run_session, EditingConfig, EditingSession, RatingSource, TrustUpdateConfig};
use trustsat::graph::{generate_erdos_renyi, ErdosRenyiSpec, TrustDist};
use trustsat::selection::SelectionStrategy;
use trustsat::{SolverConfig, Thresholds};

fn main() -> trustsat::Result<()> {
    let n = 300;
    let spec = ErdosRenyiSpec::with_mean_degree(n, 8.0, TrustDist::Uniform { lo: 0.0, hi: 1.0 }, 21);
    let g = generate_erdos_renyi(&spec)?;
    let b = Thresholds::constant(n, 0.2)?;
    let solver = SolverConfig::default();

    for strategy in [
        SelectionStrategy::MarginalGreedy { assumed_rating: 1.0 },
        SelectionStrategy::TrustGreedy,
        SelectionStrategy::Random,
    ] {
        let cfg = EditingConfig { eta: 0.9, ..EditingConfig::new(strategy, RatingSource::Constant(1.0)) };
        let (_, log) = run_session(&g, &b, &cfg, &solver, ChaCha8Rng::seed_from_u64(3))?;
        println!("{:>8}: {} after {} raters", strategy.name(), log.status, log.n_raters());
    }

    // raters who dislike the document can stall it
    let cfg = EditingConfig::new(SelectionStrategy::TrustGreedy, RatingSource::Constant(0.1));
    let (_, log) = run_session(&g, &b, &cfg, &solver, ChaCha8Rng::seed_from_u64(3))?;
    println!("harsh raters: {} after {} raters", log.status, log.n_raters());

    // mixed ratings with trust blending between raters
    let ratings: Vec<f64> = (0..n).map(|i| if i % 4 == 0 { 0.15 } else { 0.9 }).collect();
    let cfg = EditingConfig {
        eta: 0.8,
        trust_update: Some(TrustUpdateConfig::default()),
        ..EditingConfig::new(SelectionStrategy::MarginalGreedy { assumed_rating: 1.0 }, RatingSource::PerNode(ratings))
    };
    let mut session = EditingSession::new(g.clone(), b, cfg, solver, ChaCha8Rng::seed_from_u64(4))?;
    for _ in 0..5 {
        if let Some(rec) = session.step()? {
            println!("round {}: node {} rated {:.2}, {:.1}% satisfied", rec.round, rec.rater, rec.rating, 100.0 * rec.fraction);
        }
    }
    let status = session.run()?;
    let edges_before = g.n_edges();
    let (g_after, log) = session.into_parts();
    println!(
        "{status} after {} raters; {} dissatisfied raters; edges {edges_before} -> {}",
        log.n_raters(),
        log.dissatisfied_raters.len(),
        g_after.n_edges()
    );
    log.write_csv(std::io::sink())?;
    Ok(())
}
