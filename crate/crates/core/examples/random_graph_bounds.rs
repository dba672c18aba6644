//! Closed-form predictions on Erdos-Renyi graphs next to Monte Carlo.
//!
//!     cargo run --release --example random_graph_bounds

use trustsat::analytics::{
    community_thresholds, empirical_k_hat, empirical_satisfaction_cdf, expected_satisfaction, k_max_for_target,
    k_min_for_target, ModelParams,
};
use trustsat::graph::{ErdosRenyiSpec, TrustDist};
use trustsat::SolverConfig;

fn main() -> trustsat::Result<()> {
    let cfg = SolverConfig::default();
    let n = 2000;

    let p = ModelParams { lambda: 20.0, t: 0.5, r: 1.0, k: 0.2, b: 0.2 };
    let spec = ErdosRenyiSpec::with_mean_degree(n, p.lambda, TrustDist::Constant(p.t), 7);
    let cdf = empirical_satisfaction_cdf(&spec, &p, 0.5, 5, &cfg)?;
    println!("mean non-rater score: predicted {:.5}, simulated {:.5}", expected_satisfaction(&p), cdf.mean);
    for x in [0.1, 0.15, 0.2, 0.25] {
        let i = (x * 1000.0) as usize;
        println!("  F({x:.2}) = {:.3}", cdf.f[i]);
    }

    let p = ModelParams { lambda: 20.0, t: 0.8, r: 1.0, k: 0.0, b: 0.2 };
    let spec = ErdosRenyiSpec::with_mean_degree(n, p.lambda, TrustDist::Constant(p.t), 11);
    println!("\n   T   k_min   k_hat   k_max");
    for target in [0.3, 0.5, 0.7, 0.9] {
        let lo = k_min_for_target(&p, target)?;
        let hi = k_max_for_target(&p, target)?;
        let est = empirical_k_hat(&spec, &p, 0.5, target, 5, &cfg)?;
        let flag = if hi.saturated { " (no guarantee below 1)" } else { "" };
        println!("{target:.1}  {:.4}  {:.4}  {:.4}{flag}", lo.value, est.k_hat, hi.value);
    }

    let whole = community_thresholds(&p, 0.8)?;
    println!("\nwhole community at 0.8: k in [{:.4}, {:.4}]", whole.k_min, whole.k_max);
    Ok(())
}
