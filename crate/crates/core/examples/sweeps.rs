//! The simulation sweeps at a small size. The same configs drive the
//! `trustsat sweep-k`, `sweep-p`, `compare`, `bounds` and `cdf` commands.
//!
//!     cargo run --release --example sweeps

use std::io::stdout;

use trustsat::experiments::{run_experiment, ExperimentConfig, ExperimentKind, ThresholdModel};

fn main() -> trustsat::Result<()> {
    let mut k = ExperimentConfig::new(ExperimentKind::KSweep);
    k.nodes = 500;
    k.seeds = (0..3).collect();
    k.set("k_grid", "0:0.05:0.4")?;
    run_experiment(&k, stdout())?;

    println!();
    let mut p = ExperimentConfig::new(ExperimentKind::PSweep);
    p.nodes = 500;
    p.seeds = (0..3).collect();
    p.thresholds = ThresholdModel::Constant(vec![0.2]);
    run_experiment(&p, stdout())?;

    println!();
    let text = "experiment = strategy_compare\nnodes = 300\nseeds = 0..2\n";
    let compare = ExperimentConfig::parse(text, ExperimentKind::StrategyCompare)?;
    let mut buf = Vec::new();
    run_experiment(&compare, &mut buf)?;
    for line in String::from_utf8_lossy(&buf).lines().filter(|l| l.starts_with("# summary")) {
        println!("{line}");
    }

    println!();
    let mut cdf = ExperimentConfig::new(ExperimentKind::Cdf);
    cdf.nodes = 500;
    cdf.set("thresholds", "trunc_normal:0.25:0.144")?;
    buf.clear();
    run_experiment(&cdf, &mut buf)?;
    // header and summary only; the grid has a thousand rows
    for line in String::from_utf8_lossy(&buf).lines().filter(|l| l.starts_with('#')) {
        println!("{line}");
    }
    Ok(())
}
