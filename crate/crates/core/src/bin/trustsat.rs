use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use trustsat::analytics::uniform_raters;
use trustsat::editing::{run_session, EditingConfig, RatingSource, TrustUpdateConfig};
use trustsat::experiments::{parse_seeds, parse_trust_dist, run_experiment, ExperimentConfig, ExperimentKind};
use trustsat::graph::{generate_erdos_renyi, load_graph, load_ratings, load_thresholds, save_graph, write_graph, ErdosRenyiSpec};
use trustsat::satisfaction::{satisfied_count, solve_iterative, write_satisfaction_csv, SessionState, SolverConfig};
use trustsat::selection::SelectionStrategy;
use trustsat::{Error, Result, Thresholds, TrustGraph};

#[derive(Parser)]
#[command(name = "trustsat", version, about = "Trust-based satisfaction estimation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random Erdős–Rényi trust graph.
    Generate(GenerateArgs),
    /// Solve satisfaction scores for a graph and rater set.
    Solve(SolveArgs),
    /// Run one review session and log every round.
    Session(SessionArgs),
    /// Unsatisfied fraction against rater fraction.
    SweepK(ExperimentArgs),
    /// Unsatisfied fraction against edge probability.
    SweepP(ExperimentArgs),
    /// Compare rater selection strategies.
    Compare(ExperimentArgs),
    /// Closed-form rater bounds, optionally with the empirical minimum.
    Bounds(ExperimentArgs),
    /// Empirical distribution of non-rater satisfaction.
    Cdf(ExperimentArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    nodes: usize,
    #[arg(long, conflicts_with = "edge_prob", default_value_t = 10.0)]
    avg_degree: f64,
    #[arg(long)]
    edge_prob: Option<f64>,
    /// `uniform`, `uniform:<lo>:<hi>` or `constant:<t>`.
    #[arg(long, default_value = "uniform")]
    trust: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
    #[arg(long)]
    max_iters: Option<usize>,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig { tolerance: self.tolerance, max_iterations: self.max_iters }
    }
}

#[derive(Args)]
struct ThresholdArgs {
    /// Threshold file with `node,threshold` rows.
    #[arg(long, conflicts_with = "b")]
    thresholds: Option<PathBuf>,
    /// Common threshold for every node.
    #[arg(long, default_value_t = 0.2)]
    b: f64,
}

impl ThresholdArgs {
    fn load(&self, n: usize) -> Result<Thresholds> {
        match &self.thresholds {
            Some(path) => {
                let th = load_thresholds(path)?;
                if th.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: th.len() });
                }
                Ok(th)
            }
            None => Thresholds::constant(n, self.b),
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    graph: PathBuf,
    #[command(flatten)]
    thresholds: ThresholdArgs,
    /// Rater file with `node,rating` rows.
    #[arg(long, conflicts_with = "rater_fraction")]
    raters: Option<PathBuf>,
    /// Pick this fraction of nodes as raters uniformly at random.
    #[arg(long)]
    rater_fraction: Option<f64>,
    /// Rating given by randomly picked raters.
    #[arg(long, default_value_t = 1.0)]
    rating: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SessionArgs {
    #[arg(long)]
    graph: PathBuf,
    #[command(flatten)]
    thresholds: ThresholdArgs,
    /// `marginal`, `trust` or `random`.
    #[arg(long, default_value = "marginal")]
    strategy: String,
    /// Rating every chosen rater gives.
    #[arg(long, default_value_t = 1.0, conflicts_with = "ratings")]
    rating: f64,
    /// Per-node ratings as `node,rating` rows covering every node.
    #[arg(long)]
    ratings: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long)]
    max_rounds: Option<usize>,
    /// Blend rater-rater trust after each rating.
    #[arg(long)]
    trust_update: bool,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, default_value_t = 16.0)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Where to write the graph after trust updates.
    #[arg(long)]
    graph_out: Option<PathBuf>,
}

/// Flags for the experiment subcommands; each overrides the matching key of
/// `--config`.
#[derive(Args)]
struct ExperimentArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    avg_degree: Option<f64>,
    #[arg(long)]
    edge_prob: Option<f64>,
    #[arg(long)]
    trust: Option<String>,
    /// Constant threshold(s), comma separated.
    #[arg(long)]
    b: Option<String>,
    /// Threshold file, or `trunc_normal:<mean>:<var>`.
    #[arg(long)]
    thresholds: Option<String>,
    #[arg(long)]
    rating: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma list or `start:step:stop`.
    #[arg(long)]
    k_grid: Option<String>,
    #[arg(long)]
    p_grid: Option<String>,
    /// `a..b` or a comma list.
    #[arg(long)]
    seeds: Option<String>,
    /// Shift the seed list to start here, keeping its length.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    strategies: Option<String>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    max_rounds: Option<usize>,
    #[arg(long)]
    targets: Option<String>,
    #[arg(long)]
    k_hat: bool,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

impl ExperimentArgs {
    fn resolve(&self, kind: ExperimentKind) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path, kind)?,
            None => ExperimentConfig::new(kind),
        };
        if cfg.experiment != kind {
            return Err(Error::InvalidParameter(format!(
                "config file is for {}, not {}",
                cfg.experiment.as_str(),
                kind.as_str()
            )));
        }
        let mut set = |key: &str, value: Option<String>| match value {
            Some(v) => cfg.set(key, &v),
            None => Ok(()),
        };
        set("nodes", self.nodes.map(|v| v.to_string()))?;
        set("avg_degree", self.avg_degree.map(|v| v.to_string()))?;
        set("edge_prob", self.edge_prob.map(|v| v.to_string()))?;
        set("trust", self.trust.clone())?;
        set("thresholds", self.b.clone())?;
        set(
            "thresholds",
            self.thresholds.as_ref().map(|t| if t.starts_with("trunc_normal:") { t.clone() } else { format!("file:{t}") }),
        )?;
        set("rating", self.rating.map(|v| v.to_string()))?;
        set("alpha", self.alpha.map(|v| v.to_string()))?;
        set("k_grid", self.k_grid.clone())?;
        set("p_grid", self.p_grid.clone())?;
        set("seeds", self.seeds.clone())?;
        set("strategies", self.strategies.clone())?;
        set("eta", self.eta.map(|v| v.to_string()))?;
        set("max_rounds", self.max_rounds.map(|v| v.to_string()))?;
        set("targets", self.targets.clone())?;
        set("k_hat", self.k_hat.then(|| "true".to_string()))?;
        set("tolerance", self.tolerance.map(|v| v.to_string()))?;
        set("max_iters", self.max_iters.map(|v| v.to_string()))?;
        set("out", self.out.as_ref().map(|p| p.display().to_string()))?;
        if let Some(start) = self.seed {
            let len = cfg.seeds.len() as u64;
            cfg.seeds = parse_seeds(&format!("{start}..{}", start + len))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn generate(args: &GenerateArgs) -> Result<()> {
    let trust = parse_trust_dist(&args.trust)?;
    let spec = match args.edge_prob {
        Some(p) => ErdosRenyiSpec { n_nodes: args.nodes, edge_prob: p, trust_dist: trust, seed: args.seed },
        None => ErdosRenyiSpec::with_mean_degree(args.nodes, args.avg_degree, trust, args.seed),
    };
    let g = generate_erdos_renyi(&spec)?;
    match &args.out {
        Some(p) => save_graph(&g, p)?,
        None => write_graph(&g, io::stdout().lock())?,
    }
    eprintln!("nodes={} edges={}", g.n_nodes(), g.n_edges());
    Ok(())
}

fn solve(args: &SolveArgs) -> Result<()> {
    let g = load_graph(&args.graph)?;
    let n = g.n_nodes();
    let thresholds = args.thresholds.load(n)?;
    let state = match (&args.raters, args.rater_fraction) {
        (Some(path), _) => SessionState::with_raters(thresholds, args.solver.alpha, load_ratings(path)?)?,
        (None, Some(k)) => {
            if !(0.0..=1.0).contains(&k) {
                return Err(Error::InvalidParameter(format!("rater fraction {k} is outside [0, 1]")));
            }
            SessionState::with_raters(thresholds, args.solver.alpha, uniform_raters(n, k, args.rating, args.seed))?
        }
        (None, None) => SessionState::new(thresholds, args.solver.alpha)?,
    };
    let s = solve_iterative(&g, &state, &args.solver.config())?;
    let mut out = output(args.out.as_deref())?;
    write_satisfaction_csv(&mut out, &s, state.thresholds())?;
    out.flush()?;
    let sat = satisfied_count(&s.scores, state.thresholds());
    eprintln!(
        "satisfied_fraction={} iterations_used={} converged={}",
        sat.fraction(),
        s.iterations_used,
        s.converged
    );
    Ok(())
}

fn session(args: &SessionArgs) -> Result<()> {
    let g: TrustGraph = load_graph(&args.graph)?;
    let n = g.n_nodes();
    let thresholds = args.thresholds.load(n)?;
    let rating_source = match &args.ratings {
        Some(path) => {
            let mut per_node = vec![None; n];
            for (i, r) in load_ratings(path)? {
                *per_node.get_mut(i).ok_or(Error::NodeOutOfRange { node: i, n_nodes: n })? = Some(r);
            }
            let values = per_node
                .into_iter()
                .enumerate()
                .map(|(i, r)| r.ok_or_else(|| Error::InvalidParameter(format!("no rating for node {i}"))))
                .collect::<Result<_>>()?;
            RatingSource::PerNode(values)
        }
        None => RatingSource::Constant(args.rating),
    };
    let strategy = match args.strategy.parse()? {
        SelectionStrategy::MarginalGreedy { .. } => SelectionStrategy::MarginalGreedy { assumed_rating: args.rating },
        other => other,
    };
    let mut cfg = EditingConfig::new(strategy, rating_source);
    cfg.eta = args.eta;
    cfg.max_rounds = args.max_rounds;
    cfg.alpha = args.solver.alpha;
    if args.trust_update {
        cfg.trust_update = Some(TrustUpdateConfig { gamma: args.gamma, p: args.p });
    }
    let rng = ChaCha8Rng::seed_from_u64(args.seed);
    let (graph, log) = run_session(&g, &thresholds, &cfg, &args.solver.config(), rng)?;
    let mut out = output(args.out.as_deref())?;
    log.write_csv(&mut out)?;
    out.flush()?;
    if let Some(p) = &args.graph_out {
        save_graph(&graph, p)?;
    }
    for w in &log.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!("status={} raters={}", log.status, log.n_raters());
    Ok(())
}

fn experiment(args: &ExperimentArgs, kind: ExperimentKind) -> Result<()> {
    let cfg = args.resolve(kind)?;
    let mut out = output(cfg.out.as_deref())?;
    run_experiment(&cfg, &mut out)?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve(a),
        Command::Session(a) => session(a),
        Command::SweepK(a) => experiment(a, ExperimentKind::KSweep),
        Command::SweepP(a) => experiment(a, ExperimentKind::PSweep),
        Command::Compare(a) => experiment(a, ExperimentKind::StrategyCompare),
        Command::Bounds(a) => experiment(a, ExperimentKind::BoundsCheck),
        Command::Cdf(a) => experiment(a, ExperimentKind::Cdf),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 3 } else { 4 })
        }
    }
}
