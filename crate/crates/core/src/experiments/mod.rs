//! Simulation sweeps over random trust graphs and their configuration.
//!
//! A config is a flat `key = value` text file; `#` starts a comment. The
//! same keys can be set one at a time with [`ExperimentConfig::set`], which
//! is how command-line flags override a file.
//!
//! ```text
//! experiment = k_sweep
//! nodes = 2000
//! avg_degree = 50
//! trust = uniform
//! thresholds = 0.2, 0.3, 0.4
//! k_grid = 0:0.02:0.4
//! seeds = 0..10
//! ```

mod sweeps;
mod thresholds;

pub use sweeps::{
    bounds_check, compare_strategies, run_experiment, sweep_k, sweep_p, cdf_experiment, write_bounds_report,
    write_cdf_report, write_compare_report, write_sweep_csv, CompareReport, CurvePoint, StrategySummary, SweepRow,
};
pub use thresholds::{truncated_normal_thresholds, TruncatedNormal};

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{load_thresholds, ErdosRenyiSpec, Thresholds, TrustDist};
use crate::satisfaction::SolverConfig;
use crate::selection::SelectionStrategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    KSweep,
    PSweep,
    StrategyCompare,
    BoundsCheck,
    Cdf,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::KSweep => "k_sweep",
            ExperimentKind::PSweep => "p_sweep",
            ExperimentKind::StrategyCompare => "strategy_compare",
            ExperimentKind::BoundsCheck => "bounds_check",
            ExperimentKind::Cdf => "cdf",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "k_sweep" | "sweep-k" => ExperimentKind::KSweep,
            "p_sweep" | "sweep-p" => ExperimentKind::PSweep,
            "strategy_compare" | "compare" => ExperimentKind::StrategyCompare,
            "bounds_check" | "bounds" => ExperimentKind::BoundsCheck,
            "cdf" => ExperimentKind::Cdf,
            other => return Err(Error::invalid(format!("unknown experiment {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ThresholdModel {
    /// One curve per value.
    Constant(Vec<f64>),
    File(PathBuf),
    /// Target post-truncation mean and the variance of the underlying normal.
    TruncatedNormal { mean: f64, var: f64 },
}

impl ThresholdModel {
    /// One `(label, thresholds)` pair per curve.
    pub fn realize(&self, n: usize, seed: u64) -> Result<Vec<(String, Thresholds)>> {
        match self {
            ThresholdModel::Constant(bs) => bs.iter().map(|&b| Ok((b.to_string(), Thresholds::constant(n, b)?))).collect(),
            ThresholdModel::File(path) => {
                let th = load_thresholds(path)?;
                if th.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: th.len() });
                }
                Ok(vec![(path.display().to_string(), th)])
            }
            ThresholdModel::TruncatedNormal { mean, var } => {
                let tn = truncated_normal_thresholds(n, *mean, *var, seed)?;
                Ok(vec![("trunc_normal".to_string(), tn.thresholds)])
            }
        }
    }
}

impl fmt::Display for ThresholdModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdModel::Constant(bs) => f.write_str(&join(bs)),
            ThresholdModel::File(p) => write!(f, "file:{}", p.display()),
            ThresholdModel::TruncatedNormal { mean, var } => write!(f, "trunc_normal:{mean}:{var}"),
        }
    }
}

impl FromStr for ThresholdModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(ThresholdModel::File(PathBuf::from(path)));
        }
        if let Some(rest) = s.strip_prefix("trunc_normal:") {
            let (mean, var) = rest.split_once(':').ok_or_else(|| Error::invalid("expected trunc_normal:<mean>:<var>"))?;
            return Ok(ThresholdModel::TruncatedNormal { mean: parse_f64(mean)?, var: parse_f64(var)? });
        }
        let bs = parse_list(s)?;
        if let Some(b) = bs.iter().find(|b| !(0.0..=1.0).contains(*b)) {
            return Err(Error::invalid(format!("threshold {b} is outside [0, 1]")));
        }
        Ok(ThresholdModel::Constant(bs))
    }
}

/// Reads `uniform`, `uniform:<lo>:<hi>` or `constant:<t>`.
pub fn parse_trust_dist(s: &str) -> Result<TrustDist> {
    let dist = match s.split(':').collect::<Vec<_>>().as_slice() {
        ["uniform"] => TrustDist::Uniform { lo: 0.0, hi: 1.0 },
        ["uniform", lo, hi] => TrustDist::Uniform { lo: parse_f64(lo)?, hi: parse_f64(hi)? },
        ["constant", t] => TrustDist::Constant(parse_f64(t)?),
        _ => return Err(Error::invalid(format!("bad trust distribution {s:?}; expected uniform[:lo:hi] or constant:<t>"))),
    };
    dist.validate()?;
    Ok(dist)
}

pub fn format_trust_dist(d: &TrustDist) -> String {
    match d {
        TrustDist::Constant(t) => format!("constant:{t}"),
        TrustDist::Uniform { lo, hi } => format!("uniform:{lo}:{hi}"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub nodes: usize,
    /// Mean out-degree `D`; the edge probability is `D / nodes`.
    pub avg_degree: f64,
    pub trust: TrustDist,
    pub thresholds: ThresholdModel,
    pub rating: f64,
    pub alpha: f64,
    pub k_grid: Vec<f64>,
    /// Edge probabilities for `p_sweep`.
    pub p_grid: Vec<f64>,
    pub seeds: Vec<u64>,
    pub strategies: Vec<SelectionStrategy>,
    pub eta: f64,
    pub max_rounds: Option<usize>,
    /// Non-rater proportions `T` for `bounds_check`.
    pub targets: Vec<f64>,
    /// Also bisect the empirical rater fraction in `bounds_check`.
    pub k_hat: bool,
    pub tolerance: f64,
    pub max_iters: Option<usize>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Desk-scale defaults for each experiment; `N = 2000` throughout.
    pub fn new(experiment: ExperimentKind) -> Self {
        let mut cfg = ExperimentConfig {
            experiment,
            nodes: 2000,
            avg_degree: 50.0,
            trust: TrustDist::Uniform { lo: 0.0, hi: 1.0 },
            thresholds: ThresholdModel::Constant(vec![0.2]),
            rating: 1.0,
            alpha: 0.5,
            k_grid: grid(0.0, 0.02, 0.4),
            p_grid: vec![0.0, 0.0025, 0.005, 0.01, 0.025, 0.05, 0.075, 0.1],
            seeds: (0..10).collect(),
            strategies: vec![
                SelectionStrategy::MarginalGreedy { assumed_rating: 1.0 },
                SelectionStrategy::TrustGreedy,
                SelectionStrategy::Random,
            ],
            eta: 1.0,
            max_rounds: None,
            targets: grid(0.1, 0.1, 0.9),
            k_hat: false,
            tolerance: 1e-10,
            max_iters: None,
            out: None,
        };
        match experiment {
            ExperimentKind::KSweep => cfg.thresholds = ThresholdModel::Constant(vec![0.2, 0.3, 0.4]),
            ExperimentKind::PSweep => cfg.k_grid = vec![0.07, 0.1, 0.16, 0.2],
            ExperimentKind::StrategyCompare => cfg.avg_degree = 10.0,
            ExperimentKind::BoundsCheck => {
                cfg.avg_degree = 20.0;
                cfg.trust = TrustDist::Constant(0.8);
                cfg.seeds = (0..20).collect();
            }
            ExperimentKind::Cdf => {
                cfg.avg_degree = 20.0;
                cfg.trust = TrustDist::Constant(0.5);
                cfg.k_grid = vec![0.2];
            }
        }
        cfg
    }

    /// Reads a config file. The `experiment` key, if present, must come
    /// first or match `default`.
    pub fn from_file(path: &Path, default: ExperimentKind) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, default)
    }

    pub fn parse(text: &str, default: ExperimentKind) -> Result<Self> {
        let pairs = parse_pairs(text)?;
        let kind = match pairs.iter().find(|(k, _, _)| k == "experiment") {
            Some((_, v, _)) => v.parse()?,
            None => default,
        };
        let mut cfg = ExperimentConfig::new(kind);
        for (key, value, line) in pairs {
            cfg.set(&key, &value).map_err(|e| Error::Parse { line, message: e.to_string() })?;
        }
        Ok(cfg)
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "experiment" => self.experiment = value.parse()?,
            "nodes" => self.nodes = parse_usize(value)?,
            "avg_degree" => self.avg_degree = parse_f64(value)?,
            "edge_prob" => self.avg_degree = parse_f64(value)? * self.nodes as f64,
            "trust" => self.trust = parse_trust_dist(value)?,
            "thresholds" => self.thresholds = value.parse()?,
            "rating" => self.rating = parse_f64(value)?,
            "alpha" => self.alpha = parse_f64(value)?,
            "k_grid" => self.k_grid = parse_list(value)?,
            "p_grid" => self.p_grid = parse_list(value)?,
            "seeds" => self.seeds = parse_seeds(value)?,
            "strategies" => {
                self.strategies = value.split(',').map(|s| s.trim().parse()).collect::<Result<_>>()?;
            }
            "eta" => self.eta = parse_f64(value)?,
            "max_rounds" => self.max_rounds = parse_optional(value)?,
            "targets" => self.targets = parse_list(value)?,
            "k_hat" => {
                self.k_hat = value.parse().map_err(|_| Error::invalid(format!("expected true or false, got {value:?}")))?;
            }
            "tolerance" => self.tolerance = parse_f64(value)?,
            "max_iters" => self.max_iters = parse_optional(value)?,
            "out" => self.out = if value.is_empty() { None } else { Some(PathBuf::from(value)) },
            other => return Err(Error::invalid(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 {
            return Err(Error::invalid("nodes must be positive"));
        }
        // the closed-form bounds alone accept lambda = inf
        let formula_only = self.experiment == ExperimentKind::BoundsCheck && !self.k_hat;
        let max_degree = if formula_only { f64::INFINITY } else { (self.nodes.max(2) - 1) as f64 };
        if !(self.avg_degree >= 0.0 && self.avg_degree <= max_degree) {
            return Err(Error::invalid(format!("average degree {} is out of range", self.avg_degree)));
        }
        self.trust.validate()?;
        if !(0.5..=1.0).contains(&self.alpha) {
            return Err(Error::invalid(format!("alpha {} is outside [0.5, 1]", self.alpha)));
        }
        if !(self.rating >= 0.0 && self.rating <= 1.0) {
            return Err(Error::invalid(format!("rating {} is outside [0, 1]", self.rating)));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("seed list is empty"));
        }
        let unit = |v: &f64| (0.0..=1.0).contains(v);
        match self.experiment {
            ExperimentKind::KSweep | ExperimentKind::Cdf => check_grid("k_grid", &self.k_grid, unit)?,
            ExperimentKind::PSweep => {
                check_grid("k_grid", &self.k_grid, unit)?;
                check_grid("p_grid", &self.p_grid, unit)?;
            }
            ExperimentKind::StrategyCompare => {
                if self.strategies.is_empty() {
                    return Err(Error::invalid("strategy list is empty"));
                }
                if !(self.eta > 0.0 && self.eta <= 1.0) {
                    return Err(Error::invalid(format!("eta {} is outside (0, 1]", self.eta)));
                }
            }
            ExperimentKind::BoundsCheck => {
                check_grid("targets", &self.targets, |t| *t > 0.0 && *t < 1.0)?;
                if !matches!(self.trust, TrustDist::Constant(_)) {
                    return Err(Error::invalid("bounds_check needs a constant trust distribution"));
                }
            }
        }
        self.solver().validate()
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig { tolerance: self.tolerance, max_iterations: self.max_iters }
    }

    pub fn graph_spec(&self, avg_degree: f64, seed: u64) -> ErdosRenyiSpec {
        ErdosRenyiSpec::with_mean_degree(self.nodes, avg_degree, self.trust, seed)
    }

    /// Every key with its resolved value, in file order.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<usize>| v.map_or_else(String::new, |v| v.to_string());
        vec![
            ("experiment", self.experiment.as_str().to_string()),
            ("nodes", self.nodes.to_string()),
            ("avg_degree", self.avg_degree.to_string()),
            ("trust", format_trust_dist(&self.trust)),
            ("thresholds", self.thresholds.to_string()),
            ("rating", self.rating.to_string()),
            ("alpha", self.alpha.to_string()),
            ("k_grid", join(&self.k_grid)),
            ("p_grid", join(&self.p_grid)),
            ("seeds", self.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",")),
            ("strategies", self.strategies.iter().map(|s| s.name()).collect::<Vec<_>>().join(",")),
            ("eta", self.eta.to_string()),
            ("max_rounds", opt(self.max_rounds)),
            ("targets", join(&self.targets)),
            ("k_hat", self.k_hat.to_string()),
            ("tolerance", crate::fmt::sig(self.tolerance, 17)),
            ("max_iters", opt(self.max_iters)),
        ]
    }

    /// `# key = value` lines echoing the configuration.
    pub fn write_header<W: Write>(&self, out: &mut W) -> Result<()> {
        for (k, v) in self.pairs() {
            writeln!(out, "# {k} = {v}")?;
        }
        Ok(())
    }
}

fn parse_pairs(text: &str) -> Result<Vec<(String, String, usize)>> {
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: idx + 1, message: format!("expected key = value, got {line:?}") })?;
        pairs.push((k.trim().to_string(), v.trim().to_string(), idx + 1));
    }
    Ok(pairs)
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::invalid(format!("expected a number, got {s:?}")))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| Error::invalid(format!("expected a non-negative integer, got {s:?}")))
}

fn parse_optional(s: &str) -> Result<Option<usize>> {
    if s.is_empty() || s == "none" {
        Ok(None)
    } else {
        parse_usize(s).map(Some)
    }
}

/// `a,b,c` or an inclusive range `start:step:stop`.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, step, stop] => {
            let (start, step, stop) = (parse_f64(start)?, parse_f64(step)?, parse_f64(stop)?);
            if !(step > 0.0) || stop < start {
                return Err(Error::invalid(format!("bad range {s:?}")));
            }
            Ok(grid(start, step, stop))
        }
        [_] => s.split(',').map(parse_f64).collect(),
        _ => Err(Error::invalid(format!("bad list {s:?}"))),
    }
}

/// `a..b` (half open) or a comma list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::invalid(format!("bad seed list {s:?}"));
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        return Ok((a..b).collect());
    }
    s.split(',').map(|v| v.trim().parse().map_err(|_| bad())).collect()
}

fn grid(start: f64, step: f64, stop: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    // rounded so that 0.1 * 3 prints as 0.3
    (0..=n).map(|i| ((start + step * i as f64) * 1e12).round() / 1e12).collect()
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn check_grid(name: &str, v: &[f64], in_range: impl Fn(&f64) -> bool) -> Result<()> {
    if v.is_empty() {
        return Err(Error::invalid(format!("{name} is empty")));
    }
    if v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(format!("{name} must be strictly increasing")));
    }
    if let Some(x) = v.iter().find(|x| !in_range(x)) {
        return Err(Error::invalid(format!("{name} value {x} is out of range")));
    }
    Ok(())
}
