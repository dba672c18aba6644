use std::io::Write;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{ExperimentConfig, ExperimentKind, ThresholdModel};
use crate::analytics::{
    derive_seed, empirical_k_hat, empirical_satisfaction_cdf, expected_satisfaction, k_max_for_target, k_min_for_target,
    write_bounds_csv, write_cdf_csv, BoundsRow, EmpiricalCdf, ModelParams,
};
use crate::editing::{run_session, EditingConfig, RatingSource, SessionStatus};
use crate::error::{Error, Result};
use crate::fmt::sig;
use crate::graph::{generate_erdos_renyi, Thresholds, TrustDist, TrustGraph};
use crate::satisfaction::{satisfied_count, solve_iterative_warm, SessionState, SolverConfig};
use crate::selection::SelectionStrategy;

// Per-seed random streams: the graph and the rater order depend only on the
// seed, so every grid point sees the same instances.
const GRAPH_STREAM: u64 = 0;
const ORDER_STREAM: u64 = 1;
const THRESHOLD_STREAM: u64 = 2;
const SELECTION_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Threshold curve label.
    pub curve: String,
    pub k: f64,
    pub p: f64,
    pub mean_unsatisfied: f64,
    pub stderr: f64,
    pub n_seeds: usize,
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 || xs.iter().all(|&x| x == xs[0]) {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

struct Instance {
    graph: TrustGraph,
    order: Vec<usize>,
    curves: Vec<(String, Thresholds)>,
}

fn instance(cfg: &ExperimentConfig, avg_degree: f64, seed: u64) -> Result<Instance> {
    let n = cfg.nodes;
    let graph = generate_erdos_renyi(&cfg.graph_spec(avg_degree, derive_seed(seed, GRAPH_STREAM)))?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, ORDER_STREAM));
    let order = sample(&mut rng, n, n).into_vec();
    let curves = cfg.thresholds.realize(n, derive_seed(seed, THRESHOLD_STREAM))?;
    Ok(Instance { graph, order, curves })
}

/// Unsatisfied fraction per curve for each `k`, with raters taken as
/// prefixes of the instance's node order.
fn unsatisfied_along_k(inst: &Instance, cfg: &ExperimentConfig, solver: &SolverConfig) -> Result<Vec<Vec<f64>>> {
    let n = cfg.nodes;
    let mut prev = vec![0.0; n];
    let mut out = vec![Vec::with_capacity(cfg.k_grid.len()); inst.curves.len()];
    for &k in &cfg.k_grid {
        let m = ((k * n as f64).round() as usize).min(n);
        let raters = inst.order[..m].iter().map(|&i| (i, cfg.rating));
        // thresholds do not enter the solve; any curve will do
        let state = SessionState::with_raters(inst.curves[0].1.clone(), cfg.alpha, raters)?;
        let s = solve_iterative_warm(&inst.graph, &state, solver, &prev)?;
        for (c, (_, th)) in inst.curves.iter().enumerate() {
            out[c].push((n - satisfied_count(&s.scores, th).count) as f64 / n as f64);
        }
        prev = s.scores;
    }
    Ok(out)
}

fn aggregate(per_seed: &[Vec<Vec<f64>>], c: usize, j: usize) -> (f64, f64) {
    let xs: Vec<f64> = per_seed.iter().map(|s| s[c][j]).collect();
    mean_stderr(&xs)
}

/// Mean unsatisfied fraction against the rater fraction `k`, one curve per
/// threshold setting.
pub fn sweep_k(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let solver = cfg.solver();
    let per_seed: Vec<(Vec<String>, Vec<Vec<f64>>)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let inst = instance(cfg, cfg.avg_degree, seed)?;
            let labels = inst.curves.iter().map(|(l, _)| l.clone()).collect();
            Ok((labels, unsatisfied_along_k(&inst, cfg, &solver)?))
        })
        .collect::<Result<_>>()?;
    let labels = per_seed[0].0.clone();
    let values: Vec<Vec<Vec<f64>>> = per_seed.into_iter().map(|(_, v)| v).collect();
    let p = cfg.avg_degree / cfg.nodes as f64;
    let mut rows = Vec::new();
    for (c, label) in labels.iter().enumerate() {
        for (j, &k) in cfg.k_grid.iter().enumerate() {
            let (mean, stderr) = aggregate(&values, c, j);
            rows.push(SweepRow { curve: label.clone(), k, p, mean_unsatisfied: mean, stderr, n_seeds: values.len() });
        }
    }
    Ok(rows)
}

/// Mean unsatisfied fraction against the edge probability, one panel per
/// `k` and one curve per threshold setting.
pub fn sweep_p(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let solver = cfg.solver();
    let n = cfg.nodes as f64;
    // [p][seed] -> [curve][k]
    let mut grid = Vec::with_capacity(cfg.p_grid.len());
    let mut labels = Vec::new();
    for &p in &cfg.p_grid {
        let per_seed: Vec<(Vec<String>, Vec<Vec<f64>>)> = cfg
            .seeds
            .par_iter()
            .map(|&seed| {
                let inst = instance(cfg, p * n, seed)?;
                let labels = inst.curves.iter().map(|(l, _)| l.clone()).collect();
                Ok((labels, unsatisfied_along_k(&inst, cfg, &solver)?))
            })
            .collect::<Result<_>>()?;
        labels = per_seed[0].0.clone();
        grid.push(per_seed.into_iter().map(|(_, v)| v).collect::<Vec<_>>());
    }
    let mut rows = Vec::new();
    for (j, &k) in cfg.k_grid.iter().enumerate() {
        for (c, label) in labels.iter().enumerate() {
            for (pi, &p) in cfg.p_grid.iter().enumerate() {
                let (mean, stderr) = aggregate(&grid[pi], c, j);
                rows.push(SweepRow { curve: label.clone(), k, p, mean_unsatisfied: mean, stderr, n_seeds: cfg.seeds.len() });
            }
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(mut out: W, kind: ExperimentKind, rows: &[SweepRow]) -> Result<()> {
    match kind {
        ExperimentKind::PSweep => {
            writeln!(out, "p,mean_unsatisfied,stderr,k,b")?;
            for r in rows {
                writeln!(out, "{},{},{},{},{}", r.p, sig(r.mean_unsatisfied, 10), sig(r.stderr, 10), r.k, r.curve)?;
            }
        }
        _ => {
            writeln!(out, "k,mean_unsatisfied,stderr,b")?;
            for r in rows {
                writeln!(out, "{},{},{},{}", r.k, sig(r.mean_unsatisfied, 10), sig(r.stderr, 10), r.curve)?;
            }
        }
    }
    Ok(())
}

/// Satisfied fraction after `raters` picks in one session.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub strategy: &'static str,
    pub seed: u64,
    pub raters: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategySummary {
    pub strategy: &'static str,
    /// Raters used per seed; sessions that did not publish count as `N`.
    pub raters_to_publish: Vec<usize>,
    pub median: f64,
    pub published: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub curves: Vec<CurvePoint>,
    pub summary: Vec<StrategySummary>,
}

impl CompareReport {
    pub fn median(&self, strategy: &str) -> Option<f64> {
        self.summary.iter().find(|s| s.strategy == strategy).map(|s| s.median)
    }
}

fn median(v: &[usize]) -> f64 {
    let mut v = v.to_vec();
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

/// Runs a full session with every strategy on the same graphs.
pub fn compare_strategies(cfg: &ExperimentConfig) -> Result<CompareReport> {
    cfg.validate()?;
    if matches!(&cfg.thresholds, ThresholdModel::Constant(bs) if bs.len() != 1) {
        return Err(Error::invalid("strategy comparison takes a single threshold setting"));
    }
    let solver = cfg.solver();
    let jobs: Vec<(u64, SelectionStrategy)> =
        cfg.seeds.iter().flat_map(|&s| cfg.strategies.iter().map(move |&st| (s, st))).collect();
    let results: Vec<(u64, SelectionStrategy, Option<usize>, Vec<f64>)> = jobs
        .par_iter()
        .map(|&(seed, strategy)| {
            let inst = instance(cfg, cfg.avg_degree, seed)?;
            let mut ecfg = EditingConfig::new(strategy, RatingSource::Constant(cfg.rating));
            ecfg.eta = cfg.eta;
            ecfg.max_rounds = cfg.max_rounds;
            ecfg.alpha = cfg.alpha;
            let rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, SELECTION_STREAM));
            let (_, log) = run_session(&inst.graph, &inst.curves[0].1, &ecfg, &solver, rng)?;
            let used = (log.status == SessionStatus::Published).then(|| log.n_raters());
            Ok((seed, strategy, used, log.rounds.iter().map(|r| r.fraction).collect()))
        })
        .collect::<Result<_>>()?;

    let mut curves = Vec::new();
    for (seed, strategy, _, fractions) in &results {
        for (i, &fraction) in fractions.iter().enumerate() {
            curves.push(CurvePoint { strategy: strategy.name(), seed: *seed, raters: i + 1, fraction });
        }
    }
    let summary = cfg
        .strategies
        .iter()
        .map(|st| {
            let runs: Vec<_> = results.iter().filter(|r| r.1 == *st).collect();
            let used: Vec<usize> = runs.iter().map(|r| r.2.unwrap_or(cfg.nodes)).collect();
            let published = runs.iter().filter(|r| r.2.is_some()).count();
            StrategySummary { strategy: st.name(), median: median(&used), raters_to_publish: used, published }
        })
        .collect();
    Ok(CompareReport { curves, summary })
}

pub fn write_compare_report<W: Write>(mut out: W, report: &CompareReport) -> Result<()> {
    writeln!(out, "strategy,seed,raters,fraction")?;
    for c in &report.curves {
        writeln!(out, "{},{},{},{}", c.strategy, c.seed, c.raters, c.fraction)?;
    }
    for s in &report.summary {
        let per_seed: Vec<String> = s.raters_to_publish.iter().map(usize::to_string).collect();
        writeln!(
            out,
            "# summary strategy={} median_raters={} published={}/{} raters={}",
            s.strategy,
            s.median,
            s.published,
            s.raters_to_publish.len(),
            per_seed.join(";")
        )?;
    }
    Ok(())
}

fn model_params(cfg: &ExperimentConfig, k: f64) -> Result<ModelParams> {
    let t = match cfg.trust {
        TrustDist::Constant(t) => t,
        TrustDist::Uniform { .. } => return Err(Error::invalid("the closed forms need a constant trust value")),
    };
    let b = match &cfg.thresholds {
        ThresholdModel::Constant(bs) if bs.len() == 1 => bs[0],
        _ => return Err(Error::invalid("the closed forms need a single constant threshold")),
    };
    let p = ModelParams { lambda: cfg.avg_degree, t, r: cfg.rating, k, b };
    p.validate()?;
    Ok(p)
}

/// Necessary and sufficient rater fractions over the `targets` grid, plus
/// the empirical minimum when `k_hat` is set.
pub fn bounds_check(cfg: &ExperimentConfig) -> Result<Vec<BoundsRow>> {
    cfg.validate()?;
    let p = model_params(cfg, 0.0)?;
    let spec = cfg.graph_spec(cfg.avg_degree, cfg.seeds[0]);
    cfg.targets
        .iter()
        .map(|&target| {
            let k_hat = if cfg.k_hat {
                Some(empirical_k_hat(&spec, &p, cfg.alpha, target, cfg.seeds.len(), &cfg.solver())?.k_hat)
            } else {
                None
            };
            Ok(BoundsRow { target, k_min: k_min_for_target(&p, target)?, k_max: k_max_for_target(&p, target)?, k_hat })
        })
        .collect()
}

pub fn write_bounds_report<W: Write>(out: W, rows: &[BoundsRow]) -> Result<()> {
    write_bounds_csv(out, rows)
}

/// Pooled non-rater satisfaction distribution at `k_grid[0]`, one trial per
/// seed, with the closed-form mean when trust is constant.
pub fn cdf_experiment(cfg: &ExperimentConfig) -> Result<(EmpiricalCdf, Option<f64>)> {
    cfg.validate()?;
    let k = cfg.k_grid[0];
    let b = match &cfg.thresholds {
        ThresholdModel::Constant(bs) => bs[0],
        _ => 0.0,
    };
    let t = match cfg.trust {
        TrustDist::Constant(t) => t,
        TrustDist::Uniform { lo, hi } => 0.5 * (lo + hi),
    };
    let p = ModelParams { lambda: cfg.avg_degree, t, r: cfg.rating, k, b };
    let spec = cfg.graph_spec(cfg.avg_degree, cfg.seeds[0]);
    let cdf = empirical_satisfaction_cdf(&spec, &p, cfg.alpha, cfg.seeds.len(), &cfg.solver())?;
    let expected = matches!(cfg.trust, TrustDist::Constant(_)).then(|| expected_satisfaction(&p));
    Ok((cdf, expected))
}

pub fn write_cdf_report<W: Write>(mut out: W, cdf: &EmpiricalCdf, expected: Option<f64>) -> Result<()> {
    writeln!(out, "# samples = {}", cdf.n_samples)?;
    writeln!(out, "# F(0) = {}", cdf.f_zero)?;
    writeln!(out, "# mean = {}", cdf.mean)?;
    if let Some(e) = expected {
        writeln!(out, "# expected_mean = {e}")?;
    }
    write_cdf_csv(out, cdf)
}

/// Runs `cfg.experiment` and writes its CSV, headed by the resolved
/// configuration, to `out`.
pub fn run_experiment<W: Write>(cfg: &ExperimentConfig, mut out: W) -> Result<()> {
    cfg.validate()?;
    // run first so that a failure leaves no partial file behind the header
    let mut body = Vec::new();
    match cfg.experiment {
        ExperimentKind::KSweep => write_sweep_csv(&mut body, cfg.experiment, &sweep_k(cfg)?)?,
        ExperimentKind::PSweep => write_sweep_csv(&mut body, cfg.experiment, &sweep_p(cfg)?)?,
        ExperimentKind::StrategyCompare => write_compare_report(&mut body, &compare_strategies(cfg)?)?,
        ExperimentKind::BoundsCheck => write_bounds_report(&mut body, &bounds_check(cfg)?)?,
        ExperimentKind::Cdf => {
            let (cdf, expected) = cdf_experiment(cfg)?;
            write_cdf_report(&mut body, &cdf, expected)?
        }
    }
    cfg.write_header(&mut out)?;
    if let ThresholdModel::TruncatedNormal { mean, var } = cfg.thresholds {
        let tn = super::truncated_normal_thresholds(cfg.nodes, mean, var, derive_seed(cfg.seeds[0], THRESHOLD_STREAM))?;
        writeln!(
            out,
            "# trunc_normal mu = {} sigma = {} sample_mean = {} sample_var = {}",
            tn.mu, tn.sigma, tn.sample_mean, tn.sample_var
        )?;
    }
    out.write_all(&body)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: ExperimentKind) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(kind);
        cfg.nodes = 200;
        cfg.seeds = (0..3).collect();
        cfg
    }

    #[test]
    fn k_sweep_shape() {
        let mut cfg = small(ExperimentKind::KSweep);
        cfg.avg_degree = 20.0;
        cfg.k_grid = vec![0.0, 0.1, 0.3, 0.6];
        let rows = sweep_k(&cfg).unwrap();
        assert_eq!(rows.len(), 12);
        assert_eq!(rows[0].mean_unsatisfied, 1.0);
        assert_eq!(rows[0].stderr, 0.0);
        for curve in rows.chunks(4) {
            assert!(curve.windows(2).all(|w| w[1].mean_unsatisfied <= w[0].mean_unsatisfied));
        }
        for j in 0..4 {
            assert!(rows[j].mean_unsatisfied <= rows[4 + j].mean_unsatisfied);
            assert!(rows[4 + j].mean_unsatisfied <= rows[8 + j].mean_unsatisfied);
        }
        assert_eq!(sweep_k(&cfg).unwrap(), rows);
    }

    #[test]
    fn p_sweep_without_edges() {
        let mut cfg = small(ExperimentKind::PSweep);
        cfg.thresholds = ThresholdModel::Constant(vec![0.2]);
        cfg.k_grid = vec![0.1, 0.25];
        cfg.p_grid = vec![0.0, 0.05];
        let rows = sweep_p(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        assert!((rows[0].mean_unsatisfied - 0.9).abs() < 1e-12);
        assert!((rows[2].mean_unsatisfied - 0.75).abs() < 1e-12);
        let mut out = Vec::new();
        write_sweep_csv(&mut out, ExperimentKind::PSweep, &rows).unwrap();
        assert!(String::from_utf8(out).unwrap().starts_with("p,mean_unsatisfied,stderr,k,b\n0,0.9,0,0.1,0.2\n"));
    }

    #[test]
    fn single_node_compare() {
        let mut cfg = small(ExperimentKind::StrategyCompare);
        cfg.nodes = 1;
        cfg.avg_degree = 0.0;
        let report = compare_strategies(&cfg).unwrap();
        for s in &report.summary {
            assert_eq!(s.raters_to_publish, vec![1, 1, 1]);
            assert_eq!(s.published, 3);
        }
    }

    #[test]
    fn compare_is_reproducible() {
        let mut cfg = small(ExperimentKind::StrategyCompare);
        cfg.nodes = 120;
        cfg.seeds = vec![4, 5];
        let a = compare_strategies(&cfg).unwrap();
        assert_eq!(a, compare_strategies(&cfg).unwrap());
        assert!(a.median("marginal").unwrap() <= a.median("random").unwrap());
        let mut out = Vec::new();
        write_compare_report(&mut out, &a).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("# summary strategy=marginal"));
    }

    #[test]
    fn bounds_rows() {
        let mut cfg = small(ExperimentKind::BoundsCheck);
        cfg.avg_degree = f64::INFINITY;
        cfg.trust = TrustDist::Constant(0.5);
        cfg.thresholds = ThresholdModel::Constant(vec![0.3]);
        cfg.targets = vec![0.9];
        let rows = bounds_check(&cfg).unwrap();
        assert!((rows[0].k_min.value - 0.36986).abs() < 1e-5);
        // an infinite degree cannot be simulated
        cfg.k_hat = true;
        assert!(bounds_check(&cfg).is_err());

        let mut cfg = small(ExperimentKind::BoundsCheck);
        cfg.trust = TrustDist::Constant(0.5);
        cfg.thresholds = ThresholdModel::Constant(vec![0.3]);
        cfg.targets = vec![0.5, 0.9];
        let rows = bounds_check(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].k_min.value < rows[1].k_min.value);

        cfg.rating = 0.3;
        assert!(matches!(bounds_check(&cfg), Err(Error::InfeasibleTarget(_))));
    }

    #[test]
    fn full_report_has_header() {
        let mut cfg = small(ExperimentKind::Cdf);
        cfg.thresholds = ThresholdModel::TruncatedNormal { mean: 0.25, var: 0.144 };
        let mut out = Vec::new();
        run_experiment(&cfg, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("# experiment = cdf\n"));
        assert!(text.contains("# trunc_normal mu = "));
        assert!(text.contains("\nx,F\n0,"));
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 1001);
    }
}
