use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};

use super::TrustGraph;
use crate::error::{Error, Result};

/// How trust weights are drawn for generated edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrustDist {
    Constant(f64),
    /// Uniform on `(lo, hi]`; the open lower end keeps every weight positive.
    Uniform { lo: f64, hi: f64 },
}

impl TrustDist {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TrustDist::Constant(t) if !(t > 0.0 && t <= 1.0) => {
                Err(Error::invalid(format!("constant trust {t} is outside (0, 1]")))
            }
            TrustDist::Uniform { lo, hi } if !(lo >= 0.0 && lo <= hi && hi <= 1.0 && hi > 0.0) => {
                Err(Error::invalid(format!("uniform trust bounds ({lo}, {hi}] are invalid")))
            }
            _ => Ok(()),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            TrustDist::Constant(t) => t,
            TrustDist::Uniform { lo, hi } => {
                let u: f64 = rng.random();
                let t = hi - (hi - lo) * u;
                // hi - (hi - lo) * u can round to lo when lo == hi
                if t > 0.0 { t } else { hi }
            }
        }
    }
}

/// Directed G(N, p) with independently drawn trust weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErdosRenyiSpec {
    pub n_nodes: usize,
    pub edge_prob: f64,
    pub trust_dist: TrustDist,
    pub seed: u64,
}

impl ErdosRenyiSpec {
    /// `p = mean_degree / n_nodes`, the parameterisation used by the sweeps.
    pub fn with_mean_degree(n_nodes: usize, mean_degree: f64, trust_dist: TrustDist, seed: u64) -> Self {
        let edge_prob = if n_nodes == 0 { 0.0 } else { (mean_degree / n_nodes as f64).min(1.0) };
        ErdosRenyiSpec { n_nodes, edge_prob, trust_dist, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.edge_prob) {
            return Err(Error::invalid(format!("edge probability {} is outside [0, 1]", self.edge_prob)));
        }
        self.trust_dist.validate()
    }
}

/// Samples each of the `N(N-1)` ordered pairs with probability `p`.
///
/// Uses geometric skips over the pair index space, so the cost is
/// `O(N + |E|)` rather than `O(N^2)`. Pairs come out in `(src, dst)` order,
/// which is also the CSR order.
pub fn generate_erdos_renyi(spec: &ErdosRenyiSpec) -> Result<TrustGraph> {
    spec.validate()?;
    let n = spec.n_nodes;
    if n < 2 || spec.edge_prob == 0.0 {
        return Ok(TrustGraph::empty(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let per_row = (n - 1) as u64;
    let total = n as u64 * per_row;
    let skips = Geometric::new(spec.edge_prob).map_err(|e| Error::invalid(e.to_string()))?;

    let expected = (total as f64 * spec.edge_prob) as usize;
    let mut edges = Vec::with_capacity(expected + expected / 8 + 16);
    let mut next: u64 = 0;
    loop {
        let skip = skips.sample(&mut rng);
        let idx = match next.checked_add(skip) {
            Some(idx) if idx < total => idx,
            _ => break,
        };
        let src = (idx / per_row) as usize;
        let off = (idx % per_row) as usize;
        let dst = if off >= src { off + 1 } else { off };
        let trust = spec.trust_dist.sample(&mut rng);
        edges.push((src, dst, trust));
        next = idx + 1;
    }
    Ok(TrustGraph::from_sorted_unchecked(n, &edges))
}
