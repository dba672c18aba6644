//! Directed trust graph in compressed sparse-row form.
//!
//! An edge `(i, j, t)` means user `i` trusts user `j` with weight `t`, so
//! `i` draws on `j`'s assessment. A trust of zero is the same as no edge and
//! is rejected at construction; stored weights always lie in `(0, 1]`.

mod io;
mod random;

pub use io::{
    load_graph, load_ratings, load_thresholds, parse_graph, parse_ratings, parse_thresholds, save_graph, save_thresholds,
    write_graph,
};
pub use random::{generate_erdos_renyi, ErdosRenyiSpec, TrustDist};

use std::fmt;

use crate::error::{Error, Result};

/// Dense zero-based node index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(i)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Immutable directed weighted graph with both forward and transpose CSR.
#[derive(Debug, Clone, PartialEq)]
pub struct TrustGraph {
    n_nodes: usize,
    out_offsets: Vec<usize>,
    out_targets: Vec<usize>,
    out_trust: Vec<f64>,
    in_offsets: Vec<usize>,
    in_sources: Vec<usize>,
    in_trust: Vec<f64>,
}

impl TrustGraph {
    /// Builds and validates a graph from `(src, dst, trust)` triples in any order.
    pub fn from_edges<I>(n_nodes: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut edges: Vec<(usize, usize, f64)> = edges.into_iter().collect();
        for &(src, dst, trust) in &edges {
            for node in [src, dst] {
                if node >= n_nodes {
                    return Err(Error::NodeOutOfRange { node, n_nodes });
                }
            }
            if src == dst {
                return Err(Error::SelfLoop(NodeId(src)));
            }
            if !(trust > 0.0 && trust <= 1.0) {
                return Err(Error::TrustOutOfRange { src: NodeId(src), dst: NodeId(dst), trust });
            }
        }
        edges.sort_unstable_by_key(|&(s, d, _)| (s, d));
        if let Some(w) = edges.windows(2).find(|w| w[0].0 == w[1].0 && w[0].1 == w[1].1) {
            return Err(Error::DuplicateEdge { src: NodeId(w[0].0), dst: NodeId(w[0].1) });
        }
        Ok(Self::from_sorted_unchecked(n_nodes, &edges))
    }

    /// `edges` must be sorted by `(src, dst)`, duplicate-free and already validated.
    pub(crate) fn from_sorted_unchecked(n_nodes: usize, edges: &[(usize, usize, f64)]) -> Self {
        let m = edges.len();
        let mut out_offsets = vec![0usize; n_nodes + 1];
        let mut in_counts = vec![0usize; n_nodes + 1];
        for &(s, d, _) in edges {
            out_offsets[s + 1] += 1;
            in_counts[d + 1] += 1;
        }
        for i in 0..n_nodes {
            out_offsets[i + 1] += out_offsets[i];
            in_counts[i + 1] += in_counts[i];
        }
        let out_targets = edges.iter().map(|e| e.1).collect();
        let out_trust = edges.iter().map(|e| e.2).collect();

        // Sources are visited in ascending order, so each in-row comes out sorted.
        let in_offsets = in_counts;
        let mut cursor = in_offsets.clone();
        let mut in_sources = vec![0usize; m];
        let mut in_trust = vec![0.0f64; m];
        for &(s, d, t) in edges {
            let pos = cursor[d];
            in_sources[pos] = s;
            in_trust[pos] = t;
            cursor[d] += 1;
        }

        TrustGraph { n_nodes, out_offsets, out_targets, out_trust, in_offsets, in_sources, in_trust }
    }

    pub fn empty(n_nodes: usize) -> Self {
        Self::from_sorted_unchecked(n_nodes, &[])
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    #[inline]
    pub fn n_edges(&self) -> usize {
        self.out_targets.len()
    }

    /// Position range of node `i`'s out-edges; weight tables are aligned with it.
    #[inline]
    pub fn out_range(&self, i: usize) -> std::ops::Range<usize> {
        self.out_offsets[i]..self.out_offsets[i + 1]
    }

    /// Trustees of `i` (sorted) and the matching trust weights.
    #[inline]
    pub fn out_edges(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.out_range(i);
        (&self.out_targets[r.clone()], &self.out_trust[r])
    }

    /// Trusters of `i` (sorted) and the matching trust weights.
    #[inline]
    pub fn in_edges(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.in_offsets[i]..self.in_offsets[i + 1];
        (&self.in_sources[r.clone()], &self.in_trust[r])
    }

    #[inline]
    pub fn out_degree(&self, i: usize) -> usize {
        self.out_offsets[i + 1] - self.out_offsets[i]
    }

    #[inline]
    pub fn in_degree(&self, i: usize) -> usize {
        self.in_offsets[i + 1] - self.in_offsets[i]
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        (0..self.n_nodes).map(|i| self.out_degree(i)).collect()
    }

    pub(crate) fn targets(&self) -> &[usize] {
        &self.out_targets
    }

    /// Trust `i` places in `j`, if the edge exists.
    pub fn trust(&self, i: usize, j: usize) -> Option<f64> {
        let (targets, trust) = self.out_edges(i);
        targets.binary_search(&j).ok().map(|k| trust[k])
    }

    /// All edges in `(src, dst)` order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_nodes).flat_map(move |i| {
            let (targets, trust) = self.out_edges(i);
            targets.iter().zip(trust).map(move |(&j, &t)| (i, j, t))
        })
    }

    pub fn mean_out_degree(&self) -> f64 {
        if self.n_nodes == 0 {
            0.0
        } else {
            self.n_edges() as f64 / self.n_nodes as f64
        }
    }

    /// Returns a copy with the given edges set (created if absent). A trust of
    /// exactly 0 removes the edge.
    pub fn with_edge_updates<I>(&self, updates: I) -> Result<TrustGraph>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut edges: std::collections::BTreeMap<(usize, usize), f64> =
            self.edges().map(|(s, d, t)| ((s, d), t)).collect();
        for (s, d, t) in updates {
            if t == 0.0 {
                edges.remove(&(s, d));
            } else {
                edges.insert((s, d), t);
            }
        }
        TrustGraph::from_edges(self.n_nodes, edges.into_iter().map(|((s, d), t)| (s, d, t)))
    }
}

/// Per-node quality thresholds `b_i` in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Thresholds(Vec<f64>);

impl Thresholds {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, b)) = values.iter().enumerate().find(|(_, b)| !(0.0..=1.0).contains(*b)) {
            return Err(Error::invalid(format!("threshold {b} of node {i} is outside [0, 1]")));
        }
        Ok(Thresholds(values))
    }

    pub fn constant(n_nodes: usize, b: f64) -> Result<Self> {
        Self::new(vec![b; n_nodes])
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_sorted_csr() {
        let g = TrustGraph::from_edges(3, [(1, 2, 0.6), (0, 1, 0.5)]).unwrap();
        assert_eq!(g.out_degrees(), vec![1, 1, 0]);
        assert_eq!(g.trust(0, 1), Some(0.5));
        assert_eq!(g.trust(1, 0), None);
        assert_eq!(g.in_edges(2), (&[1usize][..], &[0.6][..]));
    }

    #[test]
    fn rejects_zero_trust() {
        let err = TrustGraph::from_edges(2, [(0, 1, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::TrustOutOfRange { .. }));
        assert!(matches!(
            TrustGraph::from_edges(2, [(0, 1, 1.5)]).unwrap_err(),
            Error::TrustOutOfRange { .. }
        ));
        assert!(matches!(
            TrustGraph::from_edges(2, [(0, 1, f64::NAN)]).unwrap_err(),
            Error::TrustOutOfRange { .. }
        ));
    }

    #[test]
    fn rejects_self_loop_duplicates_and_range() {
        assert!(matches!(TrustGraph::from_edges(2, [(0, 0, 0.5)]).unwrap_err(), Error::SelfLoop(NodeId(0))));
        assert!(matches!(
            TrustGraph::from_edges(2, [(0, 1, 0.5), (0, 1, 0.7)]).unwrap_err(),
            Error::DuplicateEdge { .. }
        ));
        assert!(matches!(
            TrustGraph::from_edges(2, [(0, 2, 0.5)]).unwrap_err(),
            Error::NodeOutOfRange { node: 2, n_nodes: 2 }
        ));
    }

    #[test]
    fn direction_matters() {
        let g = TrustGraph::from_edges(2, [(0, 1, 0.5)]).unwrap();
        assert_eq!(g.out_degree(0), 1);
        assert_eq!(g.out_degree(1), 0);
        assert_eq!(g.in_degree(1), 1);
    }

    #[test]
    fn mean_degree_of_complete_and_empty() {
        let n = 50;
        let edges = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j, 0.5)));
        let g = TrustGraph::from_edges(n, edges).unwrap();
        assert_eq!(g.mean_out_degree(), 49.0);
        assert_eq!(TrustGraph::empty(10).mean_out_degree(), 0.0);
        assert_eq!(TrustGraph::empty(0).mean_out_degree(), 0.0);
    }

    #[test]
    fn edge_updates_create_replace_and_remove() {
        let g = TrustGraph::from_edges(3, [(0, 1, 0.5), (1, 2, 0.6)]).unwrap();
        let h = g.with_edge_updates([(2, 0, 0.3), (0, 1, 0.9), (1, 2, 0.0)]).unwrap();
        assert_eq!(h.trust(2, 0), Some(0.3));
        assert_eq!(h.trust(0, 1), Some(0.9));
        assert_eq!(h.trust(1, 2), None);
        assert_eq!(h.n_edges(), 2);
    }

    #[test]
    fn thresholds_validate_range() {
        assert!(Thresholds::new(vec![0.0, 1.0, 0.5]).is_ok());
        assert!(Thresholds::new(vec![-0.1]).is_err());
        assert!(Thresholds::constant(3, 1.1).is_err());
    }
}
