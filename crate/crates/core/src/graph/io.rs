//! Edge-list and threshold text formats.
//!
//! ```text
//! # comment
//! nodes,3
//! 0,1,0.5
//! 1,2,0.6
//! ```
//!
//! Threshold files share the header and use `node,threshold` rows. Rating
//! files list only the raters as `node,rating` rows and have no header.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use super::{Thresholds, TrustGraph};
use crate::error::{Error, Result};

fn parse_field<T: FromStr>(raw: Option<&str>, line: usize, what: &str) -> Result<T> {
    let raw = raw.map(str::trim).ok_or_else(|| Error::Parse { line, message: format!("missing {what}") })?;
    raw.parse().map_err(|_| Error::Parse { line, message: format!("invalid {what} {raw:?}") })
}

/// Splits into numbered data lines and reads the `nodes,<N>` header.
fn data_lines(text: &str) -> Result<(usize, Vec<(usize, &str)>)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or(Error::Parse { line: 1, message: "missing nodes header".into() })?;
    let mut parts = header.split(',');
    if parts.next().map(str::trim) != Some("nodes") {
        return Err(Error::Parse { line: hline, message: format!("expected `nodes,<N>`, found {header:?}") });
    }
    let n: usize = parse_field(parts.next(), hline, "node count")?;
    if parts.next().is_some() {
        return Err(Error::Parse { line: hline, message: "trailing fields in header".into() });
    }
    Ok((n, lines.collect()))
}

pub fn parse_graph(text: &str) -> Result<TrustGraph> {
    let (n, lines) = data_lines(text)?;
    let mut edges = Vec::with_capacity(lines.len());
    for (line, body) in lines {
        let mut parts = body.split(',');
        let src: usize = parse_field(parts.next(), line, "source")?;
        let dst: usize = parse_field(parts.next(), line, "target")?;
        let trust: f64 = parse_field(parts.next(), line, "trust")?;
        if parts.next().is_some() {
            return Err(Error::Parse { line, message: "expected three fields".into() });
        }
        edges.push((src, dst, trust));
    }
    TrustGraph::from_edges(n, edges)
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<TrustGraph> {
    parse_graph(&fs::read_to_string(path)?)
}

/// Writes the edge list; trust values use the shortest round-trip decimal form.
pub fn write_graph<W: Write>(g: &TrustGraph, mut out: W) -> Result<()> {
    writeln!(out, "nodes,{}", g.n_nodes())?;
    for (s, d, t) in g.edges() {
        writeln!(out, "{s},{d},{t}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_graph(g: &TrustGraph, path: impl AsRef<Path>) -> Result<()> {
    write_graph(g, BufWriter::new(fs::File::create(path)?))
}

/// Parses a threshold file; every node must appear exactly once.
pub fn parse_thresholds(text: &str) -> Result<Thresholds> {
    let (n, lines) = data_lines(text)?;
    let mut values = vec![None; n];
    for (line, body) in lines {
        let mut parts = body.split(',');
        let node: usize = parse_field(parts.next(), line, "node")?;
        let b: f64 = parse_field(parts.next(), line, "threshold")?;
        if parts.next().is_some() {
            return Err(Error::Parse { line, message: "expected two fields".into() });
        }
        let slot = values.get_mut(node).ok_or(Error::NodeOutOfRange { node, n_nodes: n })?;
        if slot.replace(b).is_some() {
            return Err(Error::Parse { line, message: format!("duplicate threshold for node {node}") });
        }
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| Error::invalid(format!("no threshold for node {i}"))))
        .collect::<Result<Vec<_>>>()?;
    Thresholds::new(values)
}

pub fn load_thresholds(path: impl AsRef<Path>) -> Result<Thresholds> {
    parse_thresholds(&fs::read_to_string(path)?)
}

pub fn save_thresholds(b: &Thresholds, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "nodes,{}", b.len())?;
    for (i, v) in b.as_slice().iter().enumerate() {
        writeln!(out, "{i},{v}")?;
    }
    out.flush()?;
    Ok(())
}

/// Parses a rater list of `node,rating` rows.
pub fn parse_ratings(text: &str) -> Result<Vec<(usize, f64)>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let (line, body) = (idx + 1, raw.trim());
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let mut parts = body.split(',');
        let node: usize = parse_field(parts.next(), line, "node")?;
        let r: f64 = parse_field(parts.next(), line, "rating")?;
        if parts.next().is_some() {
            return Err(Error::Parse { line, message: "expected two fields".into() });
        }
        out.push((node, r));
    }
    Ok(out)
}

pub fn load_ratings(path: impl AsRef<Path>) -> Result<Vec<(usize, f64)>> {
    parse_ratings(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_erdos_renyi, ErdosRenyiSpec, TrustDist};

    #[test]
    fn ratings_list() {
        assert_eq!(parse_ratings("# raters\n2,0.8\n\n0, 1\n").unwrap(), vec![(2, 0.8), (0, 1.0)]);
        assert!(matches!(parse_ratings("1,0.5,3\n").unwrap_err(), Error::Parse { line: 1, .. }));
    }

    #[test]
    fn parses_minimal_file() {
        let g = parse_graph("# a comment\nnodes,2\n0,1,0.5\n").unwrap();
        assert_eq!(g.n_nodes(), 2);
        assert_eq!(g.n_edges(), 1);
        assert_eq!(g.trust(0, 1), Some(0.5));
    }

    #[test]
    fn malformed_trust_reports_line() {
        let err = parse_graph("nodes,3\n0,1,0.5\n1,2,x\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_header_and_validation_errors() {
        assert!(matches!(parse_graph("0,1,0.5\n").unwrap_err(), Error::Parse { line: 1, .. }));
        assert!(matches!(parse_graph("").unwrap_err(), Error::Parse { .. }));
        assert!(matches!(parse_graph("nodes,2\n0,0,0.5\n").unwrap_err(), Error::SelfLoop(_)));
        assert!(matches!(parse_graph("nodes,2\n0,1,0\n").unwrap_err(), Error::TrustOutOfRange { .. }));
    }

    #[test]
    fn generated_graph_round_trips() {
        let spec = ErdosRenyiSpec {
            n_nodes: 200,
            edge_prob: 0.05,
            trust_dist: TrustDist::Uniform { lo: 0.0, hi: 1.0 },
            seed: 11,
        };
        let g = generate_erdos_renyi(&spec).unwrap();
        let mut buf = Vec::new();
        write_graph(&g, &mut buf).unwrap();
        assert_eq!(parse_graph(std::str::from_utf8(&buf).unwrap()).unwrap(), g);
    }

    #[test]
    fn thresholds_file() {
        let b = parse_thresholds("nodes,3\n# c\n2,0.4\n0,0.1\n1,0.2\n").unwrap();
        assert_eq!(b.as_slice(), &[0.1, 0.2, 0.4]);
        assert!(parse_thresholds("nodes,2\n0,0.1\n").is_err());
        assert!(parse_thresholds("nodes,2\n0,0.1\n0,0.2\n1,0.3\n").is_err());
        assert!(parse_thresholds("nodes,1\n0,1.5\n").is_err());
    }
}
