//! Dense direct solve of the satisfaction system, used as a test oracle.
//!
//! Shares nothing with the sparse path beyond the graph and session types:
//! trust is materialised as a dense matrix, reachability is a boolean
//! fixed point, and the linear system over reachable non-raters is solved
//! by Gaussian elimination with partial pivoting.

use super::{SatisfactionVector, SessionState};
use crate::error::{Error, Result};
use crate::graph::TrustGraph;

pub const DENSE_ORACLE_MAX_NODES: usize = 2000;

pub fn solve_dense_oracle(g: &TrustGraph, state: &SessionState) -> Result<SatisfactionVector> {
    let n = g.n_nodes();
    if n > DENSE_ORACLE_MAX_NODES {
        return Err(Error::TooLarge { what: "node count", size: n, limit: DENSE_ORACLE_MAX_NODES });
    }
    state.check_graph(g)?;
    let alpha = state.alpha();

    let mut trust = vec![vec![0.0f64; n]; n];
    for (i, j, t) in g.edges() {
        trust[i][j] = t;
    }

    let mut reaches: Vec<bool> = (0..n).map(|i| state.is_rater(i)).collect();
    loop {
        let mut changed = false;
        for i in 0..n {
            if !reaches[i] && (0..n).any(|j| trust[i][j] > 0.0 && reaches[j]) {
                reaches[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let unknowns: Vec<usize> = (0..n).filter(|&i| reaches[i] && !state.is_rater(i)).collect();
    let mut slot = vec![usize::MAX; n];
    for (k, &i) in unknowns.iter().enumerate() {
        slot[i] = k;
    }
    let m = unknowns.len();
    let mut a = vec![vec![0.0f64; m]; m];
    let mut rhs = vec![0.0f64; m];
    for (row, &i) in unknowns.iter().enumerate() {
        a[row][row] = 1.0;
        let mut rated = 0.0;
        let mut unrated = 0.0;
        for j in 0..n {
            if trust[i][j] > 0.0 {
                if state.is_rater(j) {
                    rated += trust[i][j];
                } else {
                    unrated += trust[i][j];
                }
            }
        }
        let denom = alpha * rated + (1.0 - alpha) * unrated;
        for j in 0..n {
            let t = trust[i][j];
            if t == 0.0 {
                continue;
            }
            let w = if denom > 0.0 {
                t * t * if state.is_rater(j) { alpha } else { 1.0 - alpha } / denom
            } else {
                t * t / unrated
            };
            if let Some(r) = state.rating(j) {
                rhs[row] += w * r;
            } else if reaches[j] {
                a[row][slot[j]] -= w;
            }
        }
    }

    let x = gaussian_solve(a, rhs)?;
    let mut scores = vec![0.0; n];
    for (i, r) in state.raters() {
        scores[i.index()] = r;
    }
    for (k, &i) in unknowns.iter().enumerate() {
        scores[i] = x[k];
    }
    Ok(SatisfactionVector { scores, iterations_used: 0, max_residual: 0.0, converged: true })
}

fn gaussian_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let m = b.len();
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .expect("non-empty pivot range");
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::invalid("singular satisfaction system"));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let (upper, lower) = a.split_at_mut(col + 1);
        let prow = &upper[col];
        for (offset, row) in lower.iter_mut().enumerate() {
            let factor = row[col] / prow[col];
            if factor != 0.0 {
                for k in col..m {
                    row[k] -= factor * prow[k];
                }
                b[col + 1 + offset] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let tail: f64 = (row + 1..m).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Thresholds;

    #[test]
    fn path_example() {
        let g = TrustGraph::from_edges(3, [(0, 1, 0.5), (1, 2, 0.6)]).unwrap();
        let state = SessionState::with_raters(Thresholds::constant(3, 0.3).unwrap(), 0.5, [(2, 0.8)]).unwrap();
        let s = solve_dense_oracle(&g, &state).unwrap();
        assert!((s.get(1) - 0.48).abs() < 1e-15);
        assert!((s.get(0) - 0.24).abs() < 1e-15);
    }

    #[test]
    fn single_rater_node() {
        let g = TrustGraph::empty(1);
        let state = SessionState::with_raters(Thresholds::constant(1, 0.3).unwrap(), 0.5, [(0, 0.7)]).unwrap();
        assert_eq!(solve_dense_oracle(&g, &state).unwrap().scores, vec![0.7]);
    }

    #[test]
    fn two_cycle_with_external_rater() {
        // A(0) <-> F(1), A also trusts rater R(2). All t = 1/2, alpha = 1/2.
        // s_A = (t^2 s_F + t^2 r) / (2t) = (s_F + r) / 4,  s_F = t^2 s_A / t = s_A / 2
        // => s_A = r / 3.5, s_F = r / 7
        let g = TrustGraph::from_edges(3, [(0, 1, 0.5), (1, 0, 0.5), (0, 2, 0.5)]).unwrap();
        let state = SessionState::with_raters(Thresholds::constant(3, 0.0).unwrap(), 0.5, [(2, 0.7)]).unwrap();
        let s = solve_dense_oracle(&g, &state).unwrap();
        assert!((s.get(0) - 0.2).abs() < 1e-15);
        assert!((s.get(1) - 0.1).abs() < 1e-15);
        let it = crate::satisfaction::solve_iterative(&g, &state, &Default::default()).unwrap();
        assert!((it.get(0) - 0.2).abs() < 1e-9 && (it.get(1) - 0.1).abs() < 1e-9);
    }

    #[test]
    fn size_guard() {
        let n = DENSE_ORACLE_MAX_NODES + 1;
        let state = SessionState::new(Thresholds::constant(n, 0.0).unwrap(), 0.5).unwrap();
        assert!(matches!(
            solve_dense_oracle(&TrustGraph::empty(n), &state).unwrap_err(),
            Error::TooLarge { .. }
        ));
    }
}
