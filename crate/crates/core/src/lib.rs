//! Trust-based satisfaction estimation for collaborative document editing.
//!
//! Users form a directed trust graph. A few of them (raters) read a document
//! and rate it; everybody else gets a conservative satisfaction estimate
//! propagated through trust. On top of the solver the crate provides rater
//! selection strategies, a full editing-session driver with trust updates,
//! closed-form random-graph predictions and the simulation sweeps used to
//! check them.
//!
//! ```
//! use trustsat::graph::{Thresholds, TrustGraph};
//! use trustsat::satisfaction::{solve_iterative, SessionState, SolverConfig};
//!
//! // 0 trusts 1 (0.5), 1 trusts 2 (0.6), 2 rates the document 0.8
//! let g = TrustGraph::from_edges(3, [(0, 1, 0.5), (1, 2, 0.6)])?;
//! let state = SessionState::with_raters(Thresholds::constant(3, 0.3)?, 0.5, [(2, 0.8)])?;
//! let s = solve_iterative(&g, &state, &SolverConfig::default())?;
//! assert!((s.get(1) - 0.48).abs() < 1e-12);
//! assert!((s.get(0) - 0.24).abs() < 1e-12);
//! # Ok::<(), trustsat::Error>(())
//! ```

pub mod analytics;
pub mod editing;
pub mod error;
pub mod experiments;
pub mod fmt;
pub mod graph;
pub mod satisfaction;
pub mod selection;

pub use error::{Error, Result};
pub use graph::{NodeId, Thresholds, TrustGraph};
pub use satisfaction::{SatisfactionVector, SessionState, SolverConfig};
