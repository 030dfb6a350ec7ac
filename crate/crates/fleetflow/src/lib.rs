//! Pricing and dispatch optimization for fluid ride-hailing markets.
//!
//! The library models a city as a strongly connected digraph whose edges carry
//! price-sensitive trip demand. Per-edge revenue (or welfare) objectives are
//! generally non-concave in the served throughput; they are "ironed" into their
//! least concave majorants, which turns both the stationary and the
//! finite-horizon dispatch problems into convex programs with linear
//! constraints. Those reduce exactly to linear programs because the majorants
//! are piecewise linear, and are solved by a dense bounded-variable simplex
//! that also produces dual multipliers. An independent checker certifies
//! primal/dual optimality from first-order conditions, and a discrete-time
//! fluid simulator compares the optimized policy against fixed and surge
//! pricing benchmarks. A small estimation pipeline fits demand curves and the
//! per-minute fare rate from order logs.

// Numeric validation uses `!(x > 0.0)` to reject NaN alongside the range, and
// constraint assembly indexes several parallel arrays by the same counter.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod demand;
pub mod duality;
pub mod error;
pub mod graph;
pub mod ingest;
pub mod instance;
pub mod ironing;
pub mod lp;
pub mod objective;
pub mod sim;
pub mod solver;
pub mod stats;
pub mod transform;

pub use demand::DemandCurve;
pub use error::Error;
pub use graph::{CityGraph, Edge, ValidationReport};
pub use instance::Instance;
pub use ironing::{IronedObjective, PriceMixture};
pub use objective::ObjectiveKind;
pub use solver::{DualCertificate, FlowPlan, SolveConfig, SupplyConstraintKind};

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
