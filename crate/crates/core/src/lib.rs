//! Distributed resource reallocation with feasible iterates.
//!
//! Each node holds a share `y_i` of the coupling budget `b` and the
//! minimizer `x_i` of its barrier-transformed subproblem. Randomly chosen
//! leaders with disjoint closed neighborhoods re-solve their neighborhood
//! jointly and redistribute the shares, so `sum y_i = b` and every `x_i`
//! stay feasible at every iteration.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod engine;
pub mod error;
pub mod localsolve;
pub mod model;
pub mod network;
pub mod oracle;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision instance.
pub type Instance = model::ProblemInstance<f64>;
pub type Node = model::NodeProblem<f64>;
pub type ConvexFn = model::SmoothConvexFn<f64>;
pub type Barrier = model::BarrierSpec<f64>;
pub type Share = model::RhsShare<f64>;
pub type State = engine::EngineState<f64>;
pub type Record = engine::IterationRecord<f64>;
pub type Subproblem = localsolve::SubproblemResult<f64>;
pub type Reference = oracle::OracleSolution<f64>;
