//! Equality saturation over combinational circuits with bond nodes: a way to
//! group several equivalent but concurrent computations so that extraction
//! can serve all of them with one shared unit.
//!
//! The flow is [`lower`] a [`circuit::Circuit`] into an e-graph, run
//! [`rules::run_staged_pipeline`], then [`extract`] a new circuit.
//! [`pipeline::optimize`] wires these together.

pub mod bond;
pub mod circuit;
pub mod dot;
pub mod egraph;
pub mod extract;
pub mod lower;
pub mod pipeline;
pub mod rules;
pub mod sexpr;

pub use circuit::CircuitEGraph;

/// Exact cost scalar.
pub type Rational = num_rational::Ratio<i64>;
/// Cost model over exact rationals, the default scalar.
pub type CostModel = extract::CostModel<Rational>;
/// Cost model over `f64`.
pub type CostModelF64 = extract::CostModel<f64>;
