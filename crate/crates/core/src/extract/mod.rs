//! Cost-driven extraction of a circuit from a saturated, bonded e-graph.
//!
//! [`class_costs`] runs a bottom-up fixpoint over value classes. A bonded
//! parent gets one extra candidate when its group's template is cheaper than
//! materializing every site: a use-site of the group's shared unit, priced at
//! an equal share of the body plus routing for its own operands.
//! [`extract_circuit`] then emits the chosen nodes with structural sharing.

mod cost;
mod greedy;
mod oracle;

pub use cost::{circuit_cost, Cost, CostError, CostModel};
pub use greedy::{
    bond_groups, class_costs, emit_choices, extract, extract_circuit, BondChoice, BondDecision, BondGroup, Choice,
    ClassCost, ExtractError, Extraction,
};
pub use oracle::{brute_force_extract, Bounds, OracleResult};
