//! End-to-end optimization: lower, saturate, bond, unify, extract.

use serde::Serialize;

use crate::bond::BondRecord;
use crate::circuit::{stats, Circuit, CircuitEGraph, CircuitError, OpStats, Symbol};
use crate::extract::{
    circuit_cost, class_costs, extract_circuit, BondChoice, Cost, CostError, CostModel, ExtractError,
};
use crate::lower::{lower, Roots};
use crate::rules::{run_staged_pipeline, Limits, ParseError, PipelineError, RuleSet, SaturationReport};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("circuit: {0}")]
    Circuit(#[from] CircuitError),
    #[error("rules: {0}")]
    Rules(#[from] ParseError),
    #[error("costs: {0}")]
    Cost(#[from] CostError),
    #[error("pipeline: {0}")]
    Pipeline(#[from] PipelineError),
    #[error("extraction: {0}")]
    Extract(#[from] ExtractError),
}

#[derive(Debug, Clone, Serialize)]
pub struct BondSummary {
    pub name: String,
    pub group: String,
    pub sites: usize,
    pub choice: BondChoice,
    pub bnode_cost: Option<String>,
    pub template_cost: Option<String>,
}

/// Machine-readable account of one run.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub before: OpStats,
    pub after: OpStats,
    pub cost_before: String,
    pub cost_after: String,
    pub saturation: SaturationReport,
    pub bonds: Vec<BondSummary>,
}

#[derive(Debug, Clone)]
pub struct Optimized<C> {
    pub source: Circuit,
    pub circuit: Circuit,
    /// E-graph right after lowering.
    pub initial: CircuitEGraph,
    /// E-graph after the staged pipeline.
    pub egraph: CircuitEGraph,
    pub roots: Roots,
    pub report: SaturationReport,
    pub bonds: Vec<BondRecord<Symbol>>,
    pub bond_summaries: Vec<BondSummary>,
    pub cost_before: C,
    pub cost_after: C,
}

impl<C: Cost> Optimized<C> {
    pub fn summary(&self) -> Summary {
        Summary {
            before: stats(&self.source),
            after: stats(&self.circuit),
            cost_before: self.cost_before.to_string(),
            cost_after: self.cost_after.to_string(),
            saturation: self.report.clone(),
            bonds: self.bond_summaries.clone(),
        }
    }
}

/// Runs the full flow on `c` and returns the extracted circuit together with
/// the intermediate artifacts.
pub fn optimize<C: Cost>(
    c: &Circuit,
    rules: &RuleSet,
    m: &CostModel<C>,
    limits: &Limits,
) -> Result<Optimized<C>, Error> {
    let source = c.prune();
    let mut g = CircuitEGraph::new();
    let roots = lower(&source, &mut g)?;
    let initial = g.clone();
    let (report, bonds) = run_staged_pipeline(&mut g, &rules.generic, &rules.bonding, &rules.unification, limits)?;
    let ex = class_costs(&g, m);
    let circuit = extract_circuit(&g, &roots, &ex)?;
    let bond_summaries = bonds
        .iter()
        .map(|rec| {
            let d = &ex.bonds[&rec.bnode_id];
            BondSummary {
                name: rec.name.clone(),
                group: format!("{}:{}", rec.group.0, rec.group.1),
                sites: rec.bond_map().len(),
                choice: d.choice,
                bnode_cost: d.bnode_cost.as_ref().map(ToString::to_string),
                template_cost: d.template_cost.as_ref().map(ToString::to_string),
            }
        })
        .collect();
    Ok(Optimized {
        cost_before: circuit_cost(&source, m),
        cost_after: circuit_cost(&circuit, m),
        source,
        circuit,
        initial,
        egraph: g,
        roots,
        report,
        bonds,
        bond_summaries,
    })
}
