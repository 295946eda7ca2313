use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::cost::{circuit_cost, Cost, CostModel};
use super::greedy::{bond_groups, class_costs, emit_choices, BondChoice, Choice, ExtractError};
use crate::bond::heights;
use crate::circuit::{Circuit, CircuitEGraph};
use crate::egraph::EClassId;
use crate::lower::Roots;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    pub max_classes: usize,
    pub max_depth: usize,
    /// Cap on enumerated choice functions.
    pub max_selections: u64,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            max_classes: 8,
            max_depth: 4,
            max_selections: 1 << 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult<C> {
    pub circuit: Circuit,
    pub cost: C,
    /// Some valid selection reaches a class along two different edges, so
    /// tree cost and true cost can differ.
    pub diamond: bool,
    pub selections: u64,
}

/// Exhaustive minimum-cost extraction for small graphs. Enumerates every
/// choice function over the value classes reachable from the roots and
/// prices the induced circuit with [`circuit_cost`].
pub fn brute_force_extract<C: Cost>(
    g: &CircuitEGraph,
    roots: &Roots,
    m: &CostModel<C>,
    bounds: &Bounds,
) -> Result<OracleResult<C>, ExtractError> {
    let groups = bond_groups(g);
    let template_route: HashMap<EClassId, Choice> = {
        let ex = class_costs(g, m);
        groups
            .iter()
            .filter(|grp| ex.bonds[&grp.bnode].choice == BondChoice::TemplateChosen)
            .flat_map(|grp| grp.parents.iter().map(|(p, _)| (*p, Choice::Route(grp.bnode))))
            .collect()
    };

    let mut reach: BTreeSet<EClassId> = BTreeSet::new();
    let mut stack: Vec<EClassId> = roots.outputs.iter().map(|(_, c)| g.find_value(*c).unwrap()).collect();
    while let Some(c) = stack.pop() {
        if reach.insert(c) {
            stack.extend(g.value_children(c));
        }
    }
    if reach.len() > bounds.max_classes {
        return Err(ExtractError::TooLarge(format!("{} classes", reach.len())));
    }
    let h = heights(g);
    if let Some(d) = reach.iter().filter_map(|c| h.get(c)).max() {
        if *d > bounds.max_depth {
            return Err(ExtractError::TooLarge(format!("depth {d}")));
        }
    }

    let classes: Vec<EClassId> = reach.into_iter().collect();
    let options: Vec<Vec<Choice>> = classes
        .iter()
        .map(|c| {
            let mut o: Vec<Choice> = g.class(*c).unwrap().nodes.iter().cloned().map(Choice::Node).collect();
            o.extend(template_route.get(c).cloned());
            o
        })
        .collect();
    let total = options
        .iter()
        .try_fold(1u64, |acc, o| acc.checked_mul(o.len().max(1) as u64));
    match total {
        Some(t) if t <= bounds.max_selections => {}
        _ => return Err(ExtractError::TooLarge("too many selections".into())),
    }

    let mut best: Option<(C, Circuit)> = None;
    let mut diamond = false;
    let mut selections = 0u64;
    let mut digits = vec![0usize; classes.len()];
    loop {
        let choices: BTreeMap<EClassId, Choice> = classes
            .iter()
            .zip(&digits)
            .enumerate()
            .filter_map(|(i, (c, &d))| options[i].get(d).map(|o| (*c, o.clone())))
            .collect();
        selections += 1;
        match emit_choices(g, roots, &choices, &groups) {
            Ok(circuit) => {
                diamond |= shares_a_class(g, roots, &choices, &groups);
                let cost = circuit_cost(&circuit, m);
                if best.as_ref().is_none_or(|(b, _)| cost < *b) {
                    best = Some((cost, circuit));
                }
            }
            Err(ExtractError::Cyclic(_) | ExtractError::FreeAdvice(_)) => {}
            Err(e) => return Err(e),
        }
        // Mixed-radix increment.
        let mut k = 0;
        loop {
            if k == digits.len() {
                let (cost, circuit) = best.ok_or_else(|| ExtractError::Unextractable {
                    output: roots.outputs.first().map(|(n, _)| n.clone()).unwrap_or_default(),
                    class: roots.outputs.first().map(|(_, c)| *c).unwrap_or(EClassId(0)),
                })?;
                return Ok(OracleResult {
                    circuit,
                    cost,
                    diamond,
                    selections,
                });
            }
            digits[k] += 1;
            if digits[k] < options[k].len() {
                break;
            }
            digits[k] = 0;
            k += 1;
        }
    }
}

/// Whether the selection reaches some class through two edges.
fn shares_a_class(
    g: &CircuitEGraph,
    roots: &Roots,
    choices: &BTreeMap<EClassId, Choice>,
    groups: &[super::greedy::BondGroup],
) -> bool {
    let mut refs: HashMap<EClassId, usize> = HashMap::new();
    let mut stack: Vec<EClassId> = roots.outputs.iter().map(|(_, c)| g.find_value(*c).unwrap()).collect();
    for c in &stack {
        *refs.entry(*c).or_default() += 1;
    }
    let mut seen = BTreeSet::new();
    while let Some(c) = stack.pop() {
        if !seen.insert(c) {
            continue;
        }
        let children: Vec<EClassId> = match &choices[&c] {
            Choice::Node(n) => n.children.iter().map(|&x| g.find_value(x).unwrap()).collect(),
            Choice::Route(b) => groups
                .iter()
                .find(|grp| grp.bnode == *b)
                .and_then(|grp| grp.parents.iter().find(|(p, _)| *p == c))
                .map(|(_, ch)| ch.clone())
                .unwrap_or_default(),
            Choice::BNode(_) => Vec::new(),
        };
        for ch in children {
            *refs.entry(ch).or_default() += 1;
            stack.push(ch);
        }
    }
    refs.values().any(|&n| n > 1)
}
