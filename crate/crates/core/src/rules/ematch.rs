use std::collections::{BTreeMap, BTreeSet};

use super::parse::{Pattern, WidthSpec};
use crate::circuit::{CircuitEGraph, Symbol};
use crate::egraph::{EClassId, Width};

/// One e-matching result. Classes are value classes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Match {
    pub root: EClassId,
    pub subst: BTreeMap<String, EClassId>,
    pub widths: BTreeMap<String, Width>,
}

#[derive(Clone, Default)]
struct Bindings {
    subst: BTreeMap<String, EClassId>,
    widths: BTreeMap<String, Width>,
}

fn bind_width(spec: &WidthSpec, width: Width, b: &mut Bindings) -> bool {
    match spec {
        WidthSpec::Any => true,
        WidthSpec::Lit(w) => *w == width,
        WidthSpec::Var(v) => match b.widths.get(v) {
            Some(&bound) => bound == width,
            None => {
                b.widths.insert(v.clone(), width);
                true
            }
        },
    }
}

fn match_in(g: &CircuitEGraph, p: &Pattern, class: EClassId, b: Bindings, out: &mut Vec<Bindings>) {
    let class = g.find_value(class).expect("pattern child is a live class");
    let data = g.class(class).expect("live class");
    match p {
        Pattern::Var { name, width } => {
            let mut b = b;
            if let Some(w) = width {
                if !bind_width(w, data.width, &mut b) {
                    return;
                }
            }
            match b.subst.get(name) {
                Some(&bound) if bound != class => return,
                Some(_) => {}
                None => {
                    b.subst.insert(name.clone(), class);
                }
            }
            out.push(b);
        }
        Pattern::Const { width, value } => {
            let hit = data.nodes.iter().any(|n| n.op == Symbol::Const(*value));
            let mut b = b;
            if hit && bind_width(width, data.width, &mut b) {
                out.push(b);
            }
        }
        Pattern::Op { op, width, children } => {
            for node in &data.nodes {
                if node.op != Symbol::Op(*op) {
                    continue;
                }
                let mut b = b.clone();
                if !bind_width(width, node.width, &mut b) {
                    continue;
                }
                let mut partial = vec![b];
                for (cp, &cc) in children.iter().zip(&node.children) {
                    let mut next = Vec::new();
                    for pb in partial {
                        match_in(g, cp, cc, pb, &mut next);
                    }
                    partial = next;
                    if partial.is_empty() {
                        break;
                    }
                }
                out.extend(partial);
            }
        }
    }
}

/// Matches `p` against one value class.
pub fn ematch_class(g: &CircuitEGraph, p: &Pattern, class: EClassId) -> Vec<Match> {
    let mut found = Vec::new();
    match_in(g, p, class, Bindings::default(), &mut found);
    let root = g.find_value(class).expect("live class");
    let mut seen = BTreeSet::new();
    found
        .into_iter()
        .map(|b| Match {
            root,
            subst: b.subst,
            widths: b.widths,
        })
        .filter(|m| seen.insert(m.clone()))
        .collect()
}

/// Every match of `p` in the graph, ordered by class id then node order,
/// without duplicates. The graph should be rebuilt.
pub fn ematch(g: &CircuitEGraph, p: &Pattern) -> Vec<Match> {
    let ids: Vec<EClassId> = g.classes().map(|c| c.id).collect();
    ids.into_iter().flat_map(|id| ematch_class(g, p, id)).collect()
}
