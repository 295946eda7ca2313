use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};

use log::debug;
use serde::Serialize;

use super::cost::{circuit_cost, Cost, CostModel};
use crate::circuit::{Circuit, CircuitBuilder, CircuitEGraph, CircuitError, NodeId, Op, Symbol};
use crate::egraph::{BNodeId, EClassId, ENode, Width};
use crate::lower::Roots;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtractError {
    #[error("output `{output}` ({class}) has no finite-cost extraction")]
    Unextractable { output: String, class: EClassId },
    #[error("class {0} would extract to free advice")]
    FreeAdvice(EClassId),
    #[error("choices for {0} are cyclic")]
    Cyclic(EClassId),
    #[error("graph exceeds oracle bounds: {0}")]
    TooLarge(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// What a value class is extracted as.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Choice {
    Node(ENode<Symbol>),
    /// The b-node of a bond class: every parent materialized separately.
    BNode(BNodeId),
    /// A bonded parent served by the group's shared unit through a use-site.
    Route(BNodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BondChoice {
    BNodeChosen,
    TemplateChosen,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassCost<C> {
    pub cost: C,
    pub height: usize,
    pub choice: Choice,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BondDecision<C> {
    pub choice: BondChoice,
    /// Every parent materialized on its own operands.
    pub bnode_cost: Option<C>,
    /// Shared body once, routing per use, plus every parent's operands.
    pub template_cost: Option<C>,
}

/// Bond group as seen by extraction; ids are value classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BondGroup {
    pub bnode: BNodeId,
    pub class: EClassId,
    pub op: Op,
    pub width: Width,
    pub parents: Vec<(EClassId, Vec<EClassId>)>,
    /// Advice leaf widths of the unified template, if any.
    pub template: Option<Vec<Width>>,
}

fn is_advice_class(g: &CircuitEGraph, id: EClassId) -> bool {
    g.class(id)
        .map(|c| c.nodes.iter().any(|n| matches!(n.op, Symbol::Advice(_))))
        .unwrap_or(false)
}

/// Bond groups of `g`, in b-node order.
pub fn bond_groups(g: &CircuitEGraph) -> Vec<BondGroup> {
    let mut out = Vec::new();
    for (i, bnode) in g.bnodes().iter().enumerate() {
        let id = BNodeId(i as u32);
        let class = g.bnode_class(id);
        let parents: Vec<(EClassId, Vec<EClassId>)> = bnode
            .bond_map
            .entries()
            .iter()
            .map(|(p, ch)| {
                let ch = ch.iter().map(|&c| g.find_value(c).expect("live class")).collect();
                (g.find_value(*p).expect("live class"), ch)
            })
            .collect();
        let template = g
            .class(class)
            .expect("live class")
            .nodes
            .iter()
            .find_map(|n| match n.op {
                Symbol::Op(op) if n.children.iter().all(|&c| is_advice_class(g, c)) => Some((op, n.width, n)),
                _ => None,
            });
        let (op, width) = match template {
            Some((op, w, _)) => (op, w),
            None => {
                let (p, ch) = &parents[0];
                let node = g
                    .class(*p)
                    .expect("live class")
                    .nodes
                    .iter()
                    .find(|n| {
                        matches!(n.op, Symbol::Op(_))
                            && n.children
                                .iter()
                                .map(|&c| g.find_value(c).unwrap())
                                .eq(ch.iter().copied())
                    })
                    .expect("bonded parent keeps its node");
                let Symbol::Op(op) = node.op else { unreachable!() };
                (op, node.width)
            }
        };
        let template = template.map(|(_, _, n)| n.children.iter().map(|&c| g.width_of(c).unwrap()).collect());
        out.push(BondGroup {
            bnode: id,
            class,
            op,
            width,
            parents,
            template,
        });
    }
    out
}

/// Result of [`class_costs`]. Classes without an entry have infinite cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction<C> {
    pub classes: BTreeMap<EClassId, ClassCost<C>>,
    pub bonds: BTreeMap<BNodeId, BondDecision<C>>,
    pub groups: Vec<BondGroup>,
}

impl<C: Cost> Extraction<C> {
    pub fn cost_of(&self, id: EClassId) -> Option<&C> {
        self.classes.get(&id).map(|c| &c.cost)
    }

    pub fn choices(&self) -> BTreeMap<EClassId, Choice> {
        self.classes.iter().map(|(k, v)| (*k, v.choice.clone())).collect()
    }
}

fn count<C: Cost>(n: usize) -> C {
    C::from_usize(n).expect("count fits")
}

fn choice_rank(c: &Choice) -> (u8, String, Vec<EClassId>) {
    match c {
        Choice::Node(n) => (0, format!("{}:{}", n.op.kind_name(), n.op), n.children.clone()),
        Choice::BNode(b) => (1, String::new(), vec![EClassId(b.0)]),
        Choice::Route(b) => (1, String::new(), vec![EClassId(b.0)]),
    }
}

/// Total order on candidates: cost, height, then e-node before b-node or
/// route, operator name, child ids.
fn compare<C: Cost>(a: &ClassCost<C>, b: &ClassCost<C>) -> Ordering {
    a.cost
        .partial_cmp(&b.cost)
        .unwrap_or(Ordering::Equal)
        .then(a.height.cmp(&b.height))
        .then_with(|| choice_rank(&a.choice).cmp(&choice_rank(&b.choice)))
}

fn sum_children<C: Cost>(
    table: &BTreeMap<EClassId, ClassCost<C>>,
    g: &CircuitEGraph,
    children: &[EClassId],
) -> Option<(C, usize)> {
    let mut total = C::zero();
    let mut height = 0;
    for &c in children {
        let e = table.get(&g.find_value(c).ok()?)?;
        total = total + e.cost.clone();
        height = height.max(e.height + 1);
    }
    Some((total, height))
}

/// Bottom-up fixpoint of the cheapest choice per value class.
pub fn class_costs<C: Cost>(g: &CircuitEGraph, m: &CostModel<C>) -> Extraction<C> {
    let groups = bond_groups(g);
    let route = m.use_route();
    let mut template_groups: HashMap<EClassId, usize> = HashMap::new();
    let mut bond_classes: HashSet<EClassId> = HashSet::new();
    let mut decisions: Vec<BondChoice> = Vec::new();
    for (gi, grp) in groups.iter().enumerate() {
        bond_classes.insert(grp.class);
        let body = m.node_cost(grp.op.name(), grp.width);
        let n = count::<C>(grp.parents.len());
        let arity = count::<C>(grp.op.arity());
        let choice = match &grp.template {
            Some(_) if body.clone() + n.clone() * arity * route.clone() <= n * body => BondChoice::TemplateChosen,
            _ => BondChoice::BNodeChosen,
        };
        if choice == BondChoice::TemplateChosen {
            for (p, _) in &grp.parents {
                template_groups.insert(*p, gi);
            }
        }
        decisions.push(choice);
    }

    let mut table: BTreeMap<EClassId, ClassCost<C>> = BTreeMap::new();
    loop {
        let mut changed = false;
        for class in g.classes() {
            if bond_classes.contains(&class.id) {
                continue;
            }
            let mut best = table.get(&class.id).cloned();
            let mut offer = |cand: ClassCost<C>| {
                if best.as_ref().is_none_or(|b| compare(&cand, b) == Ordering::Less) {
                    best = Some(cand);
                }
            };
            for node in &class.nodes {
                if let Some((sum, height)) = sum_children(&table, g, &node.children) {
                    offer(ClassCost {
                        cost: m.node_cost(node.op.kind_name(), node.width) + sum,
                        height,
                        choice: Choice::Node(node.clone()),
                    });
                }
            }
            if let Some(&gi) = template_groups.get(&class.id) {
                let grp = &groups[gi];
                let (_, children) = grp.parents.iter().find(|(p, _)| *p == class.id).unwrap();
                if let Some((sum, height)) = sum_children(&table, g, children) {
                    let n = count::<C>(grp.parents.len());
                    let body = m.node_cost(grp.op.name(), grp.width);
                    offer(ClassCost {
                        cost: body / n + count::<C>(children.len()) * route.clone() + sum,
                        height,
                        choice: Choice::Route(grp.bnode),
                    });
                }
            }
            if best.as_ref() != table.get(&class.id) {
                table.insert(class.id, best.unwrap());
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut bonds = BTreeMap::new();
    for (grp, choice) in groups.iter().zip(decisions) {
        let body = m.node_cost(grp.op.name(), grp.width);
        let mut operands = Some((C::zero(), 0usize));
        for (_, ch) in &grp.parents {
            operands = match (operands, sum_children(&table, g, ch)) {
                (Some((a, ha)), Some((b, hb))) => Some((a + b, ha.max(hb))),
                _ => None,
            };
        }
        let n = count::<C>(grp.parents.len());
        let bnode_cost = operands.clone().map(|(s, _)| n.clone() * body.clone() + s);
        let template_cost = match (&grp.template, &operands) {
            (Some(_), Some((s, _))) => Some(body.clone() + n * count::<C>(grp.op.arity()) * route.clone() + s.clone()),
            _ => None,
        };
        if let Some((_, height)) = operands {
            let entry = match choice {
                BondChoice::TemplateChosen => {
                    let node = g
                        .class(grp.class)
                        .unwrap()
                        .nodes
                        .iter()
                        .find(|n| n.op == Symbol::Op(grp.op))
                        .cloned();
                    ClassCost {
                        cost: template_cost.clone().unwrap(),
                        height: height + 1,
                        choice: Choice::Node(node.expect("template node")),
                    }
                }
                BondChoice::BNodeChosen => ClassCost {
                    cost: bnode_cost.clone().unwrap(),
                    height: height + 1,
                    choice: Choice::BNode(grp.bnode),
                },
            };
            table.insert(grp.class, entry);
        }
        debug!(
            "bond {:?}: {choice:?} (b-node {bnode_cost:?}, template {template_cost:?})",
            grp.bnode
        );
        bonds.insert(
            grp.bnode,
            BondDecision {
                choice,
                bnode_cost,
                template_cost,
            },
        );
    }
    Extraction {
        classes: table,
        bonds,
        groups,
    }
}

struct Emitter<'a> {
    g: &'a CircuitEGraph,
    choices: &'a BTreeMap<EClassId, Choice>,
    groups: HashMap<BNodeId, &'a BondGroup>,
    builder: CircuitBuilder,
    inputs: HashMap<String, NodeId>,
    memo: HashMap<EClassId, NodeId>,
    shared: HashMap<BNodeId, NodeId>,
    visiting: HashSet<EClassId>,
}

impl Emitter<'_> {
    fn emit(&mut self, id: EClassId) -> Result<NodeId, ExtractError> {
        let id = self.g.find_value(id).map_err(|_| ExtractError::Cyclic(id))?;
        if let Some(&n) = self.memo.get(&id) {
            return Ok(n);
        }
        if !self.visiting.insert(id) {
            return Err(ExtractError::Cyclic(id));
        }
        let choice = self.choices.get(&id).ok_or(ExtractError::Cyclic(id))?;
        let out = match choice {
            Choice::Node(node) => match &node.op {
                Symbol::Input(name) => match self.inputs.get(&**name) {
                    Some(&n) => n,
                    None => {
                        let n = self.builder.input(name, node.width)?;
                        self.inputs.insert(name.to_string(), n);
                        n
                    }
                },
                Symbol::Const(v) => self.builder.constant(node.width, *v)?,
                Symbol::Advice(_) => return Err(ExtractError::FreeAdvice(id)),
                Symbol::Op(op) => {
                    let mut args = Vec::with_capacity(node.children.len());
                    for &c in &node.children {
                        args.push(self.emit(c)?);
                    }
                    self.builder.op(*op, node.width, &args)?
                }
            },
            Choice::BNode(_) => return Err(ExtractError::FreeAdvice(id)),
            Choice::Route(b) => {
                let grp = self.groups[b];
                let leaves = grp.template.as_ref().ok_or(ExtractError::FreeAdvice(id))?;
                let (_, children) = grp.parents.iter().find(|(p, _)| *p == id).expect("routed parent");
                let mut args = Vec::with_capacity(children.len());
                for &c in children {
                    args.push(self.emit(c)?);
                }
                let unit = match self.shared.get(b) {
                    Some(&u) => u,
                    None => {
                        let u = self.builder.shared(grp.op, grp.width, leaves)?;
                        self.shared.insert(*b, u);
                        u
                    }
                };
                self.builder.use_site(unit, &args)?
            }
        };
        self.visiting.remove(&id);
        self.memo.insert(id, out);
        Ok(out)
    }
}

/// Emits the circuit induced by `choices` from `roots`. Inputs keep their
/// declared order; unreachable nodes are dropped.
pub fn emit_choices(
    g: &CircuitEGraph,
    roots: &Roots,
    choices: &BTreeMap<EClassId, Choice>,
    groups: &[BondGroup],
) -> Result<Circuit, ExtractError> {
    let mut e = Emitter {
        g,
        choices,
        groups: groups.iter().map(|grp| (grp.bnode, grp)).collect(),
        builder: CircuitBuilder::with_hashcons(),
        inputs: HashMap::new(),
        memo: HashMap::new(),
        shared: HashMap::new(),
        visiting: HashSet::new(),
    };
    for (name, w) in &roots.inputs {
        let n = e.builder.input(name, *w)?;
        e.inputs.insert(name.clone(), n);
    }
    let mut outs = Vec::with_capacity(roots.outputs.len());
    for (name, class) in &roots.outputs {
        outs.push((name, e.emit(*class)?));
    }
    for (name, n) in outs {
        e.builder.output(name, n);
    }
    Ok(e.builder.finish()?.prune())
}

/// Walks the chosen nodes from the roots and emits a circuit with no b-nodes
/// and no free advice. A routed parent becomes a use-site of its group's
/// shared unit, emitted once.
pub fn extract_circuit<C: Cost>(g: &CircuitEGraph, roots: &Roots, ex: &Extraction<C>) -> Result<Circuit, ExtractError> {
    for (name, class) in &roots.outputs {
        let v = g.find_value(*class).map_err(|_| ExtractError::Cyclic(*class))?;
        if !ex.classes.contains_key(&v) {
            return Err(ExtractError::Unextractable {
                output: name.clone(),
                class: v,
            });
        }
    }
    emit_choices(g, roots, &ex.choices(), &ex.groups)
}

/// [`class_costs`] followed by [`extract_circuit`]; also returns the cost of
/// the emitted circuit.
pub fn extract<C: Cost>(g: &CircuitEGraph, roots: &Roots, m: &CostModel<C>) -> Result<(Circuit, C), ExtractError> {
    let ex = class_costs(g, m);
    let c = extract_circuit(g, roots, &ex)?;
    let cost = circuit_cost(&c, m);
    Ok((c, cost))
}
