//! Bond nodes: tying together equivalent concurrent computations.
//!
//! A b-node carries a bond-map from each bonded parent class to that
//! parent's ordered child classes. Bonding places every parent and the
//! b-node into one e-class; a template such as `(mul:64 advice advice)` can
//! then be unified with that class. Dispersion undoes a bond after
//! extraction, either re-materializing each parent on its own children or
//! routing every parent through one shared unit whose advice leaves are
//! bound per use.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};

use log::debug;

use crate::egraph::{BNodeId, EClassId, EGraph, EGraphError, ENode, Operator, Width};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BondError {
    #[error("a bond needs at least two parents, got {0}")]
    BondTooSmall(usize),
    #[error("bond parents {0} and {1} are data-dependent")]
    CyclicBond(EClassId, EClassId),
    #[error("e-graph has pending merges; rebuild before bonding")]
    NotRebuilt,
    #[error("parent {0} appears twice in the bond")]
    DuplicateParent(EClassId),
    #[error("parent {0} is already bonded")]
    AlreadyBonded(EClassId),
    #[error("bond-map child lists differ in length ({0} vs {1})")]
    RaggedChildren(usize, usize),
    #[error("template {template} does not fit the bonded group {group}")]
    TemplateMismatch { template: String, group: String },
    #[error("no extracted node for bond child {0}")]
    IncompleteExtraction(EClassId),
    #[error(transparent)]
    Graph(#[from] EGraphError),
}

/// Ordered map from bonded parent classes to their child classes.
///
/// Ids are stored exactly as they were when the bond was made, so the map
/// stays usable after later merges.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BondMap {
    entries: Vec<(EClassId, Vec<EClassId>)>,
}

impl BondMap {
    /// Entries are kept sorted by parent id, so maps built in any order
    /// compare equal.
    pub fn new(mut entries: Vec<(EClassId, Vec<EClassId>)>) -> Result<Self, BondError> {
        if entries.len() < 2 {
            return Err(BondError::BondTooSmall(entries.len()));
        }
        let arity = entries[0].1.len();
        let mut seen = BTreeSet::new();
        for (parent, children) in &entries {
            if children.len() != arity {
                return Err(BondError::RaggedChildren(arity, children.len()));
            }
            if !seen.insert(*parent) {
                return Err(BondError::DuplicateParent(*parent));
            }
        }
        entries.sort();
        Ok(BondMap { entries })
    }

    pub fn entries(&self) -> &[(EClassId, Vec<EClassId>)] {
        &self.entries
    }

    pub fn parents(&self) -> impl Iterator<Item = EClassId> + '_ {
        self.entries.iter().map(|(p, _)| *p)
    }

    pub fn children_of(&self, parent: EClassId) -> Option<&[EClassId]> {
        self.entries
            .iter()
            .find(|(p, _)| *p == parent)
            .map(|(_, c)| c.as_slice())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Length of every child list.
    pub fn arity(&self) -> usize {
        self.entries[0].1.len()
    }
}

impl fmt::Display for BondMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, (p, cs)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p} -> {{")?;
            for (j, c) in cs.iter().enumerate() {
                if j > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{c}")?;
            }
            f.write_str("}")?;
        }
        f.write_str("]")
    }
}

/// Bond node. Identity is the bond-map alone; the symbol only names it.
#[derive(Debug, Clone)]
pub struct BNode {
    pub symbol: u32,
    pub bond_map: BondMap,
}

impl PartialEq for BNode {
    fn eq(&self, other: &Self) -> bool {
        self.bond_map == other.bond_map
    }
}

impl Eq for BNode {}

impl Hash for BNode {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.bond_map.hash(state);
    }
}

impl fmt::Display for BNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bond#{} {}", self.symbol, self.bond_map)
    }
}

/// Where a bonded parent was referenced before the bond merged it away.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Reference<O> {
    Consumer {
        class: EClassId,
        node: ENode<O>,
        slot: usize,
    },
    Output(String),
}

/// Everything needed to undo a bond after saturation.
#[derive(Debug, Clone)]
pub struct BondRecord<O> {
    /// Name the bonding rule gave this bond (e.g. `MulBond`).
    pub name: String,
    pub group: (O, Width),
    pub bnode_id: BNodeId,
    pub bnode: BNode,
    pub bond_class: EClassId,
    pub provenance: BTreeMap<Reference<O>, EClassId>,
}

impl<O> BondRecord<O> {
    pub fn bond_map(&self) -> &BondMap {
        &self.bnode.bond_map
    }
}

/// Restriction applied while gathering a bond set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AncestryConstraint {
    /// No kept candidate may be an ancestor or descendant of another.
    #[default]
    Independent,
    /// Keep every candidate (bonding will reject dependent sets).
    Unconstrained,
}

/// Operator alphabets that can mint fresh advice leaves.
pub trait AdviceLanguage: Operator {
    fn advice(index: u32) -> Self;
    fn is_advice(&self) -> bool;
}

/// Shared replacement for a bonded group: one operator over fresh advice
/// leaves of the given widths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template<O> {
    pub op: O,
    pub width: Width,
    pub leaves: Vec<Width>,
}

impl<O: fmt::Display> fmt::Display for Template<O> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}:{}", self.op, self.width)?;
        for w in &self.leaves {
            write!(f, " advice:{w}")?;
        }
        f.write_str(")")
    }
}

/// Height of each value class: 0 for leaves, otherwise the smallest
/// `1 + max(child heights)` over its e-nodes. Classes only reachable through
/// cycles get no height.
pub(crate) fn heights<O: Operator>(g: &EGraph<O>) -> HashMap<EClassId, usize> {
    let mut h: HashMap<EClassId, usize> = HashMap::new();
    loop {
        let mut changed = false;
        for class in g.classes() {
            for n in &class.nodes {
                let mut best = 0;
                let mut ok = true;
                for c in &n.children {
                    match h.get(&g.value_of(*c)) {
                        Some(&ch) => best = best.max(ch + 1),
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok && h.get(&class.id).is_none_or(|&cur| best < cur) {
                    h.insert(class.id, best);
                    changed = true;
                }
            }
        }
        if !changed {
            return h;
        }
    }
}

/// Value classes reachable from `id` through e-node children, excluding `id`
/// itself unless it lies on a cycle.
pub(crate) fn descendants<O: Operator>(g: &EGraph<O>, id: EClassId) -> BTreeSet<EClassId> {
    let mut seen = BTreeSet::new();
    let mut stack: Vec<EClassId> = g.value_children(id).into_iter().collect();
    while let Some(c) = stack.pop() {
        if seen.insert(c) {
            stack.extend(g.value_children(c));
        }
    }
    seen
}

fn dependent(desc: &HashMap<EClassId, BTreeSet<EClassId>>, a: EClassId, b: EClassId) -> bool {
    desc[&a].contains(&b) || desc[&b].contains(&a)
}

/// Gathers a bond set for `(op, width)`: one entry per value class holding
/// such an e-node, scanned bottom-up and kept greedily while independent of
/// every already-kept class. Classes that are already bonded, or whose
/// operands are, are skipped. Returns an empty list when fewer than two
/// candidates survive.
pub fn select_bond_set<O: Operator>(
    g: &EGraph<O>,
    group: &(O, Width),
    constraint: AncestryConstraint,
) -> Vec<(EClassId, Vec<EClassId>)> {
    let (op, width) = group;
    if op.arity() == 0 {
        return Vec::new();
    }
    let heights = heights(g);
    let mut candidates: Vec<(usize, EClassId, Vec<EClassId>)> = Vec::new();
    for class in g.classes() {
        if g.is_bonded(class.id) {
            continue;
        }
        let Some(node) = class.nodes.iter().find(|n| &n.op == op && n.width == *width) else {
            continue;
        };
        if node.children.iter().any(|&c| g.is_bonded(c)) {
            continue;
        }
        let Some(&h) = heights.get(&class.id) else {
            continue;
        };
        candidates.push((h, class.id, node.children.clone()));
    }
    candidates.sort_by_key(|(h, id, _)| (*h, *id));

    let desc: HashMap<EClassId, BTreeSet<EClassId>> =
        candidates.iter().map(|(_, id, _)| (*id, descendants(g, *id))).collect();
    let mut kept: Vec<(EClassId, Vec<EClassId>)> = Vec::new();
    for (_, id, children) in candidates {
        let clash = constraint == AncestryConstraint::Independent && kept.iter().any(|(k, _)| dependent(&desc, *k, id));
        if clash {
            debug!("bond set {op}:{width}: dropping {id}, dependent on a kept site");
            continue;
        }
        kept.push((id, children));
    }
    if kept.len() < 2 {
        return Vec::new();
    }
    kept
}

/// Bonds the given parents: records where each parent is referenced, adds a
/// b-node carrying the bond-map, and places the parents and the b-node in
/// one e-class. The merge is invisible to congruence closure.
pub fn bond<O: Operator>(
    g: &mut EGraph<O>,
    name: &str,
    group: (O, Width),
    set: Vec<(EClassId, Vec<EClassId>)>,
) -> Result<BondRecord<O>, BondError> {
    if set.len() < 2 {
        return Err(BondError::BondTooSmall(set.len()));
    }
    if !g.is_clean() {
        return Err(BondError::NotRebuilt);
    }
    let mut parents = Vec::with_capacity(set.len());
    let mut seen = BTreeSet::new();
    for (p, children) in &set {
        let v = g.find_value(*p)?;
        for &c in children {
            g.find_value(c)?;
        }
        if !seen.insert(v) {
            return Err(BondError::DuplicateParent(*p));
        }
        parents.push(v);
    }
    let bond_map = BondMap::new(set)?;

    if let Some(existing) = g.find_bnode(&bond_map) {
        let bond_class = g.find(g.bnode_class(existing))?;
        return Ok(BondRecord {
            name: name.to_string(),
            group,
            bnode_id: existing,
            bnode: g.bnode(existing).clone(),
            bond_class,
            provenance: provenance(g, &parents),
        });
    }
    if let Some(&p) = parents.iter().find(|&&p| g.is_bonded(p)) {
        return Err(BondError::AlreadyBonded(p));
    }
    let desc: HashMap<EClassId, BTreeSet<EClassId>> = parents.iter().map(|&p| (p, descendants(g, p))).collect();
    for (i, &a) in parents.iter().enumerate() {
        for &b in &parents[i + 1..] {
            if dependent(&desc, a, b) {
                return Err(BondError::CyclicBond(a, b));
            }
        }
    }

    let provenance = provenance(g, &parents);
    let bnode = BNode {
        symbol: g.fresh_symbol(),
        bond_map,
    };
    let (bnode_id, bclass) = g.add_bnode(bnode.clone(), group.1);
    let mut members = parents.clone();
    members.push(bclass);
    let bond_class = g.bond_union(&members);
    debug!("bonded {} parents into {bond_class} ({})", parents.len(), bnode);
    Ok(BondRecord {
        name: name.to_string(),
        group,
        bnode_id,
        bnode,
        bond_class,
        provenance,
    })
}

fn provenance<O: Operator>(g: &EGraph<O>, parents: &[EClassId]) -> BTreeMap<Reference<O>, EClassId> {
    let targets: BTreeSet<EClassId> = parents.iter().copied().collect();
    let mut out = BTreeMap::new();
    for class in g.classes() {
        for node in &class.nodes {
            for (slot, &c) in node.children.iter().enumerate() {
                let v = g.value_of(c);
                if targets.contains(&v) {
                    out.insert(
                        Reference::Consumer {
                            class: class.id,
                            node: node.clone(),
                            slot,
                        },
                        v,
                    );
                }
            }
        }
    }
    for (name, &root) in g.roots() {
        let v = g.value_of(root);
        if targets.contains(&v) {
            out.insert(Reference::Output(name.clone()), v);
        }
    }
    out
}

/// Unifies the bond class of `rec` with `template` instantiated over fresh
/// advice leaves. Returns the canonical e-class.
pub fn unify_with_template<O: AdviceLanguage>(
    g: &mut EGraph<O>,
    rec: &BondRecord<O>,
    template: &Template<O>,
) -> Result<EClassId, BondError> {
    let arity = rec.bond_map().arity();
    let (op, width) = &rec.group;
    if template.leaves.len() != arity || template.op.arity() != arity || &template.op != op || template.width != *width
    {
        return Err(BondError::TemplateMismatch {
            template: template.to_string(),
            group: format!("{op}:{width}/{arity}"),
        });
    }
    let mut leaves = Vec::with_capacity(arity);
    for &w in &template.leaves {
        let sym = g.fresh_symbol();
        leaves.push(g.add(ENode::leaf(O::advice(sym), w))?);
    }
    let shared = g.add(ENode::new(template.op.clone(), template.width, leaves))?;
    let bclass = g.bnode_class(rec.bnode_id);
    g.merge(shared, bclass)?;
    g.rebuild();
    Ok(g.find(bclass)?)
}

/// How a bond is resolved at extraction time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DispersalChoice<O> {
    /// Every parent is re-materialized on its own children.
    BNode,
    /// One shared unit serves every parent through per-use advice bindings.
    Template(Template<O>),
}

/// Circuit-agnostic output of dispersion. `H` is the caller's handle for an
/// already extracted operand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fragment<O, H> {
    Node {
        parent: EClassId,
        op: O,
        width: Width,
        operands: Vec<H>,
    },
    Shared(Template<O>),
    /// Binds advice leaf `j` of the shared unit to `bindings[j]`.
    Use {
        parent: EClassId,
        bindings: Vec<H>,
    },
}

/// Replaces a bond by ordinary data-flow: the inverse of [`bond`].
pub fn disperse<O: Operator, H: Clone>(
    rec: &BondRecord<O>,
    choice: &DispersalChoice<O>,
    extracted_children: &HashMap<EClassId, H>,
) -> Result<Vec<Fragment<O, H>>, BondError> {
    let operands = |children: &[EClassId]| -> Result<Vec<H>, BondError> {
        children
            .iter()
            .map(|c| {
                extracted_children
                    .get(c)
                    .cloned()
                    .ok_or(BondError::IncompleteExtraction(*c))
            })
            .collect()
    };
    let mut out = Vec::new();
    match choice {
        DispersalChoice::BNode => {
            let (op, width) = &rec.group;
            for (parent, children) in rec.bond_map().entries() {
                out.push(Fragment::Node {
                    parent: *parent,
                    op: op.clone(),
                    width: *width,
                    operands: operands(children)?,
                });
            }
        }
        DispersalChoice::Template(t) => {
            out.push(Fragment::Shared(t.clone()));
            for (parent, children) in rec.bond_map().entries() {
                out.push(Fragment::Use {
                    parent: *parent,
                    bindings: operands(children)?,
                });
            }
        }
    }
    Ok(out)
}
