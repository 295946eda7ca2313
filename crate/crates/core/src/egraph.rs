//! E-graph substrate: union-find, hashcons and congruence-closure rebuild,
//! extended so that an e-class may hold b-nodes next to ordinary e-nodes.
//!
//! Two equivalences are tracked over the same dense id space:
//!
//! * the *value* partition, which is what congruence closure maintains.
//!   Ids in one value class denote the same value, so hashconsing and
//!   e-matching operate on it.
//! * the *e-class* partition ([`EGraph::find`]), which is the value partition
//!   coarsened by bond merges. Bonding puts several semantically distinct
//!   parents into one e-class; those merges never propagate upward, so
//!   consumers of the bonded parents keep distinct value children.
//!
//! Without bonds the two partitions coincide.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::hash::Hash;

use crate::bond::{BNode, BondMap};

pub type Width = u8;
pub const MAX_WIDTH: Width = 64;

/// Dense e-class identifier. Retired ids stay resolvable forever.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct EClassId(pub u32);

impl EClassId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// Identifier of a b-node inside an [`EGraph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct BNodeId(pub u32);

/// Operator alphabet an e-graph is built over.
pub trait Operator: Clone + Eq + Ord + Hash + fmt::Debug + fmt::Display {
    fn arity(&self) -> usize;

    /// Whether a node of `width` over operands of `child_widths` is well typed.
    fn check_widths(&self, _width: Width, _child_widths: &[Width]) -> bool {
        true
    }
}

/// Function symbol with a bit width and an ordered list of child classes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ENode<O> {
    pub op: O,
    pub width: Width,
    pub children: Vec<EClassId>,
}

impl<O> ENode<O> {
    pub fn new(op: O, width: Width, children: Vec<EClassId>) -> Self {
        ENode { op, width, children }
    }

    pub fn leaf(op: O, width: Width) -> Self {
        ENode {
            op,
            width,
            children: Vec::new(),
        }
    }
}

impl<O: fmt::Display> fmt::Display for ENode<O> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.children.is_empty() {
            return write!(f, "{}:{}", self.op, self.width);
        }
        write!(f, "({}:{}", self.op, self.width)?;
        for c in &self.children {
            write!(f, " {c}")?;
        }
        f.write_str(")")
    }
}

/// Member of an e-class: either an e-node or a b-node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node<O> {
    E(ENode<O>),
    B(BNodeId),
}

#[derive(Debug, Clone)]
pub struct EClass<O> {
    pub id: EClassId,
    pub width: Width,
    pub nodes: Vec<ENode<O>>,
    pub bnodes: Vec<BNodeId>,
    /// Back-references used by rebuild: (parent e-node, its value class).
    pub(crate) parents: Vec<(ENode<O>, EClassId)>,
}

impl<O> EClass<O> {
    pub fn len(&self) -> usize {
        self.nodes.len() + self.bnodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EGraphError {
    #[error("unknown e-class {0}")]
    UnknownClass(EClassId),
    #[error("`{op}` expects {expected} children, got {got}")]
    Arity { op: String, expected: usize, got: usize },
    #[error("ill-typed node {node}: widths {child_widths:?}")]
    Width { node: String, child_widths: Vec<Width> },
}

#[derive(Debug, Clone, Default)]
pub(crate) struct UnionFind {
    parents: Vec<u32>,
}

impl UnionFind {
    fn make_set(&mut self) -> u32 {
        let id = self.parents.len() as u32;
        self.parents.push(id);
        id
    }

    fn find(&self, mut x: u32) -> u32 {
        while self.parents[x as usize] != x {
            x = self.parents[x as usize];
        }
        x
    }

    fn find_mut(&mut self, mut x: u32) -> u32 {
        while self.parents[x as usize] != x {
            let grand = self.parents[self.parents[x as usize] as usize];
            self.parents[x as usize] = grand;
            x = grand;
        }
        x
    }

    /// Unions two roots; the lower id stays root.
    fn union_roots(&mut self, a: u32, b: u32) -> u32 {
        let (root, child) = if a <= b { (a, b) } else { (b, a) };
        self.parents[child as usize] = root;
        root
    }
}

/// E-graph over operator alphabet `O`.
#[derive(Debug, Clone)]
pub struct EGraph<O> {
    values: UnionFind,
    bonds: UnionFind,
    classes: BTreeMap<EClassId, EClass<O>>,
    hashcons: HashMap<ENode<O>, EClassId>,
    pending: Vec<EClassId>,
    bnodes: Vec<BNode>,
    bnode_classes: Vec<EClassId>,
    bnode_index: HashMap<BondMap, BNodeId>,
    roots: BTreeMap<String, EClassId>,
    fresh: u32,
}

impl<O> Default for EGraph<O> {
    fn default() -> Self {
        EGraph {
            values: UnionFind::default(),
            bonds: UnionFind::default(),
            classes: BTreeMap::new(),
            hashcons: HashMap::new(),
            pending: Vec::new(),
            bnodes: Vec::new(),
            bnode_classes: Vec::new(),
            bnode_index: HashMap::new(),
            roots: BTreeMap::new(),
            fresh: 0,
        }
    }
}

impl<O: Operator> EGraph<O> {
    pub fn new() -> Self {
        Self::default()
    }

    fn check_id(&self, id: EClassId) -> Result<(), EGraphError> {
        if id.index() < self.values.parents.len() {
            Ok(())
        } else {
            Err(EGraphError::UnknownClass(id))
        }
    }

    /// Canonical e-class of `id` (bond merges included).
    pub fn find(&self, id: EClassId) -> Result<EClassId, EGraphError> {
        self.check_id(id)?;
        Ok(EClassId(self.bonds.find(id.0)))
    }

    /// Canonical value class of `id` (bond merges excluded).
    pub fn find_value(&self, id: EClassId) -> Result<EClassId, EGraphError> {
        self.check_id(id)?;
        Ok(EClassId(self.values.find(id.0)))
    }

    pub(crate) fn value_of(&self, id: EClassId) -> EClassId {
        EClassId(self.values.find(id.0))
    }

    fn canonicalize(&self, node: &ENode<O>) -> ENode<O> {
        ENode {
            op: node.op.clone(),
            width: node.width,
            children: node.children.iter().map(|&c| self.value_of(c)).collect(),
        }
    }

    /// Looks up a node in the hashcons; returns its value class.
    pub fn lookup(&self, node: &ENode<O>) -> Option<EClassId> {
        if node.children.iter().any(|c| self.check_id(*c).is_err()) {
            return None;
        }
        self.hashcons.get(&self.canonicalize(node)).map(|&c| self.value_of(c))
    }

    fn new_class(&mut self, width: Width) -> EClassId {
        let id = self.values.make_set();
        let bid = self.bonds.make_set();
        debug_assert_eq!(id, bid);
        let id = EClassId(id);
        self.classes.insert(
            id,
            EClass {
                id,
                width,
                nodes: Vec::new(),
                bnodes: Vec::new(),
                parents: Vec::new(),
            },
        );
        id
    }

    /// Adds an e-node and returns its value class. A structural duplicate
    /// (after canonicalization) returns the existing class.
    pub fn add(&mut self, node: ENode<O>) -> Result<EClassId, EGraphError> {
        for &c in &node.children {
            self.check_id(c)?;
        }
        if node.op.arity() != node.children.len() {
            return Err(EGraphError::Arity {
                op: node.op.to_string(),
                expected: node.op.arity(),
                got: node.children.len(),
            });
        }
        let node = self.canonicalize(&node);
        let child_widths: Vec<Width> = node.children.iter().map(|&c| self.classes[&c].width).collect();
        if node.width == 0 || node.width > MAX_WIDTH || !node.op.check_widths(node.width, &child_widths) {
            return Err(EGraphError::Width {
                node: node.to_string(),
                child_widths,
            });
        }
        if let Some(&existing) = self.hashcons.get(&node) {
            return Ok(self.value_of(existing));
        }
        let id = self.new_class(node.width);
        for &c in &node.children {
            self.classes
                .get_mut(&c)
                .expect("canonical child")
                .parents
                .push((node.clone(), id));
        }
        self.classes.get_mut(&id).unwrap().nodes.push(node.clone());
        self.hashcons.insert(node, id);
        Ok(id)
    }

    /// Merges the classes of `a` and `b`. Returns the canonical e-class.
    pub fn merge(&mut self, a: EClassId, b: EClassId) -> Result<EClassId, EGraphError> {
        self.check_id(a)?;
        self.check_id(b)?;
        let (ra, rb) = (self.values.find_mut(a.0), self.values.find_mut(b.0));
        if ra != rb {
            self.union_values(ra, rb);
        }
        self.find(a)
    }

    fn union_values(&mut self, ra: u32, rb: u32) -> EClassId {
        let root = self.values.union_roots(ra, rb);
        let child = if root == ra { rb } else { ra };
        let (br_a, br_b) = (self.bonds.find_mut(ra), self.bonds.find_mut(rb));
        if br_a != br_b {
            self.bonds.union_roots(br_a, br_b);
        }
        let absorbed = self.classes.remove(&EClassId(child)).expect("value root has a class");
        let target = self.classes.get_mut(&EClassId(root)).expect("value root has a class");
        debug_assert_eq!(target.width, absorbed.width, "merging classes of different widths");
        target.nodes.extend(absorbed.nodes);
        target.bnodes.extend(absorbed.bnodes);
        target.parents.extend(absorbed.parents);
        for b in &target.bnodes {
            self.bnode_classes[b.0 as usize] = EClassId(root);
        }
        self.pending.push(EClassId(root));
        EClassId(root)
    }

    /// Joins the e-classes of `ids` without touching the value partition.
    /// Used by bonding; never queues congruence work.
    pub(crate) fn bond_union(&mut self, ids: &[EClassId]) -> EClassId {
        let mut root = self.bonds.find_mut(ids[0].0);
        for id in &ids[1..] {
            let r = self.bonds.find_mut(id.0);
            if r != root {
                root = self.bonds.union_roots(root, r);
            }
        }
        EClassId(root)
    }

    pub fn is_clean(&self) -> bool {
        self.pending.is_empty()
    }

    /// Number of queued classes awaiting rebuild.
    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    /// Restores the hashcons and congruence invariants. Returns the number of
    /// congruence merges performed.
    pub fn rebuild(&mut self) -> usize {
        let mut merges = 0;
        loop {
            while !self.pending.is_empty() {
                let todo: BTreeSet<EClassId> = std::mem::take(&mut self.pending)
                    .into_iter()
                    .map(|c| self.value_of(c))
                    .collect();
                for class in todo {
                    merges += self.repair(class);
                }
            }
            let late = self.canonicalize_classes();
            if late == 0 {
                return merges;
            }
            merges += late;
        }
    }

    fn repair(&mut self, class: EClassId) -> usize {
        let class = self.value_of(class);
        let Some(c) = self.classes.get_mut(&class) else {
            return 0;
        };
        let parents = std::mem::take(&mut c.parents);
        let mut merges = 0;
        for (node, _) in &parents {
            self.hashcons.remove(node);
        }
        let mut fresh: BTreeMap<ENode<O>, EClassId> = BTreeMap::new();
        for (node, pclass) in parents {
            let node = self.canonicalize(&node);
            let pclass = self.value_of(pclass);
            let pclass = match fresh.get(&node) {
                Some(&other) => {
                    let (ra, rb) = (self.values.find_mut(other.0), self.values.find_mut(pclass.0));
                    if ra != rb {
                        merges += 1;
                        self.union_values(ra, rb)
                    } else {
                        EClassId(ra)
                    }
                }
                None => pclass,
            };
            if let Some(existing) = self.hashcons.insert(node.clone(), pclass) {
                let (ra, rb) = (self.values.find_mut(existing.0), self.values.find_mut(pclass.0));
                if ra != rb {
                    merges += 1;
                    self.union_values(ra, rb);
                }
            }
            fresh.insert(node, self.value_of(pclass));
        }
        let class = self.value_of(class);
        let c = self.classes.get_mut(&class).expect("value root has a class");
        c.parents.extend(fresh);
        merges
    }

    /// Canonicalizes every class and rebuilds the hashcons from scratch.
    /// Returns the number of merges forced by hashcons collisions.
    fn canonicalize_classes(&mut self) -> usize {
        self.hashcons.clear();
        let mut collisions = Vec::new();
        let ids: Vec<EClassId> = self.classes.keys().copied().collect();
        for id in ids {
            let c = &self.classes[&id];
            let mut nodes: Vec<ENode<O>> = c.nodes.iter().map(|n| self.canonicalize(n)).collect();
            nodes.sort();
            nodes.dedup();
            let mut parents: Vec<(ENode<O>, EClassId)> = c
                .parents
                .iter()
                .map(|(n, p)| (self.canonicalize(n), self.value_of(*p)))
                .collect();
            parents.sort();
            parents.dedup();
            for n in &nodes {
                if let Some(other) = self.hashcons.insert(n.clone(), id) {
                    if other != id {
                        collisions.push((other, id));
                    }
                }
            }
            let c = self.classes.get_mut(&id).unwrap();
            c.nodes = nodes;
            c.parents = parents;
            c.bnodes.sort();
            c.bnodes.dedup();
        }
        let mut merges = 0;
        for (a, b) in collisions {
            let (ra, rb) = (self.values.find_mut(a.0), self.values.find_mut(b.0));
            if ra != rb {
                merges += 1;
                self.union_values(ra, rb);
            }
        }
        merges
    }

    /// All members (e-nodes and b-nodes) of the e-class of `id`.
    pub fn enodes_of(&self, id: EClassId) -> Result<Vec<Node<O>>, EGraphError> {
        let mut out = Vec::new();
        for v in self.value_classes_in(id)? {
            let c = &self.classes[&v];
            out.extend(c.nodes.iter().cloned().map(Node::E));
            out.extend(c.bnodes.iter().copied().map(Node::B));
        }
        Ok(out)
    }

    /// Value classes making up the e-class of `id`, in id order.
    pub fn value_classes_in(&self, id: EClassId) -> Result<Vec<EClassId>, EGraphError> {
        let root = self.find(id)?;
        Ok(self
            .classes
            .keys()
            .copied()
            .filter(|&v| self.bonds.find(v.0) == root.0)
            .collect())
    }

    /// The value class record for `id`.
    pub fn class(&self, id: EClassId) -> Result<&EClass<O>, EGraphError> {
        let v = self.find_value(id)?;
        Ok(&self.classes[&v])
    }

    /// Value classes in ascending id order.
    pub fn classes(&self) -> impl Iterator<Item = &EClass<O>> {
        self.classes.values()
    }

    /// Canonical e-class ids (bond groups collapsed), ascending.
    pub fn eclass_ids(&self) -> Vec<EClassId> {
        let set: BTreeSet<EClassId> = self.classes.keys().map(|&v| EClassId(self.bonds.find(v.0))).collect();
        set.into_iter().collect()
    }

    pub fn number_of_classes(&self) -> usize {
        self.eclass_ids().len()
    }

    pub fn number_of_value_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn total_size(&self) -> usize {
        self.classes.values().map(EClass::len).sum()
    }

    pub fn number_of_enodes(&self) -> usize {
        self.classes.values().map(|c| c.nodes.len()).sum()
    }

    pub fn width_of(&self, id: EClassId) -> Result<Width, EGraphError> {
        Ok(self.class(id)?.width)
    }

    pub fn set_root(&mut self, name: impl Into<String>, id: EClassId) -> Result<(), EGraphError> {
        self.check_id(id)?;
        self.roots.insert(name.into(), id);
        Ok(())
    }

    pub fn roots(&self) -> &BTreeMap<String, EClassId> {
        &self.roots
    }

    pub fn bnodes(&self) -> &[BNode] {
        &self.bnodes
    }

    pub fn bnode(&self, id: BNodeId) -> &BNode {
        &self.bnodes[id.0 as usize]
    }

    /// Value class currently holding b-node `id`.
    pub fn bnode_class(&self, id: BNodeId) -> EClassId {
        self.value_of(self.bnode_classes[id.0 as usize])
    }

    /// Whether the e-class of `id` contains any b-node.
    pub fn is_bonded(&self, id: EClassId) -> bool {
        let root = self.bonds.find(id.0);
        self.bnode_classes.iter().any(|c| self.bonds.find(c.0) == root)
    }

    pub(crate) fn find_bnode(&self, map: &BondMap) -> Option<BNodeId> {
        self.bnode_index.get(map).copied()
    }

    /// Inserts a b-node into a fresh singleton value class.
    pub(crate) fn add_bnode(&mut self, bnode: BNode, width: Width) -> (BNodeId, EClassId) {
        let id = BNodeId(self.bnodes.len() as u32);
        let class = self.new_class(width);
        self.classes.get_mut(&class).unwrap().bnodes.push(id);
        self.bnode_index.insert(bnode.bond_map.clone(), id);
        self.bnodes.push(bnode);
        self.bnode_classes.push(class);
        (id, class)
    }

    /// Counter for globally unique symbols (b-node symbols, advice leaves).
    pub(crate) fn fresh_symbol(&mut self) -> u32 {
        let s = self.fresh;
        self.fresh += 1;
        s
    }

    /// Every e-node edge `class -> child` in the value graph, deduplicated.
    pub fn value_children(&self, id: EClassId) -> BTreeSet<EClassId> {
        let v = self.value_of(id);
        self.classes[&v]
            .nodes
            .iter()
            .flat_map(|n| n.children.iter().map(|&c| self.value_of(c)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
    enum T {
        Leaf(&'static str),
        F,
        G,
    }

    impl fmt::Display for T {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match self {
                T::Leaf(s) => f.write_str(s),
                T::F => f.write_str("f"),
                T::G => f.write_str("g"),
            }
        }
    }

    impl Operator for T {
        fn arity(&self) -> usize {
            match self {
                T::Leaf(_) => 0,
                T::F | T::G => 1,
            }
        }
    }

    fn leaf(g: &mut EGraph<T>, s: &'static str) -> EClassId {
        g.add(ENode::leaf(T::Leaf(s), 8)).unwrap()
    }

    fn app(g: &mut EGraph<T>, op: T, c: EClassId) -> EClassId {
        g.add(ENode::new(op, 8, vec![c])).unwrap()
    }

    #[test]
    fn hashcons_dedups_and_find_is_reflexive() {
        let mut g = EGraph::new();
        let a = leaf(&mut g, "a");
        assert_eq!(leaf(&mut g, "a"), a);
        assert_eq!(g.find(a).unwrap(), a);
        assert_eq!(g.number_of_classes(), 1);
    }

    #[test]
    fn merge_is_idempotent_and_transitive() {
        let mut g = EGraph::new();
        let a = leaf(&mut g, "a");
        let b = leaf(&mut g, "b");
        let c = leaf(&mut g, "c");
        assert_eq!(g.merge(a, a).unwrap(), a);
        assert!(g.is_clean());
        g.merge(a, b).unwrap();
        g.merge(b, c).unwrap();
        assert_eq!(g.find(a).unwrap(), g.find(c).unwrap());
    }

    #[test]
    fn congruence_propagates_through_chains() {
        let mut g = EGraph::new();
        let a = leaf(&mut g, "a");
        let b = leaf(&mut g, "b");
        let fa = app(&mut g, T::F, a);
        let fb = app(&mut g, T::F, b);
        let gfa = app(&mut g, T::G, fa);
        let gfb = app(&mut g, T::G, fb);
        assert_eq!(g.rebuild(), 0);
        g.merge(a, b).unwrap();
        assert_eq!(g.rebuild(), 2);
        assert_eq!(g.find(fa).unwrap(), g.find(fb).unwrap());
        assert_eq!(g.find(gfa).unwrap(), g.find(gfb).unwrap());
        assert_eq!(g.rebuild(), 0);
        assert_eq!(g.enodes_of(gfa).unwrap().len(), 1);
    }

    #[test]
    fn errors_on_unknown_ids_and_arity() {
        let mut g: EGraph<T> = EGraph::new();
        let bogus = EClassId(7);
        assert_eq!(g.find(bogus), Err(EGraphError::UnknownClass(bogus)));
        assert!(matches!(
            g.add(ENode::new(T::F, 8, vec![bogus])),
            Err(EGraphError::UnknownClass(_))
        ));
        let a = leaf(&mut g, "a");
        assert!(matches!(
            g.add(ENode::new(T::F, 8, vec![a, a])),
            Err(EGraphError::Arity { .. })
        ));
        assert!(matches!(g.merge(a, bogus), Err(EGraphError::UnknownClass(_))));
        assert!(matches!(g.enodes_of(bogus), Err(EGraphError::UnknownClass(_))));
    }

    #[test]
    fn bond_union_does_not_trigger_congruence() {
        let mut g = EGraph::new();
        let a = leaf(&mut g, "a");
        let b = leaf(&mut g, "b");
        let fa = app(&mut g, T::F, a);
        let fb = app(&mut g, T::F, b);
        g.bond_union(&[a, b]);
        assert!(g.is_clean());
        assert_eq!(g.find(a).unwrap(), g.find(b).unwrap());
        assert_ne!(g.find_value(a).unwrap(), g.find_value(b).unwrap());
        assert_eq!(g.rebuild(), 0);
        assert_ne!(g.find(fa).unwrap(), g.find(fb).unwrap());
        assert_eq!(g.enodes_of(a).unwrap().len(), 2);
    }
}
