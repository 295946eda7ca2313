//! Combinational circuits over unsigned bit-vectors.
//!
//! A [`Circuit`] is a topologically ordered list of named nodes. Besides
//! plain operations it can hold a shared unit ([`NodeKind::Shared`]): a
//! single operation over advice leaves, invoked by [`NodeKind::Use`] nodes
//! that bind each advice leaf to an operand.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use crate::bond::AdviceLanguage;
use crate::egraph::{EGraph, Operator, Width, MAX_WIDTH};
use crate::sexpr::Pos;

mod eval;
mod parse;
mod stats;

pub use eval::{check_equivalence, CheckMode, Counterexample, EquivReport, EXHAUSTIVE_MAX_BITS};
pub use parse::{parse_circuit, serialize_circuit};
pub use stats::{stats, OpStats};

/// Primitive bit-vector operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Op {
    Add,
    Sub,
    Mul,
    And,
    Or,
    Xor,
    Zext,
    Trunc,
}

pub fn mask(width: Width) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

impl Op {
    pub const ALL: [Op; 8] = [Op::Add, Op::Sub, Op::Mul, Op::And, Op::Or, Op::Xor, Op::Zext, Op::Trunc];

    pub fn name(self) -> &'static str {
        match self {
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::And => "and",
            Op::Or => "or",
            Op::Xor => "xor",
            Op::Zext => "zext",
            Op::Trunc => "trunc",
        }
    }

    pub fn from_name(s: &str) -> Option<Op> {
        Op::ALL.into_iter().find(|op| op.name() == s)
    }

    pub fn arity(self) -> usize {
        match self {
            Op::Zext | Op::Trunc => 1,
            _ => 2,
        }
    }

    pub fn is_bitwise(self) -> bool {
        matches!(self, Op::And | Op::Or | Op::Xor)
    }

    pub fn check_widths(self, width: Width, children: &[Width]) -> bool {
        match (self, children) {
            (Op::Zext, [c]) => *c <= width,
            (Op::Trunc, [c]) => *c >= width,
            (Op::Zext | Op::Trunc, _) => false,
            (_, [a, b]) => *a == width && *b == width,
            _ => false,
        }
    }

    /// Result of applying the operation at `width`. Operands must already be
    /// in range for their own widths.
    pub fn apply(self, width: Width, args: &[u64]) -> u64 {
        let m = mask(width);
        match self {
            Op::Add => args[0].wrapping_add(args[1]) & m,
            Op::Sub => args[0].wrapping_sub(args[1]) & m,
            Op::Mul => args[0].wrapping_mul(args[1]) & m,
            Op::And => args[0] & args[1],
            Op::Or => args[0] | args[1],
            Op::Xor => args[0] ^ args[1],
            Op::Zext => args[0],
            Op::Trunc => args[0] & m,
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Operator alphabet of circuit e-graphs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Input(Arc<str>),
    Const(u64),
    Advice(u32),
    Op(Op),
}

impl Symbol {
    pub fn input(name: &str) -> Self {
        Symbol::Input(Arc::from(name))
    }

    /// Operator name used for cost lookups and tie-breaking.
    pub fn kind_name(&self) -> &'static str {
        match self {
            Symbol::Input(_) => "input",
            Symbol::Const(_) => "const",
            Symbol::Advice(_) => "advice",
            Symbol::Op(op) => op.name(),
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Input(name) => write!(f, "{name}"),
            Symbol::Const(v) => write!(f, "{v}"),
            Symbol::Advice(i) => write!(f, "advice#{i}"),
            Symbol::Op(op) => write!(f, "{op}"),
        }
    }
}

impl Operator for Symbol {
    fn arity(&self) -> usize {
        match self {
            Symbol::Op(op) => op.arity(),
            _ => 0,
        }
    }

    fn check_widths(&self, width: Width, child_widths: &[Width]) -> bool {
        match self {
            Symbol::Op(op) => op.check_widths(width, child_widths),
            Symbol::Const(v) => *v <= mask(width),
            _ => true,
        }
    }
}

impl AdviceLanguage for Symbol {
    fn advice(index: u32) -> Self {
        Symbol::Advice(index)
    }

    fn is_advice(&self) -> bool {
        matches!(self, Symbol::Advice(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Input,
    Const(u64),
    /// Free advice value; only meaningful inside a shared unit.
    Advice(String),
    Op(Op, Vec<NodeId>),
    /// Shared unit: `op` applied to the listed advice leaves.
    Shared {
        op: Op,
        advice: Vec<(String, Width)>,
    },
    /// Invocation of a shared unit with each advice leaf bound to an operand.
    Use {
        shared: NodeId,
        bindings: Vec<(String, NodeId)>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitNode {
    pub name: String,
    pub width: Width,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Circuit {
    pub nodes: Vec<CircuitNode>,
    pub inputs: Vec<NodeId>,
    pub outputs: Vec<(String, NodeId)>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CircuitError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("cycle through `{0}`")]
    Cycle(String),
    #[error("width error: {0}")]
    Width(String),
    #[error("name error: {0}")]
    Name(String),
    #[error("value error: {0}")]
    Value(String),
    #[error("advice `{0}` is not bound by any use-site")]
    UnboundAdvice(String),
    #[error("signature mismatch: {0}")]
    Signature(String),
    #[error("exhaustive check over {0} input bits exceeds the {max}-bit limit", max = EXHAUSTIVE_MAX_BITS)]
    TooLarge(u32),
    #[error("{0}: {1}")]
    At(Pos, Box<CircuitError>),
}

impl CircuitError {
    /// The error with any position annotation stripped.
    pub fn kind(&self) -> &CircuitError {
        match self {
            CircuitError::At(_, inner) => inner.kind(),
            other => other,
        }
    }

    pub fn at(self, pos: Pos) -> Self {
        match self {
            e @ CircuitError::At(..) => e,
            e => CircuitError::At(pos, Box::new(e)),
        }
    }
}

fn check_width(width: Width) -> Result<(), CircuitError> {
    if width == 0 || width > MAX_WIDTH {
        return Err(CircuitError::Width(format!("width {width} outside 1..=64")));
    }
    Ok(())
}

impl Circuit {
    pub fn node(&self, id: NodeId) -> &CircuitNode {
        &self.nodes[id.0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn find(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.name == name).map(NodeId)
    }

    /// `(name, width)` of every input, in declaration order.
    pub fn input_signature(&self) -> Vec<(String, Width)> {
        self.inputs
            .iter()
            .map(|&i| (self.node(i).name.clone(), self.node(i).width))
            .collect()
    }

    pub fn output_signature(&self) -> Vec<(String, Width)> {
        self.outputs
            .iter()
            .map(|(name, id)| (name.clone(), self.node(*id).width))
            .collect()
    }

    /// Operands a node reads, including the shared unit a use-site invokes.
    pub fn operands(&self, id: NodeId) -> Vec<NodeId> {
        match &self.node(id).kind {
            NodeKind::Op(_, args) => args.clone(),
            NodeKind::Use { shared, bindings } => std::iter::once(*shared)
                .chain(bindings.iter().map(|(_, n)| *n))
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Checks every structural invariant: topological order, unique names,
    /// widths, constant ranges and use-site bindings.
    pub fn validate(&self) -> Result<(), CircuitError> {
        let mut names = HashSet::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if !names.insert(node.name.as_str()) {
                return Err(CircuitError::Name(format!("duplicate name `{}`", node.name)));
            }
            check_width(node.width)?;
            for op in self.operands(NodeId(i)) {
                if op.0 >= i {
                    return Err(CircuitError::Cycle(node.name.clone()));
                }
            }
            self.check_node(node)?;
        }
        let mut seen_inputs = HashSet::new();
        for &i in &self.inputs {
            if !matches!(self.node(i).kind, NodeKind::Input) || !seen_inputs.insert(i) {
                return Err(CircuitError::Name(format!("bad input entry `{}`", self.node(i).name)));
            }
        }
        let declared = self.nodes.iter().filter(|n| matches!(n.kind, NodeKind::Input)).count();
        if declared != self.inputs.len() {
            return Err(CircuitError::Name("input nodes and input list disagree".into()));
        }
        let mut outs = HashSet::new();
        for (name, id) in &self.outputs {
            if id.0 >= self.nodes.len() {
                return Err(CircuitError::Name(format!("output `{name}` is dangling")));
            }
            if matches!(self.node(*id).kind, NodeKind::Shared { .. }) {
                return Err(CircuitError::Name(format!("output `{name}` names a shared unit")));
            }
            if !outs.insert(name.as_str()) {
                return Err(CircuitError::Name(format!("duplicate output `{name}`")));
            }
        }
        Ok(())
    }

    fn check_node(&self, node: &CircuitNode) -> Result<(), CircuitError> {
        match &node.kind {
            NodeKind::Input | NodeKind::Advice(_) => Ok(()),
            NodeKind::Const(v) => {
                if *v > mask(node.width) {
                    Err(CircuitError::Value(format!(
                        "constant {v} does not fit in {} bits",
                        node.width
                    )))
                } else {
                    Ok(())
                }
            }
            NodeKind::Op(op, args) => {
                let widths: Vec<Width> = args.iter().map(|a| self.node(*a).width).collect();
                if args.len() != op.arity() {
                    return Err(CircuitError::Syntax(format!("`{op}` takes {} operands", op.arity())));
                }
                for a in args {
                    if matches!(self.node(*a).kind, NodeKind::Shared { .. }) {
                        return Err(CircuitError::Name(format!(
                            "`{}` uses shared unit `{}` as a value",
                            node.name,
                            self.node(*a).name
                        )));
                    }
                }
                if !op.check_widths(node.width, &widths) {
                    return Err(CircuitError::Width(format!(
                        "`{}`: {op}:{} over operands of widths {widths:?}",
                        node.name, node.width
                    )));
                }
                Ok(())
            }
            NodeKind::Shared { op, advice } => {
                let widths: Vec<Width> = advice.iter().map(|(_, w)| *w).collect();
                if advice.len() != op.arity() {
                    return Err(CircuitError::Syntax(format!("`{op}` takes {} operands", op.arity())));
                }
                let mut names = HashSet::new();
                for (a, w) in advice {
                    check_width(*w)?;
                    if !names.insert(a) {
                        return Err(CircuitError::Name(format!("duplicate advice `{a}` in `{}`", node.name)));
                    }
                }
                if !op.check_widths(node.width, &widths) {
                    return Err(CircuitError::Width(format!(
                        "shared `{}`: {op}:{} over advice of widths {widths:?}",
                        node.name, node.width
                    )));
                }
                Ok(())
            }
            NodeKind::Use { shared, bindings } => {
                let target = self.node(*shared);
                let NodeKind::Shared { advice, .. } = &target.kind else {
                    return Err(CircuitError::Name(format!("`{}` is not a shared unit", target.name)));
                };
                if target.width != node.width {
                    return Err(CircuitError::Width(format!(
                        "use `{}` has width {} but `{}` produces {}",
                        node.name, node.width, target.name, target.width
                    )));
                }
                let bound: HashMap<&str, NodeId> = bindings.iter().map(|(a, n)| (a.as_str(), *n)).collect();
                if bound.len() != bindings.len() || bound.len() != advice.len() {
                    return Err(CircuitError::Name(format!(
                        "use `{}` must bind each advice of `{}` exactly once",
                        node.name, target.name
                    )));
                }
                for (a, w) in advice {
                    let Some(&arg) = bound.get(a.as_str()) else {
                        return Err(CircuitError::Name(format!("use `{}` does not bind `{a}`", node.name)));
                    };
                    if self.node(arg).width != *w {
                        return Err(CircuitError::Width(format!(
                            "use `{}` binds `{a}`:{w} to `{}`:{}",
                            node.name,
                            self.node(arg).name,
                            self.node(arg).width
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// Copy of the circuit keeping only nodes that inputs or outputs need.
    pub fn prune(&self) -> Circuit {
        let mut live = vec![false; self.nodes.len()];
        for &i in &self.inputs {
            live[i.0] = true;
        }
        let mut stack: Vec<NodeId> = self.outputs.iter().map(|(_, n)| *n).collect();
        while let Some(n) = stack.pop() {
            if !std::mem::replace(&mut live[n.0], true) {
                stack.extend(self.operands(n));
            }
        }
        let mut remap = vec![None; self.nodes.len()];
        let mut out = Circuit::default();
        for (i, node) in self.nodes.iter().enumerate() {
            if !live[i] {
                continue;
            }
            let r = |n: &NodeId| remap[n.0].expect("operands precede users");
            let kind = match &node.kind {
                NodeKind::Op(op, args) => NodeKind::Op(*op, args.iter().map(r).collect()),
                NodeKind::Use { shared, bindings } => NodeKind::Use {
                    shared: r(shared),
                    bindings: bindings.iter().map(|(a, n)| (a.clone(), r(n))).collect(),
                },
                k => k.clone(),
            };
            remap[i] = Some(NodeId(out.nodes.len()));
            out.nodes.push(CircuitNode {
                name: node.name.clone(),
                width: node.width,
                kind,
            });
        }
        out.inputs = self.inputs.iter().map(|i| remap[i.0].unwrap()).collect();
        out.outputs = self
            .outputs
            .iter()
            .map(|(n, id)| (n.clone(), remap[id.0].unwrap()))
            .collect();
        out
    }
}

/// Incremental circuit construction with optional structural sharing.
#[derive(Debug, Default)]
pub struct CircuitBuilder {
    circuit: Circuit,
    names: HashSet<String>,
    reserved: HashSet<String>,
    dedup: HashMap<(Width, NodeKind), NodeId>,
    hashcons: bool,
    counter: usize,
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builder that returns the existing node for a structurally equal
    /// constant, operation or use-site.
    pub fn with_hashcons() -> Self {
        CircuitBuilder {
            hashcons: true,
            ..Self::default()
        }
    }

    /// Keeps generated names clear of names that will be defined later.
    pub fn reserve<'a>(&mut self, names: impl IntoIterator<Item = &'a str>) {
        self.reserved.extend(names.into_iter().map(str::to_string));
    }

    fn fresh_name(&mut self, prefix: &str) -> String {
        loop {
            let name = format!("{prefix}{}", self.counter);
            self.counter += 1;
            if !self.names.contains(&name) && !self.reserved.contains(&name) {
                return name;
            }
        }
    }

    fn push(&mut self, name: Option<&str>, width: Width, kind: NodeKind) -> Result<NodeId, CircuitError> {
        check_width(width)?;
        let dedupable = self.hashcons && !matches!(kind, NodeKind::Input | NodeKind::Shared { .. });
        if dedupable {
            if let Some(&id) = self.dedup.get(&(width, kind.clone())) {
                return Ok(id);
            }
        }
        let name = match name {
            Some(n) => n.to_string(),
            None => self.fresh_name("_"),
        };
        if !self.names.insert(name.clone()) {
            return Err(CircuitError::Name(format!("duplicate name `{name}`")));
        }
        let id = NodeId(self.circuit.nodes.len());
        let node = CircuitNode { name, width, kind };
        self.circuit.check_node(&node)?;
        if dedupable {
            self.dedup.insert((width, node.kind.clone()), id);
        }
        self.circuit.nodes.push(node);
        Ok(id)
    }

    pub fn input(&mut self, name: &str, width: Width) -> Result<NodeId, CircuitError> {
        let id = self.push(Some(name), width, NodeKind::Input)?;
        self.circuit.inputs.push(id);
        Ok(id)
    }

    pub fn constant(&mut self, width: Width, value: u64) -> Result<NodeId, CircuitError> {
        self.push(None, width, NodeKind::Const(value))
    }

    pub fn op(&mut self, op: Op, width: Width, args: &[NodeId]) -> Result<NodeId, CircuitError> {
        self.push(None, width, NodeKind::Op(op, args.to_vec()))
    }

    pub fn named(&mut self, name: &str, width: Width, kind: NodeKind) -> Result<NodeId, CircuitError> {
        if matches!(kind, NodeKind::Input) {
            return self.input(name, width);
        }
        self.push(Some(name), width, kind)
    }

    pub fn advice(&mut self, name: &str, width: Width) -> Result<NodeId, CircuitError> {
        self.push(None, width, NodeKind::Advice(name.to_string()))
    }

    /// Shared unit named `alu<k>` with advice leaves `a0, a1, ...`.
    pub fn shared(&mut self, op: Op, width: Width, leaves: &[Width]) -> Result<NodeId, CircuitError> {
        let name = self.fresh_name("alu");
        let advice = leaves.iter().enumerate().map(|(i, w)| (format!("a{i}"), *w)).collect();
        self.push(Some(&name), width, NodeKind::Shared { op, advice })
    }

    /// Use-site binding the shared unit's advice leaves, in order, to `args`.
    pub fn use_site(&mut self, shared: NodeId, args: &[NodeId]) -> Result<NodeId, CircuitError> {
        let target = &self.circuit.nodes[shared.0];
        let NodeKind::Shared { advice, .. } = &target.kind else {
            return Err(CircuitError::Name(format!("`{}` is not a shared unit", target.name)));
        };
        if advice.len() != args.len() {
            return Err(CircuitError::Name(format!(
                "`{}` takes {} bindings",
                target.name,
                advice.len()
            )));
        }
        let bindings = advice.iter().zip(args).map(|((a, _), n)| (a.clone(), *n)).collect();
        let width = target.width;
        self.push(None, width, NodeKind::Use { shared, bindings })
    }

    pub fn output(&mut self, name: &str, node: NodeId) {
        self.circuit.outputs.push((name.to_string(), node));
    }

    pub fn width(&self, id: NodeId) -> Width {
        self.circuit.nodes[id.0].width
    }

    pub(crate) fn set_inputs(&mut self, inputs: Vec<NodeId>) {
        self.circuit.inputs = inputs;
    }

    pub fn finish(self) -> Result<Circuit, CircuitError> {
        self.circuit.validate()?;
        Ok(self.circuit)
    }
}

/// Values of every input by name.
pub type Assignment = BTreeMap<String, u64>;

/// E-graph over circuit symbols.
pub type CircuitEGraph = EGraph<Symbol>;
