use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{FromPrimitive, Num};

use crate::circuit::{Circuit, NodeKind, Op};
use crate::egraph::{Width, MAX_WIDTH};

/// Scalar a cost model is expressed in.
pub trait Cost: Num + Clone + PartialOrd + FromPrimitive + fmt::Debug + fmt::Display + FromStr {}

impl<T> Cost for T where T: Num + Clone + PartialOrd + FromPrimitive + fmt::Debug + fmt::Display + FromStr {}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CostError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("negative cost {0}")]
    Negative(String),
}

const LEAF_KINDS: [&str; 3] = ["const", "input", "advice"];

/// Per-`(kind, width)` node costs plus a per-binding routing cost for
/// use-sites. Unlisted entries use the built-in defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct CostModel<C> {
    overrides: BTreeMap<(String, Width), C>,
    use_route: C,
}

impl<C: Cost> Default for CostModel<C> {
    fn default() -> Self {
        CostModel {
            overrides: BTreeMap::new(),
            use_route: C::one(),
        }
    }
}

fn default_cost<C: Cost>(kind: &str, width: Width) -> C {
    let w = u64::from(width);
    let n = match Op::from_name(kind) {
        Some(Op::Mul) => w,
        Some(Op::Add | Op::Sub) => w.div_ceil(8),
        Some(Op::And | Op::Or | Op::Xor) => 1,
        _ => 0,
    };
    C::from_u64(n).expect("small integers are representable")
}

impl<C: Cost> CostModel<C> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Cost of one node of `kind` (an op name, `const`, `input` or `advice`).
    pub fn node_cost(&self, kind: &str, width: Width) -> C {
        match self.overrides.get(&(kind.to_string(), width)) {
            Some(c) => c.clone(),
            None => default_cost(kind, width),
        }
    }

    pub fn use_route(&self) -> C {
        self.use_route.clone()
    }

    pub fn set(&mut self, kind: &str, width: Width, cost: C) -> Result<(), CostError> {
        if cost < C::zero() {
            return Err(CostError::Negative(cost.to_string()));
        }
        self.overrides.insert((kind.to_string(), width), cost);
        Ok(())
    }

    pub fn set_use_route(&mut self, cost: C) -> Result<(), CostError> {
        if cost < C::zero() {
            return Err(CostError::Negative(cost.to_string()));
        }
        self.use_route = cost;
        Ok(())
    }

    /// Parses `op:width = cost` and `use_route = cost` lines over the
    /// defaults. `;` and `#` start comments.
    pub fn parse(text: &str) -> Result<Self, CostError> {
        let mut m = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split([';', '#']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| CostError::Syntax { line: i + 1, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = cost`: `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let cost: C = value.parse().map_err(|_| err(format!("bad cost `{value}`")))?;
            if key == "use_route" {
                m.set_use_route(cost)?;
                continue;
            }
            let (kind, width) = key
                .split_once(':')
                .ok_or_else(|| err(format!("expected `op:width`: `{key}`")))?;
            if Op::from_name(kind).is_none() && !LEAF_KINDS.contains(&kind) {
                return Err(err(format!("unknown operator `{kind}`")));
            }
            let width: Width = match width.parse() {
                Ok(w) if (1..=MAX_WIDTH).contains(&w) => w,
                _ => return Err(err(format!("bad width `{width}`"))),
            };
            m.set(kind, width, cost)?;
        }
        Ok(m)
    }
}

/// Cost of a circuit as built: every node once, shared bodies once, and each
/// use-site charged the routing cost per binding.
pub fn circuit_cost<C: Cost>(c: &Circuit, m: &CostModel<C>) -> C {
    let mut total = C::zero();
    for node in &c.nodes {
        let cost = match &node.kind {
            NodeKind::Input => m.node_cost("input", node.width),
            NodeKind::Const(_) => m.node_cost("const", node.width),
            NodeKind::Advice(_) => m.node_cost("advice", node.width),
            NodeKind::Op(op, _) | NodeKind::Shared { op, .. } => m.node_cost(op.name(), node.width),
            NodeKind::Use { bindings, .. } => {
                m.use_route() * C::from_usize(bindings.len()).expect("binding count fits")
            }
        };
        total = total + cost;
    }
    total
}
