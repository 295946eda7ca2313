//! Netlist syntax:
//!
//! ```text
//! (circuit
//!   (input NAME :W)*
//!   (let NAME EXPR)*
//!   (shared NAME (OP:W (advice NAME :W)+))*
//!   (use NAME SHARED (bind ADVICE EXPR)+)*
//!   (output NAME EXPR)+)
//! EXPR := NAME | (const:W INT) | (OP:W EXPR...) | (advice NAME :W)
//! ```
//!
//! Definitions may appear in any order; references are resolved by name and
//! the resulting node list is topologically sorted, preferring text order.

use std::collections::{HashMap, HashSet};

use super::{Circuit, CircuitBuilder, CircuitError, NodeId, NodeKind, Op};
use crate::egraph::Width;
use crate::sexpr::{read_all, Pos, Sexp};

fn syntax(pos: Pos, msg: impl Into<String>) -> CircuitError {
    CircuitError::Syntax(msg.into()).at(pos)
}

pub(crate) fn parse_width(text: &str, pos: Pos) -> Result<Width, CircuitError> {
    let w: u32 = text
        .parse()
        .map_err(|_| syntax(pos, format!("malformed width `{text}`")))?;
    if !(1..=64).contains(&w) {
        return Err(CircuitError::Width(format!("width {w} outside 1..=64")).at(pos));
    }
    Ok(w as Width)
}

/// Splits `head:W` into its parts.
fn split_typed(s: &Sexp) -> Result<(&str, Width), CircuitError> {
    let atom = s.as_atom().ok_or_else(|| syntax(s.pos(), "expected `OP:WIDTH`"))?;
    let (head, w) = atom
        .split_once(':')
        .ok_or_else(|| syntax(s.pos(), format!("expected `OP:WIDTH`, found `{atom}`")))?;
    Ok((head, parse_width(w, s.pos())?))
}

/// `:W` annotation.
fn colon_width(s: &Sexp) -> Result<Width, CircuitError> {
    match s.as_atom().and_then(|a| a.strip_prefix(':')) {
        Some(w) => parse_width(w, s.pos()),
        None => Err(syntax(s.pos(), "expected `:WIDTH`")),
    }
}

fn name_atom(s: &Sexp) -> Result<&str, CircuitError> {
    match s.as_atom() {
        Some(a) if !a.is_empty() && !a.contains(':') && a.parse::<u64>().is_err() => Ok(a),
        _ => Err(syntax(s.pos(), format!("expected a name, found `{s}`"))),
    }
}

enum Item<'a> {
    Input {
        name: &'a str,
        width: Width,
    },
    Let {
        name: &'a str,
        expr: &'a Sexp,
    },
    Shared {
        name: &'a str,
        body: &'a Sexp,
    },
    Use {
        name: &'a str,
        shared: &'a Sexp,
        binds: &'a [Sexp],
    },
    Output {
        name: &'a str,
        expr: &'a Sexp,
    },
}

struct Resolver<'a> {
    items: Vec<(Pos, Item<'a>)>,
    by_name: HashMap<&'a str, usize>,
    defined: HashMap<&'a str, NodeId>,
    visiting: HashSet<&'a str>,
    b: CircuitBuilder,
}

impl<'a> Resolver<'a> {
    fn reference(&mut self, s: &'a Sexp) -> Result<NodeId, CircuitError> {
        let name = name_atom(s)?;
        self.define(name).map_err(|e| e.at(s.pos()))
    }

    fn define(&mut self, name: &'a str) -> Result<NodeId, CircuitError> {
        if let Some(&id) = self.defined.get(name) {
            return Ok(id);
        }
        let Some(&idx) = self.by_name.get(name) else {
            return Err(CircuitError::Name(format!("undefined name `{name}`")));
        };
        if !self.visiting.insert(name) {
            return Err(CircuitError::Cycle(name.to_string()));
        }
        let pos = self.items[idx].0;
        let id = match self.items[idx].1 {
            Item::Input { name, width } => self.b.input(name, width),
            Item::Let { name, expr } => self.expr(expr, Some(name)),
            Item::Shared { name, body } => self.shared(name, body),
            Item::Use { name, shared, binds } => self.use_site(name, shared, binds),
            Item::Output { .. } => unreachable!("outputs are not named definitions"),
        }
        .map_err(|e| e.at(pos))?;
        self.visiting.remove(name);
        self.defined.insert(name, id);
        Ok(id)
    }

    fn expr(&mut self, s: &'a Sexp, name: Option<&'a str>) -> Result<NodeId, CircuitError> {
        let Some(items) = s.as_list() else {
            return self.reference(s);
        };
        let head = items.first().ok_or_else(|| syntax(s.pos(), "empty expression"))?;
        if head.as_atom() == Some("advice") {
            let [_, adv, w] = items else {
                return Err(syntax(s.pos(), "expected `(advice NAME :W)`"));
            };
            let adv = name_atom(adv)?;
            let width = colon_width(w)?;
            let kind = NodeKind::Advice(adv.to_string());
            return self.push(name, width, kind, s.pos());
        }
        let (op, width) = split_typed(head)?;
        if op == "const" {
            let [_, v] = items else {
                return Err(syntax(s.pos(), "expected `(const:W INT)`"));
            };
            let text = v.as_atom().unwrap_or_default();
            let value: u64 = text
                .parse()
                .map_err(|_| CircuitError::Value(format!("bad constant `{v}`")).at(v.pos()))?;
            return self.push(name, width, NodeKind::Const(value), s.pos());
        }
        let op = Op::from_name(op).ok_or_else(|| syntax(head.pos(), format!("unknown operator `{op}`")))?;
        if items.len() - 1 != op.arity() {
            return Err(syntax(s.pos(), format!("`{op}` takes {} operands", op.arity())));
        }
        let args = items[1..]
            .iter()
            .map(|a| self.expr(a, None))
            .collect::<Result<Vec<_>, _>>()?;
        self.push(name, width, NodeKind::Op(op, args), s.pos())
    }

    fn push(&mut self, name: Option<&str>, width: Width, kind: NodeKind, pos: Pos) -> Result<NodeId, CircuitError> {
        match name {
            Some(n) => self.b.named(n, width, kind),
            None => match kind {
                NodeKind::Const(v) => self.b.constant(width, v),
                NodeKind::Op(op, args) => self.b.op(op, width, &args),
                NodeKind::Advice(a) => self.b.advice(&a, width),
                _ => unreachable!("only expressions are anonymous"),
            },
        }
        .map_err(|e| e.at(pos))
    }

    fn shared(&mut self, name: &'a str, body: &'a Sexp) -> Result<NodeId, CircuitError> {
        let items = body
            .as_list()
            .filter(|l| !l.is_empty())
            .ok_or_else(|| syntax(body.pos(), "expected `(OP:W (advice NAME :W)+)`"))?;
        let (op, width) = split_typed(&items[0])?;
        let op = Op::from_name(op).ok_or_else(|| syntax(items[0].pos(), format!("unknown operator `{op}`")))?;
        let mut advice = Vec::new();
        for leaf in &items[1..] {
            match leaf.as_list() {
                Some([h, n, w]) if h.as_atom() == Some("advice") => {
                    advice.push((name_atom(n)?.to_string(), colon_width(w)?));
                }
                _ => return Err(syntax(leaf.pos(), "expected `(advice NAME :W)`")),
            }
        }
        self.b
            .named(name, width, NodeKind::Shared { op, advice })
            .map_err(|e| e.at(body.pos()))
    }

    fn use_site(&mut self, name: &'a str, shared: &'a Sexp, binds: &'a [Sexp]) -> Result<NodeId, CircuitError> {
        let target = self.reference(shared)?;
        let mut bindings = Vec::new();
        for bind in binds {
            match bind.as_list() {
                Some([h, adv, e]) if h.as_atom() == Some("bind") => {
                    let adv = name_atom(adv)?.to_string();
                    bindings.push((adv, self.expr(e, None)?));
                }
                _ => return Err(syntax(bind.pos(), "expected `(bind ADVICE EXPR)`")),
            }
        }
        let width = self.b.width(target);
        self.b.named(
            name,
            width,
            NodeKind::Use {
                shared: target,
                bindings,
            },
        )
    }
}

/// Parses and validates a netlist.
pub fn parse_circuit(text: &str) -> Result<Circuit, CircuitError> {
    let top = read_all(text).map_err(|e| CircuitError::Syntax(e.msg).at(e.pos))?;
    let [root] = top.as_slice() else {
        return Err(CircuitError::Syntax(format!(
            "expected one `(circuit ...)` form, found {}",
            top.len()
        )));
    };
    if root.head() != Some("circuit") {
        return Err(syntax(root.pos(), "expected `(circuit ...)`"));
    }
    let forms = &root.as_list().expect("head implies list")[1..];

    let mut items = Vec::new();
    for form in forms {
        let pos = form.pos();
        let list = form
            .as_list()
            .ok_or_else(|| syntax(pos, format!("unexpected `{form}`")))?;
        let item = match (form.head(), list) {
            (Some("input"), [_, n, w]) => Item::Input {
                name: name_atom(n)?,
                width: colon_width(w)?,
            },
            (Some("let"), [_, n, e]) => Item::Let {
                name: name_atom(n)?,
                expr: e,
            },
            (Some("shared"), [_, n, body]) => Item::Shared {
                name: name_atom(n)?,
                body,
            },
            (Some("use"), [_, n, s, binds @ ..]) if !binds.is_empty() => Item::Use {
                name: name_atom(n)?,
                shared: s,
                binds,
            },
            (Some("output"), [_, n, e]) => Item::Output {
                name: name_atom(n)?,
                expr: e,
            },
            _ => return Err(syntax(pos, format!("malformed form `{form}`"))),
        };
        items.push((pos, item));
    }

    let mut by_name = HashMap::new();
    for (i, (pos, item)) in items.iter().enumerate() {
        let name = match item {
            Item::Input { name, .. } | Item::Let { name, .. } | Item::Shared { name, .. } | Item::Use { name, .. } => {
                *name
            }
            Item::Output { .. } => continue,
        };
        if by_name.insert(name, i).is_some() {
            return Err(CircuitError::Name(format!("duplicate name `{name}`")).at(*pos));
        }
    }
    let mut b = CircuitBuilder::new();
    b.reserve(by_name.keys().copied());
    let mut r = Resolver {
        items,
        by_name,
        defined: HashMap::new(),
        visiting: HashSet::new(),
        b,
    };

    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for i in 0..r.items.len() {
        let pos = r.items[i].0;
        match r.items[i].1 {
            Item::Input { name, .. } => inputs.push(r.define(name)?),
            Item::Let { name, .. } | Item::Shared { name, .. } | Item::Use { name, .. } => {
                r.define(name)?;
            }
            Item::Output { name, expr } => {
                let id = r.expr(expr, None).map_err(|e| e.at(pos))?;
                outputs.push((name, id));
            }
        }
    }
    for (name, id) in outputs {
        r.b.output(name, id);
    }
    r.b.set_inputs(inputs);
    r.b.finish()
}

/// Canonical text form. Short circuits print on one line; longer ones put
/// each definition on its own line.
pub fn serialize_circuit(c: &Circuit) -> String {
    let name = |id: &NodeId| c.node(*id).name.as_str();
    let mut forms = Vec::with_capacity(c.nodes.len() + c.outputs.len());
    for node in &c.nodes {
        let (n, w) = (&node.name, node.width);
        forms.push(match &node.kind {
            NodeKind::Input => format!("(input {n} :{w})"),
            NodeKind::Const(v) => format!("(let {n} (const:{w} {v}))"),
            NodeKind::Advice(a) => format!("(let {n} (advice {a} :{w}))"),
            NodeKind::Op(op, args) => {
                let args: Vec<&str> = args.iter().map(name).collect();
                format!("(let {n} ({op}:{w} {}))", args.join(" "))
            }
            NodeKind::Shared { op, advice } => {
                let leaves: Vec<String> = advice.iter().map(|(a, aw)| format!("(advice {a} :{aw})")).collect();
                format!("(shared {n} ({op}:{w} {}))", leaves.join(" "))
            }
            NodeKind::Use { shared, bindings } => {
                let binds: Vec<String> = bindings
                    .iter()
                    .map(|(a, arg)| format!("(bind {a} {})", name(arg)))
                    .collect();
                format!("(use {n} {} {})", name(shared), binds.join(" "))
            }
        });
    }
    for (o, id) in &c.outputs {
        forms.push(format!("(output {o} {})", name(id)));
    }
    let one_line = format!("(circuit {})", forms.join(" "));
    if one_line.len() <= 80 {
        one_line
    } else {
        format!("(circuit\n  {})", forms.join("\n  "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_circuit_round_trips_on_one_line() {
        let text = "(circuit (input x :8) (output o x))";
        let c = parse_circuit(text).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(serialize_circuit(&c), text);
    }

    #[test]
    fn nested_expressions_get_generated_names() {
        let c = parse_circuit("(circuit (input x :8) (let _0 (const:8 1)) (output o (add:8 x (const:8 2))))").unwrap();
        let names: Vec<&str> = c.nodes.iter().map(|n| n.name.as_str()).collect();
        assert_eq!(names, ["x", "_0", "_1", "_2"]);
        assert_eq!(parse_circuit(&serialize_circuit(&c)).unwrap(), c);
    }

    #[test]
    fn forward_references_are_sorted() {
        let c = parse_circuit("(circuit (let b (add:4 a a)) (input a :4) (output o b))").unwrap();
        assert_eq!(c.node(NodeId(0)).name, "a");
        assert_eq!(c.node(NodeId(1)).name, "b");
    }

    #[test]
    fn structural_errors() {
        let undefined = parse_circuit("(circuit (input x :8) (output o y))").unwrap_err();
        assert!(matches!(undefined.kind(), CircuitError::Name(_)));
        let cyc = parse_circuit("(circuit (let a (add:8 b b)) (let b (add:8 a a)) (output o a))").unwrap_err();
        assert!(matches!(cyc.kind(), CircuitError::Cycle(_)));
        let width = parse_circuit("(circuit (input x :8) (output o (add:16 x x)))").unwrap_err();
        assert!(matches!(width.kind(), CircuitError::Width(_)));
        let value = parse_circuit("(circuit (output o (const:4 16)))").unwrap_err();
        assert!(matches!(value.kind(), CircuitError::Value(_)));
        let bad = parse_circuit("(circuit (input x :8) (output o (frob:8 x x)))").unwrap_err();
        assert!(matches!(bad.kind(), CircuitError::Syntax(_)));
        assert!(bad.to_string().starts_with("1:"), "{bad}");
    }

    #[test]
    fn shared_and_use_forms() {
        let text = "(circuit (input x :64) (input y :64) \
                    (shared alu (mul:64 (advice a0 :64) (advice a1 :64))) \
                    (use u alu (bind a0 x) (bind a1 y)) (output o u))";
        let c = parse_circuit(text).unwrap();
        let out = serialize_circuit(&c);
        assert!(out.contains("(shared alu (mul:64 (advice a0 :64) (advice a1 :64)))"));
        assert!(out.contains("(use u alu (bind a0 x) (bind a1 y))"));
        assert_eq!(parse_circuit(&out).unwrap(), c);

        let missing = "(circuit (input x :64) (shared alu (mul:64 (advice a0 :64) (advice a1 :64))) \
                       (use u alu (bind a0 x)) (output o u))";
        assert!(matches!(
            parse_circuit(missing).unwrap_err().kind(),
            CircuitError::Name(_)
        ));
    }
}
