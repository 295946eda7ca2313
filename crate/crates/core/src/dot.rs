//! Graphviz output. Both writers are deterministic: the same graph always
//! yields the same bytes.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::circuit::{Circuit, CircuitEGraph, NodeKind, Symbol};
use crate::egraph::{EClassId, ENode};

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn enode_label(n: &ENode<Symbol>) -> (String, &'static str) {
    match &n.op {
        Symbol::Input(name) => (format!("{name}:{}", n.width), "box"),
        Symbol::Const(v) => (format!("{v}:{}", n.width), "box"),
        Symbol::Advice(_) => (format!("advice:{}", n.width), "diamond"),
        Symbol::Op(op) => (format!("{op}:{}", n.width), "box"),
    }
}

/// E-graph as nested clusters: one per value class, inside one per bond
/// group when a group spans several value classes. B-nodes are drawn as
/// filled black circles with dashed edges to their bonded operands.
pub fn egraph_to_dot(g: &CircuitEGraph) -> String {
    let mut out = String::from("digraph egraph {\n  compound=true;\n  node [fontname=\"monospace\"];\n");
    let mut groups: BTreeMap<EClassId, Vec<EClassId>> = BTreeMap::new();
    for class in g.classes() {
        groups.entry(g.find(class.id).unwrap()).or_default().push(class.id);
    }
    let anchor = |id: EClassId| -> String {
        let v = g.find_value(id).unwrap();
        let c = g.class(v).unwrap();
        if c.nodes.is_empty() {
            format!("b{}", c.bnodes[0].0)
        } else {
            format!("n{}_0", v.0)
        }
    };
    let mut edges = String::new();
    for (root, members) in &groups {
        let wrap = members.len() > 1;
        if wrap {
            let _ = writeln!(
                out,
                "  subgraph cluster_bond{} {{\n    style=dashed;\n    label=\"bond {root}\";",
                root.0
            );
        }
        for v in members {
            let class = g.class(*v).unwrap();
            let _ = writeln!(
                out,
                "  subgraph cluster_{} {{\n    style=rounded;\n    label=\"{v}\";",
                v.0
            );
            for (i, n) in class.nodes.iter().enumerate() {
                let (label, shape) = enode_label(n);
                let _ = writeln!(out, "    n{}_{i} [label=\"{}\" shape={shape}];", v.0, escape(&label));
                for c in &n.children {
                    let cv = g.find_value(*c).unwrap();
                    let _ = writeln!(edges, "  n{}_{i} -> {} [lhead=cluster_{}];", v.0, anchor(cv), cv.0);
                }
            }
            for b in &class.bnodes {
                let _ = writeln!(
                    out,
                    "    b{} [shape=circle style=filled fillcolor=black label=\"\" width=0.2];",
                    b.0
                );
                for (_, children) in g.bnode(*b).bond_map.entries() {
                    for c in children {
                        let cv = g.find_value(*c).unwrap();
                        let _ = writeln!(
                            edges,
                            "  b{} -> {} [lhead=cluster_{} style=dashed];",
                            b.0,
                            anchor(cv),
                            cv.0
                        );
                    }
                }
            }
            out.push_str("  }\n");
        }
        if wrap {
            out.push_str("  }\n");
        }
    }
    out.push_str(&edges);
    for (name, id) in g.roots() {
        let v = g.find_value(*id).unwrap();
        let _ = writeln!(
            out,
            "  \"out_{}\" [label=\"{}\" shape=house];",
            escape(name),
            escape(name)
        );
        let _ = writeln!(
            out,
            "  {} -> \"out_{}\" [ltail=cluster_{}];",
            anchor(v),
            escape(name),
            v.0
        );
    }
    out.push_str("}\n");
    out
}

/// Circuit as a data-flow graph, operands pointing at their users.
pub fn circuit_to_dot(c: &Circuit) -> String {
    let mut out = String::from("digraph circuit {\n  node [fontname=\"monospace\"];\n");
    let mut edges = String::new();
    for (i, node) in c.nodes.iter().enumerate() {
        let name = escape(&node.name);
        let w = node.width;
        let (label, shape) = match &node.kind {
            NodeKind::Input => (format!("{name}:{w}"), "invhouse"),
            NodeKind::Const(v) => (format!("{v}:{w}"), "plaintext"),
            NodeKind::Advice(a) => (format!("advice {}:{w}", escape(a)), "diamond"),
            NodeKind::Op(op, _) => (format!("{op}:{w}"), "box"),
            NodeKind::Shared { op, .. } => (format!("{name}: {op}:{w}"), "box3d"),
            NodeKind::Use { .. } => (format!("use:{w}"), "ellipse"),
        };
        let _ = writeln!(out, "  n{i} [label=\"{label}\" shape={shape}];");
        match &node.kind {
            NodeKind::Op(_, args) => {
                for a in args {
                    let _ = writeln!(edges, "  n{} -> n{i};", a.0);
                }
            }
            NodeKind::Use { shared, bindings } => {
                let _ = writeln!(edges, "  n{} -> n{i} [style=dashed];", shared.0);
                for (adv, a) in bindings {
                    let _ = writeln!(edges, "  n{} -> n{i} [label=\"{}\"];", a.0, escape(adv));
                }
            }
            _ => {}
        }
    }
    out.push_str(&edges);
    for (name, n) in &c.outputs {
        let name = escape(name);
        let _ = writeln!(out, "  \"out_{name}\" [label=\"{name}\" shape=house];");
        let _ = writeln!(out, "  n{} -> \"out_{name}\";", n.0);
    }
    out.push_str("}\n");
    out
}
