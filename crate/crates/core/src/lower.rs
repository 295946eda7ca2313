//! Circuit to e-graph conversion.

use crate::circuit::{Circuit, CircuitEGraph, CircuitError, NodeKind, Symbol};
use crate::egraph::{EClassId, ENode, Width};

/// Interface of a lowered circuit: its inputs, and the class of every output.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Roots {
    pub inputs: Vec<(String, Width)>,
    pub outputs: Vec<(String, EClassId)>,
}

/// Adds every live node of `c` to `g`. Use-sites are inlined as their shared
/// body applied to the bound operands. Outputs are registered as roots.
pub fn lower(c: &Circuit, g: &mut CircuitEGraph) -> Result<Roots, CircuitError> {
    let c = c.prune();
    let mut ids: Vec<Option<EClassId>> = vec![None; c.nodes.len()];
    let class = |ids: &[Option<EClassId>], n: usize| ids[n].expect("operands precede users");
    for (i, node) in c.nodes.iter().enumerate() {
        let enode = match &node.kind {
            NodeKind::Input => ENode::leaf(Symbol::input(&node.name), node.width),
            NodeKind::Const(v) => ENode::leaf(Symbol::Const(*v), node.width),
            NodeKind::Advice(a) => return Err(CircuitError::UnboundAdvice(a.clone())),
            NodeKind::Op(op, args) => ENode::new(
                Symbol::Op(*op),
                node.width,
                args.iter().map(|a| class(&ids, a.0)).collect(),
            ),
            NodeKind::Shared { .. } => continue,
            NodeKind::Use { shared, bindings } => {
                let NodeKind::Shared { op, advice } = &c.nodes[shared.0].kind else {
                    unreachable!("validated use-site");
                };
                let args = advice
                    .iter()
                    .map(|(a, _)| {
                        let (_, arg) = bindings.iter().find(|(b, _)| b == a).expect("validated binding");
                        class(&ids, arg.0)
                    })
                    .collect();
                ENode::new(Symbol::Op(*op), node.width, args)
            }
        };
        let id = g.add(enode).map_err(|e| CircuitError::Width(e.to_string()))?;
        ids[i] = Some(id);
    }
    g.rebuild();
    let mut roots = Roots {
        inputs: c.input_signature(),
        outputs: Vec::new(),
    };
    for (name, n) in &c.outputs {
        let id = class(&ids, n.0);
        g.set_root(name.clone(), id).expect("fresh class");
        roots.outputs.push((name.clone(), id));
    }
    Ok(roots)
}

/// Lowers `c` into a fresh e-graph.
pub fn to_egraph(c: &Circuit) -> Result<(CircuitEGraph, Roots), CircuitError> {
    let mut g = CircuitEGraph::new();
    let roots = lower(c, &mut g)?;
    Ok((g, roots))
}
