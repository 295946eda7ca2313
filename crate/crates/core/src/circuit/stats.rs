use std::collections::BTreeMap;

use serde::Serialize;

use super::{Circuit, NodeKind};

/// Node counts keyed by `kind:width`. Shared units count under their body
/// operation (a shared `mul:64` is a multiplier); use-sites count as `use`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct OpStats {
    pub by_kind: BTreeMap<String, usize>,
    pub shared_units: usize,
    pub use_sites: usize,
    pub total: usize,
}

impl OpStats {
    /// Count of `kind` summed over every width.
    pub fn count(&self, kind: &str) -> usize {
        self.by_kind
            .iter()
            .filter(|(k, _)| k.split(':').next() == Some(kind))
            .map(|(_, n)| n)
            .sum()
    }
}

pub fn stats(c: &Circuit) -> OpStats {
    let mut s = OpStats::default();
    for node in &c.nodes {
        let kind = match &node.kind {
            NodeKind::Input => "input",
            NodeKind::Const(_) => "const",
            NodeKind::Advice(_) => "advice",
            NodeKind::Op(op, _) => op.name(),
            NodeKind::Shared { op, .. } => {
                s.shared_units += 1;
                op.name()
            }
            NodeKind::Use { .. } => {
                s.use_sites += 1;
                "use"
            }
        };
        *s.by_kind.entry(format!("{kind}:{}", node.width)).or_default() += 1;
        s.total += 1;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_circuit;

    #[test]
    fn inputs_only_has_no_ops() {
        let c = parse_circuit("(circuit (input x :8) (input y :8))").unwrap();
        let s = stats(&c);
        assert_eq!(s.total, 2);
        for op in ["add", "mul", "sub", "and", "or", "xor", "zext", "trunc"] {
            assert_eq!(s.count(op), 0);
        }
    }

    #[test]
    fn shared_units_count_as_their_operation() {
        let c = parse_circuit(
            "(circuit (input x :64) (shared alu (mul:64 (advice a0 :64) (advice a1 :64))) \
             (use u alu (bind a0 x) (bind a1 x)) (use v alu (bind a0 u) (bind a1 x)) (output o v))",
        )
        .unwrap();
        let s = stats(&c);
        assert_eq!((s.count("mul"), s.shared_units, s.use_sites), (1, 1, 2));
        assert_eq!(s.by_kind.values().sum::<usize>(), s.total);
    }
}
