use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{mask, Assignment, Circuit, CircuitError, NodeKind};
use crate::egraph::Width;

/// Largest total input bit count an exhaustive check will enumerate.
pub const EXHAUSTIVE_MAX_BITS: u32 = 24;

impl Circuit {
    /// Evaluates every node given input values in `self.inputs` order.
    fn eval_nodes(&self, inputs: &[u64]) -> Result<Vec<u64>, CircuitError> {
        let mut values = vec![0u64; self.nodes.len()];
        for (&id, &v) in self.inputs.iter().zip(inputs) {
            values[id.0] = v;
        }
        for (i, node) in self.nodes.iter().enumerate() {
            values[i] = match &node.kind {
                NodeKind::Input => values[i],
                NodeKind::Const(v) => *v,
                NodeKind::Advice(a) => return Err(CircuitError::UnboundAdvice(a.clone())),
                NodeKind::Op(op, args) => {
                    let vals: Vec<u64> = args.iter().map(|a| values[a.0]).collect();
                    op.apply(node.width, &vals)
                }
                NodeKind::Shared { .. } => 0,
                NodeKind::Use { shared, bindings } => {
                    let NodeKind::Shared { op, advice } = &self.nodes[shared.0].kind else {
                        unreachable!("validated use-site targets a shared unit");
                    };
                    let vals: Vec<u64> = advice
                        .iter()
                        .map(|(a, _)| {
                            let (_, arg) = bindings.iter().find(|(b, _)| b == a).expect("validated binding");
                            values[arg.0]
                        })
                        .collect();
                    op.apply(node.width, &vals)
                }
            };
        }
        Ok(values)
    }

    /// Evaluates the circuit on named input values.
    pub fn evaluate(&self, inputs: &Assignment) -> Result<BTreeMap<String, u64>, CircuitError> {
        let mut ordered = Vec::with_capacity(self.inputs.len());
        for &id in &self.inputs {
            let node = self.node(id);
            let v = *inputs
                .get(&node.name)
                .ok_or_else(|| CircuitError::Name(format!("missing input `{}`", node.name)))?;
            if v > mask(node.width) {
                return Err(CircuitError::Value(format!(
                    "input `{}` = {v} exceeds {} bits",
                    node.name, node.width
                )));
            }
            ordered.push(v);
        }
        let values = self.eval_nodes(&ordered)?;
        Ok(self
            .outputs
            .iter()
            .map(|(name, id)| (name.clone(), values[id.0]))
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    /// Every input assignment; total input bits must not exceed
    /// [`EXHAUSTIVE_MAX_BITS`].
    Exhaustive,
    /// Seeded uniform samples.
    Random { samples: u64, seed: u64 },
}

impl fmt::Display for CheckMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckMode::Exhaustive => f.write_str("exhaustive"),
            CheckMode::Random { samples, seed } => write!(f, "random samples={samples} seed={seed:#x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub inputs: Assignment,
    pub output: String,
    pub left: u64,
    pub right: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivReport {
    pub equal: bool,
    pub mode: CheckMode,
    pub vectors: u64,
    pub counterexample: Option<Counterexample>,
}

impl fmt::Display for EquivReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "mode: {}", self.mode)?;
        writeln!(f, "vectors: {}", self.vectors)?;
        writeln!(
            f,
            "result: {}",
            if self.equal { "equivalent" } else { "NOT equivalent" }
        )?;
        if let Some(cx) = &self.counterexample {
            let ins: Vec<String> = cx.inputs.iter().map(|(k, v)| format!("{k}={v}")).collect();
            writeln!(f, "counterexample: {}", ins.join(" "))?;
            writeln!(f, "output {}: {} vs {}", cx.output, cx.left, cx.right)?;
        }
        Ok(())
    }
}

fn sorted(mut v: Vec<(String, Width)>) -> Vec<(String, Width)> {
    v.sort();
    v
}

/// Compares two circuits with the same input and output signatures by
/// simulation. Stops at the first differing vector.
pub fn check_equivalence(a: &Circuit, b: &Circuit, mode: CheckMode) -> Result<EquivReport, CircuitError> {
    let ins = sorted(a.input_signature());
    if ins != sorted(b.input_signature()) {
        return Err(CircuitError::Signature(format!(
            "inputs {:?} vs {:?}",
            a.input_signature(),
            b.input_signature()
        )));
    }
    if sorted(a.output_signature()) != sorted(b.output_signature()) {
        return Err(CircuitError::Signature(format!(
            "outputs {:?} vs {:?}",
            a.output_signature(),
            b.output_signature()
        )));
    }
    // Position of each of `ins` within each circuit's own input order.
    let slot = |c: &Circuit| -> Vec<usize> {
        ins.iter()
            .map(|(n, _)| c.inputs.iter().position(|&i| &c.node(i).name == n).unwrap())
            .collect()
    };
    let (slot_a, slot_b) = (slot(a), slot(b));
    let out_b: Vec<usize> = a
        .outputs
        .iter()
        .map(|(n, _)| b.outputs.iter().position(|(m, _)| m == n).unwrap())
        .collect();

    let mut va = vec![0u64; ins.len()];
    let mut vb = vec![0u64; ins.len()];
    let mut run = |vector: &[u64]| -> Result<Option<Counterexample>, CircuitError> {
        for (k, &v) in vector.iter().enumerate() {
            va[slot_a[k]] = v;
            vb[slot_b[k]] = v;
        }
        let ra = a.eval_nodes(&va)?;
        let rb = b.eval_nodes(&vb)?;
        for (oi, (name, id)) in a.outputs.iter().enumerate() {
            let left = ra[id.0];
            let right = rb[b.outputs[out_b[oi]].1 .0];
            if left != right {
                return Ok(Some(Counterexample {
                    inputs: ins.iter().map(|(n, _)| n.clone()).zip(vector.iter().copied()).collect(),
                    output: name.clone(),
                    left,
                    right,
                }));
            }
        }
        Ok(None)
    };

    let mut vector = vec![0u64; ins.len()];
    let mut vectors = 0u64;
    let mut counterexample = None;
    match mode {
        CheckMode::Exhaustive => {
            let bits: u32 = ins.iter().map(|(_, w)| *w as u32).sum();
            if bits > EXHAUSTIVE_MAX_BITS {
                return Err(CircuitError::TooLarge(bits));
            }
            for code in 0u64..(1u64 << bits) {
                let mut rest = code;
                for (k, (_, w)) in ins.iter().enumerate() {
                    vector[k] = rest & mask(*w);
                    rest >>= *w;
                }
                vectors += 1;
                if let Some(cx) = run(&vector)? {
                    counterexample = Some(cx);
                    break;
                }
            }
        }
        CheckMode::Random { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..samples {
                for (k, (_, w)) in ins.iter().enumerate() {
                    vector[k] = rng.gen::<u64>() & mask(*w);
                }
                vectors += 1;
                if let Some(cx) = run(&vector)? {
                    counterexample = Some(cx);
                    break;
                }
            }
        }
    }
    Ok(EquivReport {
        equal: counterexample.is_none(),
        mode,
        vectors,
        counterexample,
    })
}
