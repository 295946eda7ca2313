#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use bondsat::circuit::{parse_circuit, Assignment, Circuit, CircuitBuilder, NodeId, NodeKind, Op};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture_dir().join(name)).unwrap()
}

pub fn fixture(name: &str) -> Circuit {
    parse_circuit(&fixture_text(&format!("{name}.circuit"))).unwrap()
}

/// Every `.circuit` file in the fixture directory, sorted by name.
pub fn all_fixtures() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::fs::read_dir(fixture_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "circuit"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read_to_string(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

pub struct GenConfig {
    pub inputs: usize,
    pub width: u8,
    pub ops: usize,
    pub outputs: usize,
    /// Probability that an operation is a multiplication.
    pub mul_bias: f64,
}

/// Random single-width circuit. Operations pick operands among all earlier
/// nodes, so duplicates and shared sub-terms occur naturally.
pub fn random_circuit(seed: u64, cfg: &GenConfig) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = CircuitBuilder::new();
    let mut pool: Vec<NodeId> = (0..cfg.inputs)
        .map(|i| b.input(&format!("i{i}"), cfg.width).unwrap())
        .collect();
    let ops = [Op::Add, Op::Sub, Op::And, Op::Or, Op::Xor];
    let mut made = Vec::new();
    for _ in 0..cfg.ops {
        if rng.gen_bool(0.15) {
            let v = rng.gen_range(0..(1u64 << cfg.width.min(16)));
            pool.push(b.constant(cfg.width, v).unwrap());
            continue;
        }
        let op = if rng.gen_bool(cfg.mul_bias) {
            Op::Mul
        } else {
            ops[rng.gen_range(0..ops.len())]
        };
        let x = pool[rng.gen_range(0..pool.len())];
        let y = pool[rng.gen_range(0..pool.len())];
        let n = b.op(op, cfg.width, &[x, y]).unwrap();
        pool.push(n);
        made.push(n);
    }
    if made.is_empty() {
        let n = b.op(Op::Add, cfg.width, &[pool[0], pool[pool.len() - 1]]).unwrap();
        made.push(n);
    }
    b.output("o0", *made.last().unwrap());
    for k in 1..cfg.outputs {
        let n = made[rng.gen_range(0..made.len())];
        b.output(&format!("o{k}"), n);
    }
    b.finish().unwrap()
}

fn wrap(v: u128, w: u8) -> u64 {
    (v & ((1u128 << w) - 1)) as u64
}

/// Reference evaluator kept independent from the library's own.
pub fn interpret(c: &Circuit, inputs: &Assignment) -> BTreeMap<String, u64> {
    let mut vals: Vec<u64> = Vec::with_capacity(c.nodes.len());
    for node in &c.nodes {
        let w = node.width;
        let v = match &node.kind {
            NodeKind::Input => inputs[&node.name],
            NodeKind::Const(v) => *v,
            NodeKind::Advice(_) => panic!("free advice"),
            NodeKind::Op(op, args) => apply(*op, w, &args.iter().map(|a| vals[a.0]).collect::<Vec<_>>()),
            NodeKind::Shared { .. } => 0,
            NodeKind::Use { shared, bindings } => {
                let NodeKind::Shared { op, advice } = &c.nodes[shared.0].kind else {
                    panic!()
                };
                let env: BTreeMap<&str, u64> = bindings.iter().map(|(a, n)| (a.as_str(), vals[n.0])).collect();
                let args: Vec<u64> = advice.iter().map(|(a, _)| env[a.as_str()]).collect();
                apply(*op, w, &args)
            }
        };
        vals.push(v);
    }
    c.outputs.iter().map(|(n, id)| (n.clone(), vals[id.0])).collect()
}

pub fn apply(op: Op, w: u8, a: &[u64]) -> u64 {
    let x = |i: usize| u128::from(a[i]);
    match op {
        Op::Add => wrap(x(0) + x(1), w),
        Op::Sub => wrap(x(0) + (1u128 << w) - x(1), w),
        Op::Mul => wrap(x(0) * x(1), w),
        Op::And => wrap(x(0) & x(1), w),
        Op::Or => wrap(x(0) | x(1), w),
        Op::Xor => wrap(x(0) ^ x(1), w),
        Op::Zext => a[0],
        Op::Trunc => wrap(x(0), w),
    }
}

/// All assignments of the circuit's inputs, at most `limit` of them.
pub fn all_assignments(c: &Circuit) -> Vec<Assignment> {
    let sig = c.input_signature();
    let bits: u32 = sig.iter().map(|(_, w)| u32::from(*w)).sum();
    assert!(bits <= 20, "too many input bits for exhaustive enumeration");
    (0u64..(1 << bits))
        .map(|code| {
            let mut rest = code;
            sig.iter()
                .map(|(n, w)| {
                    let v = rest & ((1u64 << w) - 1);
                    rest >>= w;
                    (n.clone(), v)
                })
                .collect()
        })
        .collect()
}

/// Naive congruence closure: union-find over ids, merging congruent term
/// pairs by repeated full scans until nothing changes.
pub struct NaiveCongruence {
    parent: Vec<usize>,
}

impl NaiveCongruence {
    pub fn new(n: usize) -> Self {
        NaiveCongruence {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }

    /// `terms[i]` is `(op, width, children)` for the term whose id is `ids[i]`.
    pub fn close<K: Eq + Clone>(&mut self, terms: &[(K, usize, Vec<usize>)], ids: &[usize]) {
        loop {
            let mut changed = false;
            for i in 0..terms.len() {
                for j in (i + 1)..terms.len() {
                    let (a, b) = (&terms[i], &terms[j]);
                    if a.0 != b.0 || a.1 != b.1 || a.2.len() != b.2.len() {
                        continue;
                    }
                    let same = a.2.iter().zip(&b.2).all(|(x, y)| self.find(*x) == self.find(*y));
                    if same && self.union(ids[i], ids[j]) {
                        changed = true;
                    }
                }
            }
            if !changed {
                return;
            }
        }
    }
}
