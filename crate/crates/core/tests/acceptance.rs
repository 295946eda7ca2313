//! Acceptance suite: `cargo test -p bondsat --test acceptance` prints one
//! PASS/FAIL line per criterion and exits non-zero if any fails.

mod common;

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet};
use std::hash::{Hash, Hasher};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use bondsat::bond::{BNode, BondMap};
use bondsat::circuit::{
    check_equivalence, parse_circuit, serialize_circuit, stats, CheckMode, Circuit, CircuitEGraph, NodeKind, Op, Symbol,
};
use bondsat::dot::{circuit_to_dot, egraph_to_dot};
use bondsat::egraph::{EClassId, ENode, Node, Width};
use bondsat::extract::{brute_force_extract, extract, BondChoice, Bounds};
use bondsat::lower::{to_egraph, Roots};
use bondsat::pipeline::optimize;
use bondsat::rules::{run_staged_pipeline, Limits, Pattern, Rewrite, RewriteKind, Rhs, RuleSet, WidthSpec};
use bondsat::{CostModel, Rational};
use common::{apply, fixture, fixture_text, random_circuit, GenConfig, NaiveCongruence};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn flat_alu() -> CostModel {
    CostModel::parse(&fixture_text("flat_alu.costs")).unwrap()
}

// 1
fn twins_collapse() -> Outcome {
    let start = Instant::now();
    let src = fixture("twin_w4");
    let before = stats(&src);
    ensure(before.count("mul") == 2 && before.count("add") == 2, || {
        format!("fixture shape {before:?}")
    })?;
    let out = optimize(&src, &RuleSet::shipped(), &CostModel::new(), &Limits::default()).map_err(|e| e.to_string())?;
    let after = stats(&out.circuit);
    let (muls, adds) = (after.count("mul"), after.count("add"));
    ensure(muls == 1 && adds == 1, || {
        format!("expected 1 mul and 1 add, got {muls} and {adds}")
    })?;
    let eq = check_equivalence(&src, &out.circuit, CheckMode::Exhaustive).map_err(|e| e.to_string())?;
    ensure(eq.equal && eq.vectors == 256, || format!("equivalence: {eq}"))?;
    let t = start.elapsed();
    ensure(t < Duration::from_secs(5), || format!("took {t:?}"))?;
    Ok(format!("mul 2->1, add 2->1, 256/256 vectors equal, {t:.2?}"))
}

fn shared_shape(c: &Circuit) -> Result<(), String> {
    let s = stats(c);
    let shared_muls = c
        .nodes
        .iter()
        .filter(|n| matches!(n.kind, NodeKind::Shared { op: Op::Mul, .. }))
        .count();
    ensure(s.shared_units == 1 && shared_muls == 1, || {
        format!("shared units {s:?}")
    })?;
    ensure(s.use_sites == 3, || format!("use-sites {}", s.use_sites))?;
    ensure(s.count("mul") == 1, || format!("multipliers {}", s.count("mul")))
}

// 2
fn three_site_sharing() -> Outcome {
    let start = Instant::now();
    let small = fixture("three_site_w4");
    let out4 = optimize(&small, &RuleSet::shipped(), &flat_alu(), &Limits::default()).map_err(|e| e.to_string())?;
    shared_shape(&out4.circuit).map_err(|e| format!("width 4: {e}"))?;
    let eq4 = check_equivalence(&small, &out4.circuit, CheckMode::Exhaustive).map_err(|e| e.to_string())?;
    ensure(eq4.equal, || format!("width 4: {eq4}"))?;

    let wide = fixture("three_site_w32");
    let out32 =
        optimize(&wide, &RuleSet::shipped(), &CostModel::new(), &Limits::default()).map_err(|e| e.to_string())?;
    shared_shape(&out32.circuit).map_err(|e| format!("width 32: {e}"))?;
    let mode = CheckMode::Random {
        samples: 1000,
        seed: 0xB04D,
    };
    let eq32 = check_equivalence(&wide, &out32.circuit, mode).map_err(|e| e.to_string())?;
    ensure(eq32.equal && eq32.vectors == 1000, || format!("width 32: {eq32}"))?;
    let t = start.elapsed();
    ensure(t < Duration::from_secs(10), || format!("took {t:?}"))?;
    Ok(format!(
        "1 shared mul + 3 use-sites at widths 4 and 32; {} exhaustive + 1000 random vectors equal, {t:.2?}",
        eq4.vectors
    ))
}

fn small_corpus_config(seed: u64) -> GenConfig {
    GenConfig {
        inputs: 3,
        width: 4,
        ops: 4 + (seed % 6) as usize,
        outputs: 3,
        mul_bias: 0.6,
    }
}

// 3
fn bond_dispersal_inversion() -> Outcome {
    let limits = Limits {
        iters: 12,
        nodes: 3000,
        millis: 5000,
    };
    let mut adversarial = CostModel::new();
    adversarial.set_use_route(Rational::from_integer(1000)).unwrap();
    let shipped = RuleSet::shipped();
    let generic_only = RuleSet {
        generic: shipped.generic.clone(),
        ..RuleSet::default()
    };
    let mut bonded_runs = 0;
    for seed in 0..25u64 {
        let c = random_circuit(1000 + seed, &small_corpus_config(seed));
        let bonded = optimize(&c, &shipped, &adversarial, &limits).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(
            bonded
                .bond_summaries
                .iter()
                .all(|b| b.choice == BondChoice::BNodeChosen),
            || format!("seed {seed}: template chosen under adversarial routing"),
        )?;
        if !bonded.bonds.is_empty() {
            bonded_runs += 1;
        }
        let plain = optimize(&c, &generic_only, &adversarial, &limits).map_err(|e| format!("seed {seed}: {e}"))?;
        let eq = check_equivalence(&bonded.circuit, &plain.circuit, CheckMode::Exhaustive)
            .map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(eq.equal, || format!("seed {seed}: {eq}"))?;
        let src_eq = check_equivalence(&c, &bonded.circuit, CheckMode::Exhaustive).map_err(|e| e.to_string())?;
        ensure(src_eq.equal, || format!("seed {seed} vs source: {src_eq}"))?;
    }
    ensure(bonded_runs > 0, || "no circuit formed a bond".into())?;
    Ok(format!(
        "25/25 circuits simulation-equal ({bonded_runs} with bonds formed)"
    ))
}

fn hash_of<T: Hash>(t: &T) -> u64 {
    let mut h = DefaultHasher::new();
    t.hash(&mut h);
    h.finish()
}

type RawMap = Vec<(u32, Vec<u32>)>;

fn to_map(raw: &RawMap) -> BondMap {
    BondMap::new(
        raw.iter()
            .map(|(p, ch)| (EClassId(*p), ch.iter().map(|&c| EClassId(c)).collect()))
            .collect(),
    )
    .unwrap()
}

// 4
fn bnode_equality_law() -> Outcome {
    let strategy = (2usize..7, 1usize..4).prop_flat_map(|(n, arity)| {
        (
            prop::collection::btree_set(0u32..10_000, n),
            prop::collection::vec(prop::collection::vec(0u32..10_000, arity), n),
            any::<prop::sample::Index>(),
            any::<prop::sample::Index>(),
            any::<bool>(),
            1u32..500,
            any::<u32>(),
            any::<u32>(),
        )
    });
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    let cases = std::cell::Cell::new(0u32);
    let result = runner.run(
        &strategy,
        |(parents, children, entry, slot, on_parent, delta, s1, s2)| {
            cases.set(cases.get() + 1);
            let raw: RawMap = parents.iter().copied().zip(children).collect();
            let a = BNode {
                symbol: s1,
                bond_map: to_map(&raw),
            };
            let mut shuffled = raw.clone();
            shuffled.reverse();
            let b = BNode {
                symbol: s2,
                bond_map: to_map(&shuffled),
            };
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(hash_of(&a), hash_of(&b));

            let mut changed = raw.clone();
            let i = entry.index(changed.len());
            if on_parent {
                let mut p = changed[i].0.wrapping_add(delta);
                while parents.contains(&p) {
                    p = p.wrapping_add(1);
                }
                changed[i].0 = p;
            } else {
                let j = slot.index(changed[i].1.len());
                changed[i].1[j] = changed[i].1[j].wrapping_add(delta);
            }
            let c = BNode {
                symbol: s1,
                bond_map: to_map(&changed),
            };
            prop_assert_ne!(&a, &c);
            Ok(())
        },
    );
    result.map_err(|e| e.to_string())?;
    let cases = cases.get();
    ensure(cases >= 1000, || format!("only {cases} cases"))?;
    Ok(format!("{cases} generated bond-map pairs"))
}

/// Evaluates a rule pattern with every width variable set to `w` and every
/// variable ranging over `w`-bit values. `None` when ill-typed.
fn eval_pattern(p: &Pattern, w: Width, env: &BTreeMap<String, u64>) -> Option<(u64, Width)> {
    let width = |s: &WidthSpec| match s {
        WidthSpec::Lit(l) => *l,
        _ => w,
    };
    match p {
        Pattern::Var { name, width: ws } => Some((env[name], ws.as_ref().map_or(w, width))),
        Pattern::Const { width: ws, value } => {
            let cw = width(ws);
            (*value < (1u128 << cw) as u64 || cw == 64).then_some((*value, cw))
        }
        Pattern::Op {
            op,
            width: ws,
            children,
        } => {
            let nw = width(ws);
            let vals: Vec<(u64, Width)> = children
                .iter()
                .map(|c| eval_pattern(c, w, env))
                .collect::<Option<_>>()?;
            let ok = match op {
                Op::Zext => vals[0].1 <= nw,
                Op::Trunc => vals[0].1 >= nw,
                _ => vals.iter().all(|(_, cw)| *cw == nw),
            };
            ok.then(|| (apply(*op, nw, &vals.iter().map(|v| v.0).collect::<Vec<_>>()), nw))
        }
    }
}

fn vars_of(p: &Pattern, out: &mut BTreeSet<String>) {
    match p {
        Pattern::Var { name, .. } => {
            out.insert(name.clone());
        }
        Pattern::Op { children, .. } => children.iter().for_each(|c| vars_of(c, out)),
        Pattern::Const { .. } => {}
    }
}

fn check_rule(rule: &Rewrite) -> Result<u64, String> {
    let RewriteKind::Generic { lhs, rhs } = &rule.kind else {
        return Ok(0);
    };
    let mut checked = 0u64;
    match rhs {
        Rhs::Pattern(rhs) => {
            let mut vars = BTreeSet::new();
            vars_of(lhs, &mut vars);
            let vars: Vec<String> = vars.into_iter().collect();
            for w in 1..=6u8 {
                let total = 1u64 << (u32::from(w) * vars.len() as u32);
                for code in 0..total {
                    let env: BTreeMap<String, u64> = vars
                        .iter()
                        .enumerate()
                        .map(|(i, v)| (v.clone(), (code >> (u32::from(w) * i as u32)) & ((1 << w) - 1)))
                        .collect();
                    let Some(l) = eval_pattern(lhs, w, &env) else { continue };
                    let r = eval_pattern(rhs, w, &env);
                    ensure(r == Some(l), || {
                        format!("{rule}: width {w}, {env:?}: lhs {l:?} rhs {r:?}")
                    })?;
                    checked += 1;
                }
            }
        }
        Rhs::Fold(op) => {
            // Folding uses the library's operator semantics; compare them
            // with the reference arithmetic.
            for w in 1..=6u8 {
                let child_widths: Vec<Width> = match op {
                    Op::Zext => (1..=w).collect(),
                    Op::Trunc => (w..=6).collect(),
                    _ => vec![w],
                };
                for cw in child_widths {
                    for a in 0..(1u64 << cw) {
                        for b in 0..(if op.arity() == 2 { 1u64 << cw } else { 1 }) {
                            let args = if op.arity() == 2 { vec![a, b] } else { vec![a] };
                            let got = op.apply(w, &args);
                            let want = apply(*op, w, &args);
                            ensure(got == want, || {
                                format!("{rule}: width {w} args {args:?}: {got} vs {want}")
                            })?;
                            checked += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(checked)
}

// 5
fn rule_soundness() -> Outcome {
    let mut identity = 0;
    for w in 1..=6u8 {
        let src =
            format!("(circuit (input a :{w}) (input b :{w}) (output o (trunc:{w} (mul:64 (zext:64 a) (zext:64 b)))))");
        let c = parse_circuit(&src).unwrap();
        for a in 0..(1u64 << w) {
            for b in 0..(1u64 << w) {
                let got = c
                    .evaluate(&[("a".to_string(), a), ("b".to_string(), b)].into())
                    .unwrap()["o"];
                let want = (a * b) % (1 << w);
                ensure(got == want, || format!("width {w}: {a}*{b} gave {got}, want {want}"))?;
                identity += 1;
            }
        }
    }
    let rules = RuleSet::shipped();
    let mut checked = 0;
    for r in &rules.generic {
        checked += check_rule(r)?;
    }
    Ok(format!(
        "upcast identity on {identity} operand pairs; {} shipped generic rules sound on {checked} instances",
        rules.generic.len()
    ))
}

// 6
fn staging_no_chains() -> Outcome {
    let limits = Limits {
        iters: 8,
        nodes: 2500,
        millis: 3000,
    };
    let rules = RuleSet::shipped();
    let widths = [4u8, 8, 16, 32];
    let mut bonds = 0;
    let mut stops: BTreeMap<String, usize> = BTreeMap::new();
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = GenConfig {
            inputs: 3,
            width: widths[rng.gen_range(0..widths.len())],
            ops: rng.gen_range(5..=50),
            outputs: 2,
            mul_bias: 0.4,
        };
        let c = random_circuit(5000 + seed, &cfg);
        ensure(c.len() <= 60, || format!("seed {seed}: {} nodes", c.len()))?;
        let (mut g, _roots) = to_egraph(&c).map_err(|e| e.to_string())?;
        let start = Instant::now();
        let (report, recs) = run_staged_pipeline(&mut g, &rules.generic, &rules.bonding, &rules.unification, &limits)
            .map_err(|e| format!("seed {seed}: {e}"))?;
        let t = start.elapsed();
        ensure(report.iterations <= limits.iters, || {
            format!("seed {seed}: {} iterations", report.iterations)
        })?;
        ensure(t < Duration::from_millis(limits.millis) * 2, || {
            format!("seed {seed}: took {t:?}")
        })?;
        *stops.entry(format!("{:?}", report.stop)).or_default() += 1;
        let ours: BTreeSet<_> = recs.iter().map(|r| r.bnode_id).collect();
        for rec in &recs {
            for (parent, children) in rec.bond_map().entries() {
                for id in std::iter::once(parent).chain(children) {
                    let chained = g.enodes_of(*id).unwrap().into_iter().any(|n| match n {
                        Node::B(b) => b != rec.bnode_id && ours.contains(&b),
                        Node::E(_) => false,
                    });
                    ensure(!chained, || {
                        format!("seed {seed}: {} references a bonded class {id}", rec.name)
                    })?;
                }
            }
        }
        bonds += recs.len();
    }
    Ok(format!("100 circuits, {bonds} bonds, no chains; stops {stops:?}"))
}

/// Random e-graph whose classes hold alternative nodes with arbitrary
/// operators; only costs matter here.
fn oracle_graph(seed: u64) -> (CircuitEGraph, Roots, CostModel) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = CircuitEGraph::new();
    let ops = [Op::Add, Op::Sub, Op::Mul, Op::And, Op::Or, Op::Xor];
    let n_inputs = rng.gen_range(2..=3);
    let mut inputs = Vec::new();
    let mut pool: Vec<EClassId> = Vec::new();
    for i in 0..n_inputs {
        let name = format!("i{i}");
        pool.push(g.add(ENode::leaf(Symbol::input(&name), 8)).unwrap());
        inputs.push((name, 8));
    }
    let n_ops = rng.gen_range(1..=4);
    for _ in 0..n_ops {
        let op = ops[rng.gen_range(0..ops.len())];
        let a = pool[rng.gen_range(0..pool.len())];
        let b = pool[rng.gen_range(0..pool.len())];
        let id = g.add(ENode::new(Symbol::Op(op), 8, vec![a, b])).unwrap();
        if !pool.contains(&id) {
            pool.push(id);
        }
    }
    let ops_made: Vec<EClassId> = pool[n_inputs..].to_vec();
    for _ in 0..rng.gen_range(0..=3) {
        if ops_made.is_empty() {
            break;
        }
        let target = ops_made[rng.gen_range(0..ops_made.len())];
        let op = ops[rng.gen_range(0..ops.len())];
        let below: Vec<EClassId> = pool.iter().copied().filter(|&c| c < target).collect();
        let a = below[rng.gen_range(0..below.len())];
        let b = below[rng.gen_range(0..below.len())];
        let alt = g.add(ENode::new(Symbol::Op(op), 8, vec![a, b])).unwrap();
        g.merge(alt, target).unwrap();
        g.rebuild();
    }
    let root = g.find_value(*pool.last().unwrap()).unwrap();
    g.set_root("o", root).unwrap();
    let mut m = CostModel::new();
    for op in ops {
        m.set(op.name(), 8, Rational::from_integer(rng.gen_range(0..12)))
            .unwrap();
    }
    let roots = Roots {
        inputs,
        outputs: vec![("o".into(), root)],
    };
    (g, roots, m)
}

// 7
fn extraction_vs_oracle() -> Outcome {
    let (mut tree, mut diamond, mut skipped) = (0, 0, 0);
    let mut gaps = Vec::new();
    let mut logged = Vec::new();
    for seed in 0..400u64 {
        let (g, roots, m) = oracle_graph(seed);
        let oracle = match brute_force_extract(&g, &roots, &m, &Bounds::default()) {
            Ok(o) => o,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        let (_, greedy) = extract(&g, &roots, &m).map_err(|e| format!("seed {seed}: {e}"))?;
        if oracle.diamond {
            diamond += 1;
            logged.push(format!("{seed}:{greedy}/{}", oracle.cost));
            ensure(greedy >= oracle.cost, || {
                format!("seed {seed}: greedy {greedy} < optimum {}", oracle.cost)
            })?;
            if greedy != oracle.cost {
                gaps.push(format!("seed {seed}: greedy {greedy} optimum {}", oracle.cost));
            }
        } else {
            tree += 1;
            ensure(greedy == oracle.cost, || {
                format!("seed {seed}: greedy {greedy} optimum {}", oracle.cost)
            })?;
        }
    }
    println!("    diamond cases (greedy/optimum): {}", logged.join(" "));
    for line in &gaps {
        println!("    diamond gap {line}");
    }
    ensure(tree >= 50 && diamond >= 20, || {
        format!("too few cases: {tree} diamond-free, {diamond} diamond")
    })?;
    Ok(format!(
        "{tree} diamond-free graphs equal to optimum; {diamond} diamond graphs greedy >= optimum ({} strict gaps); {skipped} over bounds",
        gaps.len()
    ))
}

// 8
fn congruence_suite() -> Outcome {
    let ops = [Op::Add, Op::Mul, Op::Xor];
    for seed in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = CircuitEGraph::new();
        let mut terms: Vec<(Symbol, usize, Vec<usize>)> = Vec::new();
        let mut term_ids: Vec<usize> = Vec::new();
        let mut merges: Vec<(usize, usize)> = Vec::new();
        let mut ids: Vec<EClassId> = Vec::new();
        for i in 0..3 {
            let sym = Symbol::input(&format!("x{i}"));
            let id = g.add(ENode::leaf(sym.clone(), 8)).unwrap();
            terms.push((sym, 8, vec![]));
            term_ids.push(id.0 as usize);
            ids.push(id);
        }
        for _ in 0..rng.gen_range(5..40) {
            match rng.gen_range(0..100) {
                0..=54 => {
                    let op = ops[rng.gen_range(0..ops.len())];
                    let a = ids[rng.gen_range(0..ids.len())];
                    let b = ids[rng.gen_range(0..ids.len())];
                    let id = g.add(ENode::new(Symbol::Op(op), 8, vec![a, b])).unwrap();
                    terms.push((Symbol::Op(op), 8, vec![a.0 as usize, b.0 as usize]));
                    term_ids.push(id.0 as usize);
                    ids.push(id);
                }
                55..=84 => {
                    let a = ids[rng.gen_range(0..ids.len())];
                    let b = ids[rng.gen_range(0..ids.len())];
                    g.merge(a, b).unwrap();
                    merges.push((a.0 as usize, b.0 as usize));
                }
                _ => {
                    g.rebuild();
                }
            }
        }
        g.rebuild();

        let mut canon: BTreeMap<ENode<Symbol>, EClassId> = BTreeMap::new();
        for class in g.classes() {
            for n in &class.nodes {
                ensure(g.lookup(n) == Some(class.id), || {
                    format!("seed {seed}: hashcons lost {n}")
                })?;
                let key = ENode::new(
                    n.op.clone(),
                    n.width,
                    n.children.iter().map(|&c| g.find(c).unwrap()).collect(),
                );
                if let Some(other) = canon.insert(key, class.id) {
                    ensure(other == class.id, || {
                        format!("seed {seed}: congruent nodes in {other} and {}", class.id)
                    })?;
                }
            }
        }
        let second = g.rebuild();
        ensure(second == 0, || format!("seed {seed}: second rebuild merged {second}"))?;
        let classes = g.number_of_classes();
        let (sym, w, ch) = terms[rng.gen_range(0..terms.len())].clone();
        let again = g
            .add(ENode::new(
                sym,
                w as u8,
                ch.iter().map(|&c| EClassId(c as u32)).collect(),
            ))
            .unwrap();
        ensure(g.number_of_classes() == classes, || {
            format!("seed {seed}: re-adding grew the graph")
        })?;
        let _ = again;

        let n = ids.iter().map(|i| i.0 as usize).max().unwrap() + 1;
        let mut naive = NaiveCongruence::new(n);
        for (a, b) in &merges {
            naive.union(*a, *b);
        }
        naive.close(&terms, &term_ids);
        for i in 0..n {
            for j in (i + 1)..n {
                let want = naive.find(i) == naive.find(j);
                let got = g.find(EClassId(i as u32)).unwrap() == g.find(EClassId(j as u32)).unwrap();
                ensure(want == got, || {
                    format!("seed {seed}: e{i} ~ e{j}: oracle {want}, graph {got}")
                })?;
            }
        }
    }
    Ok("1000 random add/merge/rebuild sequences".into())
}

// 9
fn format_round_trip() -> Outcome {
    let corpus = common::all_fixtures();
    for (name, text) in &corpus {
        let c = parse_circuit(text).map_err(|e| format!("{name}: {e}"))?;
        let s1 = serialize_circuit(&c);
        let c2 = parse_circuit(&s1).map_err(|e| format!("{name} reparse: {e}"))?;
        ensure(c == c2, || format!("{name}: structural mismatch after round trip"))?;
        ensure(serialize_circuit(&c2) == s1, || {
            format!("{name}: serialization not stable")
        })?;
    }
    let mut dots = 0;
    for (name, text) in &corpus {
        let c = parse_circuit(text).unwrap();
        let costs = if name.contains("w4") {
            flat_alu()
        } else {
            CostModel::new()
        };
        let render = || -> Result<Vec<String>, String> {
            let o =
                optimize(&c, &RuleSet::shipped(), &costs, &Limits::default()).map_err(|e| format!("{name}: {e}"))?;
            Ok(vec![
                egraph_to_dot(&o.initial),
                egraph_to_dot(&o.egraph),
                circuit_to_dot(&o.source),
                circuit_to_dot(&o.circuit),
            ])
        };
        let (a, b) = (render()?, render()?);
        ensure(a == b, || format!("{name}: DOT output differs between runs"))?;
        dots += a.len();
    }
    Ok(format!(
        "{} fixtures round-trip; {dots} DOT renderings byte-identical across runs",
        corpus.len()
    ))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("congruent twins collapse", twins_collapse),
        ("three-site sharing", three_site_sharing),
        ("bond/disperse inversion", bond_dispersal_inversion),
        ("b-node equality law", bnode_equality_law),
        ("upcast and shipped rule soundness", rule_soundness),
        ("staging / no chains", staging_no_chains),
        ("extraction vs oracle", extraction_vs_oracle),
        ("congruence closure suite", congruence_suite),
        ("format round-trip and DOT determinism", format_round_trip),
    ];
    let total = criteria.len();
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let t = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS [{}] {name}: {detail} ({t:.2?})", i + 1),
            Err(why) => {
                println!("FAIL [{}] {name}: {why} ({t:.2?})", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {total} criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
