use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use log::{debug, info};
use serde::Serialize;

use super::ematch::{ematch, Match};
use super::parse::{parse_rules, ParseError, Pattern, Rewrite, RewriteKind, Rhs, Stage, WidthSpec};
use crate::bond::{bond, select_bond_set, unify_with_template, AncestryConstraint, BondError, BondRecord};
use crate::circuit::{CircuitEGraph, Op, Symbol};
use crate::egraph::{EClassId, EGraphError, ENode, Width};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StageError {
    #[error("rule `{rule}` is a {found} rule but was given to the {expected} stage")]
    Misplaced {
        rule: String,
        expected: Stage,
        found: Stage,
    },
    #[error("unification names unknown bond `{0}`")]
    UnknownBond(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Stage(#[from] StageError),
    #[error(transparent)]
    Bond(#[from] BondError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Limits {
    pub iters: usize,
    pub nodes: usize,
    pub millis: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            iters: 30,
            nodes: 10_000,
            millis: 5_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Saturated,
    IterLimit,
    NodeLimit,
    TimeLimit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SaturationReport {
    pub iterations: usize,
    /// Class merges per iteration, congruence merges included.
    pub merges: Vec<usize>,
    /// Net e-nodes added per iteration.
    pub nodes_added: Vec<usize>,
    pub stop: StopReason,
    pub classes: usize,
    pub nodes: usize,
}

fn check_stage(rules: &[Rewrite], expected: Stage) -> Result<(), StageError> {
    match rules.iter().find(|r| r.stage() != expected) {
        Some(r) => Err(StageError::Misplaced {
            rule: r.name.clone(),
            expected,
            found: r.stage(),
        }),
        None => Ok(()),
    }
}

fn resolve_width(spec: &WidthSpec, m: &Match) -> Width {
    match spec {
        WidthSpec::Lit(w) => *w,
        WidthSpec::Var(v) => m.widths[v],
        WidthSpec::Any => unreachable!("parser rejects wildcards on the right-hand side"),
    }
}

/// Adds the instance of `p`; also reports whether its root already existed.
fn instantiate(g: &mut CircuitEGraph, p: &Pattern, m: &Match) -> Result<(EClassId, bool), EGraphError> {
    let node = match p {
        Pattern::Var { name, .. } => return Ok((m.subst[name], true)),
        Pattern::Const { width, value } => ENode::leaf(Symbol::Const(*value), resolve_width(width, m)),
        Pattern::Op { op, width, children } => {
            let mut ids = Vec::with_capacity(children.len());
            for c in children {
                ids.push(instantiate(g, c, m)?.0);
            }
            ENode::new(Symbol::Op(*op), resolve_width(width, m), ids)
        }
    };
    let existed = g.lookup(&node).is_some();
    Ok((g.add(node)?, existed))
}

fn constant_of(g: &CircuitEGraph, class: EClassId) -> Option<u64> {
    g.class(class).ok()?.nodes.iter().find_map(|n| match n.op {
        Symbol::Const(v) => Some(v),
        _ => None,
    })
}

fn fold(g: &mut CircuitEGraph, op: Op, m: &Match) -> Result<Option<(EClassId, bool)>, EGraphError> {
    let mut args = Vec::with_capacity(op.arity());
    for i in 0..op.arity() {
        match constant_of(g, m.subst[&format!("_{i}")]) {
            Some(v) => args.push(v),
            None => return Ok(None),
        }
    }
    let w = m.widths["_w"];
    let node = ENode::leaf(Symbol::Const(op.apply(w, &args)), w);
    let existed = g.lookup(&node).is_some();
    Ok(Some((g.add(node)?, existed)))
}

/// Applies one match without rebuilding. Returns 1 when two pre-existing
/// classes were merged.
fn apply_match(g: &mut CircuitEGraph, rule: &Rewrite, m: &Match) -> usize {
    let RewriteKind::Generic { rhs, .. } = &rule.kind else {
        return 0;
    };
    let result = match rhs {
        Rhs::Pattern(p) => instantiate(g, p, m).map(Some),
        Rhs::Fold(op) => fold(g, *op, m),
    };
    let (id, existed) = match result {
        Ok(Some(r)) => r,
        Ok(None) => return 0,
        Err(e) => {
            debug!("{rule}: skipping ill-typed instance: {e}");
            return 0;
        }
    };
    let (a, b) = (g.find_value(id).unwrap(), g.find_value(m.root).unwrap());
    if a == b {
        return 0;
    }
    g.merge(a, b).expect("live classes");
    usize::from(existed)
}

/// Applies a generic rewrite to the given matches, then rebuilds. Returns the
/// number of class merges; 0 means the rule added no new equalities.
pub fn apply_rewrite(g: &mut CircuitEGraph, rule: &Rewrite, matches: &[Match]) -> Result<usize, StageError> {
    check_stage(std::slice::from_ref(rule), Stage::Generic)?;
    let mut merges = 0;
    for m in matches {
        merges += apply_match(g, rule, m);
    }
    Ok(merges + g.rebuild())
}

/// Runs generic rules round-robin until fixpoint or a limit is hit.
pub fn saturate(g: &mut CircuitEGraph, rules: &[Rewrite], limits: &Limits) -> Result<SaturationReport, StageError> {
    check_stage(rules, Stage::Generic)?;
    let start = Instant::now();
    let budget = Duration::from_millis(limits.millis);
    g.rebuild();
    let mut merges_log = Vec::new();
    let mut added_log = Vec::new();
    let stop = loop {
        if merges_log.len() >= limits.iters {
            break StopReason::IterLimit;
        }
        if g.total_size() > limits.nodes {
            break StopReason::NodeLimit;
        }
        if start.elapsed() >= budget {
            break StopReason::TimeLimit;
        }
        let before = g.number_of_enodes();
        let mut matches: Vec<(&Rewrite, Match)> = Vec::new();
        for r in rules {
            if let RewriteKind::Generic { lhs, .. } = &r.kind {
                matches.extend(ematch(g, lhs).into_iter().map(|m| (r, m)));
            }
        }
        let mut merges = 0;
        let mut cut = None;
        for (k, (r, m)) in matches.iter().enumerate() {
            merges += apply_match(g, r, m);
            if g.total_size() > limits.nodes {
                cut = Some(StopReason::NodeLimit);
                break;
            }
            if k % 256 == 255 && start.elapsed() >= budget {
                cut = Some(StopReason::TimeLimit);
                break;
            }
        }
        merges += g.rebuild();
        let added = g.number_of_enodes().saturating_sub(before);
        debug!(
            "iteration {}: {} matches, {merges} merges, +{added} nodes",
            merges_log.len() + 1,
            matches.len()
        );
        merges_log.push(merges);
        added_log.push(added);
        if let Some(reason) = cut {
            break reason;
        }
        if merges == 0 && added == 0 {
            break StopReason::Saturated;
        }
    };
    let report = SaturationReport {
        iterations: merges_log.len(),
        merges: merges_log,
        nodes_added: added_log,
        stop,
        classes: g.number_of_classes(),
        nodes: g.total_size(),
    };
    info!(
        "saturation stopped ({:?}) after {} iterations",
        report.stop, report.iterations
    );
    Ok(report)
}

/// Rules split by stage.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleSet {
    pub generic: Vec<Rewrite>,
    pub bonding: Vec<Rewrite>,
    pub unification: Vec<Rewrite>,
}

/// Shipped rule set.
pub const DEFAULT_RULES: &str = include_str!("default.rules");

impl RuleSet {
    pub fn from_rules(rules: impl IntoIterator<Item = Rewrite>) -> Self {
        let mut set = RuleSet::default();
        for r in rules {
            match r.stage() {
                Stage::Generic => set.generic.push(r),
                Stage::Bonding => set.bonding.push(r),
                Stage::Unification => set.unification.push(r),
            }
        }
        set
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        Ok(Self::from_rules(parse_rules(text)?))
    }

    pub fn shipped() -> Self {
        Self::parse(DEFAULT_RULES).expect("shipped rules parse")
    }
}

/// Generic saturation, then each bonding rule once, then unification, then a
/// final rebuild. Generic rules never see a b-node created in this run.
pub fn run_staged_pipeline(
    g: &mut CircuitEGraph,
    generic: &[Rewrite],
    bonding: &[Rewrite],
    unification: &[Rewrite],
    limits: &Limits,
) -> Result<(SaturationReport, Vec<BondRecord<Symbol>>), PipelineError> {
    check_stage(generic, Stage::Generic)?;
    check_stage(bonding, Stage::Bonding)?;
    check_stage(unification, Stage::Unification)?;
    let declared: BTreeSet<&str> = bonding
        .iter()
        .filter_map(|r| match &r.kind {
            RewriteKind::Bonding { bond, .. } => Some(bond.as_str()),
            _ => None,
        })
        .collect();
    for r in unification {
        if let RewriteKind::Unification { bond, .. } = &r.kind {
            if !declared.contains(bond.as_str()) {
                return Err(StageError::UnknownBond(bond.clone()).into());
            }
        }
    }

    let report = saturate(g, generic, limits)?;

    let mut records: BTreeMap<String, BondRecord<Symbol>> = BTreeMap::new();
    let mut done: BTreeSet<(Op, Width)> = BTreeSet::new();
    for r in bonding {
        let RewriteKind::Bonding { group, bond: name, .. } = &r.kind else {
            continue;
        };
        if !done.insert(*group) {
            debug!("{r}: group already bonded in this run");
            continue;
        }
        let key = (Symbol::Op(group.0), group.1);
        let set = select_bond_set(g, &key, AncestryConstraint::Independent);
        if set.is_empty() {
            info!("{r}: fewer than two independent sites, nothing bonded");
            continue;
        }
        let rec = bond(g, name, key, set)?;
        info!("{name}: bonded {} sites", rec.bond_map().len());
        records.insert(name.clone(), rec);
    }

    for r in unification {
        let RewriteKind::Unification { bond: name, template } = &r.kind else {
            continue;
        };
        match records.get(name) {
            Some(rec) => {
                unify_with_template(g, rec, template)?;
            }
            None => debug!("{r}: bond `{name}` was not formed"),
        }
    }
    g.rebuild();
    let mut out: Vec<BondRecord<Symbol>> = records.into_values().collect();
    out.sort_by_key(|r| r.bnode_id);
    Ok((report, out))
}
