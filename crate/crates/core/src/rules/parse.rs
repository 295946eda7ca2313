use std::collections::BTreeSet;
use std::fmt;

use crate::bond::Template;
use crate::circuit::{Op, Symbol};
use crate::egraph::{Width, MAX_WIDTH};
use crate::sexpr::{read_all, Sexp, SexpError};

/// Width position of a pattern node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WidthSpec {
    Lit(Width),
    Var(String),
    Any,
}

impl fmt::Display for WidthSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WidthSpec::Lit(w) => write!(f, "{w}"),
            WidthSpec::Var(v) => f.write_str(v),
            WidthSpec::Any => f.write_str("_"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Pattern {
    /// `?x`, optionally `?x:w` to constrain the class width.
    Var { name: String, width: Option<WidthSpec> },
    Op {
        op: Op,
        width: WidthSpec,
        children: Vec<Pattern>,
    },
    /// `(const:w 5)`
    Const { width: WidthSpec, value: u64 },
}

impl Pattern {
    pub fn var(name: &str) -> Self {
        Pattern::Var {
            name: name.to_string(),
            width: None,
        }
    }

    fn collect(&self, vars: &mut BTreeSet<String>, widths: &mut BTreeSet<String>) {
        let mut width = |w: &WidthSpec| {
            if let WidthSpec::Var(v) = w {
                widths.insert(v.clone());
            }
        };
        match self {
            Pattern::Var { name, width: w } => {
                vars.insert(name.clone());
                if let Some(w) = w {
                    width(w);
                }
            }
            Pattern::Op { width: w, children, .. } => {
                width(w);
                for c in children {
                    c.collect(vars, widths);
                }
            }
            Pattern::Const { width: w, .. } => width(w),
        }
    }

    fn has_wildcard(&self) -> bool {
        match self {
            Pattern::Var { width, .. } => width == &Some(WidthSpec::Any),
            Pattern::Op { width, children, .. } => {
                *width == WidthSpec::Any || children.iter().any(Pattern::has_wildcard)
            }
            Pattern::Const { width, .. } => *width == WidthSpec::Any,
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Var { name, width: None } => write!(f, "?{name}"),
            Pattern::Var { name, width: Some(w) } => write!(f, "?{name}:{w}"),
            Pattern::Op { op, width, children } => {
                write!(f, "({op}:{width}")?;
                for c in children {
                    write!(f, " {c}")?;
                }
                f.write_str(")")
            }
            Pattern::Const { width, value } => write!(f, "(const:{width} {value})"),
        }
    }
}

/// Right-hand side of a generic rewrite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rhs {
    Pattern(Pattern),
    /// Evaluates the matched node when every operand class holds a constant.
    Fold(Op),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Generic,
    Bonding,
    Unification,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Generic => "generic",
            Stage::Bonding => "bonding",
            Stage::Unification => "unification",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RewriteKind {
    Generic {
        lhs: Pattern,
        rhs: Rhs,
    },
    /// Gathers every `group` node (bound to `gather`) and bonds them as `bond`.
    Bonding {
        group: (Op, Width),
        gather: String,
        bond: String,
    },
    Unification {
        bond: String,
        template: Template<Symbol>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rewrite {
    /// Normalized rule text.
    pub name: String,
    pub kind: RewriteKind,
}

impl Rewrite {
    pub fn stage(&self) -> Stage {
        match self.kind {
            RewriteKind::Generic { .. } => Stage::Generic,
            RewriteKind::Bonding { .. } => Stage::Bonding,
            RewriteKind::Unification { .. } => Stage::Unification,
        }
    }

    /// Constant-folding rule for a binary or unary operator.
    pub fn fold(op: Op) -> Self {
        let children = (0..op.arity()).map(|i| Pattern::var(&format!("_{i}"))).collect();
        Rewrite {
            name: format!("(fold {op})"),
            kind: RewriteKind::Generic {
                lhs: Pattern::Op {
                    op,
                    width: WidthSpec::Var("_w".into()),
                    children,
                },
                rhs: Rhs::Fold(op),
            },
        }
    }
}

impl fmt::Display for Rewrite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error(transparent)]
    Syntax(#[from] SexpError),
    #[error("unknown operator `{0}`")]
    UnknownOp(String),
    #[error("malformed width `{0}`")]
    Width(String),
    #[error("right-hand side uses unbound {0}")]
    Unbound(String),
    #[error("malformed rule: {0}")]
    Malformed(String),
    #[error("line {0}: {1}")]
    Line(usize, Box<ParseError>),
}

fn malformed(msg: impl Into<String>) -> ParseError {
    ParseError::Malformed(msg.into())
}

fn parse_width(text: &str) -> Result<WidthSpec, ParseError> {
    if text == "_" {
        return Ok(WidthSpec::Any);
    }
    if text.chars().all(|c| c.is_ascii_digit()) && !text.is_empty() {
        return match text.parse::<Width>() {
            Ok(w) if (1..=MAX_WIDTH).contains(&w) => Ok(WidthSpec::Lit(w)),
            _ => Err(ParseError::Width(text.to_string())),
        };
    }
    let name = text.strip_prefix('?').unwrap_or(text);
    let ok = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if ok {
        Ok(WidthSpec::Var(name.to_string()))
    } else {
        Err(ParseError::Width(text.to_string()))
    }
}

/// Splits `op:width`.
fn split_head(atom: &str) -> Result<(&str, WidthSpec), ParseError> {
    let (op, w) = atom
        .split_once(':')
        .ok_or_else(|| ParseError::Width(atom.to_string()))?;
    Ok((op, parse_width(w)?))
}

fn literal_width(atom: &str) -> Result<(&str, Width), ParseError> {
    match split_head(atom)? {
        (op, WidthSpec::Lit(w)) => Ok((op, w)),
        _ => Err(ParseError::Width(atom.to_string())),
    }
}

fn parse_op(name: &str) -> Result<Op, ParseError> {
    Op::from_name(name).ok_or_else(|| ParseError::UnknownOp(name.to_string()))
}

pub fn parse_pattern(s: &Sexp) -> Result<Pattern, ParseError> {
    match s {
        Sexp::Atom(a, _) => {
            let var = a
                .strip_prefix('?')
                .ok_or_else(|| malformed(format!("expected `?var`, got `{a}`")))?;
            let (name, width) = match var.split_once(':') {
                Some((n, w)) => (n, Some(parse_width(w)?)),
                None => (var, None),
            };
            if name.is_empty() {
                return Err(malformed("empty variable name"));
            }
            Ok(Pattern::Var {
                name: name.to_string(),
                width,
            })
        }
        Sexp::List(items, _) => {
            let head = items
                .first()
                .and_then(Sexp::as_atom)
                .ok_or_else(|| malformed(format!("expected `(op:w ...)`, got `{s}`")))?;
            let (op, width) = split_head(head)?;
            if op == "const" {
                let value = match &items[1..] {
                    [Sexp::Atom(v, _)] => v.parse::<u64>().map_err(|_| malformed(format!("bad constant `{v}`")))?,
                    _ => return Err(malformed(format!("expected `(const:w N)`, got `{s}`"))),
                };
                return Ok(Pattern::Const { width, value });
            }
            let op = parse_op(op)?;
            let children = items[1..].iter().map(parse_pattern).collect::<Result<Vec<_>, _>>()?;
            if children.len() != op.arity() {
                return Err(malformed(format!("`{op}` expects {} operands in `{s}`", op.arity())));
            }
            Ok(Pattern::Op { op, width, children })
        }
    }
}

fn strip_ellipsis<'a>(items: &'a [Sexp], what: &str) -> Result<(&'a str, &'a [Sexp]), ParseError> {
    // Accepts both `X...` and `X ...` as the trailing collector.
    match items {
        [Sexp::Atom(a, _), rest @ ..] if a.ends_with("...") && a.len() > 3 => Ok((&a[..a.len() - 3], rest)),
        _ => Err(malformed(format!("expected `{what}...`"))),
    }
}

fn parse_bonding(lhs: &Sexp, rhs: &Sexp) -> Result<RewriteKind, ParseError> {
    // (let Muls (mul:64)...) => (let Bond (bond Muls...))
    let l = lhs.as_list().ok_or_else(|| malformed("bonding lhs must be a list"))?;
    let (gather, group) = match l {
        [Sexp::Atom(k, _), Sexp::Atom(name, _), Sexp::List(g, _), Sexp::Atom(dots, _)]
            if k == "let" && dots == "..." =>
        {
            (name.clone(), g)
        }
        _ => return Err(malformed(format!("expected `(let X (op:w)...)`, got `{lhs}`"))),
    };
    let group = match group.as_slice() {
        [Sexp::Atom(h, _)] => {
            let (op, w) = literal_width(h)?;
            (parse_op(op)?, w)
        }
        _ => return Err(malformed("group must be `(op:w)`")),
    };
    let r = rhs.as_list().ok_or_else(|| malformed("bonding rhs must be a list"))?;
    let (bond, inner) = match r {
        [Sexp::Atom(k, _), Sexp::Atom(name, _), Sexp::List(inner, _)] if k == "let" => (name.clone(), inner),
        _ => return Err(malformed(format!("expected `(let B (bond X...))`, got `{rhs}`"))),
    };
    let arg = match inner.as_slice() {
        [Sexp::Atom(k, _), rest @ ..] if k == "bond" => match rest {
            [_] => strip_ellipsis(rest, "X")?.0,
            [Sexp::Atom(x, _), Sexp::Atom(d, _)] if d == "..." => x.as_str(),
            _ => return Err(malformed("expected `(bond X...)`")),
        },
        _ => return Err(malformed("expected `(bond X...)`")),
    };
    if arg != gather {
        return Err(ParseError::Unbound(format!("collection `{arg}`")));
    }
    Ok(RewriteKind::Bonding { group, gather, bond })
}

fn parse_unification(items: &[Sexp]) -> Result<RewriteKind, ParseError> {
    // (unify Bond (mul:64 advice:64 advice:64))
    let (bond, body) = match items {
        [_, Sexp::Atom(name, _), Sexp::List(body, _)] => (name.clone(), body),
        _ => return Err(malformed("expected `(unify B (op:w advice:w ...))`")),
    };
    let head = body
        .first()
        .and_then(Sexp::as_atom)
        .ok_or_else(|| malformed("template needs an operator"))?;
    let (op, width) = literal_width(head)?;
    let op = parse_op(op)?;
    let mut leaves = Vec::new();
    for leaf in &body[1..] {
        let a = leaf
            .as_atom()
            .ok_or_else(|| malformed("template operands must be `advice:w`"))?;
        match literal_width(a)? {
            ("advice", w) => leaves.push(w),
            (other, _) => return Err(malformed(format!("template operand `{other}` is not advice"))),
        }
    }
    if leaves.len() != op.arity() {
        return Err(malformed(format!("`{op}` expects {} operands", op.arity())));
    }
    Ok(RewriteKind::Unification {
        bond,
        template: Template {
            op: Symbol::Op(op),
            width,
            leaves,
        },
    })
}

fn parse_generic(lhs: &Sexp, rhs: &Sexp) -> Result<RewriteKind, ParseError> {
    let lhs = parse_pattern(lhs)?;
    if matches!(lhs, Pattern::Var { .. }) {
        return Err(malformed("lhs must not be a bare variable"));
    }
    let rhs = parse_pattern(rhs)?;
    if rhs.has_wildcard() {
        return Err(ParseError::Width("_ on right-hand side".into()));
    }
    let (mut vars, mut widths) = (BTreeSet::new(), BTreeSet::new());
    lhs.collect(&mut vars, &mut widths);
    let (mut rvars, mut rwidths) = (BTreeSet::new(), BTreeSet::new());
    rhs.collect(&mut rvars, &mut rwidths);
    if let Some(v) = rvars.difference(&vars).next() {
        return Err(ParseError::Unbound(format!("variable `?{v}`")));
    }
    if let Some(w) = rwidths.difference(&widths).next() {
        return Err(ParseError::Unbound(format!("width `{w}`")));
    }
    Ok(RewriteKind::Generic {
        lhs,
        rhs: Rhs::Pattern(rhs),
    })
}

/// Parses a single rule.
pub fn parse_rule(text: &str) -> Result<Rewrite, ParseError> {
    let forms = read_all(text)?;
    let name = forms.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ");
    let kind = match forms.as_slice() {
        [lhs, Sexp::Atom(arrow, _), rhs] if arrow == "=>" => {
            if lhs.head() == Some("let") {
                parse_bonding(lhs, rhs)?
            } else {
                parse_generic(lhs, rhs)?
            }
        }
        [lhs, Sexp::Atom(d, _), Sexp::Atom(arrow, _), rhs] if d == "..." && arrow == "=>" => {
            // `(let X (op:w)) ... => ...` written with a space.
            let mut l = lhs
                .as_list()
                .ok_or_else(|| malformed("bonding lhs must be a list"))?
                .to_vec();
            l.push(Sexp::Atom("...".into(), lhs.pos()));
            parse_bonding(&Sexp::List(l, lhs.pos()), rhs)?
        }
        [form] if form.head() == Some("unify") => parse_unification(form.as_list().unwrap())?,
        [form] if form.head() == Some("fold") => match form.as_list().unwrap() {
            [_, Sexp::Atom(op, _)] => return Ok(Rewrite::fold(parse_op(op)?)),
            _ => return Err(malformed("expected `(fold op)`")),
        },
        _ => {
            return Err(malformed(format!(
                "expected `lhs => rhs`, `(unify ...)` or `(fold op)`: `{name}`"
            )))
        }
    };
    Ok(Rewrite { name, kind })
}

/// Parses a rule file: one rule per line, `;` comments, blank lines ignored.
pub fn parse_rules(text: &str) -> Result<Vec<Rewrite>, ParseError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let body = line.split(';').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        out.push(parse_rule(body).map_err(|e| ParseError::Line(i + 1, Box::new(e)))?);
    }
    Ok(out)
}
