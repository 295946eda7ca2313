//! Rewrite rules: pattern syntax, e-matching and the staged scheduler.
//!
//! Rule syntax, one rule per line:
//!
//! ```text
//! (mul:bw ?a ?b) => (trunc:bw (mul:64 (zext:64 ?a) (zext:64 ?b)))
//! (let Muls (mul:64)...) => (let MulBond (bond Muls...))
//! (unify MulBond (mul:64 advice:64 advice:64))
//! (fold add)
//! ```
//!
//! Widths are literals, width variables (`bw`, `?w`) or `_`. `?x:w`
//! constrains the width of the class bound to `?x`.

mod ematch;
mod parse;
mod schedule;

pub use ematch::{ematch, ematch_class, Match};
pub use parse::{
    parse_pattern, parse_rule, parse_rules, ParseError, Pattern, Rewrite, RewriteKind, Rhs, Stage, WidthSpec,
};
pub use schedule::{
    apply_rewrite, run_staged_pipeline, saturate, Limits, PipelineError, RuleSet, SaturationReport, StageError,
    StopReason, DEFAULT_RULES,
};
