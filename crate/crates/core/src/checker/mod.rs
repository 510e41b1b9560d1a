//! Forwarder judgements, CP judgements, and forwarder synthesis.

mod annotate;
mod cll;
pub mod rules;
mod synth;
mod validate;

use std::fmt::{self, Display, Formatter, Write};

use thiserror::Error;

use crate::contexts::{CllContext, TypingContext};
use crate::syntax::{print_cll_context, Endpoint, Process};

pub use annotate::{annotations, slot_count};
pub use cll::check_cll;
pub use rules::{apply, Action, Instance};
pub use synth::{synth_derivation, synth_forwarder, synth_with_annotations, synth_with_order, FocusOrder};
pub use validate::{validate_cll, validate_forwarder};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub enum Rule {
    Ax,
    One,
    Bot,
    Tensor,
    Par,
    PlusL,
    PlusR,
    With,
    Bang,
    Quest,
    Weaken,
    Contract,
    Cut,
    MCut,
}

impl Rule {
    pub fn tag(self) -> &'static str {
        match self {
            Rule::Ax => "Ax",
            Rule::One => "1",
            Rule::Bot => "⊥",
            Rule::Tensor => "⊗",
            Rule::Par => "⅋",
            Rule::PlusL => "⊕l",
            Rule::PlusR => "⊕r",
            Rule::With => "&",
            Rule::Bang => "!",
            Rule::Quest => "?",
            Rule::Weaken => "w",
            Rule::Contract => "c",
            Rule::Cut => "Cut",
            Rule::MCut => "MCut",
        }
    }
}

impl Display for Rule {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum CheckError {
    #[error("`{0}` is not fully annotated")]
    NotAnnotated(Endpoint),
    #[error("rule mismatch at `{endpoint}`: expected {expected}")]
    RuleMismatch { endpoint: Endpoint, expected: String },
    #[error("queue of `{holder}` has no {expected} for `{endpoint}` at its head")]
    QueueHeadMismatch {
        endpoint: Endpoint,
        holder: Endpoint,
        expected: String,
    },
    #[error("leftover queue at `{0}`")]
    LeftoverQueue(Endpoint),
    #[error("empty target set at `{0}`")]
    NonEmptyTargetViolation(Endpoint),
    #[error("unknown endpoint `{0}`")]
    UnknownEndpoint(Endpoint),
    #[error("name `{0}` clashes with an endpoint in scope")]
    NameClash(Endpoint),
    #[error("{0}")]
    ContextShape(String),
    #[error("endpoint `{0}` is never used")]
    Unused(Endpoint),
    #[error("no annotation of the payload context types the process: {0}")]
    NoAnnotation(Box<CheckError>),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

/// A derivation tree; `C` is the context kind of the judgement.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Derivation<C> {
    pub rule: Rule,
    pub process: Process,
    pub context: C,
    pub premises: Vec<Derivation<C>>,
}

pub type ForwarderDerivation = Derivation<TypingContext>;
pub type CllDerivation = Derivation<CllContext>;

impl<C> Derivation<C> {
    /// Rule tags in pre-order, left premise first.
    pub fn rule_sequence(&self) -> Vec<Rule> {
        let mut out = vec![self.rule];
        for p in &self.premises {
            out.extend(p.rule_sequence());
        }
        out
    }

    pub fn node_count(&self) -> usize {
        1 + self.premises.iter().map(Derivation::node_count).sum::<usize>()
    }
}

/// How a context prints in a derivation trace.
pub trait ShowContext {
    fn show(&self) -> String;
}

impl ShowContext for TypingContext {
    fn show(&self) -> String {
        self.to_string()
    }
}

impl ShowContext for CllContext {
    fn show(&self) -> String {
        print_cll_context(self)
    }
}

impl<C: ShowContext> Derivation<C> {
    /// Indented trace, conclusion first.
    pub fn trace(&self) -> String {
        let mut out = String::new();
        self.trace_into(0, &mut out);
        out
    }

    fn trace_into(&self, depth: usize, out: &mut String) {
        let _ = writeln!(
            out,
            "{:indent$}[{}] {} |- {}",
            "",
            self.rule,
            self.process,
            self.context.show(),
            indent = depth * 2
        );
        for p in &self.premises {
            p.trace_into(depth + 1, out);
        }
    }
}

/// Checks a forwarder judgement. The context must be fully annotated; ⊗ payload premises
/// are checked under some annotation of their erased context.
pub fn check_forwarder(p: &Process, g: &TypingContext) -> Result<ForwarderDerivation, CheckError> {
    g.check_distinct().map_err(|e| CheckError::ContextShape(e.to_string()))?;
    for e in &g.entries {
        if let Some(t) = e.typing.active() {
            if !t.is_fully_annotated() {
                return Err(CheckError::NotAnnotated(e.endpoint.clone()));
            }
        }
    }
    check_node(p, &rules::tidy(g.clone()))
}

fn check_node(p: &Process, g: &TypingContext) -> Result<ForwarderDerivation, CheckError> {
    let action = Action::of(p).ok_or_else(|| CheckError::Unsupported("composition inside a forwarder".into()))?;
    let inst = apply(g, &action)?;
    let premises = match (p, inst.premises.as_slice()) {
        (Process::Link(..) | Process::Close(_), []) => vec![],
        (Process::Send(_, _, s, q), [left, right]) => vec![check_inferred(s, left)?, check_node(q, right)?],
        (Process::Case(_, l, r), [pl, pr]) => vec![check_node(l, pl)?, check_node(r, pr)?],
        (
            Process::Wait(_, q)
            | Process::Recv(_, _, q)
            | Process::Inl(_, q)
            | Process::Inr(_, q)
            | Process::Server(_, _, q)
            | Process::Client(_, _, q),
            [g1],
        ) => vec![check_node(q, g1)?],
        _ => unreachable!("rule arity matches term shape"),
    };
    Ok(Derivation {
        rule: inst.rule,
        process: p.clone(),
        context: g.clone(),
        premises,
    })
}

/// Checks `p` against some annotation of the erased context `g`.
pub fn check_inferred(p: &Process, g: &TypingContext) -> Result<ForwarderDerivation, CheckError> {
    let erased: CllContext = g
        .entries
        .iter()
        .filter_map(|e| e.typing.active().map(|t| (e.endpoint.clone(), t.erase())))
        .collect();
    let mut last = None;
    for candidate in annotations(&erased) {
        match check_node(p, &candidate) {
            Ok(d) => return Ok(d),
            Err(e) => last = Some(e),
        }
    }
    Err(CheckError::NoAnnotation(Box::new(
        last.unwrap_or(CheckError::ContextShape("empty payload context".into())),
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_context, parse_process};

    fn check(p: &str, g: &str) -> Result<ForwarderDerivation, CheckError> {
        check_forwarder(&parse_process(p).unwrap(), &parse_context(g).unwrap())
    }

    const CRISS: &str = "x(u). y(v). y[u'].(u<->u' | x[v'].(v'<->v | wait x; close y))";
    const CRISS_CTX: &str = "x : ~name |{y} ~cost *{y} bot{y}, y : cost |{x} name *{x} 1{x}";

    #[test]
    fn crisscross_rule_sequence() {
        let d = check(CRISS, CRISS_CTX).unwrap();
        let tags: Vec<&str> = d.rule_sequence().iter().map(|r| r.tag()).collect();
        assert_eq!(tags, ["⅋", "⅋", "⊗", "Ax", "⊗", "Ax", "⊥", "1"]);
        validate_forwarder(&d).unwrap();
    }

    #[test]
    fn additive_crisscross_rule_sequence() {
        let p = "case x {inl: case y {inl: inl x; inl y; y<->x; inr: inr x; inl y; y<->x}; \
                 inr: case y {inl: inl x; inr y; y<->x; inr: inr x; inr y; y<->x}}";
        let g = "x : (name +{y} name) &{y} (cost +{y} cost), y : (~name +{x} ~cost) &{x} (~name +{x} ~cost)";
        let d = check(p, g).unwrap();
        let tags: Vec<&str> = d.rule_sequence().iter().map(|r| r.tag()).collect();
        assert_eq!(
            tags,
            ["&", "&", "⊕l", "⊕l", "Ax", "⊕r", "⊕l", "Ax", "&", "⊕l", "⊕r", "Ax", "⊕r", "⊕r", "Ax"]
        );
        validate_forwarder(&d).unwrap();
    }

    #[test]
    fn axiom_cases() {
        assert!(check("x<->y", "x : ~a, y : a").is_ok());
        assert!(check("x<->y", "x : a, y : a").is_err());
        assert!(check("x<->y", "x : ~a, y : a, z : 1{x}").is_err());
    }

    #[test]
    fn unannotated_context_rejected() {
        assert_eq!(
            check("wait x; close y", "x : bot, y : 1{x}").unwrap_err(),
            CheckError::NotAnnotated("x".into())
        );
    }

    #[test]
    fn one_needs_terminated_partners() {
        assert!(check("wait x; close y", "x : bot{y}, y : 1{x}").is_ok());
        assert!(matches!(
            check("close y", "x : bot{y}, y : 1{x}"),
            Err(CheckError::RuleMismatch { .. })
        ));
        assert!(matches!(
            check("close y", "x : . [to=y *] [to=y *], y : 1{x}"),
            Err(CheckError::LeftoverQueue(_))
        ));
    }

    #[test]
    fn plus_needs_token_at_head() {
        let g = "x : a +{z} b, z : . [to=x L]";
        assert!(matches!(check("inr x; close x", g), Err(CheckError::QueueHeadMismatch { .. })));
    }

    #[test]
    fn cut_is_not_a_forwarder() {
        let p = "(nu x y : 1)(close x | wait y; close z)";
        assert!(matches!(check(p, "z : 1{w}"), Err(CheckError::Unsupported(_))));
    }
}
