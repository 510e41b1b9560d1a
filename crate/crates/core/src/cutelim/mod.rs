//! Binary cut between forwarders: the conclusion set of a cut and its elimination by β-reduction.

mod beta;
mod distr;

use std::fmt::{self, Display, Formatter};

use thiserror::Error;

pub use beta::{beta_step, cut_in_box, reduce_cut, unit_redistribute, BetaRule, BetaStep, Premise, Reduct, Reduction};
pub use distr::{cut_conclusions, distr_enumerate, distr_step, subst_run, CutPair, CutSide, Phase, SideId};

use crate::checker::{check_forwarder, CheckError};
use crate::contexts::TypingContext;
use crate::syntax::{Endpoint, Process};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum CutError {
    #[error("`{0}` is not in the opposite context")]
    NoSuchReceiver(Endpoint),
    #[error("the queue of `{0}` is empty")]
    EmptyQueue(Endpoint),
    #[error("annotation mismatch: {0}")]
    AnnotationMismatch(String),
    #[error("operation not allowed in the current phase")]
    WrongPhase,
    #[error("structural mismatch: {0}")]
    StructuralMismatch(String),
    #[error("`{endpoint}` still refers to the cut endpoint `{name}`")]
    DanglingReference { endpoint: Endpoint, name: Endpoint },
    #[error("the redistribution plan does not match: {0}")]
    PlanMismatch(String),
    #[error("no box carries `{0}`")]
    PayloadNotFound(Endpoint),
    #[error("the target context is not a conclusion of this cut")]
    NotInConclusions,
    #[error("no reduction applies: {0}")]
    Stuck(String),
    #[error("fuel exhausted after {} steps", .0.len())]
    FuelExhausted(Vec<TraceStep>),
    #[error(transparent)]
    Check(#[from] CheckError),
}

/// A process with the context it is typed in.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Judged {
    pub process: Process,
    pub context: TypingContext,
}

impl Judged {
    pub fn new(process: Process, context: TypingContext) -> Judged {
        Judged { process, context }
    }

    pub fn check(&self) -> Result<(), CheckError> {
        check_forwarder(&self.process, &self.context).map(|_| ())
    }

    pub fn size(&self) -> usize {
        self.process.size() + self.context.total_size()
    }
}

/// Lexicographic termination measure: cut rank, then the size of the two cut subprocesses.
pub type Measure = (usize, usize);

/// `(nu x y)(left | right)` with both sides judged; `x` is cut in `left`, `y` in `right`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CutRedex {
    pub x: Endpoint,
    pub left: Judged,
    pub y: Endpoint,
    pub right: Judged,
}

impl CutRedex {
    pub fn new(x: &str, left: Judged, y: &str, right: Judged) -> CutRedex {
        CutRedex {
            x: x.into(),
            left,
            y: y.into(),
            right,
        }
    }

    pub fn sides(&self) -> Result<(CutSide, CutSide), CutError> {
        Ok((
            CutSide::of_judgement(&self.left.context, &self.x)?,
            CutSide::of_judgement(&self.right.context, &self.y)?,
        ))
    }

    pub fn rank(&self) -> usize {
        self.left.context.type_of(&self.x).map_or(0, |t| t.size())
    }

    pub fn measure(&self) -> Measure {
        (self.rank(), self.left.process.size() + self.right.process.size())
    }

    pub fn conclusions(&self) -> Result<Vec<TypingContext>, CutError> {
        let (top, bottom) = self.sides()?;
        cut_conclusions(&top, &bottom)
    }

    pub fn admits(&self, gamma: &TypingContext) -> Result<bool, CutError> {
        Ok(self.conclusions()?.iter().any(|g| g.equivalent(gamma)))
    }

    pub fn swapped(&self) -> CutRedex {
        CutRedex {
            x: self.y.clone(),
            left: self.right.clone(),
            y: self.x.clone(),
            right: self.left.clone(),
        }
    }

    pub fn term(&self) -> Process {
        let ty = self
            .left
            .context
            .type_of(&self.x)
            .map(|t| t.erase())
            .unwrap_or_else(|| crate::syntax::Type::atom("?"));
        Process::Cut {
            x: self.x.clone(),
            y: self.y.clone(),
            ty,
            left: Box::new(self.left.process.clone()),
            right: Box::new(self.right.process.clone()),
        }
    }
}

/// The highest rank of any cut in `p`; zero when cut-free.
pub fn rank(p: &Process) -> usize {
    match p {
        Process::Link(..) | Process::Close(_) => 0,
        Process::Cut { ty, left, right, .. } => ty.size().max(rank(left)).max(rank(right)),
        Process::Send(_, _, a, b) | Process::Case(_, a, b) => rank(a).max(rank(b)),
        Process::Wait(_, q)
        | Process::Recv(_, _, q)
        | Process::Inl(_, q)
        | Process::Inr(_, q)
        | Process::Server(_, _, q)
        | Process::Client(_, _, q) => rank(q),
        Process::MCut(m) => {
            let inner = m.parts.iter().chain(m.pending.iter().map(|(_, p)| p)).map(rank).max().unwrap_or(0);
            inner.max(rank(&m.fwd))
        }
    }
}

/// One reduction step, with the measure of the redex and of the cuts it leaves behind.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TraceStep {
    pub rule: BetaRule,
    pub before: Measure,
    pub after: Vec<Measure>,
}

impl TraceStep {
    pub fn decreases(&self) -> bool {
        self.after.iter().all(|m| *m < self.before)
    }
}

impl Display for TraceStep {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let after: Vec<String> = self.after.iter().map(|(r, s)| format!("({r},{s})")).collect();
        write!(
            f,
            "{} ({},{}) -> [{}]",
            self.rule.tag(),
            self.before.0,
            self.before.1,
            after.join(", ")
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::{check_inferred, synth_with_annotations};
    use crate::syntax::{parse_cll_context, parse_context, parse_process, print_process};

    fn judged(p: &str, g: &str) -> Judged {
        let p = parse_process(p).unwrap();
        let g = check_inferred(&p, &parse_context(g).unwrap()).unwrap().context;
        Judged::new(p, g)
    }

    fn reduce_all(r: &CutRedex) -> usize {
        let gammas = r.conclusions().unwrap();
        for g in &gammas {
            let red = reduce_cut(r, g, None).unwrap_or_else(|e| panic!("{e}"));
            assert!(red.trace.iter().all(TraceStep::decreases), "{:?}", red.trace);
        }
        gammas.len()
    }

    #[test]
    fn link_against_link() {
        let r = CutRedex::new("x", judged("x<->z", "x : ~a, z : a"), "y", judged("y<->w", "y : a, w : ~a"));
        assert_eq!(r.rank(), 0);
        let g = r.conclusions().unwrap();
        assert_eq!(g.len(), 1);
        let red = reduce_cut(&r, &g[0], None).unwrap();
        assert!(red.process.alpha_eq(&Process::link("z", "w")), "{}", print_process(&red.process));
        assert_eq!(red.trace.len(), 1);
        assert_eq!(red.trace[0].rule, BetaRule::B1);
    }

    #[test]
    fn rank_counts_connectives() {
        let r = CutRedex::new("x", judged("x<->z", "x : ~a, z : a"), "y", judged("y<->w", "y : a, w : ~a"));
        assert_eq!(rank(&r.term()), 0);
        let t = crate::syntax::parse_type("a *{} 1{}").unwrap();
        assert_eq!(t.size(), 2);
    }

    #[test]
    fn crisscross_against_identity() {
        let left = judged(
            "x(u). y(v). y[u'].(u<->u' | x[v'].(v'<->v | wait x; close y))",
            "x : ~name |{y} ~cost *{y} bot{y}, y : cost |{x} name *{x} 1{x}",
        );
        let (g, f) = synth_with_annotations(&parse_cll_context("w : name * (cost | 1), z : ~name | (~cost * bot)").unwrap()).unwrap();
        let r = CutRedex::new("x", left, "w", Judged::new(f, g));
        assert_eq!(r.rank(), 3);
        assert!(reduce_all(&r) >= 1);
        let first = beta_step(&r, None).unwrap();
        assert!(matches!(first.rule, BetaRule::C2 | BetaRule::K));
    }

    #[test]
    fn wrong_target_is_rejected() {
        let r = CutRedex::new("x", judged("x<->z", "x : ~a, z : a"), "y", judged("y<->w", "y : a, w : ~a"));
        let bogus = parse_context("z : a, w : a").unwrap();
        assert_eq!(reduce_cut(&r, &bogus, None), Err(CutError::NotInConclusions));
    }
}
