//! Multiparty composition of CP processes through a forwarder, and its step-by-step elimination.

mod engine;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Display, Formatter};

use thiserror::Error;

pub use engine::{mcutq_step, run_mcut, Branch, MCutCase, MCutRun, MCutStep, StepOutcome};

use crate::checker::{check_cll, check_forwarder, CheckError};
use crate::contexts::{CllContext, QueueItem};
use crate::cutelim::Judged;
use crate::syntax::decl::StateDecl;
use crate::syntax::{fresh_name, Endpoint, MCutTerm, Process, Type};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum MCutError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("no reduction applies: {0}")]
    Stuck(String),
    #[error("fuel exhausted after {} steps", .0.len())]
    FuelExhausted(Vec<MCutStep>),
    #[error(transparent)]
    Check(#[from] CheckError),
}

fn invalid(why: impl Into<String>) -> MCutError {
    MCutError::Invalid(why.into())
}

/// A CP process with its context; `endpoint` is the name it is composed on.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Party {
    pub endpoint: Endpoint,
    pub process: Process,
    pub context: CllContext,
}

impl Party {
    pub fn new(endpoint: &Endpoint, process: Process, context: CllContext) -> Party {
        Party {
            endpoint: endpoint.clone(),
            process,
            context,
        }
    }

    pub fn ty(&self) -> Option<&Type> {
        lookup(&self.context, &self.endpoint)
    }

    /// The context without the composed endpoint.
    pub fn rest(&self) -> CllContext {
        self.context.iter().filter(|(e, _)| e != &self.endpoint).cloned().collect()
    }
}

/// `res{x̃ : Q [ỹ ◁ P̃]}(R̃)`: a forwarder judgement, messages in transit and the composed parts.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MCutConfig {
    pub bound: Vec<Endpoint>,
    pub fwd: Judged,
    pub pending: Vec<Party>,
    pub parts: Vec<Party>,
}

/// Lexicographic: cut type sizes, uses of the composed endpoints, part sizes.
pub type MMeasure = (usize, usize, usize);

pub(crate) fn lookup<'a>(ctx: &'a CllContext, x: &Endpoint) -> Option<&'a Type> {
    ctx.iter().find(|(e, _)| e == x).map(|(_, t)| t)
}

/// Union of contexts; a name already present is kept once.
pub(crate) fn merge<'a>(parts: impl IntoIterator<Item = &'a CllContext>) -> CllContext {
    let mut out: CllContext = Vec::new();
    for ctx in parts {
        for (e, t) in ctx {
            if lookup(&out, e).is_none() {
                out.push((e.clone(), t.clone()));
            }
        }
    }
    out
}

/// Free occurrences of `x` in subject or link position.
pub(crate) fn uses(p: &Process, x: &Endpoint) -> usize {
    let own = |e: &Endpoint| usize::from(e == x);
    match p {
        Process::Link(a, b) => own(a) + own(b),
        Process::Close(a) => own(a),
        Process::Wait(a, q) | Process::Inl(a, q) | Process::Inr(a, q) => own(a) + uses(q, x),
        Process::Case(a, l, r) => own(a) + uses(l, x) + uses(r, x),
        Process::Recv(a, b, q) | Process::Server(a, b, q) | Process::Client(a, b, q) => own(a) + if b == x { 0 } else { uses(q, x) },
        Process::Send(a, b, s, q) => own(a) + if b == x { 0 } else { uses(s, x) } + uses(q, x),
        Process::Cut {
            x: c, y: d, left, right, ..
        } => (if c == x { 0 } else { uses(left, x) }) + if d == x { 0 } else { uses(right, x) },
        Process::MCut(_) => usize::from(p.is_free(x)),
    }
}

/// Replaces every link at a compound type by its η-expansion, so parts only link atoms.
pub fn eta_expand(p: &Process, ctx: &CllContext) -> Process {
    let env: BTreeMap<Endpoint, Type> = ctx.iter().map(|(e, t)| (e.clone(), t.erase())).collect();
    let mut taken = p.all_names();
    taken.extend(env.keys().cloned());
    eta(p, &env, &mut taken)
}

fn eta(p: &Process, env: &BTreeMap<Endpoint, Type>, taken: &mut BTreeSet<Endpoint>) -> Process {
    let with = |pairs: &[(&Endpoint, &Type)]| {
        let mut e = env.clone();
        for (k, t) in pairs {
            e.insert((*k).clone(), (*t).clone());
        }
        e
    };
    let b = |q: &Process, e: &BTreeMap<Endpoint, Type>, taken: &mut BTreeSet<Endpoint>| Box::new(eta(q, e, taken));
    match p {
        Process::Link(x, y) => match env.get(x).cloned().or_else(|| env.get(y).map(Type::dual)) {
            Some(t) if !t.is_atomic() => expand_link(x, y, &t, taken),
            _ => p.clone(),
        },
        Process::Close(_) | Process::MCut(_) => p.clone(),
        Process::Wait(x, q) => Process::Wait(x.clone(), b(q, env, taken)),
        Process::Recv(x, y, q) => {
            let e = match env.get(x) {
                Some(Type::Par(l, r, _)) => with(&[(y, l), (x, r)]),
                _ => env.clone(),
            };
            Process::Recv(x.clone(), y.clone(), b(q, &e, taken))
        }
        Process::Send(x, y, s, q) => {
            let (es, eq) = match env.get(x) {
                Some(Type::Tensor(l, r, _)) => (with(&[(y, l)]), with(&[(x, r)])),
                _ => (env.clone(), env.clone()),
            };
            Process::Send(x.clone(), y.clone(), b(s, &es, taken), b(q, &eq, taken))
        }
        Process::Inl(x, q) | Process::Inr(x, q) => {
            let left = matches!(p, Process::Inl(..));
            let e = match env.get(x) {
                Some(Type::Plus(l, r, _)) => with(&[(x, if left { l } else { r })]),
                _ => env.clone(),
            };
            let q = b(q, &e, taken);
            if left {
                Process::Inl(x.clone(), q)
            } else {
                Process::Inr(x.clone(), q)
            }
        }
        Process::Case(x, l, r) => {
            let (el, er) = match env.get(x) {
                Some(Type::With(a, c, _)) => (with(&[(x, a)]), with(&[(x, c)])),
                _ => (env.clone(), env.clone()),
            };
            Process::Case(x.clone(), b(l, &el, taken), b(r, &er, taken))
        }
        Process::Server(x, y, q) | Process::Client(x, y, q) => {
            let e = match env.get(x) {
                Some(Type::OfCourse(a, _) | Type::WhyNot(a, _)) => with(&[(y, a)]),
                _ => env.clone(),
            };
            let q = b(q, &e, taken);
            if matches!(p, Process::Server(..)) {
                Process::Server(x.clone(), y.clone(), q)
            } else {
                Process::Client(x.clone(), y.clone(), q)
            }
        }
        Process::Cut { x, y, ty, left, right } => {
            let (dual, ty_e) = (ty.dual(), ty.erase());
            let l = b(left, &with(&[(x, &ty_e)]), taken);
            let r = b(right, &with(&[(y, &dual)]), taken);
            Process::Cut {
                x: x.clone(),
                y: y.clone(),
                ty: ty.clone(),
                left: l,
                right: r,
            }
        }
    }
}

fn fresh(base: &Endpoint, taken: &mut BTreeSet<Endpoint>) -> Endpoint {
    let f = fresh_name(base, |e| taken.contains(e));
    taken.insert(f.clone());
    f
}

/// The η-long identity between `x : t` and `y : t⊥`.
fn expand_link(x: &Endpoint, y: &Endpoint, t: &Type, taken: &mut BTreeSet<Endpoint>) -> Process {
    let bx = Box::new;
    match t {
        Type::Atom(_) | Type::DualAtom(_) => Process::Link(x.clone(), y.clone()),
        Type::One(_) => Process::Wait(y.clone(), bx(Process::Close(x.clone()))),
        Type::Bot(_) => Process::Wait(x.clone(), bx(Process::Close(y.clone()))),
        Type::Tensor(a, b, _) => {
            let (v, u) = (fresh(y, taken), fresh(x, taken));
            let payload = expand_link(&u, &v, a, taken);
            let rest = expand_link(x, y, b, taken);
            Process::Recv(y.clone(), v, bx(Process::Send(x.clone(), u, bx(payload), bx(rest))))
        }
        Type::Par(a, b, _) => {
            let (u, v) = (fresh(x, taken), fresh(y, taken));
            let payload = expand_link(&u, &v, a, taken);
            let rest = expand_link(x, y, b, taken);
            Process::Recv(x.clone(), u, bx(Process::Send(y.clone(), v, bx(payload), bx(rest))))
        }
        Type::Plus(a, b, _) => Process::Case(
            y.clone(),
            bx(Process::Inl(x.clone(), bx(expand_link(x, y, a, taken)))),
            bx(Process::Inr(x.clone(), bx(expand_link(x, y, b, taken)))),
        ),
        Type::With(a, b, _) => Process::Case(
            x.clone(),
            bx(Process::Inl(y.clone(), bx(expand_link(x, y, a, taken)))),
            bx(Process::Inr(y.clone(), bx(expand_link(x, y, b, taken)))),
        ),
        Type::OfCourse(a, _) => {
            let (u, v) = (fresh(x, taken), fresh(y, taken));
            let body = expand_link(&u, &v, a, taken);
            Process::Server(x.clone(), u, bx(Process::Client(y.clone(), v, bx(body))))
        }
        Type::WhyNot(a, _) => {
            let (v, u) = (fresh(y, taken), fresh(x, taken));
            let body = expand_link(&u, &v, a, taken);
            Process::Server(y.clone(), v, bx(Process::Client(x.clone(), u, bx(body))))
        }
    }
}

impl MCutConfig {
    /// Builds and validates a configuration. Parts and pending processes are η-expanded.
    pub fn new(fwd: Judged, pending: Vec<Party>, parts: Vec<Party>) -> Result<MCutConfig, MCutError> {
        let expand = |p: Party| Party {
            process: eta_expand(&p.process, &p.context),
            ..p
        };
        let c = MCutConfig {
            bound: fwd.context.entries.iter().map(|e| e.endpoint.clone()).collect(),
            fwd,
            pending: pending.into_iter().map(expand).collect(),
            parts: parts.into_iter().map(expand).collect(),
        };
        check_mcut_config(&c)?;
        Ok(c)
    }

    pub fn from_state(s: &StateDecl) -> Result<MCutConfig, MCutError> {
        let party = |(e, p, ctx): &(Endpoint, Process, CllContext)| Party::new(e, p.clone(), ctx.clone());
        MCutConfig::new(
            Judged::new(s.fwd.clone(), s.fwd_ctx.clone()),
            s.pending.iter().map(party).collect(),
            s.parts.iter().map(party).collect(),
        )
    }

    pub fn to_state(&self) -> StateDecl {
        let dump = |p: &Party| (p.endpoint.clone(), p.process.clone(), p.context.clone());
        StateDecl {
            fwd: self.fwd.process.clone(),
            fwd_ctx: self.fwd.context.clone(),
            parts: self.parts.iter().map(dump).collect(),
            pending: self.pending.iter().map(dump).collect(),
        }
    }

    pub fn term(&self) -> Process {
        Process::MCut(Box::new(MCutTerm {
            bound: self.bound.clone(),
            fwd: self.fwd.process.clone(),
            pending: self.pending.iter().map(|p| (p.endpoint.clone(), p.process.clone())).collect(),
            parts: self.parts.iter().map(|p| p.process.clone()).collect(),
        }))
    }

    pub fn part_index(&self, x: &Endpoint) -> Option<usize> {
        self.parts.iter().position(|p| &p.endpoint == x)
    }

    /// The context the composition is typed in: every part and pending context minus its composed endpoint.
    pub fn conclusion(&self) -> CllContext {
        let rests: Vec<CllContext> = self.parts.iter().chain(&self.pending).map(Party::rest).collect();
        merge(&rests)
    }

    pub fn measure(&self) -> MMeasure {
        let types = self.parts.iter().map(|p| p.ty().map_or(0, Type::size)).sum();
        let used = self.parts.iter().map(|p| uses(&p.process, &p.endpoint)).sum();
        let size = self.parts.iter().map(|p| p.process.size()).sum();
        (types, used, size)
    }

    pub fn size(&self) -> usize {
        self.fwd.size() + self.parts.iter().chain(&self.pending).map(|p| p.process.size()).sum::<usize>()
    }

    /// Every name occurring anywhere in the configuration.
    pub fn names(&self) -> BTreeSet<Endpoint> {
        let mut out = self.fwd.context.all_names();
        out.extend(self.fwd.process.all_names());
        out.extend(self.bound.iter().cloned());
        for p in self.parts.iter().chain(&self.pending) {
            out.extend(p.process.all_names());
            out.extend(p.context.iter().map(|(e, _)| e.clone()));
        }
        out
    }
}

impl Display for MCutConfig {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_state())
    }
}

/// Verifies the typing of every component and the side condition linking queues to pending processes.
pub fn check_mcut_config(c: &MCutConfig) -> Result<(), MCutError> {
    if !c.fwd.process.is_cut_free() {
        return Err(invalid("the forwarder contains a composition"));
    }
    check_forwarder(&c.fwd.process, &c.fwd.context).map_err(|e| invalid(format!("forwarder: {e}")))?;
    let fwd_names: Vec<Endpoint> = c.fwd.context.entries.iter().map(|e| e.endpoint.clone()).collect();
    if c.bound.iter().collect::<BTreeSet<_>>() != fwd_names.iter().collect::<BTreeSet<_>>() {
        return Err(invalid("bound endpoints differ from the forwarder's context"));
    }
    if c.parts.is_empty() {
        return Err(invalid("no parts"));
    }
    for e in &c.fwd.context.entries {
        let owners: Vec<&Party> = c.parts.iter().filter(|p| p.endpoint == e.endpoint).collect();
        match (e.typing.active(), owners.as_slice()) {
            (Some(t), [p]) => {
                let b = p
                    .ty()
                    .ok_or_else(|| invalid(format!("part `{}` is not typed at its endpoint", p.endpoint)))?;
                if !b.is_dual_of(t) {
                    return Err(invalid(format!(
                        "part `{}` has type {b}, the forwarder expects the dual of {t}",
                        p.endpoint
                    )));
                }
            }
            (Some(_), _) => return Err(invalid(format!("`{}` needs exactly one part", e.endpoint))),
            (None, []) => {}
            (None, _) => return Err(invalid(format!("`{}` is terminated but still has a part", e.endpoint))),
        }
    }
    for p in &c.parts {
        if !fwd_names.contains(&p.endpoint) {
            return Err(invalid(format!("part `{}` is not bound by the forwarder", p.endpoint)));
        }
    }
    for p in c.parts.iter().chain(&c.pending) {
        if !p.process.is_cut_free() {
            return Err(invalid(format!("`{}` contains a composition", p.endpoint)));
        }
        check_cll(&p.process, &p.context).map_err(|e| invalid(format!("`{}`: {e}", p.endpoint)))?;
    }
    let mut boxed: Vec<(Endpoint, Type)> = Vec::new();
    for e in &c.fwd.context.entries {
        for item in &e.queue.items {
            if let QueueItem::Msg { payload, .. } = item {
                boxed.extend(payload.iter().map(|(v, t)| (v.clone(), t.erase())));
            }
        }
    }
    let mut expected: Vec<(Endpoint, Type)> = Vec::new();
    for p in &c.pending {
        let t = p
            .ty()
            .ok_or_else(|| invalid(format!("pending `{}` is not typed at its endpoint", p.endpoint)))?;
        expected.push((p.endpoint.clone(), t.dual()));
    }
    boxed.sort();
    expected.sort();
    if boxed != expected {
        return Err(invalid("queued messages do not match the pending processes"));
    }
    let mut seen: BTreeMap<Endpoint, Type> = BTreeMap::new();
    let hidden: BTreeSet<&Endpoint> = c.bound.iter().chain(c.pending.iter().map(|p| &p.endpoint)).collect();
    for p in c.parts.iter().chain(&c.pending) {
        for (e, t) in p.rest() {
            if hidden.contains(&e) {
                return Err(invalid(format!("`{e}` is both composed and free")));
            }
            match seen.get(&e) {
                Some(prev) if !(matches!(t, Type::WhyNot(..)) && prev.erased_eq(&t)) => {
                    return Err(invalid(format!("`{e}` is shared between linear components")));
                }
                _ => {
                    seen.insert(e, t);
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests;
