use std::collections::BTreeSet;
use std::fmt::{self, Display, Formatter};

use super::{check_mcut_config, invalid, lookup, merge, MCutConfig, MCutError, MMeasure, Party};
use crate::checker::rules::tidy;
use crate::checker::{apply, check_cll, check_inferred, Action, Rule};
use crate::contexts::{CllContext, TypingContext};
use crate::cutelim::Judged;
use crate::syntax::{fresh_name, Endpoint, Process, Type};

/// The elimination case taken by one step, named after the part's connective.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub enum MCutCase {
    Ax,
    One,
    Bot,
    Tensor,
    Par,
    Plus,
    With,
    Bang,
    Quest,
    Weaken,
    Contract,
    /// A part acts on one of its own free endpoints; the action moves outside the composition.
    Commute(Rule),
}

impl MCutCase {
    pub fn tag(self) -> &'static str {
        match self {
            MCutCase::Ax => "Ax",
            MCutCase::One => "1",
            MCutCase::Bot => "⊥",
            MCutCase::Tensor => "⊗",
            MCutCase::Par => "⅋",
            MCutCase::Plus => "⊕",
            MCutCase::With => "&",
            MCutCase::Bang => "!",
            MCutCase::Quest => "?",
            MCutCase::Weaken => "w",
            MCutCase::Contract => "c",
            MCutCase::Commute(_) => "comm",
        }
    }

    /// The eleven principal cases, in a fixed order.
    pub const PRINCIPAL: [MCutCase; 11] = [
        MCutCase::Tensor,
        MCutCase::Par,
        MCutCase::Plus,
        MCutCase::With,
        MCutCase::Ax,
        MCutCase::One,
        MCutCase::Bot,
        MCutCase::Bang,
        MCutCase::Quest,
        MCutCase::Weaken,
        MCutCase::Contract,
    ];
}

impl Display for MCutCase {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            MCutCase::Commute(r) => write!(f, "comm[{r}]"),
            other => f.write_str(other.tag()),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MCutStep {
    pub case: MCutCase,
    pub endpoints: Vec<Endpoint>,
    /// Nesting level: steps of compositions spawned by ⅋ and c are one deeper.
    pub depth: usize,
    pub before: MMeasure,
    pub after: Vec<MMeasure>,
}

impl MCutStep {
    pub fn decreases(&self) -> bool {
        self.after.iter().all(|m| *m < self.before)
    }
}

impl Display for MCutStep {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.endpoints.iter().map(Endpoint::as_str).collect();
        let (t, u, s) = self.before;
        let after: Vec<String> = self.after.iter().map(|(a, b, c)| format!("({a},{b},{c})")).collect();
        write!(
            f,
            "{}{} {} ({t},{u},{s}) -> [{}]",
            "  ".repeat(self.depth),
            self.case,
            names.join(" "),
            after.join(", ")
        )
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Branch {
    Plain(Process),
    Config(MCutConfig),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum StepOutcome {
    Next(MCutConfig),
    Final(Process),
    /// The composition continues under `action`; branches are its continuations in premise order.
    Commuted(Action, Vec<Branch>),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MCutRun {
    pub process: Process,
    pub trace: Vec<MCutStep>,
}

/// One step. `choice` names a part to commute instead of following the forwarder.
/// The returned trace holds this step last, after any steps of nested compositions it ran.
pub fn mcutq_step(c: &MCutConfig, choice: Option<usize>) -> Result<(Vec<MCutStep>, StepOutcome), MCutError> {
    let mut engine = Engine::new(c, 10 * c.size() + 1000);
    let outcome = engine.step(c, choice)?;
    Ok((engine.trace, outcome))
}

/// Runs to a cut-free process typed in the configuration's conclusion.
pub fn run_mcut(c: &MCutConfig, fuel: Option<usize>) -> Result<MCutRun, MCutError> {
    check_mcut_config(c)?;
    let mut engine = Engine::new(c, fuel.unwrap_or(50 * c.size() + 1000));
    let process = engine.run(c)?;
    Ok(MCutRun {
        process,
        trace: engine.trace,
    })
}

struct Engine {
    fuel: usize,
    depth: usize,
    trace: Vec<MCutStep>,
    taken: BTreeSet<Endpoint>,
}

fn stuck(why: impl Into<String>) -> MCutError {
    MCutError::Stuck(why.into())
}

fn erased(t: Option<&Type>, x: &Endpoint) -> Result<Type, MCutError> {
    t.map(Type::erase).ok_or_else(|| invalid(format!("`{x}` is untyped")))
}

fn is_server_on(p: &Party) -> bool {
    matches!(&p.process, Process::Server(x, ..) if x == &p.endpoint)
}

fn without(ctx: &CllContext, x: &Endpoint) -> CllContext {
    ctx.iter().filter(|(e, _)| e != x).cloned().collect()
}

fn with(mut ctx: CllContext, x: &Endpoint, t: Type) -> CllContext {
    match ctx.iter_mut().find(|(e, _)| e == x) {
        Some(entry) => entry.1 = t,
        None => ctx.push((x.clone(), t)),
    }
    ctx
}

/// Splits a context between two subprocesses; unused entries go right.
fn split(ctx: &CllContext, left: &Process, right: &Process, bound_left: &Endpoint) -> (CllContext, CllContext) {
    let lf = left.free_names();
    let rf = right.free_names();
    let mut l = Vec::new();
    let mut r = Vec::new();
    for (e, t) in ctx {
        let in_l = e != bound_left && lf.contains(e);
        if in_l {
            l.push((e.clone(), t.clone()));
        }
        if rf.contains(e) || !in_l {
            r.push((e.clone(), t.clone()));
        }
    }
    (l, r)
}

fn judged_premise(g: &TypingContext) -> TypingContext {
    tidy(g.clone())
}

fn rebound(fwd: Judged, pending: Vec<Party>, parts: Vec<Party>) -> MCutConfig {
    MCutConfig {
        bound: fwd.context.entries.iter().map(|e| e.endpoint.clone()).collect(),
        fwd,
        pending,
        parts,
    }
}

impl Engine {
    fn new(c: &MCutConfig, fuel: usize) -> Engine {
        Engine {
            fuel,
            depth: 0,
            trace: Vec::new(),
            taken: c.names(),
        }
    }

    fn fresh(&mut self, base: &Endpoint) -> Endpoint {
        let f = fresh_name(base, |e| self.taken.contains(e));
        self.taken.insert(f.clone());
        f
    }

    fn record(&mut self, case: MCutCase, endpoints: Vec<Endpoint>, before: MMeasure, outcome: &StepOutcome) {
        let after = match outcome {
            StepOutcome::Next(c) => vec![c.measure()],
            StepOutcome::Final(_) => vec![],
            StepOutcome::Commuted(_, bs) => bs
                .iter()
                .filter_map(|b| match b {
                    Branch::Config(c) => Some(c.measure()),
                    Branch::Plain(_) => None,
                })
                .collect(),
        };
        self.trace.push(MCutStep {
            case,
            endpoints,
            depth: self.depth,
            before,
            after,
        });
    }

    fn run(&mut self, c: &MCutConfig) -> Result<Process, MCutError> {
        let conclusion = c.conclusion();
        let mut cur = c.clone();
        let result = loop {
            if self.fuel == 0 {
                return Err(MCutError::FuelExhausted(self.trace.clone()));
            }
            self.fuel -= 1;
            match self.step(&cur, None)? {
                StepOutcome::Next(next) => {
                    check_mcut_config(&next)?;
                    cur = next;
                }
                StepOutcome::Final(p) => break p,
                StepOutcome::Commuted(action, branches) => {
                    let mut kids = Vec::new();
                    for b in branches {
                        kids.push(match b {
                            Branch::Plain(p) => p,
                            Branch::Config(inner) => {
                                check_mcut_config(&inner)?;
                                self.run(&inner)?
                            }
                        });
                    }
                    break action.build(kids);
                }
            }
        };
        if !result.is_cut_free() {
            return Err(invalid("result still contains a composition"));
        }
        check_cll(&result, &conclusion).map_err(|e| invalid(format!("result does not check: {e}")))?;
        Ok(result)
    }

    /// Runs a spawned composition one level deeper.
    fn nested(&mut self, c: &MCutConfig) -> Result<Process, MCutError> {
        check_mcut_config(c)?;
        self.depth += 1;
        let r = self.run(c);
        self.depth -= 1;
        r
    }

    fn step(&mut self, c: &MCutConfig, choice: Option<usize>) -> Result<StepOutcome, MCutError> {
        for p in c.names() {
            self.taken.insert(p);
        }
        if let Some(i) = choice {
            if i >= c.parts.len() {
                return Err(stuck(format!("no part {i}")));
            }
            return self.commute(c, i);
        }
        let head = Action::of(&c.fwd.process).ok_or_else(|| invalid("forwarder is not an action"))?;
        if let Action::Link(a, b) = &head {
            let (i, j) = (self.part(c, a)?, self.part(c, b)?);
            for k in [i, j] {
                if !matches!(c.parts[k].process, Process::Link(..)) {
                    return self.commute(c, k);
                }
            }
            let other = |k: usize| match &c.parts[k].process {
                Process::Link(u, v) => Ok(if u == &c.parts[k].endpoint { v.clone() } else { u.clone() }),
                _ => Err(stuck("not a link")),
            };
            let out = StepOutcome::Final(Process::Link(other(i)?, other(j)?));
            self.record(MCutCase::Ax, vec![a.clone(), b.clone()], c.measure(), &out);
            return Ok(out);
        }
        let x = head.subject().clone();
        let i = self.part(c, &x)?;
        if matches!(head, Action::Server(..)) {
            return self.server(c, &head, i);
        }
        if c.parts[i].process.subject() == Some(&x) {
            self.principal(c, &head, i)
        } else {
            self.commute(c, i)
        }
    }

    fn part(&self, c: &MCutConfig, x: &Endpoint) -> Result<usize, MCutError> {
        c.part_index(x).ok_or_else(|| invalid(format!("no part on `{x}`")))
    }

    /// Commutes the first other part that is not yet a server.
    fn settle_others(&mut self, c: &MCutConfig, i: usize) -> Option<Result<StepOutcome, MCutError>> {
        let j = (0..c.parts.len()).find(|&j| j != i && !is_server_on(&c.parts[j]))?;
        Some(self.commute(c, j))
    }

    fn server(&mut self, c: &MCutConfig, head: &Action, i: usize) -> Result<StepOutcome, MCutError> {
        let part = &c.parts[i];
        let x = &part.endpoint;
        let needs_copy = match &part.process {
            Process::Client(y, _, q) if y == x => q.is_free(x),
            Process::Send(_, _, s, q) => s.is_free(x) && q.is_free(x),
            _ => false,
        };
        if matches!(&part.process, Process::Client(y, ..) if y == x) && !needs_copy {
            return self.principal(c, head, i);
        }
        if !part.process.is_free(x) || needs_copy {
            if let Some(r) = self.settle_others(c, i) {
                return r;
            }
            return if needs_copy { self.contract(c, i) } else { self.weaken(c, i) };
        }
        match self.commute(c, i) {
            Err(MCutError::Stuck(why)) => self.settle_others(c, i).unwrap_or(Err(MCutError::Stuck(why))),
            r => r,
        }
    }

    fn weaken(&mut self, c: &MCutConfig, i: usize) -> Result<StepOutcome, MCutError> {
        if !c.pending.is_empty() {
            return Err(stuck("messages in transit at a discarded server"));
        }
        let out = StepOutcome::Final(c.parts[i].process.clone());
        self.record(MCutCase::Weaken, vec![c.parts[i].endpoint.clone()], c.measure(), &out);
        Ok(out)
    }

    /// Splits off one use of `x` into a copy of the whole composition over renamed servers.
    fn contract(&mut self, c: &MCutConfig, i: usize) -> Result<StepOutcome, MCutError> {
        let part = &c.parts[i];
        let x = part.endpoint.clone();
        let xt = erased(part.ty(), &x)?;
        let x2 = self.fresh(&x);
        let split_off = match &part.process {
            Process::Client(y, u, q) if y == &x => Process::Client(x2.clone(), u.clone(), q.clone()),
            Process::Send(w, u, s, q) => Process::Send(w.clone(), u.clone(), s.clone(), Box::new(q.rename(&x, &x2))),
            _ => return Err(stuck("nothing to duplicate")),
        };
        let mut fwd = c.fwd.process.freshen_binders(&self.taken);
        for n in fwd.all_names() {
            self.taken.insert(n);
        }
        let mut ctx = c.fwd.context.clone();
        let mut parts = Vec::new();
        for (k, p) in c.parts.iter().enumerate() {
            let b = &p.endpoint;
            let b2 = if k == i { x2.clone() } else { self.fresh(b) };
            fwd = fwd.rename(b, &b2);
            ctx = ctx.rename_endpoint(b, &b2);
            parts.push(if k == i {
                Party::new(&x2, split_off.clone(), with(p.context.clone(), &x2, xt.clone()))
            } else {
                let body = p.process.freshen_binders(&self.taken);
                for n in body.all_names() {
                    self.taken.insert(n);
                }
                let renamed: CllContext = p
                    .context
                    .iter()
                    .map(|(e, t)| (if e == b { b2.clone() } else { e.clone() }, t.clone()))
                    .collect();
                Party::new(&b2, body.rename(b, &b2), renamed)
            });
        }
        let inner = rebound(Judged::new(fwd, ctx), vec![], parts);
        let before = c.measure();
        let result = self.nested(&inner)?;
        let rests: Vec<CllContext> = c.parts.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, p)| p.rest()).collect();
        let ctx = merge(std::iter::once(&part.context).chain(&rests));
        let mut next = c.clone();
        next.parts[i] = Party::new(&x, result, ctx);
        let out = StepOutcome::Next(next);
        self.record(MCutCase::Contract, vec![x, x2], before, &out);
        Ok(out)
    }

    fn principal(&mut self, c: &MCutConfig, head: &Action, i: usize) -> Result<StepOutcome, MCutError> {
        let part = &c.parts[i];
        let x = part.endpoint.clone();
        let pt = erased(part.ty(), &x)?;
        let fwd_ctx = tidy(c.fwd.context.clone());
        let before = c.measure();
        let mismatch = || stuck(format!("forwarder and part disagree on `{x}`"));
        let mut next = c.clone();
        let (case, names, out) = match (head, &c.fwd.process, &part.process, &pt) {
            (Action::Recv(..), Process::Recv(_, y, q), Process::Send(_, y2, s, r), Type::Tensor(a, b, _)) => {
                let n = self.fresh(y);
                let inst = apply(&fwd_ctx, &Action::Recv(x.clone(), n.clone()))?;
                let (sctx, rctx) = split(&part.rest(), s, r, y2);
                next.fwd = Judged::new(q.rename(y, &n), judged_premise(&inst.premises[0]));
                next.pending.push(Party::new(&n, s.rename(y2, &n), with(sctx, &n, (**a).clone())));
                next.parts[i] = Party::new(&x, (**r).clone(), with(rctx, &x, (**b).clone()));
                (
                    MCutCase::Tensor,
                    vec![x.clone(), n],
                    StepOutcome::Next(rebound(next.fwd, next.pending, next.parts)),
                )
            }
            (Action::Send(..), Process::Send(_, y, s, q), Process::Recv(_, y2, r), Type::Par(a, b, _)) => {
                let n = self.fresh(y);
                let s = s.rename(y, &n);
                let inst = apply(&fwd_ctx, &Action::Send(x.clone(), n.clone()))?;
                let sd = check_inferred(&s, &inst.premises[0])?;
                let gathered: Vec<Endpoint> = sd.context.entries.iter().map(|e| e.endpoint.clone()).filter(|e| e != &n).collect();
                let mut inner_parts = vec![Party::new(
                    &n,
                    r.rename(y2, &n),
                    with(with(part.rest(), &x, (**b).clone()), &n, (**a).clone()),
                )];
                for z in &gathered {
                    let p = c
                        .pending
                        .iter()
                        .find(|p| &p.endpoint == z)
                        .ok_or_else(|| invalid(format!("no pending process for `{z}`")))?;
                    inner_parts.push(p.clone());
                }
                let inner = rebound(Judged::new(s, sd.context), vec![], inner_parts);
                let result = self.nested(&inner)?;
                let rests: Vec<CllContext> = inner.parts.iter().map(Party::rest).collect();
                let ctx = with(merge(&rests), &x, (**b).clone());
                let ctx = without(&ctx, &n);
                next.pending.retain(|p| !gathered.contains(&p.endpoint));
                next.parts[i] = Party::new(&x, result, ctx);
                next.fwd = Judged::new((**q).clone(), judged_premise(&inst.premises[1]));
                let mut names = vec![x.clone(), n];
                names.extend(gathered);
                (MCutCase::Par, names, StepOutcome::Next(rebound(next.fwd, next.pending, next.parts)))
            }
            (Action::Case(_), Process::Case(_, ql, qr), Process::Inl(_, r) | Process::Inr(_, r), Type::Plus(a, b, _)) => {
                let left = matches!(part.process, Process::Inl(..));
                let inst = apply(&fwd_ctx, head)?;
                let k = usize::from(!left);
                let q = if left { ql } else { qr };
                next.fwd = Judged::new((**q).clone(), judged_premise(&inst.premises[k]));
                next.parts[i] = Party::new(
                    &x,
                    (**r).clone(),
                    with(part.context.clone(), &x, if left { (**a).clone() } else { (**b).clone() }),
                );
                (
                    MCutCase::Plus,
                    vec![x.clone()],
                    StepOutcome::Next(rebound(next.fwd, next.pending, next.parts)),
                )
            }
            (Action::Inl(_) | Action::Inr(_), Process::Inl(_, q) | Process::Inr(_, q), Process::Case(_, rl, rr), Type::With(a, b, _)) => {
                let left = matches!(head, Action::Inl(_));
                let inst = apply(&fwd_ctx, head)?;
                next.fwd = Judged::new((**q).clone(), judged_premise(&inst.premises[0]));
                let (r, t) = if left { (rl, a) } else { (rr, b) };
                next.parts[i] = Party::new(&x, (**r).clone(), with(part.context.clone(), &x, (**t).clone()));
                (
                    MCutCase::With,
                    vec![x.clone()],
                    StepOutcome::Next(rebound(next.fwd, next.pending, next.parts)),
                )
            }
            (Action::Wait(_), Process::Wait(_, q), Process::Close(_), Type::One(_)) => {
                let inst = apply(&fwd_ctx, head)?;
                next.fwd = Judged::new((**q).clone(), judged_premise(&inst.premises[0]));
                next.parts.remove(i);
                (
                    MCutCase::One,
                    vec![x.clone()],
                    StepOutcome::Next(rebound(next.fwd, next.pending, next.parts)),
                )
            }
            (Action::Close(_), _, Process::Wait(_, r), Type::Bot(_)) => {
                if c.parts.len() != 1 || !c.pending.is_empty() {
                    return Err(stuck("close with other components still present"));
                }
                (MCutCase::Bot, vec![x.clone()], StepOutcome::Final((**r).clone()))
            }
            (Action::Client(..), Process::Client(_, z, q), Process::Server(_, z2, r), Type::OfCourse(a, _)) => {
                let n = self.fresh(z);
                let inst = apply(&fwd_ctx, &Action::Client(x.clone(), n.clone()))?;
                next.fwd = Judged::new(q.rename(z, &n), judged_premise(&inst.premises[0]));
                next.parts[i] = Party::new(&n, r.rename(z2, &n), with(part.rest(), &n, (**a).clone()));
                (
                    MCutCase::Bang,
                    vec![x.clone(), n],
                    StepOutcome::Next(rebound(next.fwd, next.pending, next.parts)),
                )
            }
            (Action::Server(..), Process::Server(_, z, q), Process::Client(_, z2, r), Type::WhyNot(a, _)) => {
                let n = self.fresh(z);
                let inst = apply(&fwd_ctx, &Action::Server(x.clone(), n.clone()))?;
                next.fwd = Judged::new(q.rename(z, &n), judged_premise(&inst.premises[0]));
                next.parts[i] = Party::new(&n, r.rename(z2, &n), with(part.rest(), &n, (**a).clone()));
                (
                    MCutCase::Quest,
                    vec![x.clone(), n],
                    StepOutcome::Next(rebound(next.fwd, next.pending, next.parts)),
                )
            }
            _ => return Err(mismatch()),
        };
        self.record(case, names, before, &out);
        Ok(out)
    }

    /// Moves the head action of part `i`, which must act on a free endpoint, outside the composition.
    fn commute(&mut self, c: &MCutConfig, i: usize) -> Result<StepOutcome, MCutError> {
        let part = &c.parts[i];
        let x = &part.endpoint;
        let action = Action::of(&part.process).ok_or_else(|| stuck("part is not an action"))?;
        let w = action.subject().clone();
        if &w == x || c.bound.contains(&w) || matches!(action, Action::Link(..) | Action::Close(_)) {
            return Err(stuck(format!("part `{x}` cannot move its action on `{w}`")));
        }
        let wt = erased(lookup(&part.context, &w), &w)?;
        let mut others: BTreeSet<Endpoint> = c.fwd.process.all_names();
        for (k, p) in c
            .parts
            .iter()
            .enumerate()
            .chain(c.pending.iter().enumerate().map(|(k, p)| (k + c.parts.len(), p)))
        {
            if k != i {
                others.extend(p.process.all_names());
                others.extend(p.context.iter().map(|(e, _)| e.clone()));
            }
        }
        let binder = |u: &Endpoint, body: &Process, eng: &mut Engine| -> (Endpoint, Process) {
            if others.contains(u) {
                let n = eng.fresh(u);
                (n.clone(), body.rename(u, &n))
            } else {
                (u.clone(), body.clone())
            }
        };
        let rest = without(&part.context, &w);
        let replace = |proc: Process, ctx: CllContext| {
            let mut next = c.clone();
            next.parts[i] = Party::new(x, proc, ctx);
            next
        };
        let mismatch = || stuck(format!("`{w}` does not have the type its action needs"));
        let (rule, action, branches) = match (&part.process, &wt) {
            (Process::Wait(_, q), Type::Bot(_)) => (Rule::Bot, action, vec![Branch::Config(replace((**q).clone(), rest))]),
            (Process::Recv(_, u, q), Type::Par(a, b, _)) => {
                let (u, q) = binder(u, q, self);
                let ctx = with(with(rest, &w, (**b).clone()), &u, (**a).clone());
                (Rule::Par, Action::Recv(w.clone(), u), vec![Branch::Config(replace(q, ctx))])
            }
            (Process::Inl(_, q) | Process::Inr(_, q), Type::Plus(a, b, _)) => {
                let left = matches!(action, Action::Inl(_));
                let t = if left { a } else { b };
                let rule = if left { Rule::PlusL } else { Rule::PlusR };
                (
                    rule,
                    action,
                    vec![Branch::Config(replace((**q).clone(), with(rest, &w, (**t).clone())))],
                )
            }
            (Process::Case(_, l, r), Type::With(a, b, _)) => {
                let bl = replace((**l).clone(), with(rest.clone(), &w, (**a).clone()));
                let br = replace((**r).clone(), with(rest, &w, (**b).clone()));
                (Rule::With, action, vec![Branch::Config(bl), Branch::Config(br)])
            }
            (Process::Client(_, u, q), Type::WhyNot(a, _)) => {
                let (u, q) = binder(u, q, self);
                let ctx = if q.is_free(&w) { part.context.clone() } else { rest };
                (
                    Rule::Quest,
                    Action::Client(w.clone(), u.clone()),
                    vec![Branch::Config(replace(q, with(ctx, &u, (**a).clone())))],
                )
            }
            (Process::Server(_, u, q), Type::OfCourse(a, _)) => {
                let linear = c
                    .conclusion()
                    .iter()
                    .find(|(e, t)| e != &w && !matches!(t, Type::WhyNot(..)))
                    .map(|(e, _)| e.clone());
                if let Some(e) = linear {
                    return Err(stuck(format!("cannot promote past linear `{e}`")));
                }
                let (u, q) = binder(u, q, self);
                (
                    Rule::Bang,
                    Action::Server(w.clone(), u.clone()),
                    vec![Branch::Config(replace(q, with(rest, &u, (**a).clone())))],
                )
            }
            (Process::Send(_, u, s, q), Type::Tensor(a, b, _)) => {
                let (in_s, in_q) = (s.is_free(x), q.is_free(x));
                if in_s && in_q {
                    return Err(stuck(format!("`{x}` is used on both sides of a send")));
                }
                let (u, s) = binder(u, s, self);
                let branches = if in_s {
                    let sctx: CllContext = rest.iter().filter(|(e, _)| s.is_free(e) || !q.is_free(e)).cloned().collect();
                    vec![
                        Branch::Config(replace(s, with(sctx, &u, (**a).clone()))),
                        Branch::Plain((**q).clone()),
                    ]
                } else {
                    let qctx: CllContext = rest.iter().filter(|(e, _)| q.is_free(e) || !s.is_free(e)).cloned().collect();
                    vec![
                        Branch::Plain(s),
                        Branch::Config(replace((**q).clone(), with(qctx, &w, (**b).clone()))),
                    ]
                };
                (Rule::Tensor, Action::Send(w.clone(), u), branches)
            }
            _ => return Err(mismatch()),
        };
        let out = StepOutcome::Commuted(action, branches);
        self.record(MCutCase::Commute(rule), vec![x.clone(), w], c.measure(), &out);
        Ok(out)
    }
}
