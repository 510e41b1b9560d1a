use super::distr::{hole_conn, retarget};
use super::{CutError, CutRedex, Judged, Measure, TraceStep};
use crate::checker::rules::{apply, tidy, Action};
use crate::checker::{check_forwarder, check_inferred};
use crate::contexts::{ContextEntry, QueueItem, Typing, TypingContext};
use crate::syntax::{fresh_name, Conn, Endpoint, Process, Targets, Type};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub enum BetaRule {
    /// Cut against a link.
    B1,
    /// Cut between `close` and `wait`.
    B2,
    /// Multiplicative key case.
    K,
    KWith,
    KBang,
    /// Commuting a `wait` past the cut.
    C1,
    /// Commuting a receive.
    C2,
    /// Commuting a send.
    C3,
    CPlus,
    CWith,
    CBang,
    CQuest,
}

impl BetaRule {
    pub fn tag(self) -> &'static str {
        match self {
            BetaRule::B1 => "B1",
            BetaRule::B2 => "B2",
            BetaRule::K => "K",
            BetaRule::KWith => "K&",
            BetaRule::KBang => "K!",
            BetaRule::C1 => "C1",
            BetaRule::C2 => "C2",
            BetaRule::C3 => "C3",
            BetaRule::CPlus => "C⊕",
            BetaRule::CWith => "C&",
            BetaRule::CBang => "C!",
            BetaRule::CQuest => "C?",
        }
    }
}

/// A continuation of a commuted action: untouched, or a smaller cut with its target context.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Premise {
    Plain(Process),
    Cut(CutRedex, TypingContext),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Reduct {
    /// The cut is gone.
    Done(Process),
    /// A new cut with the same target context.
    Same(CutRedex),
    /// An action moved above the cut.
    Wrap(Action, Vec<Premise>),
}

impl Reduct {
    pub fn process(&self) -> Process {
        match self {
            Reduct::Done(p) => p.clone(),
            Reduct::Same(r) => r.term(),
            Reduct::Wrap(act, ps) => act.build(
                ps.iter()
                    .map(|p| match p {
                        Premise::Plain(p) => p.clone(),
                        Premise::Cut(r, _) => r.term(),
                    })
                    .collect(),
            ),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BetaStep {
    pub rule: BetaRule,
    pub reduct: Reduct,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Reduction {
    pub process: Process,
    pub trace: Vec<TraceStep>,
}

fn stuck(why: &str) -> CutError {
    CutError::Stuck(why.to_string())
}

fn children(p: &Process) -> Vec<Process> {
    match p {
        Process::Send(_, _, a, b) | Process::Case(_, a, b) => vec![(**a).clone(), (**b).clone()],
        Process::Wait(_, q)
        | Process::Recv(_, _, q)
        | Process::Inl(_, q)
        | Process::Inr(_, q)
        | Process::Server(_, _, q)
        | Process::Client(_, _, q) => vec![(**q).clone()],
        _ => vec![],
    }
}

fn carries(g: &TypingContext, c: &Endpoint) -> bool {
    g.entries
        .iter()
        .flat_map(|e| &e.queue.items)
        .any(|i| matches!(i, QueueItem::Msg { payload, .. } if payload.iter().any(|(v, _)| v == c)))
}

/// Every way to send each item of `psi` (one receiver per payload entry) to the endpoints in `us`.
fn plans(psi: &[QueueItem], us: &[Endpoint]) -> Vec<Vec<Vec<Endpoint>>> {
    let mut out: Vec<Vec<Vec<Endpoint>>> = vec![vec![]];
    for item in psi {
        let arity = match item {
            QueueItem::Msg { payload, .. } => payload.len(),
            _ => 1,
        };
        let mut per: Vec<Vec<Endpoint>> = vec![vec![]];
        for _ in 0..arity {
            per = per
                .into_iter()
                .flat_map(|pre| us.iter().map(move |u| [pre.clone(), vec![u.clone()]].concat()))
                .collect();
        }
        out = out
            .into_iter()
            .flat_map(|pre| per.iter().map(move |c| [pre.clone(), vec![c.clone()]].concat()))
            .collect();
    }
    out
}

/// The `y ↝ ũ` rewriting: moves the queue of the terminated endpoint `y` onto fresh terminated
/// endpoints `us` following `plan`, and checks that `q` is typed in the resulting context.
pub fn unit_redistribute(q: &Judged, y: &Endpoint, us: &[Endpoint], plan: &[Vec<Endpoint>]) -> Result<Judged, CutError> {
    let mismatch = |why: String| CutError::PlanMismatch(why);
    let mut ctx = q.context.clone();
    let entry = ctx.remove(y).ok_or_else(|| mismatch(format!("`{y}` is not in the context")))?;
    if entry.typing != Typing::Terminated {
        return Err(mismatch(format!("`{y}` is not terminated")));
    }
    let mut items = entry.queue.items;
    let Some(QueueItem::Star(v)) = items.pop() else {
        return Err(mismatch(format!("`{y}` does not end with a closing token")));
    };
    if plan.len() != items.len() {
        return Err(mismatch(format!("{} choices for {} items", plan.len(), items.len())));
    }
    for u in us {
        if ctx.get(u).is_some() {
            return Err(mismatch(format!("`{u}` already occurs")));
        }
        ctx.push(ContextEntry {
            endpoint: u.clone(),
            queue: Default::default(),
            typing: Typing::Terminated,
        });
    }
    for (item, choice) in items.iter().zip(plan) {
        if choice.iter().any(|c| !us.contains(c)) {
            return Err(mismatch("receiver outside the gathered set".into()));
        }
        let label = item.target().clone();
        let receivers: Targets = choice.iter().cloned().collect();
        retarget(&mut ctx, &label, hole_conn(item), y, &receivers).map_err(|e| mismatch(e.to_string()))?;
        match item {
            QueueItem::Msg { payload, .. } => {
                if payload.len() != choice.len() {
                    return Err(mismatch("payload arity".into()));
                }
                for r in &receivers {
                    let block = payload
                        .iter()
                        .zip(choice)
                        .filter(|(_, c)| *c == r)
                        .map(|(p, _)| p.clone())
                        .collect();
                    ctx.get_mut(r).unwrap().queue.push(QueueItem::Msg {
                        target: label.clone(),
                        payload: block,
                    });
                }
            }
            token => ctx.get_mut(&choice[0]).unwrap().queue.push(token.clone()),
        }
    }
    for u in us {
        ctx.get_mut(u).unwrap().queue.push(QueueItem::Star(v.clone()));
    }
    let all: Targets = us.iter().cloned().collect();
    retarget(&mut ctx, &v, Conn::One, y, &all).map_err(|e| mismatch(e.to_string()))?;
    if ctx.all_names().contains(y) {
        return Err(mismatch(format!("`{y}` is still referenced")));
    }
    let process = match us {
        [only] => q.process.rename(y, only),
        _ => q.process.clone(),
    };
    check_forwarder(&process, &ctx).map_err(|e| mismatch(e.to_string()))?;
    Ok(Judged::new(process, tidy(ctx)))
}

struct Engine {
    fuel: usize,
    trace: Vec<TraceStep>,
    spawned: Vec<Measure>,
}

impl Engine {
    fn new(fuel: usize) -> Engine {
        Engine {
            fuel,
            trace: Vec::new(),
            spawned: Vec::new(),
        }
    }

    fn reduce(&mut self, r: &CutRedex, gamma: &TypingContext) -> Result<Process, CutError> {
        if self.fuel == 0 {
            return Err(CutError::FuelExhausted(self.trace.clone()));
        }
        self.fuel -= 1;
        let saved = std::mem::take(&mut self.spawned);
        let at = self.trace.len();
        let st = self.step(r, gamma);
        let mut after = std::mem::replace(&mut self.spawned, saved);
        let st = st?;
        match &st.reduct {
            Reduct::Done(_) => {}
            Reduct::Same(r2) => after.push(r2.measure()),
            Reduct::Wrap(_, ps) => after.extend(ps.iter().filter_map(|p| match p {
                Premise::Cut(r2, _) => Some(r2.measure()),
                Premise::Plain(_) => None,
            })),
        }
        self.trace.insert(
            at,
            TraceStep {
                rule: st.rule,
                before: r.measure(),
                after,
            },
        );
        match st.reduct {
            Reduct::Done(p) => Ok(p),
            Reduct::Same(r2) => self.reduce(&r2, gamma),
            Reduct::Wrap(act, ps) => {
                let mut kids = Vec::new();
                for p in ps {
                    kids.push(match p {
                        Premise::Plain(p) => p,
                        Premise::Cut(r2, g2) => self.reduce(&r2, &g2)?,
                    });
                }
                Ok(act.build(kids))
            }
        }
    }

    fn step(&mut self, r: &CutRedex, gamma: &TypingContext) -> Result<BetaStep, CutError> {
        let pa = Action::of(&r.left.process).ok_or_else(|| stuck("left side is not a forwarder"))?;
        let qa = Action::of(&r.right.process).ok_or_else(|| stuck("right side is not a forwarder"))?;
        if let Some(s) = self.base(r, &pa, &qa, gamma)? {
            return Ok(s);
        }
        if let Some(s) = self.base(&r.swapped(), &qa, &pa, gamma)? {
            return Ok(s);
        }
        if pa.subject() == &r.x && qa.subject() == &r.y {
            let st = self.key(r, &pa, &qa)?;
            if let Reduct::Same(r2) = &st.reduct {
                if !r2.admits(gamma)? {
                    return Err(CutError::NotInConclusions);
                }
            }
            return Ok(st);
        }
        let mut err = stuck("no commutation applies");
        if qa.subject() != &r.y {
            match self.commute(r, gamma) {
                Ok(s) => return Ok(s),
                Err(e) => err = e,
            }
        }
        if pa.subject() != &r.x {
            match self.commute(&r.swapped(), gamma) {
                Ok(s) => return Ok(s),
                Err(e) => err = e,
            }
        }
        Err(err)
    }

    /// B1 and B2 with the left side as the link or `close`.
    fn base(&mut self, r: &CutRedex, pa: &Action, qa: &Action, gamma: &TypingContext) -> Result<Option<BetaStep>, CutError> {
        match (pa, qa) {
            (Action::Link(a, b), _) if a == &r.x || b == &r.x => {
                let z = if a == &r.x { b } else { a };
                let p = r.right.process.rename(&r.y, z);
                Ok(Some(BetaStep {
                    rule: BetaRule::B1,
                    reduct: Reduct::Done(p),
                }))
            }
            (Action::Close(x), Action::Wait(y)) if x == &r.x && y == &r.y => {
                let Some(Type::One(us)) = r.left.context.type_of(x) else {
                    return Err(stuck("close on a non-unit"));
                };
                let us: Vec<Endpoint> = us.iter().cloned().collect();
                let Process::Wait(_, q) = &r.right.process else { unreachable!() };
                let inst = apply(&r.right.context, qa)?;
                let qj = Judged::new((**q).clone(), inst.premises[0].clone());
                let mut psi = qj.context.get(y).map(|e| e.queue.items.clone()).unwrap_or_default();
                psi.pop();
                let target = tidy(gamma.clone());
                for plan in plans(&psi, &us) {
                    if let Ok(j) = unit_redistribute(&qj, y, &us, &plan) {
                        if j.context.equivalent(&target) {
                            return Ok(Some(BetaStep {
                                rule: BetaRule::B2,
                                reduct: Reduct::Done(j.process),
                            }));
                        }
                    }
                }
                Err(CutError::PlanMismatch("no redistribution reaches the target context".into()))
            }
            _ => Ok(None),
        }
    }

    fn key(&mut self, r: &CutRedex, pa: &Action, qa: &Action) -> Result<BetaStep, CutError> {
        match (pa, qa) {
            (Action::Send(_, a), Action::Recv(_, c)) => {
                let (Process::Send(_, _, p1, p2), Process::Recv(_, _, rr)) = (&r.left.process, &r.right.process) else {
                    unreachable!()
                };
                let ip = apply(&r.left.context, pa)?;
                let iq = apply(&r.right.context, qa)?;
                let s = self.cut_in_box(
                    &Judged::new((**p1).clone(), ip.premises[0].clone()),
                    &Judged::new((**rr).clone(), iq.premises[0].clone()),
                    a,
                    c,
                )?;
                let next = CutRedex {
                    x: r.x.clone(),
                    left: Judged::new((**p2).clone(), ip.premises[1].clone()),
                    y: r.y.clone(),
                    right: s,
                };
                Ok(BetaStep {
                    rule: BetaRule::K,
                    reduct: Reduct::Same(next),
                })
            }
            (Action::Recv(..), Action::Send(..))
            | (Action::Inl(_) | Action::Inr(_), Action::Case(_))
            | (Action::Client(..), Action::Server(..)) => self.key(&r.swapped(), qa, pa),
            (Action::Case(_), Action::Inl(_) | Action::Inr(_)) => {
                let i = usize::from(matches!(qa, Action::Inr(_)));
                let (Process::Case(_, pl, pr), Process::Inl(_, rr) | Process::Inr(_, rr)) = (&r.left.process, &r.right.process) else {
                    unreachable!()
                };
                let ip = apply(&r.left.context, pa)?;
                let iq = apply(&r.right.context, qa)?;
                let branch = if i == 0 { pl } else { pr };
                let next = CutRedex {
                    x: r.x.clone(),
                    left: Judged::new((**branch).clone(), ip.premises[i].clone()),
                    y: r.y.clone(),
                    right: Judged::new((**rr).clone(), iq.premises[0].clone()),
                };
                Ok(BetaStep {
                    rule: BetaRule::KWith,
                    reduct: Reduct::Same(next),
                })
            }
            (Action::Server(_, a), Action::Client(_, b)) => {
                let (Process::Server(_, _, p), Process::Client(_, _, q)) = (&r.left.process, &r.right.process) else {
                    unreachable!()
                };
                let ip = apply(&r.left.context, pa)?;
                let iq = apply(&r.right.context, qa)?;
                let next = CutRedex {
                    x: a.clone(),
                    left: Judged::new((**p).clone(), ip.premises[0].clone()),
                    y: b.clone(),
                    right: Judged::new((**q).clone(), iq.premises[0].clone()),
                };
                Ok(BetaStep {
                    rule: BetaRule::KBang,
                    reduct: Reduct::Same(next),
                })
            }
            _ => Err(stuck("the two cut endpoints do not interact")),
        }
    }

    /// Moves the head action of the right side above the cut.
    fn commute(&mut self, r: &CutRedex, gamma: &TypingContext) -> Result<BetaStep, CutError> {
        let act = Action::of(&r.right.process).ok_or_else(|| stuck("not a forwarder"))?;
        let rule = match act {
            Action::Wait(_) => BetaRule::C1,
            Action::Recv(..) => BetaRule::C2,
            Action::Send(..) => BetaRule::C3,
            Action::Inl(_) | Action::Inr(_) => BetaRule::CPlus,
            Action::Case(_) => BetaRule::CWith,
            Action::Server(..) => BetaRule::CBang,
            Action::Client(..) => BetaRule::CQuest,
            Action::Link(..) | Action::Close(_) => return Err(stuck("an axiom cannot commute")),
        };
        let iq = apply(&r.right.context, &act)?;
        let ig = apply(gamma, &act)?;
        let mut premises = Vec::new();
        for (i, kid) in children(&r.right.process).into_iter().enumerate() {
            if matches!(act, Action::Send(..)) && i == 0 {
                check_inferred(&kid, &ig.premises[0])?;
                premises.push(Premise::Plain(kid));
                continue;
            }
            let sub = CutRedex {
                x: r.x.clone(),
                left: r.left.clone(),
                y: r.y.clone(),
                right: Judged::new(kid, iq.premises[i].clone()),
            };
            let g0 = tidy(ig.premises[i].clone());
            if !sub.admits(&g0)? {
                return Err(CutError::NotInConclusions);
            }
            premises.push(Premise::Cut(sub, g0));
        }
        Ok(BetaStep {
            rule,
            reduct: Reduct::Wrap(act, premises),
        })
    }

    /// Replaces the boxed payload `c` inside `r` by the payload context of `p` (cut on `a`).
    fn cut_in_box(&mut self, p: &Judged, r: &Judged, a: &Endpoint, c: &Endpoint) -> Result<Judged, CutError> {
        let delta: Vec<(Endpoint, Type)> = p
            .context
            .entries
            .iter()
            .filter(|e| &e.endpoint != a)
            .filter_map(|e| e.typing.active().map(|t| (e.endpoint.clone(), t.erase())))
            .collect();
        let mut ctx = r.context.clone();
        let mut found = false;
        'outer: for e in &mut ctx.entries {
            for item in &mut e.queue.items {
                if let QueueItem::Msg { payload, .. } = item {
                    if let Some(i) = payload.iter().position(|(v, _)| v == c) {
                        payload.splice(i..=i, delta.clone());
                        found = true;
                        break 'outer;
                    }
                }
            }
        }
        if !found {
            return Err(CutError::PayloadNotFound(c.clone()));
        }
        let process = match &p.process {
            Process::Link(u, v) if u == a => r.process.rename(c, v),
            Process::Link(u, v) if v == a => r.process.rename(c, u),
            _ => self.splice(&r.process, &r.context, p, a, c)?,
        };
        Ok(Judged::new(process, ctx))
    }

    fn splice(&mut self, q: &Process, g: &TypingContext, p: &Judged, a: &Endpoint, c: &Endpoint) -> Result<Process, CutError> {
        let act = Action::of(q).ok_or_else(|| stuck("not a forwarder"))?;
        let inst = apply(g, &act)?;
        if let Process::Send(u, v, s, t) = q {
            if s.is_free(c) {
                let left = &inst.premises[0];
                let same_type = matches!((left.type_of(v), p.context.type_of(a)), (Some(d), Some(ta)) if d.erased_eq(ta));
                if p.context.entries.len() == 2 && left.entries.len() == 2 && same_type {
                    let mut payload = p.process.clone();
                    let mut binder = a.clone();
                    if t.is_free(a) || a == u {
                        let taken = t.all_names();
                        binder = fresh_name(a, |e| taken.contains(e) || e == u || payload.all_names().contains(e));
                        payload = payload.rename(a, &binder);
                    }
                    return Ok(Process::Send(u.clone(), binder, Box::new(payload), t.clone()));
                }
                let pj = Judged::new(p.process.clone(), check_inferred(&p.process, &p.context)?.context);
                let sj = Judged::new((**s).clone(), check_inferred(s, left)?.context);
                let sub = CutRedex {
                    x: a.clone(),
                    left: pj,
                    y: c.clone(),
                    right: sj,
                };
                let target = sub
                    .conclusions()?
                    .into_iter()
                    .next()
                    .ok_or_else(|| stuck("the payload cut has no conclusion"))?;
                self.spawned.push(sub.measure());
                let s2 = self.reduce(&sub, &target)?;
                return Ok(Process::Send(u.clone(), v.clone(), Box::new(s2), t.clone()));
            }
        }
        let mut kids = Vec::new();
        for (kid, prem) in children(q).into_iter().zip(&inst.premises) {
            kids.push(if carries(prem, c) { self.splice(&kid, prem, p, a, c)? } else { kid });
        }
        Ok(act.build(kids))
    }
}

/// One β-step on the cut. Without a target, the first conclusion of the cut is used.
pub fn beta_step(r: &CutRedex, gamma: Option<&TypingContext>) -> Result<BetaStep, CutError> {
    let g = match gamma {
        Some(g) => g.clone(),
        None => r.conclusions()?.into_iter().next().ok_or(CutError::NotInConclusions)?,
    };
    Engine::new(usize::MAX).step(r, &g)
}

/// `p ⊢ Δ, a:A` spliced into `q`, whose context holds a box carrying `c : ~A`.
pub fn cut_in_box(p: &Judged, q: &Judged, a: &Endpoint, c: &Endpoint) -> Result<Judged, CutError> {
    Engine::new(usize::MAX).cut_in_box(p, q, a, c)
}

/// Renames bound names so neither side captures a name of the other.
fn apart(r: &CutRedex) -> CutRedex {
    let mut avoid = r.right.context.all_names();
    avoid.extend(r.right.process.all_names());
    let left = r.left.process.freshen_binders(&avoid);
    let mut avoid = r.left.context.all_names();
    avoid.extend(left.all_names());
    let right = r.right.process.freshen_binders(&avoid);
    CutRedex {
        x: r.x.clone(),
        left: Judged::new(left, r.left.context.clone()),
        y: r.y.clone(),
        right: Judged::new(right, r.right.context.clone()),
    }
}

/// Eliminates the cut, realising the conclusion `gamma`.
pub fn reduce_cut(r: &CutRedex, gamma: &TypingContext, fuel: Option<usize>) -> Result<Reduction, CutError> {
    let r = apart(r);
    if !r.admits(gamma)? {
        return Err(CutError::NotInConclusions);
    }
    let fuel = fuel.unwrap_or(4 * (r.left.size() + r.right.size()));
    let mut engine = Engine::new(fuel);
    let process = engine.reduce(&r, gamma)?;
    if !process.is_cut_free() {
        return Err(stuck("a cut survived"));
    }
    check_forwarder(&process, gamma)?;
    Ok(Reduction {
        process,
        trace: engine.trace,
    })
}
