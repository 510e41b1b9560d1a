//! The forwarder rules as functions from a conclusion context to premise contexts.

use super::{CheckError, Rule};
use crate::contexts::{ContextEntry, Queue, QueueItem, Typing, TypingContext};
use crate::syntax::{Endpoint, Process, Type};

/// The head action of a forwarder term, with the names it binds.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Action {
    Link(Endpoint, Endpoint),
    Close(Endpoint),
    Wait(Endpoint),
    Recv(Endpoint, Endpoint),
    Send(Endpoint, Endpoint),
    Inl(Endpoint),
    Inr(Endpoint),
    Case(Endpoint),
    Server(Endpoint, Endpoint),
    Client(Endpoint, Endpoint),
}

impl Action {
    pub fn of(p: &Process) -> Option<Action> {
        Some(match p {
            Process::Link(x, y) => Action::Link(x.clone(), y.clone()),
            Process::Close(x) => Action::Close(x.clone()),
            Process::Wait(x, _) => Action::Wait(x.clone()),
            Process::Recv(x, y, _) => Action::Recv(x.clone(), y.clone()),
            Process::Send(x, y, _, _) => Action::Send(x.clone(), y.clone()),
            Process::Inl(x, _) => Action::Inl(x.clone()),
            Process::Inr(x, _) => Action::Inr(x.clone()),
            Process::Case(x, _, _) => Action::Case(x.clone()),
            Process::Server(x, y, _) => Action::Server(x.clone(), y.clone()),
            Process::Client(x, y, _) => Action::Client(x.clone(), y.clone()),
            Process::Cut { .. } | Process::MCut(_) => return None,
        })
    }

    /// Rebuilds a term from this action and its continuations, in premise order.
    pub fn build(&self, mut kids: Vec<Process>) -> Process {
        let mut next = || Box::new(kids.remove(0));
        match self {
            Action::Link(x, y) => Process::Link(x.clone(), y.clone()),
            Action::Close(x) => Process::Close(x.clone()),
            Action::Wait(x) => Process::Wait(x.clone(), next()),
            Action::Recv(x, y) => Process::Recv(x.clone(), y.clone(), next()),
            Action::Send(x, y) => {
                let s = next();
                Process::Send(x.clone(), y.clone(), s, next())
            }
            Action::Inl(x) => Process::Inl(x.clone(), next()),
            Action::Inr(x) => Process::Inr(x.clone(), next()),
            Action::Case(x) => {
                let l = next();
                Process::Case(x.clone(), l, next())
            }
            Action::Server(x, y) => Process::Server(x.clone(), y.clone(), next()),
            Action::Client(x, y) => Process::Client(x.clone(), y.clone(), next()),
        }
    }

    pub fn subject(&self) -> &Endpoint {
        match self {
            Action::Link(x, _)
            | Action::Close(x)
            | Action::Wait(x)
            | Action::Recv(x, _)
            | Action::Send(x, _)
            | Action::Inl(x)
            | Action::Inr(x)
            | Action::Case(x)
            | Action::Server(x, _)
            | Action::Client(x, _) => x,
        }
    }
}

/// A rule instance read bottom-up. For ⊗ the first premise is the gathered payload context,
/// whose annotations are not fixed by the conclusion.
#[derive(Clone, Debug)]
pub struct Instance {
    pub rule: Rule,
    pub premises: Vec<TypingContext>,
}

fn mismatch(x: &Endpoint, expected: &str) -> CheckError {
    CheckError::RuleMismatch {
        endpoint: x.clone(),
        expected: expected.to_string(),
    }
}

fn active<'a>(g: &'a TypingContext, x: &Endpoint, expected: &str) -> Result<&'a Type, CheckError> {
    match g.get(x) {
        None => Err(CheckError::UnknownEndpoint(x.clone())),
        Some(e) => e.typing.active().ok_or_else(|| mismatch(x, expected)),
    }
}

fn require_member(g: &TypingContext, x: &Endpoint, u: &Endpoint) -> Result<(), CheckError> {
    if u == x || g.get(u).is_none() {
        return Err(CheckError::UnknownEndpoint(u.clone()));
    }
    Ok(())
}

fn require_fresh(g: &TypingContext, y: &Endpoint) -> Result<(), CheckError> {
    let clash = g.entries.iter().any(|e| {
        &e.endpoint == y
            || e.queue.items.iter().any(|i| match i {
                QueueItem::Msg { payload, .. } => payload.iter().any(|(v, _)| v == y),
                _ => false,
            })
    });
    if clash {
        Err(CheckError::NameClash(y.clone()))
    } else {
        Ok(())
    }
}

fn set_type(g: &mut TypingContext, x: &Endpoint, t: Type) {
    g.get_mut(x).expect("endpoint present").typing = Typing::Active(t);
}

/// Drops terminated entries whose queues have drained.
pub fn tidy(mut g: TypingContext) -> TypingContext {
    g.entries.retain(|e| !(e.typing == Typing::Terminated && e.queue.is_empty()));
    g
}

/// Pops the first item labelled `x` from `holder`'s queue if `accept` holds for it.
fn pop_head(
    g: &mut TypingContext,
    holder: &Endpoint,
    x: &Endpoint,
    want: &str,
    accept: impl Fn(&QueueItem) -> bool,
) -> Result<QueueItem, CheckError> {
    let entry = g.get_mut(holder).ok_or_else(|| CheckError::UnknownEndpoint(holder.clone()))?;
    match entry.queue.first_for(x) {
        Some(i) if accept(&entry.queue.items[i]) => Ok(entry.queue.remove(i)),
        _ => Err(CheckError::QueueHeadMismatch {
            endpoint: x.clone(),
            holder: holder.clone(),
            expected: want.to_string(),
        }),
    }
}

pub fn apply(g: &TypingContext, action: &Action) -> Result<Instance, CheckError> {
    let x = action.subject();
    match action {
        Action::Link(x, y) => {
            let (tx, ty) = (active(g, x, "atom")?, active(g, y, "atom")?);
            if g.entries.len() != 2 || x == y {
                return Err(CheckError::ContextShape(format!(
                    "axiom on `{x}`, `{y}` needs exactly those two endpoints"
                )));
            }
            if !g.entries.iter().all(|e| e.queue.is_empty()) {
                return Err(CheckError::LeftoverQueue(x.clone()));
            }
            let dual_atoms = matches!((tx, ty), (Type::Atom(a), Type::DualAtom(b)) | (Type::DualAtom(a), Type::Atom(b)) if a == b);
            if !dual_atoms {
                return Err(mismatch(x, "dual atoms"));
            }
            Ok(Instance {
                rule: Rule::Ax,
                premises: vec![],
            })
        }
        Action::Close(_) => {
            let Type::One(us) = active(g, x, "1")? else {
                return Err(mismatch(x, "1"));
            };
            if us.is_empty() {
                return Err(CheckError::NonEmptyTargetViolation(x.clone()));
            }
            if !g.get(x).unwrap().queue.is_empty() {
                return Err(CheckError::LeftoverQueue(x.clone()));
            }
            for e in g.entries.iter().filter(|e| &e.endpoint != x) {
                if !us.contains(&e.endpoint) {
                    return Err(CheckError::ContextShape(format!("`{}` is not gathered by `{x}`", e.endpoint)));
                }
                if e.typing != Typing::Terminated {
                    return Err(mismatch(&e.endpoint, "terminated"));
                }
                if e.queue.items != [QueueItem::Star(x.clone())] {
                    return Err(CheckError::LeftoverQueue(e.endpoint.clone()));
                }
            }
            if let Some(u) = us.iter().find(|u| g.get(u).is_none()) {
                return Err(CheckError::UnknownEndpoint(u.clone()));
            }
            Ok(Instance {
                rule: Rule::One,
                premises: vec![],
            })
        }
        Action::Wait(_) => {
            let Type::Bot(Some(u)) = active(g, x, "bot")? else {
                return Err(mismatch(x, "annotated bot"));
            };
            require_member(g, x, u)?;
            let mut p = g.clone();
            let e = p.get_mut(x).unwrap();
            e.typing = Typing::Terminated;
            e.queue.push(QueueItem::Star(u.clone()));
            Ok(Instance {
                rule: Rule::Bot,
                premises: vec![p],
            })
        }
        Action::Recv(_, y) => {
            let Type::Par(a, b, Some(u)) = active(g, x, "par")? else {
                return Err(mismatch(x, "annotated par"));
            };
            require_member(g, x, u)?;
            require_fresh(g, y)?;
            let mut p = g.clone();
            p.get_mut(x).unwrap().queue.push(QueueItem::Msg {
                target: u.clone(),
                payload: vec![(y.clone(), (**a).clone())],
            });
            set_type(&mut p, x, (**b).clone());
            Ok(Instance {
                rule: Rule::Par,
                premises: vec![p],
            })
        }
        Action::Send(_, y) => {
            let Type::Tensor(a, b, us) = active(g, x, "tensor")? else {
                return Err(mismatch(x, "tensor"));
            };
            if us.is_empty() {
                return Err(CheckError::NonEmptyTargetViolation(x.clone()));
            }
            let mut right = g.clone();
            let mut gathered = Vec::new();
            for u in us {
                require_member(g, x, u)?;
                match pop_head(&mut right, u, x, "message", |i| matches!(i, QueueItem::Msg { .. }))? {
                    QueueItem::Msg { payload, .. } => gathered.extend(payload),
                    _ => unreachable!(),
                }
            }
            if gathered.iter().any(|(v, _)| v == y) {
                return Err(CheckError::NameClash(y.clone()));
            }
            gathered.push((y.clone(), (**a).erase()));
            let left = TypingContext::from_cll(&gathered.iter().map(|(v, t)| (v.clone(), t.erase())).collect::<Vec<_>>());
            set_type(&mut right, x, (**b).clone());
            Ok(Instance {
                rule: Rule::Tensor,
                premises: vec![left, tidy(right)],
            })
        }
        Action::Inl(_) | Action::Inr(_) => {
            let left = matches!(action, Action::Inl(_));
            let Type::Plus(a, b, Some(z)) = active(g, x, "plus")? else {
                return Err(mismatch(x, "annotated plus"));
            };
            require_member(g, x, z)?;
            let mut p = g.clone();
            if left {
                pop_head(&mut p, z, x, "L", |i| matches!(i, QueueItem::Left(_)))?;
            } else {
                pop_head(&mut p, z, x, "R", |i| matches!(i, QueueItem::Right(_)))?;
            }
            set_type(&mut p, x, if left { (**a).clone() } else { (**b).clone() });
            Ok(Instance {
                rule: if left { Rule::PlusL } else { Rule::PlusR },
                premises: vec![tidy(p)],
            })
        }
        Action::Case(_) => {
            let Type::With(a, b, us) = active(g, x, "with")? else {
                return Err(mismatch(x, "with"));
            };
            if us.is_empty() {
                return Err(CheckError::NonEmptyTargetViolation(x.clone()));
            }
            for u in us {
                require_member(g, x, u)?;
            }
            let branch = |t: &Type, tok: fn(Endpoint) -> QueueItem| {
                let mut p = g.clone();
                let e = p.get_mut(x).unwrap();
                for u in us {
                    e.queue.push(tok(u.clone()));
                }
                set_type(&mut p, x, t.clone());
                p
            };
            Ok(Instance {
                rule: Rule::With,
                premises: vec![branch(a, QueueItem::Left), branch(b, QueueItem::Right)],
            })
        }
        Action::Client(_, y) => {
            let Type::WhyNot(a, Some(z)) = active(g, x, "why-not")? else {
                return Err(mismatch(x, "annotated why-not"));
            };
            require_member(g, x, z)?;
            if y != x {
                require_fresh(g, y)?;
            }
            let mut p = g.clone();
            pop_head(&mut p, z, x, "?", |i| matches!(i, QueueItem::Query(_)))?;
            set_type(&mut p, x, (**a).clone());
            Ok(Instance {
                rule: Rule::Quest,
                premises: vec![tidy(p).rename_endpoint(x, y)],
            })
        }
        Action::Server(_, y) => {
            let Type::OfCourse(a, us) = active(g, x, "of-course")? else {
                return Err(mismatch(x, "of-course"));
            };
            if us.is_empty() {
                return Err(CheckError::NonEmptyTargetViolation(x.clone()));
            }
            if y != x {
                require_fresh(g, y)?;
            }
            for e in &g.entries {
                if !e.queue.is_empty() {
                    return Err(CheckError::LeftoverQueue(e.endpoint.clone()));
                }
                if &e.endpoint == x {
                    continue;
                }
                if !matches!(e.typing, Typing::Active(Type::WhyNot(..))) {
                    return Err(mismatch(&e.endpoint, "why-not"));
                }
                if !us.contains(&e.endpoint) {
                    return Err(CheckError::ContextShape(format!("`{}` is not served by `{x}`", e.endpoint)));
                }
            }
            if let Some(u) = us.iter().find(|u| g.get(u).is_none() || *u == x) {
                return Err(CheckError::UnknownEndpoint(u.clone()));
            }
            let mut p = g.clone();
            let e = p.get_mut(x).unwrap();
            e.queue = Queue::new(us.iter().map(|u| QueueItem::Query(u.clone())).collect());
            e.typing = Typing::Active((**a).clone());
            Ok(Instance {
                rule: Rule::Bang,
                premises: vec![p.rename_endpoint(x, y)],
            })
        }
    }
}

/// Actions that could fire on `x` in `g`, choosing names for binders with `fresh`.
/// Returns `None` when the rule for `x`'s connective is not enabled.
pub fn enabled(g: &TypingContext, x: &Endpoint, fresh: &Endpoint) -> Option<Action> {
    let ContextEntry {
        typing: Typing::Active(t), ..
    } = g.get(x)?
    else {
        return None;
    };
    let holder_head =
        |z: &Option<Endpoint>| -> Option<QueueItem> { z.as_ref().and_then(|z| g.get(z)).and_then(|e| e.queue.head_for(x)).cloned() };
    match t {
        Type::Atom(_) | Type::DualAtom(_) => {
            let other = g.entries.iter().find(|e| &e.endpoint != x)?;
            (g.entries.len() == 2).then(|| Action::Link(x.clone(), other.endpoint.clone()))
        }
        Type::One(_) => Some(Action::Close(x.clone())),
        Type::Bot(_) => Some(Action::Wait(x.clone())),
        Type::Par(..) => Some(Action::Recv(x.clone(), fresh.clone())),
        Type::Tensor(_, _, us) => {
            let ready = !us.is_empty()
                && us
                    .iter()
                    .all(|u| matches!(g.get(u).and_then(|e| e.queue.head_for(x)), Some(QueueItem::Msg { .. })));
            ready.then(|| Action::Send(x.clone(), fresh.clone()))
        }
        Type::Plus(_, _, z) => match holder_head(z)? {
            QueueItem::Left(_) => Some(Action::Inl(x.clone())),
            QueueItem::Right(_) => Some(Action::Inr(x.clone())),
            _ => None,
        },
        Type::With(..) => Some(Action::Case(x.clone())),
        Type::OfCourse(..) => {
            let shaped = g
                .entries
                .iter()
                .all(|e| &e.endpoint == x || matches!(e.typing, Typing::Active(Type::WhyNot(..))));
            shaped.then(|| Action::Server(x.clone(), fresh.clone()))
        }
        Type::WhyNot(_, z) => matches!(holder_head(z)?, QueueItem::Query(_)).then(|| Action::Client(x.clone(), fresh.clone())),
    }
}
