//! Re-checks derivation trees node by node, rebuilding each conclusion from its premises.

use super::{CllDerivation, ForwarderDerivation, Rule};
use crate::contexts::{ContextEntry, Queue, QueueItem, Typing, TypingContext};
use crate::syntax::{Endpoint, Process, Type};

fn ensure(cond: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

fn same(a: &TypingContext, b: &TypingContext) -> bool {
    let live = |g: &TypingContext| {
        let mut g = g.clone();
        g.entries.retain(|e| !(e.typing == Typing::Terminated && e.queue.is_empty()));
        g
    };
    live(a).equivalent(&live(b))
}

fn entry_mut<'a>(g: &'a mut TypingContext, x: &Endpoint) -> Result<&'a mut ContextEntry, String> {
    g.get_mut(x).ok_or_else(|| format!("`{x}` missing from premise"))
}

/// Removes the last item of `x`'s queue.
fn pop_last(g: &mut TypingContext, x: &Endpoint) -> Result<QueueItem, String> {
    entry_mut(g, x)?
        .queue
        .items
        .pop()
        .ok_or_else(|| format!("`{x}` has an empty queue in the premise"))
}

/// Puts `item` back in front of the items with the same label in `holder`'s queue.
fn unpop(g: &mut TypingContext, holder: &Endpoint, item: QueueItem) {
    if g.get(holder).is_none() {
        g.push(ContextEntry {
            endpoint: holder.clone(),
            queue: Queue::default(),
            typing: Typing::Terminated,
        });
    }
    let q = &mut g.get_mut(holder).unwrap().queue;
    let at = q.first_for(item.target()).unwrap_or(q.items.len());
    q.items.insert(at, item);
}

pub fn validate_forwarder(d: &ForwarderDerivation) -> Result<(), String> {
    let g = &d.context;
    let here = || format!("at `{}`", d.process);
    let arity = match d.rule {
        Rule::Ax | Rule::One => 0,
        Rule::Tensor | Rule::With => 2,
        Rule::Bot | Rule::Par | Rule::PlusL | Rule::PlusR | Rule::Bang | Rule::Quest => 1,
        other => return Err(format!("rule {other} is not a forwarder rule")),
    };
    ensure(d.premises.len() == arity, || format!("wrong premise count {}", here()))?;
    for e in &g.entries {
        if let Typing::Active(t) = &e.typing {
            ensure(t.is_fully_annotated(), || format!("`{}` not annotated {}", e.endpoint, here()))?;
        }
    }
    let prem = |i: usize| &d.premises[i].context;
    match (&d.rule, &d.process) {
        (Rule::Ax, Process::Link(x, y)) => {
            ensure(g.entries.len() == 2, here)?;
            let (a, b) = (g.type_of(x), g.type_of(y));
            let ok =
                matches!((a, b), (Some(Type::Atom(p)), Some(Type::DualAtom(q))) | (Some(Type::DualAtom(p)), Some(Type::Atom(q))) if p == q);
            ensure(ok && g.entries.iter().all(|e| e.queue.is_empty()), here)?;
        }
        (Rule::One, Process::Close(x)) => {
            let Some(Type::One(us)) = g.type_of(x) else { return Err(here()) };
            ensure(!us.is_empty() && g.get(x).unwrap().queue.is_empty(), here)?;
            let others: Vec<_> = g.entries.iter().filter(|e| &e.endpoint != x).collect();
            ensure(others.len() == us.len(), here)?;
            for e in others {
                ensure(
                    us.contains(&e.endpoint) && e.typing == Typing::Terminated && e.queue.items == [QueueItem::Star(x.clone())],
                    here,
                )?;
            }
        }
        (Rule::Bot, Process::Wait(x, q)) => {
            ensure(d.premises[0].process == **q, here)?;
            let mut back = prem(0).clone();
            let QueueItem::Star(u) = pop_last(&mut back, x)? else {
                return Err(here());
            };
            let e = entry_mut(&mut back, x)?;
            ensure(e.typing == Typing::Terminated, here)?;
            e.typing = Typing::Active(Type::Bot(Some(u)));
            ensure(same(&back, g), here)?;
        }
        (Rule::Par, Process::Recv(x, y, q)) => {
            ensure(d.premises[0].process == **q, here)?;
            let mut back = prem(0).clone();
            let QueueItem::Msg { target, payload } = pop_last(&mut back, x)? else {
                return Err(here());
            };
            ensure(payload.len() == 1 && &payload[0].0 == y, here)?;
            let e = entry_mut(&mut back, x)?;
            let Typing::Active(b) = e.typing.clone() else { return Err(here()) };
            e.typing = Typing::Active(Type::Par(Box::new(payload[0].1.clone()), Box::new(b), Some(target)));
            ensure(same(&back, g), here)?;
        }
        (Rule::Tensor, Process::Send(x, y, s, q)) => {
            ensure(d.premises[0].process == **s && d.premises[1].process == **q, here)?;
            let Some(Type::Tensor(a, b, us)) = g.type_of(x) else {
                return Err(here());
            };
            ensure(!us.is_empty(), here)?;
            // Rebuild the conclusion by putting the gathered boxes back.
            let mut back = prem(1).clone();
            let mut gathered: Vec<(Endpoint, Type)> = Vec::new();
            for u in us {
                let head = g.get(u).and_then(|e| e.queue.head_for(x)).cloned();
                let Some(QueueItem::Msg { payload, .. }) = head.clone() else {
                    return Err(here());
                };
                gathered.extend(payload.iter().map(|(v, t)| (v.clone(), t.erase())));
                unpop(&mut back, u, head.unwrap());
            }
            let e = entry_mut(&mut back, x)?;
            ensure(e.typing == Typing::Active((**b).clone()), here)?;
            e.typing = Typing::Active(Type::Tensor(a.clone(), b.clone(), us.clone()));
            ensure(same(&back, g), here)?;
            gathered.push((y.clone(), a.erase()));
            gathered.sort();
            let mut left: Vec<(Endpoint, Type)> = prem(0)
                .entries
                .iter()
                .filter_map(|e| e.typing.active().map(|t| (e.endpoint.clone(), t.erase())))
                .collect();
            left.sort();
            ensure(left == gathered && prem(0).entries.iter().all(|e| e.queue.is_empty()), here)?;
        }
        (Rule::PlusL | Rule::PlusR, Process::Inl(x, q) | Process::Inr(x, q)) => {
            let left = d.rule == Rule::PlusL;
            ensure(left == matches!(d.process, Process::Inl(..)) && d.premises[0].process == **q, here)?;
            let Some(Type::Plus(a, b, Some(z))) = g.type_of(x) else {
                return Err(here());
            };
            let mut back = prem(0).clone();
            let e = entry_mut(&mut back, x)?;
            ensure(e.typing == Typing::Active(if left { (**a).clone() } else { (**b).clone() }), here)?;
            e.typing = g.get(x).unwrap().typing.clone();
            unpop(
                &mut back,
                z,
                if left {
                    QueueItem::Left(x.clone())
                } else {
                    QueueItem::Right(x.clone())
                },
            );
            ensure(same(&back, g), here)?;
        }
        (Rule::With, Process::Case(x, l, r)) => {
            ensure(d.premises[0].process == **l && d.premises[1].process == **r, here)?;
            let Some(Type::With(a, b, us)) = g.type_of(x) else {
                return Err(here());
            };
            for (i, (branch, tok)) in [(a, QueueItem::Left as fn(Endpoint) -> QueueItem), (b, QueueItem::Right)]
                .into_iter()
                .enumerate()
            {
                let mut back = prem(i).clone();
                for u in us.iter().rev() {
                    ensure(pop_last(&mut back, x)? == tok(u.clone()), here)?;
                }
                let e = entry_mut(&mut back, x)?;
                ensure(e.typing == Typing::Active((**branch).clone()), here)?;
                e.typing = g.get(x).unwrap().typing.clone();
                ensure(same(&back, g), here)?;
            }
        }
        (Rule::Bang, Process::Server(x, y, q)) => {
            ensure(d.premises[0].process == **q, here)?;
            let Some(Type::OfCourse(a, us)) = g.type_of(x) else {
                return Err(here());
            };
            let mut back = prem(0).rename_endpoint(y, x);
            let e = entry_mut(&mut back, x)?;
            let expect: Vec<QueueItem> = us.iter().map(|u| QueueItem::Query(u.clone())).collect();
            ensure(e.queue.items == expect && e.typing == Typing::Active((**a).clone()), here)?;
            e.queue = Queue::default();
            e.typing = g.get(x).unwrap().typing.clone();
            ensure(same(&back, g), here)?;
            ensure(
                g.entries
                    .iter()
                    .all(|e| e.queue.is_empty() && (&e.endpoint == x || matches!(e.typing, Typing::Active(Type::WhyNot(..))))),
                here,
            )?;
            ensure(g.entries.len() == us.len() + 1, here)?;
        }
        (Rule::Quest, Process::Client(x, y, q)) => {
            ensure(d.premises[0].process == **q, here)?;
            let Some(Type::WhyNot(a, Some(z))) = g.type_of(x) else {
                return Err(here());
            };
            let mut back = prem(0).rename_endpoint(y, x);
            let e = entry_mut(&mut back, x)?;
            ensure(e.typing == Typing::Active((**a).clone()), here)?;
            e.typing = g.get(x).unwrap().typing.clone();
            unpop(&mut back, z, QueueItem::Query(x.clone()));
            ensure(same(&back, g), here)?;
        }
        _ => return Err(format!("rule {} does not match {}", d.rule, here())),
    }
    d.premises.iter().try_for_each(validate_forwarder)
}

fn sorted(ctx: &[(Endpoint, Type)]) -> Vec<(Endpoint, Type)> {
    let mut v: Vec<_> = ctx.iter().map(|(e, t)| (e.clone(), t.erase())).collect();
    v.sort();
    v
}

pub fn validate_cll(d: &CllDerivation) -> Result<(), String> {
    let g = sorted(&d.context);
    let here = || format!("at `{}`", d.process);
    let ty = |x: &Endpoint| g.iter().find(|(e, _)| e == x).map(|(_, t)| t.clone());
    let rest = |x: &Endpoint| -> Vec<(Endpoint, Type)> { g.iter().filter(|(e, _)| e != x).cloned().collect() };
    let plus = |mut v: Vec<(Endpoint, Type)>, extra: &[(&Endpoint, Type)]| {
        v.extend(extra.iter().map(|(e, t)| ((*e).clone(), t.clone())));
        v.sort();
        v
    };
    let prem = |i: usize| sorted(&d.premises[i].context);
    match (&d.rule, &d.process) {
        (Rule::Weaken, _) => {
            ensure(d.premises.len() == 1 && d.premises[0].process == d.process, here)?;
            let p = prem(0);
            ensure(p.len() + 1 == g.len(), here)?;
            let dropped: Vec<_> = g.iter().filter(|e| !p.contains(e)).collect();
            ensure(
                dropped.len() == 1 && matches!(dropped[0].1, Type::WhyNot(..)) && !d.process.is_free(&dropped[0].0),
                here,
            )?;
        }
        (Rule::Contract, _) => {
            ensure(d.premises.len() == 1, here)?;
            let p = prem(0);
            let added: Vec<_> = p.iter().filter(|e| !g.contains(e)).collect();
            ensure(added.len() == 1 && p.len() == g.len() + 1, here)?;
            let (z2, t) = added[0];
            let z = g.iter().find(|(e, u)| u == t && d.premises[0].process.rename(z2, e) == d.process);
            ensure(z.is_some() && matches!(t, Type::WhyNot(..)), here)?;
        }
        (Rule::Ax, Process::Link(x, y)) => {
            let ok = matches!((ty(x), ty(y)), (Some(a), Some(b)) if a.is_dual_of(&b));
            ensure(ok && g.len() == 2, here)?;
        }
        (Rule::One, Process::Close(x)) => ensure(g.len() == 1 && matches!(ty(x), Some(Type::One(_))), here)?,
        (Rule::Bot, Process::Wait(x, _)) => ensure(matches!(ty(x), Some(Type::Bot(_))) && prem(0) == rest(x), here)?,
        (Rule::Par, Process::Recv(x, y, _)) => {
            let Some(Type::Par(a, b, _)) = ty(x) else { return Err(here()) };
            ensure(prem(0) == plus(rest(x), &[(x, *b), (y, *a)]), here)?;
        }
        (Rule::Tensor, Process::Send(x, y, _, _)) => {
            let Some(Type::Tensor(a, b, _)) = ty(x) else { return Err(here()) };
            let (l, r) = (prem(0), prem(1));
            let mut union: Vec<_> = l
                .iter()
                .filter(|(e, _)| e != y)
                .chain(r.iter().filter(|(e, _)| e != x))
                .cloned()
                .collect();
            union.sort();
            ensure(union == rest(x), here)?;
            ensure(l.contains(&(y.clone(), a.erase())) && r.contains(&(x.clone(), b.erase())), here)?;
        }
        (Rule::PlusL | Rule::PlusR, Process::Inl(x, _) | Process::Inr(x, _)) => {
            let Some(Type::Plus(a, b, _)) = ty(x) else { return Err(here()) };
            let t = if d.rule == Rule::PlusL { *a } else { *b };
            ensure(prem(0) == plus(rest(x), &[(x, t)]), here)?;
        }
        (Rule::With, Process::Case(x, _, _)) => {
            let Some(Type::With(a, b, _)) = ty(x) else { return Err(here()) };
            ensure(prem(0) == plus(rest(x), &[(x, *a)]) && prem(1) == plus(rest(x), &[(x, *b)]), here)?;
        }
        (Rule::Bang, Process::Server(x, y, _)) => {
            let Some(Type::OfCourse(a, _)) = ty(x) else { return Err(here()) };
            ensure(rest(x).iter().all(|(_, t)| matches!(t, Type::WhyNot(..))), here)?;
            ensure(prem(0) == plus(rest(x), &[(y, *a)]), here)?;
        }
        (Rule::Quest, Process::Client(x, y, _)) => {
            let Some(Type::WhyNot(a, _)) = ty(x) else { return Err(here()) };
            ensure(prem(0) == plus(rest(x), &[(y, *a)]), here)?;
        }
        (Rule::Cut, Process::Cut { x, y, ty: a, .. }) => {
            let (l, r) = (prem(0), prem(1));
            ensure(l.contains(&(x.clone(), a.erase())) && r.contains(&(y.clone(), a.dual())), here)?;
            let mut union: Vec<_> = l
                .iter()
                .filter(|(e, _)| e != x)
                .chain(r.iter().filter(|(e, _)| e != y))
                .cloned()
                .collect();
            union.sort();
            ensure(union == g, here)?;
        }
        _ => return Err(format!("rule {} does not match {}", d.rule, here())),
    }
    d.premises.iter().try_for_each(validate_cll)
}
