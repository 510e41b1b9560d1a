use std::collections::BTreeSet;

use super::{CheckError, CllDerivation, Derivation, Rule};
use crate::contexts::CllContext;
use crate::syntax::{fresh_name, Endpoint, Process, Type};

/// Checks a CP judgement with weakening and contraction on `?`-typed endpoints.
pub fn check_cll(p: &Process, ctx: &CllContext) -> Result<CllDerivation, CheckError> {
    let mut seen = BTreeSet::new();
    for (e, _) in ctx {
        if !seen.insert(e) {
            return Err(CheckError::ContextShape(format!("duplicate endpoint `{e}`")));
        }
    }
    let ctx: CllContext = ctx.iter().map(|(e, t)| (e.clone(), t.erase())).collect();
    node(p, ctx)
}

fn lookup<'a>(ctx: &'a CllContext, x: &Endpoint) -> Result<&'a Type, CheckError> {
    ctx.iter()
        .find(|(e, _)| e == x)
        .map(|(_, t)| t)
        .ok_or_else(|| CheckError::UnknownEndpoint(x.clone()))
}

fn without(ctx: &CllContext, x: &Endpoint) -> CllContext {
    ctx.iter().filter(|(e, _)| e != x).cloned().collect()
}

fn with(mut ctx: CllContext, x: &Endpoint, t: Type) -> CllContext {
    ctx.retain(|(e, _)| e != x);
    ctx.push((x.clone(), t));
    ctx
}

fn is_whynot(t: &Type) -> bool {
    matches!(t, Type::WhyNot(..))
}

fn mismatch(x: &Endpoint, expected: &str) -> CheckError {
    CheckError::RuleMismatch {
        endpoint: x.clone(),
        expected: expected.into(),
    }
}

fn leaf(rule: Rule, p: &Process, ctx: CllContext) -> CllDerivation {
    Derivation {
        rule,
        process: p.clone(),
        context: ctx,
        premises: vec![],
    }
}

fn unary(rule: Rule, p: &Process, ctx: CllContext, premise: CllDerivation) -> CllDerivation {
    Derivation {
        rule,
        process: p.clone(),
        context: ctx,
        premises: vec![premise],
    }
}

fn fresh_for(z: &Endpoint, p: &Process, ctx: &CllContext) -> Endpoint {
    let names = p.all_names();
    fresh_name(z, |e| names.contains(e) || ctx.iter().any(|(n, _)| n == e))
}

/// Splits the context of a two-premise rule by free names, contracting shared `?` endpoints first.
enum Split {
    Contract(Endpoint),
    Parts(CllContext, CllContext),
}

fn split(rest: &CllContext, left: &BTreeSet<Endpoint>, right: &BTreeSet<Endpoint>) -> Result<Split, CheckError> {
    let mut l = Vec::new();
    let mut r = Vec::new();
    for (e, t) in rest {
        match (left.contains(e), right.contains(e)) {
            (true, true) if is_whynot(t) => return Ok(Split::Contract(e.clone())),
            (true, true) => return Err(CheckError::ContextShape(format!("linear endpoint `{e}` used on both sides"))),
            (true, false) => l.push((e.clone(), t.clone())),
            (false, true) => r.push((e.clone(), t.clone())),
            (false, false) => return Err(CheckError::Unused(e.clone())),
        }
    }
    Ok(Split::Parts(l, r))
}

fn node(p: &Process, ctx: CllContext) -> Result<CllDerivation, CheckError> {
    let free = p.free_names();
    if let Some((z, _)) = ctx.iter().find(|(e, t)| is_whynot(t) && !free.contains(e)) {
        let premise = node(p, without(&ctx, z))?;
        return Ok(unary(Rule::Weaken, p, ctx, premise));
    }
    match p {
        Process::Link(x, y) => {
            let (a, b) = (lookup(&ctx, x)?, lookup(&ctx, y)?);
            if ctx.len() != 2 || x == y {
                return Err(CheckError::ContextShape(format!(
                    "axiom on `{x}`, `{y}` needs exactly those two endpoints"
                )));
            }
            if !a.is_dual_of(b) {
                return Err(mismatch(x, "dual of the linked endpoint"));
            }
            Ok(leaf(Rule::Ax, p, ctx))
        }
        Process::Close(x) => {
            if !matches!(lookup(&ctx, x)?, Type::One(_)) {
                return Err(mismatch(x, "1"));
            }
            if let Some((e, _)) = ctx.iter().find(|(e, _)| e != x) {
                return Err(CheckError::Unused(e.clone()));
            }
            Ok(leaf(Rule::One, p, ctx))
        }
        Process::Wait(x, q) => {
            if !matches!(lookup(&ctx, x)?, Type::Bot(_)) {
                return Err(mismatch(x, "bot"));
            }
            let premise = node(q, without(&ctx, x))?;
            Ok(unary(Rule::Bot, p, ctx, premise))
        }
        Process::Recv(x, y, q) => {
            let Type::Par(a, b, _) = lookup(&ctx, x)? else {
                return Err(mismatch(x, "par"));
            };
            if y != x && ctx.iter().any(|(e, _)| e == y) {
                return Err(CheckError::NameClash(y.clone()));
            }
            let inner = with(with(ctx.clone(), x, (**b).clone()), y, (**a).clone());
            let premise = node(q, inner)?;
            Ok(unary(Rule::Par, p, ctx, premise))
        }
        Process::Send(x, y, s, q) => {
            let Type::Tensor(a, b, _) = lookup(&ctx, x)? else {
                return Err(mismatch(x, "tensor"));
            };
            let mut fs = s.free_names();
            fs.remove(y);
            if fs.contains(x) {
                return Err(CheckError::ContextShape(format!("`{x}` used inside its own payload")));
            }
            match split(&without(&ctx, x), &fs, &q.free_names())? {
                Split::Contract(z) => contract(p, ctx, &z, |z2| {
                    Process::Send(x.clone(), y.clone(), s.clone(), Box::new(q.rename(&z, z2)))
                }),
                Split::Parts(l, r) => {
                    let left = node(s, with(l, y, (**a).clone()))?;
                    let right = node(q, with(r, x, (**b).clone()))?;
                    Ok(Derivation {
                        rule: Rule::Tensor,
                        process: p.clone(),
                        context: ctx,
                        premises: vec![left, right],
                    })
                }
            }
        }
        Process::Inl(x, q) | Process::Inr(x, q) => {
            let Type::Plus(a, b, _) = lookup(&ctx, x)? else {
                return Err(mismatch(x, "plus"));
            };
            let (rule, t) = if matches!(p, Process::Inl(..)) {
                (Rule::PlusL, a)
            } else {
                (Rule::PlusR, b)
            };
            let premise = node(q, with(ctx.clone(), x, (**t).clone()))?;
            Ok(unary(rule, p, ctx, premise))
        }
        Process::Case(x, l, r) => {
            let Type::With(a, b, _) = lookup(&ctx, x)? else {
                return Err(mismatch(x, "with"));
            };
            let left = node(l, with(ctx.clone(), x, (**a).clone()))?;
            let right = node(r, with(ctx.clone(), x, (**b).clone()))?;
            Ok(Derivation {
                rule: Rule::With,
                process: p.clone(),
                context: ctx,
                premises: vec![left, right],
            })
        }
        Process::Server(x, y, q) => {
            let Type::OfCourse(a, _) = lookup(&ctx, x)? else {
                return Err(mismatch(x, "of-course"));
            };
            if let Some((e, _)) = ctx.iter().find(|(e, t)| e != x && !is_whynot(t)) {
                return Err(mismatch(e, "why-not in a server context"));
            }
            let inner = with(without(&ctx, x), y, (**a).clone());
            let premise = node(q, inner)?;
            Ok(unary(Rule::Bang, p, ctx, premise))
        }
        Process::Client(x, y, q) => {
            let Type::WhyNot(a, _) = lookup(&ctx, x)? else {
                return Err(mismatch(x, "why-not"));
            };
            let mut fq = q.free_names();
            fq.remove(y);
            if fq.contains(x) {
                return contract(p, ctx, x, |x2| Process::Client(x2.clone(), y.clone(), q.clone()));
            }
            let premise = node(q, with(without(&ctx, x), y, (**a).clone()))?;
            Ok(unary(Rule::Quest, p, ctx, premise))
        }
        Process::Cut { x, y, ty, left, right } => {
            let mut fl = left.free_names();
            fl.remove(x);
            let mut fr = right.free_names();
            fr.remove(y);
            match split(&ctx, &fl, &fr)? {
                Split::Contract(z) => contract(p, ctx, &z, |z2| Process::Cut {
                    x: x.clone(),
                    y: y.clone(),
                    ty: ty.clone(),
                    left: left.clone(),
                    right: Box::new(right.rename(&z, z2)),
                }),
                Split::Parts(l, r) => {
                    let dl = node(left, with(l, x, ty.erase()))?;
                    let dr = node(right, with(r, y, ty.dual()))?;
                    Ok(Derivation {
                        rule: Rule::Cut,
                        process: p.clone(),
                        context: ctx,
                        premises: vec![dl, dr],
                    })
                }
            }
        }
        Process::MCut(_) => Err(CheckError::Unsupported("multiparty composition in a CP judgement".into())),
    }
}

/// Contraction: the premise has a second copy `z'` of `z`, used where `rebuild` puts it.
fn contract(p: &Process, ctx: CllContext, z: &Endpoint, rebuild: impl Fn(&Endpoint) -> Process) -> Result<CllDerivation, CheckError> {
    let t = lookup(&ctx, z)?.clone();
    let z2 = fresh_for(z, p, &ctx);
    let inner_p = rebuild(&z2);
    let mut inner = ctx.clone();
    inner.push((z2, t));
    let premise = node(&inner_p, inner)?;
    Ok(unary(Rule::Contract, p, ctx, premise))
}
