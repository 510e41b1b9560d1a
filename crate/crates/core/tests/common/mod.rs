#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use forwarders::checker::{check_forwarder, slot_count, synth_with_annotations, ForwarderDerivation};
use forwarders::contexts::{CllContext, QueueItem};
use forwarders::cutelim::{CutRedex, Judged};
use forwarders::mcut::{MCutConfig, Party};
use forwarders::syntax::{Endpoint, Process, Type};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

/// Erased types of exactly `n` connectives and units over the atom `a`.
pub fn types_of_size(n: usize) -> Vec<Type> {
    let a = || Type::atom("a");
    let mut out = Vec::new();
    if n == 0 {
        return vec![a(), a().dual()];
    }
    if n == 1 {
        out.push(Type::One(BTreeSet::new()));
        out.push(Type::Bot(None));
    }
    for inner in types_of_size(n - 1) {
        out.push(Type::OfCourse(Box::new(inner.clone()), BTreeSet::new()));
        out.push(Type::WhyNot(Box::new(inner), None));
    }
    for k in 0..n {
        for l in types_of_size(k) {
            for r in types_of_size(n - 1 - k) {
                let (l, r) = (Box::new(l.clone()), Box::new(r));
                out.push(Type::Tensor(l.clone(), r.clone(), BTreeSet::new()));
                out.push(Type::Par(l.clone(), r.clone(), None));
                out.push(Type::Plus(l.clone(), r.clone(), None));
                out.push(Type::With(l, r, BTreeSet::new()));
            }
        }
    }
    out
}

pub fn types_up_to(n: usize) -> Vec<Type> {
    (0..=n).flat_map(types_of_size).collect()
}

const NAMES: [&str; 3] = ["x", "y", "z"];

/// Every context over 2 or 3 endpoints whose total size is at most `max`.
pub fn family(max: usize) -> Vec<CllContext> {
    let mut out = Vec::new();
    for k in 2..=3 {
        let mut partial: Vec<(CllContext, usize)> = vec![(Vec::new(), 0)];
        for name in &NAMES[..k] {
            let mut next = Vec::new();
            for (ctx, used) in &partial {
                for n in 0..=max - used {
                    for t in types_of_size(n) {
                        let mut c = ctx.clone();
                        c.push((Endpoint::new(name), t));
                        next.push((c, used + n));
                    }
                }
            }
            partial = next;
        }
        out.extend(partial.into_iter().map(|(c, _)| c));
    }
    out
}

pub fn random_type(rng: &mut StdRng, size: usize) -> Type {
    if size == 0 {
        return if rng.gen_bool(0.5) { Type::atom("a") } else { Type::dual_atom("a") };
    }
    if size == 1 && rng.gen_bool(0.3) {
        return if rng.gen_bool(0.5) {
            Type::One(BTreeSet::new())
        } else {
            Type::Bot(None)
        };
    }
    match rng.gen_range(0..6) {
        0 => Type::OfCourse(Box::new(random_type(rng, size - 1)), BTreeSet::new()),
        1 => Type::WhyNot(Box::new(random_type(rng, size - 1)), None),
        k => {
            let left = rng.gen_range(0..size);
            let (l, r) = (Box::new(random_type(rng, left)), Box::new(random_type(rng, size - 1 - left)));
            match k {
                2 => Type::Tensor(l, r, BTreeSet::new()),
                3 => Type::Par(l, r, None),
                4 => Type::Plus(l, r, None),
                _ => Type::With(l, r, BTreeSet::new()),
            }
        }
    }
}

/// A random erased context over 2 or 3 endpoints and total size at most `max`.
pub fn random_context(rng: &mut StdRng, max: usize) -> CllContext {
    let k = rng.gen_range(2..=3);
    let mut left = rng.gen_range(0..=max);
    let mut ctx = Vec::new();
    for name in &NAMES[..k] {
        let n = rng.gen_range(0..=left);
        left -= n;
        ctx.push((Endpoint::new(name), random_type(rng, n)));
    }
    ctx
}

fn atom_balance(t: &Type) -> i64 {
    match t {
        Type::Atom(_) => 1,
        Type::DualAtom(_) => -1,
        Type::One(_) | Type::Bot(_) => 0,
        Type::Tensor(a, b, _) | Type::Par(a, b, _) => atom_balance(a) + atom_balance(b),
        // Only one branch of an additive is ever used.
        Type::Plus(..) | Type::With(..) => 0,
        Type::OfCourse(a, _) | Type::WhyNot(a, _) => atom_balance(a),
    }
}

fn has_additive(t: &Type) -> bool {
    match t {
        Type::Plus(..) | Type::With(..) => true,
        Type::Tensor(a, b, _) | Type::Par(a, b, _) => has_additive(a) || has_additive(b),
        Type::OfCourse(a, _) | Type::WhyNot(a, _) => has_additive(a),
        _ => false,
    }
}

/// Cheap necessary conditions for synthesis, plus a bound on the annotation search.
pub fn plausible(ctx: &CllContext) -> bool {
    let additive = ctx.iter().any(|(_, t)| has_additive(t));
    (additive || ctx.iter().map(|(_, t)| atom_balance(t)).sum::<i64>() == 0) && slot_count(ctx) <= 6
}

fn par(a: Type, b: Type) -> Type {
    Type::Par(Box::new(a), Box::new(b), None)
}

fn tensor(a: Type, b: Type) -> Type {
    Type::Tensor(Box::new(a), Box::new(b), BTreeSet::new())
}

/// Two senders merged into one receiver, or one sender split between two receivers.
pub fn three_party(a: Type, b: Type, merge: bool) -> CllContext {
    let (one, bot) = (Type::One(BTreeSet::new()), Type::Bot(None));
    let e = Endpoint::new;
    if merge {
        vec![
            (e("x"), par(a.clone(), bot.clone())),
            (e("y"), par(b.clone(), bot)),
            (e("z"), tensor(a.dual(), tensor(b.dual(), one))),
        ]
    } else {
        vec![
            (e("x"), par(a.clone(), par(b.clone(), bot.clone()))),
            (e("y"), tensor(a.dual(), one)),
            (e("z"), tensor(b.dual(), bot)),
        ]
    }
}

/// Forwarder judgements found by synthesis over random contexts, together with every node
/// of their derivations.
pub fn judgement_pool(rng: &mut StdRng, wanted: usize, max: usize) -> Vec<ForwarderDerivation> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for _ in 0..wanted * 200 {
        if out.len() >= wanted {
            break;
        }
        let pick = rng.gen_range(0..3);
        let ctx = if pick == 0 {
            random_context(rng, max)
        } else if pick == 1 {
            let n = rng.gen_range(0..=max / 3);
            let (a, b) = (random_type(rng, n), random_type(rng, max / 3 - n));
            three_party(a, b, rng.gen_bool(0.5))
        } else {
            let n = rng.gen_range(1..=max / 2);
            let t = random_type(rng, n);
            let mut ctx = vec![(Endpoint::new("x"), t.clone()), (Endpoint::new("y"), t.dual())];
            if rng.gen_bool(0.3) {
                ctx.push((Endpoint::new("z"), Type::One(BTreeSet::new())));
                ctx.push((Endpoint::new("w"), Type::Bot(None)));
            }
            ctx
        };
        if !seen.insert(format!("{ctx:?}")) || (pick == 0 && !plausible(&ctx)) || slot_count(&ctx) > 8 {
            continue;
        }
        if let Some((g, p)) = synth_with_annotations(&ctx) {
            out.push(check_forwarder(&p, &g).expect("synthesized forwarders check"));
        }
    }
    out
}

pub fn nodes(d: &ForwarderDerivation) -> Vec<Judged> {
    let mut out = vec![Judged::new(d.process.clone(), d.context.clone())];
    for p in &d.premises {
        out.extend(nodes(p));
    }
    out
}

/// Every name in a judgement, suffixed with `tag`.
pub fn rename_apart(j: &Judged, tag: &str) -> Judged {
    let mut names = j.context.all_names();
    names.extend(j.process.all_names());
    let map: BTreeMap<Endpoint, Endpoint> = names
        .iter()
        .map(|n| (n.clone(), Endpoint::new(&format!("{}{tag}", n.as_str()))))
        .collect();
    let mut process = j.process.freshen_binders(&map.values().cloned().collect());
    let mut context = j.context.clone();
    for (from, to) in &map {
        process = process.rename(from, to);
        context = context.rename_endpoint(from, to);
    }
    for e in &mut context.entries {
        for item in &mut e.queue.items {
            if let QueueItem::Msg { payload, .. } = item {
                for (v, _) in payload.iter_mut() {
                    *v = map[v].clone();
                }
            }
        }
    }
    Judged::new(process, context)
}

/// Endpoints of `j` with an active type of size at most `max`.
pub fn cuttable(j: &Judged, max: usize) -> Vec<(Endpoint, Type)> {
    j.context
        .entries
        .iter()
        .filter_map(|e| {
            e.typing
                .active()
                .filter(|t| t.size() <= max)
                .map(|t| (e.endpoint.clone(), t.clone()))
        })
        .collect()
}

/// Cut pairs drawn from the pool, with dual cut formulas of size at most `max`, cycling through
/// the ranks so that every size is represented.
pub fn cut_pairs(pool: &[Judged], rng: &mut StdRng, wanted: usize, max: usize, accept: impl Fn(&CutRedex) -> bool) -> Vec<CutRedex> {
    let mut by_type: BTreeMap<Type, Vec<(usize, Endpoint)>> = BTreeMap::new();
    for (i, j) in pool.iter().enumerate() {
        for (x, t) in cuttable(j, max) {
            by_type.entry(t.erase()).or_default().push((i, x));
        }
    }
    let mut by_rank: Vec<Vec<(Type, Type)>> = vec![Vec::new(); max + 1];
    for t in by_type.keys() {
        if by_type.contains_key(&t.dual()) {
            by_rank[t.size()].push((t.clone(), t.dual()));
        }
    }
    let ranks: Vec<usize> = (0..=max).filter(|r| !by_rank[*r].is_empty()).collect();
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for n in 0..wanted * 500 {
        if out.len() >= wanted || ranks.is_empty() {
            break;
        }
        let options = &by_rank[ranks[n % ranks.len()]];
        let (a, b) = &options[rng.gen_range(0..options.len())];
        let (lefts, rights) = (&by_type[a], &by_type[b]);
        let (i, x) = &lefts[rng.gen_range(0..lefts.len())];
        let (k, y) = &rights[rng.gen_range(0..rights.len())];
        let right = rename_apart(&pool[*k], "_r");
        let y = Endpoint::new(&format!("{}_r", y.as_str()));
        let r = CutRedex {
            x: x.clone(),
            left: pool[*i].clone(),
            y,
            right,
        };
        if !seen.insert(format!("{:?}", r.term())) || !accept(&r) {
            continue;
        }
        out.push(r);
    }
    out
}

/// A cut with at least one conclusion.
pub fn has_conclusion(r: &CutRedex) -> bool {
    r.conclusions().is_ok_and(|g| !g.is_empty())
}

/// State of a randomized CP proof search.
pub struct CpSearch<'a> {
    pub rng: &'a mut StdRng,
    pub budget: usize,
    pub contractions: usize,
    pub counter: usize,
}

fn is_whynot(t: &Type) -> bool {
    matches!(t, Type::WhyNot(..))
}

fn without(ctx: &CllContext, x: &Endpoint) -> CllContext {
    ctx.iter().filter(|(e, _)| e != x).cloned().collect()
}

fn with(ctx: &CllContext, x: &Endpoint, t: &Type) -> CllContext {
    let mut out = without(ctx, x);
    out.push((x.clone(), t.clone()));
    out
}

enum Move {
    Link(Endpoint, Endpoint),
    Close(Endpoint),
    Wait(Endpoint),
    Recv(Endpoint),
    Send(Endpoint, Vec<Endpoint>),
    Select(Endpoint, bool),
    Case(Endpoint),
    Server(Endpoint),
    Client(Endpoint, bool),
}

impl Move {
    /// Failure of an invertible move refutes the whole context.
    fn invertible(&self) -> bool {
        matches!(self, Move::Wait(_) | Move::Recv(_) | Move::Case(_) | Move::Server(_))
    }
}

impl CpSearch<'_> {
    pub fn new(rng: &mut StdRng, budget: usize, contractions: usize) -> CpSearch<'_> {
        CpSearch {
            rng,
            budget,
            contractions,
            counter: 0,
        }
    }

    fn fresh(&mut self, base: &Endpoint) -> Endpoint {
        self.counter += 1;
        Endpoint::new(&format!("{}{}", base.base(), self.counter))
    }

    /// Some cut-free process typed in `ctx`, weakening `?`-entries where convenient.
    pub fn prove(&mut self, ctx: &CllContext) -> Option<Process> {
        if self.budget == 0 {
            return None;
        }
        self.budget -= 1;
        let linear: Vec<&(Endpoint, Type)> = ctx.iter().filter(|(_, t)| !is_whynot(t)).collect();
        let mut moves = Vec::new();
        if let [(x, a), (y, b)] = linear.as_slice() {
            if a.is_dual_of(b) {
                moves.push(Move::Link(x.clone(), y.clone()));
            }
        }
        for (x, t) in ctx {
            match t {
                Type::One(_) if linear.len() == 1 => moves.push(Move::Close(x.clone())),
                Type::Bot(_) => moves.push(Move::Wait(x.clone())),
                Type::Par(..) => moves.push(Move::Recv(x.clone())),
                Type::Tensor(..) => {
                    let others: Vec<Endpoint> = linear.iter().map(|(e, _)| e.clone()).filter(|e| e != x).collect();
                    let mut masks: Vec<usize> = (0..1usize << others.len()).collect();
                    masks.shuffle(self.rng);
                    for m in masks.into_iter().take(4) {
                        let left = others
                            .iter()
                            .enumerate()
                            .filter(|(k, _)| m >> k & 1 == 1)
                            .map(|(_, e)| e.clone())
                            .collect();
                        moves.push(Move::Send(x.clone(), left));
                    }
                }
                Type::Plus(..) => {
                    let left = self.rng.gen_bool(0.5);
                    moves.push(Move::Select(x.clone(), left));
                    moves.push(Move::Select(x.clone(), !left));
                }
                Type::With(..) => moves.push(Move::Case(x.clone())),
                Type::OfCourse(..) if linear.len() == 1 => moves.push(Move::Server(x.clone())),
                Type::WhyNot(..) => {
                    moves.push(Move::Client(x.clone(), false));
                    if self.contractions > 0 {
                        moves.push(Move::Client(x.clone(), true));
                    }
                }
                _ => {}
            }
        }
        moves.shuffle(self.rng);
        for m in moves {
            let invertible = m.invertible();
            let found = self.attempt(ctx, m);
            if found.is_some() || invertible {
                return found;
            }
        }
        None
    }

    fn attempt(&mut self, ctx: &CllContext, m: Move) -> Option<Process> {
        let bx = Box::new;
        let ty = |x: &Endpoint| ctx.iter().find(|(e, _)| e == x).map(|(_, t)| t.clone()).unwrap();
        Some(match m {
            Move::Link(x, y) => Process::Link(x, y),
            Move::Close(x) => Process::Close(x),
            Move::Wait(x) => Process::Wait(x.clone(), bx(self.prove(&without(ctx, &x))?)),
            Move::Recv(x) => {
                let Type::Par(a, b, _) = ty(&x) else { unreachable!() };
                let y = self.fresh(&x);
                let next = with(&with(ctx, &x, &b), &y, &a);
                Process::Recv(x, y, bx(self.prove(&next)?))
            }
            Move::Send(x, left) => {
                let Type::Tensor(a, b, _) = ty(&x) else { unreachable!() };
                let y = self.fresh(&x);
                let shared: CllContext = ctx.iter().filter(|(_, t)| is_whynot(t)).cloned().collect();
                let pick = |keep: &dyn Fn(&Endpoint) -> bool| -> CllContext {
                    ctx.iter()
                        .filter(|(e, t)| e != &x && !is_whynot(t) && keep(e))
                        .cloned()
                        .chain(shared.clone())
                        .collect()
                };
                let l = with(&pick(&|e| left.contains(e)), &y, &a);
                let r = with(&pick(&|e| !left.contains(e)), &x, &b);
                let p = self.prove(&l)?;
                let q = self.prove(&r)?;
                Process::Send(x, y, bx(p), bx(q))
            }
            Move::Select(x, left) => {
                let Type::Plus(a, b, _) = ty(&x) else { unreachable!() };
                let next = with(ctx, &x, if left { &a } else { &b });
                let p = bx(self.prove(&next)?);
                if left {
                    Process::Inl(x, p)
                } else {
                    Process::Inr(x, p)
                }
            }
            Move::Case(x) => {
                let Type::With(a, b, _) = ty(&x) else { unreachable!() };
                let l = self.prove(&with(ctx, &x, &a))?;
                let r = self.prove(&with(ctx, &x, &b))?;
                Process::Case(x, bx(l), bx(r))
            }
            Move::Server(x) => {
                let Type::OfCourse(a, _) = ty(&x) else { unreachable!() };
                let y = self.fresh(&x);
                let next = with(&without(ctx, &x), &y, &a);
                Process::Server(x, y, bx(self.prove(&next)?))
            }
            Move::Client(x, keep) => {
                let Type::WhyNot(a, _) = ty(&x) else { unreachable!() };
                let y = self.fresh(&x);
                if keep {
                    // An earlier branch may have spent the budget since the move was listed.
                    self.contractions = self.contractions.checked_sub(1)?;
                }
                let base = if keep { ctx.clone() } else { without(ctx, &x) };
                Process::Client(x, y.clone(), bx(self.prove(&with(&base, &y, &a))?))
            }
        })
    }
}

/// Splits top-level ⅋ into separate endpoints and drops top-level ⊥, keeping the context provable.
fn spread(z: &str, t: &Type, rng: &mut StdRng, out: &mut CllContext) {
    match t {
        Type::Par(a, b, _) if rng.gen_bool(0.6) => {
            spread(&format!("{z}l"), a, rng, out);
            spread(&format!("{z}r"), b, rng, out);
        }
        Type::Bot(_) if rng.gen_bool(0.5) => {}
        _ => out.push((Endpoint::new(z), t.clone())),
    }
}

/// A forwarder context drawn like the judgement pool roots.
pub fn forwarder_context(rng: &mut StdRng, max: usize) -> CllContext {
    match rng.gen_range(0..4) {
        0 => loop {
            let ctx = random_context(rng, max);
            if plausible(&ctx) {
                break ctx;
            }
        },
        1 => {
            let n = rng.gen_range(0..=max / 3);
            let (a, b) = (random_type(rng, n), random_type(rng, max / 3 - n));
            three_party(a, b, rng.gen_bool(0.5))
        }
        2 => {
            let n = rng.gen_range(1..=max / 2);
            let t = random_type(rng, n);
            vec![(Endpoint::new("x"), t.clone()), (Endpoint::new("y"), t.dual())]
        }
        _ => {
            let n = rng.gen_range(0..max / 2);
            let t = Type::OfCourse(Box::new(random_type(rng, n)), BTreeSet::new());
            vec![(Endpoint::new("x"), t.clone()), (Endpoint::new("y"), t.dual())]
        }
    }
}

/// A composition of synthesized parts through a synthesized forwarder, if both searches succeed.
pub fn mcut_config(rng: &mut StdRng, max: usize) -> Option<MCutConfig> {
    let ctx = forwarder_context(rng, max);
    if slot_count(&ctx) > 8 {
        return None;
    }
    let (g, f) = synth_with_annotations(&ctx)?;
    let mut parts = Vec::new();
    for (x, t) in &ctx {
        let mut part_ctx = vec![(x.clone(), t.dual())];
        spread(&format!("{}s", x.as_str()), t, rng, &mut part_ctx);
        if rng.gen_bool(0.2) {
            part_ctx.push((
                Endpoint::new(&format!("{}k", x.as_str())),
                Type::WhyNot(Box::new(Type::atom("b")), None),
            ));
        }
        let contractions = usize::from(rng.gen_bool(0.5));
        let p = CpSearch::new(rng, 400, contractions).prove(&part_ctx)?;
        parts.push(Party::new(x, p, part_ctx));
    }
    MCutConfig::new(Judged::new(f, g), vec![], parts).ok()
}
