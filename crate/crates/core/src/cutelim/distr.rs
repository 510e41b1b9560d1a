use std::collections::BTreeSet;

use super::CutError;
use crate::checker::rules::tidy;
use crate::contexts::{ContextEntry, Queue, QueueItem, Typing, TypingContext};
use crate::syntax::{Conn, Endpoint, Targets, Type};

/// One half of a cut: the rest of the context, the cut endpoint's queue, the endpoint and its type.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CutSide {
    pub context: TypingContext,
    pub queue: Queue,
    pub endpoint: Endpoint,
    pub ty: Type,
}

impl CutSide {
    pub fn of_judgement(g: &TypingContext, x: &Endpoint) -> Result<CutSide, CutError> {
        let mut context = g.clone();
        let entry = context
            .remove(x)
            .ok_or_else(|| CutError::StructuralMismatch(format!("`{x}` is not in the context")))?;
        let Typing::Active(ty) = entry.typing else {
            return Err(CutError::StructuralMismatch(format!("cut endpoint `{x}` is terminated")));
        };
        Ok(CutSide {
            context,
            queue: entry.queue,
            endpoint: x.clone(),
            ty,
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SideId {
    Top,
    Bottom,
}

impl SideId {
    pub fn other(self) -> SideId {
        match self {
            SideId::Top => SideId::Bottom,
            SideId::Bottom => SideId::Top,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Phase {
    Distributing,
    Substituting,
    Done(TypingContext),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CutPair {
    pub top: CutSide,
    pub bottom: CutSide,
    pub phase: Phase,
}

pub(crate) fn hole_conn(item: &QueueItem) -> Conn {
    match item {
        QueueItem::Msg { .. } => Conn::Tensor,
        QueueItem::Star(_) => Conn::One,
        QueueItem::Left(_) | QueueItem::Right(_) => Conn::Plus,
        QueueItem::Query(_) => Conn::WhyNot,
    }
}

/// Replaces `from` by `to` in the slot of every leftmost `conn` node of `e`'s type naming `from`.
pub(crate) fn retarget(g: &mut TypingContext, e: &Endpoint, conn: Conn, from: &Endpoint, to: &Targets) -> Result<(), CutError> {
    let dangling = || CutError::DanglingReference {
        endpoint: e.clone(),
        name: from.clone(),
    };
    let entry = g.get_mut(e).ok_or_else(dangling)?;
    let Typing::Active(t) = &mut entry.typing else {
        return Err(dangling());
    };
    let holes = t.holes(conn, from);
    if holes.is_empty() {
        return Err(dangling());
    }
    for path in holes {
        let node = t.at_mut(&path).expect("hole path");
        if let Some(set) = node.set_slot_mut() {
            set.remove(from);
            if to.iter().any(|r| set.contains(r)) {
                return Err(CutError::AnnotationMismatch(format!("`{e}` already names a receiver in {to:?}")));
            }
            set.extend(to.iter().cloned());
        } else if let Some(one) = node.single_slot_mut() {
            if to.len() != 1 {
                return Err(CutError::AnnotationMismatch(format!("`{e}` has a single-target slot")));
            }
            *one = to.iter().next().cloned();
        }
    }
    Ok(())
}

/// Every name mentioned in annotations or queue labels.
fn references(g: &TypingContext) -> BTreeSet<Endpoint> {
    let mut out = BTreeSet::new();
    for e in &g.entries {
        if let Some(t) = e.typing.active() {
            t.protocol_targets(&mut out);
        }
        out.extend(e.queue.items.iter().map(|i| i.target().clone()));
    }
    out
}

impl CutPair {
    pub fn new(top: CutSide, bottom: CutSide) -> Result<CutPair, CutError> {
        if !top.ty.is_dual_of(&bottom.ty) {
            return Err(CutError::StructuralMismatch(format!(
                "`{}` and `{}` are not dual",
                top.ty, bottom.ty
            )));
        }
        let mut p = CutPair {
            top,
            bottom,
            phase: Phase::Distributing,
        };
        for side in [&mut p.top, &mut p.bottom] {
            for e in &mut side.context.entries {
                e.queue.cursor = Some(0);
            }
        }
        Ok(p.settle())
    }

    pub fn side(&self, id: SideId) -> &CutSide {
        match id {
            SideId::Top => &self.top,
            SideId::Bottom => &self.bottom,
        }
    }

    fn side_mut(&mut self, id: SideId) -> &mut CutSide {
        match id {
            SideId::Top => &mut self.top,
            SideId::Bottom => &mut self.bottom,
        }
    }

    /// Endpoints that may receive an item distributed from `from`'s cut queue.
    pub fn receivers(&self, from: SideId) -> Vec<Endpoint> {
        self.side(from.other()).context.entries.iter().map(|e| e.endpoint.clone()).collect()
    }

    /// The side whose queue is distributed next, if any.
    pub fn next_source(&self) -> Option<SideId> {
        if self.phase != Phase::Distributing {
            return None;
        }
        [SideId::Top, SideId::Bottom].into_iter().find(|s| !self.side(*s).queue.is_empty())
    }

    /// Leaves the distribution phase once both cut queues are empty.
    fn settle(mut self) -> CutPair {
        if self.phase == Phase::Distributing && self.top.queue.is_empty() && self.bottom.queue.is_empty() {
            self.top.context.clear_cursors();
            self.bottom.context.clear_cursors();
            self.phase = Phase::Substituting;
        }
        self
    }

    /// Candidate receiver assignments for the head of `from`'s queue: one receiver per payload entry.
    pub fn choices(&self, from: SideId) -> Vec<Vec<Endpoint>> {
        let Some(item) = self.side(from).queue.items.first() else {
            return vec![];
        };
        let rs = self.receivers(from);
        let arity = match item {
            QueueItem::Msg { payload, .. } => payload.len(),
            _ => 1,
        };
        let mut out: Vec<Vec<Endpoint>> = vec![vec![]];
        for _ in 0..arity {
            out = out
                .into_iter()
                .flat_map(|prefix| rs.iter().map(move |r| [prefix.clone(), vec![r.clone()]].concat()))
                .collect();
        }
        out
    }
}

/// Moves the head of `from`'s cut queue to the receivers in `choice`, rewriting the sender's annotation.
pub fn distr_step(p: &CutPair, from: SideId, choice: &[Endpoint]) -> Result<CutPair, CutError> {
    if p.phase != Phase::Distributing {
        return Err(CutError::WrongPhase);
    }
    let mut next = p.clone();
    let holder = next.side(from).endpoint.clone();
    if next.side(from).queue.is_empty() {
        return Err(CutError::EmptyQueue(holder));
    }
    let item = next.side_mut(from).queue.remove(0);
    let opposite = from.other();
    for r in choice {
        if next.side(opposite).context.get(r).is_none() {
            return Err(CutError::NoSuchReceiver(r.clone()));
        }
    }
    let arity = match &item {
        QueueItem::Msg { payload, .. } => payload.len(),
        _ => 1,
    };
    if choice.len() != arity {
        return Err(CutError::AnnotationMismatch(format!(
            "{} receivers for {arity} payload entries",
            choice.len()
        )));
    }
    let label = item.target().clone();
    let receivers: Targets = choice.iter().cloned().collect();
    let conn = hole_conn(&item);
    retarget(&mut next.side_mut(from).context, &label, conn, &holder, &receivers).map_err(|e| match e {
        CutError::DanglingReference { .. } => {
            CutError::AnnotationMismatch(format!("`{label}` has no pending {conn:?} aimed at `{holder}`"))
        }
        other => other,
    })?;
    let ctx = &mut next.side_mut(opposite).context;
    match &item {
        QueueItem::Msg { payload, .. } => {
            let mut order: Vec<&Endpoint> = Vec::new();
            for r in choice {
                if !order.contains(&r) {
                    order.push(r);
                }
            }
            for r in order {
                let block: Vec<(Endpoint, Type)> = payload
                    .iter()
                    .zip(choice)
                    .filter(|(_, c)| *c == r)
                    .map(|(pl, _)| pl.clone())
                    .collect();
                ctx.get_mut(r).unwrap().queue.insert_at_cursor(QueueItem::Msg {
                    target: label.clone(),
                    payload: block,
                });
            }
        }
        token => ctx.get_mut(&choice[0]).unwrap().queue.insert_at_cursor(token.clone()),
    }
    Ok(next.settle())
}

fn same_pair(a: &CutPair, b: &CutPair) -> bool {
    a.top.context.equivalent(&b.top.context) && a.bottom.context.equivalent(&b.bottom.context)
}

/// All maximal distributions, deduplicated up to context equivalence.
pub fn distr_enumerate(p: &CutPair) -> Vec<CutPair> {
    let mut out: Vec<CutPair> = Vec::new();
    let mut stack = vec![p.clone()];
    while let Some(cur) = stack.pop() {
        match cur.next_source() {
            None => {
                if cur.phase == Phase::Substituting && !out.iter().any(|o| same_pair(o, &cur)) {
                    out.push(cur);
                }
            }
            Some(from) => {
                for choice in cur.choices(from).into_iter().rev() {
                    if let Ok(n) = distr_step(&cur, from, &choice) {
                        stack.push(n);
                    }
                }
            }
        }
    }
    out
}

fn relabel_first(g: &mut TypingContext, holder: &Endpoint, label: &Endpoint, accept: fn(&QueueItem) -> bool, to: Vec<QueueItem>) -> bool {
    let Some(entry) = g.get_mut(holder) else { return false };
    match entry.queue.first_for(label) {
        Some(i) if accept(&entry.queue.items[i]) => {
            entry.queue.items.splice(i..=i, to);
            true
        }
        _ => false,
    }
}

fn single(e: &Endpoint) -> Targets {
    [e.clone()].into_iter().collect()
}

/// Peels the cut formulas in lockstep; `s : a` and `t : b` are the current cut endpoints and types.
fn peel(mut m: TypingContext, s: &Endpoint, a: &Type, t: &Endpoint, b: &Type) -> Result<TypingContext, CutError> {
    let missing = |e: &Endpoint| CutError::DanglingReference {
        endpoint: e.clone(),
        name: e.clone(),
    };
    match (a, b) {
        (Type::Atom(x), Type::DualAtom(y)) | (Type::DualAtom(x), Type::Atom(y)) if x == y => Ok(m),
        (Type::Tensor(_, a2, us), Type::Par(_, b2, Some(w))) => {
            retarget(&mut m, w, Conn::Tensor, t, us)?;
            for u in us {
                let entry = m.get_mut(u).ok_or_else(|| missing(u))?;
                let moved = match entry.queue.first_for(s) {
                    Some(i) if matches!(entry.queue.items[i], QueueItem::Msg { .. }) => {
                        entry.queue.items[i] = entry.queue.items[i].with_target(w);
                        true
                    }
                    _ => false,
                };
                if !moved {
                    retarget(&mut m, u, Conn::Par, s, &single(w))?;
                }
            }
            peel(m, s, a2, t, b2)
        }
        (Type::One(us), Type::Bot(Some(c))) => {
            retarget(&mut m, c, Conn::One, t, us)?;
            for u in us {
                if !relabel_first(&mut m, u, s, |i| matches!(i, QueueItem::Star(_)), vec![QueueItem::Star(c.clone())]) {
                    retarget(&mut m, u, Conn::Bot, s, &single(c))?;
                }
            }
            Ok(m)
        }
        (Type::With(a1, a2, us), Type::Plus(b1, b2, Some(v))) => {
            for u in us {
                retarget(&mut m, u, Conn::Plus, s, &single(v))?;
            }
            let lefts = us.iter().map(|u| QueueItem::Left(u.clone())).collect();
            if relabel_first(&mut m, v, t, |i| matches!(i, QueueItem::Left(_)), lefts) {
                return peel(m, s, a1, t, b1);
            }
            let rights = us.iter().map(|u| QueueItem::Right(u.clone())).collect();
            if relabel_first(&mut m, v, t, |i| matches!(i, QueueItem::Right(_)), rights) {
                return peel(m, s, a2, t, b2);
            }
            retarget(&mut m, v, Conn::With, t, us)?;
            // No selection has been made yet: both continuations must lead to the same context.
            let l = peel(m.clone(), s, a1, t, b1)?;
            let r = peel(m, s, a2, t, b2)?;
            if l.equivalent(&r) {
                Ok(l)
            } else {
                Err(CutError::StructuralMismatch("unselected branches disagree".into()))
            }
        }
        (Type::OfCourse(a1, us), Type::WhyNot(b1, Some(z))) => {
            for u in us {
                retarget(&mut m, u, Conn::WhyNot, s, &single(z))?;
            }
            let queries = us.iter().map(|u| QueueItem::Query(u.clone())).collect();
            if !relabel_first(&mut m, z, t, |i| matches!(i, QueueItem::Query(_)), queries) {
                retarget(&mut m, z, Conn::OfCourse, t, us)?;
            }
            peel(m, s, a1, t, b1)
        }
        (Type::Par(..), Type::Tensor(..))
        | (Type::Bot(_), Type::One(_))
        | (Type::Plus(..), Type::With(..))
        | (Type::WhyNot(..), Type::OfCourse(..)) => peel(m, t, b, s, a),
        _ => Err(CutError::StructuralMismatch(format!("cannot peel `{a}` against `{b}`"))),
    }
}

/// Runs substitution to completion and returns the conclusion.
pub fn subst_run(p: &CutPair) -> Result<TypingContext, CutError> {
    match &p.phase {
        Phase::Done(g) => return Ok(g.clone()),
        Phase::Distributing => return Err(CutError::WrongPhase),
        Phase::Substituting => {}
    }
    let mut entries: Vec<ContextEntry> = p.top.context.entries.clone();
    entries.extend(p.bottom.context.entries.iter().cloned());
    let merged = TypingContext::new(entries);
    merged.check_distinct().map_err(|e| CutError::StructuralMismatch(e.to_string()))?;
    let (s, t) = (&p.top.endpoint, &p.bottom.endpoint);
    let out = peel(merged, s, &p.top.ty, t, &p.bottom.ty)?;
    let refs = references(&out);
    for gone in [s, t] {
        if refs.contains(gone) {
            let holder = out.entries.iter().find(|e| {
                let mut r = BTreeSet::new();
                if let Some(ty) = e.typing.active() {
                    ty.protocol_targets(&mut r);
                }
                r.contains(gone) || e.queue.items.iter().any(|i| i.target() == gone)
            });
            return Err(CutError::DanglingReference {
                endpoint: holder.map_or(gone.clone(), |e| e.endpoint.clone()),
                name: gone.clone(),
            });
        }
    }
    Ok(tidy(out))
}

/// The set of conclusions of a cut: every distribution followed by substitution.
pub fn cut_conclusions(top: &CutSide, bottom: &CutSide) -> Result<Vec<TypingContext>, CutError> {
    let pair = CutPair::new(top.clone(), bottom.clone())?;
    let mut out: Vec<TypingContext> = Vec::new();
    for d in distr_enumerate(&pair) {
        if let Ok(g) = subst_run(&d) {
            if !out.iter().any(|o| o.equivalent(&g)) {
                out.push(g);
            }
        }
    }
    out.sort_by_key(|g| g.normalized());
    Ok(out)
}
