use std::collections::BTreeSet;

use super::types::{fresh_name, Endpoint, Type};

/// Process terms. Forwarders are the cut-free fragment.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub enum Process {
    Link(Endpoint, Endpoint),
    Close(Endpoint),
    Wait(Endpoint, Box<Process>),
    /// `x[y].(P | Q)`: `y` is bound in `P`.
    Send(Endpoint, Endpoint, Box<Process>, Box<Process>),
    /// `x(y). P`
    Recv(Endpoint, Endpoint, Box<Process>),
    Inl(Endpoint, Box<Process>),
    Inr(Endpoint, Box<Process>),
    Case(Endpoint, Box<Process>, Box<Process>),
    /// `!x(y). P`
    Server(Endpoint, Endpoint, Box<Process>),
    /// `?x[y]. P`
    Client(Endpoint, Endpoint, Box<Process>),
    /// `(nu x y : A)(P | Q)` with `x : A` in `P` and `y` of the dual type in `Q`.
    Cut {
        x: Endpoint,
        y: Endpoint,
        ty: Type,
        left: Box<Process>,
        right: Box<Process>,
    },
    MCut(Box<MCutTerm>),
}

/// Multiparty composition through a forwarder, with messages in transit held as pending processes.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct MCutTerm {
    pub bound: Vec<Endpoint>,
    pub fwd: Process,
    pub pending: Vec<(Endpoint, Process)>,
    pub parts: Vec<Process>,
}

impl Process {
    pub fn link(x: &str, y: &str) -> Process {
        Process::Link(x.into(), y.into())
    }

    /// The endpoint this process acts on first, if it is an action.
    pub fn subject(&self) -> Option<&Endpoint> {
        match self {
            Process::Close(x)
            | Process::Wait(x, _)
            | Process::Send(x, ..)
            | Process::Recv(x, ..)
            | Process::Inl(x, _)
            | Process::Inr(x, _)
            | Process::Case(x, ..)
            | Process::Server(x, ..)
            | Process::Client(x, ..) => Some(x),
            Process::Link(..) | Process::Cut { .. } | Process::MCut(_) => None,
        }
    }

    pub fn free_names(&self) -> BTreeSet<Endpoint> {
        let mut out = BTreeSet::new();
        self.free_into(&mut out);
        out
    }

    pub fn is_free(&self, e: &Endpoint) -> bool {
        self.free_names().contains(e)
    }

    fn free_into(&self, out: &mut BTreeSet<Endpoint>) {
        let bound_in = |p: &Process, b: &Endpoint, out: &mut BTreeSet<Endpoint>| {
            let mut inner = p.free_names();
            inner.remove(b);
            out.extend(inner);
        };
        match self {
            Process::Link(x, y) => {
                out.insert(x.clone());
                out.insert(y.clone());
            }
            Process::Close(x) => {
                out.insert(x.clone());
            }
            Process::Wait(x, p) | Process::Inl(x, p) | Process::Inr(x, p) => {
                out.insert(x.clone());
                p.free_into(out);
            }
            Process::Send(x, y, p, q) => {
                out.insert(x.clone());
                bound_in(p, y, out);
                q.free_into(out);
            }
            Process::Recv(x, y, p) | Process::Server(x, y, p) | Process::Client(x, y, p) => {
                out.insert(x.clone());
                bound_in(p, y, out);
            }
            Process::Case(x, p, q) => {
                out.insert(x.clone());
                p.free_into(out);
                q.free_into(out);
            }
            Process::Cut { x, y, left, right, .. } => {
                bound_in(left, x, out);
                bound_in(right, y, out);
            }
            Process::MCut(m) => {
                let mut inner = BTreeSet::new();
                m.fwd.free_into(&mut inner);
                for (_, p) in &m.pending {
                    p.free_into(&mut inner);
                }
                for p in &m.parts {
                    p.free_into(&mut inner);
                }
                for b in m.bound.iter().chain(m.pending.iter().map(|(y, _)| y)) {
                    inner.remove(b);
                }
                out.extend(inner);
            }
        }
    }

    /// Every name occurring anywhere, free or bound.
    pub fn all_names(&self) -> BTreeSet<Endpoint> {
        let mut out = BTreeSet::new();
        self.all_into(&mut out);
        out
    }

    fn all_into(&self, out: &mut BTreeSet<Endpoint>) {
        match self {
            Process::Link(x, y) => {
                out.insert(x.clone());
                out.insert(y.clone());
            }
            Process::Close(x) => {
                out.insert(x.clone());
            }
            Process::Wait(x, p) | Process::Inl(x, p) | Process::Inr(x, p) => {
                out.insert(x.clone());
                p.all_into(out);
            }
            Process::Send(x, y, p, q) => {
                out.insert(x.clone());
                out.insert(y.clone());
                p.all_into(out);
                q.all_into(out);
            }
            Process::Recv(x, y, p) | Process::Server(x, y, p) | Process::Client(x, y, p) => {
                out.insert(x.clone());
                out.insert(y.clone());
                p.all_into(out);
            }
            Process::Case(x, p, q) => {
                out.insert(x.clone());
                p.all_into(out);
                q.all_into(out);
            }
            Process::Cut { x, y, left, right, .. } => {
                out.insert(x.clone());
                out.insert(y.clone());
                left.all_into(out);
                right.all_into(out);
            }
            Process::MCut(m) => {
                out.extend(m.bound.iter().cloned());
                m.fwd.all_into(out);
                for (y, p) in &m.pending {
                    out.insert(y.clone());
                    p.all_into(out);
                }
                for p in &m.parts {
                    p.all_into(out);
                }
            }
        }
    }

    /// Number of term constructors.
    pub fn size(&self) -> usize {
        match self {
            Process::Link(..) | Process::Close(_) => 1,
            Process::Wait(_, p)
            | Process::Inl(_, p)
            | Process::Inr(_, p)
            | Process::Recv(_, _, p)
            | Process::Server(_, _, p)
            | Process::Client(_, _, p) => 1 + p.size(),
            Process::Send(_, _, p, q) | Process::Case(_, p, q) => 1 + p.size() + q.size(),
            Process::Cut { left, right, .. } => 1 + left.size() + right.size(),
            Process::MCut(m) => {
                1 + m.fwd.size() + m.pending.iter().map(|(_, p)| p.size()).sum::<usize>() + m.parts.iter().map(Process::size).sum::<usize>()
            }
        }
    }

    pub fn is_cut_free(&self) -> bool {
        match self {
            Process::Link(..) | Process::Close(_) => true,
            Process::Wait(_, p)
            | Process::Inl(_, p)
            | Process::Inr(_, p)
            | Process::Recv(_, _, p)
            | Process::Server(_, _, p)
            | Process::Client(_, _, p) => p.is_cut_free(),
            Process::Send(_, _, p, q) | Process::Case(_, p, q) => p.is_cut_free() && q.is_cut_free(),
            Process::Cut { .. } | Process::MCut(_) => false,
        }
    }

    /// Capture-avoiding renaming of the free name `from` to `to`.
    pub fn rename(&self, from: &Endpoint, to: &Endpoint) -> Process {
        if from == to {
            return self.clone();
        }
        let r = |e: &Endpoint| if e == from { to.clone() } else { e.clone() };
        let sub = |p: &Process| Box::new(p.rename(from, to));
        match self {
            Process::Link(x, y) => Process::Link(r(x), r(y)),
            Process::Close(x) => Process::Close(r(x)),
            Process::Wait(x, p) => Process::Wait(r(x), sub(p)),
            Process::Inl(x, p) => Process::Inl(r(x), sub(p)),
            Process::Inr(x, p) => Process::Inr(r(x), sub(p)),
            Process::Case(x, p, q) => Process::Case(r(x), sub(p), sub(q)),
            Process::Send(x, y, p, q) => {
                let (y, p) = rename_under(y, p, from, to);
                Process::Send(r(x), y, Box::new(p), sub(q))
            }
            Process::Recv(x, y, p) => {
                let (y, p) = rename_under(y, p, from, to);
                Process::Recv(r(x), y, Box::new(p))
            }
            Process::Server(x, y, p) => {
                let (y, p) = rename_under(y, p, from, to);
                Process::Server(r(x), y, Box::new(p))
            }
            Process::Client(x, y, p) => {
                let (y, p) = rename_under(y, p, from, to);
                Process::Client(r(x), y, Box::new(p))
            }
            Process::Cut { x, y, ty, left, right } => {
                let (x, left) = rename_under(x, left, from, to);
                let (y, right) = rename_under(y, right, from, to);
                Process::Cut {
                    x,
                    y,
                    ty: ty.clone(),
                    left: Box::new(left),
                    right: Box::new(right),
                }
            }
            Process::MCut(m) => {
                let binders: Vec<Endpoint> = m.bound.iter().chain(m.pending.iter().map(|(y, _)| y)).cloned().collect();
                if binders.contains(from) {
                    return self.clone();
                }
                let mut m = (**m).clone();
                if binders.contains(to) {
                    let avoid = self.all_names();
                    let fresh = fresh_name(to, |e| avoid.contains(e) || e == from);
                    m = m.rename_binder(to, &fresh);
                }
                Process::MCut(Box::new(MCutTerm {
                    bound: m.bound,
                    fwd: m.fwd.rename(from, to),
                    pending: m.pending.into_iter().map(|(y, p)| (y, p.rename(from, to))).collect(),
                    parts: m.parts.iter().map(|p| p.rename(from, to)).collect(),
                }))
            }
        }
    }

    /// Renames bound names apart from `avoid`.
    pub fn freshen_binders(&self, avoid: &BTreeSet<Endpoint>) -> Process {
        let mut taken = avoid.clone();
        taken.extend(self.all_names());
        self.freshen_into(avoid, &mut taken)
    }

    fn freshen_into(&self, avoid: &BTreeSet<Endpoint>, taken: &mut BTreeSet<Endpoint>) -> Process {
        let bind = |y: &Endpoint, p: &Process, taken: &mut BTreeSet<Endpoint>| -> (Endpoint, Process) {
            if avoid.contains(y) {
                let f = fresh_name(y, |e| taken.contains(e));
                taken.insert(f.clone());
                let p = p.rename(y, &f);
                (f, p.freshen_into(avoid, taken))
            } else {
                (y.clone(), p.freshen_into(avoid, taken))
            }
        };
        match self {
            Process::Link(..) | Process::Close(_) => self.clone(),
            Process::Wait(x, p) => Process::Wait(x.clone(), Box::new(p.freshen_into(avoid, taken))),
            Process::Inl(x, p) => Process::Inl(x.clone(), Box::new(p.freshen_into(avoid, taken))),
            Process::Inr(x, p) => Process::Inr(x.clone(), Box::new(p.freshen_into(avoid, taken))),
            Process::Case(x, p, q) => Process::Case(
                x.clone(),
                Box::new(p.freshen_into(avoid, taken)),
                Box::new(q.freshen_into(avoid, taken)),
            ),
            Process::Send(x, y, p, q) => {
                let (y, p) = bind(y, p, taken);
                Process::Send(x.clone(), y, Box::new(p), Box::new(q.freshen_into(avoid, taken)))
            }
            Process::Recv(x, y, p) => {
                let (y, p) = bind(y, p, taken);
                Process::Recv(x.clone(), y, Box::new(p))
            }
            Process::Server(x, y, p) => {
                let (y, p) = bind(y, p, taken);
                Process::Server(x.clone(), y, Box::new(p))
            }
            Process::Client(x, y, p) => {
                let (y, p) = bind(y, p, taken);
                Process::Client(x.clone(), y, Box::new(p))
            }
            Process::Cut { x, y, ty, left, right } => {
                let (x, left) = bind(x, left, taken);
                let (y, right) = bind(y, right, taken);
                Process::Cut {
                    x,
                    y,
                    ty: ty.clone(),
                    left: Box::new(left),
                    right: Box::new(right),
                }
            }
            Process::MCut(m) => {
                let mut m = (**m).clone();
                let binders: Vec<Endpoint> = m.bound.iter().chain(m.pending.iter().map(|(y, _)| y)).cloned().collect();
                for b in binders {
                    if avoid.contains(&b) {
                        let f = fresh_name(&b, |e| taken.contains(e));
                        taken.insert(f.clone());
                        m = m.rename_binder(&b, &f);
                    }
                }
                Process::MCut(Box::new(MCutTerm {
                    bound: m.bound,
                    fwd: m.fwd.freshen_into(avoid, taken),
                    pending: m.pending.into_iter().map(|(y, p)| (y, p.freshen_into(avoid, taken))).collect(),
                    parts: m.parts.iter().map(|p| p.freshen_into(avoid, taken)).collect(),
                }))
            }
        }
    }

    /// Canonical representative up to renaming of bound names.
    pub fn canonical(&self) -> Process {
        let mut counter = 0usize;
        self.canon(&mut counter)
    }

    fn canon(&self, n: &mut usize) -> Process {
        let bind = |y: &Endpoint, p: &Process, n: &mut usize| -> (Endpoint, Process) {
            *n += 1;
            let f = Endpoint::new(&format!("_{n}"));
            (f.clone(), p.rename(y, &f).canon(n))
        };
        match self {
            Process::Link(..) | Process::Close(_) => self.clone(),
            Process::Wait(x, p) => Process::Wait(x.clone(), Box::new(p.canon(n))),
            Process::Inl(x, p) => Process::Inl(x.clone(), Box::new(p.canon(n))),
            Process::Inr(x, p) => Process::Inr(x.clone(), Box::new(p.canon(n))),
            Process::Case(x, p, q) => Process::Case(x.clone(), Box::new(p.canon(n)), Box::new(q.canon(n))),
            Process::Send(x, y, p, q) => {
                let (y, p) = bind(y, p, n);
                Process::Send(x.clone(), y, Box::new(p), Box::new(q.canon(n)))
            }
            Process::Recv(x, y, p) => {
                let (y, p) = bind(y, p, n);
                Process::Recv(x.clone(), y, Box::new(p))
            }
            Process::Server(x, y, p) => {
                let (y, p) = bind(y, p, n);
                Process::Server(x.clone(), y, Box::new(p))
            }
            Process::Client(x, y, p) => {
                let (y, p) = bind(y, p, n);
                Process::Client(x.clone(), y, Box::new(p))
            }
            Process::Cut { x, y, ty, left, right } => {
                let (x, left) = bind(x, left, n);
                let (y, right) = bind(y, right, n);
                Process::Cut {
                    x,
                    y,
                    ty: ty.clone(),
                    left: Box::new(left),
                    right: Box::new(right),
                }
            }
            Process::MCut(m) => {
                let mut m = (**m).clone();
                let binders: Vec<Endpoint> = m.bound.iter().chain(m.pending.iter().map(|(y, _)| y)).cloned().collect();
                for b in binders {
                    *n += 1;
                    m = m.rename_binder(&b, &Endpoint::new(&format!("_{n}")));
                }
                Process::MCut(Box::new(MCutTerm {
                    bound: m.bound,
                    fwd: m.fwd.canon(n),
                    pending: m.pending.into_iter().map(|(y, p)| (y, p.canon(n))).collect(),
                    parts: m.parts.iter().map(|p| p.canon(n)).collect(),
                }))
            }
        }
    }

    /// Equality up to renaming of bound names.
    pub fn alpha_eq(&self, other: &Process) -> bool {
        self.canonical() == other.canonical()
    }
}

fn rename_under(binder: &Endpoint, body: &Process, from: &Endpoint, to: &Endpoint) -> (Endpoint, Process) {
    if binder == from {
        return (binder.clone(), body.clone());
    }
    if binder == to && body.is_free(from) {
        let avoid = body.all_names();
        let fresh = fresh_name(binder, |e| avoid.contains(e) || e == from || e == to);
        let body = body.rename(binder, &fresh);
        return (fresh, body.rename(from, to));
    }
    (binder.clone(), body.rename(from, to))
}

impl MCutTerm {
    /// Renames a binder of the composition throughout.
    pub fn rename_binder(&self, from: &Endpoint, to: &Endpoint) -> MCutTerm {
        let r = |e: &Endpoint| if e == from { to.clone() } else { e.clone() };
        MCutTerm {
            bound: self.bound.iter().map(r).collect(),
            fwd: self.fwd.rename(from, to),
            pending: self.pending.iter().map(|(y, p)| (r(y), p.rename(from, to))).collect(),
            parts: self.parts.iter().map(|p| p.rename(from, to)).collect(),
        }
    }
}
