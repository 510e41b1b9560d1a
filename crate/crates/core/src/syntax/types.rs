use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

/// A channel endpoint name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Endpoint(Arc<str>);

impl Endpoint {
    pub fn new(name: &str) -> Self {
        Endpoint(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The name without any `#n` freshness suffix.
    pub fn base(&self) -> &str {
        match self.0.find('#') {
            Some(i) => &self.0[..i],
            None => &self.0,
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Endpoint {
    fn from(s: &str) -> Self {
        Endpoint::new(s)
    }
}

/// Returns `base#n` for the smallest `n` such that the name is not rejected by `taken`.
pub fn fresh_name(base: &Endpoint, taken: impl Fn(&Endpoint) -> bool) -> Endpoint {
    let stem = base.base();
    (1..)
        .map(|n| Endpoint::new(&format!("{stem}#{n}")))
        .find(|e| !taken(e))
        .expect("unbounded counter")
}

pub type Targets = BTreeSet<Endpoint>;

/// Session types with forwarding annotations. Erased types have every slot empty.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Type {
    Atom(Arc<str>),
    DualAtom(Arc<str>),
    One(Targets),
    Bot(Option<Endpoint>),
    Tensor(Box<Type>, Box<Type>, Targets),
    Par(Box<Type>, Box<Type>, Option<Endpoint>),
    Plus(Box<Type>, Box<Type>, Option<Endpoint>),
    With(Box<Type>, Box<Type>, Targets),
    OfCourse(Box<Type>, Targets),
    WhyNot(Box<Type>, Option<Endpoint>),
}

/// The connective kinds that carry annotations.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub enum Conn {
    One,
    Bot,
    Tensor,
    Par,
    Plus,
    With,
    OfCourse,
    WhyNot,
}

/// A path from the root of a type: 0 = left child or body, 1 = right child.
pub type Path = Vec<u8>;

impl Type {
    pub fn atom(name: &str) -> Type {
        Type::Atom(Arc::from(name))
    }

    pub fn dual_atom(name: &str) -> Type {
        Type::DualAtom(Arc::from(name))
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Type::Atom(_) | Type::DualAtom(_))
    }

    pub fn conn(&self) -> Option<Conn> {
        Some(match self {
            Type::Atom(_) | Type::DualAtom(_) => return None,
            Type::One(_) => Conn::One,
            Type::Bot(_) => Conn::Bot,
            Type::Tensor(..) => Conn::Tensor,
            Type::Par(..) => Conn::Par,
            Type::Plus(..) => Conn::Plus,
            Type::With(..) => Conn::With,
            Type::OfCourse(..) => Conn::OfCourse,
            Type::WhyNot(..) => Conn::WhyNot,
        })
    }

    /// Drops every annotation.
    pub fn erase(&self) -> Type {
        match self {
            Type::Atom(_) | Type::DualAtom(_) => self.clone(),
            Type::One(_) => Type::One(Targets::new()),
            Type::Bot(_) => Type::Bot(None),
            Type::Tensor(a, b, _) => Type::Tensor(Box::new(a.erase()), Box::new(b.erase()), Targets::new()),
            Type::Par(a, b, _) => Type::Par(Box::new(a.erase()), Box::new(b.erase()), None),
            Type::Plus(a, b, _) => Type::Plus(Box::new(a.erase()), Box::new(b.erase()), None),
            Type::With(a, b, _) => Type::With(Box::new(a.erase()), Box::new(b.erase()), Targets::new()),
            Type::OfCourse(a, _) => Type::OfCourse(Box::new(a.erase()), Targets::new()),
            Type::WhyNot(a, _) => Type::WhyNot(Box::new(a.erase()), None),
        }
    }

    /// Linear negation of the erased type.
    pub fn dual(&self) -> Type {
        let d = |t: &Type| Box::new(t.dual());
        match self {
            Type::Atom(a) => Type::DualAtom(a.clone()),
            Type::DualAtom(a) => Type::Atom(a.clone()),
            Type::One(_) => Type::Bot(None),
            Type::Bot(_) => Type::One(Targets::new()),
            Type::Tensor(a, b, _) => Type::Par(d(a), d(b), None),
            Type::Par(a, b, _) => Type::Tensor(d(a), d(b), Targets::new()),
            Type::Plus(a, b, _) => Type::With(d(a), d(b), Targets::new()),
            Type::With(a, b, _) => Type::Plus(d(a), d(b), None),
            Type::OfCourse(a, _) => Type::WhyNot(d(a), None),
            Type::WhyNot(a, _) => Type::OfCourse(d(a), Targets::new()),
        }
    }

    /// Equality up to annotations.
    pub fn erased_eq(&self, other: &Type) -> bool {
        match (self, other) {
            (Type::Atom(a), Type::Atom(b)) | (Type::DualAtom(a), Type::DualAtom(b)) => a == b,
            (Type::One(_), Type::One(_)) | (Type::Bot(_), Type::Bot(_)) => true,
            (Type::Tensor(a, b, _), Type::Tensor(c, d, _))
            | (Type::Par(a, b, _), Type::Par(c, d, _))
            | (Type::Plus(a, b, _), Type::Plus(c, d, _))
            | (Type::With(a, b, _), Type::With(c, d, _)) => a.erased_eq(c) && b.erased_eq(d),
            (Type::OfCourse(a, _), Type::OfCourse(b, _)) | (Type::WhyNot(a, _), Type::WhyNot(b, _)) => a.erased_eq(b),
            _ => false,
        }
    }

    /// `self` and `other` are dual up to annotations.
    pub fn is_dual_of(&self, other: &Type) -> bool {
        self.erased_eq(&other.dual())
    }

    /// Number of connectives and units.
    pub fn size(&self) -> usize {
        match self {
            Type::Atom(_) | Type::DualAtom(_) => 0,
            Type::One(_) | Type::Bot(_) => 1,
            Type::Tensor(a, b, _) | Type::Par(a, b, _) | Type::Plus(a, b, _) | Type::With(a, b, _) => 1 + a.size() + b.size(),
            Type::OfCourse(a, _) | Type::WhyNot(a, _) => 1 + a.size(),
        }
    }

    pub fn is_erased(&self) -> bool {
        *self == self.erase()
    }

    /// Every annotation slot on a protocol position is nonempty.
    /// Payload positions (left of ⊗ and ⅋) are typed by a separate judgement and are skipped.
    pub fn is_fully_annotated(&self) -> bool {
        match self {
            Type::Atom(_) | Type::DualAtom(_) => true,
            Type::One(t) => !t.is_empty(),
            Type::Bot(t) => t.is_some(),
            Type::Tensor(_, b, t) => !t.is_empty() && b.is_fully_annotated(),
            Type::Par(_, b, t) => t.is_some() && b.is_fully_annotated(),
            Type::Plus(a, b, t) => t.is_some() && a.is_fully_annotated() && b.is_fully_annotated(),
            Type::With(a, b, t) => !t.is_empty() && a.is_fully_annotated() && b.is_fully_annotated(),
            Type::OfCourse(a, t) => !t.is_empty() && a.is_fully_annotated(),
            Type::WhyNot(a, t) => t.is_some() && a.is_fully_annotated(),
        }
    }

    /// Annotation targets on protocol positions.
    pub fn protocol_targets(&self, out: &mut Targets) {
        match self {
            Type::Atom(_) | Type::DualAtom(_) => {}
            Type::One(t) => out.extend(t.iter().cloned()),
            Type::Bot(t) => out.extend(t.iter().cloned()),
            Type::Tensor(_, b, t) => {
                out.extend(t.iter().cloned());
                b.protocol_targets(out);
            }
            Type::Par(_, b, t) => {
                out.extend(t.iter().cloned());
                b.protocol_targets(out);
            }
            Type::Plus(a, b, t) => {
                out.extend(t.iter().cloned());
                a.protocol_targets(out);
                b.protocol_targets(out);
            }
            Type::With(a, b, t) => {
                out.extend(t.iter().cloned());
                a.protocol_targets(out);
                b.protocol_targets(out);
            }
            Type::OfCourse(a, t) => {
                out.extend(t.iter().cloned());
                a.protocol_targets(out);
            }
            Type::WhyNot(a, t) => {
                out.extend(t.iter().cloned());
                a.protocol_targets(out);
            }
        }
    }

    /// Renames an annotation target everywhere on protocol positions.
    pub fn rename_target(&self, from: &Endpoint, to: &Endpoint) -> Type {
        let set = |t: &Targets| -> Targets { t.iter().map(|e| if e == from { to.clone() } else { e.clone() }).collect() };
        let one = |t: &Option<Endpoint>| t.as_ref().map(|e| if e == from { to.clone() } else { e.clone() });
        let r = |t: &Type| Box::new(t.rename_target(from, to));
        match self {
            Type::Atom(_) | Type::DualAtom(_) => self.clone(),
            Type::One(t) => Type::One(set(t)),
            Type::Bot(t) => Type::Bot(one(t)),
            Type::Tensor(a, b, t) => Type::Tensor(a.clone(), r(b), set(t)),
            Type::Par(a, b, t) => Type::Par(a.clone(), r(b), one(t)),
            Type::Plus(a, b, t) => Type::Plus(r(a), r(b), one(t)),
            Type::With(a, b, t) => Type::With(r(a), r(b), set(t)),
            Type::OfCourse(a, t) => Type::OfCourse(r(a), set(t)),
            Type::WhyNot(a, t) => Type::WhyNot(r(a), one(t)),
        }
    }

    /// Children along protocol positions, with their path step.
    pub fn protocol_children(&self) -> Vec<(u8, &Type)> {
        match self {
            Type::Atom(_) | Type::DualAtom(_) | Type::One(_) | Type::Bot(_) => vec![],
            Type::Tensor(_, b, _) | Type::Par(_, b, _) => vec![(1, b)],
            Type::Plus(a, b, _) | Type::With(a, b, _) => vec![(0, a), (1, b)],
            Type::OfCourse(a, _) | Type::WhyNot(a, _) => vec![(0, a)],
        }
    }

    /// Endpoints named by this node's own slot.
    pub fn slot_targets(&self) -> Vec<&Endpoint> {
        match self {
            Type::Atom(_) | Type::DualAtom(_) => vec![],
            Type::One(t) | Type::Tensor(_, _, t) | Type::With(_, _, t) | Type::OfCourse(_, t) => t.iter().collect(),
            Type::Bot(t) | Type::Par(_, _, t) | Type::Plus(_, _, t) | Type::WhyNot(_, t) => t.iter().collect(),
        }
    }

    /// First nodes of kind `conn` whose slot names `target`, one per protocol path, in pre-order.
    pub fn holes(&self, conn: Conn, target: &Endpoint) -> Vec<Path> {
        let mut out = Vec::new();
        self.holes_into(conn, target, &mut Vec::new(), &mut out);
        out
    }

    fn holes_into(&self, conn: Conn, target: &Endpoint, at: &mut Path, out: &mut Vec<Path>) {
        if self.conn() == Some(conn) && self.slot_targets().contains(&target) {
            out.push(at.clone());
            return;
        }
        for (step, child) in self.protocol_children() {
            at.push(step);
            child.holes_into(conn, target, at, out);
            at.pop();
        }
    }

    pub fn at(&self, path: &[u8]) -> Option<&Type> {
        let Some((&step, rest)) = path.split_first() else {
            return Some(self);
        };
        let child = match (self, step) {
            (Type::Tensor(a, _, _) | Type::Par(a, _, _) | Type::Plus(a, _, _) | Type::With(a, _, _), 0) => a,
            (Type::Tensor(_, b, _) | Type::Par(_, b, _) | Type::Plus(_, b, _) | Type::With(_, b, _), 1) => b,
            (Type::OfCourse(a, _) | Type::WhyNot(a, _), 0) => a,
            _ => return None,
        };
        child.at(rest)
    }

    pub fn at_mut(&mut self, path: &[u8]) -> Option<&mut Type> {
        let Some((&step, rest)) = path.split_first() else {
            return Some(self);
        };
        let child = match (self, step) {
            (Type::Tensor(a, _, _) | Type::Par(a, _, _) | Type::Plus(a, _, _) | Type::With(a, _, _), 0) => a,
            (Type::Tensor(_, b, _) | Type::Par(_, b, _) | Type::Plus(_, b, _) | Type::With(_, b, _), 1) => b,
            (Type::OfCourse(a, _) | Type::WhyNot(a, _), 0) => a,
            _ => return None,
        };
        child.at_mut(rest)
    }

    /// Mutable access to a multi-target slot.
    pub fn set_slot_mut(&mut self) -> Option<&mut Targets> {
        match self {
            Type::One(t) | Type::Tensor(_, _, t) | Type::With(_, _, t) | Type::OfCourse(_, t) => Some(t),
            _ => None,
        }
    }

    /// Mutable access to a single-target slot.
    pub fn single_slot_mut(&mut self) -> Option<&mut Option<Endpoint>> {
        match self {
            Type::Bot(t) | Type::Par(_, _, t) | Type::Plus(_, _, t) | Type::WhyNot(_, t) => Some(t),
            _ => None,
        }
    }
}
