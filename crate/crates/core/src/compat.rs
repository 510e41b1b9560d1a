//! The type-context transition system and multiparty compatibility.
//!
//! Configurations hold forwarder-side types: an environment `Δ` is compatible when some
//! annotation of its dual runs from empty queues to the empty configuration on every path.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Display, Formatter};

use crate::checker::annotations;
use crate::contexts::{CllContext, QueueItem, TypeContextConfig};
use crate::syntax::{fresh_name, Endpoint, Targets, Type};

#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub enum TransitionLabel {
    LinkStep(Endpoint, Endpoint),
    CloseStep(Targets, Endpoint),
    WaitStep(Endpoint, Endpoint),
    /// Gathering senders, the sending endpoint, and the carried payload types.
    SendStep(Targets, Endpoint, (Type, Vec<Type>)),
    RecvStep(Endpoint, Endpoint),
    SelLStep(Endpoint, Endpoint),
    SelRStep(Endpoint, Endpoint),
    BranchLStep(Endpoint, Targets),
    BranchRStep(Endpoint, Targets),
    BangStep(Targets, Endpoint),
    QuestStep(Endpoint, Endpoint),
}

fn set(t: &Targets) -> String {
    t.iter().map(Endpoint::as_str).collect::<Vec<_>>().join(",")
}

impl Display for TransitionLabel {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        use TransitionLabel::*;
        match self {
            LinkStep(x, y) => write!(f, "{x} fwd {y}"),
            CloseStep(us, x) => write!(f, "{} 1 {x}", set(us)),
            WaitStep(x, u) => write!(f, "{x} ⊥ {u}"),
            SendStep(us, x, (a, ais)) => {
                let ais: Vec<String> = ais.iter().map(Type::to_string).collect();
                write!(f, "{} ⊗ {x}[{a}, {{{}}}]", set(us), ais.join(", "))
            }
            RecvStep(x, u) => write!(f, "{x} ⅋ {u}"),
            SelLStep(x, z) => write!(f, "{x} ⊕l {z}"),
            SelRStep(x, z) => write!(f, "{x} ⊕r {z}"),
            BranchLStep(x, us) => write!(f, "{x} &l {}", set(us)),
            BranchRStep(x, us) => write!(f, "{x} &r {}", set(us)),
            BangStep(us, x) => write!(f, "{} ! {x}", set(us)),
            QuestStep(x, z) => write!(f, "{x} ? {z}"),
        }
    }
}

/// Drops empty queues and terminated endpoints with nothing left in transit.
fn tidy(mut c: TypeContextConfig) -> TypeContextConfig {
    c.sigma.retain(|_, v| !v.is_empty());
    let holding: BTreeSet<Endpoint> = c.sigma.keys().map(|(_, h)| h.clone()).collect();
    c.terminated.retain(|e| holding.contains(e));
    c
}

fn present(c: &TypeContextConfig, e: &Endpoint) -> bool {
    c.delta.contains_key(e) || c.terminated.contains(e)
}

fn queue<'a>(c: &'a TypeContextConfig, label: &Endpoint, holder: &Endpoint) -> &'a [QueueItem] {
    c.sigma.get(&(label.clone(), holder.clone())).map_or(&[], Vec::as_slice)
}

fn pop(c: &mut TypeContextConfig, label: &Endpoint, holder: &Endpoint) -> Option<QueueItem> {
    let q = c.sigma.get_mut(&(label.clone(), holder.clone()))?;
    if q.is_empty() {
        None
    } else {
        Some(q.remove(0))
    }
}

fn push(c: &mut TypeContextConfig, label: &Endpoint, holder: &Endpoint, item: QueueItem) {
    c.sigma.entry((label.clone(), holder.clone())).or_default().push(item);
}

fn all_names(c: &TypeContextConfig) -> BTreeSet<Endpoint> {
    let mut out: BTreeSet<Endpoint> = c.delta.keys().cloned().collect();
    out.extend(c.terminated.iter().cloned());
    for ((l, h), items) in &c.sigma {
        out.insert(l.clone());
        out.insert(h.clone());
        for i in items {
            if let QueueItem::Msg { payload, .. } = i {
                out.extend(payload.iter().map(|(v, _)| v.clone()));
            }
        }
    }
    out
}

fn nothing_in_transit(c: &TypeContextConfig) -> bool {
    c.sigma.values().all(Vec::is_empty)
}

/// All transitions out of a configuration.
pub fn transitions(c: &TypeContextConfig) -> Vec<(TransitionLabel, TypeContextConfig)> {
    let c = tidy(c.clone());
    let mut out = Vec::new();
    for (x, t) in &c.delta {
        let mut next = c.clone();
        next.delta.remove(x);
        match t {
            Type::Atom(a) | Type::DualAtom(a) => {
                if c.delta.len() != 2 || !c.terminated.is_empty() || !nothing_in_transit(&c) {
                    continue;
                }
                let (y, u) = c.delta.iter().find(|(y, _)| *y != x).unwrap();
                let dual = match t {
                    Type::Atom(_) => Type::DualAtom(a.clone()),
                    _ => Type::Atom(a.clone()),
                };
                if *u == dual && x < y {
                    out.push((TransitionLabel::LinkStep(x.clone(), y.clone()), TypeContextConfig::default()));
                }
            }
            Type::One(us) => {
                let ok = !us.is_empty()
                    && c.delta.len() == 1
                    && c.terminated == *us
                    && c.sigma
                        .iter()
                        .all(|((l, h), q)| l == x && us.contains(h) && q.as_slice() == [QueueItem::Star(x.clone())])
                    && us.iter().all(|u| queue(&c, x, u).len() == 1);
                if ok {
                    out.push((TransitionLabel::CloseStep(us.clone(), x.clone()), TypeContextConfig::default()));
                }
            }
            Type::Bot(Some(u)) if u != x && present(&c, u) => {
                next.terminated.insert(x.clone());
                push(&mut next, u, x, QueueItem::Star(u.clone()));
                out.push((TransitionLabel::WaitStep(x.clone(), u.clone()), next));
            }
            Type::Par(a, b, Some(u)) if u != x && present(&c, u) => {
                let taken = all_names(&c);
                let y = fresh_name(x, |e| taken.contains(e));
                push(
                    &mut next,
                    u,
                    x,
                    QueueItem::Msg {
                        target: u.clone(),
                        payload: vec![(y, (**a).clone())],
                    },
                );
                next.delta.insert(x.clone(), (**b).clone());
                out.push((TransitionLabel::RecvStep(x.clone(), u.clone()), next));
            }
            Type::Tensor(a, b, us) if !us.is_empty() => {
                let mut carried = Vec::new();
                let mut ok = true;
                for u in us {
                    match (u != x, pop(&mut next, x, u)) {
                        (true, Some(QueueItem::Msg { payload, .. })) => carried.extend(payload.into_iter().map(|(_, t)| t.erase())),
                        _ => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    next.delta.insert(x.clone(), (**b).clone());
                    out.push((TransitionLabel::SendStep(us.clone(), x.clone(), (a.erase(), carried)), tidy(next)));
                }
            }
            Type::Plus(a, b, Some(z)) if z != x => match pop(&mut next, x, z) {
                Some(QueueItem::Left(_)) => {
                    next.delta.insert(x.clone(), (**a).clone());
                    out.push((TransitionLabel::SelLStep(x.clone(), z.clone()), tidy(next)));
                }
                Some(QueueItem::Right(_)) => {
                    next.delta.insert(x.clone(), (**b).clone());
                    out.push((TransitionLabel::SelRStep(x.clone(), z.clone()), tidy(next)));
                }
                _ => {}
            },
            Type::With(a, b, us) if !us.is_empty() && us.iter().all(|u| u != x && present(&c, u)) => {
                for (branch, tok, label) in [
                    (
                        a,
                        QueueItem::Left as fn(Endpoint) -> QueueItem,
                        TransitionLabel::BranchLStep(x.clone(), us.clone()),
                    ),
                    (b, QueueItem::Right, TransitionLabel::BranchRStep(x.clone(), us.clone())),
                ] {
                    let mut n = next.clone();
                    for u in us {
                        push(&mut n, u, x, tok(u.clone()));
                    }
                    n.delta.insert(x.clone(), (**branch).clone());
                    out.push((label, n));
                }
            }
            Type::OfCourse(a, us) => {
                let others: Targets = c.delta.keys().filter(|e| *e != x).cloned().collect();
                let shaped = !us.is_empty()
                    && *us == others
                    && c.terminated.is_empty()
                    && nothing_in_transit(&c)
                    && others.iter().all(|o| matches!(c.delta[o], Type::WhyNot(..)));
                if shaped {
                    for u in us {
                        push(&mut next, u, x, QueueItem::Query(u.clone()));
                    }
                    next.delta.insert(x.clone(), (**a).clone());
                    out.push((TransitionLabel::BangStep(us.clone(), x.clone()), next));
                }
            }
            Type::WhyNot(a, Some(z)) if z != x => {
                if let Some(QueueItem::Query(_)) = pop(&mut next, x, z) {
                    next.delta.insert(x.clone(), (**a).clone());
                    out.push((TransitionLabel::QuestStep(x.clone(), z.clone()), tidy(next)));
                }
            }
            _ => {}
        }
    }
    out
}

/// Memo tables for executability and compatibility of carried environments.
#[derive(Default)]
pub struct Explorer {
    exec: HashMap<TypeContextConfig, bool>,
    compat: HashMap<Vec<Type>, bool>,
}

impl Explorer {
    pub fn new() -> Explorer {
        Explorer::default()
    }

    pub fn is_executable(&mut self, c: &TypeContextConfig) -> bool {
        let c = tidy(c.clone());
        if let Some(&v) = self.exec.get(&c) {
            return v;
        }
        let v = self.explore(&c);
        self.exec.insert(c, v);
        v
    }

    fn explore(&mut self, c: &TypeContextConfig) -> bool {
        if c.is_final() {
            return true;
        }
        let steps = transitions(c);
        !steps.is_empty() && steps.iter().all(|(label, next)| self.carried_ok(label) && self.is_executable(next))
    }

    fn carried_ok(&mut self, label: &TransitionLabel) -> bool {
        match label {
            TransitionLabel::SendStep(_, _, (a, ais)) => {
                let mut env: Vec<Type> = ais.clone();
                env.push(a.clone());
                self.forwarder_side_compatible(env)
            }
            _ => true,
        }
    }

    /// Some annotation of the environment (already in forwarder orientation) is executable.
    fn forwarder_side_compatible(&mut self, mut env: Vec<Type>) -> bool {
        env.sort();
        if let Some(&v) = self.compat.get(&env) {
            return v;
        }
        let ctx: CllContext = env
            .iter()
            .enumerate()
            .map(|(i, t)| (Endpoint::new(&format!("p{i}")), t.clone()))
            .collect();
        let v = annotations(&ctx).any(|g| self.is_executable(&config_of(&g)));
        self.compat.insert(env, v);
        v
    }

    pub fn multiparty_compatible(&mut self, d: &CllContext) -> bool {
        self.first_executable_annotation(d).is_some()
    }

    /// The first annotation of the dual environment that is executable.
    pub fn first_executable_annotation(&mut self, d: &CllContext) -> Option<TypeContextConfig> {
        let dual: CllContext = d.iter().map(|(e, t)| (e.clone(), t.dual())).collect();
        annotations(&dual).map(|g| config_of(&g)).find(|c| self.is_executable(c))
    }

    /// A maximal path that fails: it stops in a non-final configuration, or ends in a send
    /// whose carried environment is not compatible.
    pub fn stuck_path(&mut self, c: &TypeContextConfig) -> Option<(Vec<TransitionLabel>, TypeContextConfig)> {
        let c = tidy(c.clone());
        if self.is_executable(&c) {
            return None;
        }
        let steps = transitions(&c);
        if steps.is_empty() {
            return Some((vec![], c));
        }
        for (label, next) in steps {
            if !self.carried_ok(&label) {
                return Some((vec![label], next));
            }
            if let Some((mut rest, end)) = self.stuck_path(&next) {
                rest.insert(0, label);
                return Some((rest, end));
            }
        }
        unreachable!("a non-executable configuration has a failing step")
    }
}

fn config_of(g: &crate::contexts::TypingContext) -> TypeContextConfig {
    let delta: BTreeMap<Endpoint, Type> = g
        .entries
        .iter()
        .filter_map(|e| e.typing.active().map(|t| (e.endpoint.clone(), t.clone())))
        .collect();
    TypeContextConfig::empty_queues(delta)
}

pub fn is_executable(c: &TypeContextConfig) -> bool {
    Explorer::new().is_executable(c)
}

pub fn multiparty_compatible(d: &CllContext) -> bool {
    Explorer::new().multiparty_compatible(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contexts::config_from_context;
    use crate::syntax::{parse_cll_context, parse_context};

    fn cfg(s: &str) -> TypeContextConfig {
        config_from_context(&parse_context(s).unwrap())
    }

    #[test]
    fn link_step() {
        let t = transitions(&cfg("x : ~a, y : a"));
        assert_eq!(
            t,
            vec![(TransitionLabel::LinkStep("x".into(), "y".into()), TypeContextConfig::default())]
        );
        assert!(transitions(&TypeContextConfig::default()).is_empty());
    }

    #[test]
    fn executability() {
        assert!(is_executable(&cfg("x : ~a, y : a")));
        assert!(!is_executable(&cfg("x : a, y : a")));
        assert!(is_executable(&cfg(
            "x : ~name |{y} ~cost *{y} bot{y}, y : cost |{x} name *{x} 1{x}"
        )));
    }

    #[test]
    fn crisscross_starts_with_receives() {
        let t = transitions(&cfg("x : ~name |{y} ~cost *{y} bot{y}, y : cost |{x} name *{x} 1{x}"));
        let labels: Vec<String> = t.iter().map(|(l, _)| l.to_string()).collect();
        assert_eq!(labels, ["x ⅋ y", "y ⅋ x"]);
    }

    #[test]
    fn compatibility() {
        assert!(multiparty_compatible(
            &parse_cll_context("x : name * cost | 1, y : ~cost * ~name | bot").unwrap()
        ));
        assert!(multiparty_compatible(&parse_cll_context("x : a, y : ~a").unwrap()));
        assert!(!multiparty_compatible(&parse_cll_context("x : 1").unwrap()));
        let mut ex = Explorer::new();
        let (path, _) = ex.stuck_path(&cfg("x : a, y : a")).unwrap();
        assert!(path.is_empty());
    }
}
