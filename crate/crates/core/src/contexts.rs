//! Queues of in-transit items, forwarder typing contexts and compatibility configurations.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::syntax::{Endpoint, Type};

/// An item in transit, labelled with the endpoint it is destined for.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum QueueItem {
    /// A boxed message; more than one payload entry arises from gathering.
    Msg {
        target: Endpoint,
        payload: Vec<(Endpoint, Type)>,
    },
    Star(Endpoint),
    Query(Endpoint),
    Left(Endpoint),
    Right(Endpoint),
}

impl QueueItem {
    pub fn msg(target: &str, payload: &str, ty: Type) -> QueueItem {
        QueueItem::Msg {
            target: target.into(),
            payload: vec![(payload.into(), ty)],
        }
    }

    pub fn target(&self) -> &Endpoint {
        match self {
            QueueItem::Msg { target, .. } => target,
            QueueItem::Star(t) | QueueItem::Query(t) | QueueItem::Left(t) | QueueItem::Right(t) => t,
        }
    }

    pub fn with_target(&self, to: &Endpoint) -> QueueItem {
        match self {
            QueueItem::Msg { payload, .. } => QueueItem::Msg {
                target: to.clone(),
                payload: payload.clone(),
            },
            QueueItem::Star(_) => QueueItem::Star(to.clone()),
            QueueItem::Query(_) => QueueItem::Query(to.clone()),
            QueueItem::Left(_) => QueueItem::Left(to.clone()),
            QueueItem::Right(_) => QueueItem::Right(to.clone()),
        }
    }

    pub fn is_token(&self) -> bool {
        !matches!(self, QueueItem::Msg { .. })
    }

    fn normalized(&self) -> QueueItem {
        match self {
            QueueItem::Msg { target, payload } => {
                let mut payload = payload.clone();
                payload.sort();
                QueueItem::Msg {
                    target: target.clone(),
                    payload,
                }
            }
            other => other.clone(),
        }
    }
}

/// FIFO of items; `cursor` marks the distribution boundary while a cut is being computed.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Queue {
    pub items: Vec<QueueItem>,
    pub cursor: Option<usize>,
}

impl Queue {
    pub fn new(items: Vec<QueueItem>) -> Queue {
        Queue { items, cursor: None }
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Position of the first item labelled `target`; items with other labels commute past it.
    pub fn first_for(&self, target: &Endpoint) -> Option<usize> {
        self.items.iter().position(|i| i.target() == target)
    }

    pub fn head_for(&self, target: &Endpoint) -> Option<&QueueItem> {
        self.first_for(target).map(|i| &self.items[i])
    }

    pub fn remove(&mut self, index: usize) -> QueueItem {
        if let Some(c) = self.cursor.as_mut() {
            if index < *c {
                *c -= 1;
            }
        }
        self.items.remove(index)
    }

    pub fn push(&mut self, item: QueueItem) {
        self.items.push(item);
    }

    /// Inserts before the cursor and advances it.
    pub fn insert_at_cursor(&mut self, item: QueueItem) {
        let c = self.cursor.get_or_insert(0);
        self.items.insert(*c, item);
        *c += 1;
    }
}

/// Canonical form: stable sort by label within each cursor segment.
pub fn normalize_queue(q: &Queue) -> Queue {
    let sort = |s: &[QueueItem]| {
        let mut v: Vec<QueueItem> = s.iter().map(QueueItem::normalized).collect();
        v.sort_by(|a, b| a.target().cmp(b.target()));
        v
    };
    match q.cursor {
        None => Queue {
            items: sort(&q.items),
            cursor: None,
        },
        Some(c) => {
            let mut items = sort(&q.items[..c]);
            items.extend(sort(&q.items[c..]));
            Queue { items, cursor: Some(c) }
        }
    }
}

pub fn queues_equivalent(a: &Queue, b: &Queue) -> bool {
    normalize_queue(a) == normalize_queue(b)
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Typing {
    Active(Type),
    Terminated,
}

impl Typing {
    pub fn active(&self) -> Option<&Type> {
        match self {
            Typing::Active(t) => Some(t),
            Typing::Terminated => None,
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ContextEntry {
    pub endpoint: Endpoint,
    pub queue: Queue,
    pub typing: Typing,
}

impl ContextEntry {
    pub fn active(e: &str, ty: Type) -> ContextEntry {
        ContextEntry {
            endpoint: e.into(),
            queue: Queue::default(),
            typing: Typing::Active(ty),
        }
    }

    pub fn with_queue(mut self, items: Vec<QueueItem>) -> ContextEntry {
        self.queue = Queue::new(items);
        self
    }
}

/// A forwarder judgement's context.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct TypingContext {
    pub entries: Vec<ContextEntry>,
}

/// A CP context: endpoints with erased types.
pub type CllContext = Vec<(Endpoint, Type)>;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ContextError {
    #[error("duplicate endpoint `{0}`")]
    Duplicate(Endpoint),
    #[error("endpoint `{0}` appears in a queue but not in the configuration")]
    Uncovered(Endpoint),
}

impl TypingContext {
    pub fn new(entries: Vec<ContextEntry>) -> TypingContext {
        TypingContext { entries }
    }

    pub fn check_distinct(&self) -> Result<(), ContextError> {
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if !seen.insert(&e.endpoint) {
                return Err(ContextError::Duplicate(e.endpoint.clone()));
            }
        }
        Ok(())
    }

    pub fn endpoints(&self) -> BTreeSet<Endpoint> {
        self.entries.iter().map(|e| e.endpoint.clone()).collect()
    }

    /// Endpoints, queue labels and boxed payload names.
    pub fn all_names(&self) -> BTreeSet<Endpoint> {
        let mut out = BTreeSet::new();
        for e in &self.entries {
            out.insert(e.endpoint.clone());
            for item in &e.queue.items {
                out.insert(item.target().clone());
                if let QueueItem::Msg { payload, .. } = item {
                    out.extend(payload.iter().map(|(v, _)| v.clone()));
                }
            }
        }
        out
    }

    pub fn get(&self, x: &Endpoint) -> Option<&ContextEntry> {
        self.entries.iter().find(|e| &e.endpoint == x)
    }

    pub fn get_mut(&mut self, x: &Endpoint) -> Option<&mut ContextEntry> {
        self.entries.iter_mut().find(|e| &e.endpoint == x)
    }

    pub fn type_of(&self, x: &Endpoint) -> Option<&Type> {
        self.get(x).and_then(|e| e.typing.active())
    }

    pub fn remove(&mut self, x: &Endpoint) -> Option<ContextEntry> {
        let i = self.entries.iter().position(|e| &e.endpoint == x)?;
        Some(self.entries.remove(i))
    }

    pub fn push(&mut self, entry: ContextEntry) {
        self.entries.push(entry);
    }

    /// Renames an endpoint, its queue labels and every annotation naming it.
    pub fn rename_endpoint(&self, from: &Endpoint, to: &Endpoint) -> TypingContext {
        let entries = self
            .entries
            .iter()
            .map(|e| ContextEntry {
                endpoint: if &e.endpoint == from { to.clone() } else { e.endpoint.clone() },
                queue: Queue {
                    items: e
                        .queue
                        .items
                        .iter()
                        .map(|i| if i.target() == from { i.with_target(to) } else { i.clone() })
                        .collect(),
                    cursor: e.queue.cursor,
                },
                typing: match &e.typing {
                    Typing::Active(t) => Typing::Active(t.rename_target(from, to)),
                    Typing::Terminated => Typing::Terminated,
                },
            })
            .collect();
        TypingContext { entries }
    }

    /// Canonical form: entries sorted by name, queues normalized.
    pub fn normalized(&self) -> TypingContext {
        let mut entries: Vec<ContextEntry> = self
            .entries
            .iter()
            .map(|e| ContextEntry {
                endpoint: e.endpoint.clone(),
                queue: normalize_queue(&e.queue),
                typing: e.typing.clone(),
            })
            .collect();
        entries.sort_by(|a, b| a.endpoint.cmp(&b.endpoint));
        TypingContext { entries }
    }

    pub fn equivalent(&self, other: &TypingContext) -> bool {
        self.normalized() == other.normalized()
    }

    pub fn clear_cursors(&mut self) {
        for e in &mut self.entries {
            e.queue.cursor = None;
        }
    }

    /// Total size of all types, including boxed payloads.
    pub fn total_size(&self) -> usize {
        self.entries
            .iter()
            .map(|e| {
                let own = e.typing.active().map_or(0, Type::size);
                let boxed: usize = e
                    .queue
                    .items
                    .iter()
                    .map(|i| match i {
                        QueueItem::Msg { payload, .. } => payload.iter().map(|(_, t)| t.size()).sum(),
                        _ => 0,
                    })
                    .sum();
                own + boxed
            })
            .sum()
    }

    /// Context with erased types, empty queues and all endpoints active.
    pub fn from_cll(ctx: &[(Endpoint, Type)]) -> TypingContext {
        TypingContext {
            entries: ctx
                .iter()
                .map(|(e, t)| ContextEntry {
                    endpoint: e.clone(),
                    queue: Queue::default(),
                    typing: Typing::Active(t.clone()),
                })
                .collect(),
        }
    }
}

/// Boxes become typed endpoints, tokens vanish, terminated entries keep only their queues.
pub fn erase_context(g: &TypingContext) -> CllContext {
    let mut out = Vec::new();
    for e in &g.entries {
        for item in &e.queue.items {
            if let QueueItem::Msg { payload, .. } = item {
                out.extend(payload.iter().map(|(y, t)| (y.clone(), t.erase())));
            }
        }
        if let Typing::Active(t) = &e.typing {
            out.push((e.endpoint.clone(), t.erase()));
        }
    }
    out.sort();
    out
}

/// A type environment together with the in-transit queues.
/// `sigma[(label, holder)]` holds the items at `holder` that are labelled `label`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct TypeContextConfig {
    pub delta: BTreeMap<Endpoint, Type>,
    pub terminated: BTreeSet<Endpoint>,
    pub sigma: BTreeMap<(Endpoint, Endpoint), Vec<QueueItem>>,
}

impl TypeContextConfig {
    pub fn empty_queues(delta: BTreeMap<Endpoint, Type>) -> TypeContextConfig {
        TypeContextConfig {
            delta,
            terminated: BTreeSet::new(),
            sigma: BTreeMap::new(),
        }
    }

    /// Terminal success: nothing left anywhere.
    pub fn is_final(&self) -> bool {
        self.delta.is_empty() && self.sigma.values().all(Vec::is_empty)
    }

    fn covers(&self, e: &Endpoint) -> bool {
        self.delta.contains_key(e) || self.terminated.contains(e)
    }
}

pub fn translate_config(c: &TypeContextConfig) -> Result<TypingContext, ContextError> {
    for ((label, holder), items) in &c.sigma {
        if items.is_empty() {
            continue;
        }
        for e in [label, holder] {
            if !c.covers(e) {
                return Err(ContextError::Uncovered(e.clone()));
            }
        }
    }
    let mut holders: BTreeSet<&Endpoint> = c.delta.keys().collect();
    holders.extend(c.sigma.iter().filter(|(_, v)| !v.is_empty()).map(|((_, h), _)| h));
    let entries = holders
        .into_iter()
        .map(|h| {
            let items = c
                .sigma
                .iter()
                .filter(|((_, holder), _)| holder == h)
                .flat_map(|(_, v)| v.iter().cloned())
                .collect();
            ContextEntry {
                endpoint: h.clone(),
                queue: Queue::new(items),
                typing: c.delta.get(h).map_or(Typing::Terminated, |t| Typing::Active(t.clone())),
            }
        })
        .collect();
    Ok(TypingContext { entries })
}

/// Inverse of [`translate_config`] up to queue equivalence.
pub fn config_from_context(g: &TypingContext) -> TypeContextConfig {
    let mut c = TypeContextConfig::default();
    for e in &g.entries {
        match &e.typing {
            Typing::Active(t) => {
                c.delta.insert(e.endpoint.clone(), t.clone());
            }
            Typing::Terminated => {
                if !e.queue.is_empty() {
                    c.terminated.insert(e.endpoint.clone());
                }
            }
        }
        for item in &e.queue.items {
            c.sigma
                .entry((item.target().clone(), e.endpoint.clone()))
                .or_default()
                .push(item.clone());
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_type;

    fn star(t: &str) -> QueueItem {
        QueueItem::Star(t.into())
    }

    #[test]
    fn normalize_sorts_by_label_and_keeps_per_label_order() {
        let q = Queue::new(vec![
            QueueItem::Left("y".into()),
            star("x"),
            QueueItem::Right("y".into()),
            QueueItem::Query("x".into()),
        ]);
        let n = normalize_queue(&q);
        assert_eq!(
            n.items,
            vec![
                star("x"),
                QueueItem::Query("x".into()),
                QueueItem::Left("y".into()),
                QueueItem::Right("y".into())
            ]
        );
        assert_eq!(normalize_queue(&n), n);
        assert!(normalize_queue(&Queue::default()).is_empty());
    }

    #[test]
    fn equivalence_commutes_only_distinct_labels() {
        let a = Queue::new(vec![QueueItem::Left("x".into()), QueueItem::Right("y".into())]);
        let b = Queue::new(vec![QueueItem::Right("y".into()), QueueItem::Left("x".into())]);
        assert!(queues_equivalent(&a, &b));
        let c = Queue::new(vec![QueueItem::Left("x".into()), QueueItem::Right("x".into())]);
        let d = Queue::new(vec![QueueItem::Right("x".into()), QueueItem::Left("x".into())]);
        assert!(!queues_equivalent(&c, &d));
        assert!(queues_equivalent(&c, &c));
    }

    #[test]
    fn erase_unfolds_boxes_and_drops_tokens() {
        let g = TypingContext::new(vec![ContextEntry::active("x", parse_type("~cost *{y} bot{y}").unwrap())
            .with_queue(vec![QueueItem::msg("y", "u", parse_type("~name").unwrap())])]);
        let erased = erase_context(&g);
        assert_eq!(
            erased,
            vec![
                ("u".into(), parse_type("~name").unwrap()),
                ("x".into(), parse_type("~cost * bot").unwrap())
            ]
        );
        let t = TypingContext::new(vec![ContextEntry {
            endpoint: "x".into(),
            queue: Queue::new(vec![star("y")]),
            typing: Typing::Terminated,
        }]);
        assert!(erase_context(&t).is_empty());
    }

    #[test]
    fn translation_basics() {
        assert!(translate_config(&TypeContextConfig::default()).unwrap().entries.is_empty());
        let mut delta = BTreeMap::new();
        delta.insert(Endpoint::new("x"), Type::atom("a"));
        let g = translate_config(&TypeContextConfig::empty_queues(delta.clone())).unwrap();
        assert_eq!(g, TypingContext::new(vec![ContextEntry::active("x", Type::atom("a"))]));

        delta.insert(Endpoint::new("y"), parse_type("a |{x} 1{x}").unwrap());
        let mut c = TypeContextConfig::empty_queues(delta);
        c.sigma
            .insert(("x".into(), "y".into()), vec![QueueItem::msg("x", "v", Type::atom("a"))]);
        let g = translate_config(&c).unwrap();
        assert_eq!(g.get(&"y".into()).unwrap().queue.items.len(), 1);
        assert!(g.get(&"x".into()).unwrap().queue.is_empty());
        assert_eq!(config_from_context(&g), c);

        c.sigma.insert(("z".into(), "y".into()), vec![star("z")]);
        assert_eq!(translate_config(&c), Err(ContextError::Uncovered("z".into())));
    }
}
