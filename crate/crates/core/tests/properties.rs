mod common;

use std::collections::BTreeSet;

use common::*;
use forwarders::contexts::{normalize_queue, queues_equivalent, ContextEntry, Queue, QueueItem, Typing, TypingContext};
use forwarders::cutelim::{distr_enumerate, distr_step, subst_run, CutPair, Phase, SideId};
use forwarders::syntax::{parse_context, parse_process, parse_type, print_process, print_type, Endpoint, Process, Targets, Type};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const NAMES: [&str; 4] = ["x", "y", "z", "w"];

fn endpoint() -> impl Strategy<Value = Endpoint> {
    prop::sample::select(&NAMES[..]).prop_map(Endpoint::new)
}

fn targets() -> impl Strategy<Value = Targets> {
    prop::collection::btree_set(endpoint(), 0..3)
}

fn single() -> impl Strategy<Value = Option<Endpoint>> {
    prop::option::of(endpoint())
}

fn ty() -> impl Strategy<Value = Type> {
    let leaf = prop_oneof![
        prop::sample::select(vec!["a", "b"]).prop_map(Type::atom),
        prop::sample::select(vec!["a", "b"]).prop_map(Type::dual_atom),
        targets().prop_map(Type::One),
        single().prop_map(Type::Bot),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        let pair = || (inner.clone(), inner.clone()).prop_map(|(a, b)| (Box::new(a), Box::new(b)));
        prop_oneof![
            (pair(), targets()).prop_map(|((a, b), s)| Type::Tensor(a, b, s)),
            (pair(), single()).prop_map(|((a, b), s)| Type::Par(a, b, s)),
            (pair(), single()).prop_map(|((a, b), s)| Type::Plus(a, b, s)),
            (pair(), targets()).prop_map(|((a, b), s)| Type::With(a, b, s)),
            (inner.clone(), targets()).prop_map(|(a, s)| Type::OfCourse(Box::new(a), s)),
            (inner.clone(), single()).prop_map(|(a, s)| Type::WhyNot(Box::new(a), s)),
        ]
    })
}

fn binder() -> impl Strategy<Value = Endpoint> {
    prop::sample::select(vec!["u", "v", "x", "t"]).prop_map(Endpoint::new)
}

fn process() -> impl Strategy<Value = Process> {
    let leaf = prop_oneof![
        (endpoint(), endpoint()).prop_map(|(x, y)| Process::Link(x, y)),
        endpoint().prop_map(Process::Close),
    ];
    leaf.prop_recursive(5, 32, 2, |inner| {
        let bx = |p: Process| Box::new(p);
        prop_oneof![
            (endpoint(), inner.clone()).prop_map(move |(x, p)| Process::Wait(x, bx(p))),
            (endpoint(), binder(), inner.clone(), inner.clone()).prop_map(move |(x, y, p, q)| Process::Send(x, y, bx(p), bx(q))),
            (endpoint(), binder(), inner.clone()).prop_map(move |(x, y, p)| Process::Recv(x, y, bx(p))),
            (endpoint(), inner.clone()).prop_map(move |(x, p)| Process::Inl(x, bx(p))),
            (endpoint(), inner.clone()).prop_map(move |(x, p)| Process::Inr(x, bx(p))),
            (endpoint(), inner.clone(), inner.clone()).prop_map(move |(x, p, q)| Process::Case(x, bx(p), bx(q))),
            (endpoint(), binder(), inner.clone()).prop_map(move |(x, y, p)| Process::Server(x, y, bx(p))),
            (endpoint(), binder(), inner.clone()).prop_map(move |(x, y, p)| Process::Client(x, y, bx(p))),
            (binder(), binder(), ty(), inner.clone(), inner.clone()).prop_map(move |(x, y, ty, l, r)| Process::Cut {
                x,
                y,
                ty,
                left: bx(l),
                right: bx(r)
            }),
        ]
    })
}

fn item() -> impl Strategy<Value = QueueItem> {
    prop_oneof![
        (endpoint(), prop::collection::vec((binder(), ty()), 1..3)).prop_map(|(target, payload)| QueueItem::Msg { target, payload }),
        endpoint().prop_map(QueueItem::Star),
        endpoint().prop_map(QueueItem::Query),
        endpoint().prop_map(QueueItem::Left),
        endpoint().prop_map(QueueItem::Right),
    ]
}

fn queue() -> impl Strategy<Value = Queue> {
    prop::collection::vec(item(), 0..5).prop_map(Queue::new)
}

fn context() -> impl Strategy<Value = TypingContext> {
    let entry = (queue(), prop::option::of(ty())).prop_map(|(queue, t)| (queue, t.map_or(Typing::Terminated, Typing::Active)));
    (prop::sample::subsequence(&NAMES[..], 1..=4), prop::collection::vec(entry, 4)).prop_map(|(names, entries)| {
        TypingContext::new(
            names
                .into_iter()
                .zip(entries)
                .map(|(n, (queue, typing))| ContextEntry {
                    endpoint: Endpoint::new(n),
                    queue,
                    typing,
                })
                .collect(),
        )
    })
}

fn by_label(q: &Queue, label: &Endpoint) -> Vec<QueueItem> {
    q.items.iter().filter(|i| i.target() == label).cloned().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn types_print_and_parse_back(t in ty()) {
        let text = print_type(&t);
        prop_assert_eq!(parse_type(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?, t);
    }

    #[test]
    fn processes_print_and_parse_back(p in process()) {
        let text = print_process(&p);
        prop_assert_eq!(parse_process(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?, p);
    }

    #[test]
    fn contexts_print_and_parse_back(g in context()) {
        let text = g.to_string();
        prop_assert_eq!(parse_context(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?, g);
    }

    #[test]
    fn duality_is_an_involution(t in ty()) {
        prop_assert_eq!(t.dual().dual(), t.erase());
        prop_assert_eq!(t.dual().size(), t.size());
        prop_assert!(t.is_dual_of(&t.dual()));
        prop_assert!(t.dual().is_dual_of(&t));
        prop_assert_eq!(t.erase().dual(), t.dual());
    }

    #[test]
    fn renaming_to_a_fresh_name_is_reversible(p in process(), x in endpoint()) {
        let fresh = Endpoint::new("n");
        let renamed = p.rename(&x, &fresh);
        let expected: BTreeSet<Endpoint> = p.free_names().into_iter().map(|n| if n == x { fresh.clone() } else { n }).collect();
        prop_assert_eq!(renamed.free_names(), expected);
        prop_assert!(renamed.rename(&fresh, &x).alpha_eq(&p));
        prop_assert_eq!(renamed.size(), p.size());
    }

    #[test]
    fn normalization_keeps_each_label_in_order(q in queue()) {
        let n = normalize_queue(&q);
        prop_assert_eq!(normalize_queue(&n), n.clone());
        prop_assert!(queues_equivalent(&q, &n));
        prop_assert_eq!(n.items.len(), q.items.len());
        for label in NAMES.iter().map(|l| Endpoint::new(l)) {
            let normal: Vec<QueueItem> = by_label(&q, &label).iter().map(|i| normalize_queue(&Queue::new(vec![i.clone()])).items[0].clone()).collect();
            prop_assert_eq!(by_label(&n, &label), normal);
        }
    }

    #[test]
    fn swapping_distinct_labels_is_equivalent(q in queue(), at in 0usize..4) {
        let mut swapped = q.clone();
        if at + 1 < q.items.len() {
            swapped.items.swap(at, at + 1);
            let distinct = q.items[at].target() != q.items[at + 1].target();
            prop_assert_eq!(queues_equivalent(&q, &swapped), distinct || q.items[at] == q.items[at + 1]);
        }
    }
}

/// Cut pairs whose cut queues are not both empty, drawn from synthesized derivations.
fn queued_pairs() -> Vec<CutPair> {
    let mut rng = StdRng::seed_from_u64(13);
    let pool: Vec<_> = judgement_pool(&mut rng, 80, 8).iter().flat_map(nodes).collect();
    let redexes = cut_pairs(&pool, &mut rng, 300, 4, |r| {
        r.sides().is_ok_and(|(a, b)| !a.queue.is_empty() || !b.queue.is_empty())
    });
    redexes
        .iter()
        .filter_map(|r| r.sides().ok().and_then(|(a, b)| CutPair::new(a, b).ok()))
        .collect()
}

fn expected_insert(old: &Queue, added: Vec<QueueItem>) -> Vec<QueueItem> {
    let c = old.cursor.unwrap_or(0);
    [old.items[..c].to_vec(), added, old.items[c..].to_vec()].concat()
}

#[test]
fn distribution_keeps_source_order_per_receiver() {
    let pairs = queued_pairs();
    assert!(pairs.len() >= 20, "{} pairs", pairs.len());
    let mut rng = StdRng::seed_from_u64(17);
    let mut steps = 0;
    for start in &pairs {
        let mut cur = start.clone();
        while let Some(from) = cur.next_source() {
            let choices = cur.choices(from);
            let choice = choices[rng.gen_range(0..choices.len())].clone();
            let head = cur.side(from).queue.items[0].clone();
            let Ok(next) = distr_step(&cur, from, &choice) else { break };
            steps += 1;
            let (before, after) = (&cur.side(from.other()).context, &next.side(from.other()).context);
            for e in &before.entries {
                let added: Vec<QueueItem> = match &head {
                    QueueItem::Msg { target, payload } => {
                        let block: Vec<_> = payload
                            .iter()
                            .zip(&choice)
                            .filter(|(_, c)| **c == e.endpoint)
                            .map(|(p, _)| p.clone())
                            .collect();
                        if block.is_empty() {
                            vec![]
                        } else {
                            vec![QueueItem::Msg {
                                target: target.clone(),
                                payload: block,
                            }]
                        }
                    }
                    token if choice[0] == e.endpoint => vec![token.clone()],
                    _ => vec![],
                };
                assert_eq!(after.get(&e.endpoint).unwrap().queue.items, expected_insert(&e.queue, added));
            }
            assert_eq!(next.side(from).queue.items[..], cur.side(from).queue.items[1..]);
            cur = next;
        }
    }
    assert!(steps > 0);
}

#[test]
fn substitution_is_deterministic() {
    let mut runs = 0;
    for p in queued_pairs() {
        for d in distr_enumerate(&p) {
            assert_eq!(d.phase, Phase::Substituting);
            assert_eq!(subst_run(&d), subst_run(&d.clone()));
            runs += 1;
        }
        assert_eq!(distr_enumerate(&p), distr_enumerate(&p));
    }
    assert!(runs > 0);
}

#[test]
fn exhausted_pairs_leave_the_distribution_phase() {
    for p in queued_pairs() {
        for d in distr_enumerate(&p) {
            assert!(d.next_source().is_none());
            assert!(d.top.queue.is_empty() && d.bottom.queue.is_empty());
            assert!(distr_step(&d, SideId::Top, &[]).is_err());
        }
    }
}
