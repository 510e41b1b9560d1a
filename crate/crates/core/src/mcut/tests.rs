use super::*;
use crate::checker::{check_inferred, synth_with_annotations};
use crate::contexts::TypingContext;
use crate::cutelim::{reduce_cut, CutRedex};
use crate::syntax::decl::parse_state;
use crate::syntax::{parse_cll_context, parse_process, print_process};

fn fwd(erased: &str) -> Judged {
    let (g, f) = synth_with_annotations(&parse_cll_context(erased).unwrap()).unwrap();
    Judged::new(f, g)
}

fn party(x: &str, p: &str, ctx: &str) -> Party {
    Party::new(&Endpoint::new(x), parse_process(p).unwrap(), parse_cll_context(ctx).unwrap())
}

fn run(c: &MCutConfig) -> MCutRun {
    let r = run_mcut(c, None).unwrap_or_else(|e| panic!("{e}\n{c}"));
    assert!(r.trace.iter().all(MCutStep::decreases), "{:#?}", r.trace);
    r
}

fn tags(r: &MCutRun) -> Vec<&'static str> {
    r.trace.iter().map(|s| s.case.tag()).collect()
}

fn send_receive() -> MCutConfig {
    MCutConfig::new(
        fwd("x : ~a | bot, z : a * 1"),
        vec![],
        vec![
            party("x", "x[y].(y<->w | close x)", "x : a * 1, w : ~a"),
            party("z", "z(v). wait z; v<->u", "z : ~a | bot, u : a"),
        ],
    )
    .unwrap()
}

#[test]
fn send_moves_payload_to_pending() {
    let c = send_receive();
    let (trace, out) = mcutq_step(&c, None).unwrap();
    assert_eq!(trace.last().unwrap().case, MCutCase::Tensor);
    let StepOutcome::Next(next) = out else {
        panic!("expected a configuration")
    };
    assert_eq!(next.pending.len(), 1);
    assert_eq!(next.parts[0].process, Process::Close("x".into()));
    check_mcut_config(&next).unwrap();
    let boxed = next
        .fwd
        .context
        .entries
        .iter()
        .flat_map(|e| &e.queue.items)
        .filter(|i| matches!(i, QueueItem::Msg { .. }))
        .count();
    assert_eq!(boxed, 1);
    let reparsed = MCutConfig::from_state(&parse_state(&next.to_state().to_string()).unwrap()).unwrap();
    assert_eq!(reparsed, next);
}

#[test]
fn send_receive_cases() {
    let r = run(&send_receive());
    for t in ["⊗", "⅋", "1", "⊥", "Ax"] {
        assert!(tags(&r).contains(&t), "{:?}", tags(&r));
    }
    assert!(r.process.alpha_eq(&Process::link("w", "u")) || r.process.alpha_eq(&Process::link("u", "w")));
}

#[test]
fn identity_matches_binary_cut() {
    let c = MCutConfig::new(
        fwd("x : ~a | bot, z : a * 1"),
        vec![],
        vec![
            party("x", "x<->w", "x : a * 1, w : ~a | bot"),
            party("z", "z(v). wait z; u[v'].(v<->v' | close u)", "z : ~a | bot, u : a * 1"),
        ],
    )
    .unwrap();
    let r = run(&c);
    let judge = |p: &Party| {
        let g = check_inferred(&p.process, &TypingContext::from_cll(&p.context)).unwrap().context;
        Judged::new(p.process.clone(), g)
    };
    let redex = CutRedex::new("x", judge(&c.parts[0]), "z", judge(&c.parts[1]));
    let gamma = redex.conclusions().unwrap().remove(0);
    let direct = reduce_cut(&redex, &gamma, None).unwrap().process;
    assert!(
        r.process.alpha_eq(&direct),
        "{} vs {}",
        print_process(&r.process),
        print_process(&direct)
    );
}

#[test]
fn two_links_make_one() {
    let c = MCutConfig::new(
        fwd("x : ~a, y : a"),
        vec![],
        vec![party("x", "x<->z1", "x : a, z1 : ~a"), party("y", "y<->z2", "y : ~a, z2 : a")],
    )
    .unwrap();
    let r = run(&c);
    assert_eq!(tags(&r), vec!["Ax"]);
    assert_eq!(r.process, Process::link("z1", "z2"));
}

#[test]
fn choices_select_branches() {
    let c = MCutConfig::new(
        fwd("x : a & a, y : ~a + ~a"),
        vec![],
        vec![
            party("x", "inl x; x<->w", "x : ~a + ~a, w : a"),
            party("y", "case y {inl: y<->u; inr: y<->u}", "y : a & a, u : ~a"),
        ],
    )
    .unwrap();
    let r = run(&c);
    assert!(tags(&r).contains(&"⊕") && tags(&r).contains(&"&"), "{:?}", tags(&r));
    assert!(r.process.alpha_eq(&Process::link("w", "u")) || r.process.alpha_eq(&Process::link("u", "w")));
}

fn exponential(part_x: &str, ctx_x: &str) -> MCutConfig {
    MCutConfig::new(
        fwd("x : !a, y : ?~a"),
        vec![],
        vec![party("x", part_x, ctx_x), party("y", "!y(v). ?w[t]. v<->t", "y : !a, w : ?~a")],
    )
    .unwrap()
}

#[test]
fn server_opened_and_queried() {
    let r = run(&exponential("?x[p]. p<->e", "x : ?~a, e : a"));
    for t in ["?", "!", "Ax"] {
        assert!(tags(&r).contains(&t), "{:?}", tags(&r));
    }
    assert!(
        r.process.alpha_eq(&parse_process("?w[t]. e<->t").unwrap()),
        "{}",
        print_process(&r.process)
    );
}

#[test]
fn unused_server_is_discarded() {
    let r = run(&exponential("close e", "x : ?~a, e : 1"));
    assert_eq!(tags(&r), vec!["w"]);
    assert_eq!(r.process, Process::Close("e".into()));
}

#[test]
fn reused_server_is_duplicated() {
    let r = run(&exponential("?x[p]. ?x[q]. e[f].(p<->f | q<->e)", "x : ?~a, e : a * a"));
    assert!(tags(&r).contains(&"c"), "{:?}", tags(&r));
    assert!(r.trace.iter().any(|s| s.depth == 1));
    let clients = print_process(&r.process).matches("?w[").count();
    assert_eq!(clients, 2, "{}", print_process(&r.process));
}

#[test]
fn compound_links_are_expanded() {
    let c = MCutConfig::new(
        fwd("x : ~a | bot, z : a * 1"),
        vec![],
        vec![
            party("x", "x<->w", "x : a * 1, w : ~a | bot"),
            party("z", "z(v). wait z; v<->u", "z : ~a | bot, u : a"),
        ],
    )
    .unwrap();
    assert!(matches!(c.parts[0].process, Process::Recv(..)));
    run(&c);
}

#[test]
fn invalid_configurations_are_rejected() {
    let good = send_receive();
    let mut stray = good.clone();
    stray.pending.push(party("n", "n<->w", "n : a, w : ~a"));
    assert!(matches!(check_mcut_config(&stray), Err(MCutError::Invalid(_))));

    let mut cut = good.clone();
    cut.fwd.process = parse_process("(nu p q : a)(p<->x | q<->z)").unwrap();
    assert!(matches!(check_mcut_config(&cut), Err(MCutError::Invalid(_))));

    let mut missing = good.clone();
    missing.parts.pop();
    assert!(matches!(check_mcut_config(&missing), Err(MCutError::Invalid(_))));

    let mut wrong = good;
    wrong.parts[0] = party("x", "x[y].(y<->w | close x)", "x : a * 1, w : ~a, k : a");
    assert!(check_mcut_config(&wrong).is_err());

    let closed = Judged::new(
        parse_process("close x").unwrap(),
        crate::syntax::parse_context("x : 1{}").unwrap_or_default(),
    );
    assert!(MCutConfig::new(closed, vec![], vec![]).is_err());
}
