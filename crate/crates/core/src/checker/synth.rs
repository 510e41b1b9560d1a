use super::annotate::annotations;
use super::rules::{apply, enabled, tidy};
use super::{Derivation, ForwarderDerivation, Rule};
use crate::contexts::{CllContext, TypingContext};
use crate::syntax::{fresh_name, Endpoint, Process};

/// Which entry proof search focuses on first.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FocusOrder {
    Canonical,
    Reverse,
}

pub fn synth_derivation(g: &TypingContext, order: FocusOrder) -> Option<ForwarderDerivation> {
    if !g.entries.iter().all(|e| e.typing.active().is_none_or(|t| t.is_fully_annotated())) {
        return None;
    }
    search(&tidy(g.clone()), order)
}

fn search(g: &TypingContext, order: FocusOrder) -> Option<ForwarderDerivation> {
    let mut focus: Vec<Endpoint> = g
        .entries
        .iter()
        .filter(|e| e.typing.active().is_some())
        .map(|e| e.endpoint.clone())
        .collect();
    focus.sort();
    if order == FocusOrder::Reverse {
        focus.reverse();
    }
    let taken = g.all_names();
    for x in &focus {
        let fresh = fresh_name(x, |e| taken.contains(e));
        let Some(action) = enabled(g, x, &fresh) else { continue };
        let Ok(inst) = apply(g, &action) else { continue };
        // Every rule is invertible: once one applies, the verdict is decided by its premises.
        let premises = match inst.rule {
            Rule::Tensor => {
                let erased: CllContext = inst.premises[0]
                    .entries
                    .iter()
                    .map(|e| (e.endpoint.clone(), e.typing.active().unwrap().clone()))
                    .collect();
                let left = annotations(&erased).find_map(|c| search(&c, order))?;
                vec![left, search(&inst.premises[1], order)?]
            }
            _ => inst.premises.iter().map(|p| search(p, order)).collect::<Option<Vec<_>>>()?,
        };
        let process = action.build(premises.iter().map(|d| d.process.clone()).collect());
        return Some(Derivation {
            rule: inst.rule,
            process,
            context: g.clone(),
            premises,
        });
    }
    None
}

/// Some forwarder for a fully annotated context.
pub fn synth_forwarder(g: &TypingContext) -> Option<Process> {
    synth_derivation(g, FocusOrder::Canonical).map(|d| d.process)
}

pub fn synth_with_order(g: &TypingContext, order: FocusOrder) -> Option<Process> {
    synth_derivation(g, order).map(|d| d.process)
}

/// Searches annotations of an erased context for one that admits a forwarder.
pub fn synth_with_annotations(d: &CllContext) -> Option<(TypingContext, Process)> {
    annotations(d).find_map(|g| search(&g, FocusOrder::Canonical).map(|der| (g, der.process)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::check_forwarder;
    use crate::syntax::{parse_cll_context, parse_context, Process};

    #[test]
    fn atoms() {
        let g = parse_context("x : ~a, y : a").unwrap();
        assert_eq!(synth_forwarder(&g), Some(Process::link("x", "y")));
        assert_eq!(synth_forwarder(&parse_context("x : a, y : a").unwrap()), None);
    }

    #[test]
    fn crisscross_has_a_forwarder() {
        let g = parse_context("x : ~name |{y} ~cost *{y} bot{y}, y : cost |{x} name *{x} 1{x}").unwrap();
        let f = synth_forwarder(&g).unwrap();
        check_forwarder(&f, &g).unwrap();
        assert!(synth_with_order(&g, FocusOrder::Reverse).is_some());
    }

    #[test]
    fn annotation_search() {
        let (g, f) = synth_with_annotations(&parse_cll_context("x : ~a, y : a").unwrap()).unwrap();
        assert_eq!(f, Process::link("x", "y"));
        assert_eq!(g.to_string(), "x : ~a, y : a");
        let erased = parse_cll_context("x : ~name | ~cost * bot, y : cost | name * 1").unwrap();
        let (g, f) = synth_with_annotations(&erased).unwrap();
        check_forwarder(&f, &g).unwrap();
        assert!(synth_with_annotations(&parse_cll_context("x : 1, y : 1").unwrap()).is_none());
    }
}
