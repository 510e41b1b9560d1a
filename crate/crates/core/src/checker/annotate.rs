use crate::contexts::{CllContext, TypingContext};
use crate::syntax::{Endpoint, Path, Targets, Type};

struct Slot {
    entry: usize,
    path: Path,
    candidates: Vec<Targets>,
}

fn slots_of(t: &Type, at: &mut Path, out: &mut Vec<(Path, bool)>) {
    if let Some(c) = t.conn() {
        use crate::syntax::Conn::*;
        out.push((at.clone(), matches!(c, One | Tensor | With | OfCourse)));
    }
    for (step, child) in t.protocol_children() {
        at.push(step);
        slots_of(child, at, out);
        at.pop();
    }
}

/// Number of annotation slots on protocol positions.
pub fn slot_count(ctx: &CllContext) -> usize {
    ctx.iter()
        .map(|(_, t)| {
            let mut out = Vec::new();
            slots_of(t, &mut Vec::new(), &mut out);
            out.len()
        })
        .sum()
}

/// Nonempty subsets, smallest first, then lexicographic.
fn subsets(others: &[Endpoint]) -> Vec<Targets> {
    let n = others.len();
    let mut all: Vec<Vec<usize>> = (1u32..(1 << n)).map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect()).collect();
    all.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    all.into_iter()
        .map(|idx| idx.into_iter().map(|i| others[i].clone()).collect())
        .collect()
}

/// Every annotation of an erased context, in a fixed order.
/// Slots on payload positions are left empty.
pub fn annotations(ctx: &CllContext) -> Annotations {
    let names: Vec<Endpoint> = ctx.iter().map(|(e, _)| e.clone()).collect();
    let mut slots = Vec::new();
    for (i, (e, t)) in ctx.iter().enumerate() {
        let others: Vec<Endpoint> = names.iter().filter(|n| *n != e).cloned().collect();
        let mut found = Vec::new();
        slots_of(t, &mut Vec::new(), &mut found);
        for (path, multi) in found {
            let candidates = if multi {
                subsets(&others)
            } else {
                others.iter().map(|o| [o.clone()].into_iter().collect()).collect()
            };
            slots.push(Slot {
                entry: i,
                path,
                candidates,
            });
        }
    }
    let exhausted = slots.iter().any(|s| s.candidates.is_empty());
    Annotations {
        base: ctx.iter().map(|(e, t)| (e.clone(), t.erase())).collect(),
        counters: vec![0; slots.len()],
        slots,
        done: exhausted,
    }
}

pub struct Annotations {
    base: CllContext,
    slots: Vec<Slot>,
    counters: Vec<usize>,
    done: bool,
}

impl Iterator for Annotations {
    type Item = TypingContext;

    fn next(&mut self) -> Option<TypingContext> {
        if self.done {
            return None;
        }
        let mut ctx = self.base.clone();
        for (slot, &k) in self.slots.iter().zip(&self.counters) {
            let node = ctx[slot.entry].1.at_mut(&slot.path).expect("slot path valid");
            let chosen = &slot.candidates[k];
            if let Some(set) = node.set_slot_mut() {
                *set = chosen.clone();
            } else if let Some(one) = node.single_slot_mut() {
                *one = chosen.iter().next().cloned();
            }
        }
        // Advance the odometer; the last slot moves fastest.
        let mut i = self.slots.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.counters[i] += 1;
            if self.counters[i] < self.slots[i].candidates.len() {
                break;
            }
            self.counters[i] = 0;
        }
        Some(TypingContext::from_cll(&ctx))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_cll_context;

    #[test]
    fn counts_and_orders() {
        let ctx = parse_cll_context("x : a * 1, y : ~a | bot, z : b").unwrap();
        assert_eq!(slot_count(&ctx), 4);
        let all: Vec<_> = annotations(&ctx).collect();
        // tensor: 3 subsets, one: 3, par: 2, bot: 2
        assert_eq!(all.len(), 3 * 3 * 2 * 2);
        assert_eq!(all[0].to_string(), "x : a *{y} 1{y}, y : ~a |{x} bot{x}, z : b");
        assert!(all
            .iter()
            .all(|g| g.entries.iter().all(|e| e.typing.active().unwrap().is_fully_annotated())));
    }

    #[test]
    fn payload_positions_stay_erased() {
        let ctx = parse_cll_context("x : (a * 1) | bot, y : b").unwrap();
        let first = annotations(&ctx).next().unwrap();
        assert_eq!(first.to_string(), "x : (a * 1) |{y} bot{y}, y : b");
    }

    #[test]
    fn lone_endpoint_has_no_annotation() {
        let ctx = parse_cll_context("x : 1").unwrap();
        assert_eq!(annotations(&ctx).count(), 0);
        let atoms = parse_cll_context("x : a").unwrap();
        assert_eq!(annotations(&atoms).count(), 1);
    }
}
