use crate::translate::{GroundProgram, RuleHead, TimedLiteral, Weight};

use super::Interpretation;

/// Whether `i` is a stable model of the hard part of `p` together with the
/// pf facts `i` agrees with.
pub fn is_stable_model(p: &GroundProgram, i: &Interpretation) -> bool {
    i.values.len() == p.constants.len()
        && i.values.iter().zip(&p.constants).all(|(&v, c)| (v as usize) < c.domain.len())
        && stable_values(p, &i.values)
}

fn holds(values: &[u32], l: &TimedLiteral) -> bool {
    (values[l.atom.constant as usize] == l.atom.value) == l.positive
}

pub(crate) fn stable_values(p: &GroundProgram, values: &[u32]) -> bool {
    for r in &p.rules {
        if r.weight != Weight::Hard || !r.body.iter().all(|l| holds(values, l)) {
            continue;
        }
        match r.head {
            RuleHead::Atom(a) if values[a.constant as usize] != a.value => return false,
            RuleHead::Bottom => return false,
            _ => {}
        }
    }
    for c in &p.cardinality {
        let n = c.atoms.iter().filter(|a| values[a.constant as usize] == a.value).count();
        if n < c.min || n > c.max {
            return false;
        }
    }
    // Least model of the reduct. Negative literals are evaluated against the
    // candidate; a choice rule survives only when its head is in it.
    let mut reduct: Vec<(usize, Vec<usize>)> = Vec::new();
    for r in &p.rules {
        let head = match r.head {
            RuleHead::Atom(a) => a,
            RuleHead::Choice(a) if values[a.constant as usize] == a.value => a,
            _ => continue,
        };
        if let Weight::Pf(_) = r.weight {
            if values[head.constant as usize] != head.value {
                continue;
            }
        }
        if r.body.iter().any(|l| !l.positive && !holds(values, l)) {
            continue;
        }
        let pos: Vec<usize> = r.body.iter().filter(|l| l.positive).map(|l| l.atom.constant as usize).collect();
        if r.body.iter().filter(|l| l.positive).any(|l| values[l.atom.constant as usize] != l.atom.value) {
            continue;
        }
        if values[head.constant as usize] == head.value {
            reduct.push((head.constant as usize, pos));
        }
    }
    let mut derived = vec![false; values.len()];
    loop {
        let mut changed = false;
        for (h, pos) in &reduct {
            if !derived[*h] && pos.iter().all(|&c| derived[c]) {
                derived[*h] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    derived.iter().all(|&d| d)
}
