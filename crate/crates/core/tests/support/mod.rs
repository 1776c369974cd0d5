#![allow(dead_code)]

use std::collections::HashSet;

use pbcp::engine::{Engine, Mode};
use pbcp::lang::ConstKind;
use pbcp::prob::{self, Prob};
use pbcp::translate::{Cardinality, GroundProgram, GroundRule, RuleHead, TimedAtom, TimedLiteral, Weight};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Model = (Vec<u32>, Prob, Prob);

pub fn atom_count(p: &GroundProgram) -> usize {
    p.constants.iter().map(|c| c.domain.len()).sum()
}

const BOOL: &[&str] = &["false", "true"];
const TRI: &[&str] = &["a", "b", "c"];

/// A small random program over initial fluents, actions, pf constants and
/// derived constants, with at most 20 atoms.
pub fn random_micro_program(seed: u64) -> GroundProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon = rng.random_range(0..2u32);
    let mut p = GroundProgram::new(horizon);
    let mut budget = 20usize;
    let dom = |rng: &mut ChaCha8Rng, budget: &mut usize| -> &'static [&'static str] {
        if *budget >= 3 && rng.random_bool(0.3) {
            *budget -= 3;
            TRI
        } else {
            *budget -= 2;
            BOOL
        }
    };
    let mut split = Vec::new();
    for i in 0..rng.random_range(1..3) {
        let d = dom(&mut rng, &mut budget);
        split.push(p.add_constant(&format!("F{i}"), 0, ConstKind::RegularFluent, d));
    }
    let mut acts = Vec::new();
    for i in 0..rng.random_range(0..3) {
        budget -= 2;
        acts.push(p.add_constant(&format!("A{i}"), 0, ConstKind::Action, BOOL));
    }
    let mut lazy = Vec::new();
    for i in 0..rng.random_range(1..3) {
        let d = dom(&mut rng, &mut budget);
        lazy.push(p.add_constant(&format!("P{i}"), 0, ConstKind::Pf, d));
    }
    let mut derived = Vec::new();
    let mut i = 0;
    while budget >= 2 && derived.len() < 3 {
        let d = dom(&mut rng, &mut budget);
        let (step, kind) = if horizon == 1 && rng.random_bool(0.5) {
            (1, ConstKind::RegularFluent)
        } else {
            (0, ConstKind::StaticallyDeterminedFluent)
        };
        derived.push(p.add_constant(&format!("D{i}"), step, kind, d));
        i += 1;
    }
    let size = |p: &GroundProgram, c: u32| p.constants[c as usize].domain.len() as u32;
    for &c in split.iter().chain(&acts) {
        for v in 0..size(&p, c) {
            p.rules.push(GroundRule::hard(RuleHead::Choice(TimedAtom { constant: c, value: v }), vec![]));
        }
    }
    if acts.len() > 1 && rng.random_bool(0.5) {
        p.cardinality.push(Cardinality { atoms: acts.iter().map(|&c| TimedAtom { constant: c, value: 1 }).collect(), min: 0, max: 1 });
    }
    for &c in &lazy {
        let n = size(&p, c);
        let mut left = 12i64;
        for v in 0..n {
            let share = if v + 1 == n { left } else { rng.random_range(1..=left - (n - v - 1) as i64) };
            left -= share;
            if rng.random_bool(0.9) {
                p.rules.push(GroundRule::pf_fact(TimedAtom { constant: c, value: v }, prob::ratio(share, 12)));
            }
        }
    }
    let all: Vec<u32> = (0..p.constants.len() as u32).collect();
    let heads: Vec<u32> = derived.iter().chain(&split).copied().collect();
    for &c in &derived {
        let all_values = rng.random_bool(0.3);
        let v = rng.random_range(0..size(&p, c));
        for x in 0..size(&p, c) {
            if all_values || x == v {
                p.rules.push(GroundRule::hard(RuleHead::Choice(TimedAtom { constant: c, value: x }), vec![]));
            }
        }
    }
    for id in 0..rng.random_range(2..9) {
        let mut body = Vec::new();
        for _ in 0..rng.random_range(0..4) {
            let c = all[rng.random_range(0..all.len())];
            let v = rng.random_range(0..size(&p, c));
            body.push(TimedLiteral { atom: TimedAtom { constant: c, value: v }, positive: rng.random_bool(0.7) });
        }
        let roll = rng.random_range(0..10);
        let head = if heads.is_empty() || roll == 0 {
            RuleHead::Bottom
        } else if roll == 1 {
            RuleHead::Utility { value: prob::from_int(rng.random_range(-5..6)), step: horizon, id }
        } else {
            let c = if roll == 2 { heads[rng.random_range(0..heads.len())] } else { derived.get(rng.random_range(0..derived.len().max(1))).copied().unwrap_or(heads[0]) };
            let a = TimedAtom { constant: c, value: rng.random_range(0..size(&p, c)) };
            if roll < 5 {
                RuleHead::Choice(a)
            } else {
                RuleHead::Atom(a)
            }
        };
        p.rules.push(GroundRule::hard(head, body));
    }
    p
}

fn lit_holds(i: &HashSet<(u32, u32)>, l: &TimedLiteral) -> bool {
    i.contains(&(l.atom.constant, l.atom.value)) == l.positive
}

/// Stability by the textbook definition over sets of atoms.
pub fn oracle_is_stable(p: &GroundProgram, values: &[u32]) -> bool {
    let i: HashSet<(u32, u32)> = values.iter().enumerate().map(|(c, &v)| (c as u32, v)).collect();
    for r in &p.rules {
        if r.weight == Weight::Hard && r.body.iter().all(|l| lit_holds(&i, l)) {
            let ok = match &r.head {
                RuleHead::Atom(a) => i.contains(&(a.constant, a.value)),
                RuleHead::Bottom => false,
                _ => true,
            };
            if !ok {
                return false;
            }
        }
    }
    for c in &p.cardinality {
        let n = c.atoms.iter().filter(|a| i.contains(&(a.constant, a.value))).count();
        if n < c.min || n > c.max {
            return false;
        }
    }
    let mut reduct: Vec<((u32, u32), Vec<(u32, u32)>)> = Vec::new();
    for r in &p.rules {
        let h = match (&r.weight, &r.head) {
            (Weight::Hard, RuleHead::Atom(a)) => (a.constant, a.value),
            (_, RuleHead::Choice(a)) | (Weight::Pf(_), RuleHead::Atom(a)) if i.contains(&(a.constant, a.value)) => (a.constant, a.value),
            _ => continue,
        };
        if r.body.iter().filter(|l| !l.positive).any(|l| i.contains(&(l.atom.constant, l.atom.value))) {
            continue;
        }
        reduct.push((h, r.body.iter().filter(|l| l.positive).map(|l| (l.atom.constant, l.atom.value)).collect()));
    }
    let mut least: HashSet<(u32, u32)> = HashSet::new();
    loop {
        let before = least.len();
        for (h, pos) in &reduct {
            if pos.iter().all(|a| least.contains(a)) {
                least.insert(*h);
            }
        }
        if least.len() == before {
            break;
        }
    }
    least == i
}

fn weight_and_utility(p: &GroundProgram, values: &[u32]) -> (Prob, Prob) {
    let mut w = prob::one();
    let mut u = prob::zero();
    for r in &p.rules {
        let body = r.body.iter().all(|l| (values[l.atom.constant as usize] == l.atom.value) == l.positive);
        match (&r.weight, &r.head) {
            (Weight::Pf(x), RuleHead::Atom(a)) if values[a.constant as usize] == a.value => w *= x,
            (Weight::Hard, RuleHead::Utility { value, .. }) if body => u += value,
            _ => {}
        }
    }
    (w, u)
}

/// Every total assignment, filtered by [`oracle_is_stable`].
pub fn brute_force(p: &GroundProgram) -> Vec<Model> {
    let sizes: Vec<u32> = p.constants.iter().map(|c| c.domain.len() as u32).collect();
    let mut values = vec![0u32; sizes.len()];
    let mut out = Vec::new();
    loop {
        if oracle_is_stable(p, &values) {
            let (w, u) = weight_and_utility(p, &values);
            out.push((values.clone(), w, u));
        }
        let mut k = 0;
        loop {
            if k == values.len() {
                out.sort();
                return out;
            }
            values[k] += 1;
            if values[k] < sizes[k] {
                break;
            }
            values[k] = 0;
            k += 1;
        }
    }
}

/// Models from the exogenous-first search, without the strict checks.
pub fn engine_models(p: &GroundProgram) -> Vec<Model> {
    let e = Engine::new(p).with_mode(Mode::Permissive);
    let mut out = Vec::new();
    e.for_each_cell(|c| {
        for m in e.expand(c) {
            out.push((m.interpretation.values, m.probability_weight, m.utility_sum));
        }
    })
    .unwrap();
    out.sort();
    out
}
