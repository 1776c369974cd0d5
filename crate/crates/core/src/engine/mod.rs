//! Exact inference over ground programs.
//!
//! The search assigns the exogenous constants first (initial fluents,
//! initial observations, actions), then completes the rest by propagation,
//! branching on pf constants only when some rule body waits on them. A pf
//! constant that no live rule body mentions stays free: its row sums to 1,
//! so the resulting [`Cell`] stands for all of its values at once.

mod stable;
mod theorems;

use std::collections::{BTreeMap, HashMap};

use num_traits::Zero;

use crate::lang::ConstKind;
use crate::prob::{self, Prob};
use crate::translate::{GroundProgram, RuleHead, TimedAtom, TimedLiteral, Weight};

pub use stable::is_stable_model;
pub use theorems::{verify_theorems, CheckResult, TheoremReport};

/// Marks an unassigned constant during search, and a free pf constant in a [`Cell`].
pub const FREE: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("assumption violated: {0}")]
    AssumptionViolation(String),
    #[error("completion did not converge within {nodes} search nodes")]
    NonconvergentCompletion { nodes: u64 },
    #[error("conditioning event has probability zero")]
    ConditioningOnNull,
}

/// A total assignment of timed constants to value indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interpretation {
    pub values: Vec<u32>,
}

impl Interpretation {
    pub fn satisfies(&self, a: TimedAtom) -> bool {
        self.values[a.constant as usize] == a.value
    }

    pub fn text(&self, p: &GroundProgram) -> Vec<String> {
        self.values.iter().enumerate().map(|(c, &v)| p.atom_text(TimedAtom { constant: c as u32, value: v })).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedModel {
    pub interpretation: Interpretation,
    /// Product of the chosen pf and initpf row probabilities.
    pub probability_weight: Prob,
    /// Sum of the utility atoms true in the model.
    pub utility_sum: Prob,
}

/// Stable models that differ only in free pf constants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    /// Value per timed constant; [`FREE`] for unconstrained pf constants.
    pub values: Vec<u32>,
    /// Product of the branched pf probabilities.
    pub weight: Prob,
    pub utility: Prob,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Report programs where the exogenous choices and pf values do not
    /// determine exactly one stable model.
    Strict,
    Permissive,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Class {
    Split,
    Lazy,
    Derived,
}

pub struct Engine<'p> {
    p: &'p GroundProgram,
    class: Vec<Class>,
    split_order: Vec<u32>,
    lazy_order: Vec<u32>,
    derived_order: Vec<u32>,
    hard: Vec<usize>,
    heads: Vec<Vec<usize>>,
    body_of: Vec<Vec<usize>>,
    card_of: Vec<Vec<usize>>,
    pf: HashMap<(u32, u32), Prob>,
    mode: Mode,
    node_limit: u64,
}

struct State {
    values: Vec<u32>,
    weight: Prob,
}

#[derive(PartialEq, Eq, Clone, Copy)]
enum Truth {
    True,
    False,
    Unknown,
}

impl<'p> Engine<'p> {
    pub fn new(p: &'p GroundProgram) -> Self {
        let n = p.constants.len();
        let class: Vec<Class> = p
            .constants
            .iter()
            .map(|c| match c.kind {
                ConstKind::Pf | ConstKind::InitPf => Class::Lazy,
                ConstKind::Action => Class::Split,
                ConstKind::RegularFluent | ConstKind::Observation if c.step == 0 => Class::Split,
                _ => Class::Derived,
            })
            .collect();
        let rank = |k: ConstKind| match k {
            ConstKind::RegularFluent => 0,
            ConstKind::Observation => 1,
            _ => 2,
        };
        let mut split_order: Vec<u32> = (0..n as u32).filter(|&c| class[c as usize] == Class::Split).collect();
        split_order.sort_by_key(|&c| {
            let k = &p.constants[c as usize];
            (k.step, rank(k.kind), c)
        });
        let lazy_order = (0..n as u32).filter(|&c| class[c as usize] == Class::Lazy).collect();
        let derived_order = (0..n as u32).filter(|&c| class[c as usize] == Class::Derived).collect();
        let mut hard = Vec::new();
        let mut heads = vec![Vec::new(); n];
        let mut body_of = vec![Vec::new(); n];
        let mut pf = HashMap::new();
        for (i, r) in p.rules.iter().enumerate() {
            if let Weight::Pf(pr) = &r.weight {
                if let RuleHead::Atom(a) = r.head {
                    *pf.entry((a.constant, a.value)).or_insert_with(prob::zero) += pr;
                }
                continue;
            }
            hard.push(i);
            if let RuleHead::Atom(a) | RuleHead::Choice(a) = r.head {
                heads[a.constant as usize].push(i);
            }
            let mut seen = Vec::new();
            for l in &r.body {
                if !seen.contains(&l.atom.constant) {
                    seen.push(l.atom.constant);
                    body_of[l.atom.constant as usize].push(i);
                }
            }
        }
        let mut card_of = vec![Vec::new(); n];
        for (k, c) in p.cardinality.iter().enumerate() {
            for a in &c.atoms {
                card_of[a.constant as usize].push(k);
            }
        }
        Engine {
            p,
            class,
            split_order,
            lazy_order,
            derived_order,
            hard,
            heads,
            body_of,
            card_of,
            pf,
            mode: Mode::Strict,
            node_limit: 200_000_000,
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_node_limit(mut self, limit: u64) -> Self {
        self.node_limit = limit;
        self
    }

    pub fn program(&self) -> &GroundProgram {
        self.p
    }

    /// Probability of `i:c=v` for a pf or initpf constant.
    pub fn pf_probability(&self, constant: u32, value: u32) -> Option<&Prob> {
        self.pf.get(&(constant, value))
    }

    fn lit(&self, st: &State, l: &TimedLiteral) -> Truth {
        let v = st.values[l.atom.constant as usize];
        if v == FREE {
            Truth::Unknown
        } else if (v == l.atom.value) == l.positive {
            Truth::True
        } else {
            Truth::False
        }
    }

    fn body(&self, st: &State, body: &[TimedLiteral]) -> Truth {
        let mut t = Truth::True;
        for l in body {
            match self.lit(st, l) {
                Truth::False => return Truth::False,
                Truth::Unknown => t = Truth::Unknown,
                Truth::True => {}
            }
        }
        t
    }

    fn assign(&self, st: &mut State, c: u32, v: u32, queue: &mut Vec<u32>) -> bool {
        let cur = st.values[c as usize];
        if cur == FREE {
            st.values[c as usize] = v;
            queue.push(c);
            true
        } else {
            cur == v
        }
    }

    fn supported(&self, st: &State, c: u32) -> Vec<u32> {
        let mut out: Vec<u32> = Vec::new();
        for &r in &self.heads[c as usize] {
            let rule = &self.p.rules[r];
            let (RuleHead::Atom(a) | RuleHead::Choice(a)) = rule.head else { continue };
            if !out.contains(&a.value) && self.body(st, &rule.body) != Truth::False {
                out.push(a.value);
            }
        }
        out.sort_unstable();
        out
    }

    fn check_card(&self, k: usize, st: &mut State, queue: &mut Vec<u32>) -> bool {
        let card = &self.p.cardinality[k];
        let (mut t, mut unset) = (0, 0);
        for a in &card.atoms {
            let v = st.values[a.constant as usize];
            if v == FREE {
                unset += 1;
            } else if v == a.value {
                t += 1;
            }
        }
        if t > card.max || t + unset < card.min {
            return false;
        }
        if unset > 0 && t == card.max {
            for a in &card.atoms {
                if st.values[a.constant as usize] == FREE && self.p.constants[a.constant as usize].domain.len() == 2 {
                    self.assign(st, a.constant, 1 - a.value, queue);
                }
            }
        } else if unset > 0 && t + unset == card.min {
            for a in &card.atoms {
                if st.values[a.constant as usize] == FREE {
                    self.assign(st, a.constant, a.value, queue);
                }
            }
        }
        true
    }

    fn propagate(&self, st: &mut State, queue: &mut Vec<u32>) -> bool {
        let mut dirty: Vec<u32> = Vec::new();
        loop {
            while let Some(c) = queue.pop() {
                for &r in &self.body_of[c as usize] {
                    let rule = &self.p.rules[r];
                    match self.body(st, &rule.body) {
                        Truth::True => match rule.head {
                            RuleHead::Atom(a) => {
                                if !self.assign(st, a.constant, a.value, queue) {
                                    return false;
                                }
                            }
                            RuleHead::Bottom => return false,
                            _ => {}
                        },
                        Truth::False => {
                            if let RuleHead::Atom(a) | RuleHead::Choice(a) = rule.head {
                                if st.values[a.constant as usize] == FREE && self.class[a.constant as usize] != Class::Lazy {
                                    dirty.push(a.constant);
                                }
                            }
                        }
                        Truth::Unknown => {}
                    }
                }
                for &k in &self.card_of[c as usize] {
                    if !self.check_card(k, st, queue) {
                        return false;
                    }
                }
            }
            if dirty.is_empty() {
                return true;
            }
            dirty.sort_unstable();
            dirty.dedup();
            for h in std::mem::take(&mut dirty) {
                if st.values[h as usize] != FREE {
                    continue;
                }
                let s = self.supported(st, h);
                match s.len() {
                    0 => return false,
                    1 => {
                        self.assign(st, h, s[0], queue);
                    }
                    _ => {}
                }
            }
        }
    }

    fn root(&self) -> Option<State> {
        let mut st = State { values: vec![FREE; self.p.constants.len()], weight: prob::one() };
        let mut queue = Vec::new();
        for &r in &self.hard {
            let rule = &self.p.rules[r];
            if !rule.body.is_empty() {
                continue;
            }
            match rule.head {
                RuleHead::Atom(a) => {
                    if !self.assign(&mut st, a.constant, a.value, &mut queue) {
                        return None;
                    }
                }
                RuleHead::Bottom => return None,
                _ => {}
            }
        }
        for c in 0..self.p.constants.len() as u32 {
            if self.class[c as usize] == Class::Lazy || st.values[c as usize] != FREE {
                continue;
            }
            let s = self.supported(&st, c);
            match s.len() {
                0 => return None,
                1 => {
                    self.assign(&mut st, c, s[0], &mut queue);
                }
                _ => {}
            }
        }
        for k in 0..self.p.cardinality.len() {
            if !self.check_card(k, &mut st, &mut queue) {
                return None;
            }
        }
        if !self.propagate(&mut st, &mut queue) {
            return None;
        }
        Some(st)
    }

    /// A lazy constant some live rule body is waiting on. With `strict`, only
    /// bodies whose other literals already hold count.
    fn pending_lazy(&self, st: &State, strict: bool) -> Option<u32> {
        for &c in &self.lazy_order {
            if st.values[c as usize] != FREE {
                continue;
            }
            for &r in &self.body_of[c as usize] {
                let rule = &self.p.rules[r];
                let live = if strict {
                    rule.body.iter().all(|l| {
                        let t = self.lit(st, l);
                        t == Truth::True || (t == Truth::Unknown && self.class[l.atom.constant as usize] == Class::Lazy)
                    })
                } else {
                    self.body(st, &rule.body) != Truth::False
                };
                if live {
                    return Some(c);
                }
            }
        }
        None
    }

    fn pick(&self, st: &State) -> Option<u32> {
        if let Some(&c) = self.split_order.iter().find(|&&c| st.values[c as usize] == FREE) {
            return Some(c);
        }
        if let Some(c) = self.pending_lazy(st, true) {
            return Some(c);
        }
        if let Some(&c) = self.derived_order.iter().find(|&&c| st.values[c as usize] == FREE) {
            return Some(c);
        }
        self.pending_lazy(st, false)
    }

    fn leaf(&self, st: &State) -> Option<Cell> {
        let mut total = st.values.clone();
        for &c in &self.lazy_order {
            if total[c as usize] == FREE {
                let v = (0..self.p.constants[c as usize].domain.len() as u32).find(|&v| self.pf.contains_key(&(c, v)))?;
                total[c as usize] = v;
            }
        }
        if !stable::stable_values(self.p, &total) {
            return None;
        }
        let mut utility = prob::zero();
        for &r in &self.hard {
            let rule = &self.p.rules[r];
            if let RuleHead::Utility { value, .. } = &rule.head {
                if self.body(st, &rule.body) == Truth::True {
                    utility += value;
                }
            }
        }
        Some(Cell { values: st.values.clone(), weight: st.weight.clone(), utility })
    }

    /// Visit every cell in canonical (depth-first, value-ordered) order.
    pub fn for_each_cell<F: FnMut(&Cell)>(&self, mut f: F) -> Result<(), EngineError> {
        let Some(root) = self.root() else { return Ok(()) };
        let mut checker = Checker::new(self);
        let mut nodes = 0u64;
        let mut stack = vec![root];
        while let Some(st) = stack.pop() {
            nodes += 1;
            if nodes > self.node_limit {
                return Err(EngineError::NonconvergentCompletion { nodes });
            }
            let Some(c) = self.pick(&st) else {
                if let Some(cell) = self.leaf(&st) {
                    checker.add(self, &cell)?;
                    f(&cell);
                }
                continue;
            };
            let values: Vec<u32> = if self.class[c as usize] == Class::Lazy {
                (0..self.p.constants[c as usize].domain.len() as u32).filter(|&v| self.pf.contains_key(&(c, v))).collect()
            } else {
                self.supported(&st, c)
            };
            // Push in reverse so the smallest value is explored first.
            for &v in values.iter().rev() {
                let mut child = State { values: st.values.clone(), weight: st.weight.clone() };
                if self.class[c as usize] == Class::Lazy {
                    child.weight *= &self.pf[&(c, v)];
                }
                let mut queue = Vec::new();
                self.assign(&mut child, c, v, &mut queue);
                if self.propagate(&mut child, &mut queue) {
                    stack.push(child);
                }
            }
        }
        checker.finish(self)
    }

    pub fn cells(&self) -> Result<Vec<Cell>, EngineError> {
        let mut out = Vec::new();
        self.for_each_cell(|c| out.push(c.clone()))?;
        Ok(out)
    }

    /// Probability mass of the part of `cell` where all `atoms` hold.
    pub fn mass(&self, cell: &Cell, atoms: &[TimedAtom]) -> Prob {
        let mut m = cell.weight.clone();
        let mut fixed: Vec<TimedAtom> = Vec::new();
        for a in atoms {
            let v = cell.values[a.constant as usize];
            if v == FREE {
                if let Some(b) = fixed.iter().find(|b| b.constant == a.constant) {
                    if b.value != a.value {
                        return prob::zero();
                    }
                    continue;
                }
                match self.pf.get(&(a.constant, a.value)) {
                    Some(p) => m *= p,
                    None => return prob::zero(),
                }
                fixed.push(*a);
            } else if v != a.value {
                return prob::zero();
            }
        }
        m
    }

    /// The stable models a cell stands for.
    pub fn expand(&self, cell: &Cell) -> Vec<WeightedModel> {
        let mut out = vec![(cell.values.clone(), cell.weight.clone())];
        for (c, &v) in cell.values.iter().enumerate() {
            if v != FREE {
                continue;
            }
            let mut next = Vec::new();
            for (vals, w) in &out {
                for x in 0..self.p.constants[c].domain.len() as u32 {
                    if let Some(p) = self.pf.get(&(c as u32, x)) {
                        let mut vals = vals.clone();
                        vals[c] = x;
                        next.push((vals, w * p));
                    }
                }
            }
            out = next;
        }
        out.into_iter()
            .map(|(values, w)| WeightedModel { interpretation: Interpretation { values }, probability_weight: w, utility_sum: cell.utility.clone() })
            .collect()
    }
}

/// Strict-mode bookkeeping: one model per exogenous choice, and every action
/// sequence available from every initial choice.
struct Checker {
    active: bool,
    key: Vec<u32>,
    run: Vec<Vec<u32>>,
    initial: Vec<u32>,
    actions: Vec<u32>,
    masses: BTreeMap<Vec<u32>, BTreeMap<Vec<u32>, Prob>>,
    expected: Option<usize>,
}

impl Checker {
    fn new(e: &Engine) -> Self {
        let p = e.p;
        let initial: Vec<u32> = e.split_order.iter().copied().filter(|&c| p.constants[c as usize].kind != ConstKind::Action).collect();
        let actions: Vec<u32> = e.split_order.iter().copied().filter(|&c| p.constants[c as usize].kind == ConstKind::Action).collect();
        let mut expected = Some(1usize);
        for step in 0..p.horizon {
            let acts: Vec<u32> = actions.iter().copied().filter(|&c| p.constants[c as usize].step == step).collect();
            expected = match (expected, count_action_vectors(p, &acts)) {
                (Some(a), Some(b)) => a.checked_mul(b),
                _ => None,
            };
        }
        Checker {
            active: e.mode == Mode::Strict,
            key: Vec::new(),
            run: Vec::new(),
            initial,
            actions,
            masses: BTreeMap::new(),
            expected,
        }
    }

    fn add(&mut self, e: &Engine, cell: &Cell) -> Result<(), EngineError> {
        if !self.active {
            return Ok(());
        }
        let key: Vec<u32> = e.split_order.iter().map(|&c| cell.values[c as usize]).collect();
        let lazy: Vec<u32> = e.lazy_order.iter().map(|&c| cell.values[c as usize]).collect();
        if key != self.key {
            self.key = key;
            self.run.clear();
        }
        for other in &self.run {
            if other.iter().zip(&lazy).all(|(a, b)| *a == FREE || *b == FREE || a == b) {
                let desc: Vec<String> = e.split_order.iter().map(|&c| e.p.atom_text(TimedAtom { constant: c, value: cell.values[c as usize] })).collect();
                return Err(EngineError::AssumptionViolation(format!(
                    "more than one stable model for the same initial state, actions and pf values: {}",
                    desc.join(", ")
                )));
            }
        }
        self.run.push(lazy);
        let init: Vec<u32> = self.initial.iter().map(|&c| cell.values[c as usize]).collect();
        let acts: Vec<u32> = self.actions.iter().map(|&c| cell.values[c as usize]).collect();
        *self.masses.entry(init).or_default().entry(acts).or_insert_with(prob::zero) += &cell.weight;
        Ok(())
    }

    fn finish(self, e: &Engine) -> Result<(), EngineError> {
        if !self.active {
            return Ok(());
        }
        for (init, by_action) in &self.masses {
            let desc = || {
                self.initial.iter().zip(init).map(|(&c, &v)| e.p.atom_text(TimedAtom { constant: c, value: v })).collect::<Vec<_>>().join(", ")
            };
            if let Some(n) = self.expected {
                if by_action.len() != n {
                    return Err(EngineError::AssumptionViolation(format!(
                        "from initial choice {} only {} of {} action sequences have a stable model",
                        desc(),
                        by_action.len(),
                        n
                    )));
                }
            }
            let first = by_action.values().next().cloned().unwrap_or_else(prob::zero);
            if by_action.values().any(|m| *m != first) {
                return Err(EngineError::AssumptionViolation(format!(
                    "from initial choice {} the pf values do not determine a successor for every action sequence",
                    desc()
                )));
            }
        }
        Ok(())
    }
}

/// Number of assignments to the given Boolean action constants allowed by
/// the cardinality constraints; `None` when too expensive to count.
pub fn count_action_vectors(p: &GroundProgram, acts: &[u32]) -> Option<usize> {
    let n = acts.len();
    let cards: Vec<&crate::translate::Cardinality> =
        p.cardinality.iter().filter(|c| c.atoms.iter().any(|a| acts.contains(&a.constant))).collect();
    if cards.is_empty() {
        return 1usize.checked_shl(n as u32);
    }
    if cards.len() == 1 && cards[0].atoms.len() == n && cards[0].atoms.iter().all(|a| a.value == 1) {
        let c = cards[0];
        let mut total = 0usize;
        for k in c.min..=c.max.min(n) {
            total = total.checked_add(binomial(n, k)?)?;
        }
        return Some(total);
    }
    if n > 20 {
        return None;
    }
    let mut total = 0;
    for mask in 0u32..(1 << n) {
        let ok = cards.iter().all(|c| {
            let t = c
                .atoms
                .iter()
                .filter(|a| acts.iter().position(|&x| x == a.constant).is_some_and(|i| ((mask >> i) & 1) == a.value))
                .count();
            t >= c.min && t <= c.max
        });
        if ok {
            total += 1;
        }
    }
    Some(total)
}

fn binomial(n: usize, k: usize) -> Option<usize> {
    let mut r: usize = 1;
    for i in 0..k {
        r = r.checked_mul(n - i)? / (i + 1);
    }
    Some(r)
}

/// Every stable model with its weight and utility.
pub fn enumerate_stable_models(p: &GroundProgram) -> Result<Vec<WeightedModel>, EngineError> {
    let e = Engine::new(p);
    let mut out = Vec::new();
    e.for_each_cell(|c| out.extend(e.expand(c)))?;
    Ok(out)
}

/// `P(event | given)`.
pub fn probability_query(p: &GroundProgram, event: &[TimedAtom], given: &[TimedAtom]) -> Result<Prob, EngineError> {
    let e = Engine::new(p);
    let both: Vec<TimedAtom> = event.iter().chain(given).copied().collect();
    let (mut num, mut den) = (prob::zero(), prob::zero());
    e.for_each_cell(|c| {
        den += e.mass(c, given);
        num += e.mass(c, &both);
    })?;
    if den.is_zero() {
        return Err(EngineError::ConditioningOnNull);
    }
    Ok(num / den)
}

/// `E[U | given]`.
pub fn expected_utility(p: &GroundProgram, given: &[TimedAtom]) -> Result<Prob, EngineError> {
    let e = Engine::new(p);
    let (mut num, mut den) = (prob::zero(), prob::zero());
    e.for_each_cell(|c| {
        let m = e.mass(c, given);
        num += &m * &c.utility;
        den += m;
    })?;
    if den.is_zero() {
        return Err(EngineError::ConditioningOnNull);
    }
    Ok(num / den)
}
