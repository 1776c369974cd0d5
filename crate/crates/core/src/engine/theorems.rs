use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::lang::{ActionDescription, ConstKind};
use crate::prob::{self, Prob};
use crate::translate::{self, GroundProgram, TimedAtom, TranslateError};

use super::{count_action_vectors, Cell, Engine, Mode, FREE};

const MAX_EXAMPLES: usize = 5;

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub counterexamples: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremReport {
    pub horizon: u32,
    pub cells: u64,
    pub checks: Vec<CheckResult>,
}

impl TheoremReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl std::fmt::Display for TheoremReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "horizon {}, {} cells", self.horizon, self.cells)?;
        for c in &self.checks {
            writeln!(f, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
            for x in &c.counterexamples {
                writeln!(f, "    {x}")?;
            }
        }
        Ok(())
    }
}

fn result(name: &str, examples: Vec<String>, ok_detail: String) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed: examples.is_empty(),
        detail: if examples.is_empty() { ok_detail } else { format!("{} counterexample(s)", examples.len()) },
        counterexamples: examples.into_iter().take(MAX_EXAMPLES).collect(),
    }
}

type Key = Vec<u32>;

struct Layout {
    fluents: Vec<Vec<u32>>,
    actions: Vec<Vec<u32>>,
}

impl Layout {
    fn new(p: &GroundProgram) -> Self {
        let fluents = (0..=p.horizon).map(|i| p.fluents_at(i)).collect();
        let actions = (0..p.horizon).map(|i| p.constants_of(ConstKind::Action, i)).collect();
        Layout { fluents, actions }
    }

    fn state(&self, cell: &Cell, i: u32) -> Key {
        self.fluents[i as usize].iter().map(|&c| cell.values[c as usize]).collect()
    }

    fn action(&self, cell: &Cell, i: u32) -> Key {
        self.actions[i as usize].iter().map(|&c| cell.values[c as usize]).collect()
    }
}

fn describe(p: &GroundProgram, consts: &[u32], key: &[u32]) -> String {
    let parts: Vec<String> = consts
        .iter()
        .zip(key)
        .filter(|(&c, &v)| !(p.is_action(c) && v == 0))
        .map(|(&c, &v)| p.atom_text(TimedAtom { constant: c, value: v }))
        .collect();
    if parts.is_empty() {
        "noop".into()
    } else {
        parts.join(", ")
    }
}

/// Run the path-probability, stationarity, path-factorization and
/// endpoint checks on `Tr(d, m)`.
pub fn verify_theorems(d: &ActionDescription, m: u32) -> Result<TheoremReport, TranslateError> {
    let p = translate::translate(d, m)?;
    let p0 = translate::translate(d, 0)?;
    let core0 = translate::translate_core(d, 0)?;
    let layout = Layout::new(&p);
    let engine = Engine::new(&p);

    let mut cells: Vec<Cell> = Vec::new();
    let mut checks = Vec::new();
    if let Err(e) = engine.for_each_cell(|c| cells.push(c.clone())) {
        checks.push(CheckResult {
            name: "path-probability".into(),
            passed: false,
            detail: e.to_string(),
            counterexamples: Vec::new(),
        });
        return Ok(TheoremReport { horizon: m, cells: cells.len() as u64, checks });
    }

    // Path probability: each model's weight is the product of its total
    // choice, and the normalizer is (initial mass) x (action vectors)^m.
    let mut examples = Vec::new();
    let lazy: Vec<u32> = (0..p.constants.len() as u32)
        .filter(|&c| matches!(p.constants[c as usize].kind, ConstKind::Pf | ConstKind::InitPf))
        .collect();
    let mut total = prob::zero();
    for cell in &cells {
        let mut tc = prob::one();
        for &c in &lazy {
            let v = cell.values[c as usize];
            if v != FREE {
                match engine.pf_probability(c, v) {
                    Some(x) => tc *= x,
                    None => examples.push(format!("{} has no probability", p.atom_text(TimedAtom { constant: c, value: v }))),
                }
            }
        }
        if tc != cell.weight {
            examples.push(format!("cell weight {} differs from total-choice product {}", cell.weight, tc));
        }
        total += &cell.weight;
    }
    let mut z0 = prob::zero();
    let e0 = Engine::new(&p0).with_mode(Mode::Permissive);
    let _ = e0.for_each_cell(|c| z0 += &c.weight);
    let mut vectors = prob::one();
    let mut per_step = Vec::new();
    for acts in &layout.actions {
        let n = count_action_vectors(&p, acts).unwrap_or(0);
        per_step.push(n);
        vectors *= prob::from_int(n as i64);
    }
    let expected = &z0 * &vectors;
    if total != expected {
        examples.push(format!("total weight {} but initial mass {} x action vectors {}", total, z0, vectors));
    }
    checks.push(result(
        "path-probability",
        examples,
        format!(
            "every model has probability (product of its total choice) / ({} x {}), {} action vectors per step",
            prob::to_exact_string(&z0),
            prob::to_exact_string(&vectors),
            per_step.first().copied().unwrap_or(1)
        ),
    ));

    // Transition tables per step.
    let mut cond: Vec<BTreeMap<(Key, Key), Prob>> = vec![BTreeMap::new(); m as usize];
    let mut joint: Vec<BTreeMap<(Key, Key, Key), Prob>> = vec![BTreeMap::new(); m as usize];
    let mut initial: BTreeMap<Key, Prob> = BTreeMap::new();
    let mut paths: BTreeMap<(Vec<Key>, Vec<Key>), Prob> = BTreeMap::new();
    let mut by_actions: BTreeMap<Vec<Key>, Prob> = BTreeMap::new();
    for cell in &cells {
        let states: Vec<Key> = (0..=m).map(|i| layout.state(cell, i)).collect();
        let acts: Vec<Key> = (0..m).map(|i| layout.action(cell, i)).collect();
        for i in 0..m as usize {
            *cond[i].entry((states[i].clone(), acts[i].clone())).or_insert_with(prob::zero) += &cell.weight;
            *joint[i].entry((states[i].clone(), acts[i].clone(), states[i + 1].clone())).or_insert_with(prob::zero) += &cell.weight;
        }
        *initial.entry(states[0].clone()).or_insert_with(prob::zero) += &cell.weight;
        *by_actions.entry(acts.clone()).or_insert_with(prob::zero) += &cell.weight;
        *paths.entry((states, acts)).or_insert_with(prob::zero) += &cell.weight;
    }
    let transition = |i: usize, s: &Key, e: &Key, t: &Key| -> Prob {
        let den = &cond[i][&(s.clone(), e.clone())];
        joint[i].get(&(s.clone(), e.clone(), t.clone())).map(|n| n / den).unwrap_or_else(prob::zero)
    };

    let mut examples = Vec::new();
    let mut compared = 0usize;
    for i in 1..m as usize {
        for (s, e) in cond[i].keys() {
            if !cond[0].contains_key(&(s.clone(), e.clone())) {
                continue;
            }
            let targets: BTreeSet<&Key> = joint[0]
                .keys()
                .chain(joint[i].keys())
                .filter(|(a, b, _)| a == s && b == e)
                .map(|(_, _, t)| t)
                .collect();
            for t in targets {
                compared += 1;
                let (a, b) = (transition(0, s, e, t), transition(i, s, e, t));
                if a != b {
                    examples.push(format!(
                        "{} / {} -> {}: step 0 gives {}, step {} gives {}",
                        describe(&p, &layout.fluents[0], s),
                        describe(&p, &layout.actions[0], e),
                        describe(&p, &layout.fluents[0], t),
                        a,
                        i,
                        b
                    ));
                }
            }
        }
    }
    checks.push(result("stationarity", examples, format!("{compared} transition probabilities agree exactly across steps")));

    let mut examples = Vec::new();
    for ((states, acts), mass) in &paths {
        let lhs = mass / &by_actions[acts];
        let mut rhs = &initial[&states[0]] / &total;
        for i in 0..m as usize {
            rhs *= transition(i, &states[i], &acts[i], &states[i + 1]);
        }
        if lhs != rhs {
            examples.push(format!(
                "path from {} under {}: {} vs {}",
                describe(&p, &layout.fluents[0], &states[0]),
                acts.iter().map(|a| describe(&p, &layout.actions[0], a)).collect::<Vec<_>>().join("; "),
                lhs,
                rhs
            ));
        }
    }
    checks.push(result("path-factorization", examples, format!("{} paths factor into transitions", paths.len())));

    let mut states: BTreeSet<Key> = BTreeSet::new();
    let core_fluents = core0.fluents_at(0);
    Engine::new(&core0).with_mode(Mode::Permissive).for_each_cell(|c| {
        states.insert(core_fluents.iter().map(|&k| c.values[k as usize]).collect());
    })
    .ok();
    let mut examples = Vec::new();
    let mut seen: BTreeSet<Key> = BTreeSet::new();
    for i in 0..m as usize {
        for (s, _, t) in joint[i].keys() {
            for x in [s, t] {
                if seen.insert(x.clone()) && !states.contains(x) {
                    examples.push(format!("{} is not a state", describe(&p, &layout.fluents[0], x)));
                }
            }
        }
    }
    checks.push(result("endpoints", examples, format!("{} distinct endpoints are all among {} states", seen.len(), states.len())));

    Ok(TheoremReport { horizon: m, cells: cells.len() as u64, checks })
}
