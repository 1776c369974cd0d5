//! Assemble the POMDP of an action description.
//!
//! States and observations come from the stable models of `D_0`, the
//! transition, observation and reward tables from `D_1`, and the initial
//! belief from `D_init ∪ D_0`. The compositional mode computes the `D_1`
//! tables one action group at a time.

use std::collections::{BTreeMap, HashMap};
use std::time::{Duration, Instant};

use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::engine::{Engine, EngineError};
use crate::lang::{ActionDescription, ConstKind};
use crate::prob::{self, Prob};
use crate::translate::{self, GroundProgram, TranslateError};

/// Name of the action that does nothing.
pub const NOOP: &str = "noop";

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("the description has no states")]
    EmptyStateSet,
    #[error("discount {0} is not in [0, 1]")]
    InvalidDiscount(f64),
}

/// A POMDP over named states, actions and observations. Tables are sparse and
/// exact; absent entries are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct PomdpModel {
    /// Each state lists its fluent atoms `C=v` in declaration order.
    pub states: Vec<Vec<String>>,
    pub actions: Vec<String>,
    /// Each observation lists its observation atoms `C=v` in declaration order.
    pub observations: Vec<Vec<String>>,
    /// `(s, a, s')`
    pub transitions: BTreeMap<(usize, usize, usize), Prob>,
    /// `(a, s', o)`
    pub observation_probs: BTreeMap<(usize, usize, usize), Prob>,
    /// `(s, a, s')`, only where the transition has positive probability.
    pub rewards: BTreeMap<(usize, usize, usize), Prob>,
    pub gamma: f64,
    pub b0: Vec<Prob>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuildMode {
    Naive,
    Compositional,
}

#[derive(Clone, Copy, Debug)]
pub struct BuildOptions {
    pub gamma: f64,
    pub mode: BuildMode,
    /// Drop observations that no `(a, s')` produces.
    pub prune_observations: bool,
}

impl BuildOptions {
    pub fn new(gamma: f64, mode: BuildMode) -> Self {
        BuildOptions { gamma, mode, prune_observations: false }
    }
}

#[derive(Clone, Debug, Default)]
pub struct BuildStats {
    pub programs: usize,
    pub rules: usize,
    pub cells: u64,
    pub elapsed: Duration,
}

impl PomdpModel {
    pub fn state_name(&self, s: usize) -> String {
        self.states[s].join(", ")
    }

    pub fn observation_name(&self, o: usize) -> String {
        self.observations[o].join(", ")
    }

    pub fn state_index(&self, atoms: &[&str]) -> Option<usize> {
        self.states.iter().position(|s| atoms.iter().all(|a| s.iter().any(|x| x == a)))
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a == name)
    }

    pub fn observation_index(&self, atoms: &[&str]) -> Option<usize> {
        self.observations.iter().position(|o| atoms.iter().all(|a| o.iter().any(|x| x == a)))
    }

    pub fn t(&self, s: usize, a: usize, s2: usize) -> Prob {
        self.transitions.get(&(s, a, s2)).cloned().unwrap_or_else(prob::zero)
    }

    pub fn o(&self, a: usize, s2: usize, o: usize) -> Prob {
        self.observation_probs.get(&(a, s2, o)).cloned().unwrap_or_else(prob::zero)
    }

    pub fn r(&self, s: usize, a: usize, s2: usize) -> Prob {
        self.rewards.get(&(s, a, s2)).cloned().unwrap_or_else(prob::zero)
    }

    /// Rows of T, O and b0 that do not sum to exactly 1, described.
    pub fn stochasticity_errors(&self) -> Vec<String> {
        let mut out = Vec::new();
        let (ns, na, no) = (self.states.len(), self.actions.len(), self.observations.len());
        let mut t_rows = vec![prob::zero(); ns * na];
        for (&(s, a, _), p) in &self.transitions {
            t_rows[s * na + a] += p;
        }
        for (i, sum) in t_rows.iter().enumerate() {
            if !sum.is_one() {
                out.push(format!("T({}, {}, .) sums to {}", self.state_name(i / na), self.actions[i % na], sum));
            }
        }
        let mut o_rows = vec![prob::zero(); na * ns];
        for (&(a, s2, _), p) in &self.observation_probs {
            o_rows[a * ns + s2] += p;
        }
        for (i, sum) in o_rows.iter().enumerate() {
            if !sum.is_one() {
                out.push(format!("O({}, {}, .) sums to {}", self.actions[i / ns], self.state_name(i % ns), sum));
            }
        }
        let b: Prob = self.b0.iter().sum();
        if !b.is_one() {
            out.push(format!("b0 sums to {b}"));
        }
        let all = self.transitions.values().chain(self.observation_probs.values()).chain(&self.b0);
        if all.clone().any(|p| !prob::is_probability(p)) {
            out.push("a probability lies outside [0, 1]".into());
        }
        if no == 0 {
            out.push("no observations".into());
        }
        out
    }

    /// The same model without the named actions. Unknown names are ignored.
    pub fn without_actions(&self, drop: &[&str]) -> PomdpModel {
        let mut map = vec![None; self.actions.len()];
        let mut actions = Vec::new();
        for (i, a) in self.actions.iter().enumerate() {
            if !drop.contains(&a.as_str()) {
                map[i] = Some(actions.len());
                actions.push(a.clone());
            }
        }
        let remap = |t: &BTreeMap<(usize, usize, usize), Prob>, pos: usize| {
            t.iter()
                .filter_map(|(&k, p)| {
                    let mut k = [k.0, k.1, k.2];
                    k[pos] = map[k[pos]]?;
                    Some(((k[0], k[1], k[2]), p.clone()))
                })
                .collect()
        };
        PomdpModel {
            states: self.states.clone(),
            actions,
            observations: self.observations.clone(),
            transitions: remap(&self.transitions, 1),
            observation_probs: remap(&self.observation_probs, 0),
            rewards: remap(&self.rewards, 1),
            gamma: self.gamma,
            b0: self.b0.clone(),
        }
    }

    /// Model sizes `(|S|, |A|, |Ω|)`.
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.states.len(), self.actions.len(), self.observations.len())
    }
}

fn atom_names(p: &GroundProgram, consts: &[u32], values: &[u32]) -> Vec<String> {
    consts
        .iter()
        .map(|&c| {
            let k = &p.constants[c as usize];
            format!("{}={}", k.name, k.domain[values[c as usize] as usize])
        })
        .collect()
}

/// Projections of the stable models of `D_0` onto the fluents, sorted.
pub fn enumerate_states(d: &ActionDescription) -> Result<Vec<Vec<String>>, BuildError> {
    let p = translate::translate_core(d, 0)?;
    let fl = p.fluents_at(0);
    project(&p, &fl)
}

/// The no-action element followed by every ground action, sorted.
pub fn enumerate_actions(d: &ActionDescription) -> Vec<String> {
    let mut names: Vec<String> = d.action_constants().into_iter().map(|c| d.constants[c].name.clone()).collect();
    names.sort();
    names.insert(0, NOOP.into());
    names
}

/// Projections of the stable models of `D_0` onto the observation constants, sorted.
pub fn enumerate_observations(d: &ActionDescription) -> Result<Vec<Vec<String>>, BuildError> {
    let p = translate::translate_core(d, 0)?;
    let obs = p.constants_of(ConstKind::Observation, 0);
    project(&p, &obs)
}

fn project(p: &GroundProgram, consts: &[u32]) -> Result<Vec<Vec<String>>, BuildError> {
    let mut out = std::collections::BTreeSet::new();
    Engine::new(p).for_each_cell(|c| {
        out.insert(atom_names(p, consts, &c.values));
    })?;
    Ok(out.into_iter().collect())
}

#[derive(Default)]
struct Tables {
    mass: HashMap<(usize, usize), Prob>,
    trans: HashMap<(usize, usize, usize), Prob>,
    util: HashMap<(usize, usize, usize), Prob>,
    obs: HashMap<(usize, usize, usize), Prob>,
    obs_norm: HashMap<(usize, usize), Prob>,
    cells: u64,
    rules: usize,
}

fn add(map: &mut HashMap<(usize, usize, usize), Prob>, k: (usize, usize, usize), p: &Prob) {
    *map.entry(k).or_insert_with(prob::zero) += p;
}

impl Tables {
    fn merge(&mut self, other: Tables) {
        for (k, v) in other.mass {
            *self.mass.entry(k).or_insert_with(prob::zero) += v;
        }
        for (k, v) in other.obs_norm {
            *self.obs_norm.entry(k).or_insert_with(prob::zero) += v;
        }
        for (k, v) in other.trans {
            add(&mut self.trans, k, &v);
        }
        for (k, v) in other.util {
            add(&mut self.util, k, &v);
        }
        for (k, v) in other.obs {
            add(&mut self.obs, k, &v);
        }
        self.cells += other.cells;
        self.rules += other.rules;
    }
}

struct Index<'a> {
    states: HashMap<&'a [String], usize>,
    observations: HashMap<&'a [String], usize>,
    actions: HashMap<&'a str, usize>,
}

fn accumulate(p: &GroundProgram, ix: &Index) -> Result<Tables, BuildError> {
    let fl0 = p.fluents_at(0);
    let fl1 = p.fluents_at(1);
    let obs1 = p.constants_of(ConstKind::Observation, 1);
    let acts = p.constants_of(ConstKind::Action, 0);
    let mut t = Tables { rules: p.rules.len(), ..Tables::default() };
    let mut missing: Option<String> = None;
    Engine::new(p).for_each_cell(|c| {
        t.cells += 1;
        let s_names = atom_names(p, &fl0, &c.values);
        let s2_names = atom_names(p, &fl1, &c.values);
        let o_names = atom_names(p, &obs1, &c.values);
        let (Some(&s), Some(&s2), Some(&o)) =
            (ix.states.get(s_names.as_slice()), ix.states.get(s2_names.as_slice()), ix.observations.get(o_names.as_slice()))
        else {
            missing.get_or_insert_with(|| format!("{} -> {} / {}", s_names.join(", "), s2_names.join(", "), o_names.join(", ")));
            return;
        };
        let a = acts.iter().find(|&&k| c.values[k as usize] == 1).map(|&k| ix.actions[p.constants[k as usize].name.as_str()]).unwrap_or(0);
        *t.mass.entry((s, a)).or_insert_with(prob::zero) += &c.weight;
        add(&mut t.trans, (s, a, s2), &c.weight);
        if !c.utility.is_zero() {
            add(&mut t.util, (s, a, s2), &(&c.weight * &c.utility));
        }
        add(&mut t.obs, (a, s2, o), &c.weight);
        *t.obs_norm.entry((a, s2)).or_insert_with(prob::zero) += &c.weight;
    })?;
    if let Some(m) = missing {
        return Err(EngineError::AssumptionViolation(format!("transition leaves the state or observation set: {m}")).into());
    }
    Ok(t)
}

pub fn build_naive(d: &ActionDescription, gamma: f64) -> Result<PomdpModel, BuildError> {
    build(d, BuildOptions::new(gamma, BuildMode::Naive)).map(|(m, _)| m)
}

pub fn build_compositional(d: &ActionDescription, gamma: f64) -> Result<PomdpModel, BuildError> {
    build(d, BuildOptions::new(gamma, BuildMode::Compositional)).map(|(m, _)| m)
}

pub fn build(d: &ActionDescription, opts: BuildOptions) -> Result<(PomdpModel, BuildStats), BuildError> {
    let start = Instant::now();
    if !(0.0..=1.0).contains(&opts.gamma) {
        return Err(BuildError::InvalidDiscount(opts.gamma));
    }
    let states = enumerate_states(d)?;
    if states.is_empty() {
        return Err(BuildError::EmptyStateSet);
    }
    let actions = enumerate_actions(d);
    let mut observations = enumerate_observations(d)?;
    let ix = Index {
        states: states.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect(),
        observations: observations.iter().enumerate().map(|(i, o)| (o.as_slice(), i)).collect(),
        actions: actions.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect(),
    };

    let core = translate::translate_core(d, 1)?;
    let programs: Vec<GroundProgram> = match opts.mode {
        BuildMode::Naive => vec![core],
        BuildMode::Compositional => {
            let mut ps = vec![translate::restrict_to_group(&core, None)?];
            for g in &core.groups {
                ps.push(translate::restrict_to_group(&core, Some(&g.name))?);
            }
            ps
        }
    };
    let parts: Vec<Result<Tables, BuildError>> = programs.par_iter().map(|p| accumulate(p, &ix)).collect();
    let mut tables = Tables::default();
    for part in parts {
        tables.merge(part?);
    }

    let mut transitions = BTreeMap::new();
    let mut rewards = BTreeMap::new();
    for (&(s, a, s2), w) in &tables.trans {
        let mass = &tables.mass[&(s, a)];
        transitions.insert((s, a, s2), w / mass);
        if let Some(u) = tables.util.get(&(s, a, s2)) {
            let r = u / w;
            if !r.is_zero() {
                rewards.insert((s, a, s2), r);
            }
        }
    }
    let mut observation_probs = BTreeMap::new();
    for (&(a, s2, o), w) in &tables.obs {
        observation_probs.insert((a, s2, o), w / &tables.obs_norm[&(a, s2)]);
    }
    // An (a, s') no transition reaches gets the observation where nothing is
    // observed, so every row is a distribution.
    let silent = observations.iter().position(|o| o.iter().all(|x| x.ends_with("=NA"))).unwrap_or(0);
    for a in 0..actions.len() {
        for s2 in 0..states.len() {
            if !tables.obs_norm.contains_key(&(a, s2)) {
                observation_probs.insert((a, s2, silent), prob::one());
            }
        }
    }

    let p0 = translate::translate(d, 0)?;
    let fl = p0.fluents_at(0);
    let mut b0 = vec![prob::zero(); states.len()];
    Engine::new(&p0).for_each_cell(|c| {
        b0[ix.states[atom_names(&p0, &fl, &c.values).as_slice()]] += &c.weight;
    })?;
    let total: Prob = b0.iter().sum();
    if total.is_zero() {
        return Err(EngineError::AssumptionViolation("the initial laws admit no state".into()).into());
    }
    for b in &mut b0 {
        *b /= &total;
    }

    if opts.prune_observations {
        let used: std::collections::BTreeSet<usize> = observation_probs.keys().map(|&(_, _, o)| o).collect();
        let remap: HashMap<usize, usize> = used.iter().enumerate().map(|(i, &o)| (o, i)).collect();
        observations = used.iter().map(|&o| observations[o].clone()).collect();
        observation_probs = observation_probs.into_iter().map(|((a, s2, o), p)| ((a, s2, remap[&o]), p)).collect();
    }

    let stats = BuildStats { programs: programs.len() + 3, rules: tables.rules, cells: tables.cells, elapsed: start.elapsed() };
    Ok((PomdpModel { states, actions, observations, transitions, observation_probs, rewards, gamma: opts.gamma, b0 }, stats))
}

#[cfg(test)]
mod tests;
