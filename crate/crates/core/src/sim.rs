//! Seeded Monte-Carlo evaluation of policies against a compiled model.
//!
//! The environment model supplies the true dynamics. A policy may have been
//! computed on a different model (a static model evaluated in a changed
//! world); actions are matched by name and observations by their atoms.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::builder::PomdpModel;
use crate::solver::{policy_action, AlphaVectorPolicy, BeliefState, FloatModel};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("policy action `{0}` does not exist in the environment or the policy's model")]
    UnknownAction(String),
    #[error("policy has {found} action names but its model has {expected} actions")]
    PolicyMismatch { found: usize, expected: usize },
    #[error("policy vector has length {found}, expected {expected}")]
    WrongLength { found: usize, expected: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub trials: usize,
    pub max_steps: usize,
    pub gamma: f64,
    pub seed: u64,
    /// Atom such as `Terminated=true`; the episode ends once the true state contains it.
    pub terminal_atom: Option<String>,
    /// Action names whose rewards count as question-asking cost. A trailing `*`
    /// matches any suffix, so `ConfirmItem*` covers every `ConfirmItem(..)`.
    pub cost_actions: Vec<String>,
}

impl SimulationConfig {
    pub fn new(trials: usize, max_steps: usize, gamma: f64, seed: u64) -> Self {
        SimulationConfig { trials, max_steps, gamma, seed, terminal_atom: None, cost_actions: Vec::new() }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.trials == 0 {
            return Err(SimError::InvalidConfig("trials must be at least 1".into()));
        }
        if self.max_steps == 0 {
            return Err(SimError::InvalidConfig("max steps must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(SimError::InvalidConfig(format!("discount {} not in [0, 1]", self.gamma)));
        }
        Ok(())
    }

    fn is_cost_action(&self, name: &str) -> bool {
        self.cost_actions.iter().any(|p| match p.strip_suffix('*') {
            Some(prefix) => name.starts_with(prefix),
            None => name == p,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub total_reward: f64,
    pub discounted_reward: f64,
    pub qa_cost: f64,
    pub steps: usize,
    pub terminated: bool,
    /// Set when the observation had probability zero under the policy's model.
    pub aborted: Option<String>,
    pub actions: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationReport {
    pub policy: String,
    pub seed: u64,
    pub trials: usize,
    pub avg_total_reward: f64,
    pub avg_discounted_reward: f64,
    pub avg_qa_cost: f64,
    /// Trials that hit `max_steps` without reaching the terminal atom.
    pub capped: usize,
    pub aborted: usize,
    pub records: Vec<TrialRecord>,
}

impl SimulationReport {
    fn from_records(policy: &str, cfg: &SimulationConfig, records: Vec<TrialRecord>) -> Self {
        let n = records.len() as f64;
        let mean = |f: fn(&TrialRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
        SimulationReport {
            policy: policy.to_string(),
            seed: cfg.seed,
            trials: records.len(),
            avg_total_reward: mean(|r| r.total_reward),
            avg_discounted_reward: mean(|r| r.discounted_reward),
            avg_qa_cost: mean(|r| r.qa_cost),
            capped: records.iter().filter(|r| !r.terminated && r.aborted.is_none() && r.steps == cfg.max_steps).count(),
            aborted: records.iter().filter(|r| r.aborted.is_some()).count(),
            records,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    policy: &'a str,
    trial: usize,
    total_reward: f64,
    discounted_reward: f64,
    qa_cost: f64,
    steps: usize,
    terminated: bool,
    aborted: &'a str,
    actions: String,
}

/// One CSV row per trial of every report.
pub fn reports_to_csv(reports: &[SimulationReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for rep in reports {
        for r in &rep.records {
            w.serialize(CsvRow {
                policy: &rep.policy,
                trial: r.trial,
                total_reward: r.total_reward,
                discounted_reward: r.discounted_reward,
                qa_cost: r.qa_cost,
                steps: r.steps,
                terminated: r.terminated,
                aborted: r.aborted.as_deref().unwrap_or(""),
                actions: r.actions.join(" "),
            })
            .expect("writing to memory");
        }
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
}

/// Index drawn from a sparse distribution with a uniform `u` in [0, 1).
pub fn sample_index(row: &[(usize, f64)], u: f64) -> usize {
    let mut acc = 0.0;
    for &(i, p) in row {
        acc += p;
        if u < acc {
            return i;
        }
    }
    row.iter().rev().find(|&&(_, p)| p > 0.0).map(|&(i, _)| i).expect("distribution has support")
}

/// RNG for one trial; every policy sees the same stream for the same trial index.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// A policy together with the model its beliefs are tracked in.
pub struct PolicyRun<'a> {
    model: FloatModel,
    policy: &'a AlphaVectorPolicy,
    env_action: Vec<usize>,
    obs_map: Vec<Option<usize>>,
    b0: BeliefState,
}

impl<'a> PolicyRun<'a> {
    /// `policy_model` defaults to the environment. Actions of the model that
    /// the policy does not name are dropped from it.
    pub fn new(env: &PomdpModel, policy_model: Option<&PomdpModel>, policy: &'a AlphaVectorPolicy) -> Result<Self, SimError> {
        let mut pm = policy_model.unwrap_or(env);
        if let Some(n) = policy.action_names.iter().find(|n| pm.action_index(n).is_none()) {
            return Err(SimError::UnknownAction(n.clone()));
        }
        let restricted;
        if policy.action_names != pm.actions {
            let drop: Vec<&str> = pm.actions.iter().filter(|a| !policy.action_names.contains(a)).map(String::as_str).collect();
            restricted = pm.without_actions(&drop);
            pm = &restricted;
        }
        if policy.action_names != pm.actions {
            return Err(SimError::PolicyMismatch { found: policy.action_names.len(), expected: pm.actions.len() });
        }
        if let Some(v) = policy.vectors.iter().find(|v| v.values.len() != pm.states.len()) {
            return Err(SimError::WrongLength { found: v.values.len(), expected: pm.states.len() });
        }
        let env_action = policy
            .action_names
            .iter()
            .map(|n| env.action_index(n).ok_or_else(|| SimError::UnknownAction(n.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let pobs: HashMap<&Vec<String>, usize> = pm.observations.iter().enumerate().map(|(i, o)| (o, i)).collect();
        let obs_map = env.observations.iter().map(|o| pobs.get(o).copied()).collect();
        let model = FloatModel::new(pm);
        let b0 = BeliefState::new(model.b0.clone());
        Ok(PolicyRun { model, policy, env_action, obs_map, b0 })
    }
}

/// Simulation state of the environment, shared across policies.
pub struct Environment {
    model: FloatModel,
    names: Vec<String>,
    terminal: Vec<bool>,
    b0_row: Vec<(usize, f64)>,
}

impl Environment {
    pub fn new(env: &PomdpModel, terminal_atom: Option<&str>) -> Self {
        let model = FloatModel::new(env);
        let terminal = env.states.iter().map(|s| terminal_atom.is_some_and(|t| s.iter().any(|a| a == t))).collect();
        let b0_row = model.b0.iter().copied().enumerate().filter(|&(_, p)| p > 0.0).collect();
        Environment { model, names: env.actions.clone(), terminal, b0_row }
    }

    pub fn initial_state(&self, rng: &mut impl Rng) -> usize {
        sample_index(&self.b0_row, rng.random())
    }

    pub fn reward(&self, s: usize, a: usize, s2: usize) -> f64 {
        self.model.reward(s, a, s2)
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    pub fn sample_successor(&self, s: usize, a: usize, rng: &mut impl Rng) -> usize {
        sample_index(&self.model.t[a][s], rng.random())
    }

    pub fn sample_observation(&self, a: usize, s2: usize, rng: &mut impl Rng) -> usize {
        sample_index(&self.model.o[a][s2], rng.random())
    }
}

pub fn rollout(env: &Environment, run: &PolicyRun, cfg: &SimulationConfig, trial: usize) -> TrialRecord {
    let mut rng = trial_rng(cfg.seed, trial);
    let mut s = env.initial_state(&mut rng);
    let mut b = run.b0.clone();
    let mut rec = TrialRecord {
        trial,
        total_reward: 0.0,
        discounted_reward: 0.0,
        qa_cost: 0.0,
        steps: 0,
        terminated: env.terminal[s],
        aborted: None,
        actions: Vec::new(),
    };
    let mut discount = 1.0;
    while !rec.terminated && rec.steps < cfg.max_steps {
        let pa = policy_action(run.policy, &b);
        let a = run.env_action[pa];
        let s2 = env.sample_successor(s, a, &mut rng);
        let o = env.sample_observation(a, s2, &mut rng);
        let r = env.model.reward(s, a, s2);
        let name = &env.names[a];
        rec.total_reward += r;
        rec.discounted_reward += discount * r;
        if cfg.is_cost_action(name) {
            rec.qa_cost += r.abs();
        }
        discount *= cfg.gamma;
        rec.steps += 1;
        rec.actions.push(name.clone());
        s = s2;
        rec.terminated = env.terminal[s];
        let next = run.obs_map[o].ok_or(()).and_then(|po| run.model.belief_update(&b, pa, po).map_err(|_| ()));
        match next {
            Ok(nb) => b = nb,
            Err(()) => {
                rec.aborted = Some(format!("observation {o} after {name} is impossible under the policy's model"));
                break;
            }
        }
    }
    rec
}

/// Runs every policy over the same trials with common random numbers.
pub fn evaluate(
    env: &PomdpModel,
    policies: &[(&str, Option<&PomdpModel>, &AlphaVectorPolicy)],
    cfg: &SimulationConfig,
) -> Result<Vec<SimulationReport>, SimError> {
    cfg.validate()?;
    let environment = Environment::new(env, cfg.terminal_atom.as_deref());
    let mut reports = Vec::new();
    for &(name, model, policy) in policies {
        let run = PolicyRun::new(env, model, policy)?;
        let records: Vec<TrialRecord> = (0..cfg.trials).into_par_iter().map(|i| rollout(&environment, &run, cfg, i)).collect();
        reports.push(SimulationReport::from_records(name, cfg, records));
    }
    Ok(reports)
}
