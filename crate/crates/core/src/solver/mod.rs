//! Belief updates, point-based value iteration, and an exact finite-horizon
//! oracle.

use std::collections::{HashMap, HashSet};
use std::time::{Duration, Instant};

use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::builder::PomdpModel;
use crate::prob::{self, Prob};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("observation {observation} has probability zero after action {action}")]
    ImpossibleObservation { action: usize, observation: usize },
    #[error("belief tree exceeds {0} nodes")]
    TreeTooLarge(usize),
    #[error("discount {0} must lie in [0, 1)")]
    InvalidDiscount(f64),
    #[error("precision must be positive")]
    InvalidPrecision,
    #[error("policy refers to unknown action `{0}`")]
    UnknownAction(String),
    #[error("policy has no vectors")]
    EmptyPolicy,
    #[error("policy vectors have {found} entries, expected {expected}")]
    WrongLength { found: usize, expected: usize },
    #[error("malformed policy: {0}")]
    Json(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BeliefState {
    pub probs: Vec<f64>,
}

impl BeliefState {
    pub fn new(probs: Vec<f64>) -> Self {
        BeliefState { probs }
    }

    pub fn uniform(n: usize) -> Self {
        BeliefState { probs: vec![1.0 / n as f64; n] }
    }

    pub fn point(n: usize, s: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[s] = 1.0;
        BeliefState { probs }
    }

    pub fn from_exact(b: &[Prob]) -> Self {
        BeliefState { probs: b.iter().map(prob::to_f64).collect() }
    }

    pub fn dot(&self, v: &[f64]) -> f64 {
        self.probs.iter().zip(v).map(|(a, b)| a * b).sum()
    }
}

/// Sparse floating-point view of a model.
#[derive(Clone, Debug)]
pub struct FloatModel {
    pub states: usize,
    pub actions: usize,
    pub observations: usize,
    pub gamma: f64,
    /// `t[a][s]` lists `(s', p)`.
    pub t: Vec<Vec<Vec<(usize, f64)>>>,
    /// `o[a][s']` lists `(o, p)`.
    pub o: Vec<Vec<Vec<(usize, f64)>>>,
    /// `r[a][s]` lists `(s', reward)`.
    pub r: Vec<Vec<Vec<(usize, f64)>>>,
    /// Expected immediate reward `r_exp[a][s]`.
    pub r_exp: Vec<Vec<f64>>,
    /// Observations each action can produce.
    pub reachable_obs: Vec<Vec<usize>>,
    pub b0: Vec<f64>,
}

impl FloatModel {
    pub fn new(m: &PomdpModel) -> Self {
        let (ns, na, no) = m.sizes();
        let mut t = vec![vec![Vec::new(); ns]; na];
        for (&(s, a, s2), p) in &m.transitions {
            t[a][s].push((s2, prob::to_f64(p)));
        }
        let mut o = vec![vec![Vec::new(); ns]; na];
        let mut seen = vec![vec![false; no]; na];
        for (&(a, s2, ob), p) in &m.observation_probs {
            if !p.is_zero() {
                o[a][s2].push((ob, prob::to_f64(p)));
                seen[a][ob] = true;
            }
        }
        let mut r = vec![vec![Vec::new(); ns]; na];
        let mut r_exp = vec![vec![0.0; ns]; na];
        for (&(s, a, s2), v) in &m.rewards {
            let v = prob::to_f64(v);
            r[a][s].push((s2, v));
            r_exp[a][s] += prob::to_f64(&m.t(s, a, s2)) * v;
        }
        let reachable_obs = seen.iter().map(|row| (0..no).filter(|&x| row[x]).collect()).collect();
        FloatModel {
            states: ns,
            actions: na,
            observations: no,
            gamma: m.gamma,
            t,
            o,
            r,
            r_exp,
            reachable_obs,
            b0: m.b0.iter().map(prob::to_f64).collect(),
        }
    }

    pub fn reward(&self, s: usize, a: usize, s2: usize) -> f64 {
        self.r[a][s].iter().find(|x| x.0 == s2).map(|x| x.1).unwrap_or(0.0)
    }

    pub fn obs_prob(&self, a: usize, s2: usize, o: usize) -> f64 {
        self.o[a][s2].iter().find(|x| x.0 == o).map(|x| x.1).unwrap_or(0.0)
    }

    /// Predicted next-state distribution `Σ_s T(s, a, s') b(s)`.
    pub fn predict(&self, b: &BeliefState, a: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.states];
        for (s, &p) in b.probs.iter().enumerate() {
            if p != 0.0 {
                for &(s2, q) in &self.t[a][s] {
                    out[s2] += p * q;
                }
            }
        }
        out
    }

    /// `Pr(o | b, a)` for every observation.
    pub fn observation_distribution(&self, b: &BeliefState, a: usize) -> Vec<f64> {
        let pred = self.predict(b, a);
        let mut out = vec![0.0; self.observations];
        for (s2, &p) in pred.iter().enumerate() {
            for &(o, q) in &self.o[a][s2] {
                out[o] += p * q;
            }
        }
        out
    }

    pub fn belief_update(&self, b: &BeliefState, a: usize, o: usize) -> Result<BeliefState, SolverError> {
        let pred = self.predict(b, a);
        let mut probs: Vec<f64> = pred.iter().enumerate().map(|(s2, &p)| p * self.obs_prob(a, s2, o)).collect();
        let eta: f64 = probs.iter().sum();
        if eta <= 0.0 {
            return Err(SolverError::ImpossibleObservation { action: a, observation: o });
        }
        for p in &mut probs {
            *p /= eta;
        }
        Ok(BeliefState { probs })
    }

    fn bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for a in 0..self.actions {
            for s in 0..self.states {
                lo = lo.min(self.r_exp[a][s]);
                hi = hi.max(self.r_exp[a][s]);
            }
        }
        (lo, hi)
    }
}

/// `b'(s') = η · O(a, s', o) · Σ_s T(s, a, s') b(s)`.
pub fn belief_update(m: &PomdpModel, b: &BeliefState, a: usize, o: usize) -> Result<BeliefState, SolverError> {
    FloatModel::new(m).belief_update(b, a, o)
}

/// Largest absolute expected immediate reward.
pub fn reward_bound(m: &PomdpModel) -> f64 {
    let (lo, hi) = FloatModel::new(m).bounds();
    lo.abs().max(hi.abs())
}

/// Optimal `h`-step discounted value at `b0`, by full expansion of the belief
/// tree in exact arithmetic. Beliefs reached twice at the same depth are
/// evaluated once.
pub fn exact_finite_horizon_value(m: &PomdpModel, b0: &[Prob], h: u32) -> Result<Prob, SolverError> {
    exact_finite_horizon_value_with_limit(m, b0, h, 2_000_000)
}

pub fn exact_finite_horizon_value_with_limit(m: &PomdpModel, b0: &[Prob], h: u32, limit: usize) -> Result<Prob, SolverError> {
    let gamma = prob::parse(&format!("{}", m.gamma)).unwrap_or_else(prob::one);
    let ex = Exact::new(m, gamma, limit);
    let mut memo = HashMap::new();
    ex.value(b0, h, &mut memo)
}

struct Exact<'m> {
    m: &'m PomdpModel,
    gamma: Prob,
    t: Vec<Vec<Vec<(usize, Prob)>>>,
    o: Vec<Vec<Vec<(usize, Prob)>>>,
    r_exp: Vec<Vec<Prob>>,
    limit: usize,
}

impl<'m> Exact<'m> {
    fn new(m: &'m PomdpModel, gamma: Prob, limit: usize) -> Self {
        let (ns, na, _) = m.sizes();
        let mut t = vec![vec![Vec::new(); ns]; na];
        for (&(s, a, s2), p) in &m.transitions {
            t[a][s].push((s2, p.clone()));
        }
        let mut o = vec![vec![Vec::new(); ns]; na];
        for (&(a, s2, ob), p) in &m.observation_probs {
            if !p.is_zero() {
                o[a][s2].push((ob, p.clone()));
            }
        }
        let mut r_exp = vec![vec![prob::zero(); ns]; na];
        for (&(s, a, s2), v) in &m.rewards {
            r_exp[a][s] += m.t(s, a, s2) * v;
        }
        Exact { m, gamma, t, o, r_exp, limit }
    }

    fn value(&self, b: &[Prob], h: u32, memo: &mut HashMap<(u32, Vec<Prob>), Prob>) -> Result<Prob, SolverError> {
        if h == 0 {
            return Ok(prob::zero());
        }
        if let Some(v) = memo.get(&(h, b.to_vec())) {
            return Ok(v.clone());
        }
        if memo.len() >= self.limit {
            return Err(SolverError::TreeTooLarge(self.limit));
        }
        let (ns, na, _) = self.m.sizes();
        let mut best: Option<Prob> = None;
        for a in 0..na {
            let mut v = prob::zero();
            let mut pred = vec![prob::zero(); ns];
            for (s, p) in b.iter().enumerate() {
                if p.is_zero() {
                    continue;
                }
                v += p * &self.r_exp[a][s];
                for (s2, q) in &self.t[a][s] {
                    pred[*s2] += p * q;
                }
            }
            let mut joint: std::collections::BTreeMap<usize, Vec<Prob>> = std::collections::BTreeMap::new();
            for (s2, p) in pred.iter().enumerate() {
                if p.is_zero() {
                    continue;
                }
                for (o, q) in &self.o[a][s2] {
                    joint.entry(*o).or_insert_with(|| vec![prob::zero(); ns])[s2] += p * q;
                }
            }
            let mut future = prob::zero();
            for (_, mut post) in joint {
                let eta: Prob = post.iter().sum();
                for x in &mut post {
                    *x /= &eta;
                }
                future += eta * self.value(&post, h - 1, memo)?;
            }
            v += &self.gamma * future;
            if best.as_ref().is_none_or(|b| v > *b) {
                best = Some(v);
            }
        }
        let v = best.unwrap_or_else(prob::zero);
        memo.insert((h, b.to_vec()), v.clone());
        Ok(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaVector {
    pub action: usize,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlphaVectorPolicy {
    pub action_names: Vec<String>,
    pub vectors: Vec<AlphaVector>,
}

#[derive(Serialize, Deserialize)]
struct PolicyEntry {
    action: String,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyDump {
    actions: Vec<String>,
    vectors: Vec<PolicyEntry>,
}

impl AlphaVectorPolicy {
    pub fn value(&self, b: &BeliefState) -> f64 {
        self.vectors.iter().map(|v| b.dot(&v.values)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_json(&self) -> String {
        let dump = PolicyDump {
            actions: self.action_names.clone(),
            vectors: self.vectors.iter().map(|v| PolicyEntry { action: self.action_names[v.action].clone(), values: v.values.clone() }).collect(),
        };
        let mut s = serde_json::to_string_pretty(&dump).expect("policy serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, SolverError> {
        let dump: PolicyDump = serde_json::from_str(text).map_err(|e| SolverError::Json(e.to_string()))?;
        if dump.vectors.is_empty() {
            return Err(SolverError::EmptyPolicy);
        }
        let n = dump.vectors[0].values.len();
        let mut vectors = Vec::new();
        for e in &dump.vectors {
            let action = dump.actions.iter().position(|a| *a == e.action).ok_or_else(|| SolverError::UnknownAction(e.action.clone()))?;
            if e.values.len() != n {
                return Err(SolverError::WrongLength { found: e.values.len(), expected: n });
            }
            vectors.push(AlphaVector { action, values: e.values.clone() });
        }
        Ok(AlphaVectorPolicy { action_names: dump.actions, vectors })
    }
}

/// Action of the best vector at `b`; ties go to the lowest action index.
pub fn policy_action(policy: &AlphaVectorPolicy, b: &BeliefState) -> usize {
    let mut best: Option<(f64, usize)> = None;
    for v in &policy.vectors {
        let x = b.dot(&v.values);
        let better = match best {
            None => true,
            Some((bx, ba)) => x > bx + 1e-12 || ((x - bx).abs() <= 1e-12 && v.action < ba),
        };
        if better {
            best = Some((x, v.action));
        }
    }
    best.map(|(_, a)| a).unwrap_or(0)
}

#[derive(Clone, Debug)]
pub struct PbviConfig {
    pub gamma: f64,
    /// Stop when no maintained point improves by this much and no new point
    /// can be added.
    pub precision: f64,
    pub max_time: Duration,
    pub max_points: usize,
    pub max_iterations: usize,
}

impl PbviConfig {
    pub fn new(gamma: f64) -> Self {
        PbviConfig { gamma, precision: 0.1, max_time: Duration::from_secs(60), max_points: 256, max_iterations: 2000 }
    }
}

#[derive(Clone, Debug)]
pub struct PbviResult {
    pub policy: AlphaVectorPolicy,
    pub value_at_b0: f64,
    /// Value at `b0` after each backup sweep.
    pub history: Vec<f64>,
    /// Largest improvement at any point in the last sweep.
    pub residual: f64,
    pub points: usize,
    pub iterations: usize,
    pub converged: bool,
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

struct Pbvi<'a> {
    m: &'a FloatModel,
    gamma: f64,
}

impl Pbvi<'_> {
    fn backup(&self, b: &BeliefState, gamma_set: &[AlphaVector]) -> AlphaVector {
        let m = self.m;
        let pred_all: Vec<Vec<f64>> = (0..m.actions).map(|a| m.predict(b, a)).collect();
        let mut best: Option<(f64, AlphaVector)> = None;
        for a in 0..m.actions {
            let mut values = m.r_exp[a].clone();
            for &o in &m.reachable_obs[a] {
                // Unnormalized posterior over s' for (a, o).
                let tau: Vec<f64> = (0..m.states).map(|s2| pred_all[a][s2] * m.obs_prob(a, s2, o)).collect();
                if tau.iter().all(|&x| x == 0.0) {
                    continue;
                }
                let mut pick = 0;
                let mut pick_v = f64::NEG_INFINITY;
                for (k, alpha) in gamma_set.iter().enumerate() {
                    let v: f64 = tau.iter().zip(&alpha.values).map(|(x, y)| x * y).sum();
                    if v > pick_v + 1e-12 {
                        pick = k;
                        pick_v = v;
                    }
                }
                let alpha = &gamma_set[pick].values;
                for s in 0..m.states {
                    let mut g = 0.0;
                    for &(s2, p) in &m.t[a][s] {
                        let q = m.obs_prob(a, s2, o);
                        if q != 0.0 {
                            g += p * q * alpha[s2];
                        }
                    }
                    values[s] += self.gamma * g;
                }
            }
            let v = b.dot(&values);
            if best.as_ref().is_none_or(|(bv, _)| v > *bv + 1e-12) {
                best = Some((v, AlphaVector { action: a, values }));
            }
        }
        best.expect("at least one action").1
    }

    fn expand(&self, points: &[BeliefState], limit: usize) -> Vec<BeliefState> {
        let m = self.m;
        let found: Vec<Option<BeliefState>> = points
            .par_iter()
            .map(|b| {
                let mut best: Option<(f64, BeliefState)> = None;
                for a in 0..m.actions {
                    let dist = m.observation_distribution(b, a);
                    for &o in &m.reachable_obs[a] {
                        if dist[o] <= 0.0 {
                            continue;
                        }
                        let Ok(next) = m.belief_update(b, a, o) else { continue };
                        let floor = best.as_ref().map_or(1e-9, |(bd, _)| bd + 1e-12);
                        let mut d = f64::INFINITY;
                        for p in points {
                            d = d.min(l1(&p.probs, &next.probs));
                            if d <= floor {
                                break;
                            }
                        }
                        if d > floor {
                            best = Some((d, next));
                        }
                    }
                }
                best.map(|(_, b)| b)
            })
            .collect();
        let mut out = Vec::new();
        for b in found.into_iter().flatten() {
            if points.len() + out.len() >= limit {
                break;
            }
            let all = points.iter().chain(out.iter());
            if all.map(|p: &BeliefState| l1(&p.probs, &b.probs)).fold(f64::INFINITY, f64::min) > 1e-9 {
                out.push(b);
            }
        }
        out
    }
}

fn best_value(b: &BeliefState, set: &[AlphaVector]) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, 0);
    for (k, v) in set.iter().enumerate() {
        let x = b.dot(&v.values);
        if x > best.0 + 1e-12 {
            best = (x, k);
        }
    }
    best
}

/// Point-based value iteration from a lower-bound initial vector, expanding
/// the belief set greedily from `b0`.
pub fn solve_pbvi(m: &PomdpModel, b0: &BeliefState, cfg: &PbviConfig) -> Result<PbviResult, SolverError> {
    if !(0.0..1.0).contains(&cfg.gamma) {
        return Err(SolverError::InvalidDiscount(cfg.gamma));
    }
    if cfg.precision.is_nan() || cfg.precision <= 0.0 {
        return Err(SolverError::InvalidPrecision);
    }
    let start = Instant::now();
    let fm = FloatModel::new(m);
    let solver = Pbvi { m: &fm, gamma: cfg.gamma };
    let (rmin, _) = fm.bounds();
    let rmin = if rmin.is_finite() { rmin.min(0.0) } else { 0.0 };
    let mut set = vec![AlphaVector { action: 0, values: vec![rmin / (1.0 - cfg.gamma); fm.states] }];
    let mut points = vec![b0.clone()];
    let mut history = Vec::new();
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iterations && start.elapsed() < cfg.max_time {
        iterations += 1;
        let backed: Vec<AlphaVector> = points.par_iter().map(|b| solver.backup(b, &set)).collect();
        let mut next: Vec<AlphaVector> = Vec::new();
        let mut seen = HashSet::new();
        residual = 0.0;
        for (b, alpha) in points.iter().zip(backed) {
            let (old, k) = best_value(b, &set);
            let new = b.dot(&alpha.values);
            let keep = if new >= old { alpha } else { set[k].clone() };
            residual = f64::max(residual, b.dot(&keep.values) - old);
            let key = (keep.action, keep.values.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
            if seen.insert(key) {
                next.push(keep);
            }
        }
        set = next;
        history.push(best_value(b0, &set).0);
        if residual < cfg.precision {
            let added = if points.len() < cfg.max_points { solver.expand(&points, cfg.max_points) } else { Vec::new() };
            if added.is_empty() {
                converged = true;
                break;
            }
            points.extend(added);
        }
    }
    let policy = AlphaVectorPolicy { action_names: m.actions.clone(), vectors: set };
    let value_at_b0 = policy.value(b0);
    Ok(PbviResult { policy, value_at_b0, history, residual, points: points.len(), iterations, converged })
}
