//! Model serialization: the `.pomdp` text format and an exact JSON dump.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::builder::PomdpModel;
use crate::prob::{self, Prob};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("model is not stochastic: {}", .0.join("; "))]
    NonStochastic(Vec<String>),
    #[error("invalid emission config: {0}")]
    InvalidConfig(String),
    #[error("malformed model: {0}")]
    Schema(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Pomdp,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EmissionConfig {
    pub format: Format,
    /// Significant digits for decimals in `.pomdp` output, 6 to 17.
    pub float_digits: usize,
    /// Emit zero entries of T and O as well.
    pub include_zero_rows: bool,
}

impl Default for EmissionConfig {
    fn default() -> Self {
        EmissionConfig { format: Format::Pomdp, float_digits: 12, include_zero_rows: false }
    }
}

impl EmissionConfig {
    pub fn validate(&self) -> Result<(), IoError> {
        if !(6..=17).contains(&self.float_digits) {
            return Err(IoError::InvalidConfig(format!("float digits {} not in 6..=17", self.float_digits)));
        }
        Ok(())
    }
}

pub fn emit(m: &PomdpModel, cfg: &EmissionConfig) -> Result<String, IoError> {
    match cfg.format {
        Format::Pomdp => emit_pomdp(m, cfg),
        Format::Json => emit_json(m, cfg),
    }
}

fn mangle(s: &str) -> String {
    let mut out = String::new();
    for ch in s.chars() {
        match ch {
            '(' | ',' | '=' => out.push('-'),
            ')' | ' ' => {}
            c if c.is_ascii_alphanumeric() || c == '_' || c == '-' => out.push(c),
            _ => out.push('_'),
        }
    }
    out
}

fn names(items: impl Iterator<Item = String>, prefix: &str) -> Vec<String> {
    let mut out: Vec<String> = items.collect();
    let distinct: BTreeSet<&String> = out.iter().collect();
    let valid = out.iter().all(|n| n.starts_with(|c: char| c.is_ascii_alphabetic()));
    if distinct.len() != out.len() || !valid {
        out = (0..out.len()).map(|i| format!("{prefix}{i}")).collect();
    }
    out
}

/// Identifiers used in `.pomdp` output: `TigerPosition(Tiger1)=Left` becomes
/// `TigerPosition-Tiger1-Left`; atoms of a state are joined by `__`.
pub fn pomdp_names(m: &PomdpModel) -> (Vec<String>, Vec<String>, Vec<String>) {
    let join = |atoms: &Vec<String>, empty: &str| {
        if atoms.is_empty() {
            empty.to_string()
        } else {
            atoms.iter().map(|a| mangle(a)).collect::<Vec<_>>().join("__")
        }
    };
    (
        names(m.states.iter().map(|s| join(s, "state")), "s"),
        names(m.actions.iter().map(|a| mangle(a)), "a"),
        names(m.observations.iter().map(|o| join(o, "none")), "o"),
    )
}

/// Cassandra-style `.pomdp` text. Refuses models whose rows do not sum to 1.
pub fn emit_pomdp(m: &PomdpModel, cfg: &EmissionConfig) -> Result<String, IoError> {
    cfg.validate()?;
    let errors = m.stochasticity_errors();
    if !errors.is_empty() {
        return Err(IoError::NonStochastic(errors));
    }
    let d = |p: &Prob| prob::format_decimal(p, cfg.float_digits);
    let (sn, an, on) = pomdp_names(m);
    let mut out = String::new();
    let _ = writeln!(out, "discount: {}", prob::format_f64(m.gamma, cfg.float_digits));
    out.push_str("values: reward\n");
    let _ = writeln!(out, "states: {}", sn.join(" "));
    let _ = writeln!(out, "actions: {}", an.join(" "));
    let _ = writeln!(out, "observations: {}", on.join(" "));
    let _ = writeln!(out, "start: {}", m.b0.iter().map(d).collect::<Vec<_>>().join(" "));
    out.push('\n');
    let (ns, na, no) = m.sizes();
    let by_action: BTreeMap<(usize, usize, usize), &Prob> = m.transitions.iter().map(|(&(s, a, t), p)| ((a, s, t), p)).collect();
    if cfg.include_zero_rows {
        for a in 0..na {
            for s in 0..ns {
                for t in 0..ns {
                    let _ = writeln!(out, "T: {} : {} : {} {}", an[a], sn[s], sn[t], d(&m.t(s, a, t)));
                }
            }
        }
    } else {
        for (&(a, s, t), p) in &by_action {
            let _ = writeln!(out, "T: {} : {} : {} {}", an[a], sn[s], sn[t], d(p));
        }
    }
    out.push('\n');
    if cfg.include_zero_rows {
        for a in 0..na {
            for t in 0..ns {
                for o in 0..no {
                    let _ = writeln!(out, "O: {} : {} : {} {}", an[a], sn[t], on[o], d(&m.o(a, t, o)));
                }
            }
        }
    } else {
        for (&(a, t, o), p) in &m.observation_probs {
            let _ = writeln!(out, "O: {} : {} : {} {}", an[a], sn[t], on[o], d(p));
        }
    }
    out.push('\n');
    let rewards: BTreeMap<(usize, usize, usize), &Prob> = m.rewards.iter().map(|(&(s, a, t), r)| ((a, s, t), r)).collect();
    for (&(a, s, t), r) in &rewards {
        let _ = writeln!(out, "R: {} : {} : {} : * {}", an[a], sn[s], sn[t], d(r));
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct Transition {
    from: usize,
    action: usize,
    to: usize,
    p: String,
}

#[derive(Serialize, Deserialize)]
struct Observation {
    action: usize,
    to: usize,
    observation: usize,
    p: String,
}

#[derive(Serialize, Deserialize)]
struct Reward {
    from: usize,
    action: usize,
    to: usize,
    r: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDump {
    gamma: f64,
    states: Vec<Vec<String>>,
    actions: Vec<String>,
    observations: Vec<Vec<String>>,
    b0: Vec<String>,
    #[serde(rename = "T")]
    t: Vec<Transition>,
    #[serde(rename = "O")]
    o: Vec<Observation>,
    #[serde(rename = "R")]
    r: Vec<Reward>,
}

/// Exact JSON dump; probabilities and rewards are `"num/den"` strings.
pub fn emit_json(m: &PomdpModel, cfg: &EmissionConfig) -> Result<String, IoError> {
    cfg.validate()?;
    let x = prob::to_exact_string;
    let dump = ModelDump {
        gamma: m.gamma,
        states: m.states.clone(),
        actions: m.actions.clone(),
        observations: m.observations.clone(),
        b0: m.b0.iter().map(x).collect(),
        t: m.transitions.iter().map(|(&(from, action, to), p)| Transition { from, action, to, p: x(p) }).collect(),
        o: m.observation_probs.iter().map(|(&(action, to, observation), p)| Observation { action, to, observation, p: x(p) }).collect(),
        r: m.rewards.iter().map(|(&(from, action, to), r)| Reward { from, action, to, r: x(r) }).collect(),
    };
    let mut s = serde_json::to_string_pretty(&dump)?;
    s.push('\n');
    Ok(s)
}

pub fn parse_json(text: &str) -> Result<PomdpModel, IoError> {
    let dump: ModelDump = serde_json::from_str(text)?;
    let (ns, na, no) = (dump.states.len(), dump.actions.len(), dump.observations.len());
    let num = |s: &str| prob::from_exact_string(s).ok_or_else(|| IoError::Schema(format!("`{s}` is not a number")));
    let check = |i: usize, n: usize, what: &str| {
        if i < n {
            Ok(())
        } else {
            Err(IoError::Schema(format!("{what} index {i} out of range")))
        }
    };
    if !(0.0..=1.0).contains(&dump.gamma) {
        return Err(IoError::Schema(format!("discount {} not in [0, 1]", dump.gamma)));
    }
    if dump.b0.len() != ns {
        return Err(IoError::Schema(format!("b0 has {} entries for {} states", dump.b0.len(), ns)));
    }
    let mut transitions = BTreeMap::new();
    for e in &dump.t {
        check(e.from, ns, "state")?;
        check(e.to, ns, "state")?;
        check(e.action, na, "action")?;
        transitions.insert((e.from, e.action, e.to), num(&e.p)?);
    }
    let mut observation_probs = BTreeMap::new();
    for e in &dump.o {
        check(e.to, ns, "state")?;
        check(e.action, na, "action")?;
        check(e.observation, no, "observation")?;
        observation_probs.insert((e.action, e.to, e.observation), num(&e.p)?);
    }
    let mut rewards = BTreeMap::new();
    for e in &dump.r {
        check(e.from, ns, "state")?;
        check(e.to, ns, "state")?;
        check(e.action, na, "action")?;
        rewards.insert((e.from, e.action, e.to), num(&e.r)?);
    }
    let b0 = dump.b0.iter().map(|s| num(s)).collect::<Result<Vec<_>, _>>()?;
    let m = PomdpModel {
        states: dump.states,
        actions: dump.actions,
        observations: dump.observations,
        transitions,
        observation_probs,
        rewards,
        gamma: dump.gamma,
        b0,
    };
    let errors = m.stochasticity_errors();
    if !errors.is_empty() {
        return Err(IoError::NonStochastic(errors));
    }
    Ok(m)
}
