//! Timed ground programs `Tr(D, m) = D_init ∪ D_m`.

use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Write};
use std::sync::Arc;

use crate::lang::{ActionDescription, Atom, ConstKind, Formula, Head, LawKind, Literal};
use crate::prob::{self, Prob};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TranslateError {
    #[error("rigid constant `{0}` is referenced but no law fixes its value")]
    UnresolvedRigid(String),
    #[error("conflicting values for rigid constant `{constant}`: {detail}")]
    RigidConflict { constant: String, detail: String },
    #[error("law about rigid constant `{rigid}` depends on non-rigid `{other}`")]
    RigidDependsOnFluent { rigid: String, other: String },
    #[error("pf constant `{0}` is referenced but has no active declaration")]
    MissingPfDeclaration(String),
    #[error("pf constant `{0}` has more than one active declaration")]
    AmbiguousPfDeclaration(String),
    #[error("rule `{0}` needs actions from two different groups")]
    GroupSpanning(String),
    #[error("no action group named `{0}`")]
    UnknownGroup(String),
    #[error("cannot read atom `{0}`")]
    UnknownAtom(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimedConstant {
    /// Ground name without the step, e.g. `TigerPosition(Tiger1)`.
    pub name: String,
    pub step: u32,
    pub kind: ConstKind,
    pub domain: Arc<Vec<String>>,
}

impl TimedConstant {
    pub fn is_boolean(&self) -> bool {
        self.domain.len() == 2 && self.domain[0] == "false" && self.domain[1] == "true"
    }
}

/// `i:c=v`, by index into [`GroundProgram::constants`] and the constant's domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TimedAtom {
    pub constant: u32,
    pub value: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TimedLiteral {
    pub atom: TimedAtom,
    pub positive: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Weight {
    Hard,
    /// A probability fact `p : i:c=v`.
    Pf(Prob),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleHead {
    Atom(TimedAtom),
    Choice(TimedAtom),
    Utility { value: Prob, step: u32, id: usize },
    Bottom,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundRule {
    pub weight: Weight,
    pub head: RuleHead,
    pub body: Vec<TimedLiteral>,
}

impl GroundRule {
    pub fn hard(head: RuleHead, body: Vec<TimedLiteral>) -> Self {
        GroundRule { weight: Weight::Hard, head, body }
    }

    pub fn pf_fact(atom: TimedAtom, p: Prob) -> Self {
        GroundRule { weight: Weight::Pf(p), head: RuleHead::Atom(atom), body: Vec::new() }
    }

    pub fn is_pf_fact(&self) -> bool {
        matches!(self.weight, Weight::Pf(_))
    }
}

/// `min <= #count{atoms} <= max`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cardinality {
    pub atoms: Vec<TimedAtom>,
    pub min: usize,
    pub max: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgramGroup {
    pub name: String,
    /// Ground action names.
    pub actions: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct GroundProgram {
    pub horizon: u32,
    pub constants: Vec<TimedConstant>,
    pub rules: Vec<GroundRule>,
    pub cardinality: Vec<Cardinality>,
    pub groups: Vec<ProgramGroup>,
    index: HashMap<(String, u32), u32>,
}

impl GroundProgram {
    pub fn new(horizon: u32) -> Self {
        GroundProgram { horizon, ..Default::default() }
    }

    pub fn add_constant(&mut self, name: &str, step: u32, kind: ConstKind, domain: &[&str]) -> u32 {
        let domain = Arc::new(domain.iter().map(|s| s.to_string()).collect());
        self.push_constant(TimedConstant { name: name.to_string(), step, kind, domain })
    }

    fn push_constant(&mut self, c: TimedConstant) -> u32 {
        let i = self.constants.len() as u32;
        self.index.insert((c.name.clone(), c.step), i);
        self.constants.push(c);
        i
    }

    pub fn lookup(&self, name: &str, step: u32) -> Option<u32> {
        self.index.get(&(name.to_string(), step)).copied()
    }

    pub fn atom_of(&self, name: &str, step: u32, value: &str) -> Option<TimedAtom> {
        let c = self.lookup(name, step)?;
        let v = self.constants[c as usize].domain.iter().position(|x| x == value)?;
        Some(TimedAtom { constant: c, value: v as u32 })
    }

    /// Reads `1:TigerPosition(Tiger1)=Left`, `0:Listen` or `1:~Terminated`.
    pub fn atom(&self, text: &str) -> Result<TimedAtom, TranslateError> {
        let err = || TranslateError::UnknownAtom(text.to_string());
        let (step, rest) = text.trim().split_once(':').ok_or_else(err)?;
        let step: u32 = step.trim().parse().map_err(|_| err())?;
        let rest = rest.trim();
        let (name, value) = if let Some(n) = rest.strip_prefix('~') {
            (n, "false")
        } else if let Some((n, v)) = rest.split_once('=') {
            (n, v)
        } else {
            (rest, "true")
        };
        self.atom_of(name.trim(), step, value.trim()).ok_or_else(err)
    }

    pub fn atoms(&self, texts: &[&str]) -> Result<Vec<TimedAtom>, TranslateError> {
        texts.iter().map(|t| self.atom(t)).collect()
    }

    pub fn atom_text(&self, a: TimedAtom) -> String {
        let c = &self.constants[a.constant as usize];
        format!("{}:{}={}", c.step, c.name, c.domain[a.value as usize])
    }

    pub fn constants_of(&self, kind: ConstKind, step: u32) -> Vec<u32> {
        (0..self.constants.len() as u32)
            .filter(|&i| {
                let c = &self.constants[i as usize];
                c.kind == kind && c.step == step
            })
            .collect()
    }

    pub fn fluents_at(&self, step: u32) -> Vec<u32> {
        (0..self.constants.len() as u32)
            .filter(|&i| {
                let c = &self.constants[i as usize];
                c.kind.is_fluent() && c.step == step
            })
            .collect()
    }

    /// Number of atoms `i:c=v` of the given kinds.
    pub fn signature_size(&self, kinds: &[ConstKind]) -> usize {
        self.constants.iter().filter(|c| kinds.contains(&c.kind)).map(|c| c.domain.len()).sum()
    }

    /// Atoms governed directly by a choice rule with empty body or by a pf fact.
    pub fn exogenous_atoms(&self) -> Vec<TimedAtom> {
        let mut out = BTreeSet::new();
        for r in &self.rules {
            match &r.head {
                RuleHead::Choice(a) if r.body.is_empty() => {
                    out.insert(*a);
                }
                RuleHead::Atom(a) if r.is_pf_fact() => {
                    out.insert(*a);
                }
                _ => {}
            }
        }
        out.into_iter().collect()
    }

    /// Uniqueness and existence constraints for every timed constant. The
    /// engine enforces them by construction; they are listed for the dump.
    pub fn uec_constraints(&self) -> Vec<GroundRule> {
        let mut out = Vec::new();
        for (ci, c) in self.constants.iter().enumerate() {
            let a = |v: usize| TimedAtom { constant: ci as u32, value: v as u32 };
            for v in 0..c.domain.len() {
                for w in v + 1..c.domain.len() {
                    out.push(GroundRule::hard(
                        RuleHead::Bottom,
                        vec![TimedLiteral { atom: a(v), positive: true }, TimedLiteral { atom: a(w), positive: true }],
                    ));
                }
            }
            out.push(GroundRule::hard(
                RuleHead::Bottom,
                (0..c.domain.len()).map(|v| TimedLiteral { atom: a(v), positive: false }).collect(),
            ));
        }
        out
    }

    pub fn rule_text(&self, r: &GroundRule) -> String {
        let mut s = String::new();
        if let Weight::Pf(p) = &r.weight {
            let _ = write!(s, "{} : ", prob::to_exact_string(p));
        }
        match &r.head {
            RuleHead::Atom(a) => s.push_str(&self.atom_text(*a)),
            RuleHead::Choice(a) => {
                let _ = write!(s, "{{{}}}", self.atom_text(*a));
            }
            RuleHead::Utility { value, step, id } => {
                let _ = write!(s, "utility({}, {}, {})", prob::to_exact_string(value), step, id);
            }
            RuleHead::Bottom => {}
        }
        if !r.body.is_empty() {
            s.push_str(if matches!(r.head, RuleHead::Bottom) { ":- " } else { " :- " });
            let lits: Vec<String> = r
                .body
                .iter()
                .map(|l| if l.positive { self.atom_text(l.atom) } else { format!("not {}", self.atom_text(l.atom)) })
                .collect();
            s.push_str(&lits.join(", "));
        }
        s.push('.');
        s
    }

    pub fn is_action(&self, c: u32) -> bool {
        self.constants[c as usize].kind == ConstKind::Action
    }

    pub fn group_of_action(&self, name: &str) -> Option<usize> {
        self.groups.iter().position(|g| g.actions.iter().any(|a| a == name))
    }
}

impl fmt::Display for GroundProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "% horizon {}", self.horizon)?;
        for r in self.uec_constraints() {
            writeln!(f, "{}", self.rule_text(&r))?;
        }
        for r in &self.rules {
            writeln!(f, "{}", self.rule_text(r))?;
        }
        for c in &self.cardinality {
            let atoms: Vec<String> = c.atoms.iter().map(|a| self.atom_text(*a)).collect();
            writeln!(f, "{} <= #count{{{}}} <= {}.", c.min, atoms.join("; "), c.max)?;
        }
        Ok(())
    }
}

/// What to include in a translation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TranslateOptions {
    /// Include `D_init` (initial static laws and initpf facts).
    pub include_init: bool,
}

/// `Tr(D, m) = D_init ∪ D_m`.
pub fn translate(d: &ActionDescription, m: u32) -> Result<GroundProgram, TranslateError> {
    translate_with(d, m, TranslateOptions { include_init: true })
}

/// `D_m` alone.
pub fn translate_core(d: &ActionDescription, m: u32) -> Result<GroundProgram, TranslateError> {
    translate_with(d, m, TranslateOptions { include_init: false })
}

pub fn translate_with(d: &ActionDescription, m: u32, opts: TranslateOptions) -> Result<GroundProgram, TranslateError> {
    let rigid = resolve_rigids(d)?;
    let laws = simplify_laws(d, &rigid)?;

    // Active pf declarations after rigid resolution.
    let mut active: HashMap<usize, Vec<(usize, Prob)>> = HashMap::new();
    for law in &laws {
        let (c, row) = match &law.kind {
            LawKind::PfDecl { constant, row, .. } => (*constant, row),
            LawKind::InitPfDecl { constant, row } if opts.include_init => (*constant, row),
            _ => continue,
        };
        if active.insert(c, row.clone()).is_some() {
            return Err(TranslateError::AmbiguousPfDeclaration(d.constants[c].name.clone()));
        }
    }
    for law in &laws {
        for f in law_formulas(&law.kind) {
            for l in f.literals() {
                let c = l.atom.constant;
                let k = d.constants[c].kind;
                let needed = k == ConstKind::Pf || (k == ConstKind::InitPf && opts.include_init);
                if needed && !active.contains_key(&c) {
                    return Err(TranslateError::MissingPfDeclaration(d.constants[c].name.clone()));
                }
            }
        }
    }

    let mut p = GroundProgram::new(m);
    let mut timed: HashMap<(usize, u32), u32> = HashMap::new();
    let domains: Vec<Arc<Vec<String>>> = d.constants.iter().map(|c| Arc::new(c.domain.clone())).collect();
    for step in 0..=m {
        for (ci, c) in d.constants.iter().enumerate() {
            let present = match c.kind {
                ConstKind::RegularFluent | ConstKind::StaticallyDeterminedFluent | ConstKind::Observation => true,
                ConstKind::Action => step < m,
                ConstKind::Pf => step < m && active.contains_key(&ci),
                ConstKind::InitPf => step == 0 && opts.include_init && active.contains_key(&ci),
                ConstKind::Rigid => false,
            };
            if present {
                let t = p.push_constant(TimedConstant { name: c.name.clone(), step, kind: c.kind, domain: domains[ci].clone() });
                timed.insert((ci, step), t);
            }
        }
    }
    let at = |a: Atom, step: u32| TimedAtom { constant: timed[&(a.constant, step)], value: a.value as u32 };
    let lits = |f: &Formula, step: u32| -> Vec<TimedLiteral> {
        f.literals().iter().map(|l| TimedLiteral { atom: at(l.atom, step), positive: l.positive }).collect()
    };

    if opts.include_init {
        for law in &laws {
            match &law.kind {
                LawKind::InitStatic { head, cond } => {
                    let g = lits(cond, 0);
                    match head {
                        Formula::False => p.rules.push(GroundRule::hard(RuleHead::Bottom, g)),
                        Formula::Conj(hs) => {
                            for h in hs {
                                let mut body = vec![TimedLiteral { atom: at(h.atom, 0), positive: !h.positive }];
                                body.extend(g.iter().copied());
                                p.rules.push(GroundRule::hard(RuleHead::Bottom, body));
                            }
                        }
                    }
                }
                LawKind::InitPfDecl { constant, row } => {
                    for (v, pr) in row {
                        p.rules.push(GroundRule::pf_fact(at(Atom { constant: *constant, value: *v }, 0), pr.clone()));
                    }
                }
                _ => {}
            }
        }
    }

    for (ci, c) in d.constants.iter().enumerate() {
        match c.kind {
            ConstKind::RegularFluent => {
                for v in 0..c.domain.len() {
                    p.rules.push(GroundRule::hard(RuleHead::Choice(at(Atom { constant: ci, value: v }, 0)), vec![]));
                }
            }
            ConstKind::Observation => {
                for v in 0..c.domain.len() {
                    p.rules.push(GroundRule::hard(RuleHead::Choice(at(Atom { constant: ci, value: v }, 0)), vec![]));
                }
                let na = c.value_index(crate::lang::NA).expect("observation domains contain NA");
                for i in 1..=m {
                    p.rules.push(GroundRule::hard(RuleHead::Choice(at(Atom { constant: ci, value: na }, i)), vec![]));
                }
            }
            _ => {}
        }
    }
    for i in 0..m {
        for (ci, c) in d.constants.iter().enumerate() {
            if c.kind == ConstKind::Action {
                for v in [1, 0] {
                    p.rules.push(GroundRule::hard(RuleHead::Choice(at(Atom { constant: ci, value: v }, i)), vec![]));
                }
            }
        }
    }

    let mut utility_id = 0;
    for law in &laws {
        let heads = |h: &Head, step: u32, body: Vec<TimedLiteral>, out: &mut Vec<GroundRule>| match h {
            Head::Default(a) => out.push(GroundRule::hard(RuleHead::Choice(at(*a, step)), body)),
            Head::Formula(f) => formula_head(f, step, body, &at, out),
        };
        match &law.kind {
            LawKind::Static { head, cond } => {
                for i in 0..=m {
                    heads(head, i, lits(cond, i), &mut p.rules);
                }
            }
            LawKind::ObservationStatic { head, cond } => {
                for i in 0..=m {
                    formula_head(head, i, lits(cond, i), &at, &mut p.rules);
                }
            }
            LawKind::FluentDynamic { head, cond, after } => {
                for i in 0..m {
                    let mut body = lits(cond, i + 1);
                    body.extend(lits(after, i));
                    heads(head, i + 1, body, &mut p.rules);
                }
            }
            LawKind::ObservationDynamic { head, cond, after } => {
                for i in 0..m {
                    let mut body = lits(cond, i + 1);
                    body.extend(lits(after, i));
                    formula_head(head, i + 1, body, &at, &mut p.rules);
                }
            }
            LawKind::Utility { value, cond, after } => {
                for i in 0..m {
                    let mut body = lits(cond, i + 1);
                    body.extend(lits(after, i));
                    p.rules.push(GroundRule::hard(RuleHead::Utility { value: value.clone(), step: i + 1, id: utility_id }, body));
                }
                utility_id += 1;
            }
            LawKind::PfDecl { constant, row, .. } => {
                for i in 0..m {
                    for (v, pr) in row {
                        p.rules.push(GroundRule::pf_fact(at(Atom { constant: *constant, value: *v }, i), pr.clone()));
                    }
                }
            }
            LawKind::InitStatic { .. } | LawKind::InitPfDecl { .. } | LawKind::Inertial { .. } => {}
        }
    }

    let actions = d.action_constants();
    if !actions.is_empty() {
        for i in 0..m {
            p.cardinality.push(Cardinality {
                atoms: actions.iter().map(|&a| at(Atom { constant: a, value: 1 }, i)).collect(),
                min: 0,
                max: 1,
            });
        }
    }
    p.groups = d
        .effective_groups()
        .into_iter()
        .map(|g| ProgramGroup { name: g.name, actions: g.actions.iter().map(|&a| d.constants[a].name.clone()).collect() })
        .collect();
    Ok(p)
}

fn formula_head(
    f: &Formula,
    step: u32,
    body: Vec<TimedLiteral>,
    at: &dyn Fn(Atom, u32) -> TimedAtom,
    out: &mut Vec<GroundRule>,
) {
    match f {
        Formula::False => out.push(GroundRule::hard(RuleHead::Bottom, body)),
        Formula::Conj(hs) => {
            for h in hs {
                if h.positive {
                    out.push(GroundRule::hard(RuleHead::Atom(at(h.atom, step)), body.clone()));
                } else {
                    let mut b = vec![TimedLiteral { atom: at(h.atom, step), positive: true }];
                    b.extend(body.iter().copied());
                    out.push(GroundRule::hard(RuleHead::Bottom, b));
                }
            }
        }
    }
}

fn law_formulas(k: &LawKind) -> Vec<&Formula> {
    match k {
        LawKind::Static { head: Head::Formula(h), cond } => vec![h, cond],
        LawKind::Static { cond, .. } => vec![cond],
        LawKind::FluentDynamic { head: Head::Formula(h), cond, after } => vec![h, cond, after],
        LawKind::FluentDynamic { cond, after, .. } => vec![cond, after],
        LawKind::InitStatic { head, cond } => vec![head, cond],
        LawKind::PfDecl { cond, .. } => vec![cond],
        LawKind::Utility { cond, after, .. } => vec![cond, after],
        LawKind::ObservationDynamic { head, cond, after } => vec![head, cond, after],
        LawKind::ObservationStatic { head, cond } => vec![head, cond],
        LawKind::InitPfDecl { .. } | LawKind::Inertial { .. } => vec![],
    }
}

fn is_rigid_law(d: &ActionDescription, k: &LawKind) -> bool {
    match k {
        LawKind::Static { head: Head::Default(a), .. } => d.constants[a.constant].kind == ConstKind::Rigid,
        LawKind::Static { head: Head::Formula(Formula::Conj(hs)), .. } => {
            hs.iter().any(|l| d.constants[l.atom.constant].kind == ConstKind::Rigid)
        }
        LawKind::Static { head: Head::Formula(Formula::False), cond } => {
            !cond.is_top() && cond.literals().iter().all(|l| d.constants[l.atom.constant].kind == ConstKind::Rigid)
        }
        _ => false,
    }
}

fn lit_value(values: &[Option<usize>], l: &Literal) -> Option<bool> {
    values[l.atom.constant].map(|v| (v == l.atom.value) == l.positive)
}

fn formula_value(values: &[Option<usize>], f: &Formula) -> Option<bool> {
    match f {
        Formula::False => Some(false),
        Formula::Conj(ls) => {
            let mut all = true;
            for l in ls {
                match lit_value(values, l) {
                    Some(false) => return Some(false),
                    None => all = false,
                    Some(true) => {}
                }
            }
            if all {
                Some(true)
            } else {
                None
            }
        }
    }
}

/// Values of rigid constants: facts first, defaults as a last resort.
pub fn resolve_rigids(d: &ActionDescription) -> Result<Vec<Option<usize>>, TranslateError> {
    let mut values: Vec<Option<usize>> = vec![None; d.constants.len()];
    let rigid_laws: Vec<&LawKind> = d.laws.iter().map(|l| &l.kind).filter(|k| is_rigid_law(d, k)).collect();
    for k in &rigid_laws {
        for f in law_formulas(k) {
            for l in f.literals() {
                let c = &d.constants[l.atom.constant];
                if c.kind != ConstKind::Rigid {
                    let rigid = match k {
                        LawKind::Static { head: Head::Default(a), .. } => d.constants[a.constant].name.clone(),
                        _ => law_formulas(k)[0]
                            .literals()
                            .iter()
                            .find(|x| d.constants[x.atom.constant].kind == ConstKind::Rigid)
                            .map(|x| d.constants[x.atom.constant].name.clone())
                            .unwrap_or_default(),
                    };
                    return Err(TranslateError::RigidDependsOnFluent { rigid, other: c.name.clone() });
                }
            }
        }
    }
    let conflict = |c: usize, detail: &str| TranslateError::RigidConflict { constant: d.constants[c].name.clone(), detail: detail.into() };
    loop {
        let mut changed = false;
        for k in &rigid_laws {
            let LawKind::Static { head: Head::Formula(h), cond } = k else { continue };
            if formula_value(&values, cond) != Some(true) {
                continue;
            }
            match h {
                Formula::False => {
                    let c = cond.literals()[0].atom.constant;
                    return Err(conflict(c, "a constraint over rigid constants is violated"));
                }
                Formula::Conj(hs) => {
                    for l in hs {
                        let c = l.atom.constant;
                        if l.positive {
                            match values[c] {
                                None => {
                                    values[c] = Some(l.atom.value);
                                    changed = true;
                                }
                                Some(v) if v != l.atom.value => return Err(conflict(c, "two laws force different values")),
                                _ => {}
                            }
                        } else if values[c] == Some(l.atom.value) {
                            return Err(conflict(c, "a law excludes the value it was given"));
                        }
                    }
                }
            }
        }
        if changed {
            continue;
        }
        for k in &rigid_laws {
            let LawKind::Static { head: Head::Default(a), cond } = k else { continue };
            if values[a.constant].is_none() && formula_value(&values, cond) == Some(true) {
                values[a.constant] = Some(a.value);
                changed = true;
                break;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(values)
}

fn simplify(d: &ActionDescription, rigid: &[Option<usize>], f: &Formula) -> Result<Option<Formula>, TranslateError> {
    match f {
        Formula::False => Ok(None),
        Formula::Conj(ls) => {
            let mut out = Vec::new();
            for l in ls {
                if d.constants[l.atom.constant].kind != ConstKind::Rigid {
                    out.push(*l);
                    continue;
                }
                match lit_value(rigid, l) {
                    None => return Err(TranslateError::UnresolvedRigid(d.constants[l.atom.constant].name.clone())),
                    Some(false) => return Ok(None),
                    Some(true) => {}
                }
            }
            Ok(Some(Formula::Conj(out)))
        }
    }
}

/// Drops rigid laws and laws whose rigid conditions are false; erases true
/// rigid literals elsewhere.
fn simplify_laws(d: &ActionDescription, rigid: &[Option<usize>]) -> Result<Vec<crate::lang::CausalLaw>, TranslateError> {
    let mut out = Vec::new();
    for law in &d.laws {
        if is_rigid_law(d, &law.kind) {
            continue;
        }
        let s = |f: &Formula| simplify(d, rigid, f);
        let kind = match &law.kind {
            LawKind::Static { head, cond } => {
                let Some(cond) = s(cond)? else { continue };
                LawKind::Static { head: head.clone(), cond }
            }
            LawKind::FluentDynamic { head, cond, after } => {
                let (Some(cond), Some(after)) = (s(cond)?, s(after)?) else { continue };
                LawKind::FluentDynamic { head: head.clone(), cond, after }
            }
            LawKind::InitStatic { head, cond } => {
                let Some(cond) = s(cond)? else { continue };
                LawKind::InitStatic { head: head.clone(), cond }
            }
            LawKind::PfDecl { constant, row, cond } => {
                let Some(cond) = s(cond)? else { continue };
                if !cond.is_top() {
                    // Non-rigid conditions are reported by the static checks.
                    continue;
                }
                LawKind::PfDecl { constant: *constant, row: row.clone(), cond }
            }
            LawKind::Utility { value, cond, after } => {
                let (Some(cond), Some(after)) = (s(cond)?, s(after)?) else { continue };
                LawKind::Utility { value: value.clone(), cond, after }
            }
            LawKind::ObservationDynamic { head, cond, after } => {
                let (Some(cond), Some(after)) = (s(cond)?, s(after)?) else { continue };
                LawKind::ObservationDynamic { head: head.clone(), cond, after }
            }
            LawKind::ObservationStatic { head, cond } => {
                let Some(cond) = s(cond)? else { continue };
                LawKind::ObservationStatic { head: head.clone(), cond }
            }
            k @ (LawKind::InitPfDecl { .. } | LawKind::Inertial { .. }) => k.clone(),
        };
        out.push(crate::lang::CausalLaw { kind, unless: None, origin: law.origin });
    }
    Ok(out)
}

/// `Π(m) ∪ Π_g(m) ∪ C_g(m)`: the action-free core, the laws of group `g` and
/// an exactly-one choice over the group's actions. `None` yields the core
/// alone, whose models are the no-action transitions.
pub fn restrict_to_group(p: &GroundProgram, group: Option<&str>) -> Result<GroundProgram, TranslateError> {
    let gi = match group {
        Some(name) => Some(p.groups.iter().position(|g| g.name == name).ok_or_else(|| TranslateError::UnknownGroup(name.into()))?),
        None => None,
    };
    let group_of = |c: u32| p.group_of_action(&p.constants[c as usize].name);
    // A literal needs its action true when it reads `a=true` or `not a=false`.
    let needs_true = |l: &TimedLiteral| (l.atom.value == 1) == l.positive;
    for r in &p.rules {
        let groups: BTreeSet<Option<usize>> =
            r.body.iter().filter(|l| p.is_action(l.atom.constant) && needs_true(l)).map(|l| group_of(l.atom.constant)).collect();
        if groups.len() > 1 {
            return Err(TranslateError::GroupSpanning(p.rule_text(r)));
        }
    }
    let in_group = |c: u32| gi.is_some() && group_of(c) == gi;

    let mut kept: Vec<GroundRule> = Vec::new();
    'rules: for r in &p.rules {
        if let RuleHead::Choice(a) | RuleHead::Atom(a) = &r.head {
            if p.is_action(a.constant) && !in_group(a.constant) {
                continue;
            }
        }
        let mut body = Vec::new();
        for l in &r.body {
            if p.is_action(l.atom.constant) && !in_group(l.atom.constant) {
                if needs_true(l) {
                    continue 'rules;
                }
                continue;
            }
            body.push(*l);
        }
        kept.push(GroundRule { weight: r.weight.clone(), head: r.head.clone(), body });
    }
    let referenced: BTreeSet<u32> = kept
        .iter()
        .flat_map(|r| r.body.iter().map(|l| l.atom.constant))
        .filter(|&c| p.constants[c as usize].kind.is_probabilistic())
        .collect();
    let keep_const = |c: u32| {
        let k = p.constants[c as usize].kind;
        if k == ConstKind::Action {
            in_group(c)
        } else if k.is_probabilistic() {
            referenced.contains(&c)
        } else {
            true
        }
    };
    let mut out = GroundProgram::new(p.horizon);
    let mut remap: HashMap<u32, u32> = HashMap::new();
    for (i, c) in p.constants.iter().enumerate() {
        if keep_const(i as u32) {
            remap.insert(i as u32, out.push_constant(c.clone()));
        }
    }
    let ra = |a: TimedAtom| TimedAtom { constant: remap[&a.constant], value: a.value };
    for r in kept {
        let head = match r.head {
            RuleHead::Atom(a) => {
                if !keep_const(a.constant) {
                    continue;
                }
                RuleHead::Atom(ra(a))
            }
            RuleHead::Choice(a) => RuleHead::Choice(ra(a)),
            h => h,
        };
        let body = r.body.iter().map(|l| TimedLiteral { atom: ra(l.atom), positive: l.positive }).collect();
        out.rules.push(GroundRule { weight: r.weight, head, body });
    }
    if let Some(g) = gi {
        for i in 0..p.horizon {
            let atoms: Vec<TimedAtom> = p.groups[g]
                .actions
                .iter()
                .filter_map(|a| p.lookup(a, i))
                .map(|c| TimedAtom { constant: remap[&c], value: 1 })
                .collect();
            if !atoms.is_empty() {
                out.cardinality.push(Cardinality { atoms, min: 1, max: 1 });
            }
        }
    }
    out.groups = match gi {
        Some(g) => vec![p.groups[g].clone()],
        None => Vec::new(),
    };
    Ok(out)
}

#[cfg(test)]
mod tests;
