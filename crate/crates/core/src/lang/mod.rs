//! Surface language: lexing, parsing, grounding, abbreviation expansion and
//! static checks.

mod expand;
mod lexer;
mod parser;
mod pretty;
mod validate;

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::prob::Prob;

pub use expand::expand_abbreviations;
pub use parser::parse;
pub use pretty::pretty_print;
pub use validate::validate_assumptions_static;

pub const BOOLEAN: &str = "Boolean";
pub const NA: &str = "NA";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl Diagnostic {
    pub fn error(line: usize, column: usize, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Error, line, column, message: message.into() }
    }

    pub fn warning(line: usize, column: usize, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Warning, line, column, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {}: {}", self.line, self.column, sev, self.message)
    }
}

/// A non-empty list of diagnostics, at least one of them an error.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct Diagnostics(pub Vec<Diagnostic>);

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sort {
    pub name: String,
    pub members: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstKind {
    RegularFluent,
    StaticallyDeterminedFluent,
    Rigid,
    Action,
    Pf,
    InitPf,
    Observation,
}

impl ConstKind {
    pub fn keyword(self) -> &'static str {
        match self {
            ConstKind::RegularFluent => "regular",
            ConstKind::StaticallyDeterminedFluent => "static",
            ConstKind::Rigid => "rigid",
            ConstKind::Action => "action",
            ConstKind::Pf => "pf",
            ConstKind::InitPf => "initpf",
            ConstKind::Observation => "observation",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        Some(match word {
            "regular" => ConstKind::RegularFluent,
            "static" => ConstKind::StaticallyDeterminedFluent,
            "rigid" => ConstKind::Rigid,
            "action" => ConstKind::Action,
            "pf" => ConstKind::Pf,
            "initpf" => ConstKind::InitPf,
            "observation" => ConstKind::Observation,
            _ => return None,
        })
    }

    pub fn is_fluent(self) -> bool {
        matches!(self, ConstKind::RegularFluent | ConstKind::StaticallyDeterminedFluent)
    }

    pub fn is_probabilistic(self) -> bool {
        matches!(self, ConstKind::Pf | ConstKind::InitPf)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstantDecl {
    pub name: String,
    /// Indices into [`ActionDescription::sorts`].
    pub arg_sorts: Vec<usize>,
    pub kind: ConstKind,
    pub value_sort: usize,
}

/// A declared constant instantiated with concrete arguments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundConstant {
    pub name: String,
    pub decl: usize,
    pub args: Vec<String>,
    pub kind: ConstKind,
    pub domain: Vec<String>,
}

impl GroundConstant {
    pub fn is_boolean(&self) -> bool {
        self.domain.len() == 2 && self.domain[0] == "false" && self.domain[1] == "true"
    }

    pub fn value_index(&self, value: &str) -> Option<usize> {
        self.domain.iter().position(|v| v == value)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub constant: usize,
    pub value: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub atom: Atom,
    pub positive: bool,
}

/// A conjunction of literals; `Conj(vec![])` is ⊤.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    False,
    Conj(Vec<Literal>),
}

impl Formula {
    pub fn top() -> Self {
        Formula::Conj(Vec::new())
    }

    pub fn is_top(&self) -> bool {
        matches!(self, Formula::Conj(l) if l.is_empty())
    }

    pub fn literals(&self) -> &[Literal] {
        match self {
            Formula::False => &[],
            Formula::Conj(l) => l,
        }
    }

    pub fn and(&self, lit: Literal) -> Formula {
        match self {
            Formula::False => Formula::False,
            Formula::Conj(l) => {
                let mut l = l.clone();
                if !l.contains(&lit) {
                    l.push(lit);
                }
                Formula::Conj(l)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Head {
    Formula(Formula),
    /// `default c=v`: the atom may hold without further justification.
    Default(Atom),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LawKind {
    Static { head: Head, cond: Formula },
    FluentDynamic { head: Head, cond: Formula, after: Formula },
    InitStatic { head: Formula, cond: Formula },
    PfDecl { constant: usize, row: Vec<(usize, Prob)>, cond: Formula },
    InitPfDecl { constant: usize, row: Vec<(usize, Prob)> },
    Utility { value: Prob, cond: Formula, after: Formula },
    ObservationDynamic { head: Formula, cond: Formula, after: Formula },
    /// `observed F if G`: a same-step law over observation constants only.
    ObservationStatic { head: Formula, cond: Formula },
    Inertial { constant: usize },
}

impl LawKind {
    pub fn has_condition_slot(&self) -> bool {
        !matches!(self, LawKind::InitPfDecl { .. } | LawKind::Inertial { .. })
    }
}

/// Where a ground law came from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Origin {
    pub statement: usize,
    pub tuple: usize,
    pub line: usize,
    pub column: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CausalLaw {
    pub kind: LawKind,
    /// Ground name of the abnormality constant of an `unless` clause.
    pub unless: Option<String>,
    pub origin: Origin,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionGroup {
    pub name: String,
    /// Ground action constants, by index.
    pub actions: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionDescription {
    pub sorts: Vec<Sort>,
    pub decls: Vec<ConstantDecl>,
    pub constants: Vec<GroundConstant>,
    pub laws: Vec<CausalLaw>,
    /// Declared groups; empty when the source declares none.
    pub groups: Vec<ActionGroup>,
    pub(crate) index: HashMap<String, usize>,
}

impl ActionDescription {
    pub fn constant(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn sort(&self, name: &str) -> Option<usize> {
        self.sorts.iter().position(|s| s.name == name)
    }

    pub fn atom(&self, name: &str, value: &str) -> Option<Atom> {
        let c = self.constant(name)?;
        let v = self.constants[c].value_index(value)?;
        Some(Atom { constant: c, value: v })
    }

    pub fn atom_text(&self, a: Atom) -> String {
        let c = &self.constants[a.constant];
        format!("{}={}", c.name, c.domain[a.value])
    }

    pub fn constants_of(&self, kind: ConstKind) -> impl Iterator<Item = usize> + '_ {
        self.constants.iter().enumerate().filter(move |(_, c)| c.kind == kind).map(|(i, _)| i)
    }

    pub fn action_constants(&self) -> Vec<usize> {
        self.constants_of(ConstKind::Action).collect()
    }

    /// Declared groups, or one group per ground action when none are declared.
    pub fn effective_groups(&self) -> Vec<ActionGroup> {
        if !self.groups.is_empty() {
            return self.groups.clone();
        }
        self.action_constants()
            .into_iter()
            .map(|a| ActionGroup { name: self.constants[a].name.clone(), actions: vec![a] })
            .collect()
    }

    pub(crate) fn add_constant(&mut self, gc: GroundConstant) -> usize {
        let i = self.constants.len();
        self.index.insert(gc.name.clone(), i);
        self.constants.push(gc);
        i
    }

    /// Equality ignoring law origins.
    pub fn same_structure(&self, other: &ActionDescription) -> bool {
        self.sorts == other.sorts
            && self.decls == other.decls
            && self.constants == other.constants
            && self.groups == other.groups
            && self.laws.len() == other.laws.len()
            && self.laws.iter().zip(&other.laws).all(|(a, b)| a.kind == b.kind && a.unless == b.unless)
    }
}

pub fn ground_name(name: &str, args: &[String]) -> String {
    if args.is_empty() {
        name.to_string()
    } else {
        format!("{}({})", name, args.join(","))
    }
}

/// Parse, expand abbreviations and run the static checks; any error-level
/// diagnostic fails.
pub fn load(source: &str) -> Result<ActionDescription, Diagnostics> {
    let d = parse(source)?;
    let d = expand_abbreviations(&d)?;
    let diags = validate_assumptions_static(&d);
    if diags.iter().any(|x| x.severity == Severity::Error) {
        return Err(Diagnostics(diags));
    }
    Ok(d)
}

#[cfg(test)]
mod tests;
