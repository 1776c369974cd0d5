use std::fmt::Write;

use super::*;
use crate::prob;

/// Render a (ground) description as source text that parses back to the
/// same structure.
pub fn pretty_print(d: &ActionDescription) -> String {
    let mut s = String::new();
    for so in d.sorts.iter().skip(1) {
        let _ = writeln!(s, "sort {} = {{{}}}.", so.name, so.members.join(", "));
    }
    for de in &d.decls {
        let _ = write!(s, "{} {}", de.kind.keyword(), de.name);
        if !de.arg_sorts.is_empty() {
            let args: Vec<&str> = de.arg_sorts.iter().map(|&i| d.sorts[i].name.as_str()).collect();
            let _ = write!(s, "({})", args.join(", "));
        }
        if de.value_sort != 0 {
            let _ = write!(s, " : {}", d.sorts[de.value_sort].name);
        }
        s.push_str(".\n");
    }
    for law in &d.laws {
        s.push_str(&law_text(d, law));
        s.push('\n');
    }
    for g in &d.groups {
        let names: Vec<&str> = g.actions.iter().map(|&a| d.constants[a].name.as_str()).collect();
        let _ = writeln!(s, "group {} {{ {} }}.", g.name, names.join(", "));
    }
    s
}

pub(crate) fn law_text(d: &ActionDescription, law: &CausalLaw) -> String {
    let f = |x: &Formula| formula_text(d, x);
    let cond = |x: &Formula| if x.is_top() { String::new() } else { format!(" if {}", f(x)) };
    let mut s = match &law.kind {
        LawKind::Static { head: Head::Formula(h), cond: c } => format!("caused {}{}", f(h), cond(c)),
        LawKind::Static { head: Head::Default(a), cond: c } => format!("default {}{}", atom_text(d, *a), cond(c)),
        LawKind::FluentDynamic { head: Head::Formula(h), cond: c, after } => {
            format!("caused {}{} after {}", f(h), cond(c), f(after))
        }
        LawKind::FluentDynamic { head: Head::Default(a), cond: c, after } => {
            format!("default {}{} after {}", atom_text(d, *a), cond(c), f(after))
        }
        LawKind::InitStatic { head, cond: c } => format!("initially {}{}", f(head), cond(c)),
        LawKind::PfDecl { constant, row, cond: c } => format!("caused {} = {}{}", d.constants[*constant].name, row_text(d, *constant, row), cond(c)),
        LawKind::InitPfDecl { constant, row } => format!("caused {} = {}", d.constants[*constant].name, row_text(d, *constant, row)),
        LawKind::Utility { value, cond: c, after } => format!("reward {}{} after {}", prob::to_exact_string(value), cond(c), f(after)),
        LawKind::ObservationDynamic { head, cond: c, after } => format!("observed {}{} after {}", f(head), cond(c), f(after)),
        LawKind::ObservationStatic { head, cond: c } => format!("observed {}{}", f(head), cond(c)),
        LawKind::Inertial { constant } => format!("inertial {}", d.constants[*constant].name),
    };
    if let Some(ab) = &law.unless {
        let _ = write!(s, " unless {ab}");
    }
    s.push('.');
    s
}

fn row_text(d: &ActionDescription, c: usize, row: &[(usize, Prob)]) -> String {
    let cells: Vec<String> = row.iter().map(|(v, p)| format!("{}: {}", d.constants[c].domain[*v], prob::to_exact_string(p))).collect();
    format!("{{{}}}", cells.join(", "))
}

fn atom_text(d: &ActionDescription, a: Atom) -> String {
    let c = &d.constants[a.constant];
    format!("{}={}", c.name, c.domain[a.value])
}

pub(crate) fn literal_text(d: &ActionDescription, l: Literal) -> String {
    let c = &d.constants[l.atom.constant];
    if l.positive && c.is_boolean() {
        return if l.atom.value == 1 { c.name.clone() } else { format!("~{}", c.name) };
    }
    let op = if l.positive { "=" } else { "!=" };
    format!("{}{}{}", c.name, op, c.domain[l.atom.value])
}

pub(crate) fn formula_text(d: &ActionDescription, f: &Formula) -> String {
    match f {
        Formula::False => "false".into(),
        Formula::Conj(ls) if ls.is_empty() => "true".into(),
        Formula::Conj(ls) => ls.iter().map(|l| literal_text(d, *l)).collect::<Vec<_>>().join(" & "),
    }
}
