use std::collections::HashSet;

use super::*;

/// Checks that need no inference: duplicate pf declarations, pf conditions
/// over non-rigid constants, and pf constants used without a declaration.
pub fn validate_assumptions_static(d: &ActionDescription) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut seen: Vec<(usize, &Formula)> = Vec::new();
    let top = Formula::top();
    let mut declared = HashSet::new();
    for law in &d.laws {
        let o = law.origin;
        let (c, cond) = match &law.kind {
            LawKind::PfDecl { constant, cond, .. } => (*constant, cond),
            LawKind::InitPfDecl { constant, .. } => (*constant, &top),
            _ => continue,
        };
        declared.insert(c);
        let name = &d.constants[c].name;
        if seen.iter().any(|(x, f)| *x == c && *f == cond) {
            out.push(Diagnostic::error(o.line, o.column, format!("pf constant `{name}` declared twice under the same condition")));
        }
        seen.push((c, cond));
        for l in cond.literals() {
            let k = d.constants[l.atom.constant].kind;
            if k != ConstKind::Rigid {
                out.push(Diagnostic::error(
                    o.line,
                    o.column,
                    format!("declaration of `{}` is conditioned on `{}`, which is not rigid", name, d.constants[l.atom.constant].name),
                ));
            }
        }
    }
    let mut reported = HashSet::new();
    for law in &d.laws {
        let fs: Vec<&Formula> = match &law.kind {
            LawKind::FluentDynamic { after, .. } | LawKind::ObservationDynamic { after, .. } => vec![after],
            LawKind::InitStatic { cond, .. } => vec![cond],
            _ => continue,
        };
        for f in fs {
            for l in f.literals() {
                let c = l.atom.constant;
                if d.constants[c].kind.is_probabilistic() && !declared.contains(&c) && reported.insert(c) {
                    out.push(Diagnostic::error(
                        law.origin.line,
                        law.origin.column,
                        format!("pf constant `{}` has no probability declaration", d.constants[c].name),
                    ));
                }
            }
        }
    }
    out
}
