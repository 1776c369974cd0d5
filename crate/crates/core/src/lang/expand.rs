use super::*;

/// Rewrite `inertial` and `unless` into core laws. Idempotent.
pub fn expand_abbreviations(d: &ActionDescription) -> Result<ActionDescription, Diagnostics> {
    let mut out = d.clone();
    out.laws.clear();
    let mut defaults: Vec<CausalLaw> = Vec::new();
    let mut errors = Vec::new();
    for law in &d.laws {
        if let LawKind::Inertial { constant } = law.kind {
            for v in 0..d.constants[constant].domain.len() {
                let atom = Atom { constant, value: v };
                out.laws.push(CausalLaw {
                    kind: LawKind::FluentDynamic {
                        head: Head::Default(atom),
                        cond: Formula::top(),
                        after: Formula::Conj(vec![Literal { atom, positive: true }]),
                    },
                    unless: None,
                    origin: law.origin,
                });
            }
            continue;
        }
        let Some(ab) = &law.unless else {
            out.laws.push(law.clone());
            continue;
        };
        let o = law.origin;
        let c = match out.constant(ab) {
            Some(c) => {
                if !out.constants[c].is_boolean() {
                    errors.push(Diagnostic::error(o.line, o.column, format!("abnormality constant `{ab}` is not Boolean")));
                    continue;
                }
                c
            }
            None => {
                if ab.contains('(') {
                    errors.push(Diagnostic::error(o.line, o.column, format!("undeclared abnormality constant `{ab}`")));
                    continue;
                }
                let kind = if matches!(law.kind, LawKind::PfDecl { .. }) {
                    ConstKind::Rigid
                } else {
                    ConstKind::StaticallyDeterminedFluent
                };
                let decl = out.decls.len();
                out.decls.push(ConstantDecl { name: ab.clone(), arg_sorts: vec![], kind, value_sort: 0 });
                out.add_constant(GroundConstant {
                    name: ab.clone(),
                    decl,
                    args: vec![],
                    kind,
                    domain: vec!["false".into(), "true".into()],
                })
            }
        };
        let not_ab = Literal { atom: Atom { constant: c, value: 0 }, positive: true };
        let kind = match &law.kind {
            LawKind::Static { head, cond } => LawKind::Static { head: head.clone(), cond: cond.and(not_ab) },
            LawKind::FluentDynamic { head, cond, after } => {
                LawKind::FluentDynamic { head: head.clone(), cond: cond.and(not_ab), after: after.clone() }
            }
            LawKind::InitStatic { head, cond } => LawKind::InitStatic { head: head.clone(), cond: cond.and(not_ab) },
            LawKind::PfDecl { constant, row, cond } => {
                LawKind::PfDecl { constant: *constant, row: row.clone(), cond: cond.and(not_ab) }
            }
            LawKind::Utility { value, cond, after } => {
                LawKind::Utility { value: value.clone(), cond: cond.and(not_ab), after: after.clone() }
            }
            LawKind::ObservationDynamic { head, cond, after } => {
                LawKind::ObservationDynamic { head: head.clone(), cond: cond.and(not_ab), after: after.clone() }
            }
            LawKind::ObservationStatic { head, cond } => LawKind::ObservationStatic { head: head.clone(), cond: cond.and(not_ab) },
            LawKind::InitPfDecl { .. } | LawKind::Inertial { .. } => {
                errors.push(Diagnostic::error(o.line, o.column, "`unless` applied to a law that has no condition"));
                continue;
            }
        };
        out.laws.push(CausalLaw { kind, unless: None, origin: o });
        let default = LawKind::Static { head: Head::Default(not_ab.atom), cond: Formula::top() };
        if !d.laws.iter().chain(&defaults).any(|l| l.kind == default) {
            defaults.push(CausalLaw { kind: default, unless: None, origin: o });
        }
    }
    if !errors.is_empty() {
        return Err(Diagnostics(errors));
    }
    out.laws.extend(defaults);
    Ok(out)
}
