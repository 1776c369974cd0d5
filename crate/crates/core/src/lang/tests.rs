use proptest::prelude::*;

use super::*;
use crate::corpus;

fn errors(src: &str) -> Vec<Diagnostic> {
    match parse(src) {
        Ok(_) => panic!("expected a diagnostic"),
        Err(Diagnostics(d)) => d,
    }
}

#[test]
fn tiger_shape() {
    let d = parse(corpus::TIGER).unwrap();
    let fluents: Vec<&str> = d.constants_of(ConstKind::RegularFluent).map(|c| d.constants[c].name.as_str()).collect();
    assert_eq!(fluents, ["TigerPosition(Tiger1)", "TigerPosition(Tiger2)"]);
    assert_eq!(d.action_constants().len(), 4);
    let pf_decls: std::collections::BTreeSet<&str> = d.constants_of(ConstKind::Pf).map(|c| d.decls[d.constants[c].decl].name.as_str()).collect();
    assert_eq!(pf_decls.len(), 2);
    let obs = d.constant("TigerPositionObserved(Tiger1)").unwrap();
    assert_eq!(d.constants[obs].domain, ["Left", "Middle", "Right", "NA"]);
}

#[test]
fn dialog_shape() {
    let d = parse(corpus::DIALOG_2I2P2R).unwrap();
    assert_eq!(d.constants_of(ConstKind::RegularFluent).count(), 4);
    assert_eq!(d.action_constants().len(), 17);
    assert_eq!(d.groups.len(), 7);
}

#[test]
fn every_corpus_file_loads() {
    for (name, src) in corpus::ALL {
        if let Err(e) = load(src) {
            panic!("{name}: {e}");
        }
    }
}

#[test]
fn empty_file() {
    let e = errors("");
    assert_eq!(e[0].message, "no constants declared");
    let e = errors("% only a comment\n");
    assert_eq!(e[0].message, "no constants declared");
}

#[test]
fn syntax_error_position() {
    let e = errors("regular A.\ncaused A if .\n");
    assert_eq!((e[0].line, e[0].column), (2, 13));
}

#[test]
fn multiple_errors_reported() {
    let e = errors("regular A.\ncaused B.\ncaused C.\n");
    assert_eq!(e.len(), 2);
    assert!(e[0].message.contains("undeclared constant `B`"));
    assert_eq!(e[1].line, 3);
}

#[test]
fn undeclared_sort() {
    let e = errors("regular A : Color.");
    assert!(e[0].message.contains("undeclared sort `Color`"));
}

#[test]
fn bad_row_sum() {
    let e = errors("pf P.\ncaused P = {true: 0.5, false: 0.4}.");
    assert!(e[0].message.contains("sums to 9/10"), "{}", e[0].message);
}

#[test]
fn non_boolean_action() {
    let e = errors("sort S = {a, b}.\naction A : S.");
    assert!(e[0].message.contains("non-Boolean action"));
}

#[test]
fn observation_outside_observation_law() {
    let e = errors("regular F.\nobservation O.\ncaused F if O.");
    assert!(e[0].message.contains("observation constant `O` used outside an observation law"));
}

#[test]
fn value_outside_domain() {
    let e = errors("sort S = {a, b}.\nregular F : S.\ncaused F=c.");
    assert!(e[0].message.contains("`c` is not in the domain of `F`"));
}

#[test]
fn where_guards_filter_tuples() {
    let src = "sort S = {a, b, c}.\nregular F(S) : S.\ncaused F(X)=Y where X : S, Y : S, X != Y.\n";
    let d = parse(src).unwrap();
    assert_eq!(d.laws.len(), 6);
    let tuples: Vec<usize> = d.laws.iter().map(|l| l.origin.tuple).collect();
    assert_eq!(tuples, [0, 1, 2, 3, 4, 5]);
}

#[test]
fn reward_without_after_moves_condition() {
    let d = parse("regular F.\naction A.\nreward 5 if F & A.").unwrap();
    match &d.laws[0].kind {
        LawKind::Utility { cond, after, .. } => {
            assert!(cond.is_top());
            assert_eq!(after.literals().len(), 2);
        }
        k => panic!("{k:?}"),
    }
}

#[test]
fn inertial_expands_per_value() {
    let d = load(corpus::TIGER).unwrap();
    let t1 = d.constant("TigerPosition(Tiger1)").unwrap();
    let n = d
        .laws
        .iter()
        .filter(|l| matches!(&l.kind, LawKind::FluentDynamic { head: Head::Default(a), .. } if a.constant == t1))
        .count();
    assert_eq!(n, 3);
    assert!(!d.laws.iter().any(|l| matches!(l.kind, LawKind::Inertial { .. })));
}

#[test]
fn expansion_without_abbreviations_is_identity() {
    let src = "regular F.\naction A.\ncaused F after A.\ndefault ~F.\n";
    let d = parse(src).unwrap();
    assert_eq!(expand_abbreviations(&d).unwrap(), d);
}

#[test]
fn unless_guards_and_declares() {
    let src = "pf P.\nregular F.\naction A.\ncaused P = {true: 0.5, false: 0.5} unless broken.\ncaused F after A & P.\n";
    let d = expand_abbreviations(&parse(src).unwrap()).unwrap();
    let ab = d.constant("broken").unwrap();
    assert_eq!(d.constants[ab].kind, ConstKind::Rigid);
    match &d.laws[0].kind {
        LawKind::PfDecl { cond, .. } => assert_eq!(cond.literals(), &[Literal { atom: Atom { constant: ab, value: 0 }, positive: true }]),
        k => panic!("{k:?}"),
    }
    assert!(d.laws.iter().any(|l| matches!(&l.kind, LawKind::Static { head: Head::Default(a), .. } if a.constant == ab && a.value == 0)));
}

#[test]
fn unless_on_fluent_law_declares_static_fluent() {
    let d = expand_abbreviations(&parse("regular F.\naction A.\ncaused F after A unless ab.").unwrap()).unwrap();
    assert_eq!(d.constants[d.constant("ab").unwrap()].kind, ConstKind::StaticallyDeterminedFluent);
}

#[test]
fn unless_without_condition_slot() {
    let e = errors("regular F.\ninertial F unless ab.");
    assert!(e[0].message.contains("no condition"));
    let e = errors("initpf I.\ncaused I = {true: 0.5, false: 0.5} unless ab.");
    assert!(e[0].message.contains("no condition"));
}

#[test]
fn noise_elaboration_shape() {
    let d = load(corpus::DIALOG_2I2P2R_NOISE_OFF).unwrap();
    let ab = d.constant("ab").unwrap();
    let noise = d.constant("Noise").unwrap();
    let pf = d.constant("Pf_WhichItem(Coffee)").unwrap();
    let conds: Vec<Vec<usize>> = d
        .laws
        .iter()
        .filter_map(|l| match &l.kind {
            LawKind::PfDecl { constant, cond, .. } if *constant == pf => Some(cond.literals().iter().map(|x| x.atom.constant).collect()),
            _ => None,
        })
        .collect();
    assert_eq!(conds, vec![vec![ab], vec![noise]]);
}

#[test]
fn expansion_is_idempotent_on_corpus() {
    for (_, src) in corpus::ALL {
        let once = expand_abbreviations(&parse(src).unwrap()).unwrap();
        let twice = expand_abbreviations(&once).unwrap();
        assert_eq!(once, twice);
    }
}

#[test]
fn static_checks() {
    assert!(validate_assumptions_static(&load(corpus::TIGER).unwrap()).is_empty());
    let dup = "pf Pf_Listen.\ncaused Pf_Listen = {true: 0.85, false: 0.15}.\ncaused Pf_Listen = {true: 0.5, false: 0.5}.\n";
    let d = expand_abbreviations(&parse(dup).unwrap()).unwrap();
    let diags = validate_assumptions_static(&d);
    assert_eq!(diags.len(), 1);
    assert!(diags[0].message.contains("declared twice"));
    let fluent_cond = "regular F.\npf P.\ncaused P = {true: 0.5, false: 0.5} if F.\n";
    let diags = validate_assumptions_static(&parse(fluent_cond).unwrap());
    assert!(diags[0].message.contains("not rigid"));
}

#[test]
fn undeclared_pf_row() {
    let d = parse("regular F.\naction A.\npf P.\ncaused F after A & P.").unwrap();
    assert!(validate_assumptions_static(&d)[0].message.contains("no probability declaration"));
}

#[test]
fn group_errors() {
    let e = errors("action A.\naction B.\ngroup G { A }.");
    assert!(e[0].message.contains("`B` belongs to no group"));
    let e = errors("action A.\ngroup G { A }.\ngroup H { A }.");
    assert!(e[0].message.contains("in groups"));
    let e = errors("action A.\ngroup G { Z }.");
    assert!(e[0].message.contains("matches no action"));
}

#[test]
fn corpus_round_trips_through_pretty_printer() {
    for (name, src) in corpus::ALL {
        let d = parse(src).unwrap();
        let text = pretty_print(&d);
        let back = parse(&text).unwrap_or_else(|e| panic!("{name}: {e}\n{text}"));
        assert!(d.same_structure(&back), "{name}");
    }
}

#[test]
fn diagnostics_display() {
    let e = parse("regular A.\ncaused B.").unwrap_err();
    assert_eq!(e.to_string(), "2:8: error: undeclared constant `B`");
}

fn sort_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..4, 1..4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grounding_count_matches_product(sizes in sort_strategy(), guard in any::<bool>()) {
        let mut src = String::new();
        for (i, n) in sizes.iter().enumerate() {
            let members: Vec<String> = (0..*n).map(|k| format!("v{k}")).collect();
            src.push_str(&format!("sort S{i} = {{{}}}.\n", members.join(", ")));
        }
        let args: Vec<String> = (0..sizes.len()).map(|i| format!("S{i}")).collect();
        src.push_str(&format!("regular F({}).\n", args.join(", ")));
        let vars: Vec<String> = (0..sizes.len()).map(|i| format!("X{i}")).collect();
        let binds: Vec<String> = (0..sizes.len()).map(|i| format!("X{i} : S{i}")).collect();
        let mut whr = binds.join(", ");
        if guard && sizes.len() >= 2 {
            whr.push_str(", X0 != X1");
        }
        src.push_str(&format!("caused F({}) where {}.\n", vars.join(", "), whr));
        let d = parse(&src).unwrap();
        let total: usize = sizes.iter().product();
        let excluded = if guard && sizes.len() >= 2 {
            // Tuples with X0 = X1: the names coincide on the first min(n0, n1) members.
            sizes[0].min(sizes[1]) * sizes[2..].iter().product::<usize>()
        } else {
            0
        };
        prop_assert_eq!(d.laws.len(), total - excluded);
    }

    #[test]
    fn generated_descriptions_round_trip(n_vals in 2usize..4, n_laws in 0usize..6, seed in any::<u64>()) {
        let vals: Vec<String> = (0..n_vals).map(|k| format!("v{k}")).collect();
        let mut src = format!("sort S = {{{}}}.\nregular F : S.\nregular G.\naction A.\npf P : S.\nobservation O : S.\n", vals.join(", "));
        let row: Vec<String> = vals.iter().map(|v| format!("{v}: 1/{n_vals}")).collect();
        src.push_str(&format!("caused P = {{{}}}.\n", row.join(", ")));
        let mut s = seed;
        for _ in 0..n_laws {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let v = &vals[(s >> 33) as usize % n_vals];
            let law = match (s >> 40) % 6 {
                0 => format!("caused F={v} if G.\n"),
                1 => format!("caused G after A & P={v}.\n"),
                2 => format!("reward -{} if F={v} after A.\n", (s >> 50) % 9),
                3 => format!("observed O={v} if F!={v} after A.\n"),
                4 => format!("default F={v} after ~G.\n"),
                _ => "initially ~G.\n".to_string(),
            };
            src.push_str(&law);
        }
        src.push_str("inertial F.\n");
        let d = parse(&src).unwrap();
        let back = parse(&pretty_print(&d)).unwrap();
        prop_assert!(d.same_structure(&back));
        let e = expand_abbreviations(&d).unwrap();
        prop_assert_eq!(expand_abbreviations(&e).unwrap(), e);
    }
}
