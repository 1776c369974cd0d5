use super::*;
use crate::corpus;
use crate::lang::load;

fn pf_rows(p: &GroundProgram, name: &str, step: u32) -> Vec<(String, Prob)> {
    let c = p.lookup(name, step).unwrap();
    p.rules
        .iter()
        .filter_map(|r| match (&r.weight, &r.head) {
            (Weight::Pf(pr), RuleHead::Atom(a)) if a.constant == c => Some((p.constants[c as usize].domain[a.value as usize].clone(), pr.clone())),
            _ => None,
        })
        .collect()
}

#[test]
fn tiger_pf_facts() {
    let p = translate(&load(corpus::TIGER).unwrap(), 1).unwrap();
    assert_eq!(pf_rows(&p, "Pf_Listen", 0), vec![("true".into(), prob::ratio(17, 20)), ("false".into(), prob::ratio(3, 20))]);
    assert_eq!(pf_rows(&p, "Pf_FailedListen(Tiger2)", 0).len(), 3);
    assert!(p.lookup("Pf_Listen", 1).is_none());
}

#[test]
fn minimal_program() {
    let p = translate(&load("regular F.").unwrap(), 0).unwrap();
    assert_eq!(p.rules.len(), 2);
    assert!(p.rules.iter().all(|r| matches!(r.head, RuleHead::Choice(_)) && r.body.is_empty()));
    assert_eq!(p.uec_constraints().len(), 2);
    assert_eq!(
        p.to_string(),
        "% horizon 0\n:- 0:F=false, 0:F=true.\n:- not 0:F=false, not 0:F=true.\n{0:F=false}.\n{0:F=true}.\n"
    );
}

#[test]
fn dialog_utility_ids() {
    let d = load(corpus::DIALOG_2I2P2R).unwrap();
    let p = translate(&d, 1).unwrap();
    let ids: Vec<usize> = p
        .rules
        .iter()
        .filter_map(|r| match r.head {
            RuleHead::Utility { id, .. } => Some(id),
            _ => None,
        })
        .collect();
    let ground_laws = d.laws.iter().filter(|l| matches!(l.kind, LawKind::Utility { .. })).count();
    assert_eq!(ids.len(), ground_laws);
    let distinct: BTreeSet<usize> = ids.iter().copied().collect();
    assert_eq!(distinct.len(), ids.len());
    // 8 correct + 8 wrong item + 8 wrong person + 8 wrong room deliveries, 3 questions, 6 confirmations.
    assert_eq!(ground_laws, 8 * 4 + 3 + 6);
}

#[test]
fn signature_arithmetic() {
    for (src, m) in [(corpus::TIGER, 0), (corpus::TIGER, 1), (corpus::TIGER, 3), (corpus::DIALOG_2I2P2R, 2)] {
        let d = load(src).unwrap();
        let p = translate(&d, m).unwrap();
        let fl: usize = d.constants.iter().filter(|c| c.kind.is_fluent()).map(|c| c.domain.len()).sum();
        let act: usize = d.constants.iter().filter(|c| c.kind == ConstKind::Action).map(|c| c.domain.len()).sum();
        let obs: usize = d.constants.iter().filter(|c| c.kind == ConstKind::Observation).map(|c| c.domain.len()).sum();
        let pf: usize = d.constants.iter().filter(|c| c.kind == ConstKind::Pf).map(|c| c.domain.len()).sum();
        let m = m as usize;
        assert_eq!(p.signature_size(&[ConstKind::RegularFluent, ConstKind::StaticallyDeterminedFluent]), (m + 1) * fl);
        assert_eq!(p.signature_size(&[ConstKind::Observation]), (m + 1) * obs);
        assert_eq!(p.signature_size(&[ConstKind::Action]), m * act);
        assert_eq!(p.signature_size(&[ConstKind::Pf]), m * pf);
    }
}

#[test]
fn horizon_zero_has_no_dynamic_rules() {
    let p = translate(&load(corpus::DIALOG_2I2P2R).unwrap(), 0).unwrap();
    assert!(p.rules.iter().all(|r| !matches!(r.head, RuleHead::Utility { .. })));
    assert!(p.rules.iter().all(|r| r.body.iter().all(|l| p.constants[l.atom.constant as usize].step == 0)));
    assert!(p.rules.iter().all(|r| !r.is_pf_fact()));
    assert!(p.cardinality.is_empty());
}

#[test]
fn stamping_of_dynamic_laws() {
    let d = load("regular F.\naction A.\ncaused F after A.").unwrap();
    let p = translate(&d, 3).unwrap();
    let stamped: Vec<String> = p.rules.iter().filter(|r| matches!(r.head, RuleHead::Atom(_))).map(|r| p.rule_text(r)).collect();
    assert_eq!(stamped, ["1:F=true :- 0:A=true.", "2:F=true :- 1:A=true.", "3:F=true :- 2:A=true."]);
}

#[test]
fn initial_laws_only_with_init() {
    let d = load(corpus::DIALOG_2I2P2R).unwrap();
    let with = translate(&d, 0).unwrap();
    let without = translate_core(&d, 0).unwrap();
    assert_eq!(with.rules.len(), without.rules.len() + 1);
    assert!(with.to_string().contains(":- not 0:Terminated=false."));
}

#[test]
fn deterministic_dump() {
    let d = load(corpus::DIALOG_2I2P2R).unwrap();
    assert_eq!(translate(&d, 2).unwrap().to_string(), translate(&load(corpus::DIALOG_2I2P2R).unwrap(), 2).unwrap().to_string());
}

#[test]
fn restrict_dialog_which_item() {
    let d = load(corpus::DIALOG_2I2P2R).unwrap();
    let p = restrict_to_group(&translate(&d, 1).unwrap(), Some("AskItem")).unwrap();
    let names: BTreeSet<&str> = p.constants.iter().map(|c| c.name.as_str()).collect();
    assert!(names.contains("WhichItem"));
    assert!(names.contains("Pf_WhichItem(Coffee)"));
    assert!(!names.iter().any(|n| n.starts_with("ConfirmItem") || n.starts_with("ConfirmPerson") || n.starts_with("Deliver") || n.starts_with("Pf_Confirm")));
    assert!(!names.contains("Pf_WhichPerson(Alice)"));
    assert_eq!(p.cardinality.len(), 1);
    assert_eq!((p.cardinality[0].min, p.cardinality[0].max), (1, 1));
    assert!(!p.rules.iter().any(|r| matches!(&r.head, RuleHead::Atom(a) if p.constants[a.constant as usize].name == "Terminated")));
}

#[test]
fn restrict_tiger_groups() {
    let p = translate(&load(corpus::TIGER).unwrap(), 1).unwrap();
    let pf_decls = |q: &GroundProgram| -> BTreeSet<String> {
        q.constants.iter().filter(|c| c.kind == ConstKind::Pf).map(|c| c.name.split('(').next().unwrap().to_string()).collect()
    };
    let listen = restrict_to_group(&p, Some("Listening")).unwrap();
    assert_eq!(pf_decls(&listen), ["Pf_FailedListen".to_string(), "Pf_Listen".to_string()].into_iter().collect());
    let open = restrict_to_group(&p, Some("Opening")).unwrap();
    assert!(pf_decls(&open).is_empty());
    let core = restrict_to_group(&p, None).unwrap();
    assert!(core.constants.iter().all(|c| c.kind != ConstKind::Action && c.kind != ConstKind::Pf));
    assert!(matches!(restrict_to_group(&p, Some("Nope")), Err(TranslateError::UnknownGroup(_))));
}

#[test]
fn single_group_is_whole_program() {
    let src = "regular F.\nregular G.\naction A.\naction B.\npf P.\ncaused F after A & P.\ncaused G after B.\ncaused P = {true: 0.5, false: 0.5}.\ngroup All { A, B }.\n";
    let p = translate(&load(src).unwrap(), 2).unwrap();
    let r = restrict_to_group(&p, Some("All")).unwrap();
    assert_eq!(r.rules, p.rules);
    assert_eq!(r.constants, p.constants);
    assert!(r.cardinality.iter().all(|c| c.min == 1 && c.max == 1 && c.atoms.len() == 2));
}

#[test]
fn group_spanning_law() {
    let src = "regular F.\naction A.\naction B.\ncaused F after A & B.\ngroup GA { A }.\ngroup GB { B }.\n";
    let p = translate(&load(src).unwrap(), 1).unwrap();
    assert!(matches!(restrict_to_group(&p, Some("GA")), Err(TranslateError::GroupSpanning(_))));
    let src = "regular F.\naction A.\naction B.\ncaused F after A & ~B.\ngroup GA { A }.\ngroup GB { B }.\n";
    let p = translate(&load(src).unwrap(), 1).unwrap();
    let r = restrict_to_group(&p, Some("GA")).unwrap();
    assert!(r.to_string().contains("1:F=true :- 0:A=true."));
}

#[test]
fn rigid_resolution() {
    let d = load(corpus::DIALOG_2I2P2R_PREFS).unwrap();
    let v = resolve_rigids(&d).unwrap();
    let val = |n: &str| d.constants[d.constant(n).unwrap()].domain[v[d.constant(n).unwrap()].unwrap()].clone();
    assert_eq!(val("Interchangeable(Alice,Coffee,Coke)"), "5");
    assert_eq!(val("Interchangeable(Bob,Coke,Coffee)"), "-3");
    assert_eq!(val("Interchangeable(Bob,Coffee,Coke)"), "0");
    let p = translate(&d, 1).unwrap();
    assert!(p.to_string().contains("utility(5, 1, "));
    assert!(p.constants.iter().all(|c| c.kind != ConstKind::Rigid));

    let off = translate(&load(corpus::DIALOG_2I2P2R_NOISE_OFF).unwrap(), 1).unwrap();
    let on = translate(&load(corpus::DIALOG_2I2P2R_NOISE_ON).unwrap(), 1).unwrap();
    assert_eq!(pf_rows(&off, "Pf_WhichItem(Coffee)", 0)[0].1, prob::ratio(7, 10));
    assert_eq!(pf_rows(&on, "Pf_WhichItem(Coffee)", 0)[0].1, prob::ratio(3, 5));
}

#[test]
fn rigid_errors() {
    let d = load("rigid R.\nregular F.\ncaused F if R.").unwrap();
    assert_eq!(translate(&d, 0), Err(TranslateError::UnresolvedRigid("R".into())));
    let d = load("rigid R.\nregular F.\ncaused R.\ncaused ~R.\ncaused F if R.").unwrap();
    assert!(matches!(translate(&d, 0), Err(TranslateError::RigidConflict { .. })));
    let d = load("rigid R.\nregular F.\ncaused R if F.").unwrap();
    assert!(matches!(translate(&d, 0), Err(TranslateError::RigidDependsOnFluent { .. })));
}

#[test]
fn pf_declaration_errors() {
    let d = load("rigid R.\nregular F.\naction A.\npf P.\ncaused P = {true: 0.5, false: 0.5} if R.\ncaused F after A & P.\ndefault ~R.").unwrap();
    assert_eq!(translate(&d, 1), Err(TranslateError::MissingPfDeclaration("P".into())));
    let d = load("rigid R.\nregular F.\naction A.\npf P.\ncaused P = {true: 0.5, false: 0.5} if R.\ncaused P = {true: 0.1, false: 0.9}.\ncaused F after A & P.\ndefault R.").unwrap();
    assert_eq!(translate(&d, 1), Err(TranslateError::AmbiguousPfDeclaration("P".into())));
}

#[test]
fn atom_text_round_trip() {
    let p = translate(&load(corpus::DIALOG_2I2P2R).unwrap(), 1).unwrap();
    for t in ["1:ItemReq=Coffee", "0:WhichItem=true", "1:Terminated=false"] {
        assert_eq!(p.atom_text(p.atom(t).unwrap()), t);
    }
    assert_eq!(p.atom("0:WhichItem").unwrap(), p.atom("0:WhichItem=true").unwrap());
    assert_eq!(p.atom("1:~Terminated").unwrap(), p.atom("1:Terminated=false").unwrap());
    assert!(p.atom("3:ItemReq=Coffee").is_err());
    assert!(p.atom("ItemReq=Coffee").is_err());
}

#[test]
fn exogenous_atoms_of_tiger() {
    let p = translate(&load(corpus::TIGER).unwrap(), 1).unwrap();
    let ex = p.exogenous_atoms();
    // 6 initial positions, 16 initial observation atoms, 2 NA choices at step 1,
    // 8 action atoms, 2 + 6 pf atoms.
    assert_eq!(ex.len(), 6 + 8 + 2 + 8 + 8);
}
