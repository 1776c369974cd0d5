use super::*;
use crate::corpus;
use crate::lang::load;

fn tiger() -> PomdpModel {
    build_naive(&load(corpus::TIGER).unwrap(), 0.9).unwrap()
}

#[test]
fn tiger_sizes() {
    let m = tiger();
    assert_eq!(m.sizes(), (6, 5, 16));
    assert_eq!(m.actions, vec!["noop", "Listen", "OpenDoor(Left)", "OpenDoor(Middle)", "OpenDoor(Right)"]);
    assert_eq!(m.states[0], vec!["TigerPosition(Tiger1)=Left", "TigerPosition(Tiger2)=Middle"]);
}

#[test]
fn tiger_tables() {
    let m = tiger();
    let listen = m.action_index("Listen").unwrap();
    for s in 0..6 {
        assert_eq!(m.t(s, listen, s), prob::one());
    }
    for (l, door) in ["Left", "Middle", "Right"].iter().enumerate() {
        let a = m.action_index(&format!("OpenDoor({door})")).unwrap();
        for s in 0..6 {
            let occupied = m.states[s].iter().any(|x| x.ends_with(&format!("={door}")));
            let want = if occupied { -100 } else { 10 };
            assert_eq!(m.r(s, a, s), prob::from_int(want), "{} {l}", m.state_name(s));
        }
    }
    assert_eq!(m.r(0, listen, 0), prob::from_int(-1));
    assert!(m.rewards.keys().all(|k| m.transitions.contains_key(k)));
}

#[test]
fn tiger_listen_observations() {
    let m = tiger();
    let listen = m.action_index("Listen").unwrap();
    let s = m.state_index(&["TigerPosition(Tiger1)=Left", "TigerPosition(Tiger2)=Right"]).unwrap();
    let o = |a: &str, b: &str| {
        let a = format!("TigerPositionObserved(Tiger1)={a}");
        let b = format!("TigerPositionObserved(Tiger2)={b}");
        m.o(listen, s, m.observation_index(&[&a, &b]).unwrap())
    };
    assert_eq!(o("Left", "Right"), prob::ratio(13, 15));
    assert_eq!(o("Middle", "Middle"), prob::ratio(1, 60));
    assert_eq!(o("Right", "Left"), prob::ratio(1, 60));
    assert_eq!(o("NA", "NA"), prob::zero());
    let noop = m.action_index(NOOP).unwrap();
    assert_eq!(m.o(noop, s, m.observation_index(&["TigerPositionObserved(Tiger1)=NA", "TigerPositionObserved(Tiger2)=NA"]).unwrap()), prob::one());
}

#[test]
fn tiger_modes_agree() {
    let d = load(corpus::TIGER).unwrap();
    assert_eq!(build_naive(&d, 0.9).unwrap(), build_compositional(&d, 0.9).unwrap());
}

#[test]
fn dialog_modes_agree() {
    let d = load(corpus::DIALOG_2I2P2R).unwrap();
    let (n, ns) = build(&d, BuildOptions::new(0.95, BuildMode::Naive)).unwrap();
    let (c, cs) = build(&d, BuildOptions::new(0.95, BuildMode::Compositional)).unwrap();
    assert_eq!(n, c);
    assert_eq!(n.sizes(), (16, 18, 9));
    assert_eq!(cs.cells, ns.cells);
    assert_eq!(cs.programs, 8 + 3);
}

#[test]
fn dialog_initial_belief() {
    let m = build_compositional(&load(corpus::DIALOG_2I2P2R).unwrap(), 0.95).unwrap();
    for (s, b) in m.b0.iter().enumerate() {
        let live = m.states[s].contains(&"Terminated=false".to_string());
        assert_eq!(*b, if live { prob::ratio(1, 8) } else { prob::zero() });
    }
}

#[test]
fn dialog_question_observation() {
    let m = build_compositional(&load(corpus::DIALOG_2I2P2R).unwrap(), 0.95).unwrap();
    let a = m.action_index("WhichItem").unwrap();
    let s = m.state_index(&["ItemReq=Coffee", "PersonReq=Alice", "RoomReq=Lab", "Terminated=false"]).unwrap();
    let o = m.observation_index(&["ItemObs=Coffee", "PersonObs=NA", "RoomObs=NA", "Confirmed=NA"]).unwrap();
    assert_eq!(m.o(a, s, o), prob::ratio(7, 10));
    let deliver = m.action_index("Deliver(Coffee,Alice,Lab)").unwrap();
    assert_eq!(m.r(s, deliver, m.state_index(&["ItemReq=Coffee", "PersonReq=Alice", "RoomReq=Lab", "Terminated=true"]).unwrap()), prob::from_int(20));
}

#[test]
fn all_corpus_models_are_stochastic() {
    for (name, src) in corpus::ALL {
        let m = build_compositional(&load(src).unwrap(), 0.95).unwrap();
        assert_eq!(m.stochasticity_errors(), Vec::<String>::new(), "{name}");
        assert!(m.rewards.keys().all(|k| m.transitions.contains_key(k)), "{name}");
    }
}

#[test]
fn table_sizes() {
    for (src, want) in [
        (corpus::DIALOG_2I2P2R, (16, 18, 9)),
        (corpus::DIALOG_2I3P2R, (24, 23, 10)),
        (corpus::DIALOG_3I3P2R, (36, 30, 11)),
        (corpus::DIALOG_4I3P2R, (48, 37, 12)),
    ] {
        let d = load(src).unwrap();
        let (s, a, o) = (enumerate_states(&d).unwrap().len(), enumerate_actions(&d).len(), enumerate_observations(&d).unwrap().len());
        assert_eq!((s, a, o), want);
    }
}

#[test]
fn small_domains() {
    let d = load("regular F. inertial F.").unwrap();
    assert_eq!(enumerate_states(&d).unwrap().len(), 2);
    assert_eq!(enumerate_observations(&d).unwrap(), vec![Vec::<String>::new()]);
    assert_eq!(enumerate_actions(&d), vec![NOOP]);
}

#[test]
fn pruning_drops_unreachable_observations() {
    let d = load(corpus::TIGER).unwrap();
    let (m, _) = build(&d, BuildOptions { gamma: 0.9, mode: BuildMode::Naive, prune_observations: true }).unwrap();
    // Every observation has some listening outcome except pairs mixing NA with a location.
    assert_eq!(m.observations.len(), 10);
    assert!(m.stochasticity_errors().is_empty());
}

#[test]
fn invalid_discount() {
    assert!(matches!(build_naive(&load(corpus::TIGER).unwrap(), 1.5), Err(BuildError::InvalidDiscount(_))));
}

#[test]
fn dropping_actions() {
    let m = tiger();
    let d = m.without_actions(&[NOOP, "Nothing"]);
    assert_eq!(d.actions, &m.actions[1..]);
    assert!(d.stochasticity_errors().is_empty());
    let (l, l2) = (m.action_index("Listen").unwrap(), d.action_index("Listen").unwrap());
    for s in 0..6 {
        for o in 0..m.observations.len() {
            assert_eq!(d.o(l2, s, o), m.o(l, s, o));
        }
        assert_eq!(d.r(s, l2, s), m.r(s, l, s));
    }
    assert_eq!(m.without_actions(&[]), m);
}
