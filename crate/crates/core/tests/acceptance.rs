//! Acceptance criteria 1 to 9. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod support;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use pbcp::builder::{build, build_compositional, build_naive, BuildMode, BuildOptions, NOOP};
use pbcp::engine::verify_theorems;
use pbcp::io::{emit, EmissionConfig, Format};
use pbcp::prob::{self, Prob};
use pbcp::sim::{evaluate, SimulationConfig, SimulationReport};
use pbcp::solver::{exact_finite_horizon_value, solve_pbvi, AlphaVectorPolicy, BeliefState, PbviConfig};
use pbcp::{corpus, lang, PomdpModel};
use support::{brute_force, engine_models, random_micro_program};

/// Per-domain time budget for compositional builds.
const BUILD_BUDGET: Duration = Duration::from_secs(120);
/// Slack on the PBVI value bracket.
const EPSILON: f64 = 0.5;
const HORIZON: u32 = 6;
const TRIALS: usize = 1000;
const SEED: u64 = 42;
const DIALOG_POINTS: usize = 2000;

type Outcome = Result<String, String>;

fn check(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn load(src: &str) -> lang::ActionDescription {
    lang::load(src).unwrap()
}

fn criterion_1() -> Outcome {
    let table = [
        ("2i2p2r", corpus::DIALOG_2I2P2R, (16, 18, 9)),
        ("2i3p2r", corpus::DIALOG_2I3P2R, (24, 23, 10)),
        ("3i3p2r", corpus::DIALOG_3I3P2R, (36, 30, 11)),
        ("4i3p2r", corpus::DIALOG_4I3P2R, (48, 37, 12)),
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, src, want) in table {
        let start = Instant::now();
        let m = build_compositional(&load(src), 0.95).unwrap();
        let took = start.elapsed();
        let got = m.sizes();
        ok &= got == want && took <= BUILD_BUDGET;
        lines.push(format!("{name} {got:?} want {want:?} in {:.2}s", took.as_secs_f64()));
    }
    check(ok, lines.join(", "))
}

fn criterion_2() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, src) in [("tiger", corpus::TIGER), ("2i2p2r", corpus::DIALOG_2I2P2R)] {
        let d = load(src);
        let naive = build_naive(&d, 0.95).unwrap();
        let comp = build_compositional(&d, 0.95).unwrap();
        let same = naive.transitions == comp.transitions
            && naive.observation_probs == comp.observation_probs
            && naive.rewards == comp.rewards
            && naive.b0 == comp.b0
            && naive == comp;
        ok &= same;
        lines.push(format!("{name} identical={same}"));
    }
    check(ok, lines.join(", "))
}

fn criterion_3() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, src) in [("tiger", corpus::TIGER), ("2i2p2r", corpus::DIALOG_2I2P2R)] {
        let report = verify_theorems(&load(src), 2).unwrap();
        for c in &report.checks {
            ok &= c.passed;
            lines.push(format!("{name} {} {}", c.name, if c.passed { "ok" } else { "failed" }));
        }
        ok &= report.checks.len() == 4;
    }
    check(ok, lines.join(", "))
}

fn criterion_4() -> Outcome {
    let mut bad = Vec::new();
    for (name, src) in corpus::ALL {
        let m = build_compositional(&load(src), 0.95).unwrap();
        let mut errors = m.stochasticity_errors();
        let b0: Prob = m.b0.iter().sum();
        if b0 != prob::one() {
            errors.push(format!("b0 sums to {b0}"));
        }
        if !errors.is_empty() {
            bad.push(format!("{name}: {}", errors.join("; ")));
        }
    }
    check(bad.is_empty(), if bad.is_empty() { format!("{} models exact", corpus::ALL.len()) } else { bad.join(" | ") })
}

const LOCATIONS: [&str; 3] = ["Left", "Middle", "Right"];

/// Distribution over observed location pairs given the true pair, from the
/// listening rows: with `Pf_Listen` both tigers are heard correctly,
/// otherwise each is heard at its own `Pf_FailedListen` value.
fn listen_oracle() -> BTreeMap<([usize; 2], [usize; 2]), Prob> {
    let listen = [(true, prob::ratio(85, 100)), (false, prob::ratio(15, 100))];
    let failed = prob::ratio(1, 3);
    let mut out = BTreeMap::new();
    for t1 in 0..3 {
        for t2 in 0..3 {
            if t1 == t2 {
                continue;
            }
            for (ok, pl) in &listen {
                for f1 in 0..3 {
                    for f2 in 0..3 {
                        let seen = if *ok { [t1, t2] } else { [f1, f2] };
                        let w = pl * &failed * &failed;
                        *out.entry(([t1, t2], seen)).or_insert_with(prob::zero) += w;
                    }
                }
            }
        }
    }
    out
}

fn criterion_5() -> Outcome {
    let oracle = listen_oracle();
    let m = build_compositional(&load(corpus::TIGER), 0.9).unwrap();
    let listen = m.action_index("Listen").unwrap();
    let mut mismatches = Vec::new();
    for (&(truth, seen), want) in &oracle {
        let s = m.state_index(&[
            &format!("TigerPosition(Tiger1)={}", LOCATIONS[truth[0]]),
            &format!("TigerPosition(Tiger2)={}", LOCATIONS[truth[1]]),
        ]);
        let o = m.observation_index(&[
            &format!("TigerPositionObserved(Tiger1)={}", LOCATIONS[seen[0]]),
            &format!("TigerPositionObserved(Tiger2)={}", LOCATIONS[seen[1]]),
        ]);
        let got = match (s, o) {
            (Some(s), Some(o)) => m.o(listen, s, o),
            _ => prob::from_int(-1),
        };
        if &got != want {
            mismatches.push(format!("{truth:?}->{seen:?}: {got} vs {want}"));
        }
    }
    let correct = &oracle[&([0, 1], [0, 1])];
    let wrong = &oracle[&([0, 1], [2, 2])];
    let stated = (prob::ratio(47, 54), prob::ratio(1, 54));
    let literal = *correct == stated.0 && *wrong == stated.1;
    let msg = format!(
        "oracle both-correct {correct}, specific incorrect pair {wrong}; compiler matches oracle on {} of {} entries; stated values {} and {} {}",
        oracle.len() - mismatches.len(),
        oracle.len(),
        stated.0,
        stated.1,
        if literal { "match" } else { "do not match" },
    );
    check(mismatches.is_empty() && literal, msg)
}

fn criterion_6() -> Outcome {
    let mut differ = Vec::new();
    let mut nonempty = 0;
    for seed in 0..50 {
        let p = random_micro_program(seed);
        let want = brute_force(&p);
        nonempty += usize::from(!want.is_empty());
        if engine_models(&p) != want {
            differ.push(seed);
        }
    }
    check(differ.is_empty(), format!("50 programs, {nonempty} with models, differing seeds {differ:?}"))
}

fn tiger_policy() -> (PomdpModel, pbcp::solver::PbviResult) {
    let m = build_compositional(&load(corpus::TIGER), 0.9).unwrap();
    let r = solve_pbvi(&m, &BeliefState::from_exact(&m.b0), &PbviConfig::new(0.9)).unwrap();
    (m, r)
}

fn criterion_7() -> Outcome {
    let (m, r) = tiger_policy();
    let vh = prob::to_f64(&exact_finite_horizon_value(&m, &m.b0, HORIZON).unwrap());
    let rmax = m.rewards.values().map(prob::to_f64).fold(0.0, f64::max);
    let gamma: f64 = 0.9;
    let lo = vh - EPSILON;
    let hi = vh + gamma.powi(HORIZON as i32) * rmax / (1.0 - gamma) + EPSILON;
    let monotone = r.history.windows(2).all(|w| w[1] >= w[0]);
    let inside = (lo..=hi).contains(&r.value_at_b0);
    check(
        inside && monotone,
        format!("V_pbvi {:.4} in [{lo:.4}, {hi:.4}] (V_{HORIZON} {vh:.4}, Rmax {rmax}), monotone {monotone} over {} sweeps", r.value_at_b0, r.history.len()),
    )
}

fn sim_config(gamma: f64) -> SimulationConfig {
    let mut cfg = SimulationConfig::new(TRIALS, 40, gamma, SEED);
    cfg.terminal_atom = Some("Terminated=true".into());
    cfg.cost_actions = vec!["Which*".into(), "Confirm*".into()];
    cfg
}

/// Enough belief points to cover the beliefs a dialog visits; the time cap
/// is never the binding limit, so runs stay deterministic.
fn solve(m: &PomdpModel) -> AlphaVectorPolicy {
    let mut cfg = PbviConfig::new(m.gamma);
    cfg.max_points = DIALOG_POINTS;
    cfg.max_time = Duration::from_secs(3600);
    let r = solve_pbvi(m, &BeliefState::from_exact(&m.b0), &cfg).unwrap();
    assert!(r.converged, "PBVI stopped after {} sweeps without converging", r.iterations);
    r.policy
}

/// Policies are computed without the no-action element: idling earns 0, which
/// beats every questioning strategy under these rewards, so with it both
/// policies idle and the comparison is empty.
fn compare(env: &PomdpModel, adaptive: &PomdpModel, stat: &PomdpModel) -> (SimulationReport, SimulationReport) {
    let (adaptive, stat) = (adaptive.without_actions(&[NOOP]), stat.without_actions(&[NOOP]));
    let (pa, ps) = (solve(&adaptive), solve(&stat));
    let mut reps = evaluate(env, &[("adaptive", Some(&adaptive), &pa), ("static", Some(&stat), &ps)], &sim_config(env.gamma)).unwrap();
    let s = reps.pop().unwrap();
    (reps.pop().unwrap(), s)
}

fn criterion_8() -> Outcome {
    let gamma = 0.95;
    let world = build_compositional(&load(corpus::DIALOG_3I3P2R_NOCOKE_WORLD), gamma).unwrap();
    let small = build_compositional(&load(corpus::DIALOG_3I3P2R_NOCOKE), gamma).unwrap();
    let full = build_compositional(&load(corpus::DIALOG_3I3P2R), gamma).unwrap();
    let (a1, s1) = compare(&world, &small, &full);
    let coke = a1.records.iter().flat_map(|r| &r.actions).filter(|a| a.starts_with("Deliver(Coke")).count();
    let ok_a = coke == 0 && a1.aborted == 0 && a1.avg_total_reward >= s1.avg_total_reward;

    let on = build_compositional(&load(corpus::DIALOG_2I2P2R_NOISE_ON), gamma).unwrap();
    let off = build_compositional(&load(corpus::DIALOG_2I2P2R_NOISE_OFF), gamma).unwrap();
    let (a3, s3) = compare(&on, &on, &off);
    let ok_b = a3.avg_total_reward >= s3.avg_total_reward;

    let small4 = build_compositional(&load(corpus::DIALOG_4I3P2R_NOCOKE), gamma).unwrap();
    let ok_c = small.sizes() == (24, 23, 10) && small4.sizes() == (36, 30, 11);
    check(
        ok_a && ok_b && ok_c,
        format!(
            "(a) adaptive {:.3} vs static {:.3}, removed-item deliveries {coke}, capped {}/{}, qa cost {:.3} vs {:.3}; (b) adaptive {:.3} vs static {:.3}; (c) 3i without coke {:?}, 4i without coke {:?}",
            a1.avg_total_reward,
            s1.avg_total_reward,
            a1.capped,
            s1.capped,
            a1.avg_qa_cost,
            s1.avg_qa_cost,
            a3.avg_total_reward,
            s3.avg_total_reward,
            small.sizes(),
            small4.sizes()
        ),
    )
}

fn pipeline() -> (String, String, String, String) {
    let opts = BuildOptions::new(0.9, BuildMode::Compositional);
    let (m, _) = build(&load(corpus::TIGER), opts).unwrap();
    let text = emit(&m, &EmissionConfig::default()).unwrap();
    let json = emit(&m, &EmissionConfig { format: Format::Json, ..EmissionConfig::default() }).unwrap();
    let policy = solve(&m);
    let mut cfg = SimulationConfig::new(200, 20, 0.9, SEED);
    cfg.cost_actions = vec!["Listen".into()];
    let rep = evaluate(&m, &[("pbvi", None, &policy)], &cfg).unwrap();
    (text, json, policy.to_json(), rep[0].to_json())
}

fn criterion_9() -> Outcome {
    let first = pipeline();
    let second = pipeline();
    let same = [first.0 == second.0, first.1 == second.1, first.2 == second.2, first.3 == second.3];
    check(same.iter().all(|&x| x), format!("pomdp/json/policy/report identical: {same:?}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("model sizes", criterion_1),
        ("mode equivalence", criterion_2),
        ("theorem suite", criterion_3),
        ("stochasticity", criterion_4),
        ("observation math", criterion_5),
        ("engine oracle equivalence", criterion_6),
        ("solver soundness", criterion_7),
        ("elaboration behavior", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS {} {name}: {msg} [{secs:.2}s]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {} {name}: {msg} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
