use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pbcp::builder::{self, BuildMode, BuildOptions};
use pbcp::engine::verify_theorems;
use pbcp::io::{self, EmissionConfig, Format};
use pbcp::lang::{self, ConstKind, Diagnostic, Diagnostics};
use pbcp::sim::{self, SimulationConfig};
use pbcp::solver::{self, AlphaVectorPolicy, BeliefState, PbviConfig};
use pbcp::{translate, PomdpModel};
use serde_json::json;

#[derive(Parser)]
#[command(name = "pbcp", version, about = "Compile pBC+ action descriptions into POMDPs, solve and simulate them")]
struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = "PBCP_JOBS", default_value_t = 0)]
    jobs: usize,
    /// Report errors and statistics on stderr as JSON lines.
    #[arg(long, global = true)]
    json_diagnostics: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile an action description into a POMDP.
    Compile(CompileArgs),
    /// Compute an alpha-vector policy with point-based value iteration.
    Solve(SolveArgs),
    /// Evaluate policies by Monte-Carlo simulation.
    Simulate(SimulateArgs),
    /// Summarize an action description or a compiled model.
    Inspect(InspectArgs),
    /// Check the probability and stationarity properties of the translation.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Naive,
    Compositional,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Pomdp,
    Json,
}

#[derive(Args)]
struct CompileArgs {
    file: PathBuf,
    #[arg(long, default_value_t = 0.95)]
    discount: f64,
    #[arg(long, value_enum, default_value = "compositional")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "pomdp")]
    format: FormatArg,
    /// Output file; standard output when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Drop observations that no action and successor state can produce.
    #[arg(long)]
    prune_observations: bool,
    /// Significant digits in `.pomdp` output.
    #[arg(long, default_value_t = 12)]
    float_digits: usize,
    /// Also write zero entries of T and O.
    #[arg(long)]
    include_zero_rows: bool,
}

/// A compiled model: a `.pbcp` source or a JSON model dump.
#[derive(Args)]
struct ModelArgs {
    /// Discount used when compiling a `.pbcp` source; overrides a JSON model's.
    #[arg(long)]
    discount: Option<f64>,
    /// Remove an action before solving (repeatable), e.g. `noop`.
    #[arg(long = "exclude-action")]
    exclude: Vec<String>,
}

#[derive(Args)]
struct SolveArgs {
    model: PathBuf,
    #[command(flatten)]
    model_args: ModelArgs,
    #[arg(long, default_value_t = 0.1)]
    precision: f64,
    /// Wall-clock limit in seconds.
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
    #[arg(long, default_value_t = 256)]
    max_points: usize,
    #[arg(long, default_value_t = 2000)]
    max_iterations: usize,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Environment model.
    env: PathBuf,
    /// Policy file (repeatable). `NAME=FILE` sets the report name.
    #[arg(long = "policy", required = true)]
    policies: Vec<String>,
    /// Model the matching policy was computed on (repeatable, in policy order).
    /// Defaults to the environment.
    #[arg(long = "policy-model")]
    policy_models: Vec<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    max_steps: usize,
    /// Discount for the discounted return; defaults to the environment's.
    #[arg(long)]
    discount: Option<f64>,
    /// Atom that ends an episode, e.g. `Terminated=true`.
    #[arg(long)]
    terminal: Option<String>,
    /// Actions counted as question-asking cost; a trailing `*` matches any suffix.
    #[arg(long = "cost-actions", value_delimiter = ',')]
    cost_actions: Vec<String>,
    /// JSON report file; standard output when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Per-trial CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    file: PathBuf,
    /// Horizon of the translation whose sizes are reported.
    #[arg(long, default_value_t = 1)]
    m: u32,
}

#[derive(Args)]
struct VerifyArgs {
    file: PathBuf,
    #[arg(long, default_value_t = 2)]
    m: u32,
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write_or_print(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
            _ => Ok(()),
        },
    }
}

fn load(path: &Path) -> anyhow::Result<lang::ActionDescription> {
    Ok(lang::load(&read(path)?)?)
}

fn check_discount(g: f64) -> anyhow::Result<()> {
    if !(0.0..=1.0).contains(&g) {
        bail!("discount {g} is not in [0, 1]");
    }
    Ok(())
}

fn load_model(path: &Path, args: &ModelArgs) -> anyhow::Result<PomdpModel> {
    if let Some(g) = args.discount {
        check_discount(g)?;
    }
    let mut m = if path.extension().is_some_and(|e| e == "pbcp") {
        builder::build_compositional(&load(path)?, args.discount.unwrap_or(0.95))?
    } else {
        let mut m = io::parse_json(&read(path)?).with_context(|| format!("in {}", path.display()))?;
        if let Some(g) = args.discount {
            m.gamma = g;
        }
        m
    };
    if !args.exclude.is_empty() {
        let drop: Vec<&str> = args.exclude.iter().map(String::as_str).collect();
        m = m.without_actions(&drop);
        if m.actions.is_empty() {
            bail!("no actions left after exclusion");
        }
    }
    Ok(m)
}

struct Reporter {
    json: bool,
}

impl Reporter {
    fn stats(&self, what: &str, fields: serde_json::Value) {
        if self.json {
            eprintln!("{}", json!({ "kind": "stats", "command": what, "stats": fields }));
        } else if let Some(map) = fields.as_object() {
            let parts: Vec<String> = map.iter().map(|(k, v)| format!("{k}={v}")).collect();
            eprintln!("{what}: {}", parts.join(" "));
        }
    }

    fn error(&self, e: &anyhow::Error) {
        let diags: Vec<Diagnostic> = match e.downcast_ref::<Diagnostics>() {
            Some(d) => d.0.clone(),
            None => vec![Diagnostic::error(0, 0, format!("{e:#}"))],
        };
        for d in &diags {
            if self.json {
                eprintln!("{}", json!({ "kind": "diagnostic", "diagnostic": d }));
            } else if d.line == 0 {
                eprintln!("error: {}", d.message);
            } else {
                eprintln!("{d}");
            }
        }
    }
}

fn compile(a: &CompileArgs, r: &Reporter) -> anyhow::Result<()> {
    check_discount(a.discount)?;
    let cfg = EmissionConfig {
        format: match a.format {
            FormatArg::Pomdp => Format::Pomdp,
            FormatArg::Json => Format::Json,
        },
        float_digits: a.float_digits,
        include_zero_rows: a.include_zero_rows,
    };
    cfg.validate()?;
    let d = load(&a.file)?;
    let mode = match a.mode {
        ModeArg::Naive => BuildMode::Naive,
        ModeArg::Compositional => BuildMode::Compositional,
    };
    let mut opts = BuildOptions::new(a.discount, mode);
    opts.prune_observations = a.prune_observations;
    let (m, stats) = builder::build(&d, opts)?;
    let text = io::emit(&m, &cfg)?;
    write_or_print(a.out.as_deref(), &text)?;
    let (s, ac, o) = m.sizes();
    r.stats(
        "compile",
        json!({
            "states": s,
            "actions": ac,
            "observations": o,
            "programs": stats.programs,
            "rules": stats.rules,
            "cells": stats.cells,
            "seconds": stats.elapsed.as_secs_f64(),
        }),
    );
    Ok(())
}

fn solve(a: &SolveArgs, r: &Reporter) -> anyhow::Result<()> {
    if !(a.timeout > 0.0) {
        bail!("timeout must be positive");
    }
    let m = load_model(&a.model, &a.model_args)?;
    let cfg = PbviConfig {
        gamma: m.gamma,
        precision: a.precision,
        max_time: Duration::from_secs_f64(a.timeout),
        max_points: a.max_points,
        max_iterations: a.max_iterations,
    };
    let start = Instant::now();
    let res = solver::solve_pbvi(&m, &BeliefState::from_exact(&m.b0), &cfg)?;
    write_or_print(a.out.as_deref(), &res.policy.to_json())?;
    r.stats(
        "solve",
        json!({
            "value_at_b0": res.value_at_b0,
            "residual": res.residual,
            "vectors": res.policy.vectors.len(),
            "points": res.points,
            "iterations": res.iterations,
            "converged": res.converged,
            "seconds": start.elapsed().as_secs_f64(),
        }),
    );
    Ok(())
}

fn simulate(a: &SimulateArgs, r: &Reporter) -> anyhow::Result<()> {
    if a.policy_models.len() > a.policies.len() {
        bail!("{} policy models given for {} policies", a.policy_models.len(), a.policies.len());
    }
    let plain = ModelArgs { discount: None, exclude: Vec::new() };
    let env = load_model(&a.env, &plain)?;
    let mut cfg = SimulationConfig::new(a.trials, a.max_steps, a.discount.unwrap_or(env.gamma), a.seed);
    cfg.terminal_atom = a.terminal.clone();
    cfg.cost_actions = a.cost_actions.clone();
    cfg.validate()?;
    let mut named = Vec::new();
    for (i, spec) in a.policies.iter().enumerate() {
        let (name, file) = match spec.split_once('=') {
            Some((n, f)) => (n.to_string(), f.to_string()),
            None => (spec.clone(), spec.clone()),
        };
        let policy = AlphaVectorPolicy::from_json(&read(Path::new(&file))?).with_context(|| format!("in {file}"))?;
        let model = a.policy_models.get(i).map(|p| load_model(p, &plain)).transpose()?;
        named.push((name, model, policy));
    }
    let runs: Vec<(&str, Option<&PomdpModel>, &AlphaVectorPolicy)> =
        named.iter().map(|(n, m, p)| (n.as_str(), m.as_ref(), p)).collect();
    let start = Instant::now();
    let reports = sim::evaluate(&env, &runs, &cfg)?;
    let mut text = serde_json::to_string_pretty(&reports)?;
    text.push('\n');
    write_or_print(a.out.as_deref(), &text)?;
    if let Some(p) = &a.csv {
        fs::write(p, sim::reports_to_csv(&reports)).with_context(|| format!("cannot write {}", p.display()))?;
    }
    for rep in &reports {
        r.stats(
            "simulate",
            json!({
                "policy": rep.policy,
                "trials": rep.trials,
                "avg_total_reward": rep.avg_total_reward,
                "avg_discounted_reward": rep.avg_discounted_reward,
                "avg_qa_cost": rep.avg_qa_cost,
                "capped": rep.capped,
                "aborted": rep.aborted,
            }),
        );
    }
    r.stats("simulate", json!({ "seconds": start.elapsed().as_secs_f64() }));
    Ok(())
}

fn inspect(a: &InspectArgs) -> anyhow::Result<()> {
    let text = read(&a.file)?;
    if a.file.extension().is_some_and(|e| e == "pbcp") {
        let d = lang::load(&text)?;
        let count = |k: ConstKind| d.constants_of(k).count();
        println!("sorts: {}", d.sorts.len());
        println!("ground constants: {}", d.constants.len());
        for k in [
            ConstKind::RegularFluent,
            ConstKind::StaticallyDeterminedFluent,
            ConstKind::Rigid,
            ConstKind::Observation,
            ConstKind::Action,
            ConstKind::Pf,
            ConstKind::InitPf,
        ] {
            println!("  {}: {}", k.keyword(), count(k));
        }
        println!("ground laws: {}", d.laws.len());
        println!("action groups: {}", d.effective_groups().len());
        let p = translate::translate(&d, a.m)?;
        println!("translation m={}: {} timed constants, {} rules, {} cardinality constraints", a.m, p.constants.len(), p.rules.len(), p.cardinality.len());
    } else {
        let m = io::parse_json(&text)?;
        let (s, ac, o) = m.sizes();
        println!("states: {s}\nactions: {ac}\nobservations: {o}\ndiscount: {}", m.gamma);
        println!("nonzero T: {}\nnonzero O: {}\nreward entries: {}", m.transitions.len(), m.observation_probs.len(), m.rewards.len());
        println!("actions: {}", m.actions.join(" "));
    }
    Ok(())
}

fn verify(a: &VerifyArgs, r: &Reporter) -> anyhow::Result<()> {
    let d = load(&a.file)?;
    let report = verify_theorems(&d, a.m)?;
    if r.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{report}");
    }
    if !report.passed() {
        bail!("{} of {} checks failed", report.checks.iter().filter(|c| !c.passed).count(), report.checks.len());
    }
    Ok(())
}

fn run(cli: &Cli, r: &Reporter) -> anyhow::Result<()> {
    rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global().context("cannot start worker threads")?;
    match &cli.command {
        Command::Compile(a) => compile(a, r),
        Command::Solve(a) => solve(a, r),
        Command::Simulate(a) => simulate(a, r),
        Command::Inspect(a) => inspect(a),
        Command::Verify(a) => verify(a, r),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = Reporter { json: cli.json_diagnostics };
    match run(&cli, &r) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            r.error(&e);
            ExitCode::FAILURE
        }
    }
}
