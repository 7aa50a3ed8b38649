use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};
use pareto_match::gen::{generate, GenParams};
use pareto_match::market::{build_market, classify_outcome, man_optimal_oracle, utility_bounds_check};
use pareto_match::mechanism::{
    assign_priorities, parse_college_instance, solve_college, solve_traced, Matching, PriorityAssignment,
};
use pareto_match::model::{parse_instance, Instance};
use pareto_match::reveal::RevealPolicy;
use pareto_match::verifier::{
    audit_strategyproofness, check_weak_stability, is_pareto_stable, AuditConfig, AuditReport, VerifyError,
};
use serde_json::{json, Value};

/// Group-strategyproof Pareto-stable matching with indifferences.
#[derive(Parser, Debug)]
#[command(name = "pareto-match", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for sampled audits and generated instances.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for audits.
    #[arg(long, global = true)]
    parallel: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the matching of a marriage instance.
    Solve {
        input: PathBuf,
        /// Comma-separated priorities of the men in input order, a permutation of 1..=|I|.
        #[arg(long)]
        pi: Option<String>,
        /// Include the reveal steps in the output.
        #[arg(long)]
        trace: bool,
    },
    /// Compute the assignment of a college admissions instance.
    SolveCollege { input: PathBuf },
    /// Check a matching for weak stability and Pareto-stability.
    Verify {
        input: PathBuf,
        #[arg(long)]
        matching: PathBuf,
    },
    /// Search for profitable misreports by single men or pairs of men.
    Audit {
        input: PathBuf,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        coalition: u8,
        /// Largest number of misreport profiles to examine.
        #[arg(long, default_value_t = 100_000)]
        budget: u64,
        /// Also flag profiles where the coalition is weakly better and one member strictly.
        #[arg(long)]
        strong: bool,
        #[arg(long)]
        pi: Option<String>,
    },
    /// Print a seeded random instance.
    Gen {
        #[arg(long)]
        men: usize,
        #[arg(long)]
        women: usize,
        #[arg(long, default_value_t = 0.0)]
        tie_density: f64,
        #[arg(long, default_value_t = 0.0)]
        incompleteness: f64,
    },
    /// Print every reveal step as a JSON line.
    Trace {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Policy::Fifo)]
        policy: Policy,
        #[arg(long)]
        pi: Option<String>,
    },
    /// Compute the man-optimal outcome of the associated tiered-slope market.
    Oracle {
        input: PathBuf,
        /// Refuse instances with more agents than this on either side.
        #[arg(long, default_value_t = 3)]
        oracle_cap: usize,
        #[arg(long)]
        pi: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Policy {
    Fifo,
    Reverse,
    Random,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_instance(path: &Path) -> Result<Instance> {
    parse_instance(&read(path)?).with_context(|| format!("cannot parse {}", path.display()))
}

fn priorities(inst: &Instance, pi: Option<&str>) -> Result<PriorityAssignment> {
    match pi {
        Some(text) => Ok(PriorityAssignment::parse(text, inst.num_men())?),
        None => Ok(assign_priorities(inst)),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, format!("{text}\n")).with_context(|| format!("cannot write {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}")?;
            Ok(())
        }
    }
}

fn emit_json(out: Option<&Path>, v: &Value) -> Result<()> {
    emit(out, &serde_json::to_string_pretty(v)?)
}

fn report_exit(out: Option<&Path>, report: &AuditReport) -> Result<ExitCode> {
    emit_json(out, &serde_json::to_value(report)?)?;
    Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn run(cli: Cli) -> Result<ExitCode> {
    let out = cli.out.as_deref();
    if let Some(n) = cli.parallel {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("cannot start worker threads")?;
    }
    match cli.command {
        Command::Solve { input, pi, trace } => {
            let inst = load_instance(&input)?;
            let pr = priorities(&inst, pi.as_deref())?;
            let (m, steps) = solve_traced(&inst, &pr, RevealPolicy::Fifo);
            info!("matched {} of {} men in {} reveal steps", m.len(), inst.num_men(), steps.len());
            let mut doc = m.to_document(&inst);
            if trace {
                doc["trace"] = serde_json::to_value(&steps)?;
            }
            emit_json(out, &doc)?;
        }
        Command::SolveCollege { input } => {
            let ci = parse_college_instance(&read(&input)?).with_context(|| format!("cannot parse {}", input.display()))?;
            emit_json(out, &solve_college(&ci).to_document(&ci))?;
        }
        Command::Verify { input, matching } => {
            let inst = load_instance(&input)?;
            let doc: Value = serde_json::from_str(&read(&matching)?)
                .with_context(|| format!("cannot parse {}", matching.display()))?;
            let mu = Matching::from_document(&inst, &doc)?;
            let report = match is_pareto_stable(&inst, &mu) {
                Ok(r) => r,
                Err(VerifyError::SizeLimit { agents, limit }) => {
                    warn!("{agents} agents exceed the brute-force limit {limit}; checking weak stability only");
                    check_weak_stability(&inst, &mu)
                }
                Err(e) => return Err(e.into()),
            };
            return report_exit(out, &report);
        }
        Command::Audit { input, coalition, budget, strong, pi } => {
            let inst = load_instance(&input)?;
            let pr = priorities(&inst, pi.as_deref())?;
            let cfg = AuditConfig {
                max_coalition: usize::from(coalition),
                budget,
                seed: cli.seed,
                strong,
                parallel: cli.parallel.is_some_and(|n| n > 1),
            };
            let report = audit_strategyproofness(&inst, |x: &Instance| solve_traced(x, &pr, RevealPolicy::Fifo).0, &cfg)?;
            info!("checked {} misreport profiles", report.profiles_checked);
            return report_exit(out, &report);
        }
        Command::Gen { men, women, tie_density, incompleteness } => {
            let params = GenParams::new(men, women, tie_density, incompleteness)?;
            emit(out, &generate(cli.seed, &params).to_json())?;
        }
        Command::Trace { input, policy, pi } => {
            let inst = load_instance(&input)?;
            let pr = priorities(&inst, pi.as_deref())?;
            let policy = match policy {
                Policy::Fifo => RevealPolicy::Fifo,
                Policy::Reverse => RevealPolicy::Reverse,
                Policy::Random => RevealPolicy::Random { seed: cli.seed },
            };
            let (_, steps) = solve_traced(&inst, &pr, policy);
            let lines: Vec<String> = steps.iter().map(serde_json::to_string).collect::<Result<_, _>>()?;
            emit(out, &lines.join("\n"))?;
        }
        Command::Oracle { input, oracle_cap, pi } => {
            let inst = load_instance(&input)?;
            if inst.num_men() > oracle_cap || inst.num_women() > oracle_cap {
                bail!("instance has {} men and {} women, above the cap {oracle_cap}", inst.num_men(), inst.num_women());
            }
            let pr = priorities(&inst, pi.as_deref())?;
            let m = build_market(&inst, &pr);
            let o = man_optimal_oracle(&m)?;
            let c = classify_outcome(&m, &o)?;
            let bounds = utility_bounds_check(&m, &o, true)?;
            let mut doc = o.to_document(&inst);
            doc["market"] = json!({"N": m.n(), "lambda": m.lambda().to_string()});
            doc["classification"] = json!({
                "feasible": c.feasible,
                "individually_rational": c.individually_rational,
                "stable": c.stable,
                "bound_violations": bounds.iter().map(|b| format!("{}: {}", b.agent, b.bound)).collect::<Vec<_>>(),
            });
            emit_json(out, &doc)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("PARETO_MATCH_LOG")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
