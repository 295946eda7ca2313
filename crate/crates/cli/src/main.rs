//! `bondsat` command-line driver.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bondsat::circuit::{check_equivalence, parse_circuit, serialize_circuit, CheckMode, Circuit};
use bondsat::dot::{circuit_to_dot, egraph_to_dot};
use bondsat::pipeline::{optimize, Optimized};
use bondsat::rules::{Limits, RuleSet};
use bondsat::{CostModel, Rational};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;

const DEFAULT_SEED: u64 = 0xB04D;

#[derive(Parser, Debug)]
#[command(name = "bondsat", version, about = "Resource-sharing circuit optimizer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimize a circuit and verify the result.
    Optimize(OptimizeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Check {
    /// Exhaustive when the inputs total at most `--max-exhaustive-bits`, random otherwise.
    Auto,
    Exhaustive,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
enum Emit {
    DotEgraph,
    DotCircuit,
    Stats,
}

#[derive(clap::Args, Debug)]
struct OptimizeArgs {
    /// Input netlist.
    circuit: PathBuf,
    /// Rule file. Defaults to the built-in rule set.
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Cost table overriding the default cost model.
    #[arg(long)]
    costs: Option<PathBuf>,
    #[arg(long, default_value_t = Limits::default().iters as u64, value_parser = clap::value_parser!(u64).range(1..))]
    iters: u64,
    #[arg(long, default_value_t = Limits::default().nodes as u64, value_parser = clap::value_parser!(u64).range(1..))]
    nodes: u64,
    #[arg(long, default_value_t = Limits::default().millis, value_parser = clap::value_parser!(u64).range(1..))]
    millis: u64,
    #[arg(long, value_enum, default_value_t = Check::Auto)]
    check: Check,
    #[arg(long, default_value_t = 20)]
    max_exhaustive_bits: u32,
    #[arg(long, default_value_t = 1000)]
    samples: u64,
    /// Seed for random vectors, decimal or 0x-prefixed hex.
    #[arg(long, default_value_t = DEFAULT_SEED, value_parser = parse_seed)]
    seed: u64,
    /// Extra artifacts, comma separated.
    #[arg(long, value_enum, value_delimiter = ',')]
    emit: Vec<Emit>,
    /// Output path prefix. Defaults to the input path without extension.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let r = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    r.map_err(|e| format!("invalid seed {s:?}: {e}"))
}

enum Failure {
    Structural(String),
    Verification(String),
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Structural(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    info!("writing {}", path.display());
    fs::write(path, text).map_err(|e| Failure::Structural(format!("{}: {e}", path.display())))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn check_mode(args: &OptimizeArgs, c: &Circuit) -> CheckMode {
    let random = CheckMode::Random {
        samples: args.samples,
        seed: args.seed,
    };
    match args.check {
        Check::Exhaustive => CheckMode::Exhaustive,
        Check::Random => random,
        Check::Auto => {
            let bits: u32 = c.input_signature().iter().map(|(_, w)| u32::from(*w)).sum();
            if bits <= args.max_exhaustive_bits {
                CheckMode::Exhaustive
            } else {
                random
            }
        }
    }
}

fn emit(args: &OptimizeArgs, prefix: &Path, out: &Optimized<Rational>) -> Result<(), Failure> {
    let mut emits = args.emit.clone();
    emits.sort();
    emits.dedup();
    for e in emits {
        match e {
            Emit::DotEgraph => {
                write(&with_suffix(prefix, ".egraph.pre.dot"), &egraph_to_dot(&out.initial))?;
                write(&with_suffix(prefix, ".egraph.post.dot"), &egraph_to_dot(&out.egraph))?;
            }
            Emit::DotCircuit => {
                write(&with_suffix(prefix, ".circuit.pre.dot"), &circuit_to_dot(&out.source))?;
                write(&with_suffix(prefix, ".circuit.post.dot"), &circuit_to_dot(&out.circuit))?;
            }
            // Stats are always written.
            Emit::Stats => {}
        }
    }
    Ok(())
}

fn run(args: &OptimizeArgs) -> Result<(), Failure> {
    let structural = |e: &dyn std::fmt::Display| Failure::Structural(e.to_string());
    let src = parse_circuit(&read(&args.circuit)?)
        .map_err(|e| Failure::Structural(format!("{}: {e}", args.circuit.display())))?;
    let rules = match &args.rules {
        Some(p) => RuleSet::parse(&read(p)?).map_err(|e| Failure::Structural(format!("{}: {e}", p.display())))?,
        None => RuleSet::shipped(),
    };
    let costs = match &args.costs {
        Some(p) => CostModel::parse(&read(p)?).map_err(|e| Failure::Structural(format!("{}: {e}", p.display())))?,
        None => CostModel::new(),
    };
    let limits = Limits {
        iters: args.iters as usize,
        nodes: args.nodes as usize,
        millis: args.millis,
    };
    let out = optimize(&src, &rules, &costs, &limits).map_err(|e| structural(&e))?;
    info!(
        "saturation stopped: {:?} after {} iterations",
        out.report.stop, out.report.iterations
    );

    let prefix = args.out.clone().unwrap_or_else(|| args.circuit.with_extension(""));
    write(
        &with_suffix(&prefix, ".opt.circuit"),
        &(serialize_circuit(&out.circuit) + "\n"),
    )?;
    let stats = serde_json::to_string_pretty(&out.summary()).map_err(|e| structural(&e))?;
    write(&with_suffix(&prefix, ".stats.json"), &(stats + "\n"))?;
    emit(args, &prefix, &out)?;

    let mode = check_mode(args, &out.source);
    let report = check_equivalence(&out.source, &out.circuit, mode).map_err(|e| structural(&e))?;
    write(&with_suffix(&prefix, ".equiv.txt"), &report.to_string())?;
    let summary = out.summary();
    println!(
        "cost {} -> {}, nodes {} -> {}, {}",
        summary.cost_before,
        summary.cost_after,
        summary.before.total,
        summary.after.total,
        if report.equal { "equivalent" } else { "NOT equivalent" }
    );
    if report.equal {
        Ok(())
    } else {
        Err(Failure::Verification(report.to_string()))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BONDSAT_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let Command::Optimize(args) = cli.command;
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Structural(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed:\n{msg}");
            ExitCode::from(2)
        }
    }
}
