//! Command-line front end: run single executions, grid sweeps, the
//! probability-bound battery, constant fitting, and trace diagnostics.
//!
//! Machine-readable output (JSON/CSV) goes to standard output or `--out`;
//! human-readable progress goes to standard error. Exit codes: 0 success,
//! 1 configuration error, 2 bound/assertion violation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use contention_bench::adversary::AdversarySpec;
use contention_bench::analysis::{
    check_lemma21, congest_slots, decompose_intervals, CongestMode, DecompositionKind,
};
use contention_bench::harness::{fit_constant, sweep, FitModel, TrialSummary};
use contention_bench::sim::types::ExecutionConfig;
use contention_bench::sim::run_execution;
use contention_bench::{Error, Result};

#[derive(Parser)]
#[command(name = "contention-bench", version, about = "Contention-resolution simulator and analysis harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one execution and print its summary as JSON.
    Run(RunArgs),
    /// Run a protocol over an n x d grid and emit CSV plus fit JSON.
    Sweep(SweepArgs),
    /// Check the success-probability bounds on random vectors.
    VerifyLemma(VerifyArgs),
    /// Fit a complexity constant to an existing sweep CSV.
    Fit(FitArgs),
    /// Interval / congest-slot diagnostics of a single execution.
    Decompose(DecomposeArgs),
}

#[derive(Args)]
struct ConfigSource {
    /// JSON file mirroring the execution config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Protocol id (used when no config file is given).
    #[arg(long)]
    protocol: Option<String>,
    /// Adversary preset id.
    #[arg(long, default_value = "none")]
    adversary: String,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    d: Option<u64>,
    #[arg(long)]
    c: Option<f64>,
    /// Seed override (applies on top of a config file too).
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigSource {
    fn load(&self) -> Result<ExecutionConfig> {
        let mut cfg = if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str::<ExecutionConfig>(&text)?
        } else {
            let protocol = self
                .protocol
                .clone()
                .ok_or_else(|| Error::Config("--protocol or --config required".into()))?;
            let n = self.n.ok_or_else(|| Error::Config("--n required".into()))?;
            let d = self.d.unwrap_or(0);
            let spec = AdversarySpec::from_id(&self.adversary, n, d)?;
            ExecutionConfig::new(&protocol, spec, n, d, 0)
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(c) = self.c {
            cfg.c = c;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: ConfigSource,
    /// Write the JSON summary here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    protocol: String,
    #[arg(long, default_value = "none")]
    adversary: String,
    /// Comma-separated n grid, e.g. 16,32,64.
    #[arg(long, value_delimiter = ',')]
    n: Vec<u32>,
    /// Comma-separated d grid.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    d: Vec<u64>,
    #[arg(long, default_value_t = 20)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4.0)]
    c: f64,
    /// Models to fit, by id.
    #[arg(long, value_delimiter = ',', default_value = "n_log_n_plus_d")]
    model: Vec<String>,
    /// CSV destination; fit JSON always goes to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct FitArgs {
    /// Sweep CSV produced by the sweep subcommand.
    #[arg(long)]
    csv: PathBuf,
    #[arg(long, default_value = "n_log_n_plus_d")]
    model: String,
    /// Which column to fit: active_slots or max_energy.
    #[arg(long, default_value = "active_slots")]
    measure: String,
}

#[derive(Args)]
struct DecomposeArgs {
    #[command(flatten)]
    source: ConfigSource,
    /// interference | complete-dynamic | complete-static
    #[arg(long, default_value = "complete-dynamic")]
    kind: String,
}

fn parse_model(id: &str) -> Result<FitModel> {
    match id {
        "n_log_n_plus_d" => Ok(FitModel::NLogNPlusD),
        "n_plus_d" => Ok(FitModel::NPlusD),
        "log2_sq_plus_log2_sq" => Ok(FitModel::Log2SqPlusLog2Sq),
        other => Err(Error::InvalidArgument(format!("unknown model `{other}`"))),
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<u8> {
    let cfg = args.source.load()?;
    let trace = run_execution(&cfg)?;
    let summary = TrialSummary::from_trace(&trace);
    emit(&args.out, &serde_json::to_string_pretty(&summary)?)?;
    Ok(0)
}

fn cmd_sweep(args: &SweepArgs) -> Result<u8> {
    let models = args
        .model
        .iter()
        .map(|m| parse_model(m))
        .collect::<Result<Vec<_>>>()?;
    let report = sweep(
        &args.protocol,
        &args.adversary,
        &args.n,
        &args.d,
        args.trials,
        args.seed,
        args.c,
        &models,
    )?;
    match &args.out {
        Some(path) => {
            std::fs::write(path, &report.csv)?;
            eprintln!("csv written to {}", path.display());
        }
        None => print!("{}", report.csv),
    }
    let fits = serde_json::json!({
        "active_slot_fits": report.active_slot_fits,
        "energy_fits": report.energy_fits,
    });
    if args.out.is_some() {
        println!("{}", serde_json::to_string_pretty(&fits)?);
    } else {
        eprintln!("{}", serde_json::to_string_pretty(&fits)?);
    }
    Ok(0)
}

fn cmd_verify(args: &VerifyArgs) -> Result<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut violations = 0u64;
    for _ in 0..args.samples {
        let len = rng.gen_range(0..=20);
        // Lower bounds need p_i <= 1/2; the upper bound is checked on a
        // second unrestricted vector.
        let small: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..=0.5)).collect();
        let wide: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..=1.0)).collect();
        if !check_lemma21(&small)?.holds {
            violations += 1;
        }
        if !check_lemma21(&wide)?.holds {
            violations += 1;
        }
    }
    println!("violations: {violations}");
    Ok(if violations == 0 { 0 } else { 2 })
}

fn cmd_fit(args: &FitArgs) -> Result<u8> {
    let model = parse_model(&args.model)?;
    let text = std::fs::read_to_string(&args.csv)?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::InvalidArgument("empty CSV".into()))?
        .split(',')
        .collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| Error::InvalidArgument(format!("missing CSV column `{name}`")))
    };
    let (ni, di, mi) = (col("n")?, col("d")?, col(&args.measure)?);
    let mut points = Vec::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::InvalidArgument(format!("bad CSV field `{s}`: {e}")))
        };
        points.push((parse(f[ni])? as u32, parse(f[di])? as u64, parse(f[mi])?));
    }
    let fit = fit_constant(&points, model)?;
    println!("{}", serde_json::to_string_pretty(&fit)?);
    Ok(0)
}

fn cmd_decompose(args: &DecomposeArgs) -> Result<u8> {
    let cfg = args.source.load()?;
    let trace = run_execution(&cfg)?;
    let kind = match args.kind.as_str() {
        "interference" => DecompositionKind::Interference,
        "complete-dynamic" => DecompositionKind::CompleteDynamic,
        "complete-static" => DecompositionKind::CompleteStatic,
        other => return Err(Error::InvalidArgument(format!("unknown kind `{other}`"))),
    };
    let mode = match kind {
        DecompositionKind::CompleteStatic => CongestMode::Static,
        _ => CongestMode::Dynamic,
    };
    let decomposition = decompose_intervals(&trace, kind)?;
    let congest = congest_slots(&trace, mode)?;
    let out = serde_json::json!({
        "config": trace.config,
        "decomposition": decomposition,
        "congest_slots": congest,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(0)
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::BudgetExceeded { .. } | Error::Analysis(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("CONTENTION_BENCH_THREADS") {
        if let Ok(k) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build_global();
        }
    }
    // Map argv errors to exit 1 (reserving 2 for bound violations);
    // --help/--version still exit 0.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::VerifyLemma(a) => cmd_verify(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Decompose(a) => cmd_decompose(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
