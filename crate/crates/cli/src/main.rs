use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::info;

use dogiu::harness::acceptance::{run_acceptance, AcceptanceOptions};
use dogiu::harness::{
    emit_csv, run_monte_carlo_with, write_gap_csv, write_scene_csv, write_trace_csv, ExperimentConfig, Instrumentation,
};
use dogiu::submodular::{
    brute_force_optimum, check_monotone_submodular, check_second_order_submodular, coin, curvature,
    DEFAULT_ENUMERATION_CAP, DEFAULT_EXHAUSTIVE_CAP,
};
use dogiu::{CommGraph, Result, SetFunction, TabularInstance};

#[derive(Parser)]
#[command(name = "dogiu", version, about = "Delayed online greedy coordination simulator")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo runs of one configuration.
    Run(RunArgs),
    /// The same experiment over several delay bounds, for both algorithms.
    Sweep(SweepArgs),
    /// Run the acceptance suite; exits nonzero if any criterion fails.
    Accept(AcceptArgs),
    /// Structural checks, curvature, optimum and coins of a tabular instance.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct Common {
    /// Flat TOML experiment file; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    rho: Option<f64>,
    /// Number of Monte-Carlo runs.
    #[arg(long)]
    seeds: Option<usize>,
    /// Base seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Per-agent trace CSVs of the first run.
    #[arg(long)]
    traces: bool,
    /// Per-round asynchrony gap CSV of the first run.
    #[arg(long)]
    gaps: bool,
    /// Scene CSV (targets and camera headings per round) of the first run.
    #[arg(long)]
    scene: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_parser = ["dog-iu", "dog"])]
    algo: Option<String>,
    #[arg(long)]
    dbar: Option<u64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', required = true)]
    dbar: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "dog-iu,dog")]
    algos: Vec<String>,
}

#[derive(Args)]
struct AcceptArgs {
    /// Only these criteria, e.g. `--only 3,4,5`.
    #[arg(long, value_delimiter = ',')]
    only: Vec<u8>,
    /// Scale the asynchrony gap bound before checking it.
    #[arg(long, default_value_t = 1.0)]
    gap_bound_factor: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Also write the report to this file.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Directed communication edges `from>to, ...` for the coin report.
    #[arg(long)]
    edges: Option<String>,
    #[arg(long, default_value_t = DEFAULT_EXHAUSTIVE_CAP)]
    cap: usize,
}

fn base_config(common: &Common) -> Result<ExperimentConfig> {
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(rho) = common.rho {
        config.rho = rho;
    }
    if let Some(n) = common.seeds {
        config.runs = n;
    }
    if let Some(s) = common.seed {
        config.seed = s;
    }
    if let Some(t) = common.horizon {
        config.horizon = t;
    }
    Ok(config)
}

fn execute(config: &ExperimentConfig, common: &Common) -> Result<()> {
    config.validate()?;
    let instr = Instrumentation {
        actions: common.scene,
        traces: common.traces,
        gaps: common.gaps,
        ..Instrumentation::default()
    };
    let stem = format!("{}_dbar{}", config.algorithm, config.dbar);
    let started = Instant::now();
    let mc = run_monte_carlo_with(config, instr)?;
    let csv = common.out.join(format!("{stem}.csv"));
    emit_csv(&mc.stats, &csv)?;

    let first = &mc.runs[0];
    if let Some(traces) = &first.traces {
        for (i, rows) in traces.iter().enumerate() {
            let path = common.out.join("traces").join(format!("{stem}_seed{}_agent{i}.csv", first.seed));
            write_trace_csv(&path, rows)?;
        }
    }
    if let Some(gaps) = &first.gaps {
        write_gap_csv(&common.out.join(format!("{stem}_seed{}_gaps.csv", first.seed)), gaps)?;
    }
    if let Some(actions) = &first.actions {
        write_scene_csv(config, first.seed, actions, &common.out.join(format!("{stem}_seed{}_scene.csv", first.seed)))?;
    }
    let clamped: u64 = mc.runs.iter().map(|r| r.clamped_rewards).sum();
    let staleness = mc.runs.iter().map(|r| r.max_staleness).max().unwrap_or(0);
    println!(
        "{stem}: {} runs x {} rounds, last-500 running average {:.3} targets, max staleness {staleness}, clamped rewards {clamped} ({:.1}s) -> {}",
        mc.runs.len(),
        config.horizon,
        mc.stats.tail_mean(500),
        started.elapsed().as_secs_f64(),
        csv.display()
    );
    Ok(())
}

fn write_config(config: &ExperimentConfig, out: &Path, name: &str) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| dogiu::Error::io(out, e))?;
    let path = out.join(name);
    std::fs::write(&path, config.to_toml()).map_err(|e| dogiu::Error::io(&path, e))
}

fn run(args: RunArgs) -> Result<()> {
    let mut config = base_config(&args.common)?;
    if let Some(a) = args.algo {
        config.algorithm = a;
    }
    if let Some(d) = args.dbar {
        config.dbar = d;
    }
    config.validate()?;
    write_config(&config, &args.common.out, &format!("{}_dbar{}.toml", config.algorithm, config.dbar))?;
    execute(&config, &args.common)
}

fn sweep(args: SweepArgs) -> Result<()> {
    let base = base_config(&args.common)?;
    for &dbar in &args.dbar {
        for algo in &args.algos {
            let config = ExperimentConfig {
                algorithm: algo.clone(),
                dbar,
                ..base.clone()
            };
            config.validate()?;
            info!("sweep: {algo} with dbar {dbar}");
            execute(&config, &args.common)?;
        }
    }
    Ok(())
}

fn accept(args: AcceptArgs) -> Result<bool> {
    let opts = AcceptanceOptions {
        only: args.only,
        gap_bound_factor: args.gap_bound_factor,
        base_seed: args.seed,
    };
    let report = run_acceptance(&opts, |r| println!("{r}"))?;
    let failures = report.failures();
    if failures.is_empty() {
        println!("all {} criteria passed", report.results.len());
    } else {
        let names: Vec<_> = failures.iter().map(|r| format!("C{} {}", r.id, r.name)).collect();
        println!("FAILED: {}", names.join(", "));
    }
    if let Some(path) = args.report {
        std::fs::write(&path, format!("{report}\n")).map_err(|e| dogiu::Error::io(&path, e))?;
    }
    Ok(report.all_passed())
}

fn analyze(args: AnalyzeArgs) -> Result<()> {
    let f = TabularInstance::load(&args.instance)?;
    let ground = f.ground();
    println!(
        "{} agents, action counts {:?}, {} ground elements, {} domain",
        f.agent_count(),
        f.action_counts(),
        ground.len(),
        if f.is_powerset() { "powerset" } else { "one action per agent" }
    );
    println!("f(ground) = {}", f.value(ground)?);
    for (label, report) in [
        ("monotone submodular", check_monotone_submodular(&f, ground, args.cap)),
        ("second-order submodular", check_second_order_submodular(&f, ground, args.cap)),
    ] {
        match report {
            Ok(r) if r.holds => println!("{label}: yes"),
            Ok(r) => println!("{label}: no, {}", r.witness.expect("violations carry a witness")),
            Err(e) => println!("{label}: skipped ({e})"),
        }
    }
    match curvature(&f, ground) {
        Ok(c) => {
            println!("curvature = {}", c.kappa);
            if !c.excluded.is_empty() {
                let names: Vec<_> = c.excluded.iter().map(ToString::to_string).collect();
                println!("  excluded zero singletons: {}", names.join(", "));
            }
        }
        Err(e) => println!("curvature: skipped ({e})"),
    }
    let (best, value) = brute_force_optimum(&f, f.action_counts(), DEFAULT_ENUMERATION_CAP)?;
    println!("optimum {best} with value {value}");
    let graph = match &args.edges {
        Some(spec) => CommGraph::parse_edges(f.agent_count(), spec)?,
        None => CommGraph::isolated(f.agent_count()),
    };
    let mut total = 0.0;
    for i in 0..f.agent_count() {
        let hood: Vec<usize> = graph.in_neighbors(i).iter().copied().collect();
        let c = coin(&f, i, &best, &hood)?;
        total += c;
        println!("coin agent {i} (neighbors {hood:?}) = {c}");
    }
    println!("coin sum = {total}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let outcome = match cli.command {
        Command::Run(a) => run(a).map(|()| true),
        Command::Sweep(a) => sweep(a).map(|()| true),
        Command::Accept(a) => accept(a),
        Command::Analyze(a) => analyze(a).map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
