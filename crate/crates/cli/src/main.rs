use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mial_cli::commands::{cmd_report, cmd_run, cmd_serve, cmd_synth, ReportOptions, ServeOptions};
use mial_cli::{CliError, CliResult, Overrides, Preset, RunConfig};
use mial_core::data::SyntheticConfig;
use mial_core::eval::{TTestKind, WinOptions};
use mial_core::strategy::Strategy;

/// Multiple-instance active learning experiments.
#[derive(Parser, Debug)]
#[command(name = "mial", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment and write curves, NAULC, win table and session logs.
    Run(RunArgs),
    /// Generate a synthetic MIL-CSV dataset.
    Synth(SynthArgs),
    /// Aggregate result directories into mean curves and win tables.
    Report(ReportArgs),
    /// Start the annotation service.
    Serve(ServeArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model preset: sival, birds, newsgroups or synthetic.
    #[arg(long)]
    preset: Option<Preset>,
    /// MIL-CSV dataset, replacing the configured one.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Comma-separated strategies.
    #[arg(long, value_delimiter = ',')]
    strategies: Option<Vec<Strategy>>,
    #[arg(long)]
    repetitions: Option<usize>,
    /// Base seed; repetition r uses seed + r.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// TOML generator configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output MIL-CSV file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    name: Option<String>,
    /// Number of positive clusters.
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long)]
    negative_clusters: Option<usize>,
    #[arg(long)]
    witness_rate: Option<f64>,
    #[arg(long)]
    positive_bags: Option<usize>,
    #[arg(long)]
    negative_bags: Option<usize>,
    #[arg(long)]
    min_instances: Option<usize>,
    #[arg(long)]
    max_instances: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    spread: Option<f64>,
    #[arg(long)]
    domain: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Result directories (or results.json files).
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Grid resolution of the wins-versus-fraction table.
    #[arg(long)]
    fraction_steps: Option<usize>,
    /// Significance level of the win rule.
    #[arg(long)]
    alpha: Option<f64>,
    /// t-test variant: welch or pooled.
    #[arg(long)]
    ttest: Option<String>,
}

#[derive(Args, Debug)]
struct ServeArgs {
    /// Dataset directories or MIL-CSV files.
    #[arg(long = "datasets", required = true)]
    datasets: Vec<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: String,
    /// Directory of session event logs, replayed at start-up.
    #[arg(long)]
    state_dir: Option<PathBuf>,
    /// Default model settings for new sessions.
    #[arg(long, default_value = "synthetic")]
    preset: Preset,
    /// Accept datasets that violate the standard MIL assumption.
    #[arg(long)]
    lenient: bool,
}

fn run(args: RunArgs) -> CliResult<()> {
    let mut config = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    config.apply(&Overrides {
        preset: args.preset,
        dataset: args.dataset,
        strategies: args.strategies,
        repetitions: args.repetitions,
        seed: args.seed,
        output: args.out,
        jobs: args.jobs,
    });
    let outcome = cmd_run(&config)?;
    println!("{}", outcome.table.to_text());
    println!("wrote {} (config {})", outcome.out_dir.display(), outcome.config_hash);
    Ok(())
}

fn synth(args: SynthArgs) -> CliResult<()> {
    let mut spec: SyntheticConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => SyntheticConfig::default(),
    };
    macro_rules! set {
        ($($flag:ident => $field:ident),*) => {
            $(if let Some(v) = args.$flag { spec.$field = v; })*
        };
    }
    set!(name => name, clusters => positive_cluster_count, negative_clusters => negative_cluster_count,
         witness_rate => witness_rate, positive_bags => positive_bags, negative_bags => negative_bags,
         min_instances => min_instances, max_instances => max_instances, dim => feature_dim,
         spread => cluster_spread, domain => domain, seed => seed);
    let ds = cmd_synth(&spec, &args.out)?;
    println!(
        "wrote {} ({} bags, {} instances)",
        args.out.display(),
        ds.bag_count(),
        ds.instance_count()
    );
    Ok(())
}

fn report(args: ReportArgs) -> CliResult<()> {
    let kind = match args.ttest.as_deref() {
        None => None,
        Some("welch") => Some(TTestKind::Welch),
        Some("pooled") => Some(TTestKind::Pooled),
        Some(other) => return Err(CliError::Config(format!("unknown t-test `{other}`"))),
    };
    let wins = match (args.alpha, kind) {
        (None, None) => None,
        (alpha, kind) => {
            let d = WinOptions::default();
            Some(WinOptions {
                alpha: alpha.unwrap_or(d.alpha),
                kind: kind.unwrap_or(d.kind),
            })
        }
    };
    let outcome = cmd_report(&ReportOptions {
        inputs: args.inputs,
        out: args.out.clone(),
        fraction_steps: args.fraction_steps,
        wins,
    })?;
    println!("{}", outcome.table.to_text());
    println!("wrote {}", args.out.display());
    Ok(())
}

fn serve(args: ServeArgs) -> CliResult<()> {
    cmd_serve(&ServeOptions {
        datasets: args.datasets,
        addr: args.addr,
        state_dir: args.state_dir,
        preset: args.preset,
        strict: !args.lenient,
    })
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Synth(a) => synth(a),
        Command::Report(a) => report(a),
        Command::Serve(a) => serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
