//! The `run`, `synth`, `report` and `serve` subcommands.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use mial_core::data::{generate_synthetic, load_dataset, write_mil_csv, MilDataset, SyntheticConfig};
use mial_core::eval::{
    count_wins, wins_vs_query_fraction, write_curves_csv, write_fraction_wins_csv,
    write_mean_curves_csv, write_naulc_csv, ExperimentResult, FractionWins, WinOptions, WinTable,
};
use mial_core::experiment::{run_experiment, ExperimentOutput};
use mial_core::session::write_session_log;
use mial_service::{AppState, ServiceDefaults};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Preset, ResolvedRun, RunConfig};
use crate::error::{CliError, CliResult};
use crate::provenance::{create_parent, Provenance};

pub const RESULTS_FILE: &str = "results.json";

/// Contents of `results.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    #[serde(flatten)]
    pub provenance: Provenance,
    pub config: RunConfig,
    pub result: ExperimentResult,
}

/// First line of every session log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    #[serde(flatten)]
    pub provenance: Provenance,
    pub dataset: String,
    pub strategy: String,
    pub repetition: usize,
    pub session_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Runs `f` on a pool of `jobs` threads, or on the global pool.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub result: ExperimentResult,
    pub table: WinTable,
    pub config_hash: String,
}

/// Executes an experiment and writes its artifacts under the configured
/// output directory. Failed sessions are written out too, then reported as
/// an error.
pub fn cmd_run(config: &RunConfig) -> CliResult<RunOutcome> {
    let resolved = config.resolve()?;
    let output = with_jobs(resolved.config.jobs, || {
        run_experiment(&resolved.dataset, &resolved.experiment)
    })??;
    let table = write_run(&resolved, &output)?;
    let failures: Vec<_> = output.result.failures().collect();
    if let Some(first) = failures.first() {
        return Err(CliError::RunsFailed {
            failed: failures.len(),
            total: output.result.runs.len(),
            first: first.error.clone().unwrap_or_default(),
        });
    }
    Ok(RunOutcome {
        out_dir: resolved.config.output.clone(),
        result: output.result,
        table,
        config_hash: resolved.config_hash,
    })
}

fn write_run(resolved: &ResolvedRun, output: &ExperimentOutput) -> CliResult<WinTable> {
    let dir = &resolved.config.output;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let provenance = Provenance::new(&resolved.config_hash, resolved.config.seed);
    let result = &output.result;

    write_json(
        &dir.join(RESULTS_FILE),
        &ResultsFile {
            provenance: provenance.clone(),
            config: resolved.config.clone(),
            result: result.clone(),
        },
    )?;
    provenance.write_commented(&dir.join("curves.csv"), |w| {
        Ok(write_curves_csv(std::slice::from_ref(result), w)?)
    })?;
    provenance.write_commented(&dir.join("naulc.csv"), |w| {
        Ok(write_naulc_csv(std::slice::from_ref(result), w)?)
    })?;
    let table = count_wins(std::slice::from_ref(result), &resolved.wins)?;
    write_table(&provenance, dir, &table)?;

    let logs = dir.join("logs");
    for (run, records) in result.runs.iter().zip(&output.logs) {
        let path = logs.join(format!("{}-r{:03}.jsonl", run.strategy, run.repetition));
        let header = LogHeader {
            provenance: provenance.clone(),
            dataset: result.dataset.clone(),
            strategy: run.strategy.to_string(),
            repetition: run.repetition,
            session_seed: run.seed,
            error: run.error.clone(),
        };
        write_file(&path, |w| {
            serde_json::to_writer(&mut *w, &header).map_err(|e| CliError::Core(mial_core::Error::Serialization(e.to_string())))?;
            w.write_all(b"\n").map_err(|e| CliError::io(&path, e))?;
            Ok(write_session_log(records, w)?)
        })?;
    }
    Ok(table)
}

fn write_table(provenance: &Provenance, dir: &Path, table: &WinTable) -> CliResult<()> {
    provenance.write_commented(&dir.join("wins.csv"), |w| Ok(table.write_csv(w)?))?;
    provenance.write_commented(&dir.join("wins.txt"), |w| {
        w.write_all(table.to_text().as_bytes())
            .map_err(|e| CliError::io(&dir.join("wins.txt"), e))
    })
}

fn write_file<F>(path: &Path, body: F) -> CliResult<()>
where
    F: FnOnce(&mut dyn Write) -> CliResult<()>,
{
    create_parent(path)?;
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)?;
    w.flush().map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)
            .map_err(|e| CliError::Core(mial_core::Error::Serialization(e.to_string())))?;
        w.write_all(b"\n").map_err(|e| CliError::io(path, e))
    })
}

/// Generates a dataset and writes it as MIL-CSV with a provenance header.
pub fn cmd_synth(spec: &SyntheticConfig, out: &Path) -> CliResult<MilDataset> {
    spec.validate()?;
    let dataset = generate_synthetic(spec)?;
    let json = serde_json::to_vec(spec).map_err(|e| CliError::Config(e.to_string()))?;
    let provenance = Provenance::new(hex::encode(&Sha256::digest(&json)[..8]), spec.seed);
    provenance.write_commented(out, |w| Ok(write_mil_csv(&dataset, w)?))?;
    Ok(dataset)
}

#[derive(Clone, Debug, Default)]
pub struct ReportOptions {
    /// Result directories or `results.json` files.
    pub inputs: Vec<PathBuf>,
    pub out: PathBuf,
    pub fraction_steps: Option<usize>,
    pub wins: Option<WinOptions>,
}

#[derive(Clone, Debug)]
pub struct ReportOutcome {
    pub results: Vec<ExperimentResult>,
    pub table: WinTable,
    pub fractions: Vec<FractionWins>,
}

pub fn load_results(input: &Path) -> CliResult<ResultsFile> {
    let path = if input.is_dir() {
        input.join(RESULTS_FILE)
    } else {
        input.to_path_buf()
    };
    if !path.is_file() {
        return Err(CliError::Config(format!("no results at {}", path.display())));
    }
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::Core(mial_core::Error::Serialization(format!("{}: {e}", path.display())))
    })
}

/// Aggregates finished runs into mean curves, wins against the fraction of
/// queries performed, and the win table.
pub fn cmd_report(options: &ReportOptions) -> CliResult<ReportOutcome> {
    if options.inputs.is_empty() {
        return Err(CliError::Config("report needs at least one results directory".into()));
    }
    let files = options
        .inputs
        .iter()
        .map(|p| load_results(p))
        .collect::<CliResult<Vec<_>>>()?;
    let first = &files[0].config;
    let same = |f: &ResultsFile| {
        f.config.alpha == first.alpha
            && f.config.ttest == first.ttest
            && f.config.fraction_steps == first.fraction_steps
    };
    let consistent = files.iter().all(same);
    let wins = options.wins.unwrap_or(if consistent {
        WinOptions {
            alpha: first.alpha,
            kind: first.ttest,
        }
    } else {
        WinOptions::default()
    });
    let steps = options
        .fraction_steps
        .unwrap_or(if consistent { first.fraction_steps } else { 20 });
    if steps == 0 {
        return Err(CliError::Config("fraction steps must be at least 1".into()));
    }
    let grid: Vec<f64> = (0..=steps).map(|k| k as f64 / steps as f64).collect();
    let results: Vec<ExperimentResult> = files.iter().map(|f| f.result.clone()).collect();
    let provenance = Provenance::merged(&files.iter().map(|f| f.provenance.clone()).collect::<Vec<_>>());

    let out = &options.out;
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    provenance.write_commented(&out.join("mean_curves.csv"), |w| {
        Ok(write_mean_curves_csv(&results, w)?)
    })?;
    let fractions = wins_vs_query_fraction(&results, &grid, &wins)?;
    provenance.write_commented(&out.join("wins_vs_fraction.csv"), |w| {
        Ok(write_fraction_wins_csv(&fractions, w)?)
    })?;
    let table = count_wins(&results, &wins)?;
    write_table(&provenance, out, &table)?;
    Ok(ReportOutcome {
        results,
        table,
        fractions,
    })
}

#[derive(Clone, Debug)]
pub struct ServeOptions {
    /// Directories of `*.csv` files, or single files.
    pub datasets: Vec<PathBuf>,
    pub addr: String,
    pub state_dir: Option<PathBuf>,
    pub preset: Preset,
    pub strict: bool,
}

/// Builds the service state: datasets, defaults and restored sessions.
pub fn service_state(options: &ServeOptions) -> CliResult<AppState> {
    let (kernel, base_cost) = options.preset.model();
    let mut state = AppState::new(ServiceDefaults { kernel, base_cost });
    for path in &options.datasets {
        if path.is_dir() {
            state
                .load_datasets(path, options.strict)
                .map_err(|e| CliError::Service(e.to_string()))?;
        } else if path.is_file() {
            state.add_dataset(load_dataset(path, options.strict)?);
        } else {
            return Err(CliError::Config(format!("dataset {} not found", path.display())));
        }
    }
    if let Some(dir) = &options.state_dir {
        state = state
            .with_log_dir(dir)
            .map_err(|e| CliError::Service(e.to_string()))?;
        let restored = state.restore().map_err(|e| CliError::Service(e.to_string()))?;
        tracing::info!(restored, "sessions restored from event logs");
    }
    Ok(state)
}

/// Starts the annotation service and blocks until Ctrl-C.
pub fn cmd_serve(options: &ServeOptions) -> CliResult<()> {
    let state = Arc::new(service_state(options)?);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Service(e.to_string()))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&options.addr)
            .await
            .map_err(|e| CliError::Config(format!("cannot bind {}: {e}", options.addr)))?;
        eprintln!("listening on {}", listener.local_addr().map_err(|e| CliError::Service(e.to_string()))?);
        mial_service::serve(listener, state)
            .await
            .map_err(|e| CliError::Service(e.to_string()))
    })
}
