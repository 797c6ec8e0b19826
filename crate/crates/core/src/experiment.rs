//! Repeated sessions over random train/test splits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{split_train_test, MilDataset};
use crate::error::{Error, Result};
use crate::eval::{CurveSet, ExperimentResult, RunRecord};
use crate::session::{run_session, QueryRecord, SessionConfig};
use crate::strategy::Strategy;

pub const DEFAULT_TRAIN_FRACTION: f64 = 2.0 / 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Template for every session; its strategy and seed are replaced per run.
    pub session: SessionConfig,
    pub strategies: Vec<Strategy>,
    pub repetitions: usize,
    pub base_seed: u64,
    pub train_fraction: f64,
    /// Group label carried into win tables.
    pub corpus: String,
}

impl ExperimentConfig {
    pub fn new(session: SessionConfig, strategies: Vec<Strategy>, repetitions: usize, base_seed: u64) -> Self {
        Self {
            session,
            strategies,
            repetitions,
            base_seed,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            corpus: String::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be at least 1".into()));
        }
        if self.strategies.is_empty() {
            return Err(Error::InvalidConfig("at least one strategy is required".into()));
        }
        for (i, s) in self.strategies.iter().enumerate() {
            if self.strategies[..i].contains(s) {
                return Err(Error::InvalidConfig(format!("strategy {s} listed twice")));
            }
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidConfig("train_fraction must lie in (0, 1)".into()));
        }
        for &s in &self.strategies {
            self.session.with_strategy(s).validate()?;
        }
        Ok(())
    }

    /// Seed of repetition `r`, used for both its split and its sessions.
    pub fn seed_of(&self, repetition: usize) -> u64 {
        self.base_seed.wrapping_add(repetition as u64)
    }
}

/// Results plus the per-query log of every run, aligned with
/// `result.runs`.
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub result: ExperimentResult,
    pub logs: Vec<Vec<QueryRecord>>,
}

/// Runs every strategy on the same split for each repetition.
///
/// Sessions run in parallel on the current rayon pool. A failing session is
/// recorded in its run and does not stop the others.
pub fn run_experiment(dataset: &MilDataset, config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let splits: Vec<std::result::Result<(MilDataset, MilDataset), String>> = (0..config.repetitions)
        .into_par_iter()
        .map(|r| {
            split_train_test(dataset, config.train_fraction, config.seed_of(r)).map_err(|e| e.to_string())
        })
        .collect();
    let jobs: Vec<(usize, Strategy)> = (0..config.repetitions)
        .flat_map(|r| config.strategies.iter().map(move |&s| (r, s)))
        .collect();
    let outcomes: Vec<(RunRecord, Vec<QueryRecord>)> = jobs
        .into_par_iter()
        .map(|(r, strategy)| {
            let seed = config.seed_of(r);
            let mut session = config.session.with_strategy(strategy);
            session.seed = seed;
            let outcome = splits[r]
                .as_ref()
                .map_err(|e| e.clone())
                .and_then(|(train, test)| run_session(train, Some(test), &session).map_err(|e| e.to_string()));
            let (curves, query_log, records, error) = match outcome {
                Ok(s) => (s.curves, s.query_log, s.records, None),
                Err(e) => (CurveSet::default(), Vec::new(), Vec::new(), Some(e)),
            };
            let run = RunRecord {
                repetition: r,
                seed,
                strategy,
                curves,
                query_log,
                error,
            };
            (run, records)
        })
        .collect();
    let (runs, logs) = outcomes.into_iter().unzip();
    let corpus = if config.corpus.is_empty() {
        dataset.name().to_string()
    } else {
        config.corpus.clone()
    };
    Ok(ExperimentOutput {
        result: ExperimentResult {
            corpus,
            dataset: dataset.name().to_string(),
            strategies: config.strategies.clone(),
            repetitions: config.repetitions,
            runs,
        },
        logs,
    })
}
