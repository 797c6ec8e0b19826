//! Learning-curve metrics, significance tests and win tables.

mod metrics;
mod ttest;
mod wins;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use self::metrics::{auc_pr, f1_score, naulc, value_at_fraction};
pub use self::ttest::{t_test, welch_t_test, Comparison, TTestKind, TTestResult};
pub use self::wins::{
    count_wins, winners, wins_vs_query_fraction, write_fraction_wins_csv, FractionWins, ProblemWinners, WinOptions,
    WinTable,
};

use crate::error::{Error, Result};
use crate::strategy::Strategy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    F1,
    AucPr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    /// Transductive: the training pool.
    Train,
    /// Inductive: held-out bags.
    Test,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::F1, Metric::AucPr];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::F1 => "f1",
            Metric::AucPr => "auc_pr",
        }
    }
}

impl Split {
    pub const ALL: [Split; 2] = [Split::Train, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown metric `{s}`")))
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown split `{s}`")))
    }
}

/// One metric on one split, measured after every query (index 0 is the
/// model trained before any query).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub metric: Metric,
    pub split: Split,
    pub values: Vec<f64>,
}

impl LearningCurve {
    pub fn new(metric: Metric, split: Split) -> Self {
        Self {
            metric,
            split,
            values: Vec::new(),
        }
    }

    /// Number of queries covered.
    pub fn queries(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn naulc(&self) -> Result<f64> {
        naulc(&self.values)
    }
}

/// The curves of one session, in `Split::ALL x Metric::ALL` order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CurveSet {
    pub curves: Vec<LearningCurve>,
}

impl CurveSet {
    /// Empty curves for both metrics on the selected splits.
    pub fn new(train: bool, test: bool) -> Self {
        let splits: Vec<Split> = Split::ALL
            .into_iter()
            .filter(|s| match s {
                Split::Train => train,
                Split::Test => test,
            })
            .collect();
        Self {
            curves: splits
                .into_iter()
                .flat_map(|s| Metric::ALL.into_iter().map(move |m| LearningCurve::new(m, s)))
                .collect(),
        }
    }

    pub fn get(&self, split: Split, metric: Metric) -> Option<&LearningCurve> {
        self.curves.iter().find(|c| c.split == split && c.metric == metric)
    }

    pub fn push(&mut self, split: Split, metric: Metric, value: f64) {
        if let Some(c) = self
            .curves
            .iter_mut()
            .find(|c| c.split == split && c.metric == metric)
        {
            c.values.push(value);
        }
    }

    /// Last value of every curve.
    pub fn last(&self) -> Vec<(Split, Metric, f64)> {
        self.curves
            .iter()
            .filter_map(|c| c.values.last().map(|&v| (c.split, c.metric, v)))
            .collect()
    }
}

/// One session of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub repetition: usize,
    pub seed: u64,
    pub strategy: Strategy,
    pub curves: CurveSet,
    /// Queried bag ids in order.
    pub query_log: Vec<String>,
    /// Set when the session aborted; the curves then stop early.
    pub error: Option<String>,
}

impl RunRecord {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

/// All sessions run on one problem. Runs are ordered by repetition, then by
/// strategy in the order of `strategies`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    /// Group label used in win tables, e.g. a benchmark collection.
    pub corpus: String,
    pub dataset: String,
    pub strategies: Vec<Strategy>,
    pub repetitions: usize,
    pub runs: Vec<RunRecord>,
}

impl ExperimentResult {
    pub fn runs_of(&self, strategy: Strategy) -> impl Iterator<Item = &RunRecord> + '_ {
        self.runs.iter().filter(move |r| r.strategy == strategy)
    }

    pub fn failures(&self) -> impl Iterator<Item = &RunRecord> + '_ {
        self.runs.iter().filter(|r| !r.succeeded())
    }

    /// NAULC of every successful run of `strategy`, in repetition order.
    pub fn naulc_samples(&self, strategy: Strategy, split: Split, metric: Metric) -> Vec<f64> {
        self.runs_of(strategy)
            .filter(|r| r.succeeded())
            .filter_map(|r| r.curves.get(split, metric))
            .filter_map(|c| c.naulc().ok())
            .collect()
    }

    /// Curve values of every successful run of `strategy`.
    pub fn curve_samples(&self, strategy: Strategy, split: Split, metric: Metric) -> Vec<&[f64]> {
        self.runs_of(strategy)
            .filter(|r| r.succeeded())
            .filter_map(|r| r.curves.get(split, metric))
            .filter(|c| !c.values.is_empty())
            .map(|c| c.values.as_slice())
            .collect()
    }

    /// Long-format per-query table:
    /// `dataset,strategy,repetition,seed,split,metric,query,value`.
    pub fn write_curves_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_curves_csv(std::slice::from_ref(self), writer)
    }

    fn curves_rows<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        for run in &self.runs {
            for curve in &run.curves.curves {
                for (q, v) in curve.values.iter().enumerate() {
                    w.write_record([
                        self.dataset.as_str(),
                        run.strategy.as_str(),
                        &run.repetition.to_string(),
                        &run.seed.to_string(),
                        curve.split.as_str(),
                        curve.metric.as_str(),
                        &q.to_string(),
                        &v.to_string(),
                    ])
                    .map_err(csv_error)?;
                }
            }
        }
        Ok(())
    }

    /// Per-run table: `dataset,strategy,repetition,seed,split,metric,naulc,status`.
    pub fn write_naulc_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_naulc_csv(std::slice::from_ref(self), writer)
    }

    fn naulc_rows<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        for run in &self.runs {
            for curve in &run.curves.curves {
                let value = match (run.succeeded(), curve.naulc()) {
                    (true, Ok(v)) => v.to_string(),
                    _ => String::new(),
                };
                let status = if run.succeeded() { "ok" } else { "failed" };
                w.write_record([
                    self.dataset.as_str(),
                    run.strategy.as_str(),
                    &run.repetition.to_string(),
                    &run.seed.to_string(),
                    curve.split.as_str(),
                    curve.metric.as_str(),
                    &value,
                    status,
                ])
                .map_err(csv_error)?;
            }
        }
        Ok(())
    }

    /// Mean and sample standard deviation per query index:
    /// `dataset,strategy,split,metric,query,runs,mean,std`. Runs shorter than
    /// a query index do not contribute to it.
    pub fn write_mean_curves_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_mean_curves_csv(std::slice::from_ref(self), writer)
    }

    fn mean_curves_rows<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        for &strategy in &self.strategies {
            for split in Split::ALL {
                for metric in Metric::ALL {
                    let samples = self.curve_samples(strategy, split, metric);
                    let longest = samples.iter().map(|s| s.len()).max().unwrap_or(0);
                    for q in 0..longest {
                        let at: Vec<f64> =
                            samples.iter().filter_map(|s| s.get(q).copied()).collect();
                        let n = at.len() as f64;
                        let mean = at.iter().sum::<f64>() / n;
                        let std = if at.len() > 1 {
                            (at.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0))
                                .sqrt()
                        } else {
                            0.0
                        };
                        w.write_record([
                            self.dataset.as_str(),
                            strategy.as_str(),
                            split.as_str(),
                            metric.as_str(),
                            &q.to_string(),
                            &at.len().to_string(),
                            &mean.to_string(),
                            &std.to_string(),
                        ])
                        .map_err(csv_error)?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Per-query table of several problems, one header.
pub fn write_curves_csv<W: Write>(results: &[ExperimentResult], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "dataset", "strategy", "repetition", "seed", "split", "metric", "query", "value",
    ])
    .map_err(csv_error)?;
    for result in results {
        result.curves_rows(&mut w)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-run NAULC table of several problems, one header.
pub fn write_naulc_csv<W: Write>(results: &[ExperimentResult], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "dataset", "strategy", "repetition", "seed", "split", "metric", "naulc", "status",
    ])
    .map_err(csv_error)?;
    for result in results {
        result.naulc_rows(&mut w)?;
    }
    w.flush()?;
    Ok(())
}

/// Mean curves of several problems, one header.
pub fn write_mean_curves_csv<W: Write>(results: &[ExperimentResult], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "dataset", "strategy", "split", "metric", "query", "runs", "mean", "std",
    ])
    .map_err(csv_error)?;
    for result in results {
        result.mean_curves_rows(&mut w)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Serialization(format!("{other:?}")),
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Builds a result whose runs carry the given train-F1 curves; other
    /// curves are copies of it.
    pub(crate) fn result_from_curves(
        dataset: &str,
        curves: &[(Strategy, Vec<Vec<f64>>)],
    ) -> ExperimentResult {
        let repetitions = curves.iter().map(|(_, c)| c.len()).max().unwrap_or(0);
        let mut runs = Vec::new();
        for r in 0..repetitions {
            for (strategy, per_rep) in curves {
                let mut set = CurveSet::new(true, true);
                for c in &mut set.curves {
                    c.values = per_rep[r].clone();
                }
                runs.push(RunRecord {
                    repetition: r,
                    seed: r as u64,
                    strategy: *strategy,
                    curves: set,
                    query_log: Vec::new(),
                    error: None,
                });
            }
        }
        ExperimentResult {
            corpus: "toy".into(),
            dataset: dataset.into(),
            strategies: curves.iter().map(|(s, _)| *s).collect(),
            repetitions,
            runs,
        }
    }

    #[test]
    fn curve_set_layout() {
        let mut set = CurveSet::new(true, true);
        assert_eq!(set.curves.len(), 4);
        set.push(Split::Test, Metric::AucPr, 0.25);
        assert_eq!(set.get(Split::Test, Metric::AucPr).unwrap().values, vec![0.25]);
        assert!(set.get(Split::Train, Metric::F1).unwrap().values.is_empty());
        assert_eq!(CurveSet::new(true, false).curves.len(), 2);
        assert!(CurveSet::new(true, false).get(Split::Test, Metric::F1).is_none());
        assert_eq!(CurveSet::new(false, true).curves[0].split, Split::Test);
    }

    #[test]
    fn naulc_samples_skip_failures() {
        let mut res = result_from_curves(
            "d",
            &[(Strategy::Agin, vec![vec![0.0, 1.0], vec![1.0, 1.0]])],
        );
        assert_eq!(res.naulc_samples(Strategy::Agin, Split::Train, Metric::F1), vec![0.5, 1.0]);
        res.runs[1].error = Some("solver".into());
        assert_eq!(res.naulc_samples(Strategy::Agin, Split::Train, Metric::F1), vec![0.5]);
        assert_eq!(res.failures().count(), 1);
    }

    #[test]
    fn csv_exports() {
        let res = result_from_curves(
            "d",
            &[
                (Strategy::Random, vec![vec![0.0, 1.0], vec![1.0, 1.0, 1.0]]),
                (Strategy::Cbas, vec![vec![0.5, 0.5], vec![0.0, 0.0, 0.5]]),
            ],
        );
        let mut buf = Vec::new();
        res.write_curves_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        // 2 strategies, 2 runs of lengths 2 and 3, 4 curves each
        assert_eq!(text.lines().count(), 1 + 2 * 4 * (2 + 3));
        assert!(text.starts_with("dataset,strategy,repetition,seed,split,metric,query,value\n"));

        let mut buf = Vec::new();
        res.write_naulc_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 4 * 4);
        assert!(text.contains("d,random,0,0,train,f1,0.5,ok"));

        let mut buf = Vec::new();
        res.write_mean_curves_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("d,random,train,f1,0,2,0.5,"));
        assert!(text.contains("d,random,train,f1,2,1,1,0"));
    }
}
