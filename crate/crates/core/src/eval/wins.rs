use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::metrics::value_at_fraction;
use super::ttest::{t_test, Comparison, TTestKind};
use super::{csv_error, ExperimentResult, Metric, Split};
use crate::error::Result;
use crate::strategy::Strategy;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WinOptions {
    pub alpha: f64,
    pub kind: TTestKind,
}

impl Default for WinOptions {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            kind: TTestKind::Welch,
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Applies the win rule to one comparison.
///
/// The strategy with the highest mean wins (the first listed on a tie), and
/// so does every strategy whose sample is not significantly worse than the
/// leader's. With fewer than two values on either side no test is possible
/// and only strategies matching the top mean exactly win. Strategies with an
/// empty sample never win.
pub fn winners(samples: &[(Strategy, Vec<f64>)], options: &WinOptions) -> Result<Vec<Strategy>> {
    let present: Vec<(Strategy, &[f64], f64)> = samples
        .iter()
        .filter(|(_, s)| !s.is_empty())
        .map(|(st, s)| (*st, s.as_slice(), mean(s)))
        .collect();
    let Some(best) = present
        .iter()
        .copied()
        .reduce(|best, x| if x.2 > best.2 { x } else { best })
    else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    for &(strategy, sample, m) in &present {
        let wins = if strategy == best.0 {
            true
        } else if sample.len() >= 2 && best.1.len() >= 2 {
            t_test(best.1, sample, options.alpha, options.kind)?.outcome != Comparison::ABetter
        } else {
            m == best.2
        };
        if wins {
            out.push(strategy);
        }
    }
    Ok(out)
}

/// Winners of one (problem, split, metric) comparison on NAULC.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemWinners {
    pub corpus: String,
    pub dataset: String,
    pub split: Split,
    pub metric: Metric,
    pub means: Vec<(Strategy, f64)>,
    pub winners: Vec<Strategy>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WinTable {
    pub strategies: Vec<Strategy>,
    pub problems: Vec<ProblemWinners>,
}

impl WinTable {
    /// Win count, over one corpus or all of them.
    pub fn wins(&self, corpus: Option<&str>, split: Split, metric: Metric, strategy: Strategy) -> usize {
        self.problems
            .iter()
            .filter(|p| corpus.is_none_or(|c| p.corpus == c))
            .filter(|p| p.split == split && p.metric == metric)
            .filter(|p| p.winners.contains(&strategy))
            .count()
    }

    /// Corpora in first-appearance order.
    pub fn corpora(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for p in &self.problems {
            if !out.contains(&p.corpus) {
                out.push(p.corpus.clone());
            }
        }
        out
    }

    fn rows(&self) -> Vec<(Split, String, Metric, Option<String>)> {
        let mut corpora: Vec<Option<String>> = self.corpora().into_iter().map(Some).collect();
        corpora.push(None);
        let mut rows = Vec::new();
        for split in Split::ALL {
            for corpus in &corpora {
                for metric in Metric::ALL {
                    let name = corpus.clone().unwrap_or_else(|| "total".into());
                    rows.push((split, name, metric, corpus.clone()));
                }
            }
        }
        rows
    }

    /// `split,corpus,metric,<strategy>...` with one row per corpus and a
    /// `total` row per split and metric.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["split".to_string(), "corpus".into(), "metric".into()];
        header.extend(self.strategies.iter().map(|s| s.to_string()));
        w.write_record(&header).map_err(csv_error)?;
        for (split, name, metric, corpus) in self.rows() {
            let mut record = vec![split.to_string(), name, metric.to_string()];
            record.extend(
                self.strategies
                    .iter()
                    .map(|&s| self.wins(corpus.as_deref(), split, metric, s).to_string()),
            );
            w.write_record(&record).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    /// The same table as aligned text.
    pub fn to_text(&self) -> String {
        let mut header = vec!["split".to_string(), "corpus".into(), "metric".into()];
        header.extend(self.strategies.iter().map(|s| s.to_string()));
        let mut table = vec![header];
        for (split, name, metric, corpus) in self.rows() {
            let mut row = vec![split.to_string(), name, metric.to_string()];
            row.extend(
                self.strategies
                    .iter()
                    .map(|&s| self.wins(corpus.as_deref(), split, metric, s).to_string()),
            );
            table.push(row);
        }
        let widths: Vec<usize> = (0..table[0].len())
            .map(|c| table.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &table {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (cell, &w))| {
                    if c < 3 {
                        format!("{cell:<w$}")
                    } else {
                        format!("{cell:>w$}")
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        }
        out
    }
}

fn strategies_of(results: &[ExperimentResult]) -> Vec<Strategy> {
    let mut out: Vec<Strategy> = Vec::new();
    for r in results {
        for &s in &r.strategies {
            if !out.contains(&s) {
                out.push(s);
            }
        }
    }
    out
}

/// NAULC win table over a set of problems.
pub fn count_wins(results: &[ExperimentResult], options: &WinOptions) -> Result<WinTable> {
    let mut problems = Vec::new();
    for result in results {
        for split in Split::ALL {
            for metric in Metric::ALL {
                let samples: Vec<(Strategy, Vec<f64>)> = result
                    .strategies
                    .iter()
                    .map(|&s| (s, result.naulc_samples(s, split, metric)))
                    .collect();
                if samples.iter().all(|(_, v)| v.is_empty()) {
                    continue;
                }
                let means = samples
                    .iter()
                    .filter(|(_, v)| !v.is_empty())
                    .map(|(s, v)| (*s, mean(v)))
                    .collect();
                problems.push(ProblemWinners {
                    corpus: result.corpus.clone(),
                    dataset: result.dataset.clone(),
                    split,
                    metric,
                    means,
                    winners: winners(&samples, options)?,
                });
            }
        }
    }
    Ok(WinTable {
        strategies: strategies_of(results),
        problems,
    })
}

/// Wins at one queried-bag fraction, summed over problems and metrics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractionWins {
    pub fraction: f64,
    pub split: Split,
    pub strategy: Strategy,
    pub wins: usize,
}

/// Applies the win rule to instantaneous curve values at each fraction of
/// the queries performed.
pub fn wins_vs_query_fraction(
    results: &[ExperimentResult],
    grid: &[f64],
    options: &WinOptions,
) -> Result<Vec<FractionWins>> {
    let strategies = strategies_of(results);
    let mut out = Vec::new();
    for split in Split::ALL {
        for &fraction in grid {
            let mut counts = vec![0usize; strategies.len()];
            let mut any = false;
            for result in results {
                for metric in Metric::ALL {
                    let samples = result
                        .strategies
                        .iter()
                        .map(|&s| {
                            let values = result
                                .curve_samples(s, split, metric)
                                .into_iter()
                                .map(|c| value_at_fraction(c, fraction))
                                .collect::<Result<Vec<f64>>>()?;
                            Ok((s, values))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    if samples.iter().all(|(_, v)| v.is_empty()) {
                        continue;
                    }
                    any = true;
                    for w in winners(&samples, options)? {
                        let i = strategies.iter().position(|&s| s == w).expect("known strategy");
                        counts[i] += 1;
                    }
                }
            }
            if any {
                out.extend(strategies.iter().zip(counts).map(|(&strategy, wins)| FractionWins {
                    fraction,
                    split,
                    strategy,
                    wins,
                }));
            }
        }
    }
    Ok(out)
}

/// `fraction,split,strategy,wins`.
pub fn write_fraction_wins_csv<W: Write>(series: &[FractionWins], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["fraction", "split", "strategy", "wins"])
        .map_err(csv_error)?;
    for row in series {
        w.write_record([
            row.fraction.to_string(),
            row.split.to_string(),
            row.strategy.to_string(),
            row.wins.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::tests::result_from_curves;

    fn opts() -> WinOptions {
        WinOptions::default()
    }

    #[test]
    fn dominant_strategy_wins_alone() {
        let samples = vec![
            (Strategy::Agin, vec![0.90, 0.91, 0.89, 0.90]),
            (Strategy::Random, vec![0.50, 0.52, 0.49, 0.51]),
        ];
        assert_eq!(winners(&samples, &opts()).unwrap(), vec![Strategy::Agin]);
    }

    #[test]
    fn identical_samples_both_win() {
        let s = vec![0.3, 0.5, 0.4];
        let samples = vec![(Strategy::Agin, s.clone()), (Strategy::Cbas, s)];
        assert_eq!(
            winners(&samples, &opts()).unwrap(),
            vec![Strategy::Agin, Strategy::Cbas]
        );
    }

    #[test]
    fn three_strategy_fixture() {
        // cbas leads (mean 0.8); agin (mean 0.78, wide spread) is not
        // significantly worse; random (mean 0.5, tight) is.
        let samples = vec![
            (Strategy::Random, vec![0.50, 0.51, 0.49, 0.50, 0.50]),
            (Strategy::Agin, vec![0.60, 0.95, 0.70, 0.90, 0.75]),
            (Strategy::Cbas, vec![0.79, 0.81, 0.80, 0.78, 0.82]),
        ];
        // agin vs cbas: diff 0.02, se ~0.063, t ~0.32 -> p ~0.77
        let t = t_test(&samples[2].1, &samples[1].1, 0.05, TTestKind::Welch).unwrap();
        assert!(t.p_value > 0.5);
        assert_eq!(
            winners(&samples, &opts()).unwrap(),
            vec![Strategy::Agin, Strategy::Cbas]
        );
    }

    #[test]
    fn single_repetition_needs_equal_means() {
        let samples = vec![
            (Strategy::Random, vec![0.5]),
            (Strategy::Agin, vec![0.6]),
            (Strategy::Cbas, vec![0.6]),
            (Strategy::SimpleMargin, vec![]),
        ];
        assert_eq!(
            winners(&samples, &opts()).unwrap(),
            vec![Strategy::Agin, Strategy::Cbas]
        );
    }

    #[test]
    fn count_wins_table() {
        let a = result_from_curves(
            "p1",
            &[
                (Strategy::Random, vec![vec![0.1, 0.2], vec![0.1, 0.25], vec![0.12, 0.2]]),
                (Strategy::Agin, vec![vec![0.8, 0.9], vec![0.85, 0.9], vec![0.8, 0.95]]),
            ],
        );
        let mut b = a.clone();
        b.dataset = "p2".into();
        b.corpus = "other".into();
        let table = count_wins(&[a, b], &opts()).unwrap();
        assert_eq!(table.problems.len(), 2 * 2 * 2);
        assert!(table.problems.iter().all(|p| !p.winners.is_empty()));
        assert_eq!(table.wins(Some("toy"), Split::Train, Metric::F1, Strategy::Agin), 1);
        assert_eq!(table.wins(None, Split::Train, Metric::F1, Strategy::Agin), 2);
        assert_eq!(table.wins(None, Split::Test, Metric::AucPr, Strategy::Random), 0);
        let text = table.to_text();
        assert!(text.lines().next().unwrap().starts_with("split"));
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let csv = String::from_utf8(buf).unwrap();
        assert!(csv.starts_with("split,corpus,metric,random,agin\n"));
        assert!(csv.contains("train,total,f1,0,2\n"));
        assert!(csv.contains("train,toy,f1,0,1\n"));
    }

    #[test]
    fn crossing_curves_switch_leader() {
        let res = result_from_curves(
            "cross",
            &[
                (Strategy::Agin, vec![vec![0.0, 1.0], vec![0.02, 1.02], vec![0.04, 0.98]]),
                (Strategy::Random, vec![vec![1.0, 0.0], vec![0.98, 0.02], vec![1.02, 0.04]]),
            ],
        );
        let series = wins_vs_query_fraction(&[res], &[0.0, 0.5, 1.0], &opts()).unwrap();
        let at = |f: f64, s: Strategy| {
            series
                .iter()
                .find(|w| w.fraction == f && w.split == Split::Train && w.strategy == s)
                .unwrap()
                .wins
        };
        // two metrics per split
        assert_eq!((at(0.0, Strategy::Agin), at(0.0, Strategy::Random)), (0, 2));
        // at the midpoint: agin {0.5, 0.52, 0.51}, random {0.5, 0.5, 0.53}
        assert_eq!((at(0.5, Strategy::Agin), at(0.5, Strategy::Random)), (2, 2));
        assert_eq!((at(1.0, Strategy::Agin), at(1.0, Strategy::Random)), (2, 0));
        let mut buf = Vec::new();
        write_fraction_wins_csv(&series, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("0.5,train,agin,2\n"));
    }

    #[test]
    fn single_strategy_always_wins() {
        let res = result_from_curves("solo", &[(Strategy::Cbas, vec![vec![0.2, 0.4, 0.3]])]);
        let series = wins_vs_query_fraction(&[res], &[0.0, 0.3, 1.0], &opts()).unwrap();
        assert!(series.iter().all(|w| w.wins == 2));
    }
}
