//! Cluster-based aggregative sampling.
//!
//! Each cluster of each granularity level is rated by
//! `c = BD * ID * E`: the normalized binary entropy of bag labels among its
//! members, the same for instance labels (known labels where available,
//! classifier predictions elsewhere), and an exploration term growing with
//! the fraction of members whose label is still unknown. An instance's
//! informativeness is the sum of `c` over the clusters containing it, one per
//! level; bags are then scored and chosen as in aggregated informativeness.

use serde::{Deserialize, Serialize};

use super::{argmax, check_scores, sum_over_candidates, BagScore, QueryState};
use crate::cluster::MultiLevelClustering;
use crate::data::Label;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    /// Fraction of members drawn from positive bags.
    pub beta: f64,
    /// Fraction of members with a positive working label.
    pub zeta: f64,
    /// Fraction of members whose true label is unknown.
    pub alpha: f64,
}

/// Binary entropy in bits, with `0 log 0 = 0`.
fn disagreement(p: f64) -> f64 {
    let term = |q: f64| if q > 0.0 { q * q.ln() } else { 0.0 };
    (term(p) + term(1.0 - p)) / 0.5f64.ln()
}

fn exploration(alpha: f64) -> f64 {
    (1.0 - (-alpha).exp()) / (1.0 - (-1.0f64).exp())
}

pub fn cluster_criterion(stats: ClusterStats) -> f64 {
    disagreement(stats.beta) * disagreement(stats.zeta) * exploration(stats.alpha)
}

/// Composition of the cluster made of pool instances `members`.
pub fn cluster_stats(members: &[usize], state: &QueryState, scores: &[f64]) -> ClusterStats {
    let mut acc = Counts::default();
    for &i in members {
        acc.add(i, state, scores);
    }
    acc.stats()
}

#[derive(Clone, Copy, Default)]
struct Counts {
    total: usize,
    from_positive_bags: usize,
    positive: usize,
    unknown: usize,
}

impl Counts {
    fn add(&mut self, i: usize, state: &QueryState, scores: &[f64]) {
        let layout = state.layout();
        self.total += 1;
        if state.bag_label(layout.bag_of(i)).is_positive() {
            self.from_positive_bags += 1;
        }
        let label = if state.is_known(i) {
            state.labels()[i]
        } else {
            Label::from_score(scores[i])
        };
        if label.is_positive() {
            self.positive += 1;
        }
        if !state.is_known(i) {
            self.unknown += 1;
        }
    }

    fn stats(&self) -> ClusterStats {
        let n = self.total.max(1) as f64;
        ClusterStats {
            beta: self.from_positive_bags as f64 / n,
            zeta: self.positive as f64 / n,
            alpha: self.unknown as f64 / n,
        }
    }
}

/// Accumulated cluster criteria for every pool instance.
pub fn cbas_informativeness(
    state: &QueryState,
    clustering: &MultiLevelClustering,
    scores: &[f64],
) -> Result<Vec<f64>> {
    check_scores(state, scores)?;
    let n = scores.len();
    let mut phi = vec![0.0; n];
    for level in &clustering.levels {
        if level.assignments.len() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: level.assignments.len(),
            });
        }
        let mut counts = vec![Counts::default(); level.cluster_count];
        for (i, &c) in level.assignments.iter().enumerate() {
            counts[c].add(i, state, scores);
        }
        let criteria: Vec<f64> = counts.iter().map(|c| cluster_criterion(c.stats())).collect();
        for (p, &c) in phi.iter_mut().zip(&level.assignments) {
            *p += criteria[c];
        }
    }
    Ok(phi)
}

pub fn cbas_bag_scores(
    state: &QueryState,
    clustering: &MultiLevelClustering,
    scores: &[f64],
) -> Result<Vec<BagScore>> {
    let phi = cbas_informativeness(state, clustering, scores)?;
    Ok(sum_over_candidates(state, &phi))
}

pub fn select_cbas(
    state: &QueryState,
    clustering: &MultiLevelClustering,
    scores: &[f64],
) -> Result<usize> {
    argmax(&cbas_bag_scores(state, clustering, scores)?)
}
