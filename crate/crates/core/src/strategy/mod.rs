//! Bag query strategies.
//!
//! Every strategy picks among the *candidate* bags: positive bags whose
//! instance labels have not been obtained yet. Instance labels of negative
//! bags are known from the start, so negative bags are never candidates.
//!
//! Scores are taken over the pool in flattened instance order (bag by bag).
//! Ties go to the lowest bag index, then the lowest instance index.

mod cbas;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use self::cbas::{
    cbas_bag_scores, cbas_informativeness, cluster_criterion, cluster_stats, select_cbas,
    ClusterStats,
};

use crate::data::{BagLayout, Label, MilDataset};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Random,
    SimpleMargin,
    Agin,
    Cbas,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Random,
        Strategy::SimpleMargin,
        Strategy::Agin,
        Strategy::Cbas,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::SimpleMargin => "simple-margin",
            Strategy::Agin => "agin",
            Strategy::Cbas => "cbas",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown strategy `{s}`")))
    }
}

/// Working labels of the pool and which of them are confirmed.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryState {
    layout: BagLayout,
    bag_labels: Vec<Label>,
    labels: Vec<Label>,
    known: Vec<bool>,
    queried: Vec<bool>,
}

impl QueryState {
    /// Every instance inherits its bag label. Instances of negative bags are
    /// known to be negative; those of positive bags are unknown, and every
    /// positive bag is a candidate.
    pub fn init(pool: &MilDataset) -> Result<Self> {
        let bag_labels: Vec<Label> = pool.bags().iter().map(|b| b.label).collect();
        if !bag_labels.iter().any(|l| l.is_positive()) {
            return Err(Error::NoPositiveBags);
        }
        let labels = pool.bag_labels();
        let known = labels.iter().map(|l| !l.is_positive()).collect();
        Ok(Self {
            layout: pool.layout(),
            queried: vec![false; bag_labels.len()],
            bag_labels,
            labels,
            known,
        })
    }

    pub fn layout(&self) -> &BagLayout {
        &self.layout
    }

    pub fn bag_label(&self, bag: usize) -> Label {
        self.bag_labels[bag]
    }

    /// Working label of every pool instance.
    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn is_known(&self, instance: usize) -> bool {
        self.known[instance]
    }

    pub fn known(&self) -> &[bool] {
        &self.known
    }

    pub fn is_queried(&self, bag: usize) -> bool {
        self.queried[bag]
    }

    pub fn is_candidate(&self, bag: usize) -> bool {
        bag < self.bag_labels.len() && self.bag_labels[bag].is_positive() && !self.queried[bag]
    }

    /// Unqueried positive bags in ascending index order.
    pub fn candidates(&self) -> Vec<usize> {
        (0..self.bag_labels.len())
            .filter(|&b| self.is_candidate(b))
            .collect()
    }

    pub fn remaining(&self) -> usize {
        (0..self.bag_labels.len()).filter(|&b| self.is_candidate(b)).count()
    }

    pub fn known_count(&self) -> usize {
        self.known.iter().filter(|&&k| k).count()
    }

    /// Records the oracle's answer for `bag`.
    pub fn apply(&mut self, bag: usize, answer: &[Label]) -> Result<()> {
        if bag >= self.bag_labels.len() {
            return Err(Error::UnknownBag(bag.to_string()));
        }
        if !self.is_candidate(bag) {
            return Err(Error::AlreadyLabeled(bag.to_string()));
        }
        let range = self.layout.range(bag);
        if answer.len() != range.len() {
            return Err(Error::LengthMismatch {
                left: range.len(),
                right: answer.len(),
            });
        }
        for (i, &label) in range.zip(answer) {
            self.labels[i] = label;
            self.known[i] = true;
        }
        self.queried[bag] = true;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BagScore {
    pub bag: usize,
    pub score: f64,
}

/// Instance informativeness from a decision score: `exp(-2|s|)`.
pub fn informativeness(score: f64) -> f64 {
    (-2.0 * score.abs()).exp()
}

/// Bag informativeness: the sum of its instances' informativeness.
pub fn aggregate_bag(instance_scores: &[f64]) -> Result<f64> {
    if instance_scores.is_empty() {
        return Err(Error::EmptyBag);
    }
    Ok(instance_scores.iter().map(|&s| informativeness(s)).sum())
}

/// Decision scores of every pool instance, flattened in bag order.
pub fn pool_scores(model: &crate::svm::TrainedModel, pool: &MilDataset) -> Result<Vec<f64>> {
    pool.features()
        .into_iter()
        .map(|x| model.decision_score(x))
        .collect()
}

fn argmax(scores: &[BagScore]) -> Result<usize> {
    let mut best: Option<BagScore> = None;
    for s in scores {
        if best.is_none_or(|b| s.score > b.score) {
            best = Some(*s);
        }
    }
    best.map(|b| b.bag).ok_or(Error::NoCandidates)
}

fn check_scores(state: &QueryState, scores: &[f64]) -> Result<()> {
    if scores.len() != state.layout.instance_count() {
        return Err(Error::LengthMismatch {
            left: state.layout.instance_count(),
            right: scores.len(),
        });
    }
    Ok(())
}

/// Sums of per-instance values over each candidate bag.
pub(crate) fn sum_over_candidates(state: &QueryState, per_instance: &[f64]) -> Vec<BagScore> {
    state
        .candidates()
        .into_iter()
        .map(|bag| BagScore {
            bag,
            score: state.layout.range(bag).map(|i| per_instance[i]).sum(),
        })
        .collect()
}

pub fn agin_bag_scores(state: &QueryState, scores: &[f64]) -> Result<Vec<BagScore>> {
    check_scores(state, scores)?;
    let phi: Vec<f64> = scores.iter().map(|&s| informativeness(s)).collect();
    Ok(sum_over_candidates(state, &phi))
}

/// Candidate bag with the largest aggregated informativeness.
pub fn select_agin(state: &QueryState, scores: &[f64]) -> Result<usize> {
    argmax(&agin_bag_scores(state, scores)?)
}

/// Candidate bag holding the single instance closest to the decision boundary.
pub fn select_simple_margin(state: &QueryState, scores: &[f64]) -> Result<usize> {
    check_scores(state, scores)?;
    let mut best: Option<(f64, usize)> = None;
    for bag in state.candidates() {
        for i in state.layout.range(bag) {
            let margin = scores[i].abs();
            if best.is_none_or(|(m, _)| margin < m) {
                best = Some((margin, bag));
            }
        }
    }
    best.map(|(_, bag)| bag).ok_or(Error::NoCandidates)
}

/// Per-candidate score reported for simple margin: the informativeness of
/// the bag's best instance.
pub fn simple_margin_bag_scores(state: &QueryState, scores: &[f64]) -> Result<Vec<BagScore>> {
    check_scores(state, scores)?;
    Ok(state
        .candidates()
        .into_iter()
        .map(|bag| BagScore {
            bag,
            score: state
                .layout
                .range(bag)
                .map(|i| informativeness(scores[i]))
                .fold(0.0, f64::max),
        })
        .collect())
}

/// Uniform draw among candidate bags.
pub fn select_random<R: Rng + ?Sized>(state: &QueryState, rng: &mut R) -> Result<usize> {
    let candidates = state.candidates();
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    Ok(candidates[rng.random_range(0..candidates.len())])
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::data::tests::bag;
    use crate::rng;

    /// Pool: B0 = positive {s=0}, B1 = positive {s=0.1, s=-0.1}, B2 = negative.
    pub(crate) fn two_bag_pool() -> (MilDataset, Vec<f64>) {
        let ds = MilDataset::new(
            "pool",
            vec![
                bag("b1", 1, &[(0.0, 1)]),
                bag("b2", 1, &[(1.0, 1), (2.0, -1)]),
                bag("n", -1, &[(5.0, -1)]),
            ],
        )
        .unwrap();
        (ds, vec![0.0, 0.1, -0.1, -3.0])
    }

    #[test]
    fn informativeness_values() {
        assert_eq!(informativeness(0.0), 1.0);
        assert!((informativeness(0.5) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((informativeness(-0.5) - 0.367879).abs() < 1e-6);
        assert!(informativeness(0.2) > informativeness(-0.3));
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate_bag(&[0.0, 0.0]).unwrap(), 2.0);
        let g = aggregate_bag(&[0.4, -0.3]).unwrap();
        assert!((g - ((-0.8f64).exp() + (-0.6f64).exp())).abs() < 1e-15);
        assert!((g - 0.998).abs() < 1e-3);
        assert_eq!(aggregate_bag(&[0.7]).unwrap(), informativeness(0.7));
        assert!(matches!(aggregate_bag(&[]), Err(Error::EmptyBag)));
    }

    #[test]
    fn agin_and_simple_margin_diverge() {
        let (ds, scores) = two_bag_pool();
        let state = QueryState::init(&ds).unwrap();
        let bag_scores = agin_bag_scores(&state, &scores).unwrap();
        assert_eq!(bag_scores[0].score, 1.0);
        assert!((bag_scores[1].score - 2.0 * (-0.2f64).exp()).abs() < 1e-15);
        assert!((bag_scores[1].score - 1.637).abs() < 1e-3);
        assert_eq!(select_agin(&state, &scores).unwrap(), 1);
        assert_eq!(select_simple_margin(&state, &scores).unwrap(), 0);
    }

    #[test]
    fn single_candidate_is_chosen_by_every_strategy() {
        let (ds, scores) = two_bag_pool();
        let mut state = QueryState::init(&ds).unwrap();
        state.apply(1, &[Label::Positive, Label::Negative]).unwrap();
        assert_eq!(state.candidates(), vec![0]);
        assert_eq!(select_agin(&state, &scores).unwrap(), 0);
        assert_eq!(select_simple_margin(&state, &scores).unwrap(), 0);
        let mut r = rng::stream(1, rng::QUERY_STREAM);
        assert_eq!(select_random(&state, &mut r).unwrap(), 0);
    }

    #[test]
    fn empty_candidate_set_errors() {
        let (ds, scores) = two_bag_pool();
        let mut state = QueryState::init(&ds).unwrap();
        state.apply(0, &[Label::Positive]).unwrap();
        state.apply(1, &[Label::Positive, Label::Negative]).unwrap();
        assert!(matches!(select_agin(&state, &scores), Err(Error::NoCandidates)));
        assert!(matches!(select_simple_margin(&state, &scores), Err(Error::NoCandidates)));
        let mut r = rng::stream(1, rng::QUERY_STREAM);
        assert!(matches!(select_random(&state, &mut r), Err(Error::NoCandidates)));
    }

    #[test]
    fn init_hypothesis_inherits_bag_labels() {
        let (ds, _) = two_bag_pool();
        let state = QueryState::init(&ds).unwrap();
        assert_eq!(state.candidates(), vec![0, 1]);
        // b2's second instance is truly negative but starts out positive.
        assert_eq!(state.labels()[2], Label::Positive);
        assert!(!state.is_known(2));
        assert_eq!(state.labels()[3], Label::Negative);
        assert!(state.is_known(3));
    }

    #[test]
    fn apply_rejects_repeats_negatives_and_bad_lengths() {
        let (ds, _) = two_bag_pool();
        let mut state = QueryState::init(&ds).unwrap();
        assert!(matches!(state.apply(1, &[Label::Positive]), Err(Error::LengthMismatch { .. })));
        state.apply(0, &[Label::Positive]).unwrap();
        assert!(matches!(state.apply(0, &[Label::Positive]), Err(Error::AlreadyLabeled(_))));
        assert!(matches!(state.apply(2, &[Label::Negative]), Err(Error::AlreadyLabeled(_))));
        assert!(matches!(state.apply(7, &[]), Err(Error::UnknownBag(_))));
    }

    #[test]
    fn random_selection_is_uniform() {
        let bags = (0..4)
            .map(|i| bag(&format!("p{i}"), 1, &[(i as f64, 1)]))
            .chain([bag("n", -1, &[(9.0, -1)])])
            .collect();
        let ds = MilDataset::new("u", bags).unwrap();
        let state = QueryState::init(&ds).unwrap();
        let mut r = rng::stream(42, rng::QUERY_STREAM);
        let draws = 10_000;
        let mut counts = [0usize; 5];
        for _ in 0..draws {
            counts[select_random(&state, &mut r).unwrap()] += 1;
        }
        assert_eq!(counts[4], 0);
        // Binomial(10^4, 0.25): sigma = 43.3
        let sigma = (draws as f64 * 0.25 * 0.75).sqrt();
        for &c in &counts[..4] {
            assert!((c as f64 - 2500.0).abs() < 3.0 * sigma, "{counts:?}");
        }
        let chi2: f64 = counts[..4].iter().map(|&c| (c as f64 - 2500.0).powi(2) / 2500.0).sum();
        // chi-square with 3 dof, 99.9th percentile
        assert!(chi2 < 16.27, "chi2 = {chi2}");
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.as_str().parse::<Strategy>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{s}\""));
        }
        assert!("best".parse::<Strategy>().is_err());
    }
}
