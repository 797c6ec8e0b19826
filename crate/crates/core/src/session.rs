//! The query loop: train on the working hypothesis, pick a bag, obtain its
//! instance labels, retrain, measure.

use std::collections::BTreeMap;
use std::io::Write;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cluster::{self, MultiLevelClustering};
use crate::data::{Label, MilDataset};
use crate::error::{Error, Result};
use crate::eval::{auc_pr, f1_score, CurveSet, Metric, Split};
use crate::rng;
use crate::strategy::{self, BagScore, QueryState, Strategy};
use crate::svm::{fit_gram, CostSpec, GramMatrix, KernelSpec, SolverOptions, TrainedModel};

/// Multi-level clustering parameters for cluster-based sampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringParams {
    /// Number of threshold levels cut from the tree.
    pub levels: usize,
    /// Inconsistency window depth, counting the link itself.
    pub depth: usize,
}

impl Default for ClusteringParams {
    fn default() -> Self {
        Self {
            levels: cluster::DEFAULT_LEVELS,
            depth: cluster::DEFAULT_DEPTH,
        }
    }
}

/// What the training-pool curves compare against ground truth.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainEvaluation {
    /// Classifier predictions for every pool instance.
    #[default]
    Classifier,
    /// Known labels where available, classifier predictions elsewhere.
    KnownLabels,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    pub strategy: Strategy,
    pub kernel: KernelSpec,
    /// `C+`; negatives get `rho * base_cost`.
    pub base_cost: f64,
    #[serde(default)]
    pub seed: u64,
    /// Present exactly when the strategy is `cbas`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clustering: Option<ClusteringParams>,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub train_evaluation: TrainEvaluation,
}

impl SessionConfig {
    /// Defaults for `strategy`, with clustering parameters when it needs them.
    pub fn new(strategy: Strategy, kernel: KernelSpec, base_cost: f64, seed: u64) -> Self {
        Self {
            strategy,
            kernel,
            base_cost,
            seed,
            clustering: (strategy == Strategy::Cbas).then(ClusteringParams::default),
            solver: SolverOptions::default(),
            train_evaluation: TrainEvaluation::default(),
        }
    }

    /// The same configuration for another strategy.
    pub fn with_strategy(&self, strategy: Strategy) -> Self {
        let clustering = match strategy {
            Strategy::Cbas => Some(self.clustering.unwrap_or_default()),
            _ => None,
        };
        Self {
            strategy,
            clustering,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if !(self.base_cost > 0.0 && self.base_cost.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "base_cost must be positive, got {}",
                self.base_cost
            )));
        }
        if self.solver.tolerance.is_nan() || self.solver.tolerance <= 0.0 {
            return Err(Error::InvalidConfig("solver tolerance must be positive".into()));
        }
        match (self.strategy, self.clustering) {
            (Strategy::Cbas, None) => Err(Error::InvalidConfig(
                "cbas needs clustering parameters".into(),
            )),
            (Strategy::Cbas, Some(p)) if p.levels == 0 || p.depth == 0 => Err(
                Error::InvalidConfig("clustering levels and depth must be at least 1".into()),
            ),
            (s, Some(_)) if s != Strategy::Cbas => Err(Error::InvalidConfig(format!(
                "clustering parameters only apply to cbas, not {s}"
            ))),
            _ => Ok(()),
        }
    }
}

/// Ground-truth labels of every instance of bag `bag_id`.
pub fn oracle_answer(dataset: &MilDataset, bag_id: &str) -> Result<Vec<Label>> {
    let index = dataset
        .bag_index(bag_id)
        .ok_or_else(|| Error::UnknownBag(bag_id.to_string()))?;
    dataset.bags()[index]
        .instances
        .iter()
        .map(|i| i.label.ok_or_else(|| Error::MissingLabels(bag_id.to_string())))
        .collect()
}

/// Whether answers that break the standard MIL assumption are accepted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssumptionPolicy {
    /// A positive bag must contain at least one positive instance.
    #[default]
    Strict,
    AllowViolations,
}

/// Checks an answer for a bag labeled `bag_label`.
pub fn check_answer(bag_label: Label, answer: &[Label], policy: AssumptionPolicy) -> Result<()> {
    if policy == AssumptionPolicy::AllowViolations {
        return Ok(());
    }
    let any_positive = answer.iter().any(|l| l.is_positive());
    match bag_label {
        Label::Positive if !any_positive => Err(Error::AssumptionViolation(
            "a positive bag needs at least one positive instance".into(),
        )),
        Label::Negative if any_positive => Err(Error::AssumptionViolation(
            "a negative bag cannot hold positive instances".into(),
        )),
        _ => Ok(()),
    }
}

/// One line of the session log. Record 0 describes the initial model; record
/// `k > 0` names the bag chosen for query `k`, the candidate scores it was
/// chosen from, and the metrics after retraining on its labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub query: usize,
    pub strategy: Strategy,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bag: Option<String>,
    /// Per-candidate selection scores; absent for random selection.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub candidate_scores: Vec<(String, f64)>,
    pub c_positive: f64,
    pub c_negative: f64,
    /// Keys are `<split>_<metric>`, e.g. `train_f1`.
    pub metrics: BTreeMap<String, f64>,
}

/// Writes records as JSON lines.
pub fn write_session_log<W: Write>(records: &[QueryRecord], mut writer: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut writer, r).map_err(|e| Error::Serialization(e.to_string()))?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

/// Final state of a finished (or aborted) session.
#[derive(Clone, Debug)]
pub struct SessionState {
    pub query_state: QueryState,
    pub model: TrainedModel,
    pub curves: CurveSet,
    pub query_log: Vec<String>,
    pub records: Vec<QueryRecord>,
}

struct Selection {
    bag: usize,
    scores: Vec<BagScore>,
}

/// An active-learning session over one training pool and an optional
/// held-out set.
pub struct ActiveLearner {
    config: SessionConfig,
    pool: MilDataset,
    pool_truth: Option<Vec<Label>>,
    test: Option<(Vec<Vec<f64>>, Vec<Label>)>,
    gram: GramMatrix,
    clustering: Option<MultiLevelClustering>,
    state: QueryState,
    model: TrainedModel,
    scores: Vec<f64>,
    rng: ChaCha8Rng,
    pending: Option<Selection>,
    curves: CurveSet,
    query_log: Vec<String>,
    records: Vec<QueryRecord>,
}

impl ActiveLearner {
    /// Initializes the hypothesis, trains the first model, records the
    /// query-0 metrics and selects the first bag.
    ///
    /// Training-pool metrics are kept only when every pool instance has a
    /// ground-truth label; test metrics only when `test` is given and fully
    /// labeled.
    pub fn new(pool: MilDataset, test: Option<&MilDataset>, config: SessionConfig) -> Result<Self> {
        config.validate()?;
        let state = QueryState::init(&pool)?;
        let features = pool.features();
        for x in &features {
            config.kernel.check_point(x)?;
        }
        let gram = GramMatrix::new(config.kernel, &features, config.solver.gram_limit)?;
        let clustering = match config.clustering {
            Some(p) if config.strategy == Strategy::Cbas => {
                Some(cluster::multi_level(&features, p.depth, p.levels)?)
            }
            _ => None,
        };
        let test = match test {
            Some(t) => {
                if t.feature_dim() != pool.feature_dim() {
                    return Err(Error::DimensionMismatch {
                        expected: pool.feature_dim(),
                        found: t.feature_dim(),
                    });
                }
                t.truth().map(|truth| {
                    let xs = t.features().into_iter().map(|x| x.to_vec()).collect();
                    (xs, truth)
                })
            }
            None => None,
        };
        let pool_truth = pool.truth();
        let curves = CurveSet::new(pool_truth.is_some(), test.is_some());
        let (model, scores) = train(&gram, &state, &config)?;
        let mut learner = Self {
            rng: rng::stream(config.seed, rng::QUERY_STREAM),
            config,
            pool,
            pool_truth,
            test,
            gram,
            clustering,
            state,
            model,
            scores,
            pending: None,
            curves,
            query_log: Vec::new(),
            records: Vec::new(),
        };
        learner.record(None)?;
        learner.pending = learner.select()?;
        Ok(learner)
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn pool(&self) -> &MilDataset {
        &self.pool
    }

    pub fn state(&self) -> &QueryState {
        &self.state
    }

    pub fn model(&self) -> &TrainedModel {
        &self.model
    }

    /// Decision scores of the current model on every pool instance.
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn clustering(&self) -> Option<&MultiLevelClustering> {
        self.clustering.as_ref()
    }

    pub fn curves(&self) -> &CurveSet {
        &self.curves
    }

    pub fn query_log(&self) -> &[String] {
        &self.query_log
    }

    pub fn records(&self) -> &[QueryRecord] {
        &self.records
    }

    /// Index of the bag awaiting labels, if any.
    pub fn pending(&self) -> Option<usize> {
        self.pending.as_ref().map(|s| s.bag)
    }

    pub fn pending_id(&self) -> Option<&str> {
        self.pending().map(|b| self.pool.bags()[b].id.as_str())
    }

    pub fn is_finished(&self) -> bool {
        self.pending.is_none()
    }

    /// Queries performed so far.
    pub fn queries(&self) -> usize {
        self.query_log.len()
    }

    /// Accepts the labels of the pending bag, retrains, measures and selects
    /// the next bag.
    pub fn submit(&mut self, bag: usize, answer: &[Label], policy: AssumptionPolicy) -> Result<()> {
        if bag >= self.pool.bag_count() {
            return Err(Error::UnknownBag(bag.to_string()));
        }
        if !self.state.is_candidate(bag) {
            return Err(Error::AlreadyLabeled(self.pool.bags()[bag].id.clone()));
        }
        if self.pending() != Some(bag) {
            return Err(Error::NotPending {
                bag: self.pool.bags()[bag].id.clone(),
            });
        }
        let expected = self.pool.bags()[bag].len();
        if answer.len() != expected {
            return Err(Error::LengthMismatch {
                left: expected,
                right: answer.len(),
            });
        }
        check_answer(self.state.bag_label(bag), answer, policy)?;

        let mut next_state = self.state.clone();
        next_state.apply(bag, answer)?;
        let (model, scores) = train(&self.gram, &next_state, &self.config)?;
        self.state = next_state;
        self.model = model;
        self.scores = scores;
        let selection = self.pending.take().expect("pending checked above");
        self.query_log.push(self.pool.bags()[bag].id.clone());
        self.record(Some(selection))?;
        self.pending = self.select()?;
        Ok(())
    }

    /// Answers the pending query from `oracle` (by bag id).
    pub fn step_with_oracle(&mut self, oracle: &MilDataset) -> Result<bool> {
        let Some(bag) = self.pending() else {
            return Ok(false);
        };
        let answer = oracle_answer(oracle, &self.pool.bags()[bag].id)?;
        self.submit(bag, &answer, AssumptionPolicy::AllowViolations)?;
        Ok(true)
    }

    pub fn into_state(self) -> SessionState {
        SessionState {
            query_state: self.state,
            model: self.model,
            curves: self.curves,
            query_log: self.query_log,
            records: self.records,
        }
    }

    fn select(&mut self) -> Result<Option<Selection>> {
        if self.state.remaining() == 0 {
            return Ok(None);
        }
        let (state, scores) = (&self.state, &self.scores);
        let selection = match self.config.strategy {
            Strategy::Random => Selection {
                bag: strategy::select_random(state, &mut self.rng)?,
                scores: Vec::new(),
            },
            Strategy::SimpleMargin => Selection {
                bag: strategy::select_simple_margin(state, scores)?,
                scores: strategy::simple_margin_bag_scores(state, scores)?,
            },
            Strategy::Agin => Selection {
                bag: strategy::select_agin(state, scores)?,
                scores: strategy::agin_bag_scores(state, scores)?,
            },
            Strategy::Cbas => {
                let clustering = self.clustering.as_ref().expect("built for cbas");
                Selection {
                    bag: strategy::select_cbas(state, clustering, scores)?,
                    scores: strategy::cbas_bag_scores(state, clustering, scores)?,
                }
            }
        };
        Ok(Some(selection))
    }

    fn measure(&self) -> Result<Vec<(Split, Metric, f64)>> {
        let mut out = Vec::new();
        if let Some(truth) = &self.pool_truth {
            let (predicted, ranking): (Vec<Label>, Vec<f64>) = match self.config.train_evaluation {
                TrainEvaluation::Classifier => (
                    self.scores.iter().map(|&s| Label::from_score(s)).collect(),
                    self.scores.clone(),
                ),
                TrainEvaluation::KnownLabels => self
                    .scores
                    .iter()
                    .enumerate()
                    .map(|(i, &s)| {
                        if self.state.is_known(i) {
                            let l = self.state.labels()[i];
                            (l, l.sign() * f64::MAX)
                        } else {
                            (Label::from_score(s), s)
                        }
                    })
                    .unzip(),
            };
            out.push((Split::Train, Metric::F1, f1_score(&predicted, truth)?));
            out.push((Split::Train, Metric::AucPr, auc_pr(&ranking, truth)?));
        }
        if let Some((xs, truth)) = &self.test {
            let scores = xs
                .iter()
                .map(|x| self.model.decision_score(x))
                .collect::<Result<Vec<f64>>>()?;
            let predicted: Vec<Label> = scores.iter().map(|&s| Label::from_score(s)).collect();
            out.push((Split::Test, Metric::F1, f1_score(&predicted, truth)?));
            out.push((Split::Test, Metric::AucPr, auc_pr(&scores, truth)?));
        }
        Ok(out)
    }

    fn record(&mut self, selection: Option<Selection>) -> Result<()> {
        let values = self.measure()?;
        let mut metrics = BTreeMap::new();
        for &(split, metric, v) in &values {
            self.curves.push(split, metric, v);
            metrics.insert(format!("{split}_{metric}"), v);
        }
        let bags = self.pool.bags();
        let costs = self.model.costs();
        self.records.push(QueryRecord {
            query: self.query_log.len(),
            strategy: self.config.strategy,
            bag: selection.as_ref().map(|s| bags[s.bag].id.clone()),
            candidate_scores: selection
                .map(|s| {
                    s.scores
                        .into_iter()
                        .map(|b| (bags[b.bag].id.clone(), b.score))
                        .collect()
                })
                .unwrap_or_default(),
            c_positive: costs.c_positive,
            c_negative: costs.c_negative,
            metrics,
        });
        Ok(())
    }
}

fn train(gram: &GramMatrix, state: &QueryState, config: &SessionConfig) -> Result<(TrainedModel, Vec<f64>)> {
    let costs = CostSpec::from_imbalance(config.base_cost, state.labels())?;
    let model = fit_gram(gram, state.labels(), costs, &config.solver)?;
    let scores = model.training_scores(gram);
    Ok((model, scores))
}

/// Runs a session against the ground truth of `train` until no positive bag
/// is left to query.
pub fn run_session(train: &MilDataset, test: Option<&MilDataset>, config: &SessionConfig) -> Result<SessionState> {
    if !train.has_ground_truth() {
        return Err(Error::MissingLabels(train.name().to_string()));
    }
    let mut learner = ActiveLearner::new(train.clone(), test, config.clone())?;
    while learner.step_with_oracle(train)? {}
    Ok(learner.into_state())
}
