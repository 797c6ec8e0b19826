//! Datasets, sessions and their event logs.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use mial_core::data::{load_dataset, split_train_test, Label, MilDataset};
use mial_core::session::{ActiveLearner, AssumptionPolicy, SessionConfig};
use mial_core::strategy::Strategy;
use mial_core::svm::KernelSpec;
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use crate::api::{
    CreateSession, CurvesPayload, DatasetInfo, DatasetList, InstanceView, LabelSubmission,
    QueryPayload, SessionStatus, SessionSummary,
};
use crate::error::{ServiceError, ServiceResult};

/// Model settings used when a request leaves them out.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ServiceDefaults {
    pub kernel: KernelSpec,
    pub base_cost: f64,
}

impl Default for ServiceDefaults {
    fn default() -> Self {
        Self {
            kernel: KernelSpec::GaussianRbf { gamma: 0.5 },
            base_cost: 1.0,
        }
    }
}

/// One line of a session's event log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum Event {
    Created { id: String, request: CreateSession },
    Labels { bag_id: String, labels: Vec<i64> },
}

pub struct Session {
    id: String,
    request: CreateSession,
    learner: ActiveLearner,
    log: Option<File>,
}

impl Session {
    fn policy(&self) -> AssumptionPolicy {
        if self.request.allow_assumption_violations {
            AssumptionPolicy::AllowViolations
        } else {
            AssumptionPolicy::Strict
        }
    }

    pub fn learner(&self) -> &ActiveLearner {
        &self.learner
    }

    pub fn summary(&self) -> SessionSummary {
        let learner = &self.learner;
        let costs = learner.model().costs();
        SessionSummary {
            id: self.id.clone(),
            dataset: self.request.dataset.clone(),
            strategy: self.request.strategy,
            status: if learner.is_finished() {
                SessionStatus::Finished
            } else {
                SessionStatus::AwaitingLabels
            },
            pending_bag: learner.pending_id().map(str::to_string),
            queries: learner.queries(),
            remaining: learner.state().remaining(),
            c_positive: costs.c_positive,
            c_negative: costs.c_negative,
            metrics: learner
                .records()
                .last()
                .map(|r| r.metrics.clone())
                .unwrap_or_default(),
        }
    }

    pub fn query(&self) -> ServiceResult<QueryPayload> {
        let bag = self.learner.pending().ok_or(ServiceError::Finished)?;
        let pool = self.learner.pool();
        let range = pool.layout().range(bag);
        let scores = &self.learner.scores()[range.clone()];
        let instances = pool.bags()[bag]
            .instances
            .iter()
            .zip(range.zip(scores))
            .map(|(inst, (index, &score))| InstanceView {
                index,
                features: inst.features.clone(),
                score,
            })
            .collect::<Vec<_>>();
        Ok(QueryPayload {
            bag_id: pool.bags()[bag].id.clone(),
            instance_count: instances.len(),
            instances,
        })
    }

    pub fn curves(&self) -> CurvesPayload {
        CurvesPayload {
            queries: self.learner.queries(),
            query_log: self.learner.query_log().to_vec(),
            curves: self.learner.curves().clone(),
        }
    }

    fn apply(&mut self, submission: &LabelSubmission) -> ServiceResult<()> {
        let labels = parse_labels(&submission.labels)?;
        let bag = self
            .learner
            .pool()
            .bag_index(&submission.bag_id)
            .ok_or_else(|| mial_core::Error::UnknownBag(submission.bag_id.clone()))?;
        let policy = self.policy();
        self.learner.submit(bag, &labels, policy)?;
        Ok(())
    }

    fn append(&mut self, event: &Event) -> ServiceResult<()> {
        if let Some(file) = &mut self.log {
            let mut line = serde_json::to_vec(event).map_err(|e| ServiceError::Log(e.to_string()))?;
            line.push(b'\n');
            file.write_all(&line)
                .and_then(|_| file.sync_data())
                .map_err(|e| ServiceError::Log(e.to_string()))?;
        }
        Ok(())
    }
}

fn parse_labels(values: &[i64]) -> ServiceResult<Vec<Label>> {
    values
        .iter()
        .map(|&v| match v {
            1 => Ok(Label::Positive),
            -1 => Ok(Label::Negative),
            other => Err(ServiceError::InvalidLabel(other)),
        })
        .collect()
}

/// Shared service state: registered datasets and live sessions.
///
/// Each session sits behind its own lock, so mutations of one session are
/// serialized while distinct sessions proceed independently.
pub struct AppState {
    datasets: BTreeMap<String, Arc<MilDataset>>,
    sessions: RwLock<HashMap<String, Arc<RwLock<Session>>>>,
    defaults: ServiceDefaults,
    log_dir: Option<PathBuf>,
}

impl AppState {
    pub fn new(defaults: ServiceDefaults) -> Self {
        Self {
            datasets: BTreeMap::new(),
            sessions: RwLock::new(HashMap::new()),
            defaults,
            log_dir: None,
        }
    }

    /// Persists every session as `<dir>/<id>.jsonl`.
    pub fn with_log_dir(mut self, dir: impl Into<PathBuf>) -> ServiceResult<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| ServiceError::Log(e.to_string()))?;
        self.log_dir = Some(dir);
        Ok(self)
    }

    /// Registers `dataset` under its name.
    pub fn add_dataset(&mut self, dataset: MilDataset) {
        self.datasets
            .insert(dataset.name().to_string(), Arc::new(dataset));
    }

    /// Loads every `*.csv` file of `dir`; the file stem becomes the name.
    pub fn load_datasets(&mut self, dir: &Path, strict: bool) -> ServiceResult<usize> {
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(mial_core::Error::from)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        paths.sort();
        for path in &paths {
            self.add_dataset(load_dataset(path, strict)?);
        }
        Ok(paths.len())
    }

    pub fn datasets(&self) -> DatasetList {
        DatasetList {
            datasets: self
                .datasets
                .iter()
                .map(|(name, ds)| DatasetInfo {
                    name: name.clone(),
                    has_ground_truth: ds.has_ground_truth(),
                    summary: ds.summary(),
                })
                .collect(),
            strategies: Strategy::ALL.to_vec(),
        }
    }

    fn build(&self, id: &str, request: &CreateSession) -> ServiceResult<Session> {
        let dataset = self
            .datasets
            .get(&request.dataset)
            .ok_or_else(|| ServiceError::UnknownDataset(request.dataset.clone()))?;
        let mut config = SessionConfig::new(
            request.strategy,
            request.kernel.unwrap_or(self.defaults.kernel),
            request.base_cost.unwrap_or(self.defaults.base_cost),
            request.seed,
        );
        if request.clustering.is_some() {
            config.clustering = request.clustering;
        }
        config.train_evaluation = request.train_evaluation;
        config.validate()?;
        let learner = match request.split {
            Some(split) => {
                let (train, test) = split_train_test(dataset, split.train_fraction, split.seed)?;
                ActiveLearner::new(train, Some(&test), config)?
            }
            None => ActiveLearner::new((**dataset).clone(), None, config)?,
        };
        Ok(Session {
            id: id.to_string(),
            request: request.clone(),
            learner,
            log: None,
        })
    }

    fn open_log(&self, id: &str, create: bool) -> ServiceResult<Option<File>> {
        let Some(dir) = &self.log_dir else {
            return Ok(None);
        };
        let path = dir.join(format!("{id}.jsonl"));
        let mut options = OpenOptions::new();
        options.append(true);
        if create {
            options.create_new(true);
        }
        options
            .open(path)
            .map(Some)
            .map_err(|e| ServiceError::Log(e.to_string()))
    }

    /// Creates a session, trains its first model and selects its first query.
    pub fn create(&self, request: CreateSession) -> ServiceResult<SessionSummary> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let mut session = self.build(&id, &request)?;
        session.log = self.open_log(&id, true)?;
        session.append(&Event::Created {
            id: id.clone(),
            request,
        })?;
        let summary = session.summary();
        self.sessions
            .write()
            .insert(id, Arc::new(RwLock::new(session)));
        Ok(summary)
    }

    pub fn session(&self, id: &str) -> ServiceResult<Arc<RwLock<Session>>> {
        self.sessions
            .read()
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    /// Applies a submission, retrains and selects the next query. The event
    /// is logged only once the submission is accepted.
    pub fn submit(&self, id: &str, submission: LabelSubmission) -> ServiceResult<SessionSummary> {
        let session = self.session(id)?;
        let mut session = session.write();
        session.apply(&submission)?;
        session.append(&Event::Labels {
            bag_id: submission.bag_id,
            labels: submission.labels,
        })?;
        Ok(session.summary())
    }

    /// Rebuilds every session found in the log directory by replaying its
    /// events. Returns the number of sessions restored.
    pub fn restore(&self) -> ServiceResult<usize> {
        let Some(dir) = &self.log_dir else {
            return Ok(0);
        };
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| ServiceError::Log(e.to_string()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        let mut restored = 0;
        for path in paths {
            let session = self.replay(&path)?;
            let id = session.id.clone();
            self.sessions
                .write()
                .insert(id, Arc::new(RwLock::new(session)));
            restored += 1;
        }
        Ok(restored)
    }

    fn replay(&self, path: &Path) -> ServiceResult<Session> {
        let context = |e: String| ServiceError::Log(format!("{}: {e}", path.display()));
        let file = File::open(path).map_err(|e| context(e.to_string()))?;
        let mut session: Option<Session> = None;
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| context(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let event: Event = serde_json::from_str(&line).map_err(|e| context(e.to_string()))?;
            match (event, &mut session) {
                (Event::Created { id, request }, None) => {
                    session = Some(self.build(&id, &request)?);
                }
                (Event::Labels { bag_id, labels }, Some(s)) => {
                    s.apply(&LabelSubmission { bag_id, labels })?;
                }
                _ => return Err(context("events out of order".into())),
            }
        }
        let mut session = session.ok_or_else(|| context("empty event log".into()))?;
        session.log = self.open_log(&session.id, false)?;
        Ok(session)
    }
}
