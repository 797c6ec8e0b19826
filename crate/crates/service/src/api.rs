//! Request and response bodies.

use std::collections::BTreeMap;

use mial_core::data::DatasetSummary;
use mial_core::eval::CurveSet;
use mial_core::session::{ClusteringParams, TrainEvaluation};
use mial_core::strategy::Strategy;
use mial_core::svm::KernelSpec;
use serde::{Deserialize, Serialize};

/// Holds out part of the dataset as a test set, drawn like an experiment
/// repetition with the same seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

/// `POST /sessions`. Omitted model settings fall back to the service
/// defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub dataset: String,
    pub strategy: Strategy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_cost: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clustering: Option<ClusteringParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitSpec>,
    #[serde(default)]
    pub train_evaluation: TrainEvaluation,
    /// Accept all-negative answers for positive bags.
    #[serde(default)]
    pub allow_assumption_violations: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SessionStatus {
    AwaitingLabels,
    /// Reserved for asynchronous retraining; never reported today.
    Ready,
    Finished,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub id: String,
    pub dataset: String,
    pub strategy: Strategy,
    pub status: SessionStatus,
    pub pending_bag: Option<String>,
    /// Bags labeled so far.
    pub queries: usize,
    /// Positive bags still unlabeled.
    pub remaining: usize,
    pub c_positive: f64,
    pub c_negative: f64,
    /// Latest metrics, keyed `<split>_<metric>`.
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceView {
    pub index: usize,
    pub features: Vec<f64>,
    /// Current decision score.
    pub score: f64,
}

/// `GET /sessions/{id}/query`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryPayload {
    pub bag_id: String,
    pub instance_count: usize,
    pub instances: Vec<InstanceView>,
}

/// `POST /sessions/{id}/labels`; labels are `-1` or `1` in instance order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelSubmission {
    pub bag_id: String,
    pub labels: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvesPayload {
    pub queries: usize,
    pub query_log: Vec<String>,
    #[serde(flatten)]
    pub curves: CurveSet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub has_ground_truth: bool,
    pub summary: DatasetSummary,
}

/// `GET /datasets`, together with the strategies a session may use.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetList {
    pub datasets: Vec<DatasetInfo>,
    pub strategies: Vec<Strategy>,
}
