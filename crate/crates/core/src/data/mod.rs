//! Multiple-instance data model.
//!
//! A [`MilDataset`] is a list of [`Bag`]s. Every bag carries a weak label and
//! an ordered list of [`Instance`]s; instances may carry a ground-truth label
//! (simulated oracle) or none (human oracle). Under the standard MIL
//! assumption a negative bag holds only negative instances and a positive bag
//! holds at least one positive instance; [`MilDataset::validate`] reports
//! every bag that breaks that rule.

mod format;
mod split;
mod synthetic;

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use self::format::{load_dataset, read_mil_csv, save_dataset, write_mil_csv};
pub use self::split::split_train_test;
pub use self::synthetic::{generate_synthetic, SyntheticConfig};

/// Binary label, serialized as `-1` / `1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Negative => -1.0,
            Label::Positive => 1.0,
        }
    }

    /// Thresholds a decision score; a score of exactly zero maps to positive.
    pub fn from_score(score: f64) -> Label {
        if score >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

impl From<Label> for i8 {
    fn from(label: Label) -> i8 {
        match label {
            Label::Negative => -1,
            Label::Positive => 1,
        }
    }
}

impl TryFrom<i8> for Label {
    type Error = String;

    fn try_from(value: i8) -> std::result::Result<Self, Self::Error> {
        match value {
            -1 => Ok(Label::Negative),
            1 => Ok(Label::Positive),
            other => Err(format!("label must be -1 or 1, got {other}")),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", i8::from(*self))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub features: Vec<f64>,
    /// Ground truth; `None` when labels come from a human annotator.
    pub label: Option<Label>,
}

impl Instance {
    pub fn new(features: Vec<f64>, label: Option<Label>) -> Self {
        Self { features, label }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bag {
    pub id: String,
    pub label: Label,
    pub instances: Vec<Instance>,
}

impl Bag {
    pub fn new(id: impl Into<String>, label: Label, instances: Vec<Instance>) -> Self {
        Self {
            id: id.into(),
            label,
            instances,
        }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn has_ground_truth(&self) -> bool {
        self.instances.iter().all(|inst| inst.label.is_some())
    }

    fn violation(&self) -> Option<ViolationKind> {
        match self.label {
            Label::Negative => {
                let positives: Vec<usize> = self
                    .instances
                    .iter()
                    .enumerate()
                    .filter(|(_, inst)| inst.label == Some(Label::Positive))
                    .map(|(j, _)| j)
                    .collect();
                (!positives.is_empty()).then_some(ViolationKind::PositiveInNegativeBag {
                    instances: positives,
                })
            }
            Label::Positive => {
                let all_negative = self
                    .instances
                    .iter()
                    .all(|inst| inst.label == Some(Label::Negative));
                all_negative.then_some(ViolationKind::NoWitnessInPositiveBag)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ViolationKind {
    /// Negative bag holding instances labeled positive (indices within the bag).
    PositiveInNegativeBag { instances: Vec<usize> },
    /// Positive bag whose instances are all labeled negative.
    NoWitnessInPositiveBag,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub bag_index: usize,
    pub bag_id: String,
    pub kind: ViolationKind,
}

/// Bags breaking the standard MIL assumption. Empty when the dataset is consistent.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Per-dataset statistics in the shape of a benchmark description table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub bags: usize,
    pub positive_bags: usize,
    pub instances: usize,
    pub features: usize,
    pub min_instances_per_bag: usize,
    pub max_instances_per_bag: usize,
    pub avg_instances_per_bag: f64,
    /// Positive instances over all instances; `None` without ground truth.
    pub class_imbalance: Option<f64>,
}

/// Maps flattened instance indices to bags and back.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BagLayout {
    offsets: Vec<usize>,
}

impl BagLayout {
    pub fn from_sizes(sizes: impl IntoIterator<Item = usize>) -> Self {
        let mut offsets = vec![0];
        for size in sizes {
            let last = *offsets.last().unwrap();
            offsets.push(last + size);
        }
        Self { offsets }
    }

    pub fn bag_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn instance_count(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn range(&self, bag: usize) -> Range<usize> {
        self.offsets[bag]..self.offsets[bag + 1]
    }

    pub fn bag_of(&self, instance: usize) -> usize {
        self.offsets.partition_point(|&o| o <= instance) - 1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MilDataset {
    name: String,
    feature_dim: usize,
    bags: Vec<Bag>,
}

impl MilDataset {
    /// Builds a dataset, checking bag non-emptiness, unique ids, feature
    /// dimensionality, and the presence of both bag classes.
    pub fn new(name: impl Into<String>, bags: Vec<Bag>) -> Result<Self> {
        let dataset = Self::from_parts(name.into(), bags)?;
        if !dataset.bags.iter().any(|b| b.label.is_positive()) {
            return Err(Error::NoPositiveBags);
        }
        if dataset.bags.iter().all(|b| b.label.is_positive()) {
            return Err(Error::InvalidConfig(
                "dataset needs at least one negative bag".into(),
            ));
        }
        Ok(dataset)
    }

    fn from_parts(name: String, bags: Vec<Bag>) -> Result<Self> {
        let first = bags
            .iter()
            .flat_map(|b| b.instances.first())
            .next()
            .ok_or(Error::EmptyBag)?;
        let feature_dim = first.features.len();
        let mut seen = std::collections::HashSet::new();
        for bag in &bags {
            if bag.is_empty() {
                return Err(Error::EmptyBag);
            }
            if !seen.insert(bag.id.as_str()) {
                return Err(Error::InvalidConfig(format!("duplicate bag id `{}`", bag.id)));
            }
            for inst in &bag.instances {
                if inst.features.len() != feature_dim {
                    return Err(Error::DimensionMismatch {
                        expected: feature_dim,
                        found: inst.features.len(),
                    });
                }
            }
        }
        Ok(Self {
            name,
            feature_dim,
            bags,
        })
    }

    /// Bags at `indices`, in the given order. The result may lack a bag class.
    pub fn subset(&self, name: impl Into<String>, indices: &[usize]) -> MilDataset {
        MilDataset {
            name: name.into(),
            feature_dim: self.feature_dim,
            bags: indices.iter().map(|&i| self.bags[i].clone()).collect(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn bags(&self) -> &[Bag] {
        &self.bags
    }

    pub fn bag_count(&self) -> usize {
        self.bags.len()
    }

    pub fn instance_count(&self) -> usize {
        self.bags.iter().map(Bag::len).sum()
    }

    pub fn bag_index(&self, id: &str) -> Option<usize> {
        self.bags.iter().position(|b| b.id == id)
    }

    pub fn layout(&self) -> BagLayout {
        BagLayout::from_sizes(self.bags.iter().map(Bag::len))
    }

    /// Feature vectors of every instance, flattened in bag order.
    pub fn features(&self) -> Vec<&[f64]> {
        self.bags
            .iter()
            .flat_map(|b| b.instances.iter().map(|i| i.features.as_slice()))
            .collect()
    }

    /// Bag label of every instance, flattened in bag order.
    pub fn bag_labels(&self) -> Vec<Label> {
        self.bags
            .iter()
            .flat_map(|b| std::iter::repeat_n(b.label, b.len()))
            .collect()
    }

    /// Ground-truth instance labels, or `None` if any label is missing.
    pub fn truth(&self) -> Option<Vec<Label>> {
        self.bags
            .iter()
            .flat_map(|b| b.instances.iter().map(|i| i.label))
            .collect()
    }

    pub fn has_ground_truth(&self) -> bool {
        self.bags.iter().all(Bag::has_ground_truth)
    }

    pub fn validate(&self) -> ValidationReport {
        let violations = self
            .bags
            .iter()
            .enumerate()
            .filter_map(|(i, bag)| {
                bag.violation().map(|kind| Violation {
                    bag_index: i,
                    bag_id: bag.id.clone(),
                    kind,
                })
            })
            .collect();
        ValidationReport { violations }
    }

    pub fn summary(&self) -> DatasetSummary {
        let sizes: Vec<usize> = self.bags.iter().map(Bag::len).collect();
        let instances: usize = sizes.iter().sum();
        let class_imbalance = self.truth().map(|truth| {
            truth.iter().filter(|l| l.is_positive()).count() as f64 / instances as f64
        });
        DatasetSummary {
            bags: self.bags.len(),
            positive_bags: self.bags.iter().filter(|b| b.label.is_positive()).count(),
            instances,
            features: self.feature_dim,
            min_instances_per_bag: sizes.iter().copied().min().unwrap_or(0),
            max_instances_per_bag: sizes.iter().copied().max().unwrap_or(0),
            avg_instances_per_bag: instances as f64 / sizes.len().max(1) as f64,
            class_imbalance,
        }
    }

    /// Per-feature z-scoring over all instances. Constant features are only centered.
    pub fn standardized(&self) -> MilDataset {
        let n = self.instance_count() as f64;
        let mut mean = vec![0.0; self.feature_dim];
        for x in self.features() {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; self.feature_dim];
        for x in self.features() {
            for ((s, v), m) in var.iter_mut().zip(x).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        let scale: Vec<f64> = var
            .iter()
            .map(|v| if *v > 0.0 { v.sqrt() } else { 1.0 })
            .collect();
        let bags = self
            .bags
            .iter()
            .map(|bag| Bag {
                id: bag.id.clone(),
                label: bag.label,
                instances: bag
                    .instances
                    .iter()
                    .map(|inst| Instance {
                        features: inst
                            .features
                            .iter()
                            .zip(mean.iter().zip(&scale))
                            .map(|(v, (m, s))| (v - m) / s)
                            .collect(),
                        label: inst.label,
                    })
                    .collect(),
            })
            .collect();
        MilDataset {
            name: self.name.clone(),
            feature_dim: self.feature_dim,
            bags,
        }
    }
}
