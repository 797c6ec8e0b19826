use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Bag, Instance, Label, MilDataset};
use crate::error::{Error, Result};
use crate::rng;

/// Gaussian-mixture MIL problem generator.
///
/// Positive instances come from `positive_cluster_count` isotropic Gaussian
/// modes; negatives come from a separate set of `negative_cluster_count`
/// background modes. Every positive bag gets at least one witness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub name: String,
    pub positive_cluster_count: usize,
    pub negative_cluster_count: usize,
    pub cluster_spread: f64,
    /// Mode centers are drawn inside `[-domain, domain]^d`.
    pub domain: f64,
    pub feature_dim: usize,
    pub positive_bags: usize,
    pub negative_bags: usize,
    pub min_instances: usize,
    pub max_instances: usize,
    pub witness_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            name: "synthetic".into(),
            positive_cluster_count: 4,
            negative_cluster_count: 8,
            cluster_spread: 1.0,
            domain: 10.0,
            feature_dim: 2,
            positive_bags: 60,
            negative_bags: 120,
            min_instances: 4,
            max_instances: 8,
            witness_rate: 0.25,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.witness_rate > 0.0 && self.witness_rate <= 1.0) {
            return fail("witness_rate must lie in (0, 1]");
        }
        if self.positive_cluster_count == 0 || self.negative_cluster_count == 0 {
            return fail("need at least one positive and one negative cluster");
        }
        if !(self.cluster_spread > 0.0 && self.cluster_spread.is_finite()) {
            return fail("cluster_spread must be positive");
        }
        if !(self.domain > 0.0 && self.domain.is_finite()) {
            return fail("domain must be positive");
        }
        if self.feature_dim == 0 {
            return fail("feature_dim must be at least 1");
        }
        if self.positive_bags == 0 || self.negative_bags == 0 {
            return fail("need at least one positive and one negative bag");
        }
        if self.min_instances == 0 || self.min_instances > self.max_instances {
            return fail("instances per bag must satisfy 1 <= min <= max");
        }
        Ok(())
    }
}

fn draw_centers<R: Rng>(rng: &mut R, count: usize, config: &SyntheticConfig) -> Vec<Vec<f64>> {
    // Rejection sampling keeps modes apart; the separation requirement is
    // relaxed whenever the domain is too crowded to honor it.
    let mut min_sep = 4.0 * config.cluster_spread;
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut misses = 0;
    while centers.len() < count {
        let c: Vec<f64> = (0..config.feature_dim)
            .map(|_| rng.random_range(-config.domain..=config.domain))
            .collect();
        let far = centers.iter().all(|o| {
            o.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() >= min_sep
        });
        if far {
            centers.push(c);
            misses = 0;
        } else {
            misses += 1;
            if misses > 1000 {
                min_sep *= 0.9;
                misses = 0;
            }
        }
    }
    centers
}

pub fn generate_synthetic(config: &SyntheticConfig) -> Result<MilDataset> {
    config.validate()?;
    let mut rng = rng::stream(config.seed, rng::SYNTHETIC_STREAM);
    let all = draw_centers(
        &mut rng,
        config.positive_cluster_count + config.negative_cluster_count,
        config,
    );
    let (pos_centers, neg_centers) = all.split_at(config.positive_cluster_count);
    let noise = Normal::new(0.0, config.cluster_spread).expect("spread validated");

    let sample = |rng: &mut rand_chacha::ChaCha8Rng, centers: &[Vec<f64>]| -> Vec<f64> {
        let c = &centers[rng.random_range(0..centers.len())];
        c.iter().map(|m| m + noise.sample(rng)).collect()
    };

    let mut bags = Vec::with_capacity(config.positive_bags + config.negative_bags);
    for b in 0..config.positive_bags {
        let n = rng.random_range(config.min_instances..=config.max_instances);
        let witnesses = Binomial::new(n as u64, config.witness_rate)
            .expect("witness rate validated")
            .sample(&mut rng)
            .max(1) as usize;
        let mut labels: Vec<Label> = (0..n)
            .map(|j| if j < witnesses { Label::Positive } else { Label::Negative })
            .collect();
        labels.shuffle(&mut rng);
        let instances = labels
            .into_iter()
            .map(|label| {
                let centers = if label.is_positive() { pos_centers } else { neg_centers };
                Instance::new(sample(&mut rng, centers), Some(label))
            })
            .collect();
        bags.push(Bag::new(format!("pos{b:04}"), Label::Positive, instances));
    }
    for b in 0..config.negative_bags {
        let n = rng.random_range(config.min_instances..=config.max_instances);
        let instances = (0..n)
            .map(|_| Instance::new(sample(&mut rng, neg_centers), Some(Label::Negative)))
            .collect();
        bags.push(Bag::new(format!("neg{b:04}"), Label::Negative, instances));
    }
    MilDataset::new(config.name.clone(), bags)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_witness_rate_makes_positive_bags_all_positive() {
        let config = SyntheticConfig {
            positive_cluster_count: 1,
            witness_rate: 1.0,
            positive_bags: 10,
            negative_bags: 10,
            ..Default::default()
        };
        let ds = generate_synthetic(&config).unwrap();
        assert!(ds.validate().is_empty());
        for bag in ds.bags().iter().filter(|b| b.label.is_positive()) {
            assert!(bag.instances.iter().all(|i| i.label == Some(Label::Positive)));
        }
    }

    #[test]
    fn witness_rate_controls_positive_count() {
        let config = SyntheticConfig {
            witness_rate: 0.25,
            min_instances: 32,
            max_instances: 32,
            positive_bags: 400,
            negative_bags: 5,
            ..Default::default()
        };
        let ds = generate_synthetic(&config).unwrap();
        let counts: Vec<usize> = ds
            .bags()
            .iter()
            .filter(|b| b.label.is_positive())
            .map(|b| b.instances.iter().filter(|i| i.label == Some(Label::Positive)).count())
            .collect();
        assert!(counts.iter().all(|&c| c >= 1));
        let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
        // Binomial(32, 0.25): sd 2.45, standard error of the mean over 400 bags ~0.12.
        assert!((mean - 8.0).abs() < 0.5, "mean witnesses {mean}");
        assert!(ds.validate().is_empty());
    }

    #[test]
    fn same_seed_same_dataset() {
        let config = SyntheticConfig { seed: 7, ..Default::default() };
        assert_eq!(generate_synthetic(&config).unwrap(), generate_synthetic(&config).unwrap());
        let other = SyntheticConfig { seed: 8, ..Default::default() };
        assert_ne!(generate_synthetic(&config).unwrap(), generate_synthetic(&other).unwrap());
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            SyntheticConfig { witness_rate: 0.0, ..Default::default() },
            SyntheticConfig { positive_cluster_count: 0, ..Default::default() },
            SyntheticConfig { min_instances: 5, max_instances: 4, ..Default::default() },
        ];
        for config in bad {
            assert!(matches!(generate_synthetic(&config), Err(Error::InvalidConfig(_))));
        }
    }
}
