//! Cost-sensitive kernel SVM.
//!
//! Misclassification costs differ per class: `C+` for positives and `C-`
//! for negatives. The active-learning loop sets `C- = rho * C+` with
//! `rho = N+ / N-` recomputed from the current working labels before every
//! retrain (see [`CostSpec::from_imbalance`]).

mod kernel;
mod model;
mod smo;

use serde::{Deserialize, Serialize};

pub use self::kernel::{GramMatrix, KernelSpec, DEFAULT_GRAM_LIMIT};
pub use self::model::TrainedModel;

use crate::data::Label;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    pub c_positive: f64,
    pub c_negative: f64,
}

impl CostSpec {
    pub fn new(c_positive: f64, c_negative: f64) -> Result<Self> {
        let costs = Self {
            c_positive,
            c_negative,
        };
        costs.validate()?;
        Ok(costs)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |c: f64| c > 0.0 && c.is_finite();
        if ok(self.c_positive) && ok(self.c_negative) {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "costs must be positive, got C+={} C-={}",
                self.c_positive, self.c_negative
            )))
        }
    }

    /// `C+ = base`, `C- = rho * base` with `rho` taken from `labels`.
    pub fn from_imbalance(base: f64, labels: &[Label]) -> Result<Self> {
        let rho = imbalance_ratio(labels)?;
        Self::new(base, rho * base)
    }

    pub fn for_label(&self, label: Label) -> f64 {
        match label {
            Label::Positive => self.c_positive,
            Label::Negative => self.c_negative,
        }
    }
}

/// `N+ / N-` over `labels`.
pub fn imbalance_ratio(labels: &[Label]) -> Result<f64> {
    let positives = labels.iter().filter(|l| l.is_positive()).count();
    let negatives = labels.len() - positives;
    if negatives == 0 {
        return Err(Error::UndefinedRatio);
    }
    Ok(positives as f64 / negatives as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Stopping threshold on the maximal KKT violation.
    pub tolerance: f64,
    /// Iteration cap; `None` means `max(1_000_000, 100 * n)`.
    pub max_iterations: Option<usize>,
    /// Point count up to which the Gram matrix is cached.
    pub gram_limit: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-3,
            max_iterations: None,
            gram_limit: DEFAULT_GRAM_LIMIT,
        }
    }
}

impl SolverOptions {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self {
            tolerance,
            ..Self::default()
        }
    }
}

/// Trains on `instances` with per-class costs.
pub fn fit<P: AsRef<[f64]>>(
    instances: &[P],
    labels: &[Label],
    kernel: KernelSpec,
    costs: CostSpec,
    options: &SolverOptions,
) -> Result<TrainedModel> {
    if instances.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: instances.len(),
            right: labels.len(),
        });
    }
    let gram = GramMatrix::new(kernel, instances, options.gram_limit)?;
    fit_gram(&gram, labels, costs, options)
}

/// Trains on the points of a prebuilt Gram matrix. Lets a caller reuse the
/// kernel values across retrains when only the labels change.
pub fn fit_gram(
    gram: &GramMatrix,
    labels: &[Label],
    costs: CostSpec,
    options: &SolverOptions,
) -> Result<TrainedModel> {
    costs.validate()?;
    if gram.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: gram.len(),
            right: labels.len(),
        });
    }
    if options.tolerance.is_nan() || options.tolerance <= 0.0 {
        return Err(Error::InvalidConfig("solver tolerance must be positive".into()));
    }
    let has_pos = labels.iter().any(|l| l.is_positive());
    let has_neg = labels.iter().any(|l| !l.is_positive());
    if !(has_pos && has_neg) {
        return Err(Error::SingleClass);
    }
    let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    let upper: Vec<f64> = labels.iter().map(|&l| costs.for_label(l)).collect();
    let max_iterations = options
        .max_iterations
        .unwrap_or_else(|| (100 * labels.len()).max(1_000_000));
    let solution = smo::solve(gram, &y, &upper, options.tolerance, max_iterations)?;
    Ok(TrainedModel::from_solution(gram, &y, costs, solution))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(signs: &[i8]) -> Vec<Label> {
        signs.iter().map(|&s| Label::try_from(s).unwrap()).collect()
    }

    #[test]
    fn imbalance_ratio_examples() {
        let mut l = vec![Label::Positive; 10];
        l.extend(vec![Label::Negative; 90]);
        assert!((imbalance_ratio(&l).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(imbalance_ratio(&labels(&[1, -1, 1, -1])).unwrap(), 1.0);
        assert!(matches!(imbalance_ratio(&labels(&[1, 1])), Err(Error::UndefinedRatio)));
    }

    #[test]
    fn table_costs_from_ratio() {
        let costs = CostSpec::from_imbalance(1000.0, &labels(&[1, -1, -1, -1])).unwrap();
        assert_eq!(costs.c_positive, 1000.0);
        assert!((costs.c_negative - 1000.0 / 3.0).abs() < 1e-12);
        assert!(CostSpec::new(0.0, 1.0).is_err());
    }

    #[test]
    fn symmetric_two_point_problem() {
        let x = vec![vec![-1.0], vec![1.0]];
        let model = fit(
            &x,
            &labels(&[-1, 1]),
            KernelSpec::rbf(1.0).unwrap(),
            CostSpec::new(1.0, 1.0).unwrap(),
            &SolverOptions::with_tolerance(1e-9),
        )
        .unwrap();
        assert!(model.decision_score(&[0.0]).unwrap().abs() < 1e-12);
        assert!(model.decision_score(&[1.0]).unwrap() > 0.0);
        assert!(model.decision_score(&[-1.0]).unwrap() < 0.0);
        assert_eq!(model.predict(&[0.0]).unwrap(), Label::Positive);
    }

    #[test]
    fn rejects_single_class_and_bad_lengths() {
        let x = vec![vec![0.0], vec![1.0]];
        let k = KernelSpec::rbf(1.0).unwrap();
        let c = CostSpec::new(1.0, 1.0).unwrap();
        assert!(matches!(
            fit(&x, &labels(&[1, 1]), k, c, &SolverOptions::default()),
            Err(Error::SingleClass)
        ));
        assert!(matches!(
            fit(&x, &labels(&[1]), k, c, &SolverOptions::default()),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn iteration_cap_reports_violation() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64 * 0.37).sin()]).collect();
        let l: Vec<Label> = (0..30).map(|i| if i % 2 == 0 { Label::Positive } else { Label::Negative }).collect();
        let options = SolverOptions {
            tolerance: 1e-9,
            max_iterations: Some(2),
            ..SolverOptions::default()
        };
        let err = fit(&x, &l, KernelSpec::rbf(1.0).unwrap(), CostSpec::new(10.0, 10.0).unwrap(), &options)
            .unwrap_err();
        assert!(matches!(err, Error::NonConvergence { iterations: 2, violation } if violation > 1e-9));
    }

    #[test]
    fn table_configuration_is_accepted() {
        // C+ = 1000, C- = rho * 1000, rbf gamma = 0.01
        let x: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64, (i % 4) as f64]).collect();
        let l: Vec<Label> = (0..12).map(|i| if i < 3 { Label::Positive } else { Label::Negative }).collect();
        let costs = CostSpec::from_imbalance(1000.0, &l).unwrap();
        let model = fit(&x, &l, KernelSpec::rbf(0.01).unwrap(), costs, &SolverOptions::default()).unwrap();
        assert_eq!(model.costs(), costs);
        assert!((costs.c_negative - 1000.0 / 3.0).abs() < 1e-9);
        assert_eq!(model.kernel(), KernelSpec::GaussianRbf { gamma: 0.01 });
    }
}
