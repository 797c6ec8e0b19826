use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::kernel::{GramMatrix, KernelSpec};
use super::smo::DualSolution;
use super::CostSpec;
use crate::data::Label;
use crate::error::{Error, Result};

const MODEL_FORMAT: &str = "mial-svm-model";
const MODEL_VERSION: u32 = 1;

/// Trained decision function `s(x) = sum_i coef_i k(sv_i, x) + bias`, where
/// `coef_i = alpha_i y_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    kernel: KernelSpec,
    costs: CostSpec,
    /// Positions of the support vectors in the training set.
    support_indices: Vec<usize>,
    support_vectors: Vec<Vec<f64>>,
    coefficients: Vec<f64>,
    bias: f64,
    iterations: usize,
    kkt_violation: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    model: TrainedModel,
}

impl TrainedModel {
    pub(crate) fn from_solution(
        gram: &GramMatrix,
        y: &[f64],
        costs: CostSpec,
        solution: DualSolution,
    ) -> Self {
        let mut support_indices = Vec::new();
        let mut support_vectors = Vec::new();
        let mut coefficients = Vec::new();
        for (i, &a) in solution.alpha.iter().enumerate() {
            if a > 0.0 {
                support_indices.push(i);
                support_vectors.push(gram.point(i).to_vec());
                coefficients.push(a * y[i]);
            }
        }
        Self {
            kernel: gram.kernel(),
            costs,
            support_indices,
            support_vectors,
            coefficients,
            bias: solution.bias,
            iterations: solution.iterations,
            kkt_violation: solution.violation,
        }
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn costs(&self) -> CostSpec {
        self.costs
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn support_indices(&self) -> &[usize] {
        &self.support_indices
    }

    pub fn support_vectors(&self) -> &[Vec<f64>] {
        &self.support_vectors
    }

    /// Signed dual coefficients `alpha_i y_i`, aligned with [`Self::support_indices`].
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn kkt_violation(&self) -> f64 {
        self.kkt_violation
    }

    pub fn dim(&self) -> Option<usize> {
        self.support_vectors.first().map(Vec::len)
    }

    pub fn decision_score(&self, x: &[f64]) -> Result<f64> {
        if let Some(dim) = self.dim() {
            if dim != x.len() {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: x.len(),
                });
            }
        }
        Ok(self.score_unchecked(x))
    }

    fn score_unchecked(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, c)| c * self.kernel.eval_unchecked(sv, x))
            .sum::<f64>()
            + self.bias
    }

    /// `sign(decision_score)`, with a zero score mapped to positive.
    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        self.decision_score(x).map(Label::from_score)
    }

    /// Scores of every point of the Gram matrix the model was trained on,
    /// read from the cached kernel values. Bit-identical to calling
    /// [`Self::decision_score`] on each point.
    pub fn training_scores(&self, gram: &GramMatrix) -> Vec<f64> {
        (0..gram.len())
            .map(|t| {
                self.support_indices
                    .iter()
                    .zip(&self.coefficients)
                    .map(|(&s, c)| c * gram.get(s, t))
                    .sum::<f64>()
                    + self.bias
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(&ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            model: self.clone(),
        })
        .map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported model container {} v{}",
                file.format, file.version
            )));
        }
        Ok(file.model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::{fit, SolverOptions};

    fn sample_model() -> (Vec<Vec<f64>>, TrainedModel) {
        let x: Vec<Vec<f64>> = (0..16)
            .map(|i| vec![(i as f64 * 0.61).sin() * 3.0, (i as f64 * 1.3).cos()])
            .collect();
        let l: Vec<Label> = x.iter().map(|p| Label::from_score(p[0] + 0.3 * p[1])).collect();
        let model = fit(
            &x,
            &l,
            KernelSpec::rbf(0.5).unwrap(),
            CostSpec::new(5.0, 2.0).unwrap(),
            &SolverOptions::default(),
        )
        .unwrap();
        (x, model)
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let (x, model) = sample_model();
        let back = TrainedModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(model, back);
        for p in &x {
            let a = model.decision_score(p).unwrap();
            let b = back.decision_score(p).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn save_and_load() {
        let (_, model) = sample_model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        model.save(&path).unwrap();
        assert_eq!(TrainedModel::load(&path).unwrap(), model);
        assert!(TrainedModel::load(dir.path().join("missing.json")).is_err());
    }

    #[test]
    fn training_scores_match_decision_scores() {
        let (x, model) = sample_model();
        let gram = GramMatrix::new(model.kernel(), &x, 1000).unwrap();
        let cached = model.training_scores(&gram);
        for (p, s) in x.iter().zip(cached) {
            assert_eq!(model.decision_score(p).unwrap().to_bits(), s.to_bits());
        }
    }

    #[test]
    fn rejects_wrong_dimension_and_foreign_containers() {
        let (_, model) = sample_model();
        assert!(matches!(
            model.decision_score(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
        let json = model.to_json().unwrap().replace("\"version\":1", "\"version\":9");
        assert!(TrainedModel::from_json(&json).is_err());
    }
}
