use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Instance-space kernel.
///
/// The chi-squared kernel is the additive form `sum 2 x_i y_i / (x_i + y_i)`
/// with `0/0 = 0`, defined on non-negative features only.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelSpec {
    GaussianRbf { gamma: f64 },
    ChiSquared,
}

impl KernelSpec {
    pub fn rbf(gamma: f64) -> Result<Self> {
        let spec = KernelSpec::GaussianRbf { gamma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::GaussianRbf { gamma } if !(gamma > 0.0 && gamma.is_finite()) => Err(
                Error::InvalidConfig(format!("rbf gamma must be positive, got {gamma}")),
            ),
            _ => Ok(()),
        }
    }

    /// Checks that `x` lies in the kernel's domain.
    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if let KernelSpec::ChiSquared = self {
            if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| **v < 0.0) {
                return Err(Error::NegativeFeature { index, value });
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                found: y.len(),
            });
        }
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.eval_unchecked(x, y))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelSpec::GaussianRbf { gamma } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
            KernelSpec::ChiSquared => x
                .iter()
                .zip(y)
                .map(|(a, b)| {
                    let s = a + b;
                    if s > 0.0 {
                        2.0 * a * b / s
                    } else {
                        0.0
                    }
                })
                .sum(),
        }
    }
}

/// Kernel values over a fixed point set, precomputed when small enough.
#[derive(Clone, Debug)]
pub struct GramMatrix {
    kernel: KernelSpec,
    points: Vec<Vec<f64>>,
    dense: Option<Vec<f64>>,
}

/// Largest point count for which the full matrix is cached.
pub const DEFAULT_GRAM_LIMIT: usize = 8192;

impl GramMatrix {
    pub fn new<P: AsRef<[f64]>>(kernel: KernelSpec, points: &[P], limit: usize) -> Result<Self> {
        kernel.validate()?;
        let points: Vec<Vec<f64>> = points.iter().map(|p| p.as_ref().to_vec()).collect();
        if let Some(first) = points.first() {
            for p in &points {
                if p.len() != first.len() {
                    return Err(Error::DimensionMismatch {
                        expected: first.len(),
                        found: p.len(),
                    });
                }
                kernel.check_point(p)?;
            }
        }
        let n = points.len();
        let dense = (n <= limit).then(|| {
            let mut values = vec![0.0; n * n];
            values
                .par_chunks_mut(n.max(1))
                .enumerate()
                .for_each(|(i, row)| {
                    for (j, v) in row.iter_mut().enumerate() {
                        *v = kernel.eval_unchecked(&points[i], &points[j]);
                    }
                });
            values
        });
        Ok(Self {
            kernel,
            points,
            dense,
        })
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_cached(&self) -> bool {
        self.dense.is_some()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.dense {
            Some(values) => values[i * self.points.len() + j],
            None => self.kernel.eval_unchecked(&self.points[i], &self.points[j]),
        }
    }

    /// Row `i`, borrowed from the cache or computed into `scratch`.
    pub fn row<'a>(&'a self, i: usize, scratch: &'a mut Vec<f64>) -> &'a [f64] {
        let n = self.points.len();
        match &self.dense {
            Some(values) => &values[i * n..(i + 1) * n],
            None => {
                scratch.clear();
                scratch.extend(
                    self.points
                        .iter()
                        .map(|p| self.kernel.eval_unchecked(&self.points[i], p)),
                );
                scratch
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rbf_values() {
        let k = KernelSpec::rbf(0.1).unwrap();
        assert_eq!(k.eval(&[1.0, -2.0], &[1.0, -2.0]).unwrap(), 1.0);
        // squared distance 10
        let v = k.eval(&[0.0, 0.0], &[1.0, 3.0]).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.367879).abs() < 1e-6);
    }

    #[test]
    fn chi_squared_values() {
        let k = KernelSpec::ChiSquared;
        // 2*0.25/1 + 2*0.25/1
        assert!((k.eval(&[0.5, 0.5], &[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(k.eval(&[0.0, 1.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(
            k.eval(&[0.5, -0.1], &[0.5, 0.5]),
            Err(Error::NegativeFeature { index: 1, .. })
        ));
    }

    #[test]
    fn rejects_dimension_mismatch_and_bad_gamma() {
        let k = KernelSpec::rbf(1.0).unwrap();
        assert!(matches!(
            k.eval(&[0.0], &[0.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(KernelSpec::rbf(0.0).is_err());
        assert!(KernelSpec::rbf(-1.0).is_err());
    }

    #[test]
    fn kernels_are_symmetric() {
        let x = [0.3, 1.7, 0.0];
        let y = [2.2, 0.1, 0.4];
        for k in [KernelSpec::rbf(0.7).unwrap(), KernelSpec::ChiSquared] {
            assert_eq!(k.eval(&x, &y).unwrap(), k.eval(&y, &x).unwrap());
        }
    }

    #[test]
    fn cached_and_on_demand_rows_agree() {
        let pts: Vec<Vec<f64>> = (0..7).map(|i| vec![i as f64 * 0.3, (i * i) as f64 * 0.1]).collect();
        let k = KernelSpec::rbf(0.5).unwrap();
        let cached = GramMatrix::new(k, &pts, 100).unwrap();
        let lazy = GramMatrix::new(k, &pts, 3).unwrap();
        assert!(cached.is_cached() && !lazy.is_cached());
        let (mut s1, mut s2) = (Vec::new(), Vec::new());
        for i in 0..pts.len() {
            assert_eq!(cached.row(i, &mut s1), lazy.row(i, &mut s2));
        }
    }
}
