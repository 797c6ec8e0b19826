use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Standard errors below this are treated as zero spread.
const SE_EPSILON: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TTestKind {
    /// Unequal variances, Welch-Satterthwaite degrees of freedom.
    #[default]
    Welch,
    /// Equal variances, pooled estimate.
    Pooled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    ABetter,
    BBetter,
    NoSignificantDifference,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t: f64,
    pub df: f64,
    /// Two-tailed.
    pub p_value: f64,
    pub outcome: Comparison,
}

fn mean_var(sample: &[f64]) -> (f64, f64) {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let var = sample.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn check_sample(sample: &[f64], name: &str) -> Result<()> {
    if sample.len() < 2 {
        return Err(Error::DegenerateSample(format!(
            "sample {name} has {} value(s), need at least 2",
            sample.len()
        )));
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateSample(format!("sample {name} holds a non-finite value")));
    }
    Ok(())
}

/// Two-tailed two-sample t-test of `a` against `b`.
///
/// When both samples have (numerically) zero spread the test degenerates:
/// equal means give `p = 1`, different means `p = 0`.
pub fn t_test(a: &[f64], b: &[f64], alpha: f64, kind: TTestKind) -> Result<TTestResult> {
    check_sample(a, "a")?;
    check_sample(b, "b")?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let diff = ma - mb;
    let (se2, df) = match kind {
        TTestKind::Welch => {
            let (qa, qb) = (va / na, vb / nb);
            let se2 = qa + qb;
            let denom = qa * qa / (na - 1.0) + qb * qb / (nb - 1.0);
            let df = if denom > 0.0 { se2 * se2 / denom } else { na + nb - 2.0 };
            (se2, df)
        }
        TTestKind::Pooled => {
            let df = na + nb - 2.0;
            let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
            (pooled * (1.0 / na + 1.0 / nb), df)
        }
    };
    let se = se2.sqrt();
    let (t, p_value) = if se <= SE_EPSILON {
        if diff.abs() <= SE_EPSILON {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(diff), 0.0)
        }
    } else {
        let t = diff / se;
        let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::DegenerateSample(e.to_string()))?;
        (t, (2.0 * dist.sf(t.abs())).min(1.0))
    };
    let outcome = if p_value < alpha {
        if diff > 0.0 {
            Comparison::ABetter
        } else {
            Comparison::BBetter
        }
    } else {
        Comparison::NoSignificantDifference
    };
    Ok(TTestResult {
        t,
        df,
        p_value,
        outcome,
    })
}

/// Welch's unequal-variance test; see [`t_test`].
pub fn welch_t_test(a: &[f64], b: &[f64], alpha: f64) -> Result<Comparison> {
    Ok(t_test(a, b, alpha, TTestKind::Welch)?.outcome)
}
