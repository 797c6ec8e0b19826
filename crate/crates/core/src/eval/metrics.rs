use crate::data::Label;
use crate::error::{Error, Result};

fn check_lengths(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch { left, right });
    }
    Ok(())
}

/// `2 TP / (2 TP + FP + FN)`, or 0 when nothing is positive on either side.
pub fn f1_score(predicted: &[Label], truth: &[Label]) -> Result<f64> {
    check_lengths(predicted.len(), truth.len())?;
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&p, &t) in predicted.iter().zip(truth) {
        match (p.is_positive(), t.is_positive()) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let denom = 2 * tp + fp + fn_;
    Ok(if denom == 0 {
        0.0
    } else {
        (2 * tp) as f64 / denom as f64
    })
}

/// Area under the precision-recall curve in average-precision form.
///
/// Instances are ranked by descending score, equal scores by ascending
/// index. The result is the mean, over positives, of the precision at each
/// positive's rank.
pub fn auc_pr(scores: &[f64], truth: &[Label]) -> Result<f64> {
    check_lengths(scores.len(), truth.len())?;
    let positives = truth.iter().filter(|l| l.is_positive()).count();
    if positives == 0 {
        return Err(Error::NoPositives);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if truth[i].is_positive() {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(sum / positives as f64)
}

/// Trapezoidal area under `values` (indexed by query count) divided by the
/// number of queries.
pub fn naulc(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::DegenerateCurve);
    }
    let queries = (values.len() - 1) as f64;
    let area: f64 = values.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum();
    Ok(area / queries)
}

/// Curve value at a fractional query position, interpolating linearly.
pub fn value_at_fraction(values: &[f64], fraction: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::DegenerateCurve);
    }
    let q = values.len() - 1;
    let pos = fraction.clamp(0.0, 1.0) * q as f64;
    let i = (pos.floor() as usize).min(q);
    if i == q {
        return Ok(values[q]);
    }
    let w = pos - i as f64;
    Ok(values[i] * (1.0 - w) + values[i + 1] * w)
}
