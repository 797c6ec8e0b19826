//! Accelerated projected gradient for the box-constrained SVM dual.

/// `max  sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij`.
pub fn dual_objective(kernel: &[Vec<f64>], y: &[f64], alpha: &[f64]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * kernel[i][j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Euclidean projection onto `{0 <= a <= upper, y'a = 0}`.
///
/// The projection is `clip(v - lambda y)` for the `lambda` zeroing `y'a`.
/// The residual is piecewise linear and non-increasing in `lambda`, so the
/// root is interpolated exactly between consecutive breakpoints.
pub fn project(v: &[f64], y: &[f64], upper: &[f64]) -> Vec<f64> {
    let at = |lambda: f64| -> Vec<f64> {
        v.iter()
            .zip(y)
            .zip(upper)
            .map(|((&vi, &yi), &ui)| (vi - lambda * yi).clamp(0.0, ui))
            .collect()
    };
    let residual = |lambda: f64| -> f64 {
        v.iter()
            .zip(y)
            .zip(upper)
            .map(|((&vi, &yi), &ui)| yi * (vi - lambda * yi).clamp(0.0, ui))
            .sum()
    };
    let mut breaks: Vec<f64> = v
        .iter()
        .zip(y)
        .zip(upper)
        .flat_map(|((&vi, &yi), &ui)| [vi / yi, (vi - ui) / yi])
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let values: Vec<f64> = breaks.iter().map(|&l| residual(l)).collect();
    if let Some(k) = values.iter().position(|&r| r == 0.0) {
        return at(breaks[k]);
    }
    // residual is >= 0 left of the root and <= 0 right of it
    let k = values.iter().position(|&r| r < 0.0).unwrap_or(values.len());
    let lambda = if k == 0 || k == values.len() {
        // constant residual outside the breakpoints: only happens without both classes
        breaks[k.min(values.len() - 1)]
    } else {
        let (l0, l1, r0, r1) = (breaks[k - 1], breaks[k], values[k - 1], values[k]);
        l0 + (l1 - l0) * r0 / (r0 - r1)
    };
    at(lambda)
}

fn largest_eigenvalue(q: &[Vec<f64>]) -> f64 {
    let n = q.len();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda = 0.0;
    for _ in 0..500 {
        let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| q[i][j] * v[j]).sum()).collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let next = w.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
        v = w.iter().map(|x| x / norm).collect();
        if (next - lambda).abs() <= 1e-12 * next.abs() {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda
}

/// Maximizes the dual with FISTA plus adaptive restart; returns the
/// multipliers.
pub fn solve_dual(kernel: &[Vec<f64>], y: &[f64], upper: &[f64], max_iterations: usize) -> Vec<f64> {
    let n = y.len();
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| y[i] * y[j] * kernel[i][j]).collect())
        .collect();
    // 5% safety margin over the power-iteration estimate.
    let step = 1.0 / (1.05 * largest_eigenvalue(&q)).max(1e-12);
    let grad = |a: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| (0..n).map(|j| q[i][j] * a[j]).sum::<f64>() - 1.0)
            .collect()
    };
    let objective = |a: &[f64]| dual_objective(kernel, y, a);
    let mut x = vec![0.0; n];
    let mut z = x.clone();
    let mut t = 1.0f64;
    let mut best = objective(&x);
    for _ in 0..max_iterations {
        let g = grad(&z);
        let v: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi - step * gi).collect();
        let next = project(&v, y, upper);
        let value = objective(&next);
        let moved = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if value < best {
            // objective went down: restart momentum from the last iterate
            z = x.clone();
            t = 1.0;
            continue;
        }
        best = value;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = next
            .iter()
            .zip(&x)
            .map(|(a, b)| a + (t - 1.0) / t_next * (a - b))
            .collect();
        x = next;
        t = t_next;
        if moved <= 1e-13 {
            break;
        }
    }
    x
}

/// Offset of the decision function from the multipliers' KKT conditions.
pub fn bias(kernel: &[Vec<f64>], y: &[f64], upper: &[f64], alpha: &[f64]) -> f64 {
    let n = y.len();
    let f = |i: usize| (0..n).map(|j| alpha[j] * y[j] * kernel[i][j]).sum::<f64>();
    let free: Vec<usize> = (0..n)
        .filter(|&i| alpha[i] > 1e-7 * upper[i] && alpha[i] < upper[i] * (1.0 - 1e-7))
        .collect();
    if !free.is_empty() {
        return free.iter().map(|&i| y[i] - f(i)).sum::<f64>() / free.len() as f64;
    }
    // b must satisfy y_i (f_i + b) >= 1 at lower-bound points and <= 1 at
    // upper-bound points: take the midpoint of the feasible interval.
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..n {
        let at_upper = alpha[i] >= upper[i] * (1.0 - 1e-7);
        let r = y[i] - f(i);
        if (y[i] > 0.0) != at_upper {
            lo = lo.max(r);
        } else {
            hi = hi.min(r);
        }
    }
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo,
        (false, true) => hi,
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_is_feasible() {
        let y = [1.0, -1.0, 1.0, -1.0];
        let upper = [1.0, 2.0, 1.0, 2.0];
        let a = project(&[3.0, -1.0, 0.5, 0.2], &y, &upper);
        let r: f64 = a.iter().zip(&y).map(|(a, y)| a * y).sum();
        assert!(r.abs() < 1e-9);
        assert!(a.iter().zip(&upper).all(|(a, u)| *a >= 0.0 && a <= u));
    }

    #[test]
    fn two_point_problem() {
        // K = I: the dual optimum is a = (1, 1), objective 1.
        let k = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let y = [1.0, -1.0];
        let a = solve_dual(&k, &y, &[10.0, 10.0], 10_000);
        assert!((a[0] - 1.0).abs() < 1e-8 && (a[1] - 1.0).abs() < 1e-8);
        assert!((dual_objective(&k, &y, &a) - 1.0).abs() < 1e-8);
        assert!(bias(&k, &y, &[10.0, 10.0], &a).abs() < 1e-8);
    }
}
