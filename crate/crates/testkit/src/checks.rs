//! Randomized comparisons of the library against the reference
//! implementations. Each check returns a verdict with a one-line summary.

use std::fmt;

use mial_core::cluster::{build_dendrogram, Clustering, MultiLevelClustering};
use mial_core::data::{Bag, Instance, Label, MilDataset};
use mial_core::eval::{auc_pr, f1_score, naulc, t_test, TTestKind};
use mial_core::strategy::{
    agin_bag_scores, cbas_bag_scores, select_agin, select_cbas, select_simple_margin, QueryState,
};
use mial_core::svm::{fit, CostSpec, KernelSpec, SolverOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{qp, selection, stats, ward};

#[derive(Clone, Debug)]
pub struct Check {
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn pass(detail: impl Into<String>) -> Self {
        Self { passed: true, detail: detail.into() }
    }

    pub fn fail(detail: impl Into<String>) -> Self {
        Self { passed: false, detail: detail.into() }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", if self.passed { "PASS" } else { "FAIL" }, self.detail)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelFamily {
    Rbf,
    ChiSquared,
}

type KernelFn = dyn Fn(&[f64], &[f64]) -> f64;

fn rbf(x: &[f64], y: &[f64], gamma: f64) -> f64 {
    (-gamma * x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()).exp()
}

fn chi_squared(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&a, &b)| if a + b == 0.0 { 0.0 } else { 2.0 * a * b / (a + b) })
        .sum()
}

/// Fits `problems` random problems of at most 20 points with a tight solver
/// tolerance and compares against projected-gradient optima: dual objective
/// within `1e-4` relative, identical signs on training and fresh points
/// whose reference score is at least `1e-4` away from zero.
pub fn solver_check(family: KernelFamily, problems: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_gap = 0.0f64;
    let mut compared = 0usize;
    let mut skipped = 0usize;
    for p in 0..problems {
        let n = rng.random_range(4..=20);
        let d = rng.random_range(1..=4);
        let point = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..d)
                .map(|_| match family {
                    KernelFamily::Rbf => rng.random_range(-2.0..2.0),
                    KernelFamily::ChiSquared if rng.random_bool(0.2) => 0.0,
                    KernelFamily::ChiSquared => rng.random_range(0.0..2.0),
                })
                .collect()
        };
        let xs: Vec<Vec<f64>> = (0..n).map(|_| point(&mut rng)).collect();
        let mut labels: Vec<Label> = (0..n)
            .map(|_| if rng.random_bool(0.5) { Label::Positive } else { Label::Negative })
            .collect();
        labels[0] = Label::Positive;
        labels[1] = Label::Negative;
        let c_pos = 10f64.powf(rng.random_range(-1.0..1.0));
        let c_neg = 10f64.powf(rng.random_range(-1.0..1.0));
        let gamma = rng.random_range(0.1..2.0);
        let (kernel, k): (KernelSpec, Box<KernelFn>) = match family {
            KernelFamily::Rbf => (KernelSpec::rbf(gamma).unwrap(), Box::new(move |a, b| rbf(a, b, gamma))),
            KernelFamily::ChiSquared => (KernelSpec::ChiSquared, Box::new(chi_squared)),
        };
        let gram: Vec<Vec<f64>> = xs.iter().map(|a| xs.iter().map(|b| k(a, b)).collect()).collect();
        let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
        let upper: Vec<f64> = labels.iter().map(|l| if l.is_positive() { c_pos } else { c_neg }).collect();

        let model = match fit(
            &xs,
            &labels,
            kernel,
            CostSpec::new(c_pos, c_neg).unwrap(),
            &SolverOptions::with_tolerance(1e-6),
        ) {
            Ok(m) => m,
            Err(e) => return Check::fail(format!("problem {p}: fit failed: {e}")),
        };
        let mut alpha = vec![0.0; n];
        for (&i, &coef) in model.support_indices().iter().zip(model.coefficients()) {
            alpha[i] = coef * y[i];
        }
        if alpha.iter().zip(&upper).any(|(a, u)| *a < 0.0 || *a > u * (1.0 + 1e-12)) {
            return Check::fail(format!("problem {p}: multiplier outside its box"));
        }
        let reference = qp::solve_dual(&gram, &y, &upper, 200_000);
        let ours = qp::dual_objective(&gram, &y, &alpha);
        let best = qp::dual_objective(&gram, &y, &reference);
        let gap = (ours - best).abs() / best.abs().max(1.0);
        worst_gap = worst_gap.max(gap);
        if gap > 1e-4 {
            return Check::fail(format!(
                "problem {p}: dual objective {ours} vs reference {best} (relative gap {gap:.2e})"
            ));
        }
        let b = qp::bias(&gram, &y, &upper, &reference);
        let fresh: Vec<Vec<f64>> = (0..20).map(|_| point(&mut rng)).collect();
        for x in xs.iter().chain(&fresh) {
            let s_ref: f64 = (0..n).map(|j| reference[j] * y[j] * k(&xs[j], x)).sum::<f64>() + b;
            if s_ref.abs() < 1e-4 {
                skipped += 1;
                continue;
            }
            compared += 1;
            let s = model.decision_score(x).unwrap();
            if (s >= 0.0) != (s_ref >= 0.0) {
                return Check::fail(format!("problem {p}: sign differs at {x:?}: {s} vs {s_ref}"));
            }
        }
    }
    Check::pass(format!(
        "{problems} problems, worst relative objective gap {worst_gap:.1e}, {compared} signs equal ({skipped} within 1e-4 of zero skipped)"
    ))
}

/// Compares the merge sequence of `sets` random point sets of at most 50
/// points with the exhaustive agglomerative search.
pub fn ward_check(sets: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for s in 0..sets {
        let n = rng.random_range(2..=50);
        let d = rng.random_range(1..=3);
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(0.0..10.0)).collect())
            .collect();
        let tree = match build_dendrogram(&points) {
            Ok(t) => t,
            Err(e) => return Check::fail(format!("set {s}: {e}")),
        };
        let reference = ward::ward_merges(&points);
        for (k, (link, m)) in tree.links().iter().zip(&reference).enumerate() {
            if (link.left, link.right, link.size) != (m.left, m.right, m.size) {
                return Check::fail(format!(
                    "set {s} merge {k}: ({}, {}, size {}) vs reference ({}, {}, size {})",
                    link.left, link.right, link.size, m.left, m.right, m.size
                ));
            }
            let err = (link.height - m.height).abs() / m.height.max(1.0);
            worst = worst.max(err);
            if err > 1e-9 {
                return Check::fail(format!(
                    "set {s} merge {k}: height {} vs reference {}",
                    link.height, m.height
                ));
            }
        }
    }
    Check::pass(format!("{sets} point sets, identical merges, worst height error {worst:.1e}"))
}

/// Random small pool with some positive bags already queried.
pub struct StrategyCase {
    pub dataset: MilDataset,
    pub state: QueryState,
    pub reference: Vec<selection::RefBag>,
    pub scores: Vec<f64>,
    pub levels: MultiLevelClustering,
}

pub fn strategy_case(rng: &mut ChaCha8Rng) -> StrategyCase {
    let bag_count = rng.random_range(2..=7);
    let mut reference = Vec::new();
    let mut bags = Vec::new();
    for b in 0..bag_count {
        let positive = match b {
            0 => true,
            1 => false,
            _ => rng.random_bool(0.6),
        };
        let n = rng.random_range(1..=5);
        let mut truth: Vec<bool> = (0..n).map(|_| positive && rng.random_bool(0.4)).collect();
        if positive && !truth.iter().any(|&t| t) {
            let i = rng.random_range(0..n);
            truth[i] = true;
        }
        let instances = truth
            .iter()
            .map(|&t| {
                let label = if t { Label::Positive } else { Label::Negative };
                Instance::new(vec![rng.random_range(0.0..1.0)], Some(label))
            })
            .collect();
        let label = if positive { Label::Positive } else { Label::Negative };
        bags.push(Bag::new(format!("b{b}"), label, instances));
        reference.push(selection::RefBag { positive, queried: false, truth });
    }
    let dataset = MilDataset::new("case", bags).unwrap();
    let mut state = QueryState::init(&dataset).unwrap();
    let positives: Vec<usize> = (0..bag_count).filter(|&b| reference[b].positive).collect();
    let keep = positives[rng.random_range(0..positives.len())];
    for &b in &positives {
        if b != keep && rng.random_bool(0.4) {
            let answer: Vec<Label> = reference[b]
                .truth
                .iter()
                .map(|&t| if t { Label::Positive } else { Label::Negative })
                .collect();
            state.apply(b, &answer).unwrap();
            reference[b].queried = true;
        }
    }
    let total = dataset.instance_count();
    let scores: Vec<f64> = (0..total)
        .map(|_| {
            let s: f64 = rng.random_range(-2.0..2.0);
            // coarse values make exact ties likely
            if rng.random_bool(0.3) { (s * 2.0).round() / 2.0 } else { s }
        })
        .collect();
    let level_count = rng.random_range(1..=4);
    let levels = (0..level_count)
        .map(|_| {
            let k = rng.random_range(1..=total);
            let assignments: Vec<usize> = (0..total).map(|_| rng.random_range(0..k)).collect();
            Clustering { threshold: 0.0, cluster_count: k, assignments }
        })
        .collect();
    StrategyCase {
        dataset,
        state,
        reference,
        scores,
        levels: MultiLevelClustering { levels },
    }
}

/// Selections and bag scores of aggregated informativeness, simple margin
/// and cluster-based sampling against the reference rules on random pools.
pub fn strategy_check(sessions: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ties = 0usize;
    for s in 0..sessions {
        let case = strategy_case(&mut rng);
        let (state, scores, refs) = (&case.state, &case.scores, &case.reference);
        let assignment: Vec<Vec<usize>> = case.levels.levels.iter().map(|l| l.assignments.clone()).collect();

        let agin = select_agin(state, scores).ok();
        let margin = select_simple_margin(state, scores).ok();
        let cbas = select_cbas(state, &case.levels, scores).ok();
        let expected = (
            selection::agin_choice(refs, scores),
            selection::simple_margin_choice(refs, scores),
            selection::cbas_choice(refs, scores, &assignment),
        );
        if (agin, margin, cbas) != expected {
            return Check::fail(format!(
                "session {s}: selections (agin, margin, cbas) = {:?}, reference {:?}",
                (agin, margin, cbas),
                expected
            ));
        }
        let ours: Vec<(usize, f64)> = agin_bag_scores(state, scores)
            .unwrap()
            .into_iter()
            .map(|b| (b.bag, b.score))
            .collect();
        let theirs = selection::agin_scores(refs, scores);
        let ours_c: Vec<(usize, f64)> = cbas_bag_scores(state, &case.levels, scores)
            .unwrap()
            .into_iter()
            .map(|b| (b.bag, b.score))
            .collect();
        let theirs_c = selection::cbas_scores(refs, scores, &assignment);
        for (a, b) in ours.iter().zip(&theirs).chain(ours_c.iter().zip(&theirs_c)) {
            if a.0 != b.0 || (a.1 - b.1).abs() > 1e-12 {
                return Check::fail(format!("session {s}: bag score {a:?} vs reference {b:?}"));
            }
        }
        if ours.len() != theirs.len() || ours_c.len() != theirs_c.len() {
            return Check::fail(format!("session {s}: candidate sets differ"));
        }
        let top = theirs_c.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
        if theirs_c.iter().filter(|x| x.1 == top).count() > 1 {
            ties += 1;
        }
    }
    Check::pass(format!(
        "{sessions} random sessions, all selections and bag scores equal ({ties} with tied top scores)"
    ))
}

/// Average precision against counting and step-integration references on
/// every label vector and every score vector over `0..n` for `n <= max_n`.
pub fn auc_pr_exhaustive_check(max_n: usize) -> Check {
    let mut cases = 0usize;
    for n in 1..=max_n {
        let score_vectors = n.pow(n as u32);
        for mask in 1u32..(1 << n) {
            let truth: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            let labels: Vec<Label> =
                truth.iter().map(|&t| if t { Label::Positive } else { Label::Negative }).collect();
            for code in 0..score_vectors {
                let mut c = code;
                let scores: Vec<f64> = (0..n)
                    .map(|_| {
                        let v = (c % n) as f64;
                        c /= n;
                        v
                    })
                    .collect();
                let ours = auc_pr(&scores, &labels).unwrap();
                let counted = stats::average_precision(&scores, &truth).unwrap();
                let stepped = stats::step_pr_area(&scores, &truth).unwrap();
                if (ours - counted).abs() > 1e-12 || (ours - stepped).abs() > 1e-12 {
                    return Check::fail(format!(
                        "scores {scores:?} truth {truth:?}: {ours} vs {counted} / {stepped}"
                    ));
                }
                cases += 1;
            }
        }
    }
    Check::pass(format!("{cases} arrangements of up to {max_n} items agree"))
}

/// Confusion-matrix and curve-area values worked out by hand.
pub fn metric_hand_check() -> Check {
    let l = |s: &[i8]| -> Vec<Label> { s.iter().map(|&v| Label::try_from(v).unwrap()).collect() };
    let f1_cases: [(&[i8], &[i8], f64); 5] = [
        (&[1, 1, -1], &[1, 1, -1], 1.0),
        (&[-1, -1, -1], &[1, -1, 1], 0.0),
        // TP 1, FP 1, FN 1
        (&[1, 1, -1, -1], &[1, -1, 1, -1], 0.5),
        // TP 2, FP 1, FN 0: 4 / 5
        (&[1, 1, 1], &[1, 1, -1], 0.8),
        (&[-1, -1], &[-1, -1], 0.0),
    ];
    for (pred, truth, want) in f1_cases {
        let got = f1_score(&l(pred), &l(truth)).unwrap();
        if (got - want).abs() > 1e-15 {
            return Check::fail(format!("f1 {pred:?} vs {truth:?}: {got}, expected {want}"));
        }
    }
    let naulc_cases: [(&[f64], f64); 4] = [
        (&[0.0, 1.0], 0.5),
        (&[0.5, 0.5, 0.5], 0.5),
        (&[1.0, 1.0, 1.0], 1.0),
        (&[0.25; 7], 0.25),
    ];
    for (curve, want) in naulc_cases {
        let got = naulc(curve).unwrap();
        if (got - want).abs() > 1e-15 {
            return Check::fail(format!("naulc {curve:?}: {got}, expected {want}"));
        }
    }
    Check::pass("f1 confusion-matrix values and naulc of [0,1] and constant curves")
}

/// t statistics, degrees of freedom and p-values against direct formulas and
/// Simpson quadrature of the t density.
pub fn t_test_check() -> Check {
    let fixtures: Vec<(Vec<f64>, Vec<f64>)> = vec![
        (vec![0.61, 0.72, 0.69, 0.75, 0.66], vec![0.52, 0.55, 0.61, 0.49, 0.58, 0.50]),
        (vec![1.0, 2.0, 3.0], vec![1.5, 2.5, 3.5, 4.5]),
        (vec![0.80, 0.81, 0.79, 0.82, 0.78, 0.80, 0.83], vec![0.60, 0.95, 0.70, 0.90, 0.75]),
        (vec![10.0, 12.0, 9.0, 11.0], vec![10.5, 11.5]),
        ((0..20).map(|i| (i as f64 * 0.37).sin()).collect(), (0..25).map(|i| 0.2 + (i as f64 * 0.73).cos()).collect()),
    ];
    let mut worst = 0.0f64;
    for (a, b) in &fixtures {
        for kind in [TTestKind::Welch, TTestKind::Pooled] {
            let r = t_test(a, b, 0.05, kind).unwrap();
            let (t, df) = match kind {
                TTestKind::Welch => stats::welch(a, b),
                TTestKind::Pooled => stats::pooled(a, b),
            };
            let p = stats::two_tailed_p(t, df);
            if (r.t - t).abs() > 1e-9 * t.abs().max(1.0) || (r.df - df).abs() > 1e-9 * df {
                return Check::fail(format!("{kind:?}: t/df {} {} vs {t} {df}", r.t, r.df));
            }
            worst = worst.max((r.p_value - p).abs());
            if (r.p_value - p).abs() > 1e-6 {
                return Check::fail(format!("{kind:?}: p {} vs quadrature {p}", r.p_value));
            }
        }
    }
    Check::pass(format!("{} fixtures, both variants, worst p error {worst:.1e}", fixtures.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_pass_on_small_runs() {
        assert!(solver_check(KernelFamily::Rbf, 3, 1).passed);
        assert!(solver_check(KernelFamily::ChiSquared, 3, 1).passed);
        assert!(ward_check(3, 1).passed);
        assert!(strategy_check(10, 1).passed);
        assert!(auc_pr_exhaustive_check(3).passed);
        assert!(metric_hand_check().passed);
        assert!(t_test_check().passed);
    }
}
