//! Bag selection rules written out directly from their definitions.

/// A bag as seen by the reference rules.
#[derive(Clone, Debug)]
pub struct RefBag {
    pub positive: bool,
    pub queried: bool,
    /// Ground-truth instance labels.
    pub truth: Vec<bool>,
}

impl RefBag {
    fn candidate(&self) -> bool {
        self.positive && !self.queried
    }

    /// Instance labels are known in negative bags and in queried bags.
    fn known(&self) -> bool {
        !self.positive || self.queried
    }
}

/// Flattened index of the first instance of each bag.
fn offsets(bags: &[RefBag]) -> Vec<usize> {
    let mut out = Vec::with_capacity(bags.len());
    let mut at = 0;
    for b in bags {
        out.push(at);
        at += b.truth.len();
    }
    out
}

/// Highest score wins; on equal scores the earlier entry.
fn first_max(scored: &[(usize, f64)]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &(bag, s) in scored {
        match best {
            Some((_, b)) if s <= b => {}
            _ => best = Some((bag, s)),
        }
    }
    best.map(|(b, _)| b)
}

/// Per-candidate sum of `exp(-2 |s|)`.
pub fn agin_scores(bags: &[RefBag], scores: &[f64]) -> Vec<(usize, f64)> {
    let off = offsets(bags);
    bags.iter()
        .enumerate()
        .filter(|(_, b)| b.candidate())
        .map(|(k, b)| {
            let g = (0..b.truth.len())
                .map(|i| (-2.0 * scores[off[k] + i].abs()).exp())
                .sum();
            (k, g)
        })
        .collect()
}

pub fn agin_choice(bags: &[RefBag], scores: &[f64]) -> Option<usize> {
    first_max(&agin_scores(bags, scores))
}

/// Bag of the candidate instance with the smallest `|s|`.
pub fn simple_margin_choice(bags: &[RefBag], scores: &[f64]) -> Option<usize> {
    let off = offsets(bags);
    let mut best: Option<(usize, f64)> = None;
    for (k, b) in bags.iter().enumerate().filter(|(_, b)| b.candidate()) {
        for i in 0..b.truth.len() {
            let m = scores[off[k] + i].abs();
            match best {
                Some((_, bm)) if m >= bm => {}
                _ => best = Some((k, m)),
            }
        }
    }
    best.map(|(k, _)| k)
}

fn entropy_bits(p: f64) -> f64 {
    let mut h = 0.0;
    for q in [p, 1.0 - p] {
        if q > 0.0 {
            h -= q * q.log2();
        }
    }
    h
}

/// Cluster criterion for the instances in `members` (flattened indices).
pub fn cluster_value(bags: &[RefBag], scores: &[f64], members: &[usize]) -> f64 {
    let off = offsets(bags);
    let owner = |i: usize| (0..bags.len()).rev().find(|&k| off[k] <= i).unwrap();
    let n = members.len() as f64;
    let mut from_pos = 0.0;
    let mut pos = 0.0;
    let mut unknown = 0.0;
    for &i in members {
        let k = owner(i);
        let bag = &bags[k];
        if bag.positive {
            from_pos += 1.0;
        }
        let label = if bag.known() {
            bag.truth[i - off[k]]
        } else {
            scores[i] >= 0.0
        };
        if label {
            pos += 1.0;
        }
        if !bag.known() {
            unknown += 1.0;
        }
    }
    let alpha = unknown / n;
    let e = (1.0 - (-alpha).exp()) / (1.0 - (-1.0f64).exp());
    entropy_bits(from_pos / n) * entropy_bits(pos / n) * e
}

/// Accumulated criterion of every instance over the given levels, each a
/// cluster assignment of all instances.
pub fn cbas_phi(bags: &[RefBag], scores: &[f64], levels: &[Vec<usize>]) -> Vec<f64> {
    let n = scores.len();
    (0..n)
        .map(|i| {
            levels
                .iter()
                .map(|level| {
                    let members: Vec<usize> = (0..n).filter(|&j| level[j] == level[i]).collect();
                    cluster_value(bags, scores, &members)
                })
                .sum()
        })
        .collect()
}

pub fn cbas_scores(bags: &[RefBag], scores: &[f64], levels: &[Vec<usize>]) -> Vec<(usize, f64)> {
    let phi = cbas_phi(bags, scores, levels);
    let off = offsets(bags);
    bags.iter()
        .enumerate()
        .filter(|(_, b)| b.candidate())
        .map(|(k, b)| (k, (0..b.truth.len()).map(|i| phi[off[k] + i]).sum()))
        .collect()
}

pub fn cbas_choice(bags: &[RefBag], scores: &[f64], levels: &[Vec<usize>]) -> Option<usize> {
    first_max(&cbas_scores(bags, scores, levels))
}
