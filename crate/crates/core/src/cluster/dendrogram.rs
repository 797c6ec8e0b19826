use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One merge. Node ids follow the usual convention: leaves are `0..n`, the
/// cluster created by link `k` is node `n + k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub left: usize,
    pub right: usize,
    /// Ward merge distance (cophenetic height).
    pub height: f64,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    links: Vec<Link>,
    leaf_count: usize,
}

impl Dendrogram {
    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_count
    }

    /// Link index that created `node`, if it is not a leaf.
    pub fn link_of(&self, node: usize) -> Option<usize> {
        node.checked_sub(self.leaf_count)
    }
}

/// Agglomerative clustering with Ward linkage on Euclidean distances.
///
/// Distances are updated with the Lance-Williams recurrence. Each step merges
/// the globally closest pair of active clusters; ties go to the pair whose
/// slots (the lower leaf index a cluster inherited) compare lowest. Nearest
/// neighbours are cached per cluster, so typical inputs run in O(n^2).
pub fn build_dendrogram<P: AsRef<[f64]>>(points: &[P]) -> Result<Dendrogram> {
    let n = points.len();
    if n < 2 {
        return Err(Error::TooFewInstances { needed: 2, found: n });
    }
    let dim = points[0].as_ref().len();
    for p in points {
        if p.as_ref().len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.as_ref().len(),
            });
        }
    }

    // Squared distances, full symmetric matrix.
    let mut d2 = vec![0.0f64; n * n];
    for i in 0..n {
        let a = points[i].as_ref();
        for j in (i + 1)..n {
            let b = points[j].as_ref();
            let v: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            d2[i * n + j] = v;
            d2[j * n + i] = v;
        }
    }

    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut node = (0..n).collect::<Vec<_>>();
    let mut nn = vec![usize::MAX; n];
    let mut nn_dist = vec![f64::INFINITY; n];

    let nearest = |i: usize, active: &[bool], d2: &[f64]| -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for j in 0..n {
            if j != i && active[j] && d2[i * n + j] < best.1 {
                best = (j, d2[i * n + j]);
            }
        }
        best
    };
    for i in 0..n {
        (nn[i], nn_dist[i]) = nearest(i, &active, &d2);
    }

    let mut links = Vec::with_capacity(n - 1);
    for step in 0..n - 1 {
        // Closest pair: slot i with the smallest cached distance; the cached
        // neighbour is the lowest slot at that distance.
        let mut a = usize::MAX;
        for i in 0..n {
            if active[i] && (a == usize::MAX || nn_dist[i] < nn_dist[a]) {
                a = i;
            }
        }
        let b = nn[a];
        let (lo, hi) = (a.min(b), a.max(b));
        let dist = d2[lo * n + hi];

        let (left, right) = (node[lo].min(node[hi]), node[lo].max(node[hi]));
        let (n_lo, n_hi) = (size[lo] as f64, size[hi] as f64);
        links.push(Link {
            left,
            right,
            height: dist.max(0.0).sqrt(),
            size: size[lo] + size[hi],
        });

        // Merge into slot `lo`.
        active[hi] = false;
        for k in 0..n {
            if !active[k] || k == lo {
                continue;
            }
            let n_k = size[k] as f64;
            let v = ((n_lo + n_k) * d2[lo * n + k] + (n_hi + n_k) * d2[hi * n + k] - n_k * dist)
                / (n_lo + n_hi + n_k);
            d2[lo * n + k] = v;
            d2[k * n + lo] = v;
        }
        size[lo] += size[hi];
        node[lo] = n + step;

        // Refresh cached neighbours touched by the merge.
        for k in 0..n {
            if !active[k] {
                continue;
            }
            if k == lo || nn[k] == lo || nn[k] == hi {
                (nn[k], nn_dist[k]) = nearest(k, &active, &d2);
            } else {
                let v = d2[k * n + lo];
                if v < nn_dist[k] || (v == nn_dist[k] && lo < nn[k]) {
                    nn[k] = lo;
                    nn_dist[k] = v;
                }
            }
        }
    }

    Ok(Dendrogram { links, leaf_count: n })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_pair_merges_first() {
        let d = build_dendrogram(&[[0.0], [1.0], [10.0]]).unwrap();
        assert_eq!((d.links()[0].left, d.links()[0].right), (0, 1));
        assert!((d.links()[0].height - 1.0).abs() < 1e-12);
        assert_eq!((d.links()[1].left, d.links()[1].right), (2, 3));
        // Ward: sqrt(2 * 1 * 2 / 3) * |10 - 0.5|
        let expected = (4.0f64 / 3.0).sqrt() * 9.5;
        assert!((d.links()[1].height - expected).abs() < 1e-12);
        assert_eq!(d.links()[1].size, 3);
    }

    #[test]
    fn duplicates_merge_at_zero_height() {
        let d = build_dendrogram(&[[2.0, 1.0], [2.0, 1.0], [5.0, 5.0], [5.0, 5.0]]).unwrap();
        assert_eq!(d.links()[0].height, 0.0);
        assert_eq!(d.links()[1].height, 0.0);
        assert!(d.links()[2].height > 0.0);
    }

    #[test]
    fn heights_never_decrease_and_nodes_used_once() {
        let pts: Vec<[f64; 2]> = (0..40)
            .map(|i| [((i * 7919) % 97) as f64 * 0.13, ((i * 104729) % 89) as f64 * 0.07])
            .collect();
        let d = build_dendrogram(&pts).unwrap();
        assert_eq!(d.links().len(), 39);
        let mut used = vec![0; 2 * 40 - 1];
        for w in d.links().windows(2) {
            assert!(w[1].height >= w[0].height - 1e-12);
        }
        for l in d.links() {
            used[l.left] += 1;
            used[l.right] += 1;
        }
        assert!(used[..2 * 40 - 2].iter().all(|&c| c == 1));
        assert_eq!(d.links().last().unwrap().size, 40);
    }

    #[test]
    fn needs_two_points() {
        assert!(matches!(
            build_dendrogram(&[[1.0]]),
            Err(Error::TooFewInstances { needed: 2, found: 1 })
        ));
    }
}
