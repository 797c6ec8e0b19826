use serde::{Deserialize, Serialize};

use super::dendrogram::Dendrogram;

/// Height statistics over the window of links under one link.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkStats {
    pub mean: f64,
    /// Sample standard deviation; zero for a single-link window.
    pub std: f64,
    pub count: usize,
    pub coefficient: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InconsistencyTable {
    pub depth: usize,
    pub stats: Vec<LinkStats>,
}

impl InconsistencyTable {
    pub fn coefficients(&self) -> impl Iterator<Item = f64> + '_ {
        self.stats.iter().map(|s| s.coefficient)
    }

    pub fn coefficient(&self, link: usize) -> f64 {
        self.stats[link].coefficient
    }
}

/// Inconsistency coefficient of every link.
///
/// The window of link `k` holds `k` and every link at most `depth - 1`
/// levels beneath it, so `depth = 1` is the link alone and `depth = 2` adds
/// its child links. The coefficient is `(h_k - mean) / std` over the window
/// heights, or 0 when the standard deviation vanishes.
pub fn inconsistency(dendrogram: &Dendrogram, depth: usize) -> InconsistencyTable {
    let depth = depth.max(1);
    let links = dendrogram.links();
    let mut stack = Vec::new();
    let stats = (0..links.len())
        .map(|k| {
            let mut heights = Vec::new();
            stack.clear();
            stack.push((k, 1usize));
            while let Some((link, level)) = stack.pop() {
                heights.push(links[link].height);
                if level < depth {
                    for child in [links[link].left, links[link].right] {
                        if let Some(c) = dendrogram.link_of(child) {
                            stack.push((c, level + 1));
                        }
                    }
                }
            }
            let count = heights.len();
            let mean = heights.iter().sum::<f64>() / count as f64;
            let std = if count > 1 {
                (heights.iter().map(|h| (h - mean) * (h - mean)).sum::<f64>() / (count - 1) as f64)
                    .sqrt()
            } else {
                0.0
            };
            let coefficient = if std > 0.0 {
                (links[k].height - mean) / std
            } else {
                0.0
            };
            LinkStats {
                mean,
                std,
                count,
                coefficient,
            }
        })
        .collect();
    InconsistencyTable { depth, stats }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::build_dendrogram;

    #[test]
    fn two_level_window() {
        // Leaves 0, 1 merge at height 1; the pair then joins leaf 2.
        // Choose the third point so the second link has height exactly 3:
        // sqrt(4/3) * |x - 0.5| = 3.
        let x = 0.5 + 3.0 / (4.0f64 / 3.0).sqrt();
        let d = build_dendrogram(&[[0.0], [1.0], [x]]).unwrap();
        assert!((d.links()[1].height - 3.0).abs() < 1e-12);
        let table = inconsistency(&d, 2);
        // window {1, 3}: mean 2, sample std sqrt(2)
        let s = table.stats[1];
        assert_eq!(s.count, 2);
        assert!((s.mean - 2.0).abs() < 1e-12);
        assert!((s.std - 2f64.sqrt()).abs() < 1e-12);
        assert!((s.coefficient - 1.0 / 2f64.sqrt()).abs() < 1e-9);
        // leaf-adjacent link: singleton window
        assert_eq!(table.stats[0].count, 1);
        assert_eq!(table.coefficient(0), 0.0);
    }

    #[test]
    fn equal_heights_give_zero() {
        // Four duplicates: every link at height 0.
        let d = build_dendrogram(&[[1.0], [1.0], [1.0], [1.0]]).unwrap();
        let table = inconsistency(&d, 16);
        assert!(table.coefficients().all(|c| c == 0.0));
    }

    #[test]
    fn depth_one_is_the_link_alone() {
        let d = build_dendrogram(&[[0.0], [1.0], [10.0], [10.5]]).unwrap();
        assert!(inconsistency(&d, 1).coefficients().all(|c| c == 0.0));
        // Reference values from a standard scientific library at depth 2.
        let t = inconsistency(&d, 2);
        assert!((t.stats[2].mean - 5.09619408).abs() < 1e-7);
        assert!((t.stats[2].std - 7.53197908).abs() < 1e-7);
        assert!((t.stats[2].coefficient - 1.1540643).abs() < 1e-7);
    }
}
