use serde::{Deserialize, Serialize};

use super::dendrogram::Dendrogram;
use super::inconsistency::InconsistencyTable;

/// One flat clustering: `assignments[i]` is the cluster of leaf `i`.
/// Cluster ids are numbered by first appearance in leaf order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub threshold: f64,
    pub assignments: Vec<usize>,
    pub cluster_count: usize,
}

impl Clustering {
    /// Member lists, indexed by cluster id.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.cluster_count];
        for (i, &c) in self.assignments.iter().enumerate() {
            members[c].push(i);
        }
        members
    }
}

/// Clusterings ordered from coarse to fine.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MultiLevelClustering {
    pub levels: Vec<Clustering>,
}

impl MultiLevelClustering {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Flat clustering at one threshold.
///
/// A link joins its two children only if its own coefficient and that of
/// every link beneath it are below `threshold`; clusters are the resulting
/// connected components over the leaves.
pub fn cut_at(dendrogram: &Dendrogram, table: &InconsistencyTable, threshold: f64) -> Clustering {
    let n = dendrogram.leaf_count();
    let links = dendrogram.links();
    let mut honored = vec![false; links.len()];
    let mut sets = DisjointSet::new(n + links.len());
    for (k, link) in links.iter().enumerate() {
        let child_ok = |node: usize| dendrogram.link_of(node).is_none_or(|c| honored[c]);
        honored[k] = table.coefficient(k) < threshold && child_ok(link.left) && child_ok(link.right);
        if honored[k] {
            sets.union(n + k, link.left);
            sets.union(n + k, link.right);
        }
    }
    let mut label_of_root = std::collections::HashMap::new();
    let assignments: Vec<usize> = (0..n)
        .map(|i| {
            let root = sets.find(i);
            let next = label_of_root.len();
            *label_of_root.entry(root).or_insert(next)
        })
        .collect();
    Clustering {
        threshold,
        cluster_count: label_of_root.len(),
        assignments,
    }
}

/// Cuts the tree at the `level_count` largest distinct coefficients (all of
/// them if fewer exist), coarsest level first.
pub fn cut_levels(
    dendrogram: &Dendrogram,
    table: &InconsistencyTable,
    level_count: usize,
) -> MultiLevelClustering {
    let mut thresholds: Vec<f64> = table.coefficients().collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    thresholds.truncate(level_count);
    MultiLevelClustering {
        levels: thresholds
            .into_iter()
            .map(|t| cut_at(dendrogram, table, t))
            .collect(),
    }
}
