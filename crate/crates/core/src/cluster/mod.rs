//! Ward hierarchical clustering of the instance pool and its multi-level
//! cuts, driven by link inconsistency coefficients.

mod cut;
mod dendrogram;
mod inconsistency;

use std::io::Write;

pub use self::cut::{cut_at, cut_levels, Clustering, MultiLevelClustering};
pub use self::dendrogram::{build_dendrogram, Dendrogram, Link};
pub use self::inconsistency::{inconsistency, InconsistencyTable, LinkStats};

use crate::error::Result;

pub const DEFAULT_LEVELS: usize = 20;
pub const DEFAULT_DEPTH: usize = 16;

/// Builds the tree and cuts it into `levels` granularities.
pub fn multi_level<P: AsRef<[f64]>>(
    points: &[P],
    depth: usize,
    levels: usize,
) -> Result<MultiLevelClustering> {
    let tree = build_dendrogram(points)?;
    let table = inconsistency(&tree, depth);
    Ok(cut_levels(&tree, &table, levels))
}

/// Per-link CSV: `link,left,right,height,size,inconsistency`.
pub fn write_dendrogram_csv<W: Write>(
    tree: &Dendrogram,
    table: &InconsistencyTable,
    mut out: W,
) -> Result<()> {
    writeln!(out, "link,left,right,height,size,inconsistency")?;
    for (k, link) in tree.links().iter().enumerate() {
        writeln!(
            out,
            "{k},{},{},{},{},{}",
            link.left,
            link.right,
            link.height,
            link.size,
            table.coefficient(k)
        )?;
    }
    Ok(())
}
