//! Agglomerative clustering by exhaustive search over cluster pairs.

#[derive(Clone, Debug, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

fn centroid(points: &[Vec<f64>], members: &[usize]) -> Vec<f64> {
    let d = points[0].len();
    let mut c = vec![0.0; d];
    for &m in members {
        for (ci, x) in c.iter_mut().zip(&points[m]) {
            *ci += x;
        }
    }
    c.iter().map(|x| x / members.len() as f64).collect()
}

/// Ward merge distance computed directly from the member sets:
/// `sqrt(2 |A| |B| / (|A| + |B|)) * |centroid(A) - centroid(B)|`.
pub fn ward_distance(points: &[Vec<f64>], a: &[usize], b: &[usize]) -> f64 {
    let (ca, cb) = (centroid(points, a), centroid(points, b));
    let dist2: f64 = ca.iter().zip(&cb).map(|(x, y)| (x - y) * (x - y)).sum();
    let (na, nb) = (a.len() as f64, b.len() as f64);
    (2.0 * na * nb / (na + nb) * dist2).sqrt()
}

/// Merge sequence. Leaves are nodes `0..n`; merge `k` creates node `n + k`
/// and reports its children as `(smaller id, larger id)`. Equal distances
/// go to the pair whose smallest member leaf is smallest, then the other's.
pub fn ward_merges(points: &[Vec<f64>]) -> Vec<Merge> {
    let n = points.len();
    let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut merges = Vec::new();
    while clusters.len() > 1 {
        let mut best: Option<(f64, (usize, usize), usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let d = ward_distance(points, &clusters[a].1, &clusters[b].1);
                let ma = *clusters[a].1.iter().min().unwrap();
                let mb = *clusters[b].1.iter().min().unwrap();
                let key = (ma.min(mb), ma.max(mb));
                let better = match best {
                    None => true,
                    Some((bd, bkey, _, _)) => d < bd || (d == bd && key < bkey),
                };
                if better {
                    best = Some((d, key, a, b));
                }
            }
        }
        let (height, _, a, b) = best.expect("at least two clusters");
        let (cb, cb_members) = clusters.remove(b);
        let (ca, ca_members) = clusters.remove(a);
        let mut members = ca_members;
        members.extend(cb_members);
        merges.push(Merge {
            left: ca.min(cb),
            right: ca.max(cb),
            height,
            size: members.len(),
        });
        clusters.push((n + merges.len() - 1, members));
    }
    merges
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_points() {
        let m = ward_merges(&[vec![0.0], vec![1.0], vec![10.0]]);
        assert_eq!((m[0].left, m[0].right), (0, 1));
        assert!((m[0].height - 1.0).abs() < 1e-12);
        assert_eq!((m[1].left, m[1].right), (2, 3));
        assert!((m[1].height - (4.0f64 / 3.0).sqrt() * 9.5).abs() < 1e-12);
        assert_eq!(m[1].size, 3);
    }
}
