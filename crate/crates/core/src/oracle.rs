//! Exhaustive optima for small graphs.

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

pub const DEFAULT_MDS_CAP: usize = 24;
pub const DEFAULT_CDS_CAP: usize = 20;

/// Masks over `n` bits with exactly `k` set, in increasing order.
fn combinations(n: usize, k: usize) -> impl Iterator<Item = u64> {
    let limit = 1u64 << n;
    let first = if k == 0 { 0 } else { (1u64 << k) - 1 };
    let mut next = Some(first).filter(|&m| k <= n && m < limit);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 {
            None
        } else {
            let low = cur & cur.wrapping_neg();
            let ripple = cur + low;
            let succ = (((ripple ^ cur) >> 2) / low) | ripple;
            Some(succ).filter(|&m| m < limit)
        };
        Some(cur)
    })
}

fn dominates(masks: &[u64], set: u64, full: u64) -> bool {
    let mut covered = 0u64;
    let mut rest = set;
    while rest != 0 {
        covered |= masks[rest.trailing_zeros() as usize];
        rest &= rest - 1;
    }
    covered == full
}

fn induces_connected(adj: &[u64], set: u64) -> bool {
    if set == 0 {
        return false;
    }
    let mut seen = set & set.wrapping_neg();
    let mut frontier = seen;
    while frontier != 0 {
        let mut grow = 0u64;
        let mut rest = frontier;
        while rest != 0 {
            grow |= adj[rest.trailing_zeros() as usize];
            rest &= rest - 1;
        }
        frontier = grow & set & !seen;
        seen |= frontier;
    }
    seen == set
}

fn members(mask: u64) -> Vec<NodeId> {
    (0..64).filter(|&v| mask >> v & 1 == 1).collect()
}

fn check_cap(g: &Graph, cap: usize) -> Result<()> {
    if g.n() > cap {
        return Err(Error::TooLarge(format!("brute force capped at n = {cap}, got {}", g.n())));
    }
    Ok(())
}

/// Minimum dominating set by subsets in popcount order; ties resolve to the
/// numerically smallest mask.
pub fn brute_force_mds(g: &Graph, cap: usize) -> Result<(usize, Vec<NodeId>)> {
    check_cap(g, cap)?;
    let masks = g.closed_masks()?;
    let n = g.n();
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    for k in 0..=n {
        if let Some(set) = combinations(n, k).find(|&s| dominates(&masks, s, full)) {
            return Ok((k, members(set)));
        }
    }
    unreachable!("the full node set dominates")
}

/// Minimum connected dominating set of a connected graph.
pub fn brute_force_cds(g: &Graph, cap: usize) -> Result<(usize, Vec<NodeId>)> {
    check_cap(g, cap)?;
    if g.n() == 0 || !g.is_connected() {
        return Err(Error::precondition("brute_force_cds", "graph must be connected and nonempty"));
    }
    let masks = g.closed_masks()?;
    let adj: Vec<u64> = masks.iter().enumerate().map(|(v, m)| m & !(1u64 << v)).collect();
    let n = g.n();
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    for k in 1..=n {
        if let Some(set) =
            combinations(n, k).find(|&s| dominates(&masks, s, full) && induces_connected(&adj, s))
        {
            return Ok((k, members(set)));
        }
    }
    unreachable!("a connected graph is its own connected dominating set")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(n: usize) -> Graph {
        Graph::from_edges(n, (0..n).map(|v| (v, (v + 1) % n))).unwrap()
    }

    #[test]
    fn combination_counts() {
        assert_eq!(combinations(6, 3).count(), 20);
        assert_eq!(combinations(4, 0).collect::<Vec<_>>(), vec![0]);
        assert_eq!(combinations(3, 4).count(), 0);
        assert!(combinations(10, 4).all(|m| m.count_ones() == 4));
    }

    #[test]
    fn mds_examples() {
        assert_eq!(brute_force_mds(&cycle(5), 24).unwrap().0, 2);
        let outer = (0..5).map(|v| (v, (v + 1) % 5));
        let spokes = (0..5).map(|v| (v, v + 5));
        let inner = (0..5).map(|v| (v + 5, (v + 2) % 5 + 5));
        let petersen = Graph::from_edges(10, outer.chain(spokes).chain(inner)).unwrap();
        assert_eq!(brute_force_mds(&petersen, 24).unwrap().0, 3);
        let k6 = Graph::from_edges(6, (0..6).flat_map(|u| ((u + 1)..6).map(move |v| (u, v)))).unwrap();
        assert_eq!(brute_force_mds(&k6, 24).unwrap(), (1, vec![0]));
        assert_eq!(brute_force_mds(&Graph::empty(0), 24).unwrap().0, 0);
        assert!(matches!(brute_force_mds(&cycle(30), 24), Err(Error::TooLarge(_))));
    }

    #[test]
    fn cds_examples() {
        let p4 = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(brute_force_cds(&p4, 20).unwrap(), (2, vec![1, 2]));
        assert_eq!(brute_force_cds(&cycle(6), 20).unwrap().0, 4);
        let star = Graph::from_edges(5, (1..5).map(|l| (0, l))).unwrap();
        assert_eq!(brute_force_cds(&star, 20).unwrap(), (1, vec![0]));
        let p7 = Graph::from_edges(7, (0..6).map(|v| (v, v + 1))).unwrap();
        assert_eq!(brute_force_cds(&p7, 20).unwrap().0, 5);
        assert!(brute_force_cds(&Graph::empty(2), 20).unwrap_err().is_precondition());
    }
}
