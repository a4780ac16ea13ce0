//! Graph families for experiments and the exhaustive small-graph corpus.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

#[derive(Clone, Debug, PartialEq)]
pub enum GraphKind {
    Path(usize),
    Cycle(usize),
    Star(usize),
    Complete(usize),
    Grid(usize, usize),
    /// Connected G(n, p), by rejection.
    Gnp(usize, f64),
    Petersen,
}

/// Rejection attempts before a G(n, p) request is declared hopeless.
const GNP_ATTEMPTS: usize = 100_000;

pub fn generate_graph(kind: &GraphKind, seed: u64) -> Result<Graph> {
    match *kind {
        GraphKind::Path(n) => {
            positive(n)?;
            Graph::from_edges(n, (1..n).map(|v| (v - 1, v)))
        }
        GraphKind::Cycle(n) => {
            if n < 3 {
                return Err(Error::Domain(format!("a cycle needs n >= 3, got {n}")));
            }
            Graph::from_edges(n, (0..n).map(|v| (v, (v + 1) % n)))
        }
        GraphKind::Star(n) => {
            positive(n)?;
            Graph::from_edges(n, (1..n).map(|l| (0, l)))
        }
        GraphKind::Complete(n) => {
            positive(n)?;
            Graph::from_edges(n, (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v))))
        }
        GraphKind::Grid(r, c) => {
            positive(r)?;
            positive(c)?;
            let id = |i: usize, j: usize| i * c + j;
            let right = (0..r).flat_map(|i| (1..c).map(move |j| (id(i, j - 1), id(i, j))));
            let down = (1..r).flat_map(|i| (0..c).map(move |j| (id(i - 1, j), id(i, j))));
            Graph::from_edges(r * c, right.chain(down).collect::<Vec<_>>())
        }
        GraphKind::Gnp(n, p) => {
            positive(n)?;
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Domain(format!("edge probability {p} outside [0,1]")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..GNP_ATTEMPTS {
                let g = gnp_once(n, p, &mut rng)?;
                if g.is_connected() {
                    return Ok(g);
                }
            }
            Err(Error::Domain(format!("no connected G({n}, {p}) after {GNP_ATTEMPTS} draws")))
        }
        GraphKind::Petersen => {
            let outer = (0..5).map(|v| (v, (v + 1) % 5));
            let spokes = (0..5).map(|v| (v, v + 5));
            let inner = (0..5).map(|v| (v + 5, (v + 2) % 5 + 5));
            Graph::from_edges(10, outer.chain(spokes).chain(inner))
        }
    }
}

fn positive(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("graph needs at least one node".into()));
    }
    Ok(())
}

fn gnp_once(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Result<Graph> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges)
}

/// `count` connected G(n, p) graphs with `n` uniform in `lo..=hi` and `p`
/// uniform in `[p_lo, p_hi]`, all derived from `seed`.
pub fn random_connected_corpus(count: usize, lo: usize, hi: usize, p_lo: f64, p_hi: f64, seed: u64) -> Result<Vec<Graph>> {
    if lo == 0 || lo > hi || !(0.0 < p_lo && p_lo <= p_hi && p_hi <= 1.0) {
        return Err(Error::Domain("invalid corpus parameters".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(lo..=hi);
            let p = rng.gen_range(p_lo..=p_hi);
            generate_graph(&GraphKind::Gnp(n, p), rng.gen())
        })
        .collect()
}

/// Adjacency as bitmasks over at most 16 nodes.
type Masks = Vec<u16>;

fn masks_of(g: &Graph) -> Masks {
    g.nodes()
        .map(|v| g.neighbors(v).iter().fold(0u16, |m, &u| m | (1 << u)))
        .collect()
}

fn graph_of(adj: &Masks) -> Graph {
    let n = adj.len();
    let edges: Vec<(NodeId, NodeId)> = (0..n)
        .flat_map(|u| ((u + 1)..n).filter(move |&v| adj[u] >> v & 1 == 1).map(move |v| (u, v)))
        .collect();
    Graph::from_edges(n, edges).expect("edges come from a valid adjacency")
}

/// Colour refinement started from degrees; colours are ranks of sorted
/// signatures, so they do not depend on the labelling.
fn refine(adj: &Masks) -> Vec<usize> {
    let n = adj.len();
    let mut color: Vec<usize> = adj.iter().map(|m| m.count_ones() as usize).collect();
    loop {
        let sigs: Vec<(usize, Vec<usize>)> = (0..n)
            .map(|v| {
                let mut nb: Vec<usize> = (0..n).filter(|&u| adj[v] >> u & 1 == 1).map(|u| color[u]).collect();
                nb.sort_unstable();
                (color[v], nb)
            })
            .collect();
        let mut distinct = sigs.clone();
        distinct.sort();
        distinct.dedup();
        let next: Vec<usize> = sigs.iter().map(|s| distinct.binary_search(s).expect("present")).collect();
        let classes = |c: &[usize]| c.iter().collect::<HashSet<_>>().len();
        if classes(&next) == classes(&color) {
            return next;
        }
        color = next;
    }
}

/// Code of the graph relabelled so that `order[i]` becomes node `i`.
fn code(adj: &Masks, order: &[usize]) -> u128 {
    let mut out = 0u128;
    for j in 1..order.len() {
        for i in 0..j {
            out = out << 1 | u128::from(adj[order[i]] >> order[j] & 1);
        }
    }
    out
}

/// Smallest code over all labellings that list colour classes in colour
/// order. Equal codes mean isomorphic graphs.
pub(crate) fn canonical_code(adj: &Masks) -> u128 {
    let color = refine(adj);
    let n = adj.len();
    let mut slots: Vec<usize> = (0..n).map(|v| color[v]).collect();
    slots.sort_unstable();
    let mut order = Vec::with_capacity(n);
    let mut used = vec![false; n];
    let mut best = u128::MAX;
    fn rec(adj: &Masks, color: &[usize], slots: &[usize], order: &mut Vec<usize>, used: &mut [bool], best: &mut u128) {
        let pos = order.len();
        if pos == slots.len() {
            *best = (*best).min(code(adj, order));
            return;
        }
        for v in 0..slots.len() {
            if !used[v] && color[v] == slots[pos] {
                used[v] = true;
                order.push(v);
                rec(adj, color, slots, order, used, best);
                order.pop();
                used[v] = false;
            }
        }
    }
    rec(adj, &color, &slots, &mut order, &mut used, &mut best);
    best
}

/// One representative per isomorphism class of connected graphs on `n`
/// nodes, for `1 <= n <= 10`. Built by attaching a new node to every
/// nonempty subset of each graph on `n - 1` nodes; a connected graph always
/// has a non-cut node, so every class is reached.
pub fn connected_graphs(n: usize) -> Result<Vec<Graph>> {
    let mut out = Vec::new();
    visit_connected_graphs(n, |g| out.push(g))?;
    Ok(out)
}

/// Streams the classes of [`connected_graphs`] without holding the last
/// level in memory (11.7 million graphs at `n = 10`).
pub fn visit_connected_graphs(n: usize, mut visit: impl FnMut(Graph)) -> Result<()> {
    if n == 0 || n > 10 {
        return Err(Error::Domain(format!("exhaustive enumeration supports 1 <= n <= 10, got {n}")));
    }
    if n == 1 {
        visit(graph_of(&vec![0]));
        return Ok(());
    }
    let mut level: Vec<Masks> = vec![vec![0]];
    for size in 2..=n {
        let last = size == n;
        let mut seen = HashSet::new();
        let mut next = Vec::new();
        for adj in &level {
            for subset in 1u16..(1 << (size - 1)) {
                let mut grown = adj.clone();
                for (u, m) in grown.iter_mut().enumerate() {
                    *m |= (subset >> u & 1) << (size - 1);
                }
                grown.push(subset);
                if seen.insert(canonical_code(&grown)) {
                    if last {
                        visit(graph_of(&grown));
                    } else {
                        next.push(grown);
                    }
                }
            }
        }
        level = next;
    }
    Ok(())
}

/// Whether two graphs on at most 10 nodes are isomorphic.
pub fn isomorphic(a: &Graph, b: &Graph) -> bool {
    a.n() == b.n() && a.m() == b.m() && a.n() <= 10 && canonical_code(&masks_of(a)) == canonical_code(&masks_of(b))
}
