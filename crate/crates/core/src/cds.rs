//! Connected dominating sets from dominating sets: ruling subset, clustering
//! by BFS growth over `G`, connector paths between clusters and a spanning
//! tree of the resulting cluster graph.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::sim::{self, Context, Message, NodeProgram, Outbox, RoundStats, SimConfig};

/// `S` with an edge for every pair at distance at most 3 in `G`, each
/// carrying its lexicographically smallest shortest path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GsGraph {
    pub nodes: Vec<NodeId>,
    /// `(u, v, path)` with `u < v`, path from `u` to `v`.
    pub edges: Vec<(NodeId, NodeId, Vec<NodeId>)>,
}

impl GsGraph {
    pub fn is_connected(&self) -> bool {
        let Some(&first) = self.nodes.first() else {
            return true;
        };
        let mut seen = vec![first];
        let mut queue = VecDeque::from([first]);
        while let Some(v) = queue.pop_front() {
            for (a, b, _) in &self.edges {
                let other = if *a == v { *b } else if *b == v { *a } else { continue };
                if !seen.contains(&other) {
                    seen.push(other);
                    queue.push_back(other);
                }
            }
        }
        seen.len() == self.nodes.len()
    }
}

fn check_dominating(g: &Graph, set: &[bool], stage: &'static str) -> Result<()> {
    if !g.is_dominating(set) {
        return Err(Error::precondition(stage, "node set is not dominating"));
    }
    Ok(())
}

fn flags(n: usize, set: &[NodeId]) -> Vec<bool> {
    let mut out = vec![false; n];
    for &v in set {
        out[v] = true;
    }
    out
}

/// Lexicographically smallest shortest path from `u` to `v`, if
/// `d(u, v) <= limit`.
fn smallest_path(g: &Graph, u: NodeId, v: NodeId, limit: usize) -> Option<Vec<NodeId>> {
    let dist = g.bfs_within(v, limit, |_| true);
    let mut d = dist[u]?;
    let mut path = vec![u];
    let mut cur = u;
    while d > 0 {
        cur = *g.neighbors(cur).iter().find(|&&w| dist[w] == Some(d - 1))?;
        path.push(cur);
        d -= 1;
    }
    Some(path)
}

pub fn gs_graph(g: &Graph, s: &[NodeId]) -> Result<GsGraph> {
    check_dominating(g, &flags(g.n(), s), "gs_graph")?;
    let mut nodes = s.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    let mut edges = Vec::new();
    for (i, &u) in nodes.iter().enumerate() {
        for &v in &nodes[i + 1..] {
            if let Some(path) = smallest_path(g, u, v, 3) {
                edges.push((u, v, path));
            }
        }
    }
    Ok(GsGraph { nodes, edges })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RulingSet {
    pub members: Vec<NodeId>,
    pub charged_rounds: u64,
}

/// `⌈log₂³ max(n, 2)⌉`.
pub fn ruling_charge(n: usize) -> u64 {
    let l = (n.max(2) as f64).log2();
    (l * l * l).ceil() as u64
}

/// Greedy by ascending id: a node of `S` joins unless a member lies within
/// distance `alpha - 1`.
pub fn ruling_subset(g: &Graph, s: &[NodeId], alpha: usize, beta: usize) -> Result<RulingSet> {
    if alpha > beta + 1 || alpha == 0 {
        return Err(Error::Domain(format!("need 1 <= α <= β + 1, got α={alpha}, β={beta}")));
    }
    let mut sorted = s.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut near = vec![false; g.n()];
    let mut members = Vec::new();
    for &v in &sorted {
        if near[v] {
            continue;
        }
        members.push(v);
        for (u, d) in g.bfs_within(v, alpha - 1, |_| true).into_iter().enumerate() {
            if d.is_some() {
                near[u] = true;
            }
        }
    }
    for &v in &sorted {
        let covered = g.bfs_within(v, beta, |_| true);
        if !members.iter().any(|&m| covered[m].is_some()) {
            return Err(Error::Invariant(format!("node {v} has no ruler within distance {beta}")));
        }
    }
    Ok(RulingSet {
        members,
        charged_rounds: ruling_charge(g.n()),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Tag {
    Seed,
    First,
    Second,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Joined {
    tag: Tag,
    center: NodeId,
}

impl Message for Joined {
    fn bits(&self) -> usize {
        2 + (self.center as u64).bits()
    }
}

/// One node of the clustering protocol. Phases take three rounds: non-S
/// nodes next to a freshly clustered S-node join, then non-S nodes next to
/// those, then S-nodes next to anything clustered in the phase.
struct Grow {
    in_s: bool,
    seed: bool,
    joined: Option<(Tag, NodeId, Option<NodeId>)>,
    /// S-nodes: `(sender, center)` heard this phase.
    heard: Vec<(NodeId, NodeId)>,
}

impl Grow {
    fn join(&mut self, ctx: &Context<'_>, tag: Tag, center: NodeId, parent: NodeId) -> Outbox<Joined> {
        self.joined = Some((tag, center, Some(parent)));
        self.heard.clear();
        Outbox {
            sends: ctx.neighbors.iter().map(|&u| (u, Joined { tag, center })).collect(),
            halt: true,
        }
    }
}

impl NodeProgram for Grow {
    type Msg = Joined;

    fn step(&mut self, ctx: &Context<'_>, inbox: &[(NodeId, Joined)]) -> Outbox<Joined> {
        if ctx.round == 0 {
            if self.seed {
                self.joined = Some((Tag::Seed, ctx.id, None));
                return Outbox {
                    sends: ctx.neighbors.iter().map(|&u| (u, Joined { tag: Tag::Seed, center: ctx.id })).collect(),
                    halt: true,
                };
            }
            return Outbox::halt();
        }
        if self.joined.is_some() {
            return Outbox::halt();
        }
        let first = |tag: Tag| inbox.iter().find(|(_, m)| m.tag == tag).map(|&(s, m)| (s, m.center));
        match (self.in_s, ctx.round % 3) {
            (false, 1) => match first(Tag::Seed) {
                Some((parent, center)) => self.join(ctx, Tag::First, center, parent),
                None => Outbox::halt(),
            },
            (false, 2) => match first(Tag::First) {
                Some((parent, center)) => self.join(ctx, Tag::Second, center, parent),
                None => Outbox::halt(),
            },
            (false, _) => Outbox::halt(),
            (true, pos) => {
                self.heard.extend(inbox.iter().map(|&(s, m)| (s, m.center)));
                if pos != 0 {
                    return if self.heard.is_empty() { Outbox::halt() } else { Outbox::wait() };
                }
                match self.heard.iter().min().copied() {
                    Some((parent, center)) => self.join(ctx, Tag::Seed, center, parent),
                    None => Outbox::halt(),
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CdsClustering {
    /// Centers in ascending order, including any added for stranded nodes.
    pub centers: Vec<NodeId>,
    /// Centers that were not in the requested ruling subset.
    pub extra_centers: usize,
    /// Cluster index for every node of a pruned tree.
    pub cluster_of: Vec<Option<usize>>,
    /// Tree parent inside the pruned tree; `None` for centers and non-tree
    /// nodes.
    pub parent: Vec<Option<NodeId>>,
    pub phases: usize,
    pub stats: RoundStats,
}

impl CdsClustering {
    pub fn tree_nodes(&self) -> Vec<NodeId> {
        (0..self.cluster_of.len()).filter(|&v| self.cluster_of[v].is_some()).collect()
    }

    pub fn cluster_members(&self, i: usize) -> Vec<NodeId> {
        (0..self.cluster_of.len()).filter(|&v| self.cluster_of[v] == Some(i)).collect()
    }
}

/// Grows one cluster per center by the three-round phase rule, run on the
/// simulator. An S-node that the rule never reaches (it can sit behind a
/// non-S node that joined in a second round) becomes a center itself.
pub fn bfs_clustering(g: &Graph, s: &[NodeId], rulers: &[NodeId], config: &SimConfig) -> Result<CdsClustering> {
    let n = g.n();
    let in_s = flags(n, s);
    check_dominating(g, &in_s, "bfs_clustering")?;
    if !g.is_connected() {
        return Err(Error::precondition("bfs_clustering", "graph is disconnected"));
    }
    if let Some(&r) = rulers.iter().find(|&&r| r >= n || !in_s[r]) {
        return Err(Error::precondition("bfs_clustering", format!("ruler {r} is not in S")));
    }
    let mut stats = RoundStats::new(config.cost_model);
    let mut joined: Vec<Option<(Tag, NodeId, Option<NodeId>)>> = vec![None; n];
    let mut seeds = rulers.to_vec();
    if seeds.is_empty() {
        seeds.extend(s.iter().min());
    }
    let mut extra_centers = 0;
    let mut phases = 0;
    loop {
        let programs: Vec<Grow> = (0..n)
            .map(|v| Grow {
                in_s: in_s[v],
                seed: seeds.contains(&v),
                joined: joined[v],
                heard: Vec::new(),
            })
            .collect();
        let (run_stats, programs) = sim::run(g, programs, 3 * n + 3, config)?;
        phases += (run_stats.simulated_rounds as usize).div_ceil(3);
        stats.absorb(run_stats);
        for (v, p) in programs.into_iter().enumerate() {
            joined[v] = p.joined;
        }
        match (0..n).find(|&v| in_s[v] && joined[v].is_none()) {
            Some(v) => {
                seeds = vec![v];
                extra_centers += 1;
            }
            None => break,
        }
        if phases > n {
            return Err(Error::Invariant("clustering did not terminate".into()));
        }
    }
    let mut centers: Vec<NodeId> = (0..n).filter(|&v| matches!(joined[v], Some((_, _, None)))).collect();
    centers.sort_unstable();
    // Keep a non-S node only if some S-node hangs below it.
    let mut keep = in_s.clone();
    for v in (0..n).filter(|&v| in_s[v]) {
        let mut cur = joined[v].and_then(|j| j.2);
        while let Some(u) = cur {
            if keep[u] && in_s[u] {
                break;
            }
            keep[u] = true;
            cur = joined[u].and_then(|j| j.2);
        }
    }
    let cluster_of: Vec<Option<usize>> = (0..n)
        .map(|v| {
            let center = joined[v].filter(|_| keep[v])?.1;
            Some(centers.binary_search(&center).expect("center of a joined node"))
        })
        .collect();
    let parent = (0..n).map(|v| joined[v].filter(|_| keep[v]).and_then(|j| j.2)).collect();
    Ok(CdsClustering {
        centers,
        extra_centers,
        cluster_of,
        parent,
        phases,
        stats,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ConnectorPath {
    /// Cluster indices of the endpoints, `from < to` not required.
    pub from: usize,
    pub to: usize,
    pub path: Vec<NodeId>,
}

/// Witness paths between clusters: direct S-S edges, two-hop paths chaining
/// the clusters seen by a non-S node, and three-hop paths across an edge
/// between two non-S nodes.
pub fn connector_paths(g: &Graph, s: &[NodeId], clustering: &CdsClustering) -> Vec<ConnectorPath> {
    let n = g.n();
    let in_s = flags(n, s);
    let cl = |v: NodeId| clustering.cluster_of[v].expect("S-nodes are clustered");
    let mut out = Vec::new();
    for (u, v) in g.edges() {
        if in_s[u] && in_s[v] && cl(u) != cl(v) {
            out.push(ConnectorPath {
                from: cl(u),
                to: cl(v),
                path: vec![u, v],
            });
        }
    }
    // Representatives w_1..w_k: lowest-id S-neighbor per cluster, clusters
    // ascending.
    let reps: Vec<Vec<NodeId>> = (0..n)
        .map(|w| {
            if in_s[w] {
                return Vec::new();
            }
            let mut by_cluster: Vec<(usize, NodeId)> =
                g.neighbors(w).iter().filter(|&&u| in_s[u]).map(|&u| (cl(u), u)).collect();
            by_cluster.sort_unstable();
            by_cluster.dedup_by_key(|e| e.0);
            by_cluster.into_iter().map(|e| e.1).collect()
        })
        .collect();
    for (w, rep) in reps.iter().enumerate() {
        for pair in rep.windows(2) {
            out.push(ConnectorPath {
                from: cl(pair[0]),
                to: cl(pair[1]),
                path: vec![pair[0], w, pair[1]],
            });
        }
    }
    for (w, w2) in g.edges() {
        if in_s[w] || in_s[w2] {
            continue;
        }
        let (Some(&a), Some(&b)) = (reps[w].first(), reps[w2].last()) else {
            continue;
        };
        if cl(a) != cl(b) {
            out.push(ConnectorPath {
                from: cl(a),
                to: cl(b),
                path: vec![a, w, w2, b],
            });
        }
    }
    out
}

/// Number of paths through every edge, keyed `(min, max)`.
pub fn edge_usage(paths: &[ConnectorPath]) -> Vec<((NodeId, NodeId), usize)> {
    let mut counts = std::collections::BTreeMap::new();
    for p in paths {
        for e in p.path.windows(2) {
            *counts.entry((e[0].min(e[1]), e[0].max(e[1]))).or_insert(0) += 1;
        }
    }
    counts.into_iter().collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CdsParams {
    pub alpha: usize,
    pub beta: usize,
}

/// Default divisor applied to `log₂² n` and `log₂³ n`.
pub const CDS_PARAM_DIVISOR: usize = 4;

impl CdsParams {
    /// `α = ⌈log₂² n / d⌉`, `β = ⌈log₂³ n / d⌉`, both at least 1.
    pub fn for_n(n: usize, divisor: usize) -> Self {
        let l = (n.max(2) as f64).log2();
        let d = divisor.max(1) as f64;
        let alpha = ((l * l / d).ceil() as usize).max(1);
        let beta = ((l * l * l / d).ceil() as usize).max(alpha);
        CdsParams { alpha, beta }
    }
}

#[derive(Clone, Debug)]
pub struct CdsOutcome {
    /// Ascending.
    pub set: Vec<NodeId>,
    pub s_size: usize,
    pub clustering: CdsClustering,
    pub tree_nodes: usize,
    pub spanning_paths: Vec<ConnectorPath>,
    pub stats: RoundStats,
}

impl CdsOutcome {
    pub fn num_clusters(&self) -> usize {
        self.clustering.centers.len()
    }

    /// `3|S| + 2·(#clusters − 1)`.
    pub fn size_bound(&self) -> usize {
        3 * self.s_size + 2 * self.num_clusters().saturating_sub(1)
    }
}

fn find(uf: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while uf[r] != r {
        r = uf[r];
    }
    let mut c = x;
    while uf[c] != r {
        let next = uf[c];
        uf[c] = r;
        c = next;
    }
    r
}

/// `S` plus the pruned cluster trees plus the inner nodes of connector paths
/// picked by a spanning tree of the cluster graph (shortest paths first).
pub fn build_cds(g: &Graph, s: &[NodeId], params: CdsParams, config: &SimConfig) -> Result<CdsOutcome> {
    if g.n() == 0 || !g.is_connected() {
        return Err(Error::precondition("build_cds", "graph must be connected and nonempty"));
    }
    let mut s_sorted = s.to_vec();
    s_sorted.sort_unstable();
    s_sorted.dedup();
    check_dominating(g, &flags(g.n(), &s_sorted), "build_cds")?;
    let rulers = ruling_subset(g, &s_sorted, params.alpha, params.beta)?;
    let clustering = bfs_clustering(g, &s_sorted, &rulers.members, config)?;
    let mut paths = connector_paths(g, &s_sorted, &clustering);
    paths.sort_by(|a, b| a.path.len().cmp(&b.path.len()).then_with(|| a.cmp(b)));
    let k = clustering.centers.len();
    let mut uf: Vec<usize> = (0..k).collect();
    let mut spanning = Vec::new();
    for p in paths {
        let (a, b) = (find(&mut uf, p.from), find(&mut uf, p.to));
        if a != b {
            uf[a] = b;
            spanning.push(p);
        }
    }
    let mut member = vec![false; g.n()];
    for v in clustering.tree_nodes() {
        member[v] = true;
    }
    let tree_nodes = member.iter().filter(|&&m| m).count();
    for p in &spanning {
        for &v in &p.path {
            member[v] = true;
        }
    }
    if !g.is_dominating(&member) || !g.induces_connected(&member) {
        return Err(Error::Invariant("assembled set is not a connected dominating set".into()));
    }
    let mut stats = RoundStats::new(config.cost_model);
    stats.charge_oracle(rulers.charged_rounds, "ruling subset");
    stats.absorb(clustering.stats.clone());
    stats.charge_oracle(g.n() as u64, "cluster-graph spanning tree");
    Ok(CdsOutcome {
        set: (0..g.n()).filter(|&v| member[v]).collect(),
        s_size: s_sorted.len(),
        clustering,
        tree_nodes,
        spanning_paths: spanning,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Graph {
        Graph::from_edges(n, (1..n).map(|v| (v - 1, v))).unwrap()
    }

    #[test]
    fn gs_of_p7() {
        let g = path(7);
        let gs = gs_graph(&g, &[0, 3, 6]).unwrap();
        let pairs: Vec<_> = gs.edges.iter().map(|e| (e.0, e.1)).collect();
        assert_eq!(pairs, vec![(0, 3), (3, 6)]);
        assert_eq!(gs.edges[0].2, vec![0, 1, 2, 3]);
        assert!(gs.is_connected());
        assert!(gs_graph(&g, &[0, 6]).unwrap_err().is_precondition());
    }

    #[test]
    fn ruling_examples() {
        let g = path(5);
        assert_eq!(ruling_subset(&g, &[0, 1, 2, 3, 4], 3, 3).unwrap().members, vec![0, 3]);
        assert_eq!(ruling_subset(&g, &[4, 1, 2], 1, 1).unwrap().members, vec![1, 2, 4]);
    }

    #[test]
    fn clustering_examples() {
        let g = path(7);
        let cfg = SimConfig::default();
        let one = bfs_clustering(&g, &[0, 3, 6], &[3], &cfg).unwrap();
        assert_eq!(one.centers, vec![3]);
        assert_eq!(one.tree_nodes(), (0..7).collect::<Vec<_>>());
        let singles = bfs_clustering(&g, &[0, 3, 6], &[0, 3, 6], &cfg).unwrap();
        assert_eq!(singles.tree_nodes(), vec![0, 3, 6]);
        assert_eq!(singles.centers.len(), 3);
    }

    #[test]
    fn stranded_node_becomes_center() {
        // s0=0 - a'=1 - a=2 - s=3, a - b=4 - u=5.
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (2, 3), (2, 4), (4, 5)]).unwrap();
        let c = bfs_clustering(&g, &[0, 3, 5], &[0], &SimConfig::default()).unwrap();
        assert_eq!(c.extra_centers, 1);
        assert_eq!(c.centers, vec![0, 5]);
        assert!(c.tree_nodes().len() <= 9);
    }

    #[test]
    fn connector_rules() {
        // Two S-nodes adjacent across clusters.
        let g = path(2);
        let c = bfs_clustering(&g, &[0, 1], &[0, 1], &SimConfig::default()).unwrap();
        let p = connector_paths(&g, &[0, 1], &c);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].path, vec![0, 1]);
        // Center 0 sees S-nodes 1, 2, 3 of three clusters.
        let star = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let c = bfs_clustering(&star, &[1, 2, 3], &[1, 2, 3], &SimConfig::default()).unwrap();
        let p = connector_paths(&star, &[1, 2, 3], &c);
        assert_eq!(p.iter().map(|q| q.path.clone()).collect::<Vec<_>>(), vec![vec![1, 0, 2], vec![2, 0, 3]]);
    }

    #[test]
    fn edges_can_carry_three_paths() {
        // Edge 0-1 lies on the two-hop path 0-1-2 and on three-hop paths
        // through both non-S neighbors 3 and 5 of node 1.
        let g = Graph::from_edges(7, [(0, 1), (1, 2), (1, 3), (3, 4), (1, 5), (5, 6)]).unwrap();
        let s = [0, 2, 4, 6];
        let c = bfs_clustering(&g, &s, &s, &SimConfig::default()).unwrap();
        let usage = edge_usage(&connector_paths(&g, &s, &c));
        assert_eq!(usage[0], ((0, 1), 3));
    }

    #[test]
    fn build_examples() {
        let cfg = SimConfig::default();
        let k5 = Graph::from_edges(5, (0..5).flat_map(|u| ((u + 1)..5).map(move |v| (u, v)))).unwrap();
        let out = build_cds(&k5, &[2], CdsParams::for_n(5, 4), &cfg).unwrap();
        assert_eq!(out.set, vec![2]);
        let p7 = path(7);
        let out = build_cds(&p7, &[0, 3, 6], CdsParams { alpha: 1, beta: 1 }, &cfg).unwrap();
        assert_eq!(out.set, (0..7).collect::<Vec<_>>());
        assert!(out.set.len() <= out.size_bound());
        assert!(build_cds(&Graph::empty(2), &[0, 1], CdsParams { alpha: 1, beta: 1 }, &cfg)
            .unwrap_err()
            .is_precondition());
    }
}
