//! Low-diameter clusterings with a coloring of the cluster graph such that
//! same-colored clusters are far apart.

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::sim::RootedTree;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cluster {
    pub leader: NodeId,
    /// Ascending.
    pub members: Vec<NodeId>,
    pub tree: RootedTree,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterGraph {
    pub clusters: Vec<Cluster>,
    /// Index into `clusters` for every node.
    pub cluster_of: Vec<usize>,
}

impl ClusterGraph {
    pub fn from_clusters(g: &Graph, clusters: Vec<Cluster>) -> Result<Self> {
        let mut cluster_of = vec![usize::MAX; g.n()];
        for (i, c) in clusters.iter().enumerate() {
            for &v in &c.members {
                if v >= g.n() || cluster_of[v] != usize::MAX {
                    return Err(Error::Invariant(format!("node {v} is not in exactly one cluster")));
                }
                cluster_of[v] = i;
            }
        }
        if let Some(v) = cluster_of.iter().position(|&c| c == usize::MAX) {
            return Err(Error::Invariant(format!("node {v} is in no cluster")));
        }
        Ok(ClusterGraph {
            clusters,
            cluster_of,
        })
    }

    /// Maximum tree depth.
    pub fn depth(&self) -> usize {
        self.clusters.iter().map(|c| c.tree.depth()).max().unwrap_or(0)
    }

    /// Nodes outside cluster `i` adjacent to it, ascending.
    pub fn fringe(&self, g: &Graph, i: usize) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self.clusters[i]
            .members
            .iter()
            .flat_map(|&v| g.neighbors(v).iter().copied())
            .filter(|&u| self.cluster_of[u] != i)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkDecomposition {
    pub clusters: ClusterGraph,
    /// Color `1..=num_colors` per cluster.
    pub color: Vec<usize>,
    pub num_colors: usize,
    pub k: usize,
    pub charged_rounds: u64,
}

impl NetworkDecomposition {
    /// Cluster indices of one color.
    pub fn class(&self, color: usize) -> Vec<usize> {
        (0..self.color.len()).filter(|&i| self.color[i] == color).collect()
    }

    /// Partition, connectivity, tree shape and k-separation, all by BFS.
    pub fn validate(&self, g: &Graph) -> Result<()> {
        let cg = ClusterGraph::from_clusters(g, self.clusters.clusters.clone())?;
        for (i, c) in cg.clusters.iter().enumerate() {
            let mut inside = vec![false; g.n()];
            for &v in &c.members {
                inside[v] = true;
            }
            if !g.induces_connected(&inside) {
                return Err(Error::Invariant(format!("cluster {i} is not connected")));
            }
            if !inside[c.leader] || c.tree.root != c.leader {
                return Err(Error::Invariant(format!("cluster {i} has a foreign leader")));
            }
            if c.tree.len() != c.members.len() {
                return Err(Error::Invariant(format!("tree of cluster {i} does not span it")));
            }
            for (&v, &p) in &c.tree.parent {
                if !inside[v] || !inside[p] || !g.has_edge(v, p) {
                    return Err(Error::Invariant(format!("bad tree edge {v}-{p} in cluster {i}")));
                }
            }
            if self.color[i] == 0 || self.color[i] > self.num_colors {
                return Err(Error::Invariant(format!("cluster {i} has color {}", self.color[i])));
            }
        }
        for i in 0..cg.clusters.len() {
            let near = near_clusters(g, &cg, i, self.k);
            if let Some(&j) = near.iter().find(|&&j| j != i && self.color[j] == self.color[i]) {
                return Err(Error::Invariant(format!(
                    "clusters {i} and {j} share a color within distance {}",
                    self.k
                )));
            }
        }
        Ok(())
    }
}

/// Clusters with a member within distance `k` of cluster `i`.
fn near_clusters(g: &Graph, cg: &ClusterGraph, i: usize, k: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; g.n()];
    let mut frontier: Vec<NodeId> = cg.clusters[i].members.clone();
    for &v in &frontier {
        dist[v] = 0;
    }
    for d in 1..=k {
        let mut next = Vec::new();
        for &v in &frontier {
            for &u in g.neighbors(v) {
                if dist[u] == usize::MAX {
                    dist[u] = d;
                    next.push(u);
                }
            }
        }
        frontier = next;
    }
    let mut out: Vec<usize> = (0..g.n()).filter(|&v| dist[v] != usize::MAX).map(|v| cg.cluster_of[v]).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// `f(n) = 2^⌈√(log₂ n · log₂ log₂ max(n,4))⌉`.
pub fn decomposition_f(n: usize) -> u64 {
    let n = n.max(4) as f64;
    let e = (n.log2() * n.log2().log2()).sqrt().ceil() as u32;
    1u64 << e.min(62)
}

pub trait DecompositionProvider {
    fn decompose(&self, g: &Graph, k: usize) -> Result<NetworkDecomposition>;
}

/// Centralized ball carving followed by greedy coloring of the k-near
/// cluster conflict graph; charged `k·f(n)` rounds.
#[derive(Clone, Copy, Debug, Default)]
pub struct GreedyBallCarving;

impl DecompositionProvider for GreedyBallCarving {
    fn decompose(&self, g: &Graph, k: usize) -> Result<NetworkDecomposition> {
        compute_decomposition(g, k)
    }
}

/// Hands out a prebuilt decomposition.
#[derive(Clone, Debug)]
pub struct FixedDecomposition(pub NetworkDecomposition);

impl DecompositionProvider for FixedDecomposition {
    fn decompose(&self, g: &Graph, k: usize) -> Result<NetworkDecomposition> {
        if self.0.k < k {
            return Err(Error::precondition("decomposition", format!("need {k}-separation, have {}", self.0.k)));
        }
        self.0.validate(g)?;
        Ok(self.0.clone())
    }
}

/// One cluster per connected component, each rooted at its lowest id.
#[derive(Clone, Copy, Debug, Default)]
pub struct ComponentClusters;

impl DecompositionProvider for ComponentClusters {
    fn decompose(&self, g: &Graph, k: usize) -> Result<NetworkDecomposition> {
        let comp = g.components();
        let count = comp.iter().copied().max().map_or(0, |c| c + 1);
        let mut clusters = Vec::with_capacity(count);
        for c in 0..count {
            let members: Vec<NodeId> = g.nodes().filter(|&v| comp[v] == c).collect();
            let tree = RootedTree::bfs(g, members[0], &members)?;
            clusters.push(Cluster {
                leader: members[0],
                members,
                tree,
            });
        }
        let clusters = ClusterGraph::from_clusters(g, clusters)?;
        Ok(NetworkDecomposition {
            color: vec![1; clusters.clusters.len()],
            num_colors: usize::from(count > 0),
            clusters,
            k,
            charged_rounds: 0,
        })
    }
}

/// Ball carving: the lowest unclustered id grows a BFS ball in the
/// remaining graph while the next layer more than doubles it.
pub fn compute_decomposition(g: &Graph, k: usize) -> Result<NetworkDecomposition> {
    let n = g.n();
    let mut free = vec![true; n];
    let mut clusters = Vec::new();
    while let Some(v) = free.iter().position(|&f| f) {
        let dist = g.bfs_within(v, usize::MAX, |u| free[u]);
        let ball = |r: usize| dist.iter().filter(|d| d.is_some_and(|d| d <= r)).count();
        let mut r = 0;
        while ball(r + 1) > 2 * ball(r) {
            r += 1;
        }
        let members: Vec<NodeId> = (0..n).filter(|&u| dist[u].is_some_and(|d| d <= r)).collect();
        for &u in &members {
            free[u] = false;
        }
        let tree = RootedTree::bfs(g, v, &members)?;
        clusters.push(Cluster {
            leader: v,
            members,
            tree,
        });
    }
    let cg = ClusterGraph::from_clusters(g, clusters)?;
    let mut color = vec![0usize; cg.clusters.len()];
    let mut num_colors = 0;
    for i in 0..cg.clusters.len() {
        let mut used: Vec<usize> = near_clusters(g, &cg, i, k).into_iter().map(|j| color[j]).collect();
        used.sort_unstable();
        let c = (1..).find(|c| used.binary_search(c).is_err()).expect("a free color exists");
        color[i] = c;
        num_colors = num_colors.max(c);
    }
    let decomp = NetworkDecomposition {
        clusters: cg,
        color,
        num_colors,
        k,
        charged_rounds: k as u64 * decomposition_f(n),
    };
    decomp.validate(g)?;
    Ok(decomp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clique_is_one_cluster() {
        let g = Graph::from_edges(4, (0..4).flat_map(|u| ((u + 1)..4).map(move |v| (u, v)))).unwrap();
        let d = compute_decomposition(&g, 2).unwrap();
        assert_eq!((d.clusters.clusters.len(), d.num_colors), (1, 1));
    }

    #[test]
    fn far_triangles_share_a_color() {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
        let d = compute_decomposition(&g, 2).unwrap();
        assert_eq!(d.clusters.clusters.len(), 2);
        assert_eq!(d.color, vec![1, 1]);
    }

    #[test]
    fn path_separation_holds() {
        let g = Graph::from_edges(10, (0..9).map(|v| (v, v + 1))).unwrap();
        let d = compute_decomposition(&g, 2).unwrap();
        let cg = &d.clusters;
        for a in 0..cg.clusters.len() {
            for b in (a + 1)..cg.clusters.len() {
                if d.color[a] != d.color[b] {
                    continue;
                }
                for &u in &cg.clusters[a].members {
                    for &v in &cg.clusters[b].members {
                        assert!(g.distance(u, v).unwrap() >= 3);
                    }
                }
            }
        }
    }

    #[test]
    fn broken_decompositions_are_caught() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let mut d = ComponentClusters.decompose(&g, 2).unwrap();
        assert!(d.validate(&g).is_ok());
        let single = |v| Cluster {
            leader: v,
            members: vec![v],
            tree: RootedTree::singleton(v),
        };
        d.clusters = ClusterGraph::from_clusters(&g, vec![single(0), single(1), single(2)]).unwrap();
        d.color = vec![1, 2, 1];
        d.num_colors = 2;
        assert!(d.validate(&g).is_err());
        d.color = vec![1, 2, 3];
        d.num_colors = 3;
        assert!(d.validate(&g).is_ok());
    }

    #[test]
    fn f_values() {
        assert_eq!(decomposition_f(1), 4);
        assert_eq!(decomposition_f(16), 8);
    }
}
