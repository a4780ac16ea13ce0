//! Greedy distance-2 colorings, charged at the cost of the distributed
//! bipartite coloring algorithm they stand in for.

use crate::bipartite::{Bipartite, Side};
use crate::graph::{Graph, NodeId};
use crate::sim::CostModel;

/// Colors `1..=num_colors` on a subset of the host nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coloring {
    pub color: Vec<Option<usize>>,
    pub num_colors: usize,
    /// Rounds charged for computing the coloring distributedly.
    pub charged_rounds: u64,
}

impl Coloring {
    /// Every node of `subset` gets its own color.
    pub fn trivial(n: usize, subset: &[NodeId]) -> Self {
        let mut color = vec![None; n];
        for (i, &v) in subset.iter().enumerate() {
            color[v] = Some(i + 1);
        }
        Coloring {
            color,
            num_colors: subset.len(),
            charged_rounds: 0,
        }
    }

    pub fn colored(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.color.iter().enumerate().filter_map(|(v, c)| c.map(|_| v))
    }

    /// Nodes of the given color, ascending.
    pub fn class(&self, color: usize) -> Vec<NodeId> {
        self.colored().filter(|&v| self.color[v] == Some(color)).collect()
    }

    /// Checks distance-2 separation of every color class in `g` by BFS.
    pub fn is_valid_distance2(&self, g: &Graph) -> bool {
        self.color.len() == g.n()
            && self.colored().all(|v| {
                let dist = g.bfs_within(v, 2, |_| true);
                self.colored()
                    .all(|u| u == v || self.color[u] != self.color[v] || dist[u].is_none())
            })
    }
}

/// Iterated binary logarithm.
pub fn log_star(n: usize) -> u64 {
    let mut x = n as f64;
    let mut k = 0;
    while x > 1.0 {
        x = x.log2();
        k += 1;
    }
    k
}

/// Greedy coloring of `subset` over the square of `g`, in ascending id order,
/// each node taking the smallest color unused within distance 2.
pub fn greedy_distance2_subset(g: &Graph, subset: &[NodeId]) -> Coloring {
    let mut color: Vec<Option<usize>> = vec![None; g.n()];
    let mut order = subset.to_vec();
    order.sort_unstable();
    order.dedup();
    let mut num_colors = 0;
    let mut used = Vec::new();
    for &v in &order {
        used.clear();
        for &u in g.neighbors(v) {
            used.extend(color[u]);
            for &w in g.neighbors(u) {
                if w != v {
                    used.extend(color[w]);
                }
            }
        }
        used.sort_unstable();
        used.dedup();
        let mut c = 1;
        for &taken in &used {
            if taken == c {
                c += 1;
            } else if taken > c {
                break;
            }
        }
        color[v] = Some(c);
        num_colors = num_colors.max(c);
    }
    Coloring {
        color,
        num_colors,
        charged_rounds: 0,
    }
}

/// Rounds charged for a distance-2 coloring of one side of a bipartite graph.
pub fn bipartite_coloring_cost(delta_l: usize, delta_r: usize, n: usize, model: CostModel) -> u64 {
    let product = (delta_l * delta_r) as u64;
    match model {
        CostModel::Congest => product + delta_l as u64 * log_star(n),
        CostModel::Local => product + log_star(n),
    }
}

/// Distance-2 coloring of the chosen side with at most `Δ_L·Δ_R` colors.
pub fn greedy_distance2_coloring(b: &Bipartite, side: Side, model: CostModel) -> Coloring {
    color_bipartite_subset(b, &b.nodes_on(side), model)
}

/// Distance-2 coloring of an arbitrary subset of one bipartite side.
pub fn color_bipartite_subset(b: &Bipartite, subset: &[NodeId], model: CostModel) -> Coloring {
    let mut coloring = greedy_distance2_subset(&b.graph, subset);
    coloring.charged_rounds = bipartite_coloring_cost(
        b.max_degree_on(Side::Left),
        b.max_degree_on(Side::Right),
        b.original_n,
        model,
    );
    coloring
}
