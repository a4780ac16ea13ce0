//! Bipartite representation: each node splits into a constraint copy on
//! the left and a value copy on the right.

use crate::cfds::Cfds;
use crate::error::{Error, Result};
use crate::fixed::FixedPoint;
use crate::graph::{Graph, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// A bipartite host graph whose nodes remember which original node they
/// stand for.
#[derive(Clone, Debug)]
pub struct Bipartite {
    pub graph: Graph,
    pub side: Vec<Side>,
    /// Original node each host node was copied from.
    pub origin: Vec<NodeId>,
    /// Number of nodes of the original graph.
    pub original_n: usize,
}

impl Bipartite {
    pub fn nodes_on(&self, side: Side) -> Vec<NodeId> {
        self.graph.nodes().filter(|&v| self.side[v] == side).collect()
    }

    pub fn max_degree_on(&self, side: Side) -> usize {
        self.graph
            .nodes()
            .filter(|&v| self.side[v] == side)
            .map(|v| self.graph.degree(v))
            .max()
            .unwrap_or(0)
    }

    /// Right copy of original node `v`. Right copies are laid out as
    /// `left_count + v`.
    pub fn right_of(&self, v: NodeId) -> NodeId {
        self.graph.n() - self.original_n + v
    }

    /// Folds host values back onto the original graph, taking the maximum
    /// over all copies of each node.
    pub fn revert_max(&self, values: &[FixedPoint]) -> Vec<FixedPoint> {
        let scale = values.first().map_or(0, |v| v.scale());
        let mut out = vec![FixedPoint::zero(scale); self.original_n];
        for (v, &val) in values.iter().enumerate() {
            let o = self.origin[v];
            out[o] = out[o].max(val);
        }
        out
    }
}

/// `B_G` together with the lifted CFDS `(x̃, c̃)`.
#[derive(Clone, Debug)]
pub struct BipartiteRep {
    pub host: Bipartite,
    pub cfds: Cfds,
}

/// Left copy of `v` is host node `v`, right copy is `n + v`; `(u_L, v_R)` is
/// an edge iff `v ∈ N(u)`.
pub fn bipartite_representation(g: &Graph, d: &Cfds) -> Result<BipartiteRep> {
    let n = g.n();
    if d.len() != n {
        return Err(Error::Domain(format!("CFDS has {} nodes, graph {}", d.len(), n)));
    }
    let edges = g
        .nodes()
        .flat_map(|u| g.closed_neighborhood(u).into_iter().map(move |v| (u, n + v)));
    let graph = Graph::from_edges(2 * n, edges)?;
    let scale = d.scale();
    let zero = FixedPoint::zero(scale);
    let mut x = vec![zero; 2 * n];
    let mut c = vec![zero; 2 * n];
    for v in g.nodes() {
        x[n + v] = d.x[v];
        c[v] = d.c[v];
    }
    let side = (0..2 * n)
        .map(|v| if v < n { Side::Left } else { Side::Right })
        .collect();
    let origin = (0..2 * n).map(|v| v % n.max(1)).collect();
    Ok(BipartiteRep {
        host: Bipartite {
            graph,
            side,
            origin,
            original_n: n,
        },
        cfds: Cfds { x, c },
    })
}
