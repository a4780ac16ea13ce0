use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Signed;

use super::{run, Context, NodeProgram, Outbox, RoundStats, SimConfig};
use crate::error::{Error, Result};
use crate::fixed::ceil_to_grid;
use crate::graph::{Graph, NodeId};
use crate::scalar::Scalar;

/// A spanning tree of one cluster, rooted at its leader.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedTree {
    pub root: NodeId,
    /// Parent of every non-root member.
    pub parent: BTreeMap<NodeId, NodeId>,
}

impl RootedTree {
    pub fn singleton(root: NodeId) -> Self {
        RootedTree {
            root,
            parent: BTreeMap::new(),
        }
    }

    /// BFS tree of the subgraph induced by `members`, rooted at `root`.
    pub fn bfs(g: &Graph, root: NodeId, members: &[NodeId]) -> Result<Self> {
        let mut inside = vec![false; g.n()];
        for &v in members {
            inside[v] = true;
        }
        let dist = g.bfs_within(root, usize::MAX, |v| inside[v]);
        let mut parent = BTreeMap::new();
        for &v in members {
            if v == root {
                continue;
            }
            let d = dist[v].ok_or_else(|| {
                Error::Invariant(format!("cluster of {root} does not induce a connected graph"))
            })?;
            let p = g
                .neighbors(v)
                .iter()
                .copied()
                .find(|&u| inside[u] && dist[u] == Some(d - 1))
                .expect("BFS predecessor exists");
            parent.insert(v, p);
        }
        Ok(RootedTree { root, parent })
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::once(self.root).chain(self.parent.keys().copied())
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v == self.root || self.parent.contains_key(&v)
    }

    pub fn len(&self) -> usize {
        self.parent.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn depth_of(&self, mut v: NodeId) -> usize {
        let mut d = 0;
        while let Some(&p) = self.parent.get(&v) {
            v = p;
            d += 1;
        }
        d
    }

    pub fn depth(&self) -> usize {
        self.nodes().map(|v| self.depth_of(v)).max().unwrap_or(0)
    }
}

/// Convergecast state of one node.
struct Gather {
    parent: Option<NodeId>,
    pending: usize,
    acc: u128,
    active: bool,
}

impl NodeProgram for Gather {
    type Msg = u128;

    fn step(&mut self, _ctx: &Context<'_>, inbox: &[(NodeId, u128)]) -> Outbox<u128> {
        if !self.active {
            return Outbox::halt();
        }
        for &(_, value) in inbox {
            self.acc += value;
            self.pending -= 1;
        }
        if self.pending > 0 {
            return Outbox::wait();
        }
        self.active = false;
        match self.parent {
            Some(p) => Outbox::send(p, self.acc, true),
            None => Outbox::halt(),
        }
    }
}

/// Sums quantized values at the tree root by convergecast. Fringe nodes
/// (outside the tree) first hand their value to their lowest-id neighbor in
/// the tree. Values must be multiples of `2^-scale`.
pub fn tree_aggregate_sum(
    g: &Graph,
    tree: &RootedTree,
    fringe: &[NodeId],
    values: &BTreeMap<NodeId, BigRational>,
    scale: u32,
    config: &SimConfig,
) -> Result<(BigRational, RoundStats)> {
    let mut parent: BTreeMap<NodeId, Option<NodeId>> = tree.nodes().map(|v| (v, tree.parent.get(&v).copied())).collect();
    for &f in fringe {
        if tree.contains(f) {
            continue;
        }
        let hook = g
            .neighbors(f)
            .iter()
            .copied()
            .find(|&u| tree.contains(u))
            .ok_or_else(|| Error::Domain(format!("fringe node {f} has no neighbor in the tree")))?;
        parent.insert(f, Some(hook));
    }
    let mut programs: Vec<Gather> = (0..g.n())
        .map(|_| Gather {
            parent: None,
            pending: 0,
            acc: 0,
            active: false,
        })
        .collect();
    for (&v, &p) in &parent {
        programs[v].active = true;
        programs[v].parent = p;
        if let Some(p) = p {
            programs[p].pending += 1;
        }
    }
    for (&v, value) in values {
        if !parent.contains_key(&v) {
            return Err(Error::Domain(format!("value given for non-participant {v}")));
        }
        let num = ceil_to_grid(value, scale);
        if value.is_negative() || BigRational::from_dyadic(num, scale) != *value {
            return Err(Error::Precision(format!(
                "value {value} of node {v} is not a multiple of 2^-{scale}"
            )));
        }
        programs[v].acc = num;
    }
    let limit = parent.len() + 1;
    let (stats, programs) = run(g, programs, limit, config)?;
    Ok((BigRational::from_dyadic(programs[tree.root].acc, scale), stats))
}
