//! Undirected simple graphs with dense ids and sorted adjacency lists.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Graph {
    adj: Vec<Vec<NodeId>>,
    m: usize,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
            m: 0,
        }
    }

    /// Builds a graph from an edge list. Duplicate edges collapse; self-loops
    /// are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Domain(format!("edge ({u},{v}) out of range for n = {n}")));
            }
            if u == v {
                return Err(Error::Domain(format!("self-loop at node {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut m = 0;
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            m += list.len();
        }
        Ok(Graph { adj, m: m / 2 })
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn nodes(&self) -> std::ops::Range<NodeId> {
        0..self.n()
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adj[v]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adj[v].len()
    }

    /// Maximum degree `Δ` (0 for the empty graph).
    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// `Δ̃ = Δ + 1`, the largest inclusive neighborhood.
    pub fn delta_tilde(&self) -> usize {
        self.max_degree() + 1
    }

    /// Inclusive neighborhood `N(v)` in ascending order.
    pub fn closed_neighborhood(&self, v: NodeId) -> Vec<NodeId> {
        let list = &self.adj[v];
        let pos = list.partition_point(|&u| u < v);
        let mut out = Vec::with_capacity(list.len() + 1);
        out.extend_from_slice(&list[..pos]);
        out.push(v);
        out.extend_from_slice(&list[pos..]);
        out
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// Hop distances from `src`, `None` for unreachable nodes.
    pub fn bfs(&self, src: NodeId) -> Vec<Option<usize>> {
        self.bfs_within(src, usize::MAX, |_| true)
    }

    /// BFS restricted to nodes accepted by `allowed`, stopping at depth `limit`.
    pub fn bfs_within(
        &self,
        src: NodeId,
        limit: usize,
        allowed: impl Fn(NodeId) -> bool,
    ) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n()];
        if !allowed(src) {
            return dist;
        }
        dist[src] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap();
            if d == limit {
                continue;
            }
            for &w in &self.adj[u] {
                if dist[w].is_none() && allowed(w) {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn distance(&self, u: NodeId, v: NodeId) -> Option<usize> {
        self.bfs(u)[v]
    }

    /// Component label per node, labels in order of smallest member.
    pub fn components(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.n()];
        let mut next = 0;
        for s in self.nodes() {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &w in &self.adj[u] {
                    if label[w] == usize::MAX {
                        label[w] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn is_connected(&self) -> bool {
        self.n() <= 1 || self.components().iter().all(|&c| c == 0)
    }

    /// Whether the subgraph induced by `set` is connected (empty sets count as connected).
    pub fn induces_connected(&self, set: &[bool]) -> bool {
        let Some(start) = (0..self.n()).find(|&v| set[v]) else {
            return true;
        };
        let dist = self.bfs_within(start, usize::MAX, |v| set[v]);
        (0..self.n()).all(|v| !set[v] || dist[v].is_some())
    }

    /// Whether every node is in `set` or adjacent to a member.
    pub fn is_dominating(&self, set: &[bool]) -> bool {
        self.nodes()
            .all(|v| set[v] || self.adj[v].iter().any(|&u| set[u]))
    }

    /// Inclusive-neighborhood bitmasks; requires `n <= 64`.
    pub fn closed_masks(&self) -> Result<Vec<u64>> {
        if self.n() > 64 {
            return Err(Error::TooLarge(format!("bitmask view needs n <= 64, got {}", self.n())));
        }
        Ok(self
            .nodes()
            .map(|v| self.adj[v].iter().fold(1u64 << v, |m, &u| m | (1u64 << u)))
            .collect())
    }

    /// Parses the plain-text edge-list format: `u v` per line, `#` comments,
    /// optional `n <count>` header for isolated nodes.
    pub fn parse(text: &str) -> Result<Self> {
        let mut declared: Option<usize> = None;
        let mut edges = Vec::new();
        let mut max_id: Option<usize> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let bad = |detail: String| Error::Parse { line: idx + 1, detail };
            match parts.as_slice() {
                ["n", count] => {
                    let count = count
                        .parse::<usize>()
                        .map_err(|e| bad(format!("bad node count: {e}")))?;
                    declared = Some(count);
                }
                [u, v] => {
                    let u = u.parse::<usize>().map_err(|e| bad(format!("bad id '{u}': {e}")))?;
                    let v = v.parse::<usize>().map_err(|e| bad(format!("bad id '{v}': {e}")))?;
                    if u == v {
                        return Err(bad(format!("self-loop at {u}")));
                    }
                    max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
                    edges.push((u, v));
                }
                _ => return Err(bad(format!("expected 'u v' or 'n <count>', got '{line}'"))),
            }
        }
        let implied = max_id.map_or(0, |m| m + 1);
        let n = match declared {
            Some(d) if d < implied => {
                return Err(Error::Parse {
                    line: 0,
                    detail: format!("header declares {d} nodes but ids reach {}", implied - 1),
                })
            }
            Some(d) => d,
            None => implied,
        };
        Graph::from_edges(n, edges)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("n {}\n", self.n());
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }
}
