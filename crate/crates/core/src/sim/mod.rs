//! Synchronous lockstep execution with per-message size accounting.
//!
//! Rounds that are actually executed here are reported as *simulated*;
//! subroutines that run centrally charge their published round cost as
//! *charged* rounds instead.

mod aggregate;

pub use aggregate::{tree_aggregate_sum, RootedTree};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CostModel {
    #[default]
    Congest,
    Local,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimConfig {
    pub cost_model: CostModel,
    /// Constant in front of `⌈log₂ n⌉` for the per-message bit budget.
    pub beta: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            cost_model: CostModel::Congest,
            beta: 32,
        }
    }
}

impl SimConfig {
    /// `β·⌈log₂ n⌉` bits, with `⌈log₂ n⌉` floored at 1.
    pub fn message_budget(&self, n: usize) -> usize {
        let log = (usize::BITS - n.saturating_sub(1).leading_zeros()).max(1) as usize;
        self.beta * log
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Charge {
    pub label: String,
    pub rounds: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RoundStats {
    pub simulated_rounds: u64,
    pub charged_rounds: u64,
    pub max_message_bits: usize,
    pub cost_model: CostModel,
    pub charges: Vec<Charge>,
}

impl RoundStats {
    pub fn new(cost_model: CostModel) -> Self {
        RoundStats {
            cost_model,
            ..Default::default()
        }
    }

    /// Books rounds for a subroutine that was executed centrally.
    pub fn charge_oracle(&mut self, rounds: u64, label: impl Into<String>) {
        if rounds == 0 {
            return;
        }
        self.charged_rounds += rounds;
        self.charges.push(Charge {
            label: label.into(),
            rounds,
        });
    }

    pub fn add_simulated(&mut self, rounds: u64) {
        self.simulated_rounds += rounds;
    }

    /// Sequential composition.
    pub fn absorb(&mut self, other: RoundStats) {
        self.simulated_rounds += other.simulated_rounds;
        self.charged_rounds += other.charged_rounds;
        self.max_message_bits = self.max_message_bits.max(other.max_message_bits);
        self.charges.extend(other.charges);
    }
}

/// Wire size of a message in its canonical serialization.
pub trait Message: Clone {
    fn bits(&self) -> usize;
}

impl Message for u128 {
    fn bits(&self) -> usize {
        (u128::BITS - self.leading_zeros()).max(1) as usize
    }
}

impl Message for u64 {
    fn bits(&self) -> usize {
        (u64::BITS - self.leading_zeros()).max(1) as usize
    }
}

/// What a node sees when it is scheduled.
pub struct Context<'a> {
    pub id: NodeId,
    pub neighbors: &'a [NodeId],
    pub round: usize,
}

pub struct Outbox<M> {
    pub sends: Vec<(NodeId, M)>,
    pub halt: bool,
}

impl<M> Outbox<M> {
    pub fn halt() -> Self {
        Outbox {
            sends: Vec::new(),
            halt: true,
        }
    }

    pub fn wait() -> Self {
        Outbox {
            sends: Vec::new(),
            halt: false,
        }
    }

    pub fn send(to: NodeId, msg: M, halt: bool) -> Self {
        Outbox {
            sends: vec![(to, msg)],
            halt,
        }
    }
}

pub trait NodeProgram {
    type Msg: Message;

    /// Called in round 0 with an empty inbox, then in every later round in
    /// which the node is running or receives messages. The inbox is sorted
    /// by sender id.
    fn step(&mut self, ctx: &Context<'_>, inbox: &[(NodeId, Self::Msg)]) -> Outbox<Self::Msg>;
}

/// Runs one program per node in lockstep until every node has halted and no
/// message is in flight. Halted nodes wake up when they receive a message.
pub fn run<P: NodeProgram>(
    g: &Graph,
    mut programs: Vec<P>,
    limit: usize,
    config: &SimConfig,
) -> Result<(RoundStats, Vec<P>)> {
    let n = g.n();
    if programs.len() != n {
        return Err(Error::Domain(format!(
            "{} programs for {n} nodes",
            programs.len()
        )));
    }
    let budget = config.message_budget(n);
    let mut stats = RoundStats::new(config.cost_model);
    let mut halted = vec![false; n];
    let mut inboxes: Vec<Vec<(NodeId, P::Msg)>> = vec![Vec::new(); n];
    let mut round = 0usize;
    loop {
        let mut next: Vec<Vec<(NodeId, P::Msg)>> = vec![Vec::new(); n];
        let mut in_flight = false;
        for v in 0..n {
            if halted[v] && inboxes[v].is_empty() {
                continue;
            }
            let ctx = Context {
                id: v,
                neighbors: g.neighbors(v),
                round,
            };
            let out = programs[v].step(&ctx, &inboxes[v]);
            halted[v] = out.halt;
            for (to, msg) in out.sends {
                if !g.has_edge(v, to) {
                    return Err(Error::NotANeighbor { from: v, to });
                }
                let bits = msg.bits();
                if config.cost_model == CostModel::Congest && bits > budget {
                    return Err(Error::MessageTooLarge {
                        node: v,
                        round,
                        bits,
                        budget,
                    });
                }
                stats.max_message_bits = stats.max_message_bits.max(bits);
                next[to].push((v, msg));
                in_flight = true;
            }
        }
        if !in_flight && halted.iter().all(|&h| h) {
            break;
        }
        // Senders are visited in ascending order, so each inbox is already
        // sorted by sender id.
        inboxes = next;
        round += 1;
        if round > limit {
            return Err(Error::RoundLimit { limit });
        }
        stats.simulated_rounds += 1;
    }
    Ok((stats, programs))
}
