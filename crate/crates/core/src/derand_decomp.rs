//! Derandomization over a 2-hop network decomposition: every cluster draws
//! its coins from a short seed, and cluster leaders fix the seed bits one
//! by one by conditional expectations aggregated over their trees.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Zero;

use crate::cfds::Cfds;
use crate::decomposition::{DecompositionProvider, NetworkDecomposition};
use crate::derand_color::{check_fds, eps_log_bound, is_fractional_at_least};
use crate::error::{Error, Result};
use crate::fixed::{ceil_to_grid, FixedPoint};
use crate::graph::{Graph, NodeId};
use crate::rounding::{
    factor_two_instance, node_outlook, one_shot_instance, phase1, phase2, CoinSource, LawView,
    PartialAssignment, PatternLaw, RoundingInstance, DEFAULT_ENUM_BUDGET,
};
use crate::scalar::Scalar;
use crate::sim::{tree_aggregate_sum, RoundStats, SimConfig};
use crate::Exact;

/// Desk-scale seed shape: independence is capped at `max_k` and the field
/// has at least `min_bits` bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedParams {
    pub max_k: usize,
    pub min_bits: u32,
}

impl Default for SeedParams {
    fn default() -> Self {
        SeedParams { max_k: 2, min_bits: 6 }
    }
}

/// Order in which same-colored clusters fix their bits. Both give the same
/// result because their dependency sets are disjoint.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FixOrder {
    /// Bit `j` of every cluster before bit `j+1` of any.
    #[default]
    Interleaved,
    /// All bits of one cluster before the next cluster.
    Sequential,
}

/// Largest cluster participant count supported (outcome masks are `u64`).
pub const MAX_CLUSTER_PARTICIPANTS: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct BitDecision {
    pub cluster: usize,
    pub color: usize,
    pub bit: usize,
    /// Aggregated `Σ α̃_{u,0}` and `Σ α̃_{u,1}` as numerators over `2^scale`.
    pub sum_zero: u128,
    pub sum_one: u128,
    pub value: bool,
    /// Exact change of the conditional expectation of the total size.
    pub delta: Exact,
}

/// Seeded coin sources, one per cluster that has participants.
#[derive(Clone, Debug)]
pub struct SeededCoins {
    pub sources: Vec<Option<CoinSource>>,
    pub thresholds: Vec<Vec<u32>>,
    /// Cluster and member index of every participating node.
    pub slot: Vec<Option<(usize, usize)>>,
}

impl SeededCoins {
    pub fn new(inst: &RoundingInstance, decomp: &NetworkDecomposition, bits: u32, k: usize) -> Result<Self> {
        let clusters = &decomp.clusters.clusters;
        let mut sources = Vec::with_capacity(clusters.len());
        let mut thresholds = Vec::with_capacity(clusters.len());
        let mut slot = vec![None; inst.n()];
        for (ci, c) in clusters.iter().enumerate() {
            let members: Vec<NodeId> = c.members.iter().copied().filter(|&v| inst.participates(v)).collect();
            if members.is_empty() {
                sources.push(None);
                thresholds.push(Vec::new());
                continue;
            }
            if members.len() > MAX_CLUSTER_PARTICIPANTS {
                return Err(Error::TooLarge(format!(
                    "cluster {ci} has {} participants",
                    members.len()
                )));
            }
            for (i, &v) in members.iter().enumerate() {
                slot[v] = Some((ci, i));
            }
            let src = CoinSource::new(bits, k, members)?;
            thresholds.push(src.members().iter().map(|&v| src.threshold(inst.p[v])).collect::<Result<_>>()?);
            sources.push(Some(src));
        }
        Ok(SeededCoins {
            sources,
            thresholds,
            slot,
        })
    }

    pub fn seed_bits(&self) -> usize {
        self.sources.iter().flatten().map(|s| s.seed_bits()).max().unwrap_or(0)
    }

    /// Law of cluster `c` under the fixing; empty clusters get a trivial law.
    pub fn law(&self, c: usize, fixed: &PartialAssignment, budget: usize) -> Result<PatternLaw> {
        match &self.sources[c] {
            Some(src) => src.law(fixed, &self.thresholds[c], budget),
            None => Ok(PatternLaw {
                members: Vec::new(),
                outcomes: vec![(0, 1)],
                log2_total: 0,
                free_bits: 0,
                independent: false,
            }),
        }
    }

    /// Coins drawn from complete per-cluster seeds.
    pub fn coins(&self, inst: &RoundingInstance, seeds: &[u64]) -> Result<Vec<Option<bool>>> {
        let mut coins = vec![None; inst.n()];
        for v in inst.graph.nodes() {
            if let Some((c, i)) = self.slot[v] {
                let src = self.sources[c].as_ref().expect("slot points at a source");
                coins[v] = Some(src.draw_coin(seeds[c], i, inst.p[v])?);
            }
        }
        Ok(coins)
    }
}

#[derive(Clone, Debug)]
pub struct ClusterOutcome {
    pub cfds: Cfds,
    /// Instance after re-quantizing the probabilities to the seed field.
    pub instance: RoundingInstance,
    pub coins: Vec<Option<bool>>,
    pub seeds: Vec<u64>,
    pub decisions: Vec<BitDecision>,
    pub stats: RoundStats,
    pub field_bits: u32,
    pub k: usize,
}

fn ceil_log2(m: usize) -> u32 {
    usize::BITS - m.saturating_sub(1).leading_zeros()
}

/// Field width for a decomposition: enough points for the largest cluster.
pub fn seed_field_bits(inst: &RoundingInstance, decomp: &NetworkDecomposition, params: SeedParams) -> u32 {
    let largest = decomp
        .clusters
        .clusters
        .iter()
        .map(|c| c.members.iter().filter(|&&v| inst.participates(v)).count())
        .max()
        .unwrap_or(0);
    params.min_bits.max(ceil_log2(largest))
}

/// Rounds every probability up to a multiple of `2^-bits`.
pub fn requantize_probabilities(inst: &RoundingInstance, bits: u32) -> Result<RoundingInstance> {
    let p = inst.p.iter().map(|p| p.requantize_up(bits)).collect();
    RoundingInstance::new(inst.graph.clone(), inst.x.clone(), p, inst.c.clone(), inst.reference_n)
}

struct Fixer<'a> {
    inst: &'a RoundingInstance,
    decomp: &'a NetworkDecomposition,
    coins: SeededCoins,
    fixed: Vec<PartialAssignment>,
    laws: Vec<PatternLaw>,
    budget: usize,
    config: &'a SimConfig,
}

impl Fixer<'_> {
    fn expected_with(&mut self, c: usize, law: &PatternLaw, u: NodeId) -> Result<Exact> {
        let saved = std::mem::replace(&mut self.laws[c], law.clone());
        let out = node_outlook::<Exact>(
            self.inst,
            LawView {
                laws: &self.laws,
                slot: &self.coins.slot,
            },
            u,
            self.budget,
        );
        self.laws[c] = saved;
        Ok(out?.expected)
    }

    /// Fixes bit `j` of cluster `c`; returns the decision and its simulated
    /// rounds.
    fn fix_bit(&mut self, c: usize, color: usize, j: usize) -> Result<(BitDecision, u64)> {
        let g = &self.inst.graph;
        let scale = self.inst.scale();
        let cluster = &self.decomp.clusters.clusters[c];
        let fringe = self.decomp.clusters.fringe(g, c);
        let law0 = self.coins.law(c, &self.fixed[c].with(j, false), self.budget)?;
        let law1 = self.coins.law(c, &self.fixed[c].with(j, true), self.budget)?;
        let mut q0 = BTreeMap::new();
        let mut q1 = BTreeMap::new();
        let mut exact = Vec::new();
        for u in cluster.members.iter().chain(&fringe).copied() {
            let a0 = self.expected_with(c, &law0, u)?;
            let a1 = self.expected_with(c, &law1, u)?;
            q0.insert(u, BigRational::from_dyadic(ceil_to_grid(&a0, scale), scale));
            q1.insert(u, BigRational::from_dyadic(ceil_to_grid(&a1, scale), scale));
            exact.push((a0, a1));
        }
        // Both sums travel up the tree side by side in one convergecast.
        let (s0, st0) = tree_aggregate_sum(g, &cluster.tree, &fringe, &q0, scale, self.config)?;
        let (s1, st1) = tree_aggregate_sum(g, &cluster.tree, &fringe, &q1, scale, self.config)?;
        let value = s0 >= s1;
        let half = BigRational::from_dyadic(1, 1);
        let delta = exact.iter().fold(BigRational::zero(), |acc, (a0, a1)| {
            let chosen = if value { a1 } else { a0 };
            acc + chosen - half.clone() * (a0 + a1)
        });
        self.fixed[c].fix(j, value)?;
        self.laws[c] = if value { law1 } else { law0 };
        let broadcast = cluster.tree.depth() as u64 + 1;
        let rounds = st0.simulated_rounds.max(st1.simulated_rounds) + broadcast;
        let decision = BitDecision {
            cluster: c,
            color,
            bit: j,
            sum_zero: ceil_to_grid(&s0, scale),
            sum_one: ceil_to_grid(&s1, scale),
            value,
            delta,
        };
        Ok((decision, rounds))
    }
}

/// Fixes the seeds of all clusters, colors in order and same-colored
/// clusters in parallel, then runs both phases with the seeded coins.
/// Probabilities are first rounded up to the seed field's grid.
pub fn derandomize_clusterwise(
    inst: &RoundingInstance,
    decomp: &NetworkDecomposition,
    indep: usize,
    params: SeedParams,
    order: FixOrder,
    budget: usize,
    config: &SimConfig,
) -> Result<ClusterOutcome> {
    let g = &inst.graph;
    if decomp.k < 2 {
        return Err(Error::precondition("clusterwise", format!("decomposition is only {}-separated", decomp.k)));
    }
    decomp.validate(g).map_err(|e| Error::precondition("clusterwise", e.to_string()))?;
    let bits = seed_field_bits(inst, decomp, params);
    let k = indep.clamp(1, params.max_k.max(1));
    let inst = requantize_probabilities(inst, bits)?;
    let coins = SeededCoins::new(&inst, decomp, bits, k)?;
    let seed_len = coins.seed_bits();
    let nclusters = decomp.clusters.clusters.len();
    let fixed: Vec<PartialAssignment> = (0..nclusters)
        .map(|c| PartialAssignment::free(coins.sources[c].as_ref().map_or(0, |s| s.seed_bits())))
        .collect();
    let laws = (0..nclusters)
        .map(|c| coins.law(c, &fixed[c], budget))
        .collect::<Result<Vec<_>>>()?;
    let mut fixer = Fixer {
        inst: &inst,
        decomp,
        coins,
        fixed,
        laws,
        budget,
        config,
    };

    let mut decisions = Vec::new();
    let mut stats = RoundStats::new(config.cost_model);
    for color in 1..=decomp.num_colors {
        let active: Vec<usize> = decomp
            .class(color)
            .into_iter()
            .filter(|&c| fixer.coins.sources[c].is_some())
            .collect();
        // Rounds of bit j are the slowest cluster's rounds for that bit.
        let mut per_bit = vec![0u64; seed_len];
        let mut run = |c: usize, j: usize, fixer: &mut Fixer<'_>| -> Result<()> {
            let (d, r) = fixer.fix_bit(c, color, j)?;
            per_bit[j] = per_bit[j].max(r);
            decisions.push(d);
            Ok(())
        };
        match order {
            FixOrder::Interleaved => {
                for j in 0..seed_len {
                    for &c in &active {
                        run(c, j, &mut fixer)?;
                    }
                }
            }
            FixOrder::Sequential => {
                for &c in &active {
                    for j in 0..seed_len {
                        run(c, j, &mut fixer)?;
                    }
                }
            }
        }
        stats.add_simulated(per_bit.iter().sum());
    }
    decisions.sort_by_key(|d| (d.color, d.bit, d.cluster));

    let seeds: Vec<u64> = fixer
        .fixed
        .iter()
        .map(|f| (0..f.len()).filter(|&j| f.get(j) == Some(true)).fold(0u64, |s, j| s | 1 << j))
        .collect();
    let coin_values = fixer.coins.coins(&inst, &seeds)?;
    let cfds = phase2(&inst, &phase1(&inst, &coin_values)?);
    stats.charge_oracle(decomp.charged_rounds, "network decomposition");
    Ok(ClusterOutcome {
        cfds,
        instance: inst,
        coins: coin_values,
        seeds,
        decisions,
        stats,
        field_bits: bits,
        k,
    })
}

/// Shared knobs of the n-parameterized stages.
#[derive(Clone, Copy)]
pub struct ClusterStageConfig<'a> {
    pub provider: &'a dyn DecompositionProvider,
    pub seed: SeedParams,
    pub order: FixOrder,
    pub budget: usize,
    pub sim: SimConfig,
}

impl Default for ClusterStageConfig<'static> {
    fn default() -> Self {
        ClusterStageConfig {
            provider: &crate::decomposition::GreedyBallCarving,
            seed: SeedParams::default(),
            order: FixOrder::default(),
            budget: DEFAULT_ENUM_BUDGET,
            sim: SimConfig::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ClusterStage {
    pub cfds: Cfds,
    pub stats: RoundStats,
    pub outcome: Option<ClusterOutcome>,
}

fn all_ones(g: &Graph, scale: u32, sim: &SimConfig) -> ClusterStage {
    ClusterStage {
        cfds: Cfds::from_set(&vec![true; g.n()], scale),
        stats: RoundStats::new(sim.cost_model),
        outcome: None,
    }
}

/// Deterministic one-shot rounding of a `1/F`-fractional FDS. Values are
/// put on the seed field's grid with `p = x`, so the result is integral.
pub fn n_one_shot(g: &Graph, x: &Cfds, f: u64, cfg: &ClusterStageConfig<'_>) -> Result<ClusterStage> {
    check_fds(g, x, "one-shot")?;
    if !is_fractional_at_least(x, f) {
        return Err(Error::precondition("one-shot", format!("input is not 1/{f}-fractional")));
    }
    let delta_tilde = g.delta_tilde();
    if delta_tilde < 2 {
        return Ok(all_ones(g, x.scale(), &cfg.sim));
    }
    let decomp = cfg.provider.decompose(g, 2)?;
    let base = one_shot_instance(g, x, delta_tilde)?;
    let bits = seed_field_bits(&base, &decomp, cfg.seed);
    let xq: Vec<FixedPoint> = base.x.iter().map(|v| v.requantize_up(bits)).collect();
    let inst = RoundingInstance::new(g.clone(), xq.clone(), xq, base.c.clone(), g.n())?;
    let indep = usize::try_from(f).unwrap_or(usize::MAX);
    let out = derandomize_clusterwise(&inst, &decomp, indep, cfg.seed, cfg.order, cfg.budget, &cfg.sim)?;
    Ok(ClusterStage {
        cfds: out.cfds.clone(),
        stats: out.stats.clone(),
        outcome: Some(out),
    })
}

/// Deterministic factor-two rounding of a `1/r`-fractional FDS with
/// `⌈8 ln Δ̃⌉`-wise independent coins (capped by the seed parameters).
pub fn n_factor_two(
    g: &Graph,
    x: &Cfds,
    epsilon: f64,
    r: u64,
    cfg: &ClusterStageConfig<'_>,
) -> Result<ClusterStage> {
    const STAGE: &str = "factor-two";
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::precondition(STAGE, format!("ε = {epsilon} must be positive")));
    }
    check_fds(g, x, STAGE)?;
    if !is_fractional_at_least(x, r) {
        return Err(Error::precondition(STAGE, format!("input is not 1/{r}-fractional")));
    }
    let delta_tilde = g.delta_tilde();
    if delta_tilde < 2 {
        return Ok(all_ones(g, x.scale(), &cfg.sim));
    }
    let needed = eps_log_bound(256.0, epsilon, 3, delta_tilde);
    if r < needed {
        return Err(Error::precondition(STAGE, format!("r = {r} below {needed}")));
    }
    let inst = factor_two_instance(g, x, epsilon, r)?;
    let decomp = cfg.provider.decompose(g, 2)?;
    let indep = (8.0 * (delta_tilde as f64).ln()).ceil() as usize;
    let out = derandomize_clusterwise(&inst, &decomp, indep, cfg.seed, cfg.order, cfg.budget, &cfg.sim)?;
    Ok(ClusterStage {
        cfds: out.cfds.clone(),
        stats: out.stats.clone(),
        outcome: Some(out),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfds::validate_cfds;
    use crate::decomposition::{compute_decomposition, ComponentClusters};

    fn cycle(n: usize) -> Graph {
        Graph::from_edges(n, (0..n).map(|v| (v, (v + 1) % n))).unwrap()
    }

    #[test]
    fn pass_through_without_participants() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let s = 8;
        let one = FixedPoint::one(s);
        let zero = FixedPoint::zero(s);
        let inst = RoundingInstance::new(g.clone(), vec![zero, one, zero], vec![one; 3], vec![one; 3], 3).unwrap();
        let d = compute_decomposition(&g, 2).unwrap();
        let out = derandomize_clusterwise(&inst, &d, 2, SeedParams::default(), FixOrder::Interleaved, 24, &SimConfig::default()).unwrap();
        assert_eq!(out.cfds.x, vec![zero, one, zero]);
        assert!(out.decisions.is_empty());
        assert_eq!(out.stats.simulated_rounds, 0);
    }

    #[test]
    fn c5_one_shot() {
        let g = cycle(5);
        let scale = crate::fixed::iota(5).unwrap();
        let third = FixedPoint::quantize_up_at(1.0 / 3.0, scale).unwrap();
        let out = n_one_shot(&g, &Cfds::fds(vec![third; 5]), 3, &ClusterStageConfig::default()).unwrap();
        assert!(validate_cfds(&g, &out.cfds).unwrap().is_empty());
        assert!(out.cfds.is_integral());
        assert!(out.cfds.members().len() <= 3);
    }

    #[test]
    fn single_node_and_star() {
        let g = Graph::empty(1);
        let out = n_one_shot(&g, &Cfds::fds(vec![FixedPoint::one(0)]), 1, &ClusterStageConfig::default()).unwrap();
        assert_eq!(out.cfds.members(), vec![0]);
        let star = Graph::from_edges(5, (1..5).map(|l| (0, l))).unwrap();
        let s = crate::fixed::iota(5).unwrap();
        let mut x = vec![FixedPoint::zero(s); 5];
        x[0] = FixedPoint::one(s);
        let out = n_one_shot(&star, &Cfds::fds(x), 1, &ClusterStageConfig::default()).unwrap();
        assert_eq!(out.cfds.members(), vec![0]);
    }

    #[test]
    fn orders_agree_and_rounds_are_bounded() {
        let g = Graph::from_edges(8, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (1, 5)]).unwrap();
        let s = crate::fixed::iota(8).unwrap();
        let q = FixedPoint::quantize_up_at(0.4, s).unwrap();
        let inst = one_shot_instance(&g, &Cfds::fds(vec![q; 8]), g.delta_tilde()).unwrap();
        let d = compute_decomposition(&g, 2).unwrap();
        let run = |o| derandomize_clusterwise(&inst, &d, 2, SeedParams::default(), o, 24, &SimConfig::default()).unwrap();
        let a = run(FixOrder::Interleaved);
        let b = run(FixOrder::Sequential);
        assert_eq!(a.cfds.x, b.cfds.x);
        assert_eq!(a.decisions, b.decisions);
        let k_bits = (a.k * a.field_bits as usize) as u64;
        let depth = d.clusters.depth() as u64;
        assert!(a.stats.simulated_rounds <= d.num_colors as u64 * k_bits * (2 * depth + 2));
        assert!(validate_cfds(&g, &a.cfds).unwrap().is_empty());
    }

    #[test]
    fn single_cluster_decomposition() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let d = ComponentClusters.decompose(&g, 2).unwrap();
        let s = crate::fixed::iota(3).unwrap();
        let h = FixedPoint::quantize_up_at(0.4, s).unwrap();
        let inst = one_shot_instance(&g, &Cfds::fds(vec![h; 3]), 3).unwrap();
        let out = derandomize_clusterwise(&inst, &d, 2, SeedParams::default(), FixOrder::Interleaved, 24, &SimConfig::default()).unwrap();
        assert!(validate_cfds(&g, &out.cfds).unwrap().is_empty());
    }

    #[test]
    fn factor_two_nobody_participates() {
        let g = cycle(4);
        let s = 12;
        let h = FixedPoint::pow2_inv(1, s);
        let r = eps_log_bound(256.0, 1.0, 3, 3);
        let out = n_factor_two(&g, &Cfds::fds(vec![h; 4]), 1.0, r, &ClusterStageConfig::default()).unwrap();
        assert!(out.cfds.x.iter().all(|v| v.is_one()));
    }
}
