//! Derandomization by conditional expectations along a distance-2 coloring
//! of the participating nodes, and the deterministic one-shot and
//! factor-two roundings on the bipartite representation.

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::bipartite::{bipartite_representation, Bipartite, Side};
use crate::cfds::{validate_cfds, Cfds};
use crate::coloring::{color_bipartite_subset, Coloring};
use crate::error::{Error, Result};
use crate::fixed::{ceil_to_grid, FixedPoint};
use crate::graph::{Graph, NodeId};
use crate::rounding::{
    independent_laws, node_outlook, one_shot_instance, phase1, phase2, LawView, PartialAssignment,
    PatternLaw, RoundingInstance,
};
use crate::sim::{self, Context, Message, NodeProgram, Outbox, RoundStats, SimConfig};
use crate::Exact;

/// Simulated rounds spent per color class: request, α̃ replies, decision.
pub const ROUNDS_PER_COLOR: u64 = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct Decision {
    pub node: NodeId,
    pub color: usize,
    /// `Ã_{v,1}` and `Ã_{v,0}` as numerators over `2^scale`.
    pub tilde_heads: u128,
    pub tilde_tails: u128,
    pub heads: bool,
    /// Exact change of the conditional expectation of the total size.
    pub delta: Exact,
}

#[derive(Clone, Debug)]
pub struct DerandOutcome {
    pub cfds: Cfds,
    pub coins: Vec<Option<bool>>,
    pub decisions: Vec<Decision>,
    pub stats: RoundStats,
}

impl DerandOutcome {
    /// Re-runs both phases with the recorded coins.
    pub fn replay(&self, inst: &RoundingInstance) -> Result<Cfds> {
        Ok(phase2(inst, &phase1(inst, &self.coins)?))
    }
}

#[derive(Clone, Debug)]
enum Wire {
    Request,
    Alphas(u128, u128),
    Decision(bool),
}

impl Message for Wire {
    fn bits(&self) -> usize {
        2 + match self {
            Wire::Request | Wire::Decision(_) => 0,
            Wire::Alphas(a, b) => a.bits() + b.bits(),
        }
    }
}

/// One color class: deciders ask their neighbors for quantized α pairs,
/// sum them with their own, and announce the coin.
struct ClassStep {
    own: Option<(u128, u128)>,
    decider: bool,
    reply: (u128, u128),
    heads: Option<bool>,
    sums: (u128, u128),
    /// Decision announced by a neighboring decider.
    heard: Option<bool>,
}

impl NodeProgram for ClassStep {
    type Msg = Wire;

    fn step(&mut self, ctx: &Context<'_>, inbox: &[(NodeId, Wire)]) -> Outbox<Wire> {
        if ctx.round == 0 {
            if self.decider {
                return Outbox {
                    sends: ctx.neighbors.iter().map(|&u| (u, Wire::Request)).collect(),
                    halt: false,
                };
            }
            return Outbox::halt();
        }
        let mut out = Outbox::halt();
        for (from, msg) in inbox {
            match *msg {
                Wire::Request => out.sends.push((*from, Wire::Alphas(self.reply.0, self.reply.1))),
                Wire::Alphas(a1, a0) => {
                    self.sums.0 += a1;
                    self.sums.1 += a0;
                }
                Wire::Decision(b) => self.heard = Some(b),
            }
        }
        if self.decider && self.heads.is_none() && ctx.round == 2 {
            let (a1, a0) = self.own.expect("deciders know their own α");
            self.sums.0 += a1;
            self.sums.1 += a0;
            let heads = self.sums.0 < self.sums.1;
            self.heads = Some(heads);
            out.sends.extend(ctx.neighbors.iter().map(|&u| (u, Wire::Decision(heads))));
        } else if self.decider && self.heads.is_none() {
            out.halt = false;
        }
        out
    }
}

fn alpha_pair(
    inst: &RoundingInstance,
    laws: &mut [PatternLaw],
    slot: &[Option<(usize, usize)>],
    v: NodeId,
    u: NodeId,
    budget: usize,
) -> Result<(Exact, Exact)> {
    let (l, _) = slot[v].expect("decider participates");
    let saved = laws[l].clone();
    laws[l] = PatternLaw::fixed_coin(v, true);
    let heads = node_outlook::<Exact>(inst, LawView { laws, slot }, u, budget)?.expected;
    laws[l] = PatternLaw::fixed_coin(v, false);
    let tails = node_outlook::<Exact>(inst, LawView { laws, slot }, u, budget)?.expected;
    laws[l] = saved;
    Ok((heads, tails))
}

/// Fixes the coins of the participating nodes color class by color class.
/// Every node of a class takes heads iff `Ã_{v,1} < Ã_{v,0}`, where `Ã` sums
/// the conditional expectations over `N⁺(v)`, each rounded up to `2^-scale`.
pub fn derandomize_colorwise(
    inst: &RoundingInstance,
    coloring: &Coloring,
    budget: usize,
    config: &SimConfig,
) -> Result<DerandOutcome> {
    let g = &inst.graph;
    let n = g.n();
    let scale = inst.scale();
    let participants = inst.participants();
    if coloring.color.len() != n {
        return Err(Error::precondition("colorwise", "coloring does not cover the host graph"));
    }
    if let Some(v) = participants.iter().find(|&&v| coloring.color[v].is_none()) {
        return Err(Error::precondition("colorwise", format!("participating node {v} is uncolored")));
    }
    let mut restricted = Coloring {
        color: vec![None; n],
        num_colors: coloring.num_colors,
        charged_rounds: 0,
    };
    for &v in &participants {
        restricted.color[v] = coloring.color[v];
    }
    if !restricted.is_valid_distance2(g) {
        return Err(Error::precondition("colorwise", "coloring is not distance-2 on the participants"));
    }

    let mut coins: Vec<Option<bool>> = vec![None; n];
    let (mut laws, slot) = independent_laws(inst, &PartialAssignment::free(n));
    let mut decisions = Vec::new();
    let mut stats = RoundStats::new(config.cost_model);
    for color in 1..=coloring.num_colors {
        let class = restricted.class(color);
        if class.is_empty() {
            continue;
        }
        let mut programs: Vec<ClassStep> = (0..n)
            .map(|_| ClassStep {
                own: None,
                decider: false,
                reply: (0, 0),
                heads: None,
                sums: (0, 0),
                heard: None,
            })
            .collect();
        let mut exact_alphas = Vec::with_capacity(class.len());
        for &v in &class {
            let mut pairs = Vec::new();
            for u in g.closed_neighborhood(v) {
                let (a1, a0) = alpha_pair(inst, &mut laws, &slot, v, u, budget)?;
                let q = (ceil_to_grid(&a1, scale), ceil_to_grid(&a0, scale));
                if u == v {
                    programs[v].own = Some(q);
                } else {
                    programs[u].reply = q;
                }
                pairs.push((a1, a0));
            }
            programs[v].decider = true;
            exact_alphas.push(pairs);
        }
        let (round_stats, programs) = sim::run(g, programs, 8, config)?;
        stats.max_message_bits = stats.max_message_bits.max(round_stats.max_message_bits);
        // The schedule reserves a fixed number of slots per class, even when
        // every decider finishes early (isolated deciders).
        stats.add_simulated(ROUNDS_PER_COLOR.max(round_stats.simulated_rounds));

        let p_exact = |v: NodeId| inst.p[v].to_exact();
        for (&v, pairs) in class.iter().zip(exact_alphas) {
            let heads = programs[v].heads.expect("every decider decides");
            debug_assert!(g.neighbors(v).iter().all(|&u| programs[u].heard == Some(heads)));
            let p = p_exact(v);
            let q = BigRational::one() - p.clone();
            let delta = pairs.iter().fold(BigRational::zero(), |acc, (a1, a0)| {
                let chosen = if heads { a1 } else { a0 };
                acc + chosen - (p.clone() * a1 + q.clone() * a0)
            });
            coins[v] = Some(heads);
            let (l, _) = slot[v].expect("decider participates");
            laws[l] = PatternLaw::fixed_coin(v, heads);
            decisions.push(Decision {
                node: v,
                color,
                tilde_heads: programs[v].sums.0,
                tilde_tails: programs[v].sums.1,
                heads,
                delta,
            });
        }
    }
    let cfds = phase2(inst, &phase1(inst, &coins)?);
    Ok(DerandOutcome {
        cfds,
        coins,
        decisions,
        stats,
    })
}

/// Result of a deterministic rounding stage on `G`.
#[derive(Clone, Debug)]
pub struct StageOutcome {
    pub cfds: Cfds,
    pub stats: RoundStats,
    pub instance: Option<RoundingInstance>,
    pub derand: Option<DerandOutcome>,
}

impl StageOutcome {
    fn all_ones(g: &Graph, scale: u32, config: &SimConfig) -> Self {
        StageOutcome {
            cfds: Cfds::from_set(&vec![true; g.n()], scale),
            stats: RoundStats::new(config.cost_model),
            instance: None,
            derand: None,
        }
    }
}

pub(crate) fn check_fds(g: &Graph, x: &Cfds, stage: &'static str) -> Result<()> {
    if x.c.iter().any(|c| !c.is_one()) {
        return Err(Error::precondition(stage, "input is not an FDS (c ≢ 1)"));
    }
    let violated = validate_cfds(g, x)?;
    if !violated.is_empty() {
        return Err(Error::precondition(stage, format!("input violates nodes {violated:?}")));
    }
    Ok(())
}

/// Whether every nonzero value is at least `1/r`.
pub fn is_fractional_at_least(x: &Cfds, r: u64) -> bool {
    x.x.iter().all(|v| {
        v.is_zero() || num_bigint::BigUint::from(v.numerator()) * r >= num_bigint::BigUint::from(1u32) << v.scale()
    })
}

/// Degree cap on the left side: each left node keeps right neighbors in
/// descending value (ties ascending id) until their values reach 1.
fn cap_left_degrees(b: &Bipartite, x: &[FixedPoint]) -> Result<Graph> {
    let one = 1u128 << x.first().map_or(0, |f| f.scale());
    let mut edges = Vec::new();
    for v in b.nodes_on(Side::Left) {
        let mut nb = b.graph.neighbors(v).to_vec();
        nb.sort_by(|&a, &c| x[c].cmp(&x[a]).then(a.cmp(&c)));
        let mut acc = 0u128;
        for u in nb {
            if acc >= one {
                break;
            }
            acc += x[u].numerator();
            edges.push((v, u));
        }
    }
    Graph::from_edges(b.graph.n(), edges)
}

/// Deterministic one-shot rounding of a `1/F`-fractional FDS via the
/// bipartite representation with left degrees capped at `F`.
pub fn delta_one_shot(
    g: &Graph,
    x: &Cfds,
    f: u64,
    budget: usize,
    config: &SimConfig,
) -> Result<StageOutcome> {
    check_fds(g, x, "delta one-shot")?;
    if !is_fractional_at_least(x, f) {
        return Err(Error::precondition("delta one-shot", format!("input is not 1/{f}-fractional")));
    }
    let delta_tilde = g.delta_tilde();
    if delta_tilde < 2 {
        return Ok(StageOutcome::all_ones(g, x.scale(), config));
    }
    let rep = bipartite_representation(g, x)?;
    let capped = cap_left_degrees(&rep.host, &rep.cfds.x)?;
    if let Some(v) = rep.host.nodes_on(Side::Left).into_iter().find(|&v| capped.degree(v) as u64 > f) {
        return Err(Error::Invariant(format!("left node {v} keeps more than {f} edges")));
    }
    let host = Bipartite {
        graph: capped,
        ..rep.host
    };
    let mut inst = one_shot_instance(&host.graph, &rep.cfds, delta_tilde)?;
    inst.reference_n = g.n();
    let coloring = color_bipartite_subset(&host, &inst.participants(), config.cost_model);
    let derand = derandomize_colorwise(&inst, &coloring, budget, config)?;
    let mut stats = derand.stats.clone();
    stats.charge_oracle(coloring.charged_rounds, "distance-2 coloring");
    let cfds = Cfds::fds(host.revert_max(&derand.cfds.x));
    Ok(StageOutcome {
        cfds,
        stats,
        instance: Some(inst),
        derand: Some(derand),
    })
}

/// Left side split so that participating edges are spread over copies of
/// moderate degree.
#[derive(Clone, Debug)]
pub struct SplitBipartite {
    pub host: Bipartite,
    /// Split copies of each original left node; the first is `v_1`.
    pub splits: Vec<Vec<NodeId>>,
    pub c: Vec<FixedPoint>,
    pub s: usize,
}

/// Splits one left node's edges. `v_1` takes the non-participating edges,
/// plus all participating ones if there are fewer than `s`; otherwise the
/// participating edges (in the given order) form `⌊m/s⌋` near-equal groups.
pub fn split_left_edges(
    non_participating: &[NodeId],
    participating: &[NodeId],
    s: usize,
) -> Vec<Vec<NodeId>> {
    let m = participating.len();
    let mut first = non_participating.to_vec();
    if m < s || s == 0 {
        first.extend_from_slice(participating);
        return vec![first];
    }
    let q = m / s;
    let mut out = vec![first];
    let mut start = 0;
    for j in 0..q {
        let size = m / q + usize::from(j < m % q);
        out.push(participating[start..start + size].to_vec());
        start += size;
    }
    out
}

impl SplitBipartite {
    /// Builds the split host from the bipartite representation of `g`.
    /// `participating[u]` marks original nodes whose right copy flips a
    /// coin; `x` holds the original values used for the constraints.
    pub fn build(g: &Graph, x: &Cfds, participating: &[bool], s: usize) -> Result<Self> {
        let n = g.n();
        let scale = x.scale();
        let mut groups: Vec<Vec<Vec<NodeId>>> = Vec::with_capacity(n);
        for v in g.nodes() {
            let nb = g.closed_neighborhood(v);
            let (part, non): (Vec<_>, Vec<_>) = nb.into_iter().partition(|&u| participating[u]);
            groups.push(split_left_edges(&non, &part, s));
        }
        let left_total: usize = groups.iter().map(|gr| gr.len()).sum();
        let mut edges = Vec::new();
        let mut splits = Vec::with_capacity(n);
        let mut side = Vec::new();
        let mut origin = Vec::new();
        let mut c = Vec::new();
        let one = 1u128 << scale;
        for (v, gr) in groups.into_iter().enumerate() {
            let mut ids = Vec::new();
            for part in gr {
                let id = side.len();
                ids.push(id);
                side.push(Side::Left);
                origin.push(v);
                let sum: u128 = part.iter().map(|&u| x.x[u].numerator()).sum();
                c.push(FixedPoint::new(sum.min(one), scale)?);
                edges.extend(part.into_iter().map(|u| (id, left_total + u)));
            }
            splits.push(ids);
        }
        for v in g.nodes() {
            side.push(Side::Right);
            origin.push(v);
            c.push(FixedPoint::zero(scale));
        }
        let graph = Graph::from_edges(left_total + n, edges)?;
        Ok(SplitBipartite {
            host: Bipartite {
                graph,
                side,
                origin,
                original_n: n,
            },
            splits,
            c,
            s,
        })
    }
}

/// `⌈constant·ε^-power·ln Δ̃⌉`.
pub fn eps_log_bound(constant: f64, epsilon: f64, power: i32, delta_tilde: usize) -> u64 {
    (constant * epsilon.powi(-power) * (delta_tilde as f64).ln()).ceil() as u64
}

/// Deterministic factor-two rounding of a `1/r`-fractional FDS.
pub fn delta_factor_two(
    g: &Graph,
    x: &Cfds,
    epsilon: f64,
    r: u64,
    budget: usize,
    config: &SimConfig,
) -> Result<StageOutcome> {
    let delta_tilde = g.delta_tilde();
    let s = eps_log_bound(64.0, epsilon, 2, delta_tilde.max(2)) as usize;
    delta_factor_two_with_split(g, x, epsilon, r, s, budget, config)
}

/// [`delta_factor_two`] with an explicit split parameter.
pub fn delta_factor_two_with_split(
    g: &Graph,
    x: &Cfds,
    epsilon: f64,
    r: u64,
    s: usize,
    budget: usize,
    config: &SimConfig,
) -> Result<StageOutcome> {
    const STAGE: &str = "delta factor-two";
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::precondition(STAGE, format!("ε = {epsilon} not in (0, 1]")));
    }
    check_fds(g, x, STAGE)?;
    if !is_fractional_at_least(x, r) {
        return Err(Error::precondition(STAGE, format!("input is not 1/{r}-fractional")));
    }
    let delta_tilde = g.delta_tilde();
    if delta_tilde < 2 {
        return Ok(StageOutcome::all_ones(g, x.scale(), config));
    }
    let needed = eps_log_bound(256.0, epsilon, 3, delta_tilde);
    if r < needed {
        return Err(Error::precondition(STAGE, format!("r = {r} below {needed}")));
    }
    let scaled = crate::rounding::factor_two_instance(g, x, epsilon, r)?;
    let participating: Vec<bool> = g.nodes().map(|v| scaled.participates(v)).collect();
    let split = SplitBipartite::build(g, x, &participating, s)?;
    let host = &split.host;
    let hn = host.graph.n();
    let scale = x.scale();
    let zero = FixedPoint::zero(scale);
    let mut hx = vec![zero; hn];
    let mut hp = vec![FixedPoint::one(scale); hn];
    for v in g.nodes() {
        let r_id = host.right_of(v);
        hx[r_id] = scaled.x[v];
        hp[r_id] = scaled.p[v];
    }
    for v in host.nodes_on(Side::Left) {
        hp[v] = FixedPoint::one(scale);
    }
    let inst = RoundingInstance::new(host.graph.clone(), hx, hp, split.c.clone(), g.n())?;
    let coloring = color_bipartite_subset(host, &inst.participants(), config.cost_model);
    let derand = derandomize_colorwise(&inst, &coloring, budget, config)?;
    let mut stats = derand.stats.clone();
    stats.charge_oracle(coloring.charged_rounds, "distance-2 coloring");
    let cfds = Cfds::fds(host.revert_max(&derand.cfds.x));
    Ok(StageOutcome {
        cfds,
        stats,
        instance: Some(inst),
        derand: Some(derand),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coloring::greedy_distance2_subset;
    use crate::rounding::exact_uncover_prob;

    fn cfg() -> SimConfig {
        SimConfig::default()
    }

    #[test]
    fn nothing_to_derandomize() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let one = FixedPoint::one(4);
        let zero = FixedPoint::zero(4);
        let inst = RoundingInstance::new(g, vec![one, zero], vec![one, one], vec![one, one], 2).unwrap();
        let col = greedy_distance2_subset(&inst.graph, &[]);
        let out = derandomize_colorwise(&inst, &col, 24, &cfg()).unwrap();
        assert_eq!(out.cfds.x, vec![one, zero]);
        assert!(out.decisions.is_empty());
        assert_eq!(out.stats.simulated_rounds, 0);
    }

    #[test]
    fn c5_one_shot_is_a_small_dominating_set() {
        let g = Graph::from_edges(5, (0..5).map(|v| (v, (v + 1) % 5))).unwrap();
        let scale = crate::fixed::iota(5).unwrap();
        let third = FixedPoint::quantize_up_at(1.0 / 3.0, scale).unwrap();
        let x = Cfds::fds(vec![third; 5]);
        let inst = one_shot_instance(&g, &x, 3).unwrap();
        let col = greedy_distance2_subset(&g, &inst.participants());
        let out = derandomize_colorwise(&inst, &col, 24, &cfg()).unwrap();
        assert!(validate_cfds(&g, &out.cfds).unwrap().is_empty());
        assert!(out.cfds.is_integral());
        assert!(out.cfds.members().len() <= 3);
        assert_eq!(out.stats.simulated_rounds, ROUNDS_PER_COLOR * col.num_colors as u64);
        let expected: Exact = inst.size()
            + (0..5)
                .map(|v| exact_uncover_prob::<Exact>(&inst, v, &PartialAssignment::free(5), 24).unwrap())
                .fold(BigRational::zero(), |a, b| a + b);
        assert!(out.cfds.size() <= expected + crate::scalar::inv_pow(5, 7));
        assert_eq!(out.replay(&inst).unwrap().x, out.cfds.x);
    }

    #[test]
    fn invalid_coloring_is_rejected() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let scale = 8;
        let h = FixedPoint::pow2_inv(1, scale);
        let inst = RoundingInstance::new(g, vec![h; 3], vec![h; 3], vec![FixedPoint::one(scale); 3], 3).unwrap();
        let col = Coloring::trivial(3, &[0, 1, 2]);
        let same = Coloring {
            color: vec![Some(1); 3],
            num_colors: 1,
            charged_rounds: 0,
        };
        assert!(derandomize_colorwise(&inst, &col, 24, &cfg()).is_ok());
        assert!(matches!(
            derandomize_colorwise(&inst, &same, 24, &cfg()),
            Err(Error::Precondition { .. })
        ));
    }

    #[test]
    fn one_shot_examples() {
        let scale = 12;
        let one = FixedPoint::one(scale);
        let zero = FixedPoint::zero(scale);
        let star = Graph::from_edges(5, (1..5).map(|l| (0, l))).unwrap();
        let mut x = vec![zero; 5];
        x[0] = one;
        let out = delta_one_shot(&star, &Cfds::fds(x), 4, 24, &cfg()).unwrap();
        assert_eq!(out.cfds.members(), vec![0]);

        let k2 = Graph::from_edges(2, [(0, 1)]).unwrap();
        let h = FixedPoint::pow2_inv(1, scale);
        let out = delta_one_shot(&k2, &Cfds::fds(vec![h, h]), 2, 24, &cfg()).unwrap();
        assert_eq!(out.cfds.members().len(), 1);

        let p3 = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let out = delta_one_shot(&p3, &Cfds::fds(vec![zero, one, zero]), 3, 24, &cfg()).unwrap();
        assert_eq!(out.cfds.members(), vec![1]);

        assert!(matches!(
            delta_one_shot(&k2, &Cfds::fds(vec![h, h]), 1, 24, &cfg()),
            Err(Error::Precondition { .. })
        ));
    }

    #[test]
    fn split_rule_examples() {
        let part: Vec<NodeId> = (0..12).collect();
        let parts = split_left_edges(&[], &part, 5);
        let sizes: Vec<usize> = parts.iter().map(|p| p.len()).collect();
        assert_eq!(sizes, vec![0, 6, 6]);
        let parts = split_left_edges(&[20], &part[..4], 5);
        assert_eq!(parts, vec![vec![20, 0, 1, 2, 3]]);
        for m in 5..40 {
            let parts = split_left_edges(&[], &part.iter().cycle().take(m).copied().collect::<Vec<_>>(), 5);
            assert!(parts[1..].iter().all(|p| (5..10).contains(&p.len())));
            assert_eq!(parts.iter().map(|p| p.len()).sum::<usize>(), m);
        }
    }

    #[test]
    fn factor_two_without_participants_scales_input() {
        let scale = 12;
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let h = FixedPoint::pow2_inv(1, scale);
        let x = Cfds::fds(vec![h; 3]);
        let eps = 1.0;
        let r = eps_log_bound(256.0, eps, 3, 3);
        let out = delta_factor_two(&g, &x, eps, r, 24, &cfg()).unwrap();
        assert!(out.cfds.x.iter().all(|v| v.is_one()));
        assert!(out.derand.unwrap().decisions.is_empty());
    }
}
