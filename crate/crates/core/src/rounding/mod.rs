//! The two-phase randomized rounding process, its one-shot and factor-two
//! instantiations, and the coin machinery both derandomizers rely on.
//!
//! Phase 1: a participating node (`0 < p(v) < 1`) keeps `x(v)/p(v)` with
//! probability `p(v)` and drops to 0 otherwise; nodes with `p(v) = 1` keep
//! `x(v)`. Phase 2: every node whose constraint is still unmet sets its
//! value to 1.

pub mod coins;
pub mod expectation;

use num_bigint::BigUint;
use num_rational::BigRational;

use crate::cfds::Cfds;
use crate::error::{Error, Result};
use crate::fixed::FixedPoint;
use crate::graph::{Graph, NodeId};
use crate::scalar::Scalar;

pub use coins::{CoinSource, Gf2Field};
pub use expectation::{
    conditional_expected_value, exact_uncover_prob, independent_laws, node_outlook, LawView, Outlook,
    PatternLaw,
};

/// Default cap on free bits enumerated jointly by the expectation oracle.
pub const DEFAULT_ENUM_BUDGET: usize = 24;

#[derive(Clone, Debug)]
pub struct RoundingInstance {
    pub graph: Graph,
    pub x: Vec<FixedPoint>,
    pub p: Vec<FixedPoint>,
    pub c: Vec<FixedPoint>,
    /// Node count that fixes the transmittable scale and the slack terms.
    pub reference_n: usize,
}

impl RoundingInstance {
    pub fn new(
        graph: Graph,
        x: Vec<FixedPoint>,
        p: Vec<FixedPoint>,
        c: Vec<FixedPoint>,
        reference_n: usize,
    ) -> Result<Self> {
        let n = graph.n();
        if x.len() != n || p.len() != n || c.len() != n {
            return Err(Error::Domain("instance vectors must cover every node".into()));
        }
        if let Some(v) = (0..n).find(|&v| p[v] < x[v]) {
            return Err(Error::Domain(format!("p({v}) = {} < x({v}) = {}", p[v], x[v])));
        }
        let scale = x.first().map_or(0, |f| f.scale());
        if x.iter().chain(&p).chain(&c).any(|f| f.scale() != scale) {
            return Err(Error::Domain("instance values do not share one scale".into()));
        }
        Ok(RoundingInstance {
            graph,
            x,
            p,
            c,
            reference_n,
        })
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn scale(&self) -> u32 {
        self.x.first().map_or(0, |f| f.scale())
    }

    /// `A = Σ x(v)`.
    pub fn size(&self) -> BigRational {
        BigRational::from_dyadic(self.x.iter().map(|f| f.numerator()).sum(), self.scale())
    }

    /// Whether `v` flips a coin (`0 < p(v) < 1`). A coin of a node with
    /// `x(v) = 0` has no effect, so such nodes do not take part.
    pub fn participates(&self, v: NodeId) -> bool {
        !self.p[v].is_zero() && !self.p[v].is_one() && !self.x[v].is_zero()
    }

    pub fn participants(&self) -> Vec<NodeId> {
        self.graph.nodes().filter(|&v| self.participates(v)).collect()
    }

    /// Phase-1 value of `v` when its coin shows heads: `x/p`, capped at 1.
    pub fn success_value(&self, v: NodeId) -> FixedPoint {
        if self.x[v].is_zero() {
            FixedPoint::zero(self.scale())
        } else {
            self.x[v].div_up_capped(self.p[v])
        }
    }

    /// Phase-1 value of a node that does not flip a coin.
    pub fn settled_value(&self, v: NodeId) -> FixedPoint {
        if self.p[v].is_one() {
            self.x[v]
        } else {
            FixedPoint::zero(self.scale())
        }
    }

    /// Minimum of `x(v)/p(v)` over nodes with nonzero value.
    pub fn min_ratio(&self) -> FixedPoint {
        self.graph
            .nodes()
            .filter(|&v| !self.x[v].is_zero())
            .map(|v| self.success_value(v))
            .min()
            .unwrap_or_else(|| FixedPoint::one(self.scale()))
    }
}

/// Phase 1 with the given coin outcomes. `coins[v]` is consulted only for
/// participating nodes with nonzero value.
pub fn phase1(inst: &RoundingInstance, coins: &[Option<bool>]) -> Result<Vec<FixedPoint>> {
    inst.graph
        .nodes()
        .map(|v| {
            if !inst.participates(v) {
                return Ok(inst.settled_value(v));
            }
            match coins.get(v).copied().flatten() {
                Some(true) => Ok(inst.success_value(v)),
                Some(false) => Ok(FixedPoint::zero(inst.scale())),
                None => Err(Error::Domain(format!("no coin for participating node {v}"))),
            }
        })
        .collect()
}

/// Phase 2: nodes whose inclusive cover is below their constraint join with 1.
pub fn phase2(inst: &RoundingInstance, values: &[FixedPoint]) -> Cfds {
    let scale = inst.scale();
    let x = inst
        .graph
        .nodes()
        .map(|v| {
            let cover: u128 = values[v].numerator()
                + inst.graph.neighbors(v).iter().map(|&u| values[u].numerator()).sum::<u128>();
            if cover < inst.c[v].numerator() {
                FixedPoint::one(scale)
            } else {
                values[v]
            }
        })
        .collect();
    Cfds {
        x,
        c: inst.c.clone(),
    }
}

/// One-shot rounding: `x = ⌈min(1, x'·ln Δ̃)⌉`, `p = x`.
pub fn one_shot_instance(g: &Graph, fds: &Cfds, delta_tilde: usize) -> Result<RoundingInstance> {
    if delta_tilde < 2 {
        return Err(Error::Domain(format!(
            "one-shot rounding needs Δ̃ >= 2, got {delta_tilde}"
        )));
    }
    let factor = (delta_tilde as f64).ln();
    let x = fds
        .x
        .iter()
        .map(|v| v.scale_up_capped(factor))
        .collect::<Result<Vec<_>>>()?;
    RoundingInstance::new(g.clone(), x.clone(), x, fds.c.clone(), g.n())
}

/// Whether `value < 2/r`, decided exactly.
pub fn below_double_threshold(value: FixedPoint, r: u64) -> bool {
    let lhs = BigUint::from(value.numerator()) * r;
    let rhs = BigUint::from(2u32) << value.scale();
    lhs < rhs
}

/// Factor-two rounding: `x = ⌈min(1, (1+ε)x')⌉`, `p = 1/2` if `x < 2/r`
/// else 1.
pub fn factor_two_instance(g: &Graph, fds: &Cfds, epsilon: f64, r: u64) -> Result<RoundingInstance> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::Domain(format!("ε must be positive, got {epsilon}")));
    }
    let scale = fds.scale();
    let x = fds
        .x
        .iter()
        .map(|v| v.scale_up_capped(1.0 + epsilon))
        .collect::<Result<Vec<_>>>()?;
    let p = x
        .iter()
        .map(|&v| {
            if below_double_threshold(v, r) && scale >= 1 {
                FixedPoint::pow2_inv(1, scale)
            } else {
                FixedPoint::one(scale)
            }
        })
        .collect();
    RoundingInstance::new(g.clone(), x, p, fds.c.clone(), g.n())
}

/// Per-position fixings of coins or seed bits; fixed entries never change.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PartialAssignment {
    bits: Vec<Option<bool>>,
}

impl PartialAssignment {
    pub fn free(len: usize) -> Self {
        PartialAssignment {
            bits: vec![None; len],
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.bits[i]
    }

    pub fn fix(&mut self, i: usize, value: bool) -> Result<()> {
        match self.bits[i] {
            Some(old) if old != value => Err(Error::Invariant(format!(
                "position {i} already fixed to {old}"
            ))),
            _ => {
                self.bits[i] = Some(value);
                Ok(())
            }
        }
    }

    /// A copy with position `i` fixed.
    pub fn with(&self, i: usize, value: bool) -> Self {
        let mut out = self.clone();
        out.bits[i] = Some(value);
        out
    }

    pub fn free_positions(&self) -> Vec<usize> {
        (0..self.bits.len()).filter(|&i| self.bits[i].is_none()).collect()
    }

    pub fn as_slice(&self) -> &[Option<bool>] {
        &self.bits
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfds::validate_cfds;

    const S: u32 = 10;

    fn fp(v: f64) -> FixedPoint {
        FixedPoint::quantize_up_at(v, S).unwrap()
    }

    fn inst(g: Graph, x: &[f64], p: &[f64], c: &[f64]) -> RoundingInstance {
        let conv = |vs: &[f64]| vs.iter().map(|&v| fp(v)).collect::<Vec<_>>();
        let n = g.n();
        RoundingInstance::new(g, conv(x), conv(p), conv(c), n).unwrap()
    }

    #[test]
    fn degenerate_rounding_keeps_values() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let i = inst(g, &[0.25, 0.75], &[1.0, 1.0], &[1.0, 1.0]);
        assert_eq!(phase1(&i, &[None, None]).unwrap(), i.x);
    }

    #[test]
    fn phase1_formula() {
        let g = Graph::empty(1);
        let i = inst(g, &[0.25], &[0.5], &[0.0]);
        assert_eq!(phase1(&i, &[Some(true)]).unwrap(), vec![fp(0.5)]);
        assert_eq!(phase1(&i, &[Some(false)]).unwrap(), vec![fp(0.0)]);
        assert!(matches!(phase1(&i, &[None]), Err(Error::Domain(_))));
    }

    #[test]
    fn phase2_examples() {
        let k2 = Graph::from_edges(2, [(0, 1)]).unwrap();
        let i = inst(k2, &[1.0, 0.0], &[1.0, 1.0], &[1.0, 1.0]);
        let out = phase2(&i, &i.x);
        assert_eq!(out.x, vec![fp(1.0), fp(0.0)]);

        let single = inst(Graph::empty(1), &[0.0], &[1.0], &[1.0]);
        let out = phase2(&single, &[fp(0.0)]);
        assert!(out.x[0].is_one());
        assert!(validate_cfds(&single.graph, &out).unwrap().is_empty());
    }

    #[test]
    fn p_below_x_is_rejected() {
        let g = Graph::empty(1);
        let r = RoundingInstance::new(g, vec![fp(0.5)], vec![fp(0.25)], vec![fp(1.0)], 1);
        assert!(r.is_err());
    }

    #[test]
    fn one_shot_scaling() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let d = Cfds::fds(vec![fp(1.0), fp(0.0), fp(0.2)]);
        let i = one_shot_instance(&g, &d, 8).unwrap();
        assert!(i.x[0].is_one() && i.p[0].is_one());
        assert!(i.x[1].is_zero() && i.p[1].is_zero());
        assert_eq!(i.x[2], fp(0.2f64.max(fp(0.2).to_f64()) * 8f64.ln()));
        assert!((i.x[2].to_f64() - 0.4159).abs() < 2e-3);
        assert_eq!(i.p[2], i.x[2]);
        assert!(one_shot_instance(&Graph::empty(1), &Cfds::fds(vec![fp(1.0)]), 1).is_err());
    }

    #[test]
    fn factor_two_probabilities() {
        let g = Graph::empty(3);
        let scale = 16;
        let d = Cfds::fds(vec![
            FixedPoint::quantize_up_at(0.01, scale).unwrap(),
            FixedPoint::quantize_up_at(0.5, scale).unwrap(),
            FixedPoint::pow2_inv(5, scale), // 1/32 = 2/64
        ]);
        let i = factor_two_instance(&g, &d, 1e-9, 100).unwrap();
        assert_eq!(i.p[0], FixedPoint::pow2_inv(1, scale));
        assert!(i.p[1].is_one());
        // 1/32 scaled by 1+ε rounds up to just above 2/64.
        let b = factor_two_instance(&g, &d, 1e-9, 64).unwrap();
        assert_eq!(b.x[2].numerator(), 2049);
        assert!(b.p[2].is_one());
        let c = factor_two_instance(&g, &d, 1e-9, 63).unwrap();
        assert_eq!(c.p[2], FixedPoint::pow2_inv(1, scale));
        assert!(below_double_threshold(FixedPoint::pow2_inv(6, scale), 63));
        assert!(!below_double_threshold(FixedPoint::pow2_inv(5, scale), 64));
    }

    #[test]
    fn assignments_never_change() {
        let mut a = PartialAssignment::free(3);
        a.fix(1, true).unwrap();
        a.fix(1, true).unwrap();
        assert!(a.fix(1, false).is_err());
        assert_eq!(a.free_positions(), vec![0, 2]);
    }
}
