//! Exact conditional probabilities and expectations of the rounding process.
//!
//! Coins are partitioned into independent groups, each described by the law
//! of its members' outcomes. The outlook of a node `v` convolves the groups
//! that touch `N⁺(v)`, keyed by the partial cover of `v` (clamped at `c(v)`)
//! and the phase-1 value of `v` itself.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::Zero;

use super::{PartialAssignment, RoundingInstance};
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::scalar::Scalar;

/// Joint law of one independent group of coins. Outcome masks index into
/// `members`; counts add up to `2^log2_total`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternLaw {
    pub members: Vec<NodeId>,
    pub outcomes: Vec<(u64, u128)>,
    pub log2_total: u32,
    /// Free bits the law was enumerated over.
    pub free_bits: usize,
    /// A single fully independent coin; these count against the budget
    /// jointly per neighborhood.
    pub independent: bool,
}

impl PatternLaw {
    /// A coin fixed to `heads`.
    pub fn fixed_coin(v: NodeId, heads: bool) -> Self {
        PatternLaw {
            members: vec![v],
            outcomes: vec![(heads as u64, 1)],
            log2_total: 0,
            free_bits: 0,
            independent: true,
        }
    }

    /// A free coin showing heads with probability `p_num / 2^scale`.
    pub fn free_coin(v: NodeId, p_num: u128, scale: u32) -> Self {
        let tz = p_num.trailing_zeros().min(scale);
        let (num, scale) = (p_num >> tz, scale - tz);
        PatternLaw {
            members: vec![v],
            outcomes: vec![(0, (1u128 << scale) - num), (1, num)],
            log2_total: scale,
            free_bits: 1,
            independent: true,
        }
    }
}

/// A set of group laws plus, for every participating node, the group and
/// bit position holding its coin.
#[derive(Clone, Copy, Debug)]
pub struct LawView<'a> {
    pub laws: &'a [PatternLaw],
    pub slot: &'a [Option<(usize, usize)>],
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outlook<S> {
    /// `Pr(Σ_{u∈N⁺(v)} X_u < c(v))`.
    pub uncover: S,
    /// `E[Z_v]`.
    pub expected: S,
}

/// One law per participating node: fixed coins from `fixed`, free ones
/// Bernoulli(`p`).
pub fn independent_laws(
    inst: &RoundingInstance,
    fixed: &PartialAssignment,
) -> (Vec<PatternLaw>, Vec<Option<(usize, usize)>>) {
    let mut laws = Vec::new();
    let mut slot = vec![None; inst.n()];
    for v in inst.participants() {
        slot[v] = Some((laws.len(), 0));
        laws.push(match fixed.get(v) {
            Some(b) => PatternLaw::fixed_coin(v, b),
            None => PatternLaw::free_coin(v, inst.p[v].numerator(), inst.scale()),
        });
    }
    (laws, slot)
}

type Touch = (usize, u128, bool);

/// Exact outlook of `v` under the given laws.
pub fn node_outlook<S: Scalar>(
    inst: &RoundingInstance,
    view: LawView<'_>,
    v: NodeId,
    budget: usize,
) -> Result<Outlook<S>> {
    let c = inst.c[v].numerator();
    let scale = inst.scale();
    let mut base = 0u128;
    let mut v_base = 0u128;
    // Group index -> (bit, heads value, is v).
    let mut touched: Vec<(usize, Vec<Touch>)> = Vec::new();
    for u in std::iter::once(v).chain(inst.graph.neighbors(v).iter().copied()) {
        match view.slot[u] {
            None => {
                let s = inst.settled_value(u).numerator();
                base += s;
                if u == v {
                    v_base = s;
                }
            }
            Some((l, bit)) => {
                let entry = (bit, inst.success_value(u).numerator(), u == v);
                match touched.iter_mut().find(|(g, _)| *g == l) {
                    Some((_, list)) => list.push(entry),
                    None => touched.push((l, vec![entry])),
                }
            }
        }
    }
    let free: usize = touched
        .iter()
        .map(|(l, _)| &view.laws[*l])
        .filter(|law| law.independent)
        .map(|law| law.free_bits)
        .sum();
    if free > budget {
        return Err(Error::EnumerationBudget { needed: free, budget });
    }

    let mut dist: HashMap<(u128, u128), BigUint> = HashMap::new();
    dist.insert((base.min(c), v_base), BigUint::from(1u32));
    let mut log2_total = 0u32;
    for (l, entries) in &touched {
        let law = &view.laws[*l];
        let mut local: HashMap<(u128, u128), u128> = HashMap::new();
        for &(mask, count) in &law.outcomes {
            let mut s = 0u128;
            let mut xv = 0u128;
            for &(bit, val, is_v) in entries {
                if mask >> bit & 1 == 1 {
                    s += val;
                    if is_v {
                        xv = val;
                    }
                }
            }
            *local.entry((s, xv)).or_default() += count;
        }
        // Clamping at c(v) can merge keys, so weights are always accumulated.
        let mut next: HashMap<(u128, u128), BigUint> = HashMap::with_capacity(dist.len());
        for ((s1, x1), w) in dist {
            for (&(s2, x2), &cnt) in &local {
                *next.entry(((s1 + s2).min(c), x1 + x2)).or_default() += &w * cnt;
            }
        }
        dist = next;
        log2_total += law.log2_total;
    }

    let mut uncover = BigUint::zero();
    let mut expected = BigUint::zero();
    let one = 1u128 << scale;
    for ((s, xv), w) in &dist {
        if *s < c {
            uncover += w;
            expected += w * one;
        } else {
            expected += w * *xv;
        }
    }
    Ok(Outlook {
        uncover: S::from_big_dyadic(&uncover, log2_total),
        expected: S::from_big_dyadic(&expected, log2_total + scale),
    })
}

/// `Pr(E_v | fixed coins)` with independent coins.
pub fn exact_uncover_prob<S: Scalar>(
    inst: &RoundingInstance,
    v: NodeId,
    fixed: &PartialAssignment,
    budget: usize,
) -> Result<S> {
    let (laws, slot) = independent_laws(inst, fixed);
    Ok(node_outlook::<S>(inst, LawView { laws: &laws, slot: &slot }, v, budget)?.uncover)
}

/// `E[Z_v | fixed coins]` with independent coins.
pub fn conditional_expected_value<S: Scalar>(
    inst: &RoundingInstance,
    v: NodeId,
    fixed: &PartialAssignment,
    budget: usize,
) -> Result<S> {
    let (laws, slot) = independent_laws(inst, fixed);
    Ok(node_outlook::<S>(inst, LawView { laws: &laws, slot: &slot }, v, budget)?.expected)
}
