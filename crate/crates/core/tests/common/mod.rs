#![allow(dead_code)]

use congest_domset::cfds::Cfds;
use congest_domset::decomposition::NetworkDecomposition;
use congest_domset::derand_decomp::SeededCoins;
use congest_domset::generate::{connected_graphs, random_connected_corpus};
use congest_domset::rounding::{exact_uncover_prob, node_outlook, LawView, PartialAssignment, RoundingInstance};
use congest_domset::{Exact, FixedPoint, Graph};
use num_rational::BigRational;
use num_traits::{One, Zero};

/// All connected graphs on `1..=max_n` nodes, one per isomorphism class.
pub fn exhaustive(max_n: usize) -> Vec<Graph> {
    (1..=max_n).flat_map(|n| connected_graphs(n).unwrap()).collect()
}

pub fn random(count: usize, lo: usize, hi: usize, seed: u64) -> Vec<Graph> {
    random_connected_corpus(count, lo, hi, 0.15, 0.6, seed).unwrap()
}

/// `1/n^e` as an exact rational.
pub fn inv_pow(n: usize, e: u32) -> Exact {
    BigRational::one() / BigRational::from_integer(num_bigint::BigInt::from(n).pow(e))
}

pub fn size(c: &Cfds) -> Exact {
    c.x.iter().fold(BigRational::zero(), |acc, v| acc + v.to_exact())
}

pub fn sum_x(inst: &RoundingInstance) -> Exact {
    inst.x.iter().fold(BigRational::zero(), |acc, v: &FixedPoint| acc + v.to_exact())
}

/// `Σ_v Pr(E_v)` with independent coins.
pub fn uncover_sum_independent(inst: &RoundingInstance, budget: usize) -> Exact {
    let free = PartialAssignment::free(inst.n());
    inst.graph
        .nodes()
        .map(|v| exact_uncover_prob::<Exact>(inst, v, &free, budget).unwrap())
        .fold(BigRational::zero(), |a, b| a + b)
}

/// `Σ_v Pr(E_v)` under the seeded coins of a clusterwise run, before any
/// seed bit is fixed.
pub fn uncover_sum_seeded(inst: &RoundingInstance, decomp: &NetworkDecomposition, bits: u32, k: usize, budget: usize) -> Exact {
    let coins = SeededCoins::new(inst, decomp, bits, k).unwrap();
    let laws: Vec<_> = (0..decomp.clusters.clusters.len())
        .map(|c| {
            let len = coins.sources[c].as_ref().map_or(0, |s| s.seed_bits());
            coins.law(c, &PartialAssignment::free(len), budget).unwrap()
        })
        .collect();
    let view = LawView {
        laws: &laws,
        slot: &coins.slot,
    };
    inst.graph
        .nodes()
        .map(|v| node_outlook::<Exact>(inst, view, v, budget).unwrap().uncover)
        .fold(BigRational::zero(), |a, b| a + b)
}
