//! Initial fractional dominating sets from the covering LP
//! `min Σ x  s.t.  Σ_{u∈N⁺(v)} x_u ≥ 1,  0 ≤ x ≤ 1`.

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use num_traits::Float;

use crate::cfds::{validate_cfds, Cfds};
use crate::error::{Error, Result};
use crate::fixed::{iota, FixedPoint};
use crate::graph::Graph;

#[derive(Clone, Debug)]
pub struct LpOutcome {
    pub cfds: Cfds,
    /// Objective reported by the solver.
    pub objective: f64,
    pub charged_rounds: u64,
}

/// Rounds charged for the distributed LP approximation:
/// `⌈tol^-4 · log₂²(Δ+2)⌉`.
pub fn lp_charge(tol: f64, max_degree: usize) -> u64 {
    let log = ((max_degree + 2) as f64).log2();
    (tol.powi(-4) * log * log).ceil() as u64
}

/// Fractional optimum of the covering LP by simplex, rounded up onto the
/// transmittable grid of `g`.
pub fn lp_fractional_opt(g: &Graph, tol: f64) -> Result<LpOutcome> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let scale = iota(g.n())?;
    let charged_rounds = lp_charge(tol, g.max_degree());
    if g.n() == 0 {
        return Ok(LpOutcome {
            cfds: Cfds::fds(Vec::new()),
            objective: 0.0,
            charged_rounds,
        });
    }
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = g.nodes().map(|_| lp.add_var(1.0, (0.0, 1.0))).collect();
    for v in g.nodes() {
        let row: Vec<_> = g.closed_neighborhood(v).into_iter().map(|u| (vars[u], 1.0)).collect();
        lp.add_constraint(&row[..], ComparisonOp::Ge, 1.0);
    }
    let sol = lp.solve().map_err(|e| Error::Invariant(format!("covering LP failed: {e}")))?;
    // A tiny relative bump absorbs floating-point slack in the constraints.
    let bump = 1.0 + 1e-9;
    let x = vars
        .iter()
        .map(|&var| {
            let v = sol[var].clamp(0.0, 1.0);
            let v = if v < 1e-12 { 0.0 } else { (v * bump).min(1.0) };
            FixedPoint::quantize_up_at(v, scale)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut cfds = Cfds::fds(x);
    for v in validate_cfds(g, &cfds)? {
        cfds.x[v] = FixedPoint::one(scale);
    }
    Ok(LpOutcome {
        cfds,
        objective: sol.objective(),
        charged_rounds,
    })
}

/// Result of the multiplicative-weights covering solver: a feasible primal
/// solution and a packing-dual lower bound on the LP optimum.
#[derive(Clone, Debug)]
pub struct MwOutcome<T> {
    pub x: Vec<T>,
    pub primal: T,
    pub dual_bound: T,
    pub iterations: usize,
}

/// Multiplicative weights on the covering constraints. Each step raises the
/// variable covering the most constraint weight; `x / min(Ax)` stays
/// feasible and the normalized weights give a feasible packing dual. Stops
/// once primal ≤ (1+tol)·dual or after `max_iter` steps.
pub fn mw_fractional_opt<T: Float>(g: &Graph, tol: T, max_iter: usize) -> MwOutcome<T> {
    let n = g.n();
    let nb: Vec<Vec<usize>> = g.nodes().map(|v| g.closed_neighborhood(v)).collect();
    let zero = T::zero();
    let one = T::one();
    let eta = (tol / T::from(4.0).expect("small constant")).min(T::from(0.5).expect("small constant"));
    let mut x = vec![zero; n];
    let mut cover = vec![zero; n];
    let mut w = vec![one; n];
    let mut best_x = vec![one; n];
    let mut best_primal = T::from(n).expect("node count fits");
    let mut best_dual = zero;
    let mut iterations = 0;
    while iterations < max_iter && n > 0 {
        iterations += 1;
        // Column with the largest covered weight; closed neighborhoods are
        // symmetric, so column j covers the rows of N⁺(j).
        let (j, mass) = (0..n)
            .map(|j| (j, nb[j].iter().fold(zero, |s, &i| s + w[i])))
            .fold((0, zero), |best, cur| if cur.1 > best.1 { cur } else { best });
        let total = w.iter().fold(zero, |s, &wi| s + wi);
        best_dual = best_dual.max(total / mass);
        x[j] = x[j] + one;
        for &i in &nb[j] {
            cover[i] = cover[i] + one;
            w[i] = w[i] * (one - eta);
        }
        // Renormalize to keep the weights in range.
        let wmax = w.iter().fold(zero, |m, &wi| m.max(wi));
        for wi in &mut w {
            *wi = *wi / wmax;
        }
        let min_cover = cover.iter().fold(T::infinity(), |m, &c| m.min(c));
        if min_cover > zero {
            let primal = x.iter().fold(zero, |s, &xi| s + xi) / min_cover;
            if primal < best_primal {
                best_primal = primal;
                best_x = x.iter().map(|&xi| (xi / min_cover).min(one)).collect();
            }
        }
        if best_dual > zero && best_primal <= (one + tol) * best_dual {
            break;
        }
    }
    MwOutcome {
        x: best_x,
        primal: best_primal,
        dual_bound: best_dual,
        iterations,
    }
}

#[derive(Clone, Debug)]
pub struct InitOutcome {
    pub cfds: Cfds,
    /// Size of the LP solution before lifting.
    pub lp_size: f64,
    pub charged_rounds: u64,
    /// Lifting threshold `ε/(2Δ)` on the grid.
    pub threshold: FixedPoint,
}

/// LP solution with tolerance `ε/2`, then every nonzero value below
/// `ε/(2Δ)` lifted to that threshold; isolated nodes take 1.
pub fn initial_fds(g: &Graph, epsilon: f64) -> Result<InitOutcome> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::Domain(format!("ε must be positive, got {epsilon}")));
    }
    let lp = lp_fractional_opt(g, epsilon / 2.0)?;
    let scale = iota(g.n())?;
    let delta = g.max_degree().max(1) as f64;
    let threshold = FixedPoint::quantize_up_at((epsilon / (2.0 * delta)).min(1.0), scale)?;
    let lp_size = lp.cfds.size_f64();
    let mut cfds = lp.cfds;
    for v in g.nodes() {
        if g.degree(v) == 0 {
            cfds.x[v] = FixedPoint::one(scale);
        } else if !cfds.x[v].is_zero() && cfds.x[v] < threshold {
            cfds.x[v] = threshold;
        }
    }
    Ok(InitOutcome {
        cfds,
        lp_size,
        charged_rounds: lp.charged_rounds,
        threshold,
    })
}
