//! Constrained fractional dominating sets.

use num_rational::BigRational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixed::FixedPoint;
use crate::graph::{Graph, NodeId};
use crate::scalar::Scalar;

/// Values `x` and constraints `c`, both per node and on a common scale.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cfds {
    pub x: Vec<FixedPoint>,
    pub c: Vec<FixedPoint>,
}

impl Cfds {
    pub fn new(x: Vec<FixedPoint>, c: Vec<FixedPoint>) -> Result<Self> {
        if x.len() != c.len() {
            return Err(Error::Domain(format!(
                "{} values but {} constraints",
                x.len(),
                c.len()
            )));
        }
        let scale = x.first().map(|v| v.scale());
        if x.iter().chain(&c).any(|v| Some(v.scale()) != scale) {
            return Err(Error::Domain("values do not share one scale".into()));
        }
        Ok(Cfds { x, c })
    }

    /// A plain fractional dominating set: every constraint is 1.
    pub fn fds(x: Vec<FixedPoint>) -> Self {
        let scale = x.first().map_or(0, |v| v.scale());
        let c = vec![FixedPoint::one(scale); x.len()];
        Cfds { x, c }
    }

    /// The integral FDS given by membership flags.
    pub fn from_set(members: &[bool], scale: u32) -> Self {
        Cfds::fds(
            members
                .iter()
                .map(|&m| if m { FixedPoint::one(scale) } else { FixedPoint::zero(scale) })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn scale(&self) -> u32 {
        self.x.first().map_or(0, |v| v.scale())
    }

    /// `A = Σ x(v)`, exactly.
    pub fn size(&self) -> BigRational {
        BigRational::from_dyadic(self.size_numerator(), self.scale())
    }

    pub fn size_f64(&self) -> f64 {
        f64::from_dyadic(self.size_numerator(), self.scale())
    }

    fn size_numerator(&self) -> u128 {
        self.x.iter().map(|v| v.numerator()).sum()
    }

    pub fn is_integral(&self) -> bool {
        self.x.iter().all(|v| v.is_zero() || v.is_one())
    }

    /// Nodes with value exactly 1.
    pub fn members(&self) -> Vec<NodeId> {
        (0..self.len()).filter(|&v| self.x[v].is_one()).collect()
    }

    pub fn member_flags(&self) -> Vec<bool> {
        self.x.iter().map(|v| v.is_one()).collect()
    }
}

/// Nodes whose inclusive-neighborhood value falls short of their constraint.
pub fn validate_cfds(g: &Graph, d: &Cfds) -> Result<Vec<NodeId>> {
    if d.len() != g.n() {
        return Err(Error::Domain(format!(
            "CFDS covers {} nodes, graph has {}",
            d.len(),
            g.n()
        )));
    }
    Ok(g.nodes()
        .filter(|&v| {
            let cover: u128 = d.x[v].numerator()
                + g.neighbors(v).iter().map(|&u| d.x[u].numerator()).sum::<u128>();
            cover < d.c[v].numerator()
        })
        .collect())
}

/// Minimum nonzero value; 1 when every value is zero.
pub fn fractionality(d: &Cfds) -> FixedPoint {
    d.x.iter()
        .copied()
        .filter(|v| !v.is_zero())
        .min()
        .unwrap_or_else(|| FixedPoint::one(d.scale()))
}
