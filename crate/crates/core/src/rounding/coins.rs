//! k-wise independent coins from a short seed: a uniformly random polynomial
//! of degree below `k` over `GF(2^b)`, evaluated at one distinct point per
//! member.

use std::collections::HashMap;

use super::expectation::PatternLaw;
use super::PartialAssignment;
use crate::error::{Error, Result};
use crate::fixed::FixedPoint;
use crate::graph::NodeId;

/// Irreducible polynomials over GF(2) indexed by degree.
const MODULI: [u32; 17] = [
    0, 0b11, 0x7, 0xB, 0x13, 0x25, 0x43, 0x83, 0x11B, 0x211, 0x409, 0x805, 0x1053, 0x201B, 0x4443,
    0x8003, 0x1100B,
];

pub const MAX_FIELD_BITS: u32 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Gf2Field {
    bits: u32,
    modulus: u32,
}

impl Gf2Field {
    pub fn new(bits: u32) -> Result<Self> {
        if bits == 0 || bits > MAX_FIELD_BITS {
            return Err(Error::Domain(format!("field width {bits} not in 1..={MAX_FIELD_BITS}")));
        }
        Ok(Gf2Field {
            bits,
            modulus: MODULI[bits as usize],
        })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn size(&self) -> u32 {
        1 << self.bits
    }

    pub fn mul(&self, mut a: u32, mut b: u32) -> u32 {
        let top = 1 << self.bits;
        let mut acc = 0;
        while b != 0 {
            if b & 1 == 1 {
                acc ^= a;
            }
            b >>= 1;
            a <<= 1;
            if a & top != 0 {
                a ^= self.modulus;
            }
        }
        acc
    }

    pub fn pow(&self, a: u32, e: usize) -> u32 {
        (0..e).fold(1, |acc, _| self.mul(acc, a))
    }
}

/// Coins for an ordered list of members. Member `i` evaluates the seed
/// polynomial at field element `i`.
#[derive(Clone, Debug)]
pub struct CoinSource {
    field: Gf2Field,
    k: usize,
    members: Vec<NodeId>,
    /// `columns[i][s]`: contribution of seed bit `s` to member `i`'s value.
    /// The evaluation is GF(2)-linear in the seed bits.
    columns: Vec<Vec<u32>>,
}

impl CoinSource {
    pub fn new(bits: u32, k: usize, members: Vec<NodeId>) -> Result<Self> {
        let field = Gf2Field::new(bits)?;
        if k == 0 {
            return Err(Error::Domain("independence must be at least 1".into()));
        }
        if members.len() > field.size() as usize {
            return Err(Error::Domain(format!(
                "{} members need distinct points in GF(2^{bits})",
                members.len()
            )));
        }
        if k * bits as usize > 64 {
            return Err(Error::TooLarge(format!("seed of {} bits", k * bits as usize)));
        }
        let columns = (0..members.len())
            .map(|i| {
                (0..k)
                    .flat_map(|j| {
                        let power = field.pow(i as u32, j);
                        (0..bits).map(move |t| field.mul(1 << t, power))
                    })
                    .collect()
            })
            .collect();
        Ok(CoinSource {
            field,
            k,
            members,
            columns,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn field(&self) -> Gf2Field {
        self.field
    }

    pub fn members(&self) -> &[NodeId] {
        &self.members
    }

    pub fn seed_bits(&self) -> usize {
        self.k * self.field.bits as usize
    }

    /// Uniform `b`-bit value of member `idx` under `seed`.
    pub fn value(&self, seed: u64, idx: usize) -> u32 {
        let mut v = 0;
        for (s, &col) in self.columns[idx].iter().enumerate() {
            if seed >> s & 1 == 1 {
                v ^= col;
            }
        }
        v
    }

    /// `p·2^b`; `p` must be a multiple of `2^-b`.
    pub fn threshold(&self, p: FixedPoint) -> Result<u32> {
        let b = self.field.bits;
        if !p.is_multiple_of_pow2(b) {
            return Err(Error::Precision(format!("probability {p} is not a multiple of 2^-{b}")));
        }
        let t = if p.scale() >= b {
            p.numerator() >> (p.scale() - b)
        } else {
            p.numerator() << (b - p.scale())
        };
        Ok(t as u32)
    }

    /// The coin of member `idx`: 1 iff its value is below `p·2^b`.
    pub fn draw_coin(&self, seed: u64, idx: usize, p: FixedPoint) -> Result<bool> {
        Ok(self.value(seed, idx) < self.threshold(p)?)
    }

    /// Joint law of all members' coins over the seeds consistent with
    /// `fixed`, by enumerating the free seed bits in Gray-code order.
    pub fn law(&self, fixed: &PartialAssignment, thresholds: &[u32], budget: usize) -> Result<PatternLaw> {
        debug_assert_eq!(fixed.len(), self.seed_bits());
        let free = fixed.free_positions();
        if free.len() > budget {
            return Err(Error::EnumerationBudget {
                needed: free.len(),
                budget,
            });
        }
        let m = self.members.len();
        let mut vals: Vec<u32> = (0..m)
            .map(|i| {
                (0..self.seed_bits())
                    .filter(|&s| fixed.get(s) == Some(true))
                    .fold(0, |acc, s| acc ^ self.columns[i][s])
            })
            .collect();
        let mut counts: HashMap<u64, u128> = HashMap::new();
        let total = 1u64 << free.len();
        for g in 0..total {
            let mut mask = 0u64;
            for i in 0..m {
                if vals[i] < thresholds[i] {
                    mask |= 1 << i;
                }
            }
            *counts.entry(mask).or_default() += 1;
            if g + 1 < total {
                let flip = free[(g + 1).trailing_zeros() as usize];
                for (val, col) in vals.iter_mut().zip(&self.columns) {
                    *val ^= col[flip];
                }
            }
        }
        let mut outcomes: Vec<(u64, u128)> = counts.into_iter().collect();
        outcomes.sort_unstable();
        Ok(PatternLaw {
            members: self.members.clone(),
            outcomes,
            log2_total: free.len() as u32,
            free_bits: free.len(),
            independent: false,
        })
    }
}
