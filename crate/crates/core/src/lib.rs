//! Deterministic distributed rounding for dominating sets, with a
//! synchronous message-passing simulator and exact derandomization.

pub mod bipartite;
pub mod cds;
pub mod cfds;
pub mod coloring;
pub mod decomposition;
pub mod derand_color;
pub mod derand_decomp;
pub mod error;
pub mod fractional;
pub mod generate;
pub mod fixed;
pub mod graph;
pub mod oracle;
pub mod pipeline;
pub mod rounding;
pub mod scalar;
pub mod sim;

/// Exact rational arithmetic, used wherever an invariant depends on the value.
pub type Exact = num_rational::BigRational;
/// Floating-point arithmetic for estimates.
pub type Approx = f64;

pub use cfds::{fractionality, validate_cfds, Cfds};
pub use error::{Error, Result};
pub use fixed::{iota, quantize_up, FixedPoint};
pub use graph::{Graph, NodeId};
pub use scalar::Scalar;
