#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(v >= lo)` also rejects NaN.

//! Exact counting of friable (smooth) integers Ψ(x, y), Dickman's ρ, the
//! saddle-point quantities attached to Ψ, and numerical comparison of
//! Ψ(x, y) with x·ρ(u) across the regimes y = (log x)^c.

pub mod cli;
pub mod dickman;
pub mod error;
pub mod primes;
pub mod psi_exact;
pub mod quad;
pub mod report;
pub mod saddle;
pub mod sum;
pub mod theorem;

pub use error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082_402_431;
