//! Operator calculus on truncated Fock spaces.

mod expr;
mod space;
mod text;
mod trunc;

pub use expr::{
    power, qpow_value, sq1m_value, Diag, DiagFn, OperatorExpr, Primitive, Scalar, TermKey, Word, PRUNE_TOL,
};
pub use space::{FactorKind, Mode, SpaceSpec};
pub use text::{format_expr, parse_expr};
pub use trunc::{entry_deviation, materialize, TruncOp};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FockError {
    #[error("factor {0} needs truncation D >= 2")]
    FactorTooSmall(FactorKind),
    #[error("expected {expected} tensor factors, found {found}")]
    FactorCount { expected: usize, found: usize },
    #[error("factor modes differ: {0:?} vs {1:?}")]
    ModeMismatch(Vec<Mode>, Vec<Mode>),
    #[error("q = {0} is outside [0, 1)")]
    BadQ(f64),
    #[error("{what} is not a finite real at n = {n}")]
    DiagOutOfRange { what: String, n: i64 },
    #[error("band {band} too large for factor {factor}")]
    BandTooLarge { band: usize, factor: FactorKind },
    #[error("tail start {m} out of range for factor {factor}")]
    TailOutOfRange { m: usize, factor: FactorKind },
    #[error("factor {0} is not a half-line factor")]
    NotHalfLine(usize),
    #[error("operand spaces differ: {0} vs {1}")]
    SpaceMismatch(SpaceSpec, SpaceSpec),
    #[error("{0:?} is not a permutation")]
    BadPermutation(Vec<usize>),
    #[error("parse error: {0}")]
    Parse(String),
}
