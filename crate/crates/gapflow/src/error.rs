// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

/// Errors raised by the library.
///
/// The variants split into two families. Input problems (`InvalidInput`,
/// `LengthMismatch`, `OutOfRange`) mean the caller handed over data that
/// violates a documented precondition. Numerical problems (`Numerical`,
/// `SmallDivisor`, `Integration`) mean the data was acceptable but a
/// computation could not reach its tolerance.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("value {value} outside [{lo}, {hi}] for component {index}")]
    OutOfRange {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("small divisor |<n,omega>| = {value:e} below floor {floor:e} at n = {n:?}")]
    SmallDivisor { n: Vec<i64>, value: f64, floor: f64 },

    #[error("ODE integration failed: {0}")]
    Integration(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for errors caused by bad input rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_) | Error::LengthMismatch { .. } | Error::OutOfRange { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
