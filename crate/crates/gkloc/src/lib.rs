//! Exact local invariants of special cycles: p-adic representation densities,
//! Gross-Keating lengths, Bruhat-Tits tube counts and local Whittaker factors.

pub mod arith;
pub mod error;
pub mod padic_core;
pub mod qform;
pub mod density;
pub mod lengths;
pub mod btree;
pub mod classify;
pub mod eislocal;
pub mod cli;

pub use error::{Error, Result};
pub use padic_core::{hilbert_symbol, Place, PrimeContext, UnitClass};

/// Exact rationals used for every reported quantity.
pub type Rat = num_rational::BigRational;
/// Arbitrary-precision integers.
pub type Int = num_bigint::BigInt;
