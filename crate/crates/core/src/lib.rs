//! Explicit almost-periodic solutions of the incompressible Euler equations
//! on even-dimensional tori, with exact derivatives and audits.
//!
//! Start with [`assembly::BuildSpec`], then check the result with the
//! functions in [`verify`].

pub mod assembly;
pub mod base_flow;
pub mod cutoff_drift;
pub mod error;
pub mod field;
pub mod frequencies;
pub mod jet;
pub mod packing;
pub mod scale_wrap;
pub mod verify;

pub use error::{Error, Result};

/// Exact rational scale parameter.
pub type Rational = num_rational::Ratio<i64>;

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/base-flow.md")]
    mod base_flow {}
    #[doc = include_str!("../../../book/src/scales.md")]
    mod scales {}
    #[doc = include_str!("../../../book/src/packing.md")]
    mod packing {}
    #[doc = include_str!("../../../book/src/cutoff-drift.md")]
    mod cutoff_drift {}
    #[doc = include_str!("../../../book/src/frequencies.md")]
    mod frequencies {}
    #[doc = include_str!("../../../book/src/assembly.md")]
    mod assembly {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
