//! Exact Markovian embedding of a two-level or few-level system coupled to
//! a structured bosonic environment.
//!
//! The environment's spectral density is written as a sum of simple poles
//! in the lower half plane. Each pole becomes a damped auxiliary bosonic
//! mode; the system plus these modes obeys a Markovian master equation whose
//! reduced dynamics reproduce the original non-Markovian problem. When some
//! spectral weights are negative the mode couplings turn complex and the
//! master equation loses Lindblad form; for two modes a complex basis
//! rotation restores it.
//!
//! Module map:
//! - [`spectral`]: Lorentzian sums, pole sets, correlation function.
//! - [`mapping`]: discrete-mode parameters and the two-mode rotation.
//! - [`hilbert`]: system, ladder and tensor-product operators.
//! - [`dynamics`]: generator assembly and RK4 integration.
//! - [`trajectories`]: quantum-jump unraveling.
//! - [`oracle`]: single-excitation and discretized-bath reference solvers.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod mapping;
pub mod oracle;
pub mod spectral;
pub mod trajectories;

pub use error::{Error, Result};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/spectral.md")]
    mod spectral {}
    #[doc = include_str!("../../../book/src/modes.md")]
    mod modes {}
    #[doc = include_str!("../../../book/src/rotation.md")]
    mod rotation {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/trajectories.md")]
    mod trajectories {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
