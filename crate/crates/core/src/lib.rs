//! Propagation of time-dependent Hamiltonians `h(t)` and of their duals
//! `H(t) = −U†(t) h(t) U(t)`, together with the adiabatic approximations to
//! both and the diagnostics that tell when those approximations hold.
//!
//! The modules build on each other:
//!
//! - [`linalg`]: small dense complex matrices, Hermitian eigensolver, unitary
//!   exponentials.
//! - [`propagation`]: exactly unitary time stepping and the dual Hamiltonian.
//! - [`models`]: the rotating two-level model with its closed forms, and
//!   sampled Hamiltonians.
//! - [`spectral_flow`]: parallel-transport eigenframes, couplings `A_nm` and
//!   the adiabatic-frame equations for `h` and `H`.
//! - [`duality`]: the dual eigenframe and the operators `V†`, `W†`,
//!   `H⁽¹⁾_adia`, `H⁽²⁾_adia`.
//! - [`diagnostics`]: dominant frequencies, resonance verdicts, fidelity
//!   traces and scenario reports.
//!
//! The guide in `book/` walks through the same material with runnable code.

// NaN must fail range checks, hence `!(x > 0.0)` rather than `x <= 0.0`.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod diagnostics;
pub mod duality;
pub mod error;
pub mod linalg;
pub mod models;
pub mod propagation;
pub mod spectral_flow;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, ComplexVector, C64};
pub use propagation::{HamiltonianSource, Method, PropagatorTrace, TimeGrid};

// The guide's code listings run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/propagation.md")]
    mod propagation {}
    #[doc = include_str!("../../../book/src/eigenframes.md")]
    mod eigenframes {}
    #[doc = include_str!("../../../book/src/duality.md")]
    mod duality {}
    #[doc = include_str!("../../../book/src/resonance.md")]
    mod resonance {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
