//! Numerical laboratory for constrained ground states of the mass-subcritical
//! nonlinear Schrödinger energy
//!
//! ```text
//! E_ρ(u) = ½∫|∇u|² + ½∫V u² − ρ^{p−1}/(p+1) ∫|u|^{p+1},   ‖u‖₂ = 1,
//! ```
//!
//! and for the blow-up asymptotics of its minimizers as `ρ → ∞`.
//!
//! Everything numerical is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the bottom of this file fix `f64`, which is what the stated
//! tolerances assume.

// `!(a > b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod asymptotics;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod groundstate;
pub mod io;
pub mod potentials;
pub mod qfunctional;
pub mod scalar;
pub mod soliton;

pub use error::{Error, Result};
pub use grid::{Field, Grid};
pub use scalar::Scalar;
pub use soliton::{SolitonConstants, SolitonProfile};

pub type Profile = SolitonProfile<f64>;
pub type Constants = SolitonConstants<f64>;
pub type Grid64 = Grid<f64>;
pub type Field64 = Field<f64>;

/// Crate version, recorded in the provenance header of output files.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
