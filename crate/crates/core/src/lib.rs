//! Lattice laboratory for the anti-plane (Mode III) crack on the square lattice.
//!
//! The model lives on the offset lattice `Z^2 - (1/2, 1/2)`: a site is an integer
//! pair `(a, b)` whose physical position is `(a - 1/2, b - 1/2)`, so the crack
//! tip sits at the origin between four sites. Nearest-neighbour bonds crossing
//! the negative `x1` axis are removed; that cut is the crack. Everything else
//! builds on that geometry:
//!
//! - [`lattice`]: site indexing, the bond mask, masked gradient and divergence;
//! - [`potential`]: the pair potential and the truncated-domain energy assembly;
//! - [`predictors`]: the continuum K-field and its corrections, plus the
//!   Sinclair comparison series;
//! - [`solver`]: nonlinear conjugate gradients, masked linear solves, and a
//!   stability (smallest Rayleigh quotient) check;
//! - [`greens`]: lattice Green's functions for the cracked domain and the
//!   separable discreteness correction with its cutoff diagnostic;
//! - [`analysis`]: radial shell decay fits, amplitude calibration, convergence
//!   studies and the Sinclair incompleteness experiment.
//!
//! The crate is `no_std` compatible (with `alloc`); enable the `libm` feature
//! when building without `std` to supply the float math.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("antiplane needs either the `std` or the `libm` feature for float math");

pub mod analysis;
pub mod error;
pub mod greens;
pub mod lattice;
pub mod math;
pub mod potential;
pub mod predictors;
pub mod rng;
pub mod solver;

pub use analysis::{ConvergenceReport, DecayReport, Shell, SinclairReport};
pub use error::{Error, Result};
pub use lattice::{BondField, LatticeDomain, ScalarField, Site};
pub use potential::{EnergyAssembly, PairPotential};
pub use predictors::{PredictorSpec, SinclairSeries};
pub use solver::{SolveReport, SolveSettings};
