//! Numerical laboratory for one-dimensional holomorphic vector fields and
//! their one-parameter unfoldings.
//!
//! The crate is organised around six layers:
//!
//! * [`algebra`] — complex polynomial arithmetic, root finding with
//!   multiplicity clustering and residues of the dual form `dw/P`.
//! * [`flow`] — adaptive integration of real flows `Re(μX)` with event
//!   detection and Fatou-coordinate path integrals.
//! * [`polyfield`] — Douady–Estrada–Sentenac analysis of polynomial vector
//!   fields: separatrix skeletons, homoclinic detection and instability
//!   directions.
//! * [`unfolding`] — unfoldings `f(x,y)∂/∂y`: fixed-curve tracking, the
//!   recursive dynamical splitting and the global instability set.
//! * [`longtraj`] — Long Trajectory / Long Orbit experiments driven by the
//!   residue formula.
//! * [`conjugacy`] — the method-of-the-path construction of non-holomorphic
//!   topological conjugacies for the quadratic family.
//!
//! The crate is `no_std`-compatible (with `alloc`); all IO, file formats and
//! the command line live in the companion `parafold-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod algebra;
pub mod conjugacy;
pub mod error;
pub mod flow;
pub mod longtraj;
pub mod polyfield;
pub mod unfolding;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Shorthand used throughout the crate.
pub(crate) fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
