//! Numerical laboratory for the Type IIA flow of closed primitive 3-forms on
//! the flat six-torus.
//!
//! The crate is organized as four layers:
//!
//! * [`forms6`] -- exact pointwise multilinear algebra of forms in six
//!   dimensions (Hitchin's construction, induced metric, duals, contractions);
//! * [`lattice`] -- spectral exterior calculus and Hodge theory for periodic
//!   form fields on `T^6`;
//! * [`flow`] -- right-hand sides and time integration of the flow and its
//!   gauge-fixed reparametrization, with monitors;
//! * [`stability`] -- the experiment layer: harmonic correction, energy decay
//!   fits, linearization checks, and the symplectic-perturbation
//!   construction.
//!
//! Pointwise kernels and transforms are data-parallel over grid points and
//! run under rayon when the default `parallel` feature is enabled; results
//! are bit-identical in sequential mode.

#![allow(clippy::needless_range_loop)] // index-coupled tensor loops read better explicit
#![allow(clippy::manual_is_multiple_of)]

pub mod checks;
pub mod error;
pub mod forms6;
pub mod lattice;
pub mod flow;
pub mod par;
pub mod stability;

pub use error::{Error, Result};
