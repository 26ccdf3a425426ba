//! Optimal diffusion-rate switching for time-changed Bessel processes.
//!
//! A walker diffusing in fractional dimension `n ∈ (0,2)` with rate
//! constrained to `[r1, r2]` wants to maximize the singularity exponent of
//! its final-time density at the origin.  The optimal strategy is a bang-bang
//! switch at a cutoff `κ(n,V)·√r1` in parabolic coordinates, and the optimal
//! exponent `η(n,V)` solves a transcendental system built from modified
//! Bessel kernels.  This crate solves that system and cross-checks the
//! answer by spectral, variational, PDE and Monte-Carlo routes.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod kernels;
pub mod quad;
pub mod roots;
pub mod specfun;
pub mod spectral;

pub use error::{Error, Result};
