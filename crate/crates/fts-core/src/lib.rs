//! Spectral analysis of functional time series at a fixed finite-dimensional
//! truncation.
//!
//! A curve-valued stationary sequence is represented by its coefficients with
//! respect to a fixed orthonormal basis, so the ambient space is `C^d` and all
//! operators are dense `d x d` complex matrices. On top of these primitives
//! the crate provides:
//!
//! * simulators for linear processes, linear processes with dependent errors,
//!   and a coordinatewise ARCH recursion ([`models`]);
//! * discrete Fourier transforms of observed paths, both at arbitrary
//!   frequencies and accelerated on the canonical Fourier grid ([`dft`]);
//! * the spectral density operator computed along three independent routes —
//!   closed form for linear models, truncated lag sums, and Fejér-weighted
//!   sums — together with inverse Fourier recovery of lag covariances
//!   ([`spectral`]);
//! * martingale-difference projections and the exact decomposition of the DFT
//!   into a martingale part plus a conditional-expectation remainder
//!   ([`martingale`]);
//! * seeded, parallel Monte Carlo experiments probing the central limit
//!   behaviour of normalized DFTs, with structured reports ([`montecarlo`],
//!   [`report`]).
//!
//! All randomness flows through [`rng::RngStream`], a counter-based generator
//! with explicit stream ids, so every experiment is reproducible down to the
//! byte regardless of thread count.

pub mod dft;
pub mod error;
pub mod hilbert;
pub mod martingale;
pub mod models;
pub mod montecarlo;
mod numeric;
pub mod report;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
