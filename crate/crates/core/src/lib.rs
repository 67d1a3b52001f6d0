//! Pair-wise belief propagation MIMO soft detection.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: complex Hermitian solves, scalar complex Gaussians, log-domain sums.
//! * [`modem`]: constellations, bit mapping and bit LLRs.
//! * [`channel`]: i.i.d. Rayleigh channels, noise and reproducible frames.
//! * [`pairwise`]: per-pair conditional MMSE statistics and the ring recursion operators.
//! * [`detectors`]: MAP, LMMSE, BP1, BP2, BP3, GBP-2G and GBP-3G behind one interface.
//! * [`simharness`]: Monte-Carlo SNR sweeps, iteration studies and operation counts.
//! * [`verify`]: numerical checks of the identities the detectors rely on.
//! * [`cli`]: the `pwbp` command-line front end.

// matrix and message code reads more clearly with explicit indices
#![allow(clippy::needless_range_loop)]

pub mod channel;
pub mod cli;
pub mod detectors;
pub mod error;
pub mod modem;
pub mod numerics;
pub mod pairwise;
pub mod simharness;
pub mod verify;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use num_complex::Complex64;
