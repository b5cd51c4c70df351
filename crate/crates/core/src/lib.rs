//! Entanglement of two-qubit mixed states obtained by tracing one qubit out of a
//! three-qubit pure state in canonical five-amplitude form.
//!
//! The crate is organized bottom-up:
//!
//! - [`qmat`]: small dense complex matrices, partial trace/transpose, Jacobi
//!   eigensolvers, the 3×3 SVD and the cubic characteristic polynomial.
//! - [`states`]: canonical states, density matrices, reductions and sampling.
//! - [`measures`]: the five measures E1..E5, concurrences, negativity.
//! - [`correlation`]: quantum and connected correlation matrices, the closed-form
//!   maximal CHSH violation and its two independent oracles.
//! - [`lhv`]: the vector-observable local hidden variable model.
//! - [`scan`]: parameter-space scans, CSV records, bin classification and the
//!   negativity-ordering witness search used by the command-line tool.

#![allow(clippy::needless_range_loop)]

pub mod correlation;
pub mod error;
pub mod lhv;
pub mod measures;
pub mod qmat;
pub mod scan;
pub mod states;

pub use error::{Error, Result};
