//! Detection of conical intersections through the quantized Berry phase of a
//! tracked real variational ground state.
//!
//! The tracker follows the minimum of a real ansatz around a closed loop of
//! Hamiltonians with one Newton-Raphson step per loop point and reads the
//! phase off the sign of the closing overlap. The [`oracle`] module provides
//! the exact-diagonalization reference.

pub mod bounds;
pub mod error;
pub mod hamiltonian;
pub mod linalg;
pub mod noise;
pub mod oracle;
pub mod orbital;
pub mod statevec;
pub mod tracker;

pub use error::{Error, Result};
