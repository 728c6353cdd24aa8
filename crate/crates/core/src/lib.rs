//! Hybrid qubit-qubit-qutrit quantum Fourier transform on a four-spin NMR register.

pub mod circuit;
pub mod cli;
pub mod error;
pub mod pulse;
pub mod qudit;
pub mod random;
pub mod spin;
pub mod spinops;
pub mod tomography;

pub use error::{Error, Result};
