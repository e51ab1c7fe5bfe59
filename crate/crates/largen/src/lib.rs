//! Lattice simulator, exact large-N oracle and 1/N graph expansion for the
//! Wick-renormalized N-component φ⁴ model on the unit 2-torus.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod ibp;
pub mod kernels;
pub mod lattice;
pub mod observables;
pub mod oracle;
pub mod predict;
pub mod runner;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
