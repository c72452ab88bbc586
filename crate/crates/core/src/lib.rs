//! Transfer maps between time-dependent quadratic Hamiltonians.
//!
//! The pipeline: integrate a worldline and its Fermi-Walker frame through a
//! metric ([`geometry`], [`transport`]), sample the tidal matrix, turn it into
//! a quadratic Hamiltonian ([`hamiltonian`]), and integrate the linear map
//! `T(τ)` that carries solutions of that system onto solutions of a target
//! system ([`transfer`]). [`scenario`] wires it together from a config file.

pub mod error;
pub mod expr;
pub mod geometry;
pub mod hamiltonian;
pub mod linalg;
pub mod ode;
pub mod scenario;
pub mod transfer;
pub mod transport;

pub use error::{Error, Result};
pub use linalg::Mat;
