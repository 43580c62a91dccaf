//! Curlforge: simulation and verification tools for curl-force dynamics.
//!
//! A curl force is a position-dependent force field whose curl does not
//! vanish. Such forces are non-conservative but, in the absence of friction,
//! still preserve phase-space volume. This crate implements the three
//! geometric routes by which dissipative and gyroscopic forces couple to
//! curl-force systems:
//!
//! - **metriplectic double brackets** ([`brackets`]): a Lie-Poisson flow on
//!   the dual of a Heisenberg algebra plus a symmetric double bracket built
//!   from the same bivector,
//! - **contact dynamics** ([`contact`]): contact Hamiltonian vector fields in
//!   Darboux coordinates together with the Herglotz variational formulation,
//! - **doubled-variable mechanics** ([`galley`]): doubled coordinates coupled
//!   by an antisymmetric kernel, reduced at the physical limit.
//!
//! The [`catalog`] module names the concrete systems studied with these
//! tools, [`integrate`] produces trajectories, and [`diagnostics`] verifies
//! conservation laws, volume preservation, conformal scaling, and linear
//! stability. Everything is deterministic: pseudo-random probe sets use a
//! fixed seed (override with the `CURLFORGE_SEED` environment variable).

pub mod brackets;
pub mod catalog;
pub mod contact;
pub mod diagnostics;
pub mod fd;
pub mod galley;
pub mod integrate;
pub mod probe;
pub mod state;

pub use state::{ForceField2D, PhaseState, ScalarField};
