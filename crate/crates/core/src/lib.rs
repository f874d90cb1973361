//! Axisymmetric relativistic Vlasov-Maxwell simulation in an annulus with an
//! external magnetic confinement potential.
//!
//! The state is a nodal distribution `f(t, r, p_r, p_theta)` on a uniform
//! phase-space grid together with the radial field profiles `E_r`,
//! `E_theta` and `B`. Each step computes the velocity moments of `f`, solves
//! Gauss's law for `E_r`, transports `P± = r (E_theta ± B)` along the
//! unit-speed field characteristics and advances `f` by a backward
//! semi-Lagrangian step. Every conservation law and a-priori bound of the
//! model is evaluated along the way.
//!
//! The `examples/` directory holds one runnable program per capability:
//!
//! ```text
//! cargo run --release --example free_streaming
//! cargo run --release --example maxwell_mms
//! cargo run --release --example confinement
//! cargo run --release --example trace_particle
//! cargo run --release --example potential_profile
//! cargo run --release --example theory_constants
//! cargo run --release --example boundary_recursion
//! cargo run --release --example energy_balance
//! ```

pub mod config;
pub mod diagnostics;
pub mod domain;
pub mod error;
pub mod interp;
pub mod io;
pub mod maxwell;
pub mod potential;
pub mod simulation;
pub mod vlasov;

pub use error::{Error, Result};
