//! Annulus and phase-space discretization, simulation state and initial data.

pub mod grid;
pub mod initial;
pub mod state;

pub use grid::{build_grid, check_momentum_box, momentum_nodes, trapezoid_weights, AnnulusSpec, PhaseSpaceGrid, RadialGrid};
pub use initial::{gaussian_ring_ic, BoundaryTrace, BoundaryTraces, FieldProfile, InitialData, RingProfile};
pub use state::{total_charge, DistributionFunction, FieldState};
