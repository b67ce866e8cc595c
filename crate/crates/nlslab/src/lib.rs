//! Numerical laboratory for near-soliton dynamics of the focusing
//! intercritical nonlinear Schrödinger equation
//! `i u_t + Lap u = -|u|^{p-1} u` with `1 + 4/d < p < 1 + 4/(d-2)`.
//!
//! The crate computes the ground state Q, the spectrum of the linearized
//! operator at the soliton e^{it} Q, tracks perturbations in modulation
//! coordinates, and measures how the exit time from a soliton neighborhood
//! and the accumulated scattering density grow as the conserved quantities
//! approach the ground-state threshold.
//!
//! See the `examples/` directory for one runnable example per capability,
//! and the `nlslab` binary for the pipeline CLI
//! (`ground-state | spectrum | evolve | exit-sweep | report`).

pub mod config;
pub mod error;
pub mod experiments;
pub mod field;
pub mod grid;
pub mod ground_state;
pub mod linearized;
pub mod manifest;
pub mod modulation;
pub mod observables;
pub mod propagator;
pub mod snapshot;

pub use error::{NlsError, Result};
pub use field::ComplexField;
pub use grid::{make_grid, Grid};
