//! Composite convex minimization `F = f + psi` by randomized block
//! coordinate descent with arbitrary sampling, in non-accelerated and
//! accelerated variants, plus runtime verification of the method's
//! convergence guarantees.
//!
//! The crate is organized around the pieces of one iteration:
//!
//! * [`blockspace`] — block-partitioned vectors, metrics, weighted norms;
//! * [`sampling`] — distributions over block subsets and seeded draws;
//! * [`objective`] — the smooth part `f` in partially separable form;
//! * [`regularizer`] — block-separable `psi` with closed-form prox steps;
//! * [`eso`] — stepsize weights `v` (assignment and certification);
//! * [`solver`] — the iteration itself in three equivalent realizations,
//!   a theta-schedule, and the eight named presets;
//! * [`analysis`] — theoretical bound evaluation and convex-combination
//!   diagnostics for the iterate history.

pub mod analysis;
pub mod blockspace;
pub mod error;
pub mod eso;
pub mod objective;
pub mod regularizer;
pub mod sampling;
pub mod solver;

pub use blockspace::{BlockMetric, BlockPartition, BlockVector, Weights};
pub use error::{Error, Result};
pub use objective::{ScalarLoss, SmoothObjective, SparseMatrix};
pub use regularizer::{BlockPenalty, Regularizer};
pub use sampling::{ProbabilityVector, Sampling};
pub use solver::{Preset, RunResult, SolverConfig, ThetaSchedule, Trace, Variant};
