//! Value functions for deterministic optimal control problems with
//! nonnegative running costs and compact or unbounded (conic) control sets.
//!
//! Unbounded controls are handled by compactification: the problem is
//! rewritten over the sphere `S(A) = {(w0, w) : w0^q + |w|^q = 1}` through a
//! time reparametrization, which yields a continuous Hamiltonian and admits
//! impulsive (jump) trajectories where `w0 = 0`.
//!
//! Module map:
//!
//! * [`problem`] control problems, growth data, recession functions and the
//!   built-in catalogue.
//! * [`extension`] compactified data on `S(A)` and the two-way time change.
//! * [`hamiltonians`] control meshes and mesh-based Hamiltonians.
//! * [`fields`] grids and value fields with an explicit infinite state.
//! * [`solvers`] semi-Lagrangian solvers and the `t -> inf`, `delta -> 0`
//!   limit drivers.
//! * [`trajectories`] forward simulation and the brute-force oracle.
//! * [`certificates`] sampled checks of restraint/Lyapunov-type conditions.
//! * [`oracles`] closed-form reference values.
//! * [`cli`] the `hjb` command-line front end.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificates;
pub mod cli;
pub mod error;
pub mod extension;
pub mod fields;
pub mod hamiltonians;
pub mod oracles;
pub mod problem;
pub mod sampling;
pub mod solvers;
pub mod trajectories;

pub use error::{Error, Result};
pub use extension::{ExtendedControlPoint, ExtendedProblem, TimedControl};
pub use fields::{Axis, Grid, Value, ValueField};
pub use hamiltonians::{ControlMesh, ControlPoint, Model};
pub use problem::{ControlProblem, ControlSet, GrowthData, TargetSet};
pub use solvers::{ConvergenceReport, Scheme, SolverConfig, Verdict};
