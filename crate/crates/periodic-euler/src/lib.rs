// Validation uses `!(x > 0.0)` so that NaN inputs from config files are
// rejected; the suggested `x <= 0.0` would accept them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Simulation and verification toolkit for the 1-D isentropic compressible
//! Euler equations with a time-periodic momentum forcing `alpha(t) rho u` and
//! time-periodic supersonic inflow data.
//!
//! In the supersonic regime both characteristic families run downstream, so
//! the duct problem can be marched in space: [`march`] treats `x` as the
//! evolution direction for the Riemann-invariant form of the system, while
//! [`fv`] provides an independent conservative finite-volume solver in time
//! used as a cross-validation oracle. [`analysis`] measures the properties
//! the solutions are expected to have: the solution becomes exactly
//! time-periodic once boundary periodicity has swept the duct (after
//! `T0 = L / lambda0`), stays within `O(eps)` of the explicit background
//! solution `(rho_ref, exp(A(t)) u_ref)`, and its perturbation energy obeys
//! a Gronwall-type growth bound in `x`.

pub mod analysis;
pub mod boundary;
pub mod config;
pub mod field;
pub mod forcing;
pub mod fv;
pub mod gas;
pub mod march;
pub mod numutil;
pub mod runner;
pub mod selftest;
pub mod spline;
pub mod tolerances;

pub use boundary::{BoundaryData, PeriodicSignal};
pub use field::{Field, FieldMeta};
pub use forcing::{BackgroundSolution, ForcingCoefficient};
pub use gas::{ConservedState, GasParams, PrimitiveState, RiemannPair};
