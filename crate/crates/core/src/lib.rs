//! Numerical laboratory for quasi-Einstein manifolds.
//!
//! A quasi-Einstein structure is a Riemannian manifold `(M, g)` with a
//! positive potential `u` solving `Hess u = (u/m)(Ric - lambda g)`. This crate
//! builds the classical noncompact examples, checks the identities such
//! structures satisfy, estimates the dimension of the solution space of the
//! equation by holonomy of the prolonged system, and fits the decay rates
//! used in the asymptotically flat rigidity argument.
//!
//! Runnable examples, one per capability:
//!
//! - `zoo_tour`: every catalog entry and its integrability constant
//! - `verify_identities`: the identity suite and Ricci eigenframes
//! - `profile_ode`: the surface profile families and their first integrals
//! - `solution_space_gap`: dimension estimates from holonomy defects
//! - `asymptotic_decay`: decay fits, the decay chain and growth bounds
//! - `convention_selftest`: 3D curvature reconstruction from Ricci
//! - `report_json`: the batch layer driven by a JSON config

pub mod asymptotics;
pub mod error;
pub mod fd;
pub mod field;
pub mod geometry;
pub mod metric;
pub mod ode;
pub mod profile;
pub mod report;
pub mod solution_space;
pub mod tensor;
pub mod verifier;
pub mod zoo;

pub use error::{QeError, Result};
