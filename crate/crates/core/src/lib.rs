//! Bulk-surface reaction-advection-diffusion-sorption simulator and
//! model-verification toolkit.
//!
//! The crate models a closed chemical reactor: a bulk phase (an interval in
//! 1D or a rectangle in 2D) whose entire boundary is an active surface.
//! Species diffuse and are advected in the bulk, diffuse along the surface,
//! react in both phases via mass-action kinetics, and exchange between the
//! phases through one of five sorption rate laws (Henry, Langmuir, Volmer,
//! Frumkin, Van der Waals). The boundary condition couples the phases
//! conservatively: the normal diffusive flux out of the bulk equals the net
//! sorption rate feeding the surface.
//!
//! The crate is organised along the pipeline:
//!
//! - [`model`] — species systems, sorption laws, mass-action networks, and
//!   sample-based checkers for the structural assumptions (quasi-positivity,
//!   sorption monotonicity/bounds, polynomial growth, triangular structure).
//! - [`exponents`] — exact-rational calculator for the admissibility
//!   inequalities on integrability exponents and Sobolev indices.
//! - [`fv`] — finite-volume grids, diffusion/advection operators, the
//!   boundary chain as surface mesh, and the bulk<->surface coupling.
//! - [`stepper`] — positivity-preserving IMEX time integration with
//!   adaptive step control and blow-up detection.
//! - [`harness`] — executable property checks (positivity, mass balance,
//!   blow-up, occupancy cap, comparison ordering, convergence order,
//!   norm envelopes).
//! - [`config`] / [`cli`] — INI-style configuration files, CSV/snapshot
//!   emission and the command-line front end.

pub mod cli;
pub mod config;
pub mod exponents;
pub mod fv;
pub mod harness;
pub mod model;
pub mod stepper;
