//! Numerical toolkit for quantum confinement of Dirac particles: decides and
//! certifies essential self-adjointness of Dirac operators on intervals and
//! disks, and demonstrates confinement dynamically through norm-preserving
//! time evolution.
//!
//! The crate is organized around the pipeline
//!
//! * [`matrices`], [`dirac`], [`domain`], [`potential`] — Pauli/Dirac algebra,
//!   scalar potentials, exact boundary distances;
//! * [`radial`], [`quad`] — overflow-safe integration of radial spinor systems
//!   toward singular endpoints, L2 tail classification, divergence detection;
//! * [`classifier`] — per-endpoint limit-point/limit-circle classification and
//!   whole-operator verdicts, closed-form rules first;
//! * [`magnetic`] — rotationally symmetric magnetic confinement on the unit
//!   disk via the transversal gauge and partial-wave fibers;
//! * [`certifier`] — matrix-inequality certificates for the scalar-potential
//!   confinement theorems on boundary-layer grids;
//! * [`evolution`] — Crank-Nicolson dynamics exhibiting confinement and
//!   extension dependence.
//!
//! Units: hbar = c = mass = 1 throughout; mass terms are bounded and dropped.

#![allow(clippy::needless_range_loop)] // indexed loops over coordinate axes

pub mod certifier;
pub mod classifier;
pub mod dirac;
pub mod domain;
pub mod error;
pub mod evolution;
pub mod magnetic;
pub mod matrices;
pub mod ode;
pub mod potential;
pub mod quad;
pub mod radial;

pub use error::{Error, Result};
