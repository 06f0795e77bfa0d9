//! Numerical toolkit for certifying, auditing, and empirically demonstrating the
//! negative-imaginary (NI) property of dynamical systems.
//!
//! The crate is organised around three layers:
//!
//! * a small dense linear-algebra kernel ([`mat`], [`eig`], [`cmat`]) with a cyclic
//!   Jacobi eigensolver, an LU solver, and a one-sided Jacobi SVD for least squares —
//!   everything downstream is built on these;
//! * LTI analysis ([`lti`]): frequency-domain NI/SNI/PR tests, state-space certificate
//!   search and verification, the positive-real transforms, and the DC-gain stability
//!   condition for positive-feedback interconnections;
//! * nonlinear analysis ([`nonlinear`], [`interconnect`], [`free_motion`], [`msd`]):
//!   trajectory-based dissipativity checks, steady-state audits of the interconnection
//!   assumptions, sector-bound scans, composite Lyapunov function probes, the
//!   cascade-with-integrator ("free motion") storage construction, and the
//!   mass–spring–damper case study with its integral resonant controller.
//!
//! Batch computations (frequency sweeps, sample audits, initial-condition batches)
//! run data-parallel via rayon when the default `parallel` feature is enabled and
//! fall back to sequential iteration otherwise; see [`exec`].

pub mod cmat;
pub mod eig;
pub mod error;
pub mod exec;
pub mod free_motion;
pub mod interconnect;
pub mod lti;
pub mod mat;
pub mod msd;
pub mod nonlinear;
pub mod signal;
pub mod sobol;

pub use error::{Error, Result};
pub use mat::Matrix;
