//! reslab: numerical spectral analysis of radial Schrodinger operators
//! -Delta - W in 3D near zero energy.
//!
//! The crate builds up from radial potentials with exponential-decay
//! metadata to five instruments:
//!
//! * [`radial_ode`] - half-line integration, asymptotic constants, and the
//!   zero-energy classification (regular / strong resonance / threshold
//!   eigenvalue), plus bound states by node counting.
//! * [`certificate`] - the positivity-certificate search: piecewise test
//!   functions, the weighted functional Phi, region margins, and the
//!   contradiction gap.
//! * [`weak_resonance`] - the linear-growth fixed-point construction:
//!   the functional D, the integral operator K, and Picard iteration.
//! * [`ground_state`] - NLS ground-state profiles by shooting, the mass
//!   law, tail asymptotics, and the kernel-split identity; feeds the
//!   linearized-NLS potentials.
//! * [`resolvent`] / [`wave_decay`] - Fredholm-determinant scans over a
//!   strip of the spectral plane, and time-domain verification of local
//!   energy decay for the perturbed wave equation.
//!
//! Every capability has a runnable demo under `examples/`; the `reslab`
//! binary exposes the same flows as subcommands driven by JSON configs.

pub mod certificate;
pub mod config;
pub mod error;
pub mod grid;
pub mod ground_state;
pub mod interp;
pub mod ode;
pub mod potential;
pub mod quad;
pub mod radial_ode;
pub mod report;
pub mod resolvent;
pub mod runner;
pub mod wave_decay;
pub mod weak_resonance;

pub use error::{Error, Result};
