//! Simulation of a two-atom, four-port interferometer with a conditional
//! quantum eraser.
//!
//! The library models a polarization-entangled biphoton emitted by two
//! four-level atoms, the optical elements acting on it (filter, beamsplitter,
//! projective detectors, a dephasing channel), and the complementarity
//! quantities that characterize the interferometer: predictability, fringe
//! visibility, which-path knowledge, Wootters concurrence, two-particle
//! visibility and quantum-eraser visibilities. Every quantity is computed two
//! ways — from a closed-form expression and from first-principles state
//! evolution — so the two routes can be audited against each other, both
//! exactly and through Monte Carlo coincidence counting.
//!
//! Module map:
//! * [`qstate`] — pure states, density operators, tensor products, partial
//!   traces and outcome branching over a small labeled Hilbert space.
//! * [`optics`] — optical elements and state preparation.
//! * [`measures`] — complementarity quantities and their closed forms.
//! * [`correlations`] — intensity correlations, phase scans and the Monte
//!   Carlo coincidence sampler.
//! * [`experiments`] — scenario orchestration, inequality audits, sweeps.
//! * [`verify`] — the built-in grid audit suite behind `eraser-sim verify`.
//! * [`cli`] — the command-line front end.

pub mod cli;
pub mod cmatrix;
pub mod correlations;
pub mod experiments;
pub mod measures;
pub mod optics;
pub mod qstate;
pub mod report;
pub mod verify;

mod error;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
