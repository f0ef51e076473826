//! # unifit
//!
//! Learning partially unitary operators between Hilbert spaces from
//! phase-stripped observation pairs.
//!
//! Given weighted observations `psi_l -> phi_l` whose coefficient vectors are
//! known only up to a sign (the real-space stand-in for a random quantum
//! phase), the crate maximizes the total fidelity
//!
//! ```text
//!     F = sum_l w_l |<phi_l| U |psi_l>|^2
//! ```
//!
//! over `d x n` matrices `u` with orthonormal rows (`u u^T = I_d`, partial
//! unitarity; plain unitarity when `d = n`). Phase invariance makes any
//! regression between the two sides impossible; the quadratic form kernel
//! `S_{jk;j'k'}`, which the signs cancel out of, is the only usable statistic.
//!
//! The optimizer treats the stationarity condition `S u = lambda u` — an
//! eigenvalue-like equation whose eigenvector is an isometry and whose
//! eigenvalue is a symmetric `d x d` matrix — by iterating a triple
//! (state, multipliers, linear constraints): each step solves one reduced
//! generalized eigenproblem, adjusts the selected eigenstate to an isometry,
//! and rebuilds multipliers and constraints from it. See [`solver`].
//!
//! ## Layout
//!
//! * [`linalg`] — symmetric eigenproblems, PSD inverse square root,
//!   constraint elimination;
//! * [`model`] — domain types (samples, tensors, isometries, reports);
//! * [`tensor`] — Gram matrices, regularization, fidelity tensors,
//!   probability evaluation;
//! * [`solver`] — the constrained iteration and the vanilla baseline;
//! * [`experiments`] — generators and end-to-end drivers (dynamics recovery,
//!   polynomial mapping, fidelity sweep, scalar interpolation);
//! * [`cli`] — the `unifit` binary surface and its file formats.
//!
//! The runnable `examples/` directory exercises each capability end to end;
//! start with `examples/recover_rotation.rs`.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod solver;
pub mod tensor;

pub use error::{Error, Result};
pub use linalg::{EigenDecomposition, EliminationBasis, SymMatrix};
pub use model::{
    Channel, ConstraintSet, FidelityTensor, IterationRecord, LagrangeMultipliers,
    ObservationRecord, ObservationSample, PartialIsometry, QChoice, SolverConfig, SolverReport,
};
pub use solver::{solve, solve_vanilla};
