//! Quantum measurements as blockwise probability vectors and their discrete
//! dynamics under blockwise stochastic and bistochastic matrices.
//!
//! A measurement (POVM) is a vector of PSD effects summing to identity; a
//! blockwise stochastic matrix is a grid of PSD blocks whose block-columns
//! each sum to identity, and acts on measurements through the blockwise
//! product `(S*P)_i = Σ_j √P_j S_ij √P_j`. This crate provides:
//!
//! - [`linalg`]: Hermitian eigendecompositions, PSD roots, support
//!   pseudo-inverses and Löwner comparisons;
//! - [`povm`]: validated domain types, canonical constructions and the qubit
//!   cone geometry, plus the JSON encodings used by the CLI;
//! - [`dynamics`]: blockwise products, sequential products, conditional
//!   two-stage measurement simulation and circulant reachability;
//! - [`majorization`]: sortability, operator and classical majorization,
//!   entropy monotones and the cumulative-norm profile checks;
//! - [`compat`]: joint-measurability witnesses in both directions and an
//!   alternating-projection feasibility decision;
//! - [`sampling`]: seeded, reproducible random effects, measurements, block
//!   matrices and states;
//! - [`experiments`]: Monte Carlo volume estimates, fixed-point dynamics,
//!   conjecture sweeps and monotone trajectories.

pub mod compat;
pub mod dynamics;
pub mod experiments;
pub mod linalg;
pub mod majorization;
pub mod povm;
pub mod sampling;
