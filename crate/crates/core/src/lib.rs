//! Barrier and entropic relaxations of classical and quantum multi-partite
//! optimal transport, solved through their duals.
//!
//! The crate provides:
//!
//! - dense tensor and Hermitian kernels ([`tensor`], [`herm`]) shared by all
//!   solvers: marginals, partial traces, Kronecker lifts, spectra, Cholesky
//!   log-determinants, and an isometric real parametrization of Hermitian
//!   matrices;
//! - a scalar root kernel ([`rootfind`]) for `sum_i 1/(x + a_i) = a`, the
//!   inner step of the generalized Sinkhorn rescaling;
//! - classical transport ([`classical`]): exact LP reference, log-domain
//!   entropic Sinkhorn, the barrier relaxation's generalized Sinkhorn, and
//!   bound-chain checks;
//! - quantum transport ([`quantum`]): coupling residuals, primal recovery
//!   `rho = eps * slack^{-1}`, a diagonal-pinching reduction to the classical
//!   problem, and quantum bound chains;
//! - augmented dual barrier oracles ([`barrier`]) with values, gradients,
//!   Hessians, canonical start points, containment radii, and a sampled
//!   complexity-parameter estimate;
//! - a generic equality-constrained central-path follower ([`ipm`]) with a
//!   damped-Newton phase, geometric path-parameter growth, primal recovery,
//!   and duality-gap certificates.

// Indexed loops mirror the subscript formulas they implement; negated
// comparisons are deliberate so that NaN fails the checks.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barrier;
pub mod classical;
pub mod driver;
pub mod error;
pub mod herm;
pub mod ipm;
pub mod linalg;
pub mod quantum;
pub mod rootfind;
pub mod simplex;
pub mod tensor;

pub use error::{OtError, Result};
