//! Query-based agnostic learning of multi-index models under the standard
//! Gaussian distribution.
//!
//! The library provides the building blocks of the learning pipeline:
//!
//! - [`gaussian`]: Hermite polynomials, Gauss-Hermite quadrature, subspaces,
//!   principal angles, and standard normal sampling.
//! - [`oracle`]: deterministic label oracles (synthetic targets plus fixed
//!   adversarial corruptions) with exact query/sample budget accounting.
//! - [`smoothing`]: the Ornstein-Uhlenbeck operator `T_rho` and the
//!   query-driven gradient simulator, with a sample-count planner.
//! - [`influence`]: gradient-outer-product influence matrices and
//!   eigenvalue-threshold subspace extraction.
//! - [`regression`]: Hermite-feature polynomial hypotheses with L2
//!   (least-squares) and L1 (linear-program) fitting back-ends.
//! - [`proper`]: epsilon-cover construction and ERM selection for proper
//!   learning of LTFs and ReLUs.
//! - [`pipeline`]: end-to-end learners, experiment orchestration, JSON
//!   configs and reports.

pub mod error;
pub mod gaussian;
pub mod influence;
pub mod metrics;
pub mod oracle;
pub mod pipeline;
pub mod proper;
pub mod regression;
pub mod rng;
pub mod smoothing;

pub use error::{Error, Result};
