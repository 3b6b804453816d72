//! Byzantine-resilient collaborative optimization over convex quadratic costs.
//!
//! A server collects cost reports (or gradient streams) from `n` agents, up to
//! `t` of which may be faulty and report arbitrary data. This crate provides
//! the pieces needed to study and exercise that setting at desk scale:
//!
//! - [`cost_model`]: convex quadratic costs with exact minimizer sets
//!   represented as affine subspaces;
//! - [`redundancy`]: checkers and generators for cost redundancy across agent
//!   subsets, the structural property that makes exact resilience possible;
//! - [`solvers`]: full-function solvers (subset-consistency search, ranked
//!   subset selection with pre-processing and normalization);
//! - [`cgc`]: comparative gradient clipping for iterative descent against
//!   adversarial gradient streams;
//! - [`adversary_sim`]: deterministic scenario construction and adversarial
//!   executions;
//! - [`oracle`]: independent verification routines (exhaustive subset checks,
//!   grid search, finite differences) kept free of the closed-form machinery.
//!
//! Admissibility: every cost profile accepted as ground truth must attain a
//! finite minimum on each non-empty subset aggregate. Diagnostics refer to
//! this precondition as "Assumption 1".
//!
//! All numeric code is generic over the scalar type through [`Real`];
//! concrete `f64`/`f32` aliases are exported at the crate root.

pub mod adversary_sim;
pub mod cgc;
pub mod cost_model;
pub mod error;
pub mod oracle;
pub mod redundancy;
pub mod solvers;
pub mod tolerances;

mod linalg;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;
pub use tolerances::Tolerances;

/// `f64` specializations of the main entry types.
pub type QuadraticCost64 = cost_model::QuadraticCost<f64>;
pub type AffineSubspace64 = cost_model::AffineSubspace<f64>;
pub type MinResult64 = cost_model::MinResult<f64>;
pub type Tolerances64 = Tolerances<f64>;
pub type ReportedProfile64 = solvers::ReportedProfile<f64>;
pub type SolverOutput64 = solvers::SolverOutput<f64>;
pub type Scenario64 = adversary_sim::Scenario<f64>;
pub type CgcConfig64 = cgc::CgcConfig<f64>;

/// `f32` specializations of the main entry types.
pub type QuadraticCost32 = cost_model::QuadraticCost<f32>;
pub type AffineSubspace32 = cost_model::AffineSubspace<f32>;
pub type MinResult32 = cost_model::MinResult<f32>;
pub type Tolerances32 = Tolerances<f32>;
