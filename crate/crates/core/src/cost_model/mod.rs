//! Cost functions and their exact minimizer sets.
//!
//! Costs are convex quadratics `f(x) = x'Qx/2 + c'x + r`; their argmin sets
//! are affine subspaces, which this module represents exactly (anchor plus
//! orthonormal direction basis) so that downstream subset searches can
//! intersect and compare them without approximation.

mod quadratic;
mod subspace;

pub use quadratic::{sum_costs, sum_costs_subset, MinResult, QuadraticCost};
pub use subspace::{intersect, subspace_equal, AffineSubspace};
