//! Numeric tolerance settings shared by every operation.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Tolerances for the numeric checks performed throughout the crate.
///
/// Every comparison tolerance defaults to `1e-8`. Rank decisions do not use a
/// fixed tolerance: they use [`Tolerances::rank_rel`] (default `1e-9`) times
/// the largest singular value or eigenvalue magnitude of the matrix at hand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct Tolerances<T> {
    /// Allowed deviation from exact symmetry in quadratic coefficients.
    pub sym: T,
    /// Allowed negative slack on eigenvalues in the convexity check.
    pub eig: T,
    /// Allowed deviation from orthonormality in subspace bases.
    pub orth: T,
    /// Distance bound for membership and subspace-equality tests.
    pub mem: T,
    /// Residual bound for consistency of stacked linear systems.
    pub cons: T,
    /// Slack on objective-value comparisons.
    pub val: T,
    /// Norm bound under which a gradient counts as vanishing.
    pub grad: T,
    /// Relative cutoff for rank decisions.
    pub rank_rel: T,
}

impl<T: Real> Tolerances<T> {
    /// All comparison tolerances set to `base`; the rank cutoff stays at its
    /// default `1e-9` relative value.
    pub fn with_base(base: T) -> Self {
        Tolerances {
            sym: base,
            eig: base,
            orth: base,
            mem: base,
            cons: base,
            val: base,
            grad: base,
            rank_rel: T::of(1e-9),
        }
    }

    /// Returns a copy with the membership tolerance replaced.
    pub fn with_mem(mut self, mem: T) -> Self {
        self.mem = mem;
        self
    }
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Self::with_base(T::of(1e-8))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_1e8_with_1e9_rank_cutoff() {
        let tol = Tolerances::<f64>::default();
        assert_eq!(tol.sym, 1e-8);
        assert_eq!(tol.eig, 1e-8);
        assert_eq!(tol.orth, 1e-8);
        assert_eq!(tol.mem, 1e-8);
        assert_eq!(tol.cons, 1e-8);
        assert_eq!(tol.val, 1e-8);
        assert_eq!(tol.grad, 1e-8);
        assert_eq!(tol.rank_rel, 1e-9);
    }

    #[test]
    fn base_override_leaves_rank_cutoff_alone() {
        let tol = Tolerances::<f64>::with_base(1e-6);
        assert_eq!(tol.mem, 1e-6);
        assert_eq!(tol.rank_rel, 1e-9);
    }
}
