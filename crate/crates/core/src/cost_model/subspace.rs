//! Affine subspaces `x0 + span(B)` with orthonormal `B`, used as exact
//! minimizer sets.

use nalgebra::{DMatrix, DVector};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;
use crate::tolerances::Tolerances;

/// An affine subspace of `R^d`, possibly empty.
///
/// A non-empty subspace is stored as an anchor point plus a `d x m` matrix of
/// orthonormal direction columns; `m = 0` means a single point. The empty
/// subspace keeps a zero anchor and no columns; its anchor and basis are not
/// exposed.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSubspace<T> {
    dim: usize,
    empty: bool,
    anchor: DVector<T>,
    basis: DMatrix<T>,
}

impl<T: Real> AffineSubspace<T> {
    /// The empty subset of `R^dim`.
    pub fn empty(dim: usize) -> Self {
        AffineSubspace {
            dim,
            empty: true,
            anchor: DVector::zeros(dim),
            basis: DMatrix::zeros(dim, 0),
        }
    }

    /// A single point.
    pub fn point(anchor: DVector<T>) -> Self {
        let dim = anchor.len();
        AffineSubspace {
            dim,
            empty: false,
            anchor,
            basis: DMatrix::zeros(dim, 0),
        }
    }

    /// All of `R^dim`.
    pub fn full(dim: usize) -> Self {
        AffineSubspace {
            dim,
            empty: false,
            anchor: DVector::zeros(dim),
            basis: DMatrix::identity(dim, dim),
        }
    }

    /// Builds a subspace from an anchor and a basis whose columns must
    /// already be orthonormal within `tol.orth`.
    pub fn new(anchor: DVector<T>, basis: DMatrix<T>, tol: &Tolerances<T>) -> Result<Self> {
        let dim = anchor.len();
        if basis.nrows() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: basis.nrows(),
            });
        }
        if basis.ncols() > dim {
            return Err(Error::invalid(
                "basis",
                format!("{} columns exceed ambient dimension {}", basis.ncols(), dim),
            ));
        }
        let defect = linalg::orthonormality_defect(&basis);
        if defect > tol.orth {
            return Err(Error::invalid(
                "basis",
                format!(
                    "columns are not orthonormal: defect {}",
                    defect.to_f64().unwrap_or(f64::NAN)
                ),
            ));
        }
        Ok(AffineSubspace {
            dim,
            empty: false,
            anchor,
            basis,
        })
    }

    /// Builds a subspace from an anchor and arbitrary spanning vectors,
    /// orthonormalizing (and deduplicating) the span.
    pub fn from_spanning(
        anchor: DVector<T>,
        spanning: DMatrix<T>,
        tol: &Tolerances<T>,
    ) -> Result<Self> {
        let dim = anchor.len();
        if spanning.nrows() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: spanning.nrows(),
            });
        }
        let basis = linalg::column_span(&spanning, tol.rank_rel);
        Ok(AffineSubspace {
            dim,
            empty: false,
            anchor,
            basis,
        })
    }

    /// Internal constructor for bases that are orthonormal by construction.
    pub(crate) fn from_parts(anchor: DVector<T>, basis: DMatrix<T>) -> Self {
        let dim = anchor.len();
        debug_assert_eq!(basis.nrows(), dim);
        AffineSubspace {
            dim,
            empty: false,
            anchor,
            basis,
        }
    }

    /// Ambient dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `true` for the empty subspace.
    pub fn is_empty(&self) -> bool {
        self.empty
    }

    /// Anchor point; `None` when empty.
    pub fn anchor(&self) -> Option<&DVector<T>> {
        if self.empty {
            None
        } else {
            Some(&self.anchor)
        }
    }

    /// Orthonormal direction basis; `None` when empty.
    pub fn basis(&self) -> Option<&DMatrix<T>> {
        if self.empty {
            None
        } else {
            Some(&self.basis)
        }
    }

    /// Dimension of the direction space; `None` when empty, `Some(0)` for a
    /// point.
    pub fn direction_dim(&self) -> Option<usize> {
        if self.empty {
            None
        } else {
            Some(self.basis.ncols())
        }
    }

    /// Euclidean distance from `x` to the subspace; `None` when empty.
    pub fn distance(&self, x: &DVector<T>) -> Result<Option<T>> {
        self.check_dim(x.len())?;
        if self.empty {
            return Ok(None);
        }
        let rel = x - &self.anchor;
        let proj = &self.basis * (self.basis.transpose() * &rel);
        Ok(Some((rel - proj).norm()))
    }

    /// Membership within `tol.mem`. The empty subspace contains nothing.
    pub fn contains(&self, x: &DVector<T>, tol: &Tolerances<T>) -> Result<bool> {
        Ok(self.distance(x)?.is_some_and(|d| d <= tol.mem))
    }

    fn check_dim(&self, actual: usize) -> Result<()> {
        if actual != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual,
            });
        }
        Ok(())
    }
}

/// Set equality of two affine subspaces within `tol.mem`.
///
/// Checks equal direction dimension, mutual anchor membership, and that
/// projecting each basis column onto the other direction space preserves its
/// norm (residual at most `tol.mem`).
pub fn subspace_equal<T: Real>(
    a: &AffineSubspace<T>,
    b: &AffineSubspace<T>,
    tol: &Tolerances<T>,
) -> Result<bool> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            actual: b.dim,
        });
    }
    if a.empty || b.empty {
        return Ok(a.empty == b.empty);
    }
    if a.basis.ncols() != b.basis.ncols() {
        return Ok(false);
    }
    if !b.contains(&a.anchor, tol)? || !a.contains(&b.anchor, tol)? {
        return Ok(false);
    }
    Ok(direction_contained(&a.basis, &b.basis, tol.mem)
        && direction_contained(&b.basis, &a.basis, tol.mem))
}

/// `true` when every column of `inner` lies in the span of `outer` (residual
/// after projection at most `tol`).
fn direction_contained<T: Real>(inner: &DMatrix<T>, outer: &DMatrix<T>, tol: T) -> bool {
    for col in 0..inner.ncols() {
        let u = inner.column(col);
        let proj = outer * (outer.transpose() * u);
        if (u - proj).norm() > tol {
            return false;
        }
    }
    true
}

/// Intersection of affine subspaces.
///
/// Each non-empty subspace contributes the linear constraints `C' x = C' x0`
/// where `C` spans the orthogonal complement of its direction space. The
/// stacked system is solved by minimum-norm least squares; a residual beyond
/// `tol.cons` (relative to the right-hand-side scale) means the intersection
/// is empty. Otherwise the result is the solution point plus the null space
/// of the stacked constraint matrix.
pub fn intersect<T: Real>(
    subspaces: &[AffineSubspace<T>],
    tol: &Tolerances<T>,
) -> Result<AffineSubspace<T>> {
    let first = subspaces
        .first()
        .ok_or(Error::EmptyList { what: "subspace" })?;
    let dim = first.dim;
    for s in subspaces {
        if s.dim != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: s.dim,
            });
        }
    }
    if subspaces.iter().any(|s| s.empty) {
        return Ok(AffineSubspace::empty(dim));
    }

    let mut rows: Vec<DMatrix<T>> = Vec::new();
    let mut rhs: Vec<T> = Vec::new();
    for s in subspaces {
        // Orthogonal complement of the direction space = null space of B'.
        let complement = linalg::null_space(&s.basis.transpose(), tol.rank_rel);
        if complement.ncols() == 0 {
            continue; // Full-space factor: no constraints.
        }
        let a_i = complement.transpose();
        let b_i = &a_i * &s.anchor;
        rhs.extend(b_i.iter().copied());
        rows.push(a_i);
    }
    if rows.is_empty() {
        return Ok(AffineSubspace::full(dim));
    }

    let total_rows: usize = rows.iter().map(|r| r.nrows()).sum();
    let mut a = DMatrix::zeros(total_rows, dim);
    let mut offset = 0;
    for r in &rows {
        a.view_mut((offset, 0), (r.nrows(), dim)).copy_from(r);
        offset += r.nrows();
    }
    let b = DVector::from_vec(rhs);

    let (x0, residual, null_basis) = linalg::min_norm_solve(&a, &b, tol.rank_rel);
    let scale = {
        let n = b.norm();
        if n > T::one() {
            n
        } else {
            T::one()
        }
    };
    if residual > tol.cons * scale {
        return Ok(AffineSubspace::empty(dim));
    }
    Ok(AffineSubspace::from_parts(x0, null_basis))
}

impl<T: Real + Serialize> Serialize for AffineSubspace<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut state = serializer.serialize_struct("AffineSubspace", 5)?;
        state.serialize_field("dim", &self.dim)?;
        state.serialize_field("empty", &self.empty)?;
        let anchor: Vec<T> = self.anchor.iter().copied().collect();
        state.serialize_field("anchor", &anchor)?;
        state.serialize_field("basis_cols", &self.basis.ncols())?;
        let mut basis = Vec::with_capacity(self.dim * self.basis.ncols());
        for i in 0..self.dim {
            for j in 0..self.basis.ncols() {
                basis.push(self.basis[(i, j)]);
            }
        }
        state.serialize_field("basis", &basis)?;
        state.end()
    }
}
