//! Dense linear-algebra helpers shared by the cost and subspace code.
//!
//! Everything here is deterministic: decompositions come from nalgebra's
//! pure-Rust routines, and eigenpairs are re-sorted into a canonical order so
//! repeated runs produce identical bytes.

use nalgebra::{DMatrix, DVector};

use crate::scalar::Real;

/// Symmetric eigendecomposition with eigenvalues sorted in descending order.
///
/// The input is symmetrized as `(M + M^T) / 2` first, so mild asymmetry from
/// accumulated round-off cannot destabilize the decomposition.
pub(crate) fn sym_eig<T: Real>(m: &DMatrix<T>) -> (Vec<T>, DMatrix<T>) {
    let d = m.nrows();
    debug_assert_eq!(d, m.ncols());
    let half = T::of(0.5);
    let sym = (m + m.transpose()).map(|v| v * half);
    let eig = sym.symmetric_eigen();

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let values: Vec<T> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(d, d);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Relative rank cutoff: `rel` times the largest magnitude in `values`.
pub(crate) fn rank_cutoff<T: Real>(values: &[T], rel: T) -> T {
    let max = values.iter().fold(
        T::zero(),
        |acc, v| if v.abs() > acc { v.abs() } else { acc },
    );
    rel * max
}

/// Orthonormal basis for the null space of `a`, as matrix columns.
///
/// Works for any row count, including zero rows (the null space is then all
/// of the ambient space). Singular values at or below `rel` times the largest
/// singular value count as zero.
pub(crate) fn null_space<T: Real>(a: &DMatrix<T>, rel: T) -> DMatrix<T> {
    let d = a.ncols();
    if d == 0 {
        return DMatrix::zeros(0, 0);
    }
    // Pad with zero rows so the thin SVD still exposes all d right singular
    // vectors.
    let rows = a.nrows().max(d);
    let mut padded = DMatrix::zeros(rows, d);
    if a.nrows() > 0 {
        padded.view_mut((0, 0), (a.nrows(), d)).copy_from(a);
    }
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("SVD was asked for V^T");
    let cutoff = rank_cutoff(svd.singular_values.as_slice(), rel);

    let null_idx: Vec<usize> = (0..d)
        .filter(|&i| svd.singular_values[i] <= cutoff)
        .collect();
    let mut basis = DMatrix::zeros(d, null_idx.len());
    for (col, &i) in null_idx.iter().enumerate() {
        basis.set_column(col, &v_t.row(i).transpose());
    }
    basis
}

/// Minimum-norm least-squares solution of `A x = b` together with the
/// residual norm `|A x - b|` and an orthonormal null-space basis of `A`.
pub(crate) fn min_norm_solve<T: Real>(
    a: &DMatrix<T>,
    b: &DVector<T>,
    rel: T,
) -> (DVector<T>, T, DMatrix<T>) {
    let d = a.ncols();
    debug_assert_eq!(a.nrows(), b.len());
    let rows = a.nrows().max(d);
    let mut padded = DMatrix::zeros(rows, d);
    let mut padded_b = DVector::zeros(rows);
    if a.nrows() > 0 {
        padded.view_mut((0, 0), (a.nrows(), d)).copy_from(a);
        padded_b.rows_mut(0, b.len()).copy_from(b);
    }
    let svd = padded.clone().svd(true, true);
    let u = svd.u.as_ref().expect("SVD was asked for U");
    let v_t = svd.v_t.as_ref().expect("SVD was asked for V^T");
    let cutoff = rank_cutoff(svd.singular_values.as_slice(), rel);

    let mut x = DVector::zeros(d);
    let mut null_idx = Vec::new();
    for i in 0..d {
        let sigma = svd.singular_values[i];
        if sigma > cutoff {
            let coeff = u.column(i).dot(&padded_b) / sigma;
            x += v_t.row(i).transpose() * coeff;
        } else {
            null_idx.push(i);
        }
    }
    let residual = if a.nrows() == 0 {
        T::zero()
    } else {
        (a * &x - b).norm()
    };
    let mut basis = DMatrix::zeros(d, null_idx.len());
    for (col, &i) in null_idx.iter().enumerate() {
        basis.set_column(col, &v_t.row(i).transpose());
    }
    (x, residual, basis)
}

/// Orthonormal basis for the column span of `m` (left singular vectors with
/// nonzero singular value).
pub(crate) fn column_span<T: Real>(m: &DMatrix<T>, rel: T) -> DMatrix<T> {
    let d = m.nrows();
    if m.ncols() == 0 {
        return DMatrix::zeros(d, 0);
    }
    let cols = m.ncols().min(d);
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("SVD was asked for U");
    let cutoff = rank_cutoff(svd.singular_values.as_slice(), rel);
    let keep: Vec<usize> = (0..cols)
        .filter(|&i| i < svd.singular_values.len() && svd.singular_values[i] > cutoff)
        .collect();
    let mut basis = DMatrix::zeros(d, keep.len());
    for (col, &i) in keep.iter().enumerate() {
        basis.set_column(col, &u.column(i));
    }
    basis
}

/// Largest absolute entry of `B^T B - I`, the orthonormality defect.
pub(crate) fn orthonormality_defect<T: Real>(basis: &DMatrix<T>) -> T {
    let m = basis.ncols();
    let gram = basis.transpose() * basis;
    let mut defect = T::zero();
    for i in 0..m {
        for j in 0..m {
            let target = if i == j { T::one() } else { T::zero() };
            let dev = (gram[(i, j)] - target).abs();
            if dev > defect {
                defect = dev;
            }
        }
    }
    defect
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, data)
    }

    #[test]
    fn sym_eig_sorts_descending() {
        let m = mat(2, 2, &[1.0, 0.0, 0.0, 3.0]);
        let (vals, vecs) = sym_eig(&m);
        assert!((vals[0] - 3.0).abs() < 1e-12);
        assert!((vals[1] - 1.0).abs() < 1e-12);
        // Reconstruction check.
        let lambda = DMatrix::from_diagonal(&DVector::from_vec(vals.clone()));
        let rec = &vecs * lambda * vecs.transpose();
        assert!((rec - m).norm() < 1e-12);
    }

    #[test]
    fn null_space_of_rank_one_projector() {
        let m = mat(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let ns = null_space(&m, 1e-9);
        assert_eq!(ns.ncols(), 1);
        assert!((ns.column(0)[0]).abs() < 1e-12);
        assert!((ns.column(0)[1].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn null_space_with_no_rows_is_everything() {
        let m = DMatrix::<f64>::zeros(0, 3);
        let ns = null_space(&m, 1e-9);
        assert_eq!(ns.ncols(), 3);
        assert!(orthonormality_defect(&ns) < 1e-12);
    }

    #[test]
    fn min_norm_solve_picks_shortest_solution() {
        // x_1 = 2 with x_2 free: minimum-norm solution is (2, 0).
        let a = mat(1, 2, &[1.0, 0.0]);
        let b = DVector::from_vec(vec![2.0]);
        let (x, res, ns) = min_norm_solve(&a, &b, 1e-9);
        assert!((x[0] - 2.0).abs() < 1e-12);
        assert!(x[1].abs() < 1e-12);
        assert!(res < 1e-12);
        assert_eq!(ns.ncols(), 1);
    }

    #[test]
    fn min_norm_solve_reports_inconsistency() {
        // x = 0 and x = 1 cannot both hold.
        let a = mat(2, 1, &[1.0, 1.0]);
        let b = DVector::from_vec(vec![0.0, 1.0]);
        let (_, res, _) = min_norm_solve(&a, &b, 1e-9);
        assert!(res > 0.5);
    }

    #[test]
    fn column_span_drops_dependent_columns() {
        let m = mat(3, 2, &[1.0, 2.0, 0.0, 0.0, 0.0, 0.0]);
        let span = column_span(&m, 1e-9);
        assert_eq!(span.ncols(), 1);
        assert!(orthonormality_defect(&span) < 1e-12);
    }
}
