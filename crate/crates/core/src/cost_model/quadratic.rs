//! Convex quadratic costs `f(x) = x'Qx/2 + c'x + r` and their exact minima.

use nalgebra::{DMatrix, DVector};
use serde::de::Error as _;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cost_model::AffineSubspace;
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;
use crate::tolerances::Tolerances;

/// A quadratic cost on `R^d`.
///
/// `Q` must be symmetric; construction rejects anything beyond the symmetry
/// tolerance. Positive semidefiniteness is required of true (non-faulty)
/// costs and checked by [`QuadraticCost::validate`], but is deliberately not
/// enforced at construction: faulty agents may report non-convex quadratics,
/// and the solvers must be able to hold and then discard such reports.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticCost<T> {
    dim: usize,
    q: DMatrix<T>,
    c: DVector<T>,
    r: T,
}

/// Outcome of minimizing a cost or cost aggregate.
///
/// When `finite` is false the infimum is not attained (the cost is unbounded
/// below, or decreases forever along some direction); `value` is then zero
/// and `argmin` is the empty subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct MinResult<T> {
    /// Whether a finite minimum exists.
    pub finite: bool,
    /// The minimum value, meaningful only when `finite` is true.
    pub value: T,
    /// The set of minimizers, an affine subspace (empty when not finite).
    pub argmin: AffineSubspace<T>,
}

impl<T: Real> MinResult<T> {
    fn infinite(dim: usize) -> Self {
        MinResult {
            finite: false,
            value: T::zero(),
            argmin: AffineSubspace::empty(dim),
        }
    }
}

impl<T: Real> QuadraticCost<T> {
    /// Builds a cost with the default symmetry tolerance.
    pub fn new(q: DMatrix<T>, c: DVector<T>, r: T) -> Result<Self> {
        Self::new_with(q, c, r, &Tolerances::default())
    }

    /// Builds a cost, checking shapes and symmetry against `tol.sym`.
    pub fn new_with(q: DMatrix<T>, c: DVector<T>, r: T, tol: &Tolerances<T>) -> Result<Self> {
        let dim = c.len();
        if q.nrows() != dim || q.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: if q.nrows() != dim {
                    q.nrows()
                } else {
                    q.ncols()
                },
            });
        }
        let mut deviation = T::zero();
        for i in 0..dim {
            for j in (i + 1)..dim {
                let dev = (q[(i, j)] - q[(j, i)]).abs();
                if dev > deviation {
                    deviation = dev;
                }
            }
        }
        if deviation > tol.sym {
            return Err(Error::NotSymmetric {
                deviation: deviation.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(QuadraticCost { dim, q, c, r })
    }

    /// Ambient dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Quadratic coefficient matrix.
    pub fn q(&self) -> &DMatrix<T> {
        &self.q
    }

    /// Linear coefficient vector.
    pub fn c(&self) -> &DVector<T> {
        &self.c
    }

    /// Constant offset.
    pub fn r(&self) -> T {
        self.r
    }

    /// Evaluates `x'Qx/2 + c'x + r`.
    pub fn evaluate(&self, x: &DVector<T>) -> Result<T> {
        self.check_dim(x.len())?;
        let qx = &self.q * x;
        Ok(x.dot(&qx) * T::of(0.5) + self.c.dot(x) + self.r)
    }

    /// Evaluates the gradient `Qx + c`.
    pub fn gradient(&self, x: &DVector<T>) -> Result<DVector<T>> {
        self.check_dim(x.len())?;
        Ok(&self.q * x + &self.c)
    }

    /// Smallest eigenvalue of `Q`.
    pub fn min_eigenvalue(&self) -> T {
        let (vals, _) = linalg::sym_eig(&self.q);
        vals.last().copied().unwrap_or_else(T::zero)
    }

    /// `true` when `Q` has no eigenvalue below `-tol.eig`.
    pub fn is_positive_semidefinite(&self, tol: &Tolerances<T>) -> bool {
        self.dim == 0 || self.min_eigenvalue() >= -tol.eig
    }

    /// Checks the invariants required of a true cost: symmetry (already
    /// enforced at construction) and positive semidefiniteness.
    pub fn validate(&self, tol: &Tolerances<T>) -> Result<()> {
        if !self.is_positive_semidefinite(tol) {
            return Err(Error::NotPositiveSemidefinite {
                eigenvalue: self.min_eigenvalue().to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(())
    }

    /// Exact minimization.
    ///
    /// A finite minimum exists iff `Q` has no negative eigenvalue beyond the
    /// rank cutoff and `c` lies in the range of `Q` (within `tol.cons`
    /// relative to the scale of `c`). The argmin is then the affine subspace
    /// `x0 + null(Q)` where `x0` is the minimum-norm solution of `Qx = -c`,
    /// reported with an orthonormal null-space basis.
    pub fn minimize(&self, tol: &Tolerances<T>) -> MinResult<T> {
        let d = self.dim;
        let (vals, vecs) = linalg::sym_eig(&self.q);
        let cutoff = linalg::rank_cutoff(&vals, tol.rank_rel);
        if vals.iter().any(|&l| l < -cutoff) {
            return MinResult::infinite(d);
        }

        let mut anchor = DVector::zeros(d);
        let mut null_idx = Vec::new();
        let mut null_energy = T::zero();
        for (i, &val) in vals.iter().enumerate() {
            let beta = vecs.column(i).dot(&self.c);
            if val.abs() > cutoff {
                anchor -= vecs.column(i) * (beta / val);
            } else {
                null_idx.push(i);
                null_energy += beta * beta;
            }
        }
        let scale = {
            let n = self.c.norm();
            if n > T::one() {
                n
            } else {
                T::one()
            }
        };
        if null_energy.sqrt() > tol.cons * scale {
            return MinResult::infinite(d);
        }

        let mut basis = DMatrix::zeros(d, null_idx.len());
        for (col, &i) in null_idx.iter().enumerate() {
            basis.set_column(col, &vecs.column(i));
        }
        let value = self
            .evaluate(&anchor)
            .expect("anchor has the cost's own dimension");
        MinResult {
            finite: true,
            value,
            argmin: AffineSubspace::from_parts(anchor, basis),
        }
    }

    /// The cost scaled by `lambda` (scales `Q`, `c`, and `r`).
    pub fn scaled(&self, lambda: T) -> Self {
        QuadraticCost {
            dim: self.dim,
            q: &self.q * lambda,
            c: &self.c * lambda,
            r: self.r * lambda,
        }
    }

    /// The cost composed with a shift: returns `g` with `g(x) = f(x - delta)`.
    pub fn shifted(&self, delta: &DVector<T>) -> Result<Self> {
        self.check_dim(delta.len())?;
        let q_delta = &self.q * delta;
        let r = self.r + delta.dot(&q_delta) * T::of(0.5) - self.c.dot(delta);
        Ok(QuadraticCost {
            dim: self.dim,
            q: self.q.clone(),
            c: &self.c - q_delta,
            r,
        })
    }

    /// The cost with `dr` added to the constant offset.
    pub fn add_constant(&self, dr: T) -> Self {
        QuadraticCost {
            dim: self.dim,
            q: self.q.clone(),
            c: self.c.clone(),
            r: self.r + dr,
        }
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

/// Componentwise sum of costs. Errors on an empty list or mismatched
/// dimensions.
pub fn sum_costs<T: Real>(costs: &[QuadraticCost<T>]) -> Result<QuadraticCost<T>> {
    let first = costs.first().ok_or(Error::EmptyList { what: "cost" })?;
    let dim = first.dim;
    let mut q = first.q.clone();
    let mut c = first.c.clone();
    let mut r = first.r;
    for cost in &costs[1..] {
        if cost.dim != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: cost.dim,
            });
        }
        q += &cost.q;
        c += &cost.c;
        r += cost.r;
    }
    Ok(QuadraticCost { dim, q, c, r })
}

/// Sum of the costs selected by `subset` (indices into `costs`).
pub fn sum_costs_subset<T: Real>(
    costs: &[QuadraticCost<T>],
    subset: &[usize],
) -> Result<QuadraticCost<T>> {
    let selected: Vec<QuadraticCost<T>> = subset.iter().map(|&i| costs[i].clone()).collect();
    sum_costs(&selected)
}

impl<T: Real + Serialize> Serialize for QuadraticCost<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut state = serializer.serialize_struct("QuadraticCost", 4)?;
        state.serialize_field("dim", &self.dim)?;
        let mut q_rows = Vec::with_capacity(self.dim * self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                q_rows.push(self.q[(i, j)]);
            }
        }
        state.serialize_field("Q", &q_rows)?;
        let c: Vec<T> = self.c.iter().copied().collect();
        state.serialize_field("c", &c)?;
        state.serialize_field("r", &self.r)?;
        state.end()
    }
}

#[derive(Deserialize)]
#[serde(bound(deserialize = "T: Deserialize<'de>"))]
struct RawQuadraticCost<T> {
    dim: usize,
    #[serde(rename = "Q")]
    q: Vec<T>,
    c: Vec<T>,
    r: T,
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for QuadraticCost<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = RawQuadraticCost::<T>::deserialize(deserializer)?;
        if raw.q.len() != raw.dim * raw.dim {
            return Err(D::Error::custom(format!(
                "Q must hold dim*dim = {} entries in row-major order, got {}",
                raw.dim * raw.dim,
                raw.q.len()
            )));
        }
        if raw.c.len() != raw.dim {
            return Err(D::Error::custom(format!(
                "c must hold dim = {} entries, got {}",
                raw.dim,
                raw.c.len()
            )));
        }
        let q = DMatrix::from_row_slice(raw.dim, raw.dim, &raw.q);
        let c = DVector::from_vec(raw.c);
        QuadraticCost::new(q, c, raw.r).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn cost(dim: usize, q: &[f64], c: &[f64], r: f64) -> QuadraticCost<f64> {
        QuadraticCost::new(
            DMatrix::from_row_slice(dim, dim, q),
            DVector::from_row_slice(c),
            r,
        )
        .unwrap()
    }

    fn tol() -> Tolerances<f64> {
        Tolerances::default()
    }

    /// Plain-loop evaluation used as an independent check on `evaluate`.
    fn poly_eval(q: &[Vec<f64>], c: &[f64], r: f64, x: &[f64]) -> f64 {
        let d = x.len();
        let mut quad = 0.0;
        for i in 0..d {
            for j in 0..d {
                quad += q[i][j] * x[i] * x[j];
            }
        }
        let mut lin = 0.0;
        for i in 0..d {
            lin += c[i] * x[i];
        }
        0.5 * quad + lin + r
    }

    #[test]
    fn evaluate_identity_at_origin_is_zero() {
        let f = cost(2, &[1.0, 0.0, 0.0, 1.0], &[0.0, 0.0], 0.0);
        let x = DVector::from_row_slice(&[0.0, 0.0]);
        assert_eq!(f.evaluate(&x).unwrap(), 0.0);
    }

    #[test]
    fn evaluate_shifted_parabola_at_three() {
        // x^2 - 2x + 1 = (x - 1)^2, so f(3) = 4.
        let f = cost(1, &[2.0], &[-2.0], 1.0);
        let x = DVector::from_row_slice(&[3.0]);
        assert_eq!(f.evaluate(&x).unwrap(), 4.0);
    }

    #[test]
    fn evaluate_matches_independent_polynomial_evaluation() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..20 {
            let d = 3;
            let mut flat = vec![0.0; d * d];
            for i in 0..d {
                for j in i..d {
                    let v: f64 = rng.random_range(-2.0..2.0);
                    flat[i * d + j] = v;
                    flat[j * d + i] = v;
                }
            }
            let q_rows: Vec<Vec<f64>> = flat.chunks(d).map(|row| row.to_vec()).collect();
            let c: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let r: f64 = rng.random_range(-1.0..1.0);
            let f = cost(d, &flat, &c, r);
            for _ in 0..5 {
                let x: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
                let expected = poly_eval(&q_rows, &c, r, &x);
                let got = f.evaluate(&DVector::from_row_slice(&x)).unwrap();
                assert!((got - expected).abs() <= 1e-12 * expected.abs().max(1.0));
            }
        }
    }

    #[test]
    fn evaluate_rejects_wrong_dimension() {
        let f = cost(2, &[1.0, 0.0, 0.0, 1.0], &[0.0, 0.0], 0.0);
        let x = DVector::from_row_slice(&[1.0]);
        assert!(matches!(
            f.evaluate(&x),
            Err(Error::DimensionMismatch {
                expected: 2,
                actual: 1
            })
        ));
    }

    #[test]
    fn gradient_of_linear_tilt_is_the_tilt() {
        let f = cost(2, &[1.0, 0.0, 0.0, 1.0], &[1.0, 2.0], 0.0);
        let g = f.gradient(&DVector::from_row_slice(&[0.0, 0.0])).unwrap();
        assert_eq!(g.as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn gradient_vanishes_at_the_minimizer() {
        let f = cost(2, &[2.0, 0.5, 0.5, 3.0], &[1.0, -2.0], 0.7);
        let m = f.minimize(&tol());
        assert!(m.finite);
        let anchor = m.argmin.anchor().unwrap();
        assert!(f.gradient(anchor).unwrap().norm() <= tol().grad);
    }

    #[test]
    fn minimize_strictly_convex_gives_a_point() {
        let f = cost(2, &[1.0, 0.0, 0.0, 1.0], &[0.0, 0.0], 5.0);
        let m = f.minimize(&tol());
        assert!(m.finite);
        assert_eq!(m.value, 5.0);
        assert_eq!(m.argmin.direction_dim(), Some(0));
        let anchor = m.argmin.anchor().unwrap();
        assert!(anchor.norm() < 1e-12);
    }

    #[test]
    fn minimize_degenerate_axis_gives_a_line() {
        let f = cost(2, &[1.0, 0.0, 0.0, 0.0], &[0.0, 0.0], 0.0);
        let m = f.minimize(&tol());
        assert!(m.finite);
        assert_eq!(m.argmin.direction_dim(), Some(1));
        // The whole x2-axis minimizes.
        let on_axis = DVector::from_row_slice(&[0.0, 7.0]);
        assert!(m.argmin.contains(&on_axis, &tol()).unwrap());
        let off_axis = DVector::from_row_slice(&[0.5, 0.0]);
        assert!(!m.argmin.contains(&off_axis, &tol()).unwrap());
    }

    #[test]
    fn minimize_reports_unattained_minimum_for_null_space_tilt() {
        let f = cost(2, &[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0], 0.0);
        let m = f.minimize(&tol());
        assert!(!m.finite);
        assert!(m.argmin.is_empty());
    }

    #[test]
    fn minimize_zero_quadratic_is_constant_or_unbounded() {
        let flat = cost(2, &[0.0; 4], &[0.0, 0.0], 3.5);
        let m = flat.minimize(&tol());
        assert!(m.finite);
        assert_eq!(m.value, 3.5);
        assert_eq!(m.argmin.direction_dim(), Some(2));

        let tilted = cost(2, &[0.0; 4], &[1.0, 0.0], 3.5);
        assert!(!tilted.minimize(&tol()).finite);
    }

    #[test]
    fn minimize_concave_direction_is_unbounded() {
        let f = cost(1, &[-1.0], &[0.0], 0.0);
        assert!(!f.minimize(&tol()).finite);
    }

    #[test]
    fn minimize_anchor_is_minimum_norm() {
        // Solutions of diag(1,0) x = (2,0) are x1 = 2, x2 free.
        let f = cost(2, &[1.0, 0.0, 0.0, 0.0], &[-2.0, 0.0], 0.0);
        let m = f.minimize(&tol());
        assert!(m.finite);
        let anchor = m.argmin.anchor().unwrap();
        assert!((anchor[0] - 2.0).abs() < 1e-12);
        assert!(anchor[1].abs() < 1e-12);
    }

    #[test]
    fn minimize_value_is_attained_at_anchor() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..20 {
            let d = 3;
            let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
            let q = a.transpose() * &a + DMatrix::identity(d, d) * 0.1;
            let c = DVector::from_fn(d, |_, _| rng.random_range(-2.0..2.0));
            let f = QuadraticCost::new(q, c, rng.random_range(-1.0..1.0)).unwrap();
            let m = f.minimize(&tol());
            assert!(m.finite);
            let at_anchor = f.evaluate(m.argmin.anchor().unwrap()).unwrap();
            assert!((at_anchor - m.value).abs() <= tol().val);
            // Spot-check global optimality.
            for _ in 0..100 {
                let x = DVector::from_fn(d, |_, _| rng.random_range(-5.0..5.0));
                assert!(f.evaluate(&x).unwrap() >= m.value - tol().val);
            }
        }
    }

    #[test]
    fn construction_rejects_asymmetry() {
        let q = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let c = DVector::from_row_slice(&[0.0, 0.0]);
        assert!(matches!(
            QuadraticCost::new(q, c, 0.0),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn construction_rejects_mismatched_shapes() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let c = DVector::from_row_slice(&[0.0, 0.0, 0.0]);
        assert!(matches!(
            QuadraticCost::new(q, c, 0.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn validate_flags_indefinite_quadratics() {
        let f = cost(2, &[1.0, 0.0, 0.0, -2.0], &[0.0, 0.0], 0.0);
        assert!(matches!(
            f.validate(&tol()),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
        let g = cost(2, &[1.0, 0.0, 0.0, 0.0], &[0.0, 0.0], 0.0);
        assert!(g.validate(&tol()).is_ok());
    }

    #[test]
    fn sum_of_two_parabolas_has_midpoint_minimum() {
        // x^2 + (x-1)^2 has its minimum 0.5 at x = 0.5.
        let f1 = cost(1, &[2.0], &[0.0], 0.0);
        let f2 = cost(1, &[2.0], &[-2.0], 1.0);
        let sum = sum_costs(&[f1, f2]).unwrap();
        let m = sum.minimize(&tol());
        assert!(m.finite);
        assert!((m.value - 0.5).abs() < 1e-12);
        let anchor = m.argmin.anchor().unwrap();
        assert!((anchor[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sum_costs_rejects_empty_input() {
        let empty: Vec<QuadraticCost<f64>> = Vec::new();
        assert!(matches!(
            sum_costs(&empty),
            Err(Error::EmptyList { what: "cost" })
        ));
    }

    #[test]
    fn scaled_and_shifted_match_direct_evaluation() {
        let mut rng = StdRng::seed_from_u64(3);
        let f = cost(2, &[2.0, 0.5, 0.5, 1.0], &[1.0, -1.0], 0.3);
        let lambda = 2.5;
        let delta = DVector::from_row_slice(&[0.7, -1.2]);
        let scaled = f.scaled(lambda);
        let shifted = f.shifted(&delta).unwrap();
        for _ in 0..20 {
            let x = DVector::from_fn(2, |_, _| rng.random_range(-3.0..3.0));
            let fx = f.evaluate(&x).unwrap();
            assert!((scaled.evaluate(&x).unwrap() - lambda * fx).abs() < 1e-12);
            let expected = f.evaluate(&(&x - &delta)).unwrap();
            assert!((shifted.evaluate(&x).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn json_uses_row_major_q() {
        let f = cost(2, &[1.0, 2.0, 2.0, 4.0], &[0.5, -0.5], 1.5);
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(
            json,
            r#"{"dim":2,"Q":[1.0,2.0,2.0,4.0],"c":[0.5,-0.5],"r":1.5}"#
        );
        let back: QuadraticCost<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn json_rejects_asymmetric_or_misshapen_input() {
        let asym = r#"{"dim":2,"Q":[0.0,1.0,0.0,0.0],"c":[0.0,0.0],"r":0.0}"#;
        assert!(serde_json::from_str::<QuadraticCost<f64>>(asym).is_err());
        let short = r#"{"dim":2,"Q":[1.0,0.0,1.0],"c":[0.0,0.0],"r":0.0}"#;
        assert!(serde_json::from_str::<QuadraticCost<f64>>(short).is_err());
        let bad_c = r#"{"dim":2,"Q":[1.0,0.0,0.0,1.0],"c":[0.0],"r":0.0}"#;
        assert!(serde_json::from_str::<QuadraticCost<f64>>(bad_c).is_err());
    }
}
