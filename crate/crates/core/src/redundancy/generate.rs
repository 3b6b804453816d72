//! Seeded generators for benchmark cost profiles.
//!
//! All sampling happens in `f64` before conversion to the working scalar, so
//! a given seed produces the same underlying instance for every scalar type.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cost_model::QuadraticCost;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// A profile in which every agent's cost attains its minimum at one shared
/// point, so any subset pins down the same minimizer.
#[derive(Debug, Clone)]
pub struct RedundantInstance<T> {
    pub costs: Vec<QuadraticCost<T>>,
    /// The point every agent minimizes at.
    pub minimizer: DVector<T>,
}

/// A profile of strictly convex costs with pairwise-distinct minimizers.
#[derive(Debug, Clone)]
pub struct IndependentInstance<T> {
    pub costs: Vec<QuadraticCost<T>>,
    /// Per-agent minimizers, in agent order.
    pub minimizers: Vec<DVector<T>>,
}

/// A profile of rank-deficient convex costs whose argmin sets are affine
/// subspaces of positive dimension, all passing through one common point.
#[derive(Debug, Clone)]
pub struct SharedArgminInstance<T> {
    pub costs: Vec<QuadraticCost<T>>,
    /// A point contained in every agent's argmin set.
    pub common_point: DVector<T>,
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn spd_matrix(d: usize, ridge: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = gaussian_matrix(d, d, rng);
    let mut q = a.transpose() * &a;
    for i in 0..d {
        q[(i, i)] += ridge;
    }
    q
}

fn convert_matrix<T: Real>(m: &DMatrix<f64>) -> DMatrix<T> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| T::of(m[(i, j)]))
}

fn convert_vector<T: Real>(v: &DVector<f64>) -> DVector<T> {
    DVector::from_fn(v.len(), |i, _| T::of(v[i]))
}

/// Builds a cost `(1/2) x'Qx + c'x + r` from an `f64` curvature matrix and a
/// prescribed minimizer and minimum value: `c = -Q m`, `r` chosen so the
/// value at `m` equals `min_value`.
fn cost_with_minimum<T: Real>(
    q64: DMatrix<f64>,
    minimizer64: &DVector<f64>,
    min_value: f64,
) -> QuadraticCost<T> {
    let half_energy = 0.5 * (q64.clone() * minimizer64).dot(minimizer64);
    let c64 = -(&q64 * minimizer64);
    let q = convert_matrix::<T>(&q64);
    let c = convert_vector::<T>(&c64);
    let r = T::of(min_value + half_energy);
    QuadraticCost::new(q, c, r).expect("generated curvature matrix is symmetric")
}

/// A random strictly convex cost minimizing at `minimizer` with minimum value
/// `min_value`. Larger `ridge` values give better-conditioned curvature.
pub fn random_convex_cost<T: Real>(
    minimizer: &DVector<T>,
    min_value: f64,
    ridge: f64,
    rng: &mut ChaCha8Rng,
) -> QuadraticCost<T> {
    let d = minimizer.len();
    let q64 = spd_matrix(d, ridge, rng);
    let m64 = DVector::from_fn(d, |i, _| minimizer[i].to_f64().expect("finite minimizer"));
    cost_with_minimum(q64, &m64, min_value)
}

fn sample_point(d: usize, half_width: f64, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.random_range(-half_width..half_width))
}

/// Generates `n` strictly convex costs that all minimize at one shared random
/// point, each with minimum value `min_value`. Requires `n > 2t` so the
/// result is usable with a fault bound of `t`.
pub fn generate_redundant_instance<T: Real>(
    n: usize,
    t: usize,
    d: usize,
    seed: u64,
    min_value: f64,
) -> Result<RedundantInstance<T>> {
    if n <= 2 * t {
        return Err(Error::TooFewAgents { n, t });
    }
    if d == 0 {
        return Err(Error::invalid("d", "dimension must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let minimizer64 = sample_point(d, 5.0, &mut rng);
    let costs = (0..n)
        .map(|_| {
            let q64 = spd_matrix(d, 0.1, &mut rng);
            cost_with_minimum(q64, &minimizer64, min_value)
        })
        .collect();
    Ok(RedundantInstance {
        costs,
        minimizer: convert_vector(&minimizer64),
    })
}

/// Generates `n` strictly convex costs with pairwise-distinct minimizers.
/// With `nonneg` each cost has minimum value zero; otherwise minimum values
/// are sampled uniformly from `[-2, 2]`.
pub fn generate_independent_instance<T: Real>(
    n: usize,
    d: usize,
    seed: u64,
    nonneg: bool,
) -> Result<IndependentInstance<T>> {
    if n == 0 {
        return Err(Error::EmptyList { what: "cost" });
    }
    if d == 0 {
        return Err(Error::invalid("d", "dimension must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut minimizers64: Vec<DVector<f64>> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut point = sample_point(d, 5.0, &mut rng);
        let mut tries = 0;
        while minimizers64.iter().any(|m| (m - &point).norm() < 1e-2) {
            point = sample_point(d, 5.0, &mut rng);
            tries += 1;
            assert!(tries < 1000, "failed to sample distinct minimizers");
        }
        minimizers64.push(point);
    }
    let costs = minimizers64
        .iter()
        .map(|m64| {
            let q64 = spd_matrix(d, 0.1, &mut rng);
            let min_value = if nonneg {
                0.0
            } else {
                rng.random_range(-2.0..2.0)
            };
            cost_with_minimum(q64, m64, min_value)
        })
        .collect();
    Ok(IndependentInstance {
        costs,
        minimizers: minimizers64.iter().map(convert_vector).collect(),
    })
}

/// Generates `n` convex costs with rank-deficient curvature, so each argmin
/// is an affine subspace of dimension at least one, and all of them pass
/// through one shared random point. Each cost has minimum value zero.
///
/// `max_nullity` caps the per-agent argmin dimension; it must leave at least
/// rank one (`max_nullity < d`).
pub fn generate_shared_argmin_instance<T: Real>(
    n: usize,
    d: usize,
    seed: u64,
    max_nullity: usize,
) -> Result<SharedArgminInstance<T>> {
    if n == 0 {
        return Err(Error::EmptyList { what: "cost" });
    }
    if d < 2 {
        return Err(Error::invalid("d", "need dimension at least 2"));
    }
    if max_nullity == 0 || max_nullity >= d {
        return Err(Error::invalid("max_nullity", format!("must lie in 1..{d}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let common64 = sample_point(d, 5.0, &mut rng);
    let costs = (0..n)
        .map(|_| {
            let nullity = rng.random_range(1..=max_nullity);
            // d - nullity independent gaussian rows give rank d - nullity
            // almost surely, so the kernel has dimension exactly `nullity`.
            let a = gaussian_matrix(d - nullity, d, &mut rng);
            let q64 = a.transpose() * &a;
            cost_with_minimum(q64, &common64, 0.0)
        })
        .collect();
    Ok(SharedArgminInstance {
        costs,
        common_point: convert_vector(&common64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tolerances::Tolerances;

    fn tol() -> Tolerances<f64> {
        Tolerances::default()
    }

    #[test]
    fn redundant_instances_share_the_declared_minimizer() {
        let inst = generate_redundant_instance::<f64>(5, 2, 3, 42, 1.0).unwrap();
        assert_eq!(inst.costs.len(), 5);
        for cost in &inst.costs {
            let m = cost.minimize(&tol());
            assert!(m.finite);
            assert!((m.value - 1.0).abs() < 1e-8);
            assert!(m.argmin.contains(&inst.minimizer, &tol()).unwrap());
            assert_eq!(m.argmin.direction_dim(), Some(0));
        }
    }

    #[test]
    fn redundant_generation_rejects_too_many_faults() {
        assert!(generate_redundant_instance::<f64>(4, 2, 2, 0, 0.0).is_err());
    }

    #[test]
    fn independent_minimizers_are_pairwise_distinct() {
        let inst = generate_independent_instance::<f64>(6, 2, 7, true).unwrap();
        for i in 0..6 {
            let m = inst.costs[i].minimize(&tol());
            assert!(m.value.abs() < 1e-8);
            assert!(m.argmin.contains(&inst.minimizers[i], &tol()).unwrap());
            for j in (i + 1)..6 {
                assert!((&inst.minimizers[i] - &inst.minimizers[j]).norm() >= 1e-2);
            }
        }
    }

    #[test]
    fn signed_minimum_values_stay_in_range() {
        let inst = generate_independent_instance::<f64>(5, 2, 3, false).unwrap();
        for cost in &inst.costs {
            let m = cost.minimize(&tol());
            assert!(m.value >= -2.0 - 1e-9 && m.value <= 2.0 + 1e-9);
        }
    }

    #[test]
    fn shared_argmin_instances_have_flat_directions_through_the_common_point() {
        let inst = generate_shared_argmin_instance::<f64>(4, 3, 11, 2).unwrap();
        for cost in &inst.costs {
            let m = cost.minimize(&tol());
            assert!(m.finite);
            assert!(m.value.abs() < 1e-7);
            let dim = m.argmin.direction_dim().unwrap();
            assert!((1..=2).contains(&dim));
            assert!(m.argmin.contains(&inst.common_point, &tol()).unwrap());
        }
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let a = generate_redundant_instance::<f64>(5, 1, 2, 9, 0.0).unwrap();
        let b = generate_redundant_instance::<f64>(5, 1, 2, 9, 0.0).unwrap();
        assert_eq!(a.minimizer, b.minimizer);
        for (x, y) in a.costs.iter().zip(&b.costs) {
            assert_eq!(x.q(), y.q());
            assert_eq!(x.c(), y.c());
            assert_eq!(x.r(), y.r());
        }
        let c = generate_redundant_instance::<f64>(5, 1, 2, 10, 0.0).unwrap();
        assert_ne!(a.minimizer, c.minimizer);
    }

    #[test]
    fn random_convex_cost_honors_the_requested_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let target = DVector::from_row_slice(&[1.0, -2.0]);
        let cost = random_convex_cost::<f64>(&target, 3.0, 1.0, &mut rng);
        let m = cost.minimize(&tol());
        assert!((m.value - 3.0).abs() < 1e-8);
        assert!(m.argmin.contains(&target, &tol()).unwrap());
    }
}
