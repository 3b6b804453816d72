//! Independent verification routines: resilience checks by exhaustive subset
//! enumeration, exhaustive grid search, and finite differences.
//!
//! The grid and finite-difference routines deliberately avoid the exact
//! eigendecomposition path used by [`crate::cost_model`], so results can be
//! cross-checked between two unrelated implementations.

use std::collections::BTreeSet;

use itertools::Itertools;
use nalgebra::DVector;
use serde::Serialize;

use crate::cost_model::{sum_costs_subset, QuadraticCost};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tolerances::Tolerances;

/// Exhaustive-grid dimension ceiling.
pub const GRID_MAX_DIM: usize = 3;

const GRID_MAX_POINTS: usize = 100_000_000;

/// Verdict of the resilience checks for one solver output.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Serialize"))]
pub struct ResilienceReport<T> {
    /// Identifier of the scenario the output came from.
    pub scenario: String,
    /// Whether the output minimizes the aggregate true cost of the non-faulty
    /// agents.
    pub t_resilient: bool,
    /// Smallest `u` for which the output is weakly resilient, if any.
    pub weak_resilient_u: Option<usize>,
    /// Witness subset found at that smallest `u`.
    pub witness_s_hat: Option<Vec<usize>>,
    /// Tolerances the checks ran with.
    pub tolerances: Tolerances<T>,
}

fn non_faulty_ids(n: usize, faulty: &BTreeSet<usize>) -> Vec<usize> {
    (0..n).filter(|i| !faulty.contains(i)).collect()
}

/// `true` when `x_hat` minimizes the aggregate true cost of the non-faulty
/// agents (membership within `tol.mem`).
pub fn verify_t_resilience<T: Real>(
    x_hat: &DVector<T>,
    true_costs: &[QuadraticCost<T>],
    faulty: &BTreeSet<usize>,
    tol: &Tolerances<T>,
) -> Result<bool> {
    let honest = non_faulty_ids(true_costs.len(), faulty);
    if honest.is_empty() {
        return Err(Error::EmptyList { what: "cost" });
    }
    let aggregate = sum_costs_subset(true_costs, &honest)?;
    let min = aggregate.minimize(tol);
    if !min.finite {
        return Err(Error::UnboundedSum { agents: honest });
    }
    min.argmin.contains(x_hat, tol)
}

/// Checks weak resilience with `u` missing agents: searches for a subset of
/// the non-faulty agents, short by at most `u`, whose aggregate true cost at
/// `x_hat` does not exceed the full non-faulty aggregate minimum (slack
/// `tol.val`).
///
/// Subsets are enumerated largest-first and lexicographically within each
/// size, so the returned witness is deterministic. The empty subset sums to
/// zero, which makes `u >= |S|` vacuously satisfiable for non-negative costs.
pub fn verify_weak_resilience<T: Real>(
    x_hat: &DVector<T>,
    true_costs: &[QuadraticCost<T>],
    faulty: &BTreeSet<usize>,
    u: usize,
    tol: &Tolerances<T>,
) -> Result<(bool, Option<Vec<usize>>)> {
    let honest = non_faulty_ids(true_costs.len(), faulty);
    if honest.is_empty() {
        return Err(Error::EmptyList { what: "cost" });
    }
    let aggregate = sum_costs_subset(true_costs, &honest)?;
    let min = aggregate.minimize(tol);
    if !min.finite {
        return Err(Error::UnboundedSum { agents: honest });
    }
    let bound = min.value + tol.val;

    let smallest = honest.len().saturating_sub(u);
    for size in (smallest..=honest.len()).rev() {
        for subset in honest.iter().copied().combinations(size) {
            let mut total = T::zero();
            for &i in &subset {
                total += true_costs[i].evaluate(x_hat)?;
            }
            if total <= bound {
                return Ok((true, Some(subset)));
            }
        }
    }
    Ok((false, None))
}

/// Smallest `u` for which [`verify_weak_resilience`] holds, or `None` if no
/// `u` up to the non-faulty count works.
pub fn minimal_weak_u<T: Real>(
    x_hat: &DVector<T>,
    true_costs: &[QuadraticCost<T>],
    faulty: &BTreeSet<usize>,
    tol: &Tolerances<T>,
) -> Result<Option<usize>> {
    let honest_count = non_faulty_ids(true_costs.len(), faulty).len();
    for u in 0..=honest_count {
        let (ok, _) = verify_weak_resilience(x_hat, true_costs, faulty, u, tol)?;
        if ok {
            return Ok(Some(u));
        }
    }
    Ok(None)
}

/// Runs both resilience checks and assembles a report.
pub fn resilience_report<T: Real>(
    scenario: impl Into<String>,
    x_hat: &DVector<T>,
    true_costs: &[QuadraticCost<T>],
    faulty: &BTreeSet<usize>,
    tol: &Tolerances<T>,
) -> Result<ResilienceReport<T>> {
    let t_resilient = verify_t_resilience(x_hat, true_costs, faulty, tol)?;
    let weak_resilient_u = minimal_weak_u(x_hat, true_costs, faulty, tol)?;
    let witness_s_hat = match weak_resilient_u {
        Some(u) => verify_weak_resilience(x_hat, true_costs, faulty, u, tol)?.1,
        None => None,
    };
    Ok(ResilienceReport {
        scenario: scenario.into(),
        t_resilient,
        weak_resilient_u,
        witness_s_hat,
        tolerances: *tol,
    })
}

/// Exhaustive grid minimization of `f` over the box `[lo, hi]` with the given
/// grid spacing. Supports up to three dimensions.
///
/// Returns the best grid point and its value. When the best point lies on the
/// box boundary the true minimizer may sit outside the box, so the search
/// fails with a "box too small" error instead of returning a misleading
/// answer. Ties keep the first point in scan order.
pub fn grid_minimize<T: Real>(
    f: impl Fn(&DVector<T>) -> T,
    lo: &DVector<T>,
    hi: &DVector<T>,
    resolution: T,
) -> Result<(DVector<T>, T)> {
    let d = lo.len();
    if hi.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: hi.len(),
        });
    }
    if d == 0 || d > GRID_MAX_DIM {
        return Err(Error::GridDimTooLarge {
            dim: d,
            max: GRID_MAX_DIM,
        });
    }
    if resolution <= T::zero() || !resolution.finite() {
        return Err(Error::invalid("resolution", "must be positive and finite"));
    }

    let mut counts = Vec::with_capacity(d);
    let mut total: usize = 1;
    for j in 0..d {
        let span = hi[j] - lo[j];
        if span <= T::zero() || !span.finite() {
            return Err(Error::invalid(
                "box",
                format!("bounds must be finite with hi > lo in dimension {j}"),
            ));
        }
        // Round-aware step count so e.g. span 10 at spacing 1e-3 lands on
        // exactly 10001 points despite representation error.
        let raw = (span / resolution).to_f64().unwrap_or(0.0);
        let steps = (raw + 1e-9).floor() as usize;
        counts.push(steps + 1);
        total = total.saturating_mul(steps + 1);
    }
    if total > GRID_MAX_POINTS {
        return Err(Error::invalid(
            "resolution",
            format!("grid would hold {total} points (limit {GRID_MAX_POINTS})"),
        ));
    }

    let mut idx = vec![0usize; d];
    let mut x = DVector::zeros(d);
    let mut best: Option<(Vec<usize>, DVector<T>, T)> = None;
    loop {
        for j in 0..d {
            x[j] = lo[j] + T::from_usize(idx[j]).expect("grid index fits scalar") * resolution;
        }
        let value = f(&x);
        let better = match &best {
            None => true,
            Some((_, _, best_val)) => value < *best_val,
        };
        if better {
            best = Some((idx.clone(), x.clone(), value));
        }

        // Odometer increment, last dimension fastest.
        let mut j = d;
        loop {
            if j == 0 {
                break;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < counts[j] {
                break;
            }
            idx[j] = 0;
            if j == 0 {
                let (best_idx, point, value) = best.expect("grid has at least one point");
                for (dim, &i) in best_idx.iter().enumerate() {
                    if i == 0 || i + 1 == counts[dim] {
                        return Err(Error::BoxTooSmall { dim });
                    }
                }
                return Ok((point, value));
            }
        }
    }
}

/// Grid minimization refined in stages: scans a coarse grid, then re-grids a
/// shrinking box around the best point until the spacing reaches
/// `target_resolution`.
///
/// Sound for unimodal (e.g. convex) objectives that are not too
/// ill-conditioned relative to the stage spacing; each stage keeps a margin
/// of three cells around the incumbent. Returns the best point, its value,
/// and the final grid spacing.
pub fn grid_refine<T: Real>(
    f: impl Fn(&DVector<T>) -> T,
    lo: &DVector<T>,
    hi: &DVector<T>,
    points_per_dim: usize,
    target_resolution: T,
) -> Result<(DVector<T>, T, T)> {
    if points_per_dim < 8 {
        return Err(Error::invalid("points_per_dim", "need at least 8"));
    }
    let steps = T::from_usize(points_per_dim - 1).expect("points count fits scalar");
    let mut lo = lo.clone();
    let mut hi = hi.clone();
    let margin = T::of(3.0);
    for _ in 0..60 {
        let mut span_max = T::zero();
        for j in 0..lo.len() {
            let span = hi[j] - lo[j];
            if span > span_max {
                span_max = span;
            }
        }
        let resolution = span_max / steps;
        let (point, value) = grid_minimize(&f, &lo, &hi, resolution)?;
        if resolution <= target_resolution {
            return Ok((point, value, resolution));
        }
        for j in 0..lo.len() {
            let new_lo = point[j] - margin * resolution;
            let new_hi = point[j] + margin * resolution;
            lo[j] = if new_lo > lo[j] { new_lo } else { lo[j] };
            hi[j] = if new_hi < hi[j] { new_hi } else { hi[j] };
        }
    }
    Err(Error::invalid(
        "target_resolution",
        "not reached within the refinement stage limit",
    ))
}

/// Central finite-difference gradient of `f` at `x` with step `h`.
pub fn finite_diff_gradient<T: Real>(
    f: impl Fn(&DVector<T>) -> T,
    x: &DVector<T>,
    h: T,
) -> DVector<T> {
    let d = x.len();
    let mut grad = DVector::zeros(d);
    let two = T::of(2.0);
    for j in 0..d {
        let mut fwd = x.clone();
        let mut bwd = x.clone();
        fwd[j] += h;
        bwd[j] -= h;
        grad[j] = (f(&fwd) - f(&bwd)) / (two * h);
    }
    grad
}
