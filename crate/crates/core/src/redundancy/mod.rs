//! Redundancy checks over cost profiles.
//!
//! A profile is `k`-redundant when every subset of `n - k` agents already
//! pins down the same aggregate minimizers as every other such subset. Two
//! exhaustive checkers are provided: a pairwise form over all `(n - k)`
//! subsets, and a nested-subset form phrased directly in terms of a fault
//! bound `t` (with `k = 2t`). Both are exponential in `n` and meant for
//! desk-scale profiles.

mod generate;

use std::collections::HashMap;

use itertools::Itertools;

use crate::cost_model::{
    intersect, subspace_equal, sum_costs_subset, AffineSubspace, QuadraticCost,
};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tolerances::Tolerances;

pub use generate::{
    generate_independent_instance, generate_redundant_instance, generate_shared_argmin_instance,
    random_convex_cost, IndependentInstance, RedundantInstance, SharedArgminInstance,
};

/// Outcome of a redundancy check.
#[derive(Debug, Clone)]
pub struct RedundancyVerdict<T> {
    /// Whether the property holds for the checked profile.
    pub holds: bool,
    /// The redundancy degree the check ran with.
    pub k: usize,
    /// On failure, the pair of index sets that disagree. A pair with equal
    /// entries `(s, s)` marks a subset family whose argmins do not intersect
    /// at all.
    pub witness: Option<(Vec<usize>, Vec<usize>)>,
    /// On success, the argmin set shared by every checked subset.
    pub common_argmin: Option<AffineSubspace<T>>,
}

fn ensure_each_cost_bounded<T: Real>(
    costs: &[QuadraticCost<T>],
    tol: &Tolerances<T>,
) -> Result<Vec<AffineSubspace<T>>> {
    let mut argmins = Vec::with_capacity(costs.len());
    for (agent, cost) in costs.iter().enumerate() {
        let m = cost.minimize(tol);
        if !m.finite {
            return Err(Error::AssumptionViolated { agent });
        }
        argmins.push(m.argmin);
    }
    Ok(argmins)
}

fn subset_argmin<T: Real>(
    costs: &[QuadraticCost<T>],
    subset: &[usize],
    tol: &Tolerances<T>,
    cache: &mut HashMap<Vec<usize>, AffineSubspace<T>>,
) -> Result<AffineSubspace<T>> {
    if let Some(hit) = cache.get(subset) {
        return Ok(hit.clone());
    }
    let aggregate = sum_costs_subset(costs, subset)?;
    let m = aggregate.minimize(tol);
    if !m.finite {
        return Err(Error::UnboundedSum {
            agents: subset.to_vec(),
        });
    }
    cache.insert(subset.to_vec(), m.argmin.clone());
    Ok(m.argmin)
}

/// Pairwise redundancy check: every pair of `(n - k)`-agent subsets must
/// share an identical, non-empty common argmin, where each subset's common
/// argmin is the intersection of its members' individual argmin sets.
///
/// Subsets are scanned lexicographically and every later subset is compared
/// against the first, which is enough because set equality is transitive.
pub fn check_redundancy_alt<T: Real>(
    costs: &[QuadraticCost<T>],
    k: usize,
    tol: &Tolerances<T>,
) -> Result<RedundancyVerdict<T>> {
    let n = costs.len();
    if n == 0 {
        return Err(Error::EmptyList { what: "cost" });
    }
    if k >= n {
        return Err(Error::invalid(
            "k",
            format!("must be below the agent count ({k} >= {n})"),
        ));
    }
    let argmins = ensure_each_cost_bounded(costs, tol)?;

    let mut first: Option<(Vec<usize>, AffineSubspace<T>)> = None;
    for subset in (0..n).combinations(n - k) {
        let members: Vec<AffineSubspace<T>> = subset.iter().map(|&i| argmins[i].clone()).collect();
        let common = intersect(&members, tol)?;
        if common.is_empty() {
            return Ok(RedundancyVerdict {
                holds: false,
                k,
                witness: Some((subset.clone(), subset)),
                common_argmin: None,
            });
        }
        match &first {
            None => first = Some((subset, common)),
            Some((first_set, first_common)) => {
                if !subspace_equal(first_common, &common, tol)? {
                    return Ok(RedundancyVerdict {
                        holds: false,
                        k,
                        witness: Some((first_set.clone(), subset)),
                        common_argmin: None,
                    });
                }
            }
        }
    }
    let common = first.expect("at least one subset exists").1;
    Ok(RedundancyVerdict {
        holds: true,
        k,
        witness: None,
        common_argmin: Some(common),
    })
}

/// Nested-subset redundancy check for a fault bound `t` (degree `k = 2t`):
/// for every subset `s` of at least `n - t` agents and every nested subset
/// of at least `n - 2t` of its members, the nested aggregate argmin must
/// equal the argmin of `s`'s own aggregate.
pub fn check_redundancy_subset_form<T: Real>(
    costs: &[QuadraticCost<T>],
    t: usize,
    tol: &Tolerances<T>,
) -> Result<RedundancyVerdict<T>> {
    let n = costs.len();
    if n == 0 {
        return Err(Error::EmptyList { what: "cost" });
    }
    if n <= 2 * t {
        return Err(Error::TooFewAgents { n, t });
    }
    ensure_each_cost_bounded(costs, tol)?;
    let k = 2 * t;

    let mut cache: HashMap<Vec<usize>, AffineSubspace<T>> = HashMap::new();
    for outer_size in (n - t)..=n {
        for outer in (0..n).combinations(outer_size) {
            let outer_argmin = subset_argmin(costs, &outer, tol, &mut cache)?;
            for inner_size in (n - 2 * t)..=outer_size {
                for inner in outer.iter().copied().combinations(inner_size) {
                    let inner_argmin = subset_argmin(costs, &inner, tol, &mut cache)?;
                    if !subspace_equal(&outer_argmin, &inner_argmin, tol)? {
                        return Ok(RedundancyVerdict {
                            holds: false,
                            k,
                            witness: Some((outer, inner)),
                            common_argmin: None,
                        });
                    }
                }
            }
        }
    }
    let full: Vec<usize> = (0..n).collect();
    let common = subset_argmin(costs, &full, tol, &mut cache)?;
    Ok(RedundancyVerdict {
        holds: true,
        k,
        witness: None,
        common_argmin: Some(common),
    })
}

/// Cross-validates the two redundancy formulations on one profile: the
/// nested form restricted to innermost subsets of exactly `n - 2t` agents
/// must agree with the pairwise check at degree `2t`. Returns whether the
/// two verdicts agree.
pub fn verify_equivalence<T: Real>(
    costs: &[QuadraticCost<T>],
    t: usize,
    tol: &Tolerances<T>,
) -> Result<bool> {
    let n = costs.len();
    if n == 0 {
        return Err(Error::EmptyList { what: "cost" });
    }
    if n <= 2 * t {
        return Err(Error::TooFewAgents { n, t });
    }
    ensure_each_cost_bounded(costs, tol)?;

    let mut cache: HashMap<Vec<usize>, AffineSubspace<T>> = HashMap::new();
    let mut nested_holds = true;
    'outer: for outer_size in (n - t)..=n {
        for outer in (0..n).combinations(outer_size) {
            let outer_argmin = subset_argmin(costs, &outer, tol, &mut cache)?;
            for inner in outer.iter().copied().combinations(n - 2 * t) {
                let inner_argmin = subset_argmin(costs, &inner, tol, &mut cache)?;
                if !subspace_equal(&outer_argmin, &inner_argmin, tol)? {
                    nested_holds = false;
                    break 'outer;
                }
            }
        }
    }
    let pairwise = check_redundancy_alt(costs, 2 * t, tol)?;
    Ok(nested_holds == pairwise.holds)
}
