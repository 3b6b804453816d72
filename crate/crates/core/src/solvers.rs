//! Aggregation rules that pick a single estimate from reported costs.
//!
//! Two exact solvers are provided. The subset-consistency solver returns a
//! point that minimizes the aggregate cost of every plausible honest
//! majority, assuming enough overlap among the reports. The best-subset
//! solver always returns the minimizer of the cheapest `n - t` reports,
//! trading the strong guarantee for unconditional availability. Both scan
//! candidate sets lexicographically, so outputs are deterministic.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use itertools::Itertools;
use nalgebra::DVector;

use crate::cost_model::{intersect, sum_costs_subset, AffineSubspace, QuadraticCost};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tolerances::Tolerances;

/// One agent's reported cost.
#[derive(Debug, Clone)]
pub struct ReportedAgent<T> {
    /// Stable agent identifier.
    pub id: usize,
    /// The cost this agent claims to hold.
    pub cost: QuadraticCost<T>,
}

/// A full round of reports plus the fault bound the solver may assume.
///
/// Agents are kept sorted by id. `removed` accumulates ids discarded by
/// preprocessing steps; each removal also lowers the fault bound by one,
/// since only a faulty agent can produce a detectably inadmissible report.
#[derive(Debug, Clone)]
pub struct ReportedProfile<T> {
    agents: Vec<ReportedAgent<T>>,
    t: usize,
    removed: Vec<usize>,
}

impl<T: Real> ReportedProfile<T> {
    /// Builds a profile, requiring unique ids, one shared dimension, and a
    /// strict honest majority (`n > 2t`).
    pub fn new(mut agents: Vec<ReportedAgent<T>>, t: usize) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::EmptyList { what: "agent" });
        }
        if agents.len() <= 2 * t {
            return Err(Error::TooFewAgents { n: agents.len(), t });
        }
        agents.sort_by_key(|a| a.id);
        let dim = agents[0].cost.dim();
        for pair in agents.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::invalid(
                    "agents",
                    format!("duplicate agent id {}", pair[0].id),
                ));
            }
        }
        for a in &agents {
            if a.cost.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: a.cost.dim(),
                });
            }
        }
        Ok(Self {
            agents,
            t,
            removed: Vec::new(),
        })
    }

    /// Profile from a plain cost list, with ids `0..n`.
    pub fn from_costs(costs: Vec<QuadraticCost<T>>, t: usize) -> Result<Self> {
        let agents = costs
            .into_iter()
            .enumerate()
            .map(|(id, cost)| ReportedAgent { id, cost })
            .collect();
        Self::new(agents, t)
    }

    pub fn agents(&self) -> &[ReportedAgent<T>] {
        &self.agents
    }

    pub fn n(&self) -> usize {
        self.agents.len()
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn dim(&self) -> usize {
        self.agents.first().map_or(0, |a| a.cost.dim())
    }

    /// Ids discarded by preprocessing, in removal order.
    pub fn removed(&self) -> &[usize] {
        &self.removed
    }

    fn retain(&self, keep: impl Fn(&ReportedAgent<T>) -> bool) -> Self {
        let mut agents = Vec::with_capacity(self.agents.len());
        let mut removed = self.removed.clone();
        for a in &self.agents {
            if keep(a) {
                agents.push(a.clone());
            } else {
                removed.push(a.id);
            }
        }
        let dropped = self.agents.len() - agents.len();
        Self {
            agents,
            t: self.t.saturating_sub(dropped),
            removed,
        }
    }
}

/// Bookkeeping from one solver run.
#[derive(Debug, Clone)]
pub struct SolverDiagnostics {
    /// Candidate agent sets the solver evaluated before stopping.
    pub sets_examined: usize,
    /// Ids discarded before the search (inherited preprocessing removals
    /// plus the solver's own).
    pub removed: Vec<usize>,
    /// Wall time of the run. Excluded from any on-disk record.
    pub elapsed: Duration,
}

/// A solver's estimate plus the evidence behind it.
#[derive(Debug, Clone)]
pub struct SolverOutput<T> {
    /// The chosen point. When a whole affine set qualifies, this is its
    /// minimum-norm member.
    pub x_hat: DVector<T>,
    /// Original ids of the agent set the estimate came from.
    pub chosen_set: Vec<usize>,
    /// Aggregate value of the chosen set at its own minimum, when the solver
    /// ranks sets by value.
    pub v_value: Option<T>,
    pub diagnostics: SolverDiagnostics,
}

fn ensure_majority<T: Real>(profile: &ReportedProfile<T>) -> Result<()> {
    if profile.agents.is_empty() {
        return Err(Error::EmptyList { what: "agent" });
    }
    if profile.n() <= 2 * profile.t() {
        return Err(Error::TooFewAgents {
            n: profile.n(),
            t: profile.t(),
        });
    }
    Ok(())
}

/// Subset-consistency solver.
///
/// Reports with no finite minimum are discarded first (lowering the fault
/// bound accordingly). Candidate sets `a` of size `n - t` are scanned in
/// lexicographic order; a candidate qualifies when the aggregate argmins of
/// all of its sub-subsets of size `n - 2t` share a common point. The first
/// qualifying candidate wins and the minimum-norm common point is returned.
/// If no candidate qualifies the reports were not redundant enough and the
/// solver fails with [`Error::NoConsistentSubset`].
pub fn t_resilient_solve<T: Real>(
    profile: &ReportedProfile<T>,
    tol: &Tolerances<T>,
) -> Result<SolverOutput<T>> {
    let start = Instant::now();
    let profile = profile.retain(|a| a.cost.minimize(tol).finite);
    ensure_majority(&profile)?;
    let n = profile.n();
    let t = profile.t();
    let ids: Vec<usize> = profile.agents.iter().map(|a| a.id).collect();
    let costs: Vec<QuadraticCost<T>> = profile.agents.iter().map(|a| a.cost.clone()).collect();

    // Sub-subset argmins repeat across candidates; cache them by position set.
    let mut cache: HashMap<Vec<usize>, AffineSubspace<T>> = HashMap::new();
    for (index, candidate) in (0..n).combinations(n - t).enumerate() {
        let mut common: Option<AffineSubspace<T>> = None;
        let mut dead = false;
        for inner in candidate.iter().copied().combinations(n - 2 * t) {
            let argmin = match cache.get(&inner) {
                Some(hit) => hit.clone(),
                None => {
                    let m = sum_costs_subset(&costs, &inner)?.minimize(tol);
                    if !m.finite {
                        return Err(Error::UnboundedSum {
                            agents: inner.iter().map(|&p| ids[p]).collect(),
                        });
                    }
                    cache.insert(inner.clone(), m.argmin.clone());
                    m.argmin
                }
            };
            common = Some(match common {
                None => argmin,
                Some(sofar) => intersect(&[sofar, argmin], tol)?,
            });
            if common.as_ref().is_some_and(|c| c.is_empty()) {
                dead = true;
                break;
            }
        }
        if dead {
            continue;
        }
        let common = common.expect("candidate has at least one sub-subset");
        let x_hat = common
            .anchor()
            .expect("non-empty subspace has an anchor")
            .clone();
        return Ok(SolverOutput {
            x_hat,
            chosen_set: candidate.into_iter().map(|p| ids[p]).collect(),
            v_value: None,
            diagnostics: SolverDiagnostics {
                sets_examined: index + 1,
                removed: profile.removed.clone(),
                elapsed: start.elapsed(),
            },
        });
    }
    Err(Error::NoConsistentSubset)
}

/// Discards reports no honest agent could produce under non-negative costs:
/// no finite minimum, non-convex curvature, or a best value below zero
/// (slack `tol.val`). Each removal lowers the fault bound by one.
pub fn weak_preprocess<T: Real>(
    profile: &ReportedProfile<T>,
    tol: &Tolerances<T>,
) -> ReportedProfile<T> {
    profile.retain(|a| {
        if !a.cost.is_positive_semidefinite(tol) {
            return false;
        }
        let m = a.cost.minimize(tol);
        m.finite && m.value >= -tol.val
    })
}

/// Best-subset solver: evaluates every candidate set of size `n - t`,
/// ranks candidates by the minimum of their aggregate cost, and returns the
/// minimum-norm minimizer of the cheapest one.
///
/// Candidates are scanned lexicographically and a later candidate replaces
/// the incumbent only when it improves by more than `tol.val`, so ties go to
/// the lexicographically smallest set.
pub fn weak_resilient_solve<T: Real>(
    profile: &ReportedProfile<T>,
    tol: &Tolerances<T>,
) -> Result<SolverOutput<T>> {
    let start = Instant::now();
    ensure_majority(profile)?;
    let n = profile.n();
    let t = profile.t();
    let ids: Vec<usize> = profile.agents.iter().map(|a| a.id).collect();
    let costs: Vec<QuadraticCost<T>> = profile.agents.iter().map(|a| a.cost.clone()).collect();

    let mut best: Option<(Vec<usize>, AffineSubspace<T>, T)> = None;
    let mut sets_examined = 0;
    for candidate in (0..n).combinations(n - t) {
        sets_examined += 1;
        let m = sum_costs_subset(&costs, &candidate)?.minimize(tol);
        if !m.finite {
            return Err(Error::UnboundedSum {
                agents: candidate.iter().map(|&p| ids[p]).collect(),
            });
        }
        let replace = match &best {
            None => true,
            Some((_, _, incumbent)) => m.value < *incumbent - tol.val,
        };
        if replace {
            best = Some((candidate, m.argmin, m.value));
        }
    }
    let (candidate, argmin, value) = best.expect("n > 2t leaves at least one candidate");
    let x_hat = argmin
        .anchor()
        .expect("finite minimum has a non-empty argmin")
        .clone();
    Ok(SolverOutput {
        x_hat,
        chosen_set: candidate.into_iter().map(|p| ids[p]).collect(),
        v_value: Some(value),
        diagnostics: SolverDiagnostics {
            sets_examined,
            removed: profile.removed.clone(),
            elapsed: start.elapsed(),
        },
    })
}

/// Shifts every report so its best value is zero, discarding reports with no
/// finite minimum (each removal lowers the fault bound by one). The shift
/// never moves a report's argmin, but it does change how candidate sets
/// compare, which is the point: it strips constant offsets faulty agents
/// could use to buy influence.
pub fn normalize_profile<T: Real>(
    profile: &ReportedProfile<T>,
    tol: &Tolerances<T>,
) -> ReportedProfile<T> {
    let kept = profile.retain(|a| a.cost.minimize(tol).finite);
    let agents = kept
        .agents
        .iter()
        .map(|a| {
            let m = a.cost.minimize(tol);
            ReportedAgent {
                id: a.id,
                cost: a.cost.add_constant(-m.value),
            }
        })
        .collect();
    ReportedProfile {
        agents,
        t: kept.t,
        removed: kept.removed,
    }
}

/// Normalization, admissibility filtering, and the best-subset solver in one
/// pipeline. The returned diagnostics carry every id removed along the way.
pub fn normalized_weak_solve<T: Real>(
    profile: &ReportedProfile<T>,
    tol: &Tolerances<T>,
) -> Result<SolverOutput<T>> {
    let normalized = normalize_profile(profile, tol);
    let filtered = weak_preprocess(&normalized, tol);
    weak_resilient_solve(&filtered, tol)
}
