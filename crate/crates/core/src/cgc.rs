//! Clipped gradient aggregation and the descent loop built on it.
//!
//! Each round every agent reports a gradient. The `t` largest reports (by
//! norm) are rescaled down to the `(t + 1)`-th largest norm, which caps how
//! hard any single agent can pull, then the clipped reports are summed. The
//! sum runs in a canonical order so the aggregate is bit-identical under
//! permutation of the reports.

use std::cmp::Ordering;
use std::io::{self, Write};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Parameters for the descent loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Serialize",
    deserialize = "T: serde::de::DeserializeOwned"
))]
pub struct CgcConfig<T> {
    /// Step size multiplying the aggregate each round.
    pub step_size: T,
    /// Hard cap on rounds.
    pub max_iters: usize,
    /// Stop once the aggregate norm drops to this value.
    pub stop_tol: T,
    /// Number of largest-norm reports to clip each round.
    pub t: usize,
    /// Starting point.
    pub x0: Vec<T>,
}

impl<T: Real> CgcConfig<T> {
    pub fn new(step_size: T, max_iters: usize, stop_tol: T, t: usize, x0: Vec<T>) -> Result<Self> {
        let config = Self {
            step_size,
            max_iters,
            stop_tol,
            t,
            x0,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.step_size <= T::zero() || !self.step_size.finite() {
            return Err(Error::invalid("step_size", "must be positive and finite"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters", "must be at least 1"));
        }
        if self.stop_tol <= T::zero() || !self.stop_tol.finite() {
            return Err(Error::invalid("stop_tol", "must be positive and finite"));
        }
        if self.x0.is_empty() {
            return Err(Error::invalid("x0", "must be non-empty"));
        }
        if self.x0.iter().any(|v| !v.finite()) {
            return Err(Error::invalid("x0", "components must be finite"));
        }
        Ok(())
    }
}

/// Source of per-agent gradients for the descent loop. Implementations may
/// hold mutable state (e.g. random number generators).
pub trait GradientOracle<T> {
    fn agent_count(&self) -> usize;
    fn dim(&self) -> usize;
    /// The gradient agent `agent` reports at `x`. Responses of the wrong
    /// dimension or with non-finite components are treated as zero by the
    /// descent loop.
    fn gradient(&mut self, agent: usize, x: &DVector<T>) -> DVector<T>;
}

fn check_reports<T: Real>(gradients: &[DVector<T>], t: usize) -> Result<usize> {
    let n = gradients.len();
    if n == 0 {
        return Err(Error::EmptyList { what: "gradient" });
    }
    if t >= n {
        return Err(Error::invalid(
            "t",
            format!("must be below the agent count ({t} >= {n})"),
        ));
    }
    let d = gradients[0].len();
    for g in gradients {
        if g.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: g.len(),
            });
        }
        if g.iter().any(|v| !v.finite()) {
            return Err(Error::invalid("gradients", "non-finite component"));
        }
    }
    Ok(d)
}

/// Rescales the `t` strictly largest reports (by norm) down to the
/// `(t + 1)`-th largest norm. Reports tied with the threshold, and the zero
/// report, pass through untouched.
pub fn cgc_clip<T: Real>(gradients: &[DVector<T>], t: usize) -> Result<Vec<DVector<T>>> {
    check_reports(gradients, t)?;
    let mut norms: Vec<T> = gradients.iter().map(|g| g.norm()).collect();
    norms.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let threshold = norms[t];
    Ok(gradients
        .iter()
        .map(|g| {
            let norm = g.norm();
            if norm > threshold {
                g * (threshold / norm)
            } else {
                g.clone()
            }
        })
        .collect())
}

fn lex_compare<T: Real>(a: &DVector<T>, b: &DVector<T>) -> Ordering {
    for i in 0..a.len() {
        match a[i].partial_cmp(&b[i]) {
            Some(Ordering::Equal) | None => continue,
            Some(order) => return order,
        }
    }
    Ordering::Equal
}

/// Sums in lexicographic component order, so the result does not depend on
/// the order the inputs arrived in, down to the last bit.
fn canonical_sum<T: Real>(vectors: &[DVector<T>]) -> DVector<T> {
    let mut sorted: Vec<&DVector<T>> = vectors.iter().collect();
    sorted.sort_by(|a, b| lex_compare(a, b));
    let mut total = DVector::zeros(vectors[0].len());
    for v in sorted {
        total += v;
    }
    total
}

/// Clips, then sums. Permuting the reports never changes the result, not
/// even in the last bit.
pub fn cgc_aggregate<T: Real>(gradients: &[DVector<T>], t: usize) -> Result<DVector<T>> {
    let clipped = cgc_clip(gradients, t)?;
    Ok(canonical_sum(&clipped))
}

/// One recorded round of the descent loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Serialize",
    deserialize = "T: serde::de::DeserializeOwned"
))]
pub struct CgcIteration<T> {
    pub iteration: usize,
    /// Estimate at the start of the round.
    pub x: Vec<T>,
    /// Reports as the aggregation saw them (coerced entries already zeroed).
    pub raw_gradients: Vec<Vec<T>>,
    pub clipped_gradients: Vec<Vec<T>>,
    pub aggregate: Vec<T>,
    pub pre_clip_norms: Vec<T>,
    pub post_clip_norms: Vec<T>,
    /// Agents whose report was malformed this round and replaced by zero.
    pub coerced: Vec<usize>,
}

/// Full record of a descent run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Serialize",
    deserialize = "T: serde::de::DeserializeOwned"
))]
pub struct CgcTrace<T> {
    pub iterations: Vec<CgcIteration<T>>,
    pub final_x: Vec<T>,
    /// Whether the aggregate norm reached the stop threshold.
    pub converged: bool,
    pub iterations_run: usize,
}

impl<T: Real> CgcTrace<T> {
    /// Writes the trace as CSV: round, estimate, aggregate norm, then
    /// per-agent norms before and after clipping. Floats are written in
    /// shortest round-trip form, so equal runs produce identical bytes.
    pub fn write_csv(&self, mut out: impl Write) -> io::Result<()> {
        let d = self.final_x.len();
        let n = self
            .iterations
            .first()
            .map_or(0, |it| it.pre_clip_norms.len());
        let mut header = vec!["iteration".to_string()];
        header.extend((0..d).map(|j| format!("x_{j}")));
        header.push("agg_norm".to_string());
        header.extend((0..n).map(|i| format!("pre_{i}")));
        header.extend((0..n).map(|i| format!("post_{i}")));
        writeln!(out, "{}", header.join(","))?;
        for it in &self.iterations {
            let mut row = vec![it.iteration.to_string()];
            row.extend(it.x.iter().map(|v| fmt(*v)));
            let agg_norm = DVector::from_row_slice(&it.aggregate).norm();
            row.push(fmt(agg_norm));
            row.extend(it.pre_clip_norms.iter().map(|v| fmt(*v)));
            row.extend(it.post_clip_norms.iter().map(|v| fmt(*v)));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn fmt<T: Real>(v: T) -> String {
    format!("{}", v.to_f64().unwrap_or(f64::NAN))
}

fn vec_of<T: Real>(v: &DVector<T>) -> Vec<T> {
    v.iter().copied().collect()
}

/// Runs clipped-aggregate descent from `config.x0`, recording every round.
///
/// Rounds stop early once the aggregate norm reaches `stop_tol`; the round
/// that triggered the stop is still recorded, with the estimate unchanged.
pub fn cgc_descend<T: Real>(
    oracle: &mut impl GradientOracle<T>,
    config: &CgcConfig<T>,
) -> Result<CgcTrace<T>> {
    config.validate()?;
    let n = oracle.agent_count();
    if n == 0 {
        return Err(Error::EmptyList { what: "agent" });
    }
    if config.t >= n {
        return Err(Error::invalid(
            "t",
            format!("must be below the agent count ({} >= {n})", config.t),
        ));
    }
    let d = oracle.dim();
    if config.x0.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: config.x0.len(),
        });
    }

    let mut x = DVector::from_row_slice(&config.x0);
    let mut iterations = Vec::new();
    let mut converged = false;
    for iteration in 0..config.max_iters {
        let mut reports = Vec::with_capacity(n);
        let mut coerced = Vec::new();
        for agent in 0..n {
            let g = oracle.gradient(agent, &x);
            if g.len() != d || g.iter().any(|v| !v.finite()) {
                coerced.push(agent);
                reports.push(DVector::zeros(d));
            } else {
                reports.push(g);
            }
        }
        let clipped = cgc_clip(&reports, config.t)?;
        let aggregate = canonical_sum(&clipped);
        iterations.push(CgcIteration {
            iteration,
            x: vec_of(&x),
            raw_gradients: reports.iter().map(vec_of).collect(),
            clipped_gradients: clipped.iter().map(vec_of).collect(),
            aggregate: vec_of(&aggregate),
            pre_clip_norms: reports.iter().map(|g| g.norm()).collect(),
            post_clip_norms: clipped.iter().map(|g| g.norm()).collect(),
            coerced,
        });
        if aggregate.norm() <= config.stop_tol {
            converged = true;
            break;
        }
        x -= &aggregate * config.step_size;
    }
    Ok(CgcTrace {
        iterations_run: iterations.len(),
        final_x: vec_of(&x),
        converged,
        iterations,
    })
}
