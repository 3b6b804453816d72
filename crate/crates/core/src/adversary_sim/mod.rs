//! Simulated runs: ground-truth scenarios, faulty-agent behaviors, and a
//! harness that feeds the resulting reports to a chosen solver.
//!
//! All randomness is drawn from counter-based generators keyed by the
//! scenario seed (one stream per agent), so a scenario replays identically
//! regardless of execution order.

mod strategy;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cgc::{cgc_descend, CgcConfig, CgcTrace, GradientOracle};
use crate::cost_model::QuadraticCost;
use crate::error::{Error, Result};
use crate::redundancy::random_convex_cost;
use crate::scalar::Real;
use crate::solvers::{
    normalized_weak_solve, t_resilient_solve, weak_resilient_solve, ReportedAgent, ReportedProfile,
    SolverOutput,
};
use crate::tolerances::Tolerances;

pub use strategy::AdversaryStrategy;

/// Ground truth for one simulated run: every agent's true cost, which agents
/// are faulty, and how the faulty ones behave.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + serde::de::DeserializeOwned"
))]
pub struct Scenario<T> {
    pub n: usize,
    /// Fault bound handed to the solver; at least `faulty.len()`.
    #[serde(rename = "t")]
    pub t_bound: usize,
    pub d: usize,
    pub true_costs: Vec<QuadraticCost<T>>,
    pub faulty: BTreeSet<usize>,
    pub strategy: AdversaryStrategy<T>,
    pub seed: u64,
}

impl<T: Real> Scenario<T> {
    pub fn new(
        t_bound: usize,
        true_costs: Vec<QuadraticCost<T>>,
        faulty: BTreeSet<usize>,
        strategy: AdversaryStrategy<T>,
        seed: u64,
        tol: &Tolerances<T>,
    ) -> Result<Self> {
        let n = true_costs.len();
        let d = true_costs.first().map_or(0, |c| c.dim());
        let scenario = Self {
            n,
            t_bound,
            d,
            true_costs,
            faulty,
            strategy,
            seed,
        };
        scenario.validate(tol)?;
        Ok(scenario)
    }

    /// Checks internal consistency and that every true cost is admissible
    /// ground truth: convex with a finite minimum.
    pub fn validate(&self, tol: &Tolerances<T>) -> Result<()> {
        if self.true_costs.is_empty() {
            return Err(Error::EmptyList { what: "cost" });
        }
        if self.true_costs.len() != self.n {
            return Err(Error::invalid(
                "n",
                format!(
                    "declares {} agents but {} true costs are given",
                    self.n,
                    self.true_costs.len()
                ),
            ));
        }
        if self.n <= 2 * self.t_bound {
            return Err(Error::TooFewAgents {
                n: self.n,
                t: self.t_bound,
            });
        }
        if self.d == 0 {
            return Err(Error::invalid("d", "dimension must be positive"));
        }
        for cost in &self.true_costs {
            if cost.dim() != self.d {
                return Err(Error::DimensionMismatch {
                    expected: self.d,
                    actual: cost.dim(),
                });
            }
        }
        if self.faulty.len() > self.t_bound {
            return Err(Error::invalid(
                "faulty",
                format!(
                    "{} faulty agents exceed the fault bound {}",
                    self.faulty.len(),
                    self.t_bound
                ),
            ));
        }
        if let Some(&bad) = self.faulty.iter().find(|&&id| id >= self.n) {
            return Err(Error::invalid(
                "faulty",
                format!("agent id {bad} out of range for n = {}", self.n),
            ));
        }
        self.strategy.validate(self.d)?;
        for (agent, cost) in self.true_costs.iter().enumerate() {
            cost.validate(tol)
                .map_err(|_| Error::AssumptionViolated { agent })?;
            if !cost.minimize(tol).finite {
                return Err(Error::AssumptionViolated { agent });
            }
        }
        Ok(())
    }

    fn agent_rng(&self, agent: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        // Stream 0 is reserved for colluding behavior shared by all faulty
        // agents; per-agent streams start at 1.
        rng.set_stream(agent as u64 + 1);
        rng
    }

    fn shared_rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(0);
        rng
    }
}

fn unbounded_cost<T: Real>(d: usize) -> QuadraticCost<T> {
    // Flat in the last coordinate with a linear pull along it, so every
    // subset sum containing this report risks losing its minimum.
    let q = DMatrix::from_fn(d, d, |i, j| {
        if i == j && i + 1 < d {
            T::one()
        } else {
            T::zero()
        }
    });
    let mut c = DVector::zeros(d);
    c[d - 1] = T::one();
    QuadraticCost::new(q, c, T::zero()).expect("diagonal matrix is symmetric")
}

fn sphere_point<T: Real>(d: usize, radius: f64, rng: &mut ChaCha8Rng) -> DVector<T> {
    loop {
        let z = DVector::<f64>::from_fn(d, |_, _| rng.sample(StandardNormal));
        let norm = z.norm();
        if norm > 1e-9 {
            return DVector::from_fn(d, |i, _| T::of(z[i] / norm * radius));
        }
    }
}

/// Builds the cost profile the solver actually sees: honest agents report
/// their true cost unchanged, faulty agents follow the scenario's strategy.
/// Fails for gradient-level strategies, which produce no cost functions.
pub fn build_reported_profile<T: Real>(
    scenario: &Scenario<T>,
    tol: &Tolerances<T>,
) -> Result<ReportedProfile<T>> {
    scenario.validate(tol)?;
    if scenario.strategy.is_gradient_level() {
        return Err(Error::invalid(
            "strategy",
            format!(
                "{} answers gradient queries only and reports no cost function",
                scenario.strategy.name()
            ),
        ));
    }
    let colluding_cost = match &scenario.strategy {
        AdversaryStrategy::ColludingPull => {
            let mut rng = scenario.shared_rng();
            let target = sphere_point::<T>(scenario.d, 50.0, &mut rng);
            Some(random_convex_cost(&target, 0.0, 0.5, &mut rng))
        }
        _ => None,
    };
    let mut agents = Vec::with_capacity(scenario.n);
    for (id, true_cost) in scenario.true_costs.iter().enumerate() {
        let cost = if !scenario.faulty.contains(&id) {
            true_cost.clone()
        } else {
            match &scenario.strategy {
                AdversaryStrategy::HonestEcho => true_cost.clone(),
                AdversaryStrategy::FakeFunction { target } => {
                    let target = DVector::from_row_slice(target);
                    let mut rng = scenario.agent_rng(id);
                    random_convex_cost(&target, 0.0, 0.5, &mut rng)
                }
                AdversaryStrategy::ScaledTruth { lambda } => true_cost.scaled(*lambda),
                AdversaryStrategy::ShiftedTruth { delta } => {
                    true_cost.shifted(&DVector::from_row_slice(delta))?
                }
                AdversaryStrategy::NegativeBomb => unbounded_cost(scenario.d),
                AdversaryStrategy::ColludingPull => {
                    colluding_cost.clone().expect("colluding cost built above")
                }
                _ => unreachable!("gradient-level strategies rejected above"),
            }
        };
        agents.push(ReportedAgent { id, cost });
    }
    ReportedProfile::new(agents, scenario.t_bound)
}

/// Answers gradient queries for a scenario. Honest agents report true
/// gradients; faulty agents follow the strategy. Function-level strategies
/// answer with the gradient of the cost they would have reported.
pub struct ScenarioGradientOracle<T> {
    dim: usize,
    reported: Vec<QuadraticCost<T>>,
    faulty: BTreeSet<usize>,
    strategy: AdversaryStrategy<T>,
    rngs: Vec<ChaCha8Rng>,
}

pub fn build_gradient_oracle<T: Real>(
    scenario: &Scenario<T>,
    tol: &Tolerances<T>,
) -> Result<ScenarioGradientOracle<T>> {
    scenario.validate(tol)?;
    let reported = if scenario.strategy.is_function_level() {
        build_reported_profile(scenario, tol)?
            .agents()
            .iter()
            .map(|a| a.cost.clone())
            .collect()
    } else {
        scenario.true_costs.clone()
    };
    let rngs = (0..scenario.n).map(|i| scenario.agent_rng(i)).collect();
    Ok(ScenarioGradientOracle {
        dim: scenario.d,
        reported,
        faulty: scenario.faulty.clone(),
        strategy: scenario.strategy.clone(),
        rngs,
    })
}

impl<T: Real> GradientOracle<T> for ScenarioGradientOracle<T> {
    fn agent_count(&self) -> usize {
        self.reported.len()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn gradient(&mut self, agent: usize, x: &DVector<T>) -> DVector<T> {
        let truthful = self.reported[agent]
            .gradient(x)
            .expect("query dimension is checked by the descent loop");
        if !self.faulty.contains(&agent) {
            return truthful;
        }
        match &self.strategy {
            AdversaryStrategy::SignFlip { lambda } => -truthful * *lambda,
            AdversaryStrategy::RandomNoise { sigma } => {
                let rng = &mut self.rngs[agent];
                DVector::from_fn(self.dim, |_, _| {
                    T::of(rng.sample::<f64, _>(StandardNormal)) * *sigma
                })
            }
            AdversaryStrategy::ZeroGradient => DVector::zeros(self.dim),
            // Function-level strategies already shaped `reported`.
            _ => truthful,
        }
    }
}

/// Which aggregation rule to run on a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    content = "params",
    rename_all = "snake_case",
    deny_unknown_fields
)]
#[serde(bound(
    serialize = "T: Serialize",
    deserialize = "T: serde::de::DeserializeOwned"
))]
pub enum SolverKind<T> {
    TResilient,
    Weak,
    NormalizedWeak,
    Cgc(CgcConfig<T>),
}

impl<T: Real> SolverKind<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Self::TResilient => "t_resilient",
            Self::Weak => "weak",
            Self::NormalizedWeak => "normalized_weak",
            Self::Cgc(_) => "cgc",
        }
    }
}

/// Echo of the scenario facts a trace was produced under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportedSummary {
    pub n: usize,
    pub t: usize,
    pub d: usize,
    pub faulty: Vec<usize>,
    pub strategy: String,
    pub seed: u64,
}

/// Solver result in plain serializable form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Serialize",
    deserialize = "T: serde::de::DeserializeOwned"
))]
pub struct RunOutput<T> {
    pub x_hat: Vec<T>,
    pub chosen_set: Vec<usize>,
    pub v_value: Option<T>,
    pub sets_examined: usize,
    pub removed: Vec<usize>,
}

impl<T: Real> RunOutput<T> {
    fn from_solver(out: SolverOutput<T>) -> Self {
        Self {
            x_hat: out.x_hat.iter().copied().collect(),
            chosen_set: out.chosen_set,
            v_value: out.v_value,
            sets_examined: out.diagnostics.sets_examined,
            removed: out.diagnostics.removed,
        }
    }
}

/// Everything one solver run produced. Failures land in `error` instead of
/// panicking, so a batch over many scenarios always completes. Wall time is
/// tracked in memory only; serialized traces carry no timing, so reruns of
/// the same scenario serialize to identical bytes.
#[derive(Debug, Clone, Serialize)]
#[serde(bound(serialize = "T: Serialize"))]
pub struct ExecutionTrace<T> {
    pub solver: String,
    pub scenario: ReportedSummary,
    pub output: Option<RunOutput<T>>,
    pub error: Option<String>,
    pub cgc: Option<CgcTrace<T>>,
    #[serde(skip)]
    pub elapsed: Duration,
}

/// Runs one solver on one scenario, capturing the outcome or the error.
pub fn run_execution<T: Real>(
    scenario: &Scenario<T>,
    solver: &SolverKind<T>,
    tol: &Tolerances<T>,
) -> ExecutionTrace<T> {
    let start = Instant::now();
    let summary = ReportedSummary {
        n: scenario.n,
        t: scenario.t_bound,
        d: scenario.d,
        faulty: scenario.faulty.iter().copied().collect(),
        strategy: scenario.strategy.name().to_string(),
        seed: scenario.seed,
    };
    let mut trace = ExecutionTrace {
        solver: solver.name().to_string(),
        scenario: summary,
        output: None,
        error: None,
        cgc: None,
        elapsed: Duration::ZERO,
    };
    match solver {
        SolverKind::Cgc(config) => {
            match build_gradient_oracle(scenario, tol)
                .and_then(|mut oracle| cgc_descend(&mut oracle, config))
            {
                Ok(run) => {
                    trace.output = Some(RunOutput {
                        x_hat: run.final_x.clone(),
                        chosen_set: Vec::new(),
                        v_value: None,
                        sets_examined: run.iterations_run,
                        removed: Vec::new(),
                    });
                    trace.cgc = Some(run);
                }
                Err(e) => trace.error = Some(e.to_string()),
            }
        }
        _ => {
            let result = build_reported_profile(scenario, tol).and_then(|profile| match solver {
                SolverKind::TResilient => t_resilient_solve(&profile, tol),
                SolverKind::Weak => weak_resilient_solve(&profile, tol),
                SolverKind::NormalizedWeak => normalized_weak_solve(&profile, tol),
                SolverKind::Cgc(_) => unreachable!("handled above"),
            });
            match result {
                Ok(out) => trace.output = Some(RunOutput::from_solver(out)),
                Err(e) => trace.error = Some(e.to_string()),
            }
        }
    }
    trace.elapsed = start.elapsed();
    trace
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::redundancy::generate_redundant_instance;

    fn tol() -> Tolerances<f64> {
        Tolerances::default()
    }

    fn parabola_1d(center: f64) -> QuadraticCost<f64> {
        QuadraticCost::new(
            DMatrix::from_row_slice(1, 1, &[2.0]),
            DVector::from_row_slice(&[-2.0 * center]),
            center * center,
        )
        .unwrap()
    }

    fn demo_scenario(strategy: AdversaryStrategy<f64>) -> Scenario<f64> {
        Scenario::new(
            1,
            vec![parabola_1d(0.0), parabola_1d(1.0), parabola_1d(2.0)],
            BTreeSet::from([2]),
            strategy,
            7,
            &tol(),
        )
        .unwrap()
    }

    #[test]
    fn honest_agents_report_their_exact_true_cost() {
        let sc = demo_scenario(AdversaryStrategy::FakeFunction { target: vec![9.0] });
        let profile = build_reported_profile(&sc, &tol()).unwrap();
        for a in &profile.agents()[..2] {
            assert_eq!(a.cost.q(), sc.true_costs[a.id].q());
            assert_eq!(a.cost.c(), sc.true_costs[a.id].c());
            assert_eq!(a.cost.r(), sc.true_costs[a.id].r());
        }
        // The fake report minimizes at the adversary's target instead.
        let fake = &profile.agents()[2].cost;
        let m = fake.minimize(&tol());
        assert!(m
            .argmin
            .contains(&DVector::from_row_slice(&[9.0]), &tol())
            .unwrap());
        assert!(m.value.abs() < 1e-9);
    }

    #[test]
    fn scaling_and_shifting_transform_the_true_cost() {
        let sc = demo_scenario(AdversaryStrategy::ScaledTruth { lambda: 2.5 });
        let profile = build_reported_profile(&sc, &tol()).unwrap();
        let x = DVector::from_row_slice(&[1.3]);
        let reported = profile.agents()[2].cost.evaluate(&x).unwrap();
        let truth = sc.true_costs[2].evaluate(&x).unwrap();
        assert!((reported - 2.5 * truth).abs() < 1e-12);

        let sc = demo_scenario(AdversaryStrategy::ShiftedTruth { delta: vec![3.0] });
        let profile = build_reported_profile(&sc, &tol()).unwrap();
        let m = profile.agents()[2].cost.minimize(&tol());
        // True minimizer 2 moved to 5.
        assert!((m.argmin.anchor().unwrap()[0] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn bomb_reports_have_no_finite_minimum() {
        for d in [1usize, 3] {
            let cost = unbounded_cost::<f64>(d);
            assert!(!cost.minimize(&tol()).finite);
        }
        let sc = demo_scenario(AdversaryStrategy::NegativeBomb);
        let profile = build_reported_profile(&sc, &tol()).unwrap();
        assert!(!profile.agents()[2].cost.minimize(&tol()).finite);
    }

    #[test]
    fn colluding_agents_file_identical_reports() {
        let inst = generate_redundant_instance::<f64>(5, 2, 2, 3, 0.0).unwrap();
        let sc = Scenario::new(
            2,
            inst.costs,
            BTreeSet::from([1, 4]),
            AdversaryStrategy::ColludingPull,
            11,
            &tol(),
        )
        .unwrap();
        let profile = build_reported_profile(&sc, &tol()).unwrap();
        let a = &profile.agents()[1].cost;
        let b = &profile.agents()[4].cost;
        assert_eq!(a.q(), b.q());
        assert_eq!(a.c(), b.c());
        assert_eq!(a.r(), b.r());
        // The shared report pulls far away from the honest minimizer.
        let m = a.minimize(&tol());
        assert!(m.argmin.anchor().unwrap().norm() > 25.0);
    }

    #[test]
    fn gradient_strategies_cannot_build_cost_profiles() {
        let sc = demo_scenario(AdversaryStrategy::ZeroGradient);
        assert!(build_reported_profile(&sc, &tol()).is_err());
    }

    #[test]
    fn sign_flip_negates_and_amplifies() {
        let sc = demo_scenario(AdversaryStrategy::SignFlip { lambda: 2.0 });
        let mut oracle = build_gradient_oracle(&sc, &tol()).unwrap();
        let x = DVector::from_row_slice(&[4.0]);
        let honest = oracle.gradient(0, &x);
        assert_eq!(honest[0], 8.0);
        let flipped = oracle.gradient(2, &x);
        // True gradient at 4 for center 2 is 4; flipped and doubled is -8.
        assert_eq!(flipped[0], -8.0);
    }

    #[test]
    fn zero_gradient_agents_always_report_zero() {
        let sc = demo_scenario(AdversaryStrategy::ZeroGradient);
        let mut oracle = build_gradient_oracle(&sc, &tol()).unwrap();
        let x = DVector::from_row_slice(&[-3.0]);
        assert_eq!(oracle.gradient(2, &x)[0], 0.0);
        assert!(oracle.gradient(0, &x)[0] != 0.0);
    }

    #[test]
    fn noise_replays_identically_per_seed() {
        let sc = demo_scenario(AdversaryStrategy::RandomNoise { sigma: 0.5 });
        let x = DVector::from_row_slice(&[1.0]);
        let mut first = build_gradient_oracle(&sc, &tol()).unwrap();
        let mut second = build_gradient_oracle(&sc, &tol()).unwrap();
        for _ in 0..5 {
            assert_eq!(first.gradient(2, &x), second.gradient(2, &x));
        }
        let mut other_seed = sc.clone();
        other_seed.seed = 8;
        let mut third = build_gradient_oracle(&other_seed, &tol()).unwrap();
        assert_ne!(first.gradient(2, &x), third.gradient(2, &x));
    }

    #[test]
    fn validation_rejects_inconsistent_scenarios() {
        let costs = vec![parabola_1d(0.0), parabola_1d(1.0), parabola_1d(2.0)];
        // Faulty id out of range.
        assert!(Scenario::new(
            1,
            costs.clone(),
            BTreeSet::from([5]),
            AdversaryStrategy::HonestEcho,
            0,
            &tol()
        )
        .is_err());
        // More faulty agents than the bound allows.
        assert!(Scenario::new(
            1,
            costs.clone(),
            BTreeSet::from([0, 1]),
            AdversaryStrategy::HonestEcho,
            0,
            &tol()
        )
        .is_err());
        // Ground truth must be convex with a finite minimum.
        let mut bad = costs;
        bad[1] = QuadraticCost::new(
            DMatrix::from_row_slice(1, 1, &[-1.0]),
            DVector::zeros(1),
            0.0,
        )
        .unwrap();
        let err = Scenario::new(
            1,
            bad,
            BTreeSet::new(),
            AdversaryStrategy::HonestEcho,
            0,
            &tol(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::AssumptionViolated { agent: 1 }));
    }

    #[test]
    fn scenario_json_round_trips() {
        let sc = demo_scenario(AdversaryStrategy::ShiftedTruth { delta: vec![1.5] });
        let text = serde_json::to_string(&sc).unwrap();
        assert!(text.contains("\"t\":1"));
        let back: Scenario<f64> = serde_json::from_str(&text).unwrap();
        back.validate(&tol()).unwrap();
        assert_eq!(back.n, sc.n);
        assert_eq!(back.t_bound, sc.t_bound);
        assert_eq!(back.strategy, sc.strategy);
        assert_eq!(back.true_costs[1].q(), sc.true_costs[1].q());
    }

    #[test]
    fn failed_runs_are_recorded_not_panicked() {
        let sc = demo_scenario(AdversaryStrategy::ZeroGradient);
        // A cost-based solver on a gradient-level strategy fails cleanly.
        let trace = run_execution(&sc, &SolverKind::TResilient, &tol());
        assert!(trace.output.is_none());
        assert!(trace.error.is_some());
    }

    #[test]
    fn executions_serialize_identically_across_reruns() {
        let sc = demo_scenario(AdversaryStrategy::FakeFunction { target: vec![9.0] });
        for solver in [
            SolverKind::TResilient,
            SolverKind::Weak,
            SolverKind::NormalizedWeak,
            SolverKind::Cgc(CgcConfig::new(0.05, 40, 1e-8, 1, vec![0.0]).unwrap()),
        ] {
            let a = serde_json::to_string(&run_execution(&sc, &solver, &tol())).unwrap();
            let b = serde_json::to_string(&run_execution(&sc, &solver, &tol())).unwrap();
            assert_eq!(a, b, "solver {} not deterministic", solver.name());
        }
    }

    #[test]
    fn the_weak_solver_survives_a_bomb_the_strict_solver_rejects() {
        let sc = demo_scenario(AdversaryStrategy::NegativeBomb);
        let weak = run_execution(&sc, &SolverKind::NormalizedWeak, &tol());
        let out = weak.output.expect("normalized weak solve succeeds");
        assert_eq!(out.removed, vec![2]);
        assert!((out.x_hat[0] - 0.5).abs() < 1e-9);
    }
}
