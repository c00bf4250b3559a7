//! Construction, improvement, re-optimisation under side constraints,
//! diverse seeding, and the exhaustive reference solver.

mod construct;
mod diverse;
mod exhaustive;
mod job;
mod score;
mod search;

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constraints::SideConstraints;
use crate::error::{Error, Result};
use crate::instance::{node, ProblemInstance, DEPOT, EPS};
use crate::solution::{check_partition, Solution};

pub use diverse::{generate_diverse, generate_diverse_observed, select_max_min, DiverseOutcome, SeedQuality};
pub use job::{progress_stream, JobKind, ProgressEvent, SolveJob, SolveRequest};
pub use score::Score;
pub use search::SearchConfig;

use exhaustive::{enumerate, Goal};
use score::{co_locked_chain, satisfied_orders, Evaluator};
use search::{Search, StopReason};

/// Largest instance the exhaustive solver accepts by default.
pub const ORACLE_LIMIT: usize = 8;

/// Stopping rule and seed for one solver run. A run stops at the first limit
/// reached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveBudget {
    #[serde(default, with = "opt_secs")]
    pub wall_time: Option<Duration>,
    #[serde(default)]
    pub iterations: Option<u64>,
    /// Stop after this many iterations without a new best.
    #[serde(default)]
    pub stall_iterations: Option<u64>,
    #[serde(default)]
    pub seed: u64,
}

mod opt_secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Option<Duration>, s: S) -> Result<S::Ok, S::Error> {
        match d {
            Some(d) => s.serialize_some(&d.as_secs_f64()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Duration>, D::Error> {
        let secs: Option<f64> = Option::deserialize(d)?;
        secs.map(|s| Duration::try_from_secs_f64(s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

impl SolveBudget {
    /// Three seconds of wall time.
    pub fn interactive(seed: u64) -> Self {
        Self {
            wall_time: Some(Duration::from_secs(3)),
            iterations: None,
            stall_iterations: None,
            seed,
        }
    }

    /// Thirty seconds of wall time.
    pub fn batch(seed: u64) -> Self {
        Self {
            wall_time: Some(Duration::from_secs(30)),
            ..Self::interactive(seed)
        }
    }

    /// A fixed iteration count; runs are reproducible bit for bit.
    pub fn iterations(limit: u64, seed: u64) -> Self {
        Self {
            wall_time: None,
            iterations: Some(limit),
            stall_iterations: None,
            seed,
        }
    }

    pub fn with_wall_time(mut self, limit: Duration) -> Self {
        self.wall_time = Some(limit);
        self
    }

    pub fn with_stall(mut self, limit: u64) -> Self {
        self.stall_iterations = Some(limit);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.wall_time.is_none() && self.iterations.is_none() {
            return Err(Error::usage("budget needs a wall-time or iteration limit"));
        }
        Ok(())
    }

    /// An equal share of this budget for one of `parts` runs.
    fn share(&self, parts: u64, stream: u64) -> Self {
        Self {
            wall_time: self.wall_time.map(|w| w / parts as u32),
            iterations: self.iterations.map(|i| i.div_ceil(parts)),
            stall_iterations: self.stall_iterations,
            seed: search::derive_seed(self.seed, stream),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Improved,
    Unchanged,
    InfeasibleConstraints,
    Cancelled,
    BudgetExhausted,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Improved => "improved",
            SolveStatus::Unchanged => "unchanged",
            SolveStatus::InfeasibleConstraints => "infeasible_constraints",
            SolveStatus::Cancelled => "cancelled",
            SolveStatus::BudgetExhausted => "budget_exhausted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    /// Absent only for `InfeasibleConstraints`.
    pub solution: Option<Solution>,
    pub iterations: u64,
    pub elapsed: Duration,
    /// Unsatisfiability witness or other note.
    pub message: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Started,
    Checking,
    Searching,
    Finished,
}

/// Snapshot of a running search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub elapsed: Duration,
    pub iterations: u64,
    /// Distance of the best solution so far.
    pub best_objective: f64,
    pub best_feasible: bool,
    pub phase: Phase,
}

/// Hooks into a running search.
pub trait SearchObserver {
    fn on_progress(&mut self, _progress: &Progress) {}
    fn on_local_optimum(&mut self, _routes: &[Vec<usize>], _score: &Score) {}
    /// Polled before every move evaluation.
    fn should_stop(&self) -> bool {
        false
    }
}

/// Observer that ignores everything.
pub struct Silent;

impl SearchObserver for Silent {}

#[derive(Debug, Clone, PartialEq)]
pub enum Satisfiability {
    Satisfiable { witness: Solution },
    Unsatisfiable { witness: String },
    Unknown { reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExhaustiveOutcome {
    Optimal(Solution),
    Unsatisfiable,
}

/// Greedy cheapest insertion; ties are broken by `seed`. Always returns a
/// complete assignment, with violations only where no clean insertion exists.
pub fn construct(instance: &ProblemInstance, constraints: &SideConstraints, seed: u64) -> Solution {
    let eval = Evaluator::new(instance, constraints);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let routes = construct::cheapest_insertion(&eval, &mut rng).expect("no protected pairs during construction");
    Solution::from_partition(instance, routes, constraints)
}

/// Neighbourhood search from `start`. Locked customers never leave their
/// vehicle and order pairs satisfied by `start` stay satisfied.
pub fn improve(
    instance: &ProblemInstance,
    constraints: &SideConstraints,
    start: &Solution,
    budget: &SolveBudget,
) -> Result<SolveOutcome> {
    improve_observed(instance, constraints, start, budget, &mut Silent)
}

pub fn improve_observed(
    instance: &ProblemInstance,
    constraints: &SideConstraints,
    start: &Solution,
    budget: &SolveBudget,
    observer: &mut dyn SearchObserver,
) -> Result<SolveOutcome> {
    optimise(instance, constraints, start, budget, observer, false)
}

/// As [`improve`], and customers locked to the vehicle they ride on keep
/// their relative order.
pub fn reoptimise(
    instance: &ProblemInstance,
    constraints: &SideConstraints,
    current: &Solution,
    budget: &SolveBudget,
) -> Result<SolveOutcome> {
    reoptimise_observed(instance, constraints, current, budget, &mut Silent)
}

pub fn reoptimise_observed(
    instance: &ProblemInstance,
    constraints: &SideConstraints,
    current: &Solution,
    budget: &SolveBudget,
    observer: &mut dyn SearchObserver,
) -> Result<SolveOutcome> {
    optimise(instance, constraints, current, budget, observer, true)
}

fn check_start(instance: &ProblemInstance, start: &Solution) -> Result<()> {
    if start.instance_fingerprint() != instance.fingerprint() {
        return Err(Error::usage("start solution belongs to a different instance"));
    }
    check_partition(instance, &start.visit_lists())
}

fn optimise(
    instance: &ProblemInstance,
    constraints: &SideConstraints,
    start: &Solution,
    budget: &SolveBudget,
    observer: &mut dyn SearchObserver,
    keep_locked_order: bool,
) -> Result<SolveOutcome> {
    budget.validate()?;
    check_start(instance, start)?;
    let started = Instant::now();
    let start_routes = start.visit_lists();
    let mut eval = Evaluator::new(instance, constraints);
    let start_score = eval.score(&start_routes);
    observer.on_progress(&Progress {
        elapsed: started.elapsed(),
        iterations: 0,
        best_objective: start_score.distance,
        best_feasible: start_score.is_feasible(),
        phase: Phase::Checking,
    });
    let proof = {
        let obs = &*observer;
        prove(instance, constraints, ORACLE_LIMIT, &|| obs.should_stop())
    };
    let finish = |status, solution, iterations, message| SolveOutcome {
        status,
        solution,
        iterations,
        elapsed: started.elapsed(),
        message,
    };
    match proof {
        Proof::Cancelled => {
            let start = start.with_constraints(instance, constraints);
            return Ok(finish(SolveStatus::Cancelled, Some(start), 0, None));
        }
        Proof::Unsatisfiable(witness) => {
            return Ok(finish(SolveStatus::InfeasibleConstraints, None, 0, Some(witness)));
        }
        Proof::Satisfiable(_) | Proof::Unknown => {}
    }

    eval.protect(satisfied_orders(instance, constraints, &start_routes));
    if keep_locked_order {
        eval.protect(co_locked_chain(constraints, &start_routes));
    }
    let rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let result = Search::new(&eval, budget, SearchConfig::default(), rng, observer).run(start_routes);
    let iterations = result.iterations;
    if result.stop == StopReason::Cancelled {
        let best = Solution::from_partition(instance, result.best, constraints);
        return Ok(finish(SolveStatus::Cancelled, Some(best), iterations, None));
    }
    if result.best_score.better_than(&start_score) {
        let best = Solution::from_partition(instance, result.best, constraints);
        let status = if result.best_score.is_feasible() {
            SolveStatus::Improved
        } else {
            SolveStatus::BudgetExhausted
        };
        return Ok(finish(status, Some(best), iterations, None));
    }
    let start = start.with_constraints(instance, constraints);
    let status = if start_score.is_feasible() {
        SolveStatus::Unchanged
    } else {
        SolveStatus::BudgetExhausted
    };
    Ok(finish(status, Some(start), iterations, None))
}

pub(crate) enum Proof {
    Satisfiable(Vec<Vec<usize>>),
    Unsatisfiable(String),
    Unknown,
    Cancelled,
}

/// Tries to settle satisfiability without a heuristic search.
pub(crate) fn prove(
    instance: &ProblemInstance,
    constraints: &SideConstraints,
    limit: usize,
    cancelled: &dyn Fn() -> bool,
) -> Proof {
    let n = instance.customer_count();
    let triangle = instance.time_matrix().satisfies_triangle_inequality();
    if triangle {
        if let Some(witness) = unreachable_customer(instance) {
            return Proof::Unsatisfiable(witness);
        }
    }
    if n <= limit {
        let vehicles: Vec<usize> = (0..instance.vehicle_count()).collect();
        let customers: Vec<usize> = (0..n).collect();
        return match enumerate(instance, constraints, &customers, &vehicles, Goal::AnyFeasible, cancelled) {
            exhaustive::Search::Found(routes) => Proof::Satisfiable(routes),
            exhaustive::Search::Unsatisfiable => Proof::Unsatisfiable(
                "no assignment of customers to vehicles satisfies every window, lock and order".to_string(),
            ),
            exhaustive::Search::Cancelled => Proof::Cancelled,
        };
    }
    // customers locked to one vehicle must fit on it together; with the
    // triangle inequality extra customers only delay them
    let all_locked = constraints.locks().len() == n;
    if !(all_locked || triangle) {
        return Proof::Unknown;
    }
    let mut groups = vec![Vec::new(); instance.vehicle_count()];
    for (&c, &v) in constraints.locks() {
        groups[v].push(c);
    }
    let mut routes = vec![Vec::new(); instance.vehicle_count()];
    let mut complete = all_locked;
    for (v, group) in groups.iter().enumerate() {
        if group.is_empty() {
            continue;
        }
        if group.len() > limit {
            complete = false;
            continue;
        }
        match enumerate(instance, constraints, group, &[v], Goal::AnyFeasible, cancelled) {
            exhaustive::Search::Found(found) => routes[v] = found[v].clone(),
            exhaustive::Search::Unsatisfiable => {
                let names: Vec<&str> = group.iter().map(|&c| instance.label(c)).collect();
                return Proof::Unsatisfiable(format!(
                    "customers {} are locked to vehicle {v} but cannot all be served within their time windows",
                    names.join(", ")
                ));
            }
            exhaustive::Search::Cancelled => return Proof::Cancelled,
        }
    }
    if complete {
        Proof::Satisfiable(routes)
    } else {
        Proof::Unknown
    }
}

/// A customer that cannot be served even on a dedicated route.
fn unreachable_customer(instance: &ProblemInstance) -> Option<String> {
    let depot = instance.depot();
    for (c, cust) in instance.customers().iter().enumerate() {
        let n = node(c);
        let start = (depot.horizon_open + instance.travel_time(DEPOT, n)).max(cust.window_open);
        let finish = start + cust.service_period;
        if finish > cust.window_close + EPS {
            return Some(format!("customer {} cannot be reached within its time window", cust.label));
        }
        if finish + instance.travel_time(n, DEPOT) > depot.horizon_close + EPS {
            return Some(format!(
                "customer {} cannot be served and returned to the depot before the horizon closes",
                cust.label
            ));
        }
    }
    None
}

/// Decides whether any solution satisfies every window, lock and order.
/// Small instances and fully locked ones are decided exactly; otherwise a
/// bounded search either finds a witness or gives up.
pub fn check_satisfiable(
    instance: &ProblemInstance,
    constraints: &SideConstraints,
    budget: &SolveBudget,
) -> Result<Satisfiability> {
    budget.validate()?;
    match prove(instance, constraints, ORACLE_LIMIT, &|| false) {
        Proof::Satisfiable(routes) => Ok(Satisfiability::Satisfiable {
            witness: Solution::from_partition(instance, routes, constraints),
        }),
        Proof::Unsatisfiable(witness) => Ok(Satisfiability::Unsatisfiable { witness }),
        Proof::Cancelled => unreachable!("never cancelled"),
        Proof::Unknown => {
            let start = construct(instance, constraints, budget.seed);
            if start.is_feasible() {
                return Ok(Satisfiability::Satisfiable { witness: start });
            }
            let outcome = improve(instance, constraints, &start, budget)?;
            match outcome.solution {
                Some(s) if s.is_feasible() => Ok(Satisfiability::Satisfiable { witness: s }),
                _ => Ok(Satisfiability::Unknown {
                    reason: "no feasible solution found within the budget".to_string(),
                }),
            }
        }
    }
}

/// Minimum-distance feasible solution by complete enumeration. Ties go to
/// the smallest visit sequences, vehicle by vehicle.
pub fn solve_exhaustive(instance: &ProblemInstance, constraints: &SideConstraints) -> Result<ExhaustiveOutcome> {
    solve_exhaustive_with_limit(instance, constraints, ORACLE_LIMIT)
}

pub fn solve_exhaustive_with_limit(
    instance: &ProblemInstance,
    constraints: &SideConstraints,
    limit: usize,
) -> Result<ExhaustiveOutcome> {
    let n = instance.customer_count();
    if n > limit {
        return Err(Error::usage(format!(
            "exhaustive search is limited to {limit} customers, instance has {n}"
        )));
    }
    let vehicles: Vec<usize> = (0..instance.vehicle_count()).collect();
    let customers: Vec<usize> = (0..n).collect();
    match enumerate(instance, constraints, &customers, &vehicles, Goal::Optimum, &|| false) {
        exhaustive::Search::Found(routes) => Ok(ExhaustiveOutcome::Optimal(Solution::from_partition(
            instance,
            routes,
            constraints,
        ))),
        exhaustive::Search::Unsatisfiable => Ok(ExhaustiveOutcome::Unsatisfiable),
        exhaustive::Search::Cancelled => unreachable!("never cancelled"),
    }
}
