//! Solutions: per-vehicle visit sequences with derived timing, total
//! distance, violations and workload figures.
//!
//! A solution is an immutable snapshot. Infeasible solutions are
//! representable; their violations are listed rather than refused.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::constraints::{ConstraintsDocument, SideConstraints};
use crate::error::{Error, Result};
use crate::instance::{node, ProblemInstance, DEPOT, EPS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisitTiming {
    pub customer: usize,
    pub arrival: f64,
    pub service_start: f64,
    pub service_finish: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub departure: f64,
    pub visits: Vec<VisitTiming>,
    pub return_time: f64,
}

/// Timing of a vehicle that leaves the depot when the horizon opens and
/// serves `visits` in order, waiting for windows that have not opened yet.
pub fn propagate_timing(instance: &ProblemInstance, visits: &[usize]) -> Schedule {
    let departure = instance.depot().horizon_open;
    let mut time = departure;
    let mut at = DEPOT;
    let mut timing = Vec::with_capacity(visits.len());
    for &c in visits {
        let customer = instance.customer(c);
        let arrival = time + instance.travel_time(at, node(c));
        let service_start = arrival.max(customer.window_open);
        let service_finish = service_start + customer.service_period;
        timing.push(VisitTiming {
            customer: c,
            arrival,
            service_start,
            service_finish,
        });
        time = service_finish;
        at = node(c);
    }
    let return_time = if visits.is_empty() {
        departure
    } else {
        time + instance.travel_time(at, DEPOT)
    };
    Schedule {
        departure,
        visits: timing,
        return_time,
    }
}

/// Length of the closed tour depot → visits → depot; 0 for an empty route.
pub fn route_distance(instance: &ProblemInstance, visits: &[usize]) -> f64 {
    if visits.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    let mut at = DEPOT;
    for &c in visits {
        total += instance.distance(at, node(c));
        at = node(c);
    }
    total + instance.distance(at, DEPOT)
}

/// Total distance over all routes.
pub fn evaluate(instance: &ProblemInstance, routes: &[Vec<usize>]) -> f64 {
    routes.iter().map(|r| route_distance(instance, r)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    WindowOverrun,
    HorizonOverrun,
    LockBroken,
    OrderBroken,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub customers: Vec<usize>,
    pub vehicle: Option<usize>,
    /// Overrun amount for the overrun kinds; 0 for lock/order breaks.
    pub magnitude: f64,
}

impl Violation {
    pub fn is_structural(&self) -> bool {
        matches!(self.kind, ViolationKind::LockBroken | ViolationKind::OrderBroken)
    }
}

/// Lists every violation of `routes` under `constraints`.
pub fn detect_violations(
    instance: &ProblemInstance,
    routes: &[Vec<usize>],
    constraints: &SideConstraints,
) -> Vec<Violation> {
    let schedules: Vec<Schedule> = routes.iter().map(|r| propagate_timing(instance, r)).collect();
    detect_with_schedules(instance, routes, &schedules, constraints)
}

fn detect_with_schedules(
    instance: &ProblemInstance,
    routes: &[Vec<usize>],
    schedules: &[Schedule],
    constraints: &SideConstraints,
) -> Vec<Violation> {
    let mut out = Vec::new();
    for (v, schedule) in schedules.iter().enumerate() {
        for t in &schedule.visits {
            let close = instance.customer(t.customer).window_close;
            if t.service_finish > close + EPS {
                out.push(Violation {
                    kind: ViolationKind::WindowOverrun,
                    customers: vec![t.customer],
                    vehicle: Some(v),
                    magnitude: t.service_finish - close,
                });
            }
        }
    }
    let horizon_close = instance.depot().horizon_close;
    for (v, schedule) in schedules.iter().enumerate() {
        if schedule.return_time > horizon_close + EPS {
            out.push(Violation {
                kind: ViolationKind::HorizonOverrun,
                customers: routes[v].clone(),
                vehicle: Some(v),
                magnitude: schedule.return_time - horizon_close,
            });
        }
    }
    let placement = placements(instance.customer_count(), routes);
    for (&c, &v) in constraints.locks() {
        if placement[c].map(|(rv, _)| rv) != Some(v) {
            out.push(Violation {
                kind: ViolationKind::LockBroken,
                customers: vec![c],
                vehicle: Some(v),
                magnitude: 0.0,
            });
        }
    }
    for &(a, b) in constraints.orders() {
        if !order_satisfied(&placement, a, b) {
            out.push(Violation {
                kind: ViolationKind::OrderBroken,
                customers: vec![a, b],
                vehicle: None,
                magnitude: 0.0,
            });
        }
    }
    out
}

/// `(vehicle, position)` of each customer, `None` when unrouted.
pub fn placements(customer_count: usize, routes: &[Vec<usize>]) -> Vec<Option<(usize, usize)>> {
    let mut out = vec![None; customer_count];
    for (v, route) in routes.iter().enumerate() {
        for (p, &c) in route.iter().enumerate() {
            if c < customer_count {
                out[c] = Some((v, p));
            }
        }
    }
    out
}

/// True when `before` precedes `after` on the same vehicle.
pub fn order_satisfied(placement: &[Option<(usize, usize)>], before: usize, after: usize) -> bool {
    match (placement[before], placement[after]) {
        (Some((va, pa)), Some((vb, pb))) => va == vb && pa < pb,
        _ => false,
    }
}

/// Checks that `routes` has one entry per vehicle and serves every customer
/// exactly once.
pub fn check_partition(instance: &ProblemInstance, routes: &[Vec<usize>]) -> Result<()> {
    if routes.len() != instance.vehicle_count() {
        return Err(Error::usage(format!(
            "solution has {} routes, instance has {} vehicles",
            routes.len(),
            instance.vehicle_count()
        )));
    }
    let n = instance.customer_count();
    let mut seen = vec![false; n];
    for &c in routes.iter().flatten() {
        if c >= n {
            return Err(Error::usage(format!("customer #{c} does not exist")));
        }
        if std::mem::replace(&mut seen[c], true) {
            return Err(Error::usage(format!(
                "customer {} is visited more than once",
                instance.label(c)
            )));
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::usage(format!(
            "customer {} is not visited",
            instance.label(missing)
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub vehicle: usize,
    pub visits: Vec<usize>,
    pub schedule: Schedule,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadStats {
    pub customers_per_vehicle: Vec<usize>,
    pub route_distances: Vec<f64>,
}

impl WorkloadStats {
    /// Largest minus smallest per-vehicle customer count.
    pub fn imbalance(&self) -> usize {
        let max = self.customers_per_vehicle.iter().max().copied().unwrap_or(0);
        let min = self.customers_per_vehicle.iter().min().copied().unwrap_or(0);
        max - min
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    instance: u64,
    routes: Vec<Route>,
    objective: f64,
    violations: Vec<Violation>,
}

impl Solution {
    /// Builds a solution from per-vehicle visit lists. The lists must form
    /// a partition of the customers; violations are allowed.
    pub fn new(
        instance: &ProblemInstance,
        routes: Vec<Vec<usize>>,
        constraints: &SideConstraints,
    ) -> Result<Self> {
        check_partition(instance, &routes)?;
        Ok(Self::from_partition(instance, routes, constraints))
    }

    pub(crate) fn from_partition(
        instance: &ProblemInstance,
        routes: Vec<Vec<usize>>,
        constraints: &SideConstraints,
    ) -> Self {
        let schedules: Vec<Schedule> = routes.iter().map(|r| propagate_timing(instance, r)).collect();
        let violations = detect_with_schedules(instance, &routes, &schedules, constraints);
        let routes: Vec<Route> = routes
            .into_iter()
            .zip(schedules)
            .enumerate()
            .map(|(vehicle, (visits, schedule))| Route {
                vehicle,
                distance: route_distance(instance, &visits),
                visits,
                schedule,
            })
            .collect();
        let objective = routes.iter().map(|r| r.distance).sum();
        Self {
            instance: instance.fingerprint(),
            routes,
            objective,
            violations,
        }
    }

    /// All routes empty.
    pub fn empty(instance: &ProblemInstance) -> Self {
        Self::from_partition(
            instance,
            vec![Vec::new(); instance.vehicle_count()],
            &SideConstraints::new(),
        )
    }

    /// The same routes re-evaluated under other constraints.
    pub fn with_constraints(&self, instance: &ProblemInstance, constraints: &SideConstraints) -> Self {
        Self::from_partition(instance, self.visit_lists(), constraints)
    }

    pub fn instance_fingerprint(&self) -> u64 {
        self.instance
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    pub fn visit_lists(&self) -> Vec<Vec<usize>> {
        self.routes.iter().map(|r| r.visits.clone()).collect()
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    /// Vehicle serving `customer`.
    pub fn vehicle_of(&self, customer: usize) -> Option<usize> {
        self.routes
            .iter()
            .find(|r| r.visits.contains(&customer))
            .map(|r| r.vehicle)
    }

    pub fn workload_stats(&self) -> WorkloadStats {
        workload_stats(self)
    }

    /// Moves `customer` to `target_position` of `target_vehicle`'s route,
    /// the position being counted after the customer has been taken out.
    pub fn with_move(
        &self,
        instance: &ProblemInstance,
        constraints: &SideConstraints,
        customer: usize,
        target_vehicle: usize,
        target_position: usize,
    ) -> Result<Self> {
        if customer >= instance.customer_count() {
            return Err(Error::usage(format!("customer #{customer} does not exist")));
        }
        if target_vehicle >= self.routes.len() {
            return Err(Error::usage(format!("vehicle {target_vehicle} does not exist")));
        }
        let mut routes = self.visit_lists();
        for r in &mut routes {
            r.retain(|&c| c != customer);
        }
        let target = &mut routes[target_vehicle];
        if target_position > target.len() {
            return Err(Error::usage(format!(
                "position {target_position} is out of range for vehicle {target_vehicle} ({} other visits)",
                target.len()
            )));
        }
        target.insert(target_position, customer);
        Solution::new(instance, routes, constraints)
    }
}

pub fn workload_stats(solution: &Solution) -> WorkloadStats {
    WorkloadStats {
        customers_per_vehicle: solution.routes.iter().map(|r| r.visits.len()).collect(),
        route_distances: solution.routes.iter().map(|r| r.distance).collect(),
    }
}

/// Directed legs of a solution as `(from_node, to_node)`, depot legs
/// included and vehicle labels ignored.
pub fn arc_set(routes: &[Vec<usize>]) -> BTreeSet<(usize, usize)> {
    let mut arcs = BTreeSet::new();
    for route in routes.iter().filter(|r| !r.is_empty()) {
        let mut at = DEPOT;
        for &c in route {
            arcs.insert((at, node(c)));
            at = node(c);
        }
        arcs.insert((at, DEPOT));
    }
    arcs
}

/// Normalised symmetric difference of the two arc sets, in `[0, 1]`.
pub fn arc_diversity(a: &BTreeSet<(usize, usize)>, b: &BTreeSet<(usize, usize)>) -> f64 {
    let total = a.len() + b.len();
    if total == 0 {
        return 0.0;
    }
    let differing = a.symmetric_difference(b).count();
    differing as f64 / total as f64
}

/// Routing-sequence difference between two solutions of the same instance.
pub fn diversity(a: &Solution, b: &Solution) -> Result<f64> {
    if a.instance != b.instance {
        return Err(Error::usage("solutions belong to different instances"));
    }
    Ok(arc_diversity(&arc_set(&a.visit_lists()), &arc_set(&b.visit_lists())))
}

// ---------------------------------------------------------------------------
// Solution document
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionDocument {
    pub instance: String,
    pub vehicle_count: usize,
    pub objective: f64,
    pub routes: Vec<RouteEntry>,
    pub violations: Vec<ViolationEntry>,
    pub constraints: ConstraintsDocument,
    pub workload: WorkloadEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteEntry {
    pub vehicle: usize,
    pub visits: Vec<String>,
    pub distance: f64,
    pub departure: f64,
    pub return_time: f64,
    pub timing: Vec<TimingEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingEntry {
    pub customer: String,
    pub arrival: f64,
    pub start: f64,
    pub finish: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViolationEntry {
    pub kind: ViolationKind,
    pub customers: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vehicle: Option<usize>,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadEntry {
    pub customers_per_vehicle: Vec<usize>,
    pub route_distances: Vec<f64>,
}

impl SolutionDocument {
    pub fn new(instance: &ProblemInstance, solution: &Solution, constraints: &SideConstraints) -> Self {
        let label = |c: usize| instance.label(c).to_string();
        let stats = solution.workload_stats();
        Self {
            instance: instance.name().to_string(),
            vehicle_count: instance.vehicle_count(),
            objective: solution.objective(),
            routes: solution
                .routes()
                .iter()
                .map(|r| RouteEntry {
                    vehicle: r.vehicle,
                    visits: r.visits.iter().map(|&c| label(c)).collect(),
                    distance: r.distance,
                    departure: r.schedule.departure,
                    return_time: r.schedule.return_time,
                    timing: r
                        .schedule
                        .visits
                        .iter()
                        .map(|t| TimingEntry {
                            customer: label(t.customer),
                            arrival: t.arrival,
                            start: t.service_start,
                            finish: t.service_finish,
                        })
                        .collect(),
                })
                .collect(),
            violations: solution
                .violations()
                .iter()
                .map(|v| ViolationEntry {
                    kind: v.kind,
                    customers: v.customers.iter().map(|&c| label(c)).collect(),
                    vehicle: v.vehicle,
                    magnitude: v.magnitude,
                })
                .collect(),
            constraints: constraints.to_document(instance),
            workload: WorkloadEntry {
                customers_per_vehicle: stats.customers_per_vehicle,
                route_distances: stats.route_distances,
            },
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serialisable")
    }

    /// Rebuilds the solution and constraints from their visit lists and
    /// checks that every derived field in the document matches.
    pub fn into_solution(&self, instance: &ProblemInstance) -> Result<(Solution, SideConstraints)> {
        if self.vehicle_count != instance.vehicle_count() || self.routes.len() != instance.vehicle_count() {
            return Err(Error::Document(format!(
                "document has {} routes for {} vehicles; instance has {} vehicles",
                self.routes.len(),
                self.vehicle_count,
                instance.vehicle_count()
            )));
        }
        let mut routes = vec![Vec::new(); instance.vehicle_count()];
        for (i, entry) in self.routes.iter().enumerate() {
            if entry.vehicle != i {
                return Err(Error::Document(format!("route {i} is labelled vehicle {}", entry.vehicle)));
            }
            for label in &entry.visits {
                let c = instance
                    .customer_by_label(label)
                    .ok_or_else(|| Error::Document(format!("unknown customer '{label}'")))?;
                routes[i].push(c);
            }
        }
        let constraints = SideConstraints::from_document(&self.constraints, instance)?;
        let solution = Solution::new(instance, routes, &constraints)?;
        let rebuilt = SolutionDocument::new(instance, &solution, &constraints);
        if rebuilt.objective.to_bits() != self.objective.to_bits() {
            return Err(Error::Document(format!(
                "objective {} does not match the routes ({})",
                self.objective, rebuilt.objective
            )));
        }
        if &rebuilt != self {
            return Err(Error::Document(
                "derived timing, violations or workload do not match the routes".into(),
            ));
        }
        Ok((solution, constraints))
    }
}
