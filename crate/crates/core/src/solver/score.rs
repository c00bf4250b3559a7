//! Lexicographic solution quality used by every search routine:
//! broken locks/orders first, then total overrun, then violation count,
//! then distance.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::constraints::SideConstraints;
use crate::instance::{node, ProblemInstance, DEPOT, EPS};
use crate::solution::{order_satisfied, placements};

/// Feasibility and distance summary of one route.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct RouteEval {
    pub overrun: f64,
    pub count: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    /// Broken locks plus broken order pairs.
    pub structural: usize,
    /// Sum of window and horizon overruns.
    pub overrun: f64,
    /// Number of overrun violations.
    pub count: usize,
    pub distance: f64,
}

impl Score {
    pub fn is_feasible(&self) -> bool {
        self.structural == 0 && self.count == 0
    }

    /// Tolerant lexicographic comparison.
    pub fn compare(&self, other: &Score) -> Ordering {
        self.structural
            .cmp(&other.structural)
            .then_with(|| cmp_eps(self.overrun, other.overrun))
            .then_with(|| self.count.cmp(&other.count))
            .then_with(|| cmp_eps(self.distance, other.distance))
    }

    pub fn better_than(&self, other: &Score) -> bool {
        self.compare(other) == Ordering::Less
    }
}

fn cmp_eps(a: f64, b: f64) -> Ordering {
    if a < b - EPS {
        Ordering::Less
    } else if a > b + EPS {
        Ordering::Greater
    } else {
        Ordering::Equal
    }
}

pub(crate) struct Evaluator<'a> {
    pub instance: &'a ProblemInstance,
    pub constraints: &'a SideConstraints,
    /// Pairs that must stay satisfied in every accepted solution.
    pub protected: Vec<(usize, usize)>,
}

impl<'a> Evaluator<'a> {
    pub fn new(instance: &'a ProblemInstance, constraints: &'a SideConstraints) -> Self {
        Self {
            instance,
            constraints,
            protected: Vec::new(),
        }
    }

    /// Protects `pairs` and every pair they imply by transitivity.
    pub fn protect(&mut self, pairs: impl IntoIterator<Item = (usize, usize)>) {
        let mut set: BTreeSet<(usize, usize)> = self.protected.iter().copied().chain(pairs).collect();
        loop {
            let implied: Vec<(usize, usize)> = set
                .iter()
                .flat_map(|&(a, b)| set.range((b, 0)..(b + 1, 0)).map(move |&(_, c)| (a, c)))
                .filter(|p| !set.contains(p))
                .collect();
            if implied.is_empty() {
                break;
            }
            set.extend(implied);
        }
        self.protected = set.into_iter().collect();
    }

    /// Protected pairs with `customer` on the right.
    pub fn protected_predecessors(&self, customer: usize) -> usize {
        self.protected.iter().filter(|&&(_, b)| b == customer).count()
    }

    pub fn route_eval(&self, visits: &[usize]) -> RouteEval {
        let inst = self.instance;
        if visits.is_empty() {
            return RouteEval::default();
        }
        let mut time = inst.depot().horizon_open;
        let mut at = DEPOT;
        let mut eval = RouteEval::default();
        for &c in visits {
            let cust = inst.customer(c);
            let n = node(c);
            eval.distance += inst.distance(at, n);
            let start = (time + inst.travel_time(at, n)).max(cust.window_open);
            time = start + cust.service_period;
            if time > cust.window_close + EPS {
                eval.overrun += time - cust.window_close;
                eval.count += 1;
            }
            at = n;
        }
        eval.distance += inst.distance(at, DEPOT);
        let back = time + inst.travel_time(at, DEPOT);
        let close = inst.depot().horizon_close;
        if back > close + EPS {
            eval.overrun += back - close;
            eval.count += 1;
        }
        eval
    }

    /// Broken locks and order pairs. With `partial`, pairs with an unrouted
    /// endpoint are ignored.
    pub fn structural(&self, placement: &[Option<(usize, usize)>], partial: bool) -> usize {
        let locks = self
            .constraints
            .locks()
            .iter()
            .filter(|(&c, &v)| match placement[c] {
                Some((rv, _)) => rv != v,
                None => !partial,
            })
            .count();
        let orders = self
            .constraints
            .orders()
            .iter()
            .filter(|&&(a, b)| {
                if partial && (placement[a].is_none() || placement[b].is_none()) {
                    return false;
                }
                !order_satisfied(placement, a, b)
            })
            .count();
        locks + orders
    }

    pub fn protected_ok(&self, placement: &[Option<(usize, usize)>], partial: bool) -> bool {
        self.protected.iter().all(|&(a, b)| {
            (partial && (placement[a].is_none() || placement[b].is_none()))
                || order_satisfied(placement, a, b)
        })
    }

    pub fn placements(&self, routes: &[Vec<usize>]) -> Vec<Option<(usize, usize)>> {
        placements(self.instance.customer_count(), routes)
    }

    pub fn combine(&self, evals: &[RouteEval], structural: usize) -> Score {
        let mut score = Score {
            structural,
            overrun: 0.0,
            count: 0,
            distance: 0.0,
        };
        for e in evals {
            score.overrun += e.overrun;
            score.count += e.count;
            score.distance += e.distance;
        }
        score
    }

    pub fn score(&self, routes: &[Vec<usize>]) -> Score {
        let evals: Vec<RouteEval> = routes.iter().map(|r| self.route_eval(r)).collect();
        let placement = self.placements(routes);
        self.combine(&evals, self.structural(&placement, false))
    }

    /// May `customer` be placed on `vehicle` under the locks?
    pub fn lock_allows(&self, customer: usize, vehicle: usize) -> bool {
        self.constraints.lock_of(customer).is_none_or(|v| v == vehicle)
    }
}

/// Order pairs from the store that `routes` satisfies.
pub(crate) fn satisfied_orders(
    instance: &ProblemInstance,
    constraints: &SideConstraints,
    routes: &[Vec<usize>],
) -> Vec<(usize, usize)> {
    let placement = placements(instance.customer_count(), routes);
    constraints
        .orders()
        .iter()
        .copied()
        .filter(|&(a, b)| order_satisfied(&placement, a, b))
        .collect()
}

/// Consecutive pairs of customers locked to the vehicle they ride on, in
/// their current order. Keeping these satisfied keeps the relative order of
/// co-locked customers fixed.
pub(crate) fn co_locked_chain(constraints: &SideConstraints, routes: &[Vec<usize>]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for (v, route) in routes.iter().enumerate() {
        let locked: Vec<usize> = route
            .iter()
            .copied()
            .filter(|&c| constraints.lock_of(c) == Some(v))
            .collect();
        pairs.extend(locked.windows(2).map(|w| (w[0], w[1])));
    }
    pairs
}
