//! Depth-first enumeration of every assignment and visit order, used as the
//! reference optimum on small instances and as a feasibility prover.

use std::cmp::Ordering;

use crate::constraints::SideConstraints;
use crate::instance::{node, ProblemInstance, DEPOT, EPS};

/// What the enumeration is asked to find.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Goal {
    /// Minimum distance, ties broken by the smallest visit sequences.
    Optimum,
    /// Any feasible assignment.
    AnyFeasible,
}

pub(crate) enum Search {
    Found(Vec<Vec<usize>>),
    Unsatisfiable,
    Cancelled,
}

/// Enumerates feasible routes for `customers` over `vehicles`. Returned
/// routes are indexed by vehicle over the whole fleet; vehicles outside
/// `vehicles` stay empty.
pub(crate) fn enumerate(
    instance: &ProblemInstance,
    constraints: &SideConstraints,
    customers: &[usize],
    vehicles: &[usize],
    goal: Goal,
    cancelled: &dyn Fn() -> bool,
) -> Search {
    let n = customers.len();
    assert!(n <= 63, "enumeration is limited to 63 customers");
    let index_of = |c: usize| customers.iter().position(|&x| x == c);
    // predecessors[i]: bitmask of local customers that must precede i
    let mut predecessors = vec![0u64; n];
    let mut successors = vec![0u64; n];
    for &(a, b) in constraints.orders() {
        if let (Some(i), Some(j)) = (index_of(a), index_of(b)) {
            predecessors[j] |= 1 << i;
            successors[i] |= 1 << j;
        }
    }
    let locks: Vec<Option<usize>> = customers.iter().map(|&c| constraints.lock_of(c)).collect();
    let mut dfs = Dfs {
        instance,
        customers,
        vehicles,
        predecessors,
        successors,
        locks,
        goal,
        cancelled,
        nodes: 0,
        stop: false,
        cancel_seen: false,
        routes: vec![Vec::new(); vehicles.len()],
        best: None,
    };
    let all = if n == 0 { 0 } else { (1u64 << n) - 1 };
    dfs.extend(0, all, 0, DEPOT, instance.depot().horizon_open, 0.0);
    if dfs.cancel_seen {
        return Search::Cancelled;
    }
    match dfs.best {
        Some((_, local)) => {
            let mut routes = vec![Vec::new(); instance.vehicle_count()];
            for (k, &v) in vehicles.iter().enumerate() {
                routes[v] = local[k].iter().map(|&i| customers[i]).collect();
            }
            Search::Found(routes)
        }
        None => Search::Unsatisfiable,
    }
}

struct Dfs<'a> {
    instance: &'a ProblemInstance,
    customers: &'a [usize],
    vehicles: &'a [usize],
    predecessors: Vec<u64>,
    successors: Vec<u64>,
    locks: Vec<Option<usize>>,
    goal: Goal,
    cancelled: &'a dyn Fn() -> bool,
    nodes: u64,
    stop: bool,
    cancel_seen: bool,
    routes: Vec<Vec<usize>>,
    best: Option<(f64, Vec<Vec<usize>>)>,
}

impl Dfs<'_> {
    /// `k`: vehicle being built; `remaining`/`on_route`: local bitmasks.
    fn extend(&mut self, k: usize, remaining: u64, on_route: u64, at: usize, time: f64, dist: f64) {
        if self.stop {
            return;
        }
        self.nodes += 1;
        if self.nodes % 4096 == 0 && (self.cancelled)() {
            self.stop = true;
            self.cancel_seen = true;
            return;
        }
        if let Some((best, _)) = &self.best {
            if dist > best + EPS {
                return;
            }
        }
        let inst = self.instance;
        let vehicle = self.vehicles[k];
        let mut rest = remaining;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if self.locks[i].is_some_and(|v| v != vehicle) {
                continue;
            }
            if self.predecessors[i] & !on_route != 0 {
                continue;
            }
            let c = self.customers[i];
            let cust = inst.customer(c);
            let n = node(c);
            let start = (time + inst.travel_time(at, n)).max(cust.window_open);
            let finish = start + cust.service_period;
            if finish > cust.window_close + EPS {
                continue;
            }
            self.routes[k].push(i);
            self.extend(
                k,
                remaining & !(1 << i),
                on_route | (1 << i),
                n,
                finish,
                dist + inst.distance(at, n),
            );
            self.routes[k].pop();
            if self.stop {
                return;
            }
        }
        self.close(k, remaining, on_route, at, time, dist);
    }

    fn close(&mut self, k: usize, remaining: u64, on_route: u64, at: usize, time: f64, dist: f64) {
        let inst = self.instance;
        if at != DEPOT && time + inst.travel_time(at, DEPOT) > inst.depot().horizon_close + EPS {
            return;
        }
        let mut members = on_route;
        while members != 0 {
            let i = members.trailing_zeros() as usize;
            members &= members - 1;
            if self.successors[i] & remaining != 0 {
                return;
            }
        }
        let vehicle = self.vehicles[k];
        let mut rest = remaining;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if self.locks[i] == Some(vehicle) {
                return;
            }
        }
        let total = if at == DEPOT { dist } else { dist + inst.distance(at, DEPOT) };
        if remaining == 0 {
            self.record(total);
            return;
        }
        if k + 1 == self.vehicles.len() {
            return;
        }
        let open = inst.depot().horizon_open;
        self.extend(k + 1, remaining, 0, DEPOT, open, total);
    }

    fn record(&mut self, total: f64) {
        let replace = match &self.best {
            None => true,
            Some((best, routes)) => {
                if total < best - EPS {
                    true
                } else if total <= best + EPS {
                    compare_routes(&self.global_routes(), &globalise(self.customers, routes)) == Ordering::Less
                } else {
                    false
                }
            }
        };
        if replace {
            self.best = Some((total, self.routes.clone()));
        }
        if self.goal == Goal::AnyFeasible {
            self.stop = true;
        }
    }

    fn global_routes(&self) -> Vec<Vec<usize>> {
        globalise(self.customers, &self.routes)
    }
}

fn globalise(customers: &[usize], routes: &[Vec<usize>]) -> Vec<Vec<usize>> {
    routes
        .iter()
        .map(|r| r.iter().map(|&i| customers[i]).collect())
        .collect()
}

/// Orders route lists vehicle by vehicle: a non-empty route sorts before an
/// empty one, non-empty routes compare lexicographically.
pub(crate) fn compare_routes(a: &[Vec<usize>], b: &[Vec<usize>]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let ord = match (x.is_empty(), y.is_empty()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            (false, false) => x.cmp(y),
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    a.len().cmp(&b.len())
}
