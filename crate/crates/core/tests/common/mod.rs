#![allow(dead_code)]

use rand::{Rng, RngCore};
use vrptw_core::instance::default_label;
use vrptw_core::{Customer, Depot, Location, ProblemInstance, SideConstraints};

/// Random planar instance with `n` customers and `vehicles` trucks. Windows
/// are wide enough to be usually feasible and tight enough to bite.
pub fn random_instance(rng: &mut impl Rng, n: usize, vehicles: usize) -> ProblemInstance {
    let horizon: f64 = rng.random_range(150.0..400.0);
    let customers = (0..n)
        .map(|i| {
            let open = rng.random_range(0.0..horizon * 0.6);
            let width = rng.random_range(15.0..horizon);
            let close = (open + width).min(horizon);
            let service = rng.random_range(0.0..10.0f64).min(close - open);
            Customer {
                label: default_label(i),
                key: i as u32 + 1,
                location: Location::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)),
                window_open: open,
                window_close: close,
                service_period: service,
            }
        })
        .collect();
    let depot = Depot {
        location: Location::new(50.0, 50.0),
        horizon_open: 0.0,
        horizon_close: horizon,
    };
    ProblemInstance::with_provider("random", depot, customers, vehicles, "planar").unwrap()
}

/// Random locks and order pairs, keeping only edits the store accepts.
pub fn random_constraints(rng: &mut impl Rng, instance: &ProblemInstance) -> SideConstraints {
    let n = instance.customer_count();
    let mut cons = SideConstraints::new();
    if n == 0 {
        return cons;
    }
    for _ in 0..rng.random_range(0..=n.min(3)) {
        let c = rng.random_range(0..n);
        let v = rng.random_range(0..instance.vehicle_count());
        let _ = cons.add_lock(instance, c, v);
    }
    if n >= 2 {
        for _ in 0..rng.random_range(0..=2) {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            let _ = cons.add_order(instance, a, b);
        }
    }
    cons
}

/// Every way to split `items` into `k` ordered sequences.
pub fn all_assignments(n: usize, k: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut routes = vec![Vec::new(); k];
    place(0, n, &mut routes, &mut out);
    out
}

fn place(next: usize, n: usize, routes: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
    if next == n {
        out.push(routes.clone());
        return;
    }
    for v in 0..routes.len() {
        for p in 0..=routes[v].len() {
            routes[v].insert(p, next);
            place(next + 1, n, routes, out);
            routes[v].remove(p);
        }
    }
}

/// Straightforward timing simulation: is every visit finished by its close
/// and every truck back by the horizon close, with locks and orders met?
pub fn simulate_feasible(instance: &ProblemInstance, routes: &[Vec<usize>], cons: &SideConstraints) -> bool {
    let tol = 1e-9;
    for (v, route) in routes.iter().enumerate() {
        let mut clock = instance.depot().horizon_open;
        let mut here = 0usize;
        for &c in route {
            let cust = &instance.customers()[c];
            clock += instance.time_matrix().get(here, c + 1);
            if clock < cust.window_open {
                clock = cust.window_open;
            }
            clock += cust.service_period;
            if clock > cust.window_close + tol {
                return false;
            }
            here = c + 1;
            if let Some(lv) = cons.lock_of(c) {
                if lv != v {
                    return false;
                }
            }
        }
        if !route.is_empty() && clock + instance.time_matrix().get(here, 0) > instance.depot().horizon_close + tol {
            return false;
        }
    }
    for &(a, b) in cons.orders() {
        let ok = routes.iter().any(|r| {
            let pa = r.iter().position(|&x| x == a);
            let pb = r.iter().position(|&x| x == b);
            matches!((pa, pb), (Some(i), Some(j)) if i < j)
        });
        if !ok {
            return false;
        }
    }
    true
}

pub fn total_distance(instance: &ProblemInstance, routes: &[Vec<usize>]) -> f64 {
    let mut total = 0.0;
    for route in routes.iter().filter(|r| !r.is_empty()) {
        let mut here = 0usize;
        for &c in route {
            total += instance.distance_matrix().get(here, c + 1);
            here = c + 1;
        }
        total += instance.distance_matrix().get(here, 0);
    }
    total
}

/// Brute-force optimum: the minimum distance over every feasible split.
pub fn brute_force_optimum(instance: &ProblemInstance, cons: &SideConstraints) -> Option<f64> {
    all_assignments(instance.customer_count(), instance.vehicle_count())
        .iter()
        .filter(|r| simulate_feasible(instance, r, cons))
        .map(|r| total_distance(instance, r))
        .min_by(f64::total_cmp)
}

pub fn seeded(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

pub fn next_seed(rng: &mut impl RngCore) -> u64 {
    rng.next_u64()
}
