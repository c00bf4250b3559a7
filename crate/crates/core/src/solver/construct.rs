//! Greedy insertion: building solutions from scratch and repairing them
//! after customers have been removed.

use rand::Rng;

use super::score::{Evaluator, RouteEval, Score};

/// A possibly incomplete assignment with cached per-route evaluations.
pub(crate) struct Partial<'e, 'a> {
    eval: &'e Evaluator<'a>,
    pub routes: Vec<Vec<usize>>,
    evals: Vec<RouteEval>,
    placement: Vec<Option<(usize, usize)>>,
    structural: usize,
    /// Store order pairs touching each customer.
    orders_of: Vec<Vec<(usize, usize)>>,
    /// Protected pairs touching each customer.
    protected_of: Vec<Vec<(usize, usize)>>,
}

impl<'e, 'a> Partial<'e, 'a> {
    pub fn new(eval: &'e Evaluator<'a>, routes: Vec<Vec<usize>>) -> Self {
        let n = eval.instance.customer_count();
        let mut orders_of = vec![Vec::new(); n];
        for &(a, b) in eval.constraints.orders() {
            orders_of[a].push((a, b));
            orders_of[b].push((a, b));
        }
        let mut protected_of = vec![Vec::new(); n];
        for &(a, b) in &eval.protected {
            protected_of[a].push((a, b));
            protected_of[b].push((a, b));
        }
        let evals = routes.iter().map(|r| eval.route_eval(r)).collect();
        let placement = eval.placements(&routes);
        let structural = eval.structural(&placement, true);
        Self {
            eval,
            routes,
            evals,
            placement,
            structural,
            orders_of,
            protected_of,
        }
    }

    fn refresh(&mut self, v: usize) {
        self.evals[v] = self.eval.route_eval(&self.routes[v]);
        for (p, &c) in self.routes[v].iter().enumerate() {
            self.placement[c] = Some((v, p));
        }
    }

    pub fn remove(&mut self, customer: usize) {
        let Some((v, p)) = self.placement[customer] else {
            return;
        };
        self.routes[v].remove(p);
        self.placement[customer] = None;
        self.refresh(v);
        self.structural = self.eval.structural(&self.placement, true);
    }

    pub fn insert(&mut self, customer: usize, vehicle: usize, position: usize) {
        self.routes[vehicle].insert(position, customer);
        self.refresh(vehicle);
        self.structural = self.eval.structural(&self.placement, true);
    }

    /// Is the pair satisfied if `customer` goes to `(vehicle, position)`?
    /// `None` when the other endpoint is not routed yet.
    fn pair_after_insert(&self, pair: (usize, usize), customer: usize, vehicle: usize, position: usize) -> Option<bool> {
        let (a, b) = pair;
        let partner = if a == customer { b } else { a };
        let (pv, pp) = self.placement[partner]?;
        if pv != vehicle {
            return Some(false);
        }
        // positions at or after the insertion point shift right by one
        let partner_before = pp < position;
        Some(if a == customer { !partner_before } else { partner_before })
    }

    /// Score of the assignment after inserting `customer` at
    /// `(vehicle, position)`, or `None` if a protected pair would break.
    pub fn insertion_score(&self, customer: usize, vehicle: usize, position: usize) -> Option<Score> {
        for &pair in &self.protected_of[customer] {
            if self.pair_after_insert(pair, customer, vehicle, position) == Some(false) {
                return None;
            }
        }
        let mut structural = self.structural;
        // a lock on an unrouted customer is ignored in the partial count
        if !self.eval.lock_allows(customer, vehicle) {
            structural += 1;
        }
        for &pair in &self.orders_of[customer] {
            if self.pair_after_insert(pair, customer, vehicle, position) == Some(false) {
                structural += 1;
            }
        }
        let mut route = Vec::with_capacity(self.routes[vehicle].len() + 1);
        route.extend_from_slice(&self.routes[vehicle][..position]);
        route.push(customer);
        route.extend_from_slice(&self.routes[vehicle][position..]);
        let new_eval = self.eval.route_eval(&route);
        let mut score = self.eval.combine(&self.evals, structural);
        let old = self.evals[vehicle];
        score.overrun += new_eval.overrun - old.overrun;
        score.count = score.count + new_eval.count - old.count;
        score.distance += new_eval.distance - old.distance;
        Some(score)
    }

    /// Cheapest admissible position for `customer`. Ties (within tolerance)
    /// are broken uniformly at random when `rng` is given, else by the
    /// first position in vehicle/position order.
    pub fn best_insertion<R: Rng>(&self, customer: usize, mut rng: Option<&mut R>) -> Option<(usize, usize, Score)> {
        let mut best: Option<(usize, usize, Score)> = None;
        let mut ties = 0u32;
        for v in 0..self.routes.len() {
            if !self.eval.lock_allows(customer, v) {
                continue;
            }
            for p in 0..=self.routes[v].len() {
                let Some(score) = self.insertion_score(customer, v, p) else {
                    continue;
                };
                match &best {
                    None => {
                        best = Some((v, p, score));
                        ties = 1;
                    }
                    Some((_, _, b)) => match score.compare(b) {
                        std::cmp::Ordering::Less => {
                            best = Some((v, p, score));
                            ties = 1;
                        }
                        std::cmp::Ordering::Equal => {
                            ties += 1;
                            if let Some(r) = rng.as_deref_mut() {
                                if r.random_range(0..ties) == 0 {
                                    best = Some((v, p, score));
                                }
                            }
                        }
                        std::cmp::Ordering::Greater => {}
                    },
                }
            }
        }
        best
    }

    /// A uniformly random admissible position for `customer`.
    pub fn random_insertion<R: Rng>(&self, customer: usize, rng: &mut R) -> Option<(usize, usize)> {
        let mut choice = None;
        let mut seen = 0u32;
        for v in 0..self.routes.len() {
            if !self.eval.lock_allows(customer, v) {
                continue;
            }
            for p in 0..=self.routes[v].len() {
                if self.insertion_score(customer, v, p).is_some() {
                    seen += 1;
                    if rng.random_range(0..seen) == 0 {
                        choice = Some((v, p));
                    }
                }
            }
        }
        choice
    }
}

/// Global cheapest insertion: repeatedly inserts the (customer, vehicle,
/// position) with the best resulting score until every customer is routed.
/// Returns `None` only if protected pairs make some customer unplaceable.
pub(crate) fn cheapest_insertion<R: Rng>(eval: &Evaluator<'_>, rng: &mut R) -> Option<Vec<Vec<usize>>> {
    let inst = eval.instance;
    let mut partial = Partial::new(eval, vec![Vec::new(); inst.vehicle_count()]);
    let mut pending: Vec<usize> = (0..inst.customer_count()).collect();
    while !pending.is_empty() {
        let mut best: Option<(usize, usize, usize, Score)> = None;
        let mut ties = 0u32;
        for (i, &c) in pending.iter().enumerate() {
            if let Some((v, p, score)) = partial.best_insertion::<R>(c, None) {
                match &best {
                    Some((_, _, _, b)) if score.compare(b) == std::cmp::Ordering::Greater => {}
                    Some((_, _, _, b)) if score.compare(b) == std::cmp::Ordering::Equal => {
                        ties += 1;
                        if rng.random_range(0..ties) == 0 {
                            best = Some((i, v, p, score));
                        }
                    }
                    _ => {
                        best = Some((i, v, p, score));
                        ties = 1;
                    }
                }
            }
        }
        let (i, v, p, _) = best?;
        let c = pending.remove(i);
        partial.insert(c, v, p);
    }
    Some(partial.routes)
}

/// Inserts `order` one customer at a time, each at its best position.
pub(crate) fn sequential_insertion<R: Rng>(
    partial: &mut Partial<'_, '_>,
    order: &[usize],
    rng: &mut R,
) -> bool {
    noisy_insertion(partial, order, 0.0, rng)
}

/// As [`sequential_insertion`], but each customer goes to a random
/// admissible position with probability `noise`.
pub(crate) fn noisy_insertion<R: Rng>(partial: &mut Partial<'_, '_>, order: &[usize], noise: f64, rng: &mut R) -> bool {
    for &c in order {
        let slot = if noise > 0.0 && rng.random_bool(noise) {
            partial.random_insertion(c, rng)
        } else {
            partial.best_insertion(c, Some(&mut *rng)).map(|(v, p, _)| (v, p))
        };
        match slot {
            Some((v, p)) => partial.insert(c, v, p),
            None => return false,
        }
    }
    true
}
