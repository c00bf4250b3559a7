//! Neighbourhood search with destroy-repair kicks.
//!
//! Each iteration evaluates one move (relocate, inter-route swap, intra-route
//! 2-opt, or-opt segment move) drawn from a shuffled enumeration of the
//! current neighbourhood; the first improving move is applied. When a sweep
//! finds nothing, or after `stagnation_limit` consecutive rejected moves, a
//! kick removes a fraction of the unlocked customers and reinserts them
//! greedily in random order.

use std::time::Instant;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::construct::{noisy_insertion, Partial};
use super::score::{Evaluator, RouteEval, Score};
use super::{Phase, Progress, SearchObserver, SolveBudget};

#[derive(Debug, Clone, Copy)]
pub struct SearchConfig {
    pub stagnation_limit: u64,
    pub kick_fraction: f64,
    /// Kicks without a new best before the walk returns to the best.
    pub restart_after_kicks: u32,
    pub progress_every: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            stagnation_limit: 200,
            kick_fraction: 0.50,
            restart_after_kicks: 10,
            progress_every: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Move {
    Relocate { from: usize, i: usize, to: usize, j: usize },
    Swap { r1: usize, i: usize, r2: usize, j: usize },
    TwoOpt { r: usize, i: usize, j: usize },
    OrOpt { from: usize, i: usize, len: usize, to: usize, j: usize, reversed: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum StopReason {
    Budget,
    Cancelled,
    /// No admissible move or kick exists.
    Exhausted,
}

pub(crate) struct SearchResult {
    pub best: Vec<Vec<usize>>,
    pub best_score: Score,
    pub iterations: u64,
    pub stop: StopReason,
}

pub(crate) struct Search<'e, 'a, 'o> {
    eval: &'e Evaluator<'a>,
    budget: &'e SolveBudget,
    config: SearchConfig,
    rng: ChaCha8Rng,
    observer: &'o mut dyn SearchObserver,
    started: Instant,
    iterations: u64,
    last_best_at: u64,
    best_score: Option<Score>,
}

impl<'e, 'a, 'o> Search<'e, 'a, 'o> {
    pub fn new(
        eval: &'e Evaluator<'a>,
        budget: &'e SolveBudget,
        config: SearchConfig,
        rng: ChaCha8Rng,
        observer: &'o mut dyn SearchObserver,
    ) -> Self {
        Self {
            eval,
            budget,
            config,
            rng,
            observer,
            started: Instant::now(),
            iterations: 0,
            last_best_at: 0,
            best_score: None,
        }
    }

    fn stop_reason(&self) -> Option<StopReason> {
        if self.observer.should_stop() {
            return Some(StopReason::Cancelled);
        }
        if self.budget.iterations.is_some_and(|limit| self.iterations >= limit) {
            return Some(StopReason::Budget);
        }
        if self
            .budget
            .stall_iterations
            .is_some_and(|limit| self.iterations - self.last_best_at >= limit)
        {
            return Some(StopReason::Budget);
        }
        if self.budget.wall_time.is_some_and(|limit| self.started.elapsed() >= limit) {
            return Some(StopReason::Budget);
        }
        None
    }

    fn report(&mut self) {
        if let Some(best) = self.best_score {
            let progress = Progress {
                elapsed: self.started.elapsed(),
                iterations: self.iterations,
                best_objective: best.distance,
                best_feasible: best.is_feasible(),
                phase: Phase::Searching,
            };
            self.observer.on_progress(&progress);
        }
    }

    pub fn run(mut self, start: Vec<Vec<usize>>) -> SearchResult {
        let eval = self.eval;
        let mut current = start;
        let mut current_evals: Vec<RouteEval> = current.iter().map(|r| eval.route_eval(r)).collect();
        let mut current_score = eval.score(&current);
        let mut best = current.clone();
        let mut best_score = current_score;
        self.best_score = Some(best_score);
        self.report();
        let mut kicks_since_best = 0u32;

        let stop = 'outer: loop {
            // descent
            let mut rejected = 0u64;
            let mut proven_local_optimum;
            loop {
                let mut moves = self.neighbourhood(&current);
                moves.shuffle(&mut self.rng);
                let mut improved = false;
                proven_local_optimum = true;
                for mv in moves {
                    if let Some(reason) = self.stop_reason() {
                        break 'outer reason;
                    }
                    self.iterations += 1;
                    if self.iterations % self.config.progress_every == 0 {
                        self.report();
                    }
                    let Some((changes, score)) = self.try_move(&current, &current_evals, mv) else {
                        rejected += 1;
                        if rejected >= self.config.stagnation_limit {
                            proven_local_optimum = false;
                            break;
                        }
                        continue;
                    };
                    if score.better_than(&current_score) {
                        for (r, visits) in changes {
                            current_evals[r] = eval.route_eval(&visits);
                            current[r] = visits;
                        }
                        current_score = score;
                        rejected = 0;
                        improved = true;
                        if current_score.better_than(&best_score) {
                            best.clone_from(&current);
                            best_score = current_score;
                            self.best_score = Some(best_score);
                            self.last_best_at = self.iterations;
                            kicks_since_best = 0;
                            self.report();
                        }
                        break;
                    }
                    rejected += 1;
                    if rejected >= self.config.stagnation_limit {
                        proven_local_optimum = false;
                        break;
                    }
                }
                if !improved {
                    break;
                }
            }
            self.observer.on_local_optimum(&current, &current_score);

            if let Some(reason) = self.stop_reason() {
                break reason;
            }
            if kicks_since_best >= self.config.restart_after_kicks {
                current.clone_from(&best);
                current_evals = current.iter().map(|r| eval.route_eval(r)).collect();
                current_score = best_score;
                kicks_since_best = 0;
            }
            self.iterations += 1;
            kicks_since_best += 1;
            match self.kick(&current) {
                Some(kicked) => {
                    current = kicked;
                    current_evals = current.iter().map(|r| eval.route_eval(r)).collect();
                    current_score = eval.score(&current);
                    if current_score.better_than(&best_score) {
                        best.clone_from(&current);
                        best_score = current_score;
                        self.best_score = Some(best_score);
                        self.last_best_at = self.iterations;
                        kicks_since_best = 0;
                        self.report();
                    }
                }
                None if proven_local_optimum => break StopReason::Exhausted,
                None => {}
            }
        };
        self.report();
        SearchResult {
            best,
            best_score,
            iterations: self.iterations,
            stop,
        }
    }

    fn neighbourhood(&self, routes: &[Vec<usize>]) -> Vec<Move> {
        let eval = self.eval;
        let allows = |c: usize, from: usize, to: usize| from == to || eval.lock_allows(c, to);
        let mut moves = Vec::new();
        let nv = routes.len();
        for from in 0..nv {
            let len_from = routes[from].len();
            for i in 0..len_from {
                let c = routes[from][i];
                for to in 0..nv {
                    if !allows(c, from, to) {
                        continue;
                    }
                    let slots = if to == from { len_from } else { routes[to].len() + 1 };
                    for j in 0..slots {
                        if to == from && j == i {
                            continue;
                        }
                        moves.push(Move::Relocate { from, i, to, j });
                    }
                }
            }
        }
        for r1 in 0..nv {
            for r2 in (r1 + 1)..nv {
                for (i, &a) in routes[r1].iter().enumerate() {
                    if !allows(a, r1, r2) {
                        continue;
                    }
                    for (j, &b) in routes[r2].iter().enumerate() {
                        if allows(b, r2, r1) {
                            moves.push(Move::Swap { r1, i, r2, j });
                        }
                    }
                }
            }
        }
        for (r, route) in routes.iter().enumerate() {
            for i in 0..route.len() {
                for j in (i + 1)..route.len() {
                    moves.push(Move::TwoOpt { r, i, j });
                }
            }
        }
        for from in 0..nv {
            let len_from = routes[from].len();
            for len in 2..=3usize {
                if len > len_from {
                    continue;
                }
                for i in 0..=(len_from - len) {
                    let segment = &routes[from][i..i + len];
                    for to in 0..nv {
                        if !segment.iter().all(|&c| allows(c, from, to)) {
                            continue;
                        }
                        let slots = if to == from { len_from - len + 1 } else { routes[to].len() + 1 };
                        for j in 0..slots {
                            for reversed in [false, true] {
                                if to == from && j == i && !reversed {
                                    continue;
                                }
                                moves.push(Move::OrOpt { from, i, len, to, j, reversed });
                            }
                        }
                    }
                }
            }
        }
        moves
    }

    fn apply(routes: &[Vec<usize>], mv: Move) -> Vec<(usize, Vec<usize>)> {
        match mv {
            Move::Relocate { from, i, to, j } => {
                let mut src = routes[from].clone();
                let c = src.remove(i);
                if from == to {
                    src.insert(j, c);
                    vec![(from, src)]
                } else {
                    let mut dst = routes[to].clone();
                    dst.insert(j, c);
                    vec![(from, src), (to, dst)]
                }
            }
            Move::Swap { r1, i, r2, j } => {
                let mut a = routes[r1].clone();
                let mut b = routes[r2].clone();
                std::mem::swap(&mut a[i], &mut b[j]);
                vec![(r1, a), (r2, b)]
            }
            Move::TwoOpt { r, i, j } => {
                let mut route = routes[r].clone();
                route[i..=j].reverse();
                vec![(r, route)]
            }
            Move::OrOpt { from, i, len, to, j, reversed } => {
                let mut src = routes[from].clone();
                let mut segment: Vec<usize> = src.drain(i..i + len).collect();
                if reversed {
                    segment.reverse();
                }
                if from == to {
                    src.splice(j..j, segment);
                    vec![(from, src)]
                } else {
                    let mut dst = routes[to].clone();
                    dst.splice(j..j, segment);
                    vec![(from, src), (to, dst)]
                }
            }
        }
    }

    /// Evaluates a move; `None` when it would break a protected pair.
    fn try_move(
        &self,
        routes: &[Vec<usize>],
        evals: &[RouteEval],
        mv: Move,
    ) -> Option<(Vec<(usize, Vec<usize>)>, Score)> {
        let eval = self.eval;
        let changes = Self::apply(routes, mv);
        let mut new_evals = evals.to_vec();
        for (r, visits) in &changes {
            new_evals[*r] = eval.route_eval(visits);
        }
        let mut placement = eval.placements(routes);
        for (r, visits) in &changes {
            for (p, &c) in visits.iter().enumerate() {
                placement[c] = Some((*r, p));
            }
        }
        if !eval.protected_ok(&placement, false) {
            return None;
        }
        let score = eval.combine(&new_evals, eval.structural(&placement, false));
        Some((changes, score))
    }

    /// Removes a random share of the movable customers, or the movable
    /// customers of one route, and reinserts them in random order.
    fn kick(&mut self, routes: &[Vec<usize>]) -> Option<Vec<Vec<usize>>> {
        let eval = self.eval;
        // a locked customer may move within its route unless a protected
        // pair pins it or it rides alone
        let movable = |c: usize, route: &Vec<usize>| {
            eval.constraints.lock_of(c).is_none()
                || (route.len() > 1 && !eval.protected.iter().any(|&(a, b)| a == c || b == c))
        };
        let free: Vec<usize> = routes
            .iter()
            .flat_map(|r| r.iter().copied().filter(move |&c| movable(c, r)))
            .collect();
        if free.is_empty() {
            return None;
        }
        let occupied: Vec<&Vec<usize>> = routes.iter().filter(|r| !r.is_empty()).collect();
        let mut removed: Vec<usize> = if occupied.len() > 1 && self.rng.random_bool(0.3) {
            let route = occupied.choose(&mut self.rng).expect("occupied route");
            route.iter().copied().filter(|&c| movable(c, route)).collect()
        } else {
            let most = ((free.len() as f64 * self.config.kick_fraction).round() as usize).clamp(2, free.len().max(2));
            let count = self.rng.random_range(1..=most).min(free.len());
            free.choose_multiple(&mut self.rng, count).copied().collect()
        };
        if removed.is_empty() {
            return Some(routes.to_vec());
        }
        removed.shuffle(&mut self.rng);
        // predecessors first, so chained customers always find a slot
        removed.sort_by_key(|&c| eval.protected_predecessors(c));
        let mut partial = Partial::new(eval, routes.to_vec());
        for &c in &removed {
            partial.remove(c);
        }
        let noise = *[0.0, 0.3, 1.0].choose(&mut self.rng).expect("noise levels");
        if noisy_insertion(&mut partial, &removed, noise, &mut self.rng) {
            Some(partial.routes)
        } else {
            Some(routes.to_vec())
        }
    }
}

/// Derives independent per-run seeds from one base seed (splitmix64).
pub(crate) fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
