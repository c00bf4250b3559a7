//! Multi-start pool building and greedy max-min selection of mutually
//! different good solutions.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::construct::{cheapest_insertion, sequential_insertion, Partial};
use super::score::{Evaluator, Score};
use super::search::{Search, SearchConfig};
use super::{prove, Progress, Proof, SearchObserver, Silent, SolveBudget, ORACLE_LIMIT};
use crate::constraints::SideConstraints;
use crate::error::{Error, Result};
use crate::instance::{ProblemInstance, EPS};
use crate::solution::{arc_diversity, arc_set, Solution};

/// Distinct local optima kept per call.
const POOL_CAP: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedQuality {
    /// The first solution is the best one found.
    Best,
    /// Every solution is strictly worse than the best one found, still
    /// within the margin; the first is the worst such solution.
    Poor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiverseOutcome {
    pub solutions: Vec<Solution>,
    pub best_objective: f64,
    /// Distinct feasible solutions the selection drew from.
    pub pool_size: usize,
    /// Set when fewer than `k` solutions are returned.
    pub shortfall: Option<String>,
}

/// Up to `k` feasible solutions: the best found first, then each maximising
/// its smallest diversity to those already chosen, all within
/// `(1 + margin)` times the best objective.
pub fn generate_diverse(
    instance: &ProblemInstance,
    constraints: &SideConstraints,
    k: usize,
    margin: f64,
    budget: &SolveBudget,
) -> Result<DiverseOutcome> {
    generate_diverse_observed(instance, constraints, k, margin, SeedQuality::Best, budget, &mut Silent)
}

struct Candidate {
    routes: Vec<Vec<usize>>,
    arcs: BTreeSet<(usize, usize)>,
    distance: f64,
}

struct Collector<'o> {
    inner: &'o mut dyn SearchObserver,
    pool: BTreeMap<BTreeSet<(usize, usize)>, (Vec<Vec<usize>>, f64)>,
    least_bad: Option<(Vec<Vec<usize>>, Score)>,
}

impl Collector<'_> {
    fn offer(&mut self, routes: &[Vec<usize>], score: &Score) {
        if score.is_feasible() {
            if self.pool.len() < POOL_CAP {
                self.pool
                    .entry(arc_set(routes))
                    .or_insert_with(|| (routes.to_vec(), score.distance));
            }
        } else if self.least_bad.as_ref().is_none_or(|(_, s)| score.better_than(s)) {
            self.least_bad = Some((routes.to_vec(), *score));
        }
    }
}

impl SearchObserver for Collector<'_> {
    fn on_progress(&mut self, progress: &Progress) {
        self.inner.on_progress(progress);
    }

    fn on_local_optimum(&mut self, routes: &[Vec<usize>], score: &Score) {
        self.offer(routes, score);
    }

    fn should_stop(&self) -> bool {
        self.inner.should_stop()
    }
}

pub fn generate_diverse_observed(
    instance: &ProblemInstance,
    constraints: &SideConstraints,
    k: usize,
    margin: f64,
    quality: SeedQuality,
    budget: &SolveBudget,
    observer: &mut dyn SearchObserver,
) -> Result<DiverseOutcome> {
    if k == 0 {
        return Err(Error::usage("k must be at least 1"));
    }
    if !(margin.is_finite() && margin >= 0.0) {
        return Err(Error::usage("margin must be a non-negative number"));
    }
    budget.validate()?;
    let proof = {
        let obs = &*observer;
        prove(instance, constraints, ORACLE_LIMIT, &|| obs.should_stop())
    };
    match proof {
        Proof::Unsatisfiable(witness) => return Err(Error::Infeasible(witness)),
        Proof::Cancelled => return Err(Error::State("cancelled".to_string())),
        Proof::Satisfiable(_) | Proof::Unknown => {}
    }

    let eval = Evaluator::new(instance, constraints);
    let runs = (2 * k).max(4) as u64;
    let mut collector = Collector {
        inner: observer,
        pool: BTreeMap::new(),
        least_bad: None,
    };
    for run in 0..runs {
        if collector.should_stop() {
            break;
        }
        let share = budget.share(runs, run);
        let mut rng = ChaCha8Rng::seed_from_u64(share.seed);
        let start = if run == 0 {
            cheapest_insertion(&eval, &mut rng).expect("no protected pairs")
        } else {
            let mut order: Vec<usize> = (0..instance.customer_count()).collect();
            order.shuffle(&mut rng);
            let mut partial = Partial::new(&eval, vec![Vec::new(); instance.vehicle_count()]);
            sequential_insertion(&mut partial, &order, &mut rng);
            partial.routes
        };
        let result = Search::new(&eval, &share, SearchConfig::default(), rng, &mut collector).run(start);
        collector.offer(&result.best, &result.best_score);
    }
    if collector.inner.should_stop() {
        return Err(Error::State("cancelled".to_string()));
    }

    let candidates: Vec<Candidate> = collector
        .pool
        .into_iter()
        .map(|(arcs, (routes, distance))| Candidate { routes, arcs, distance })
        .collect();
    if candidates.is_empty() {
        let (routes, _) = collector.least_bad.expect("every run offers its best");
        let solution = Solution::from_partition(instance, routes, constraints);
        return Ok(DiverseOutcome {
            best_objective: solution.objective(),
            solutions: vec![solution],
            pool_size: 0,
            shortfall: Some("no feasible solution found; returning the least violating one".to_string()),
        });
    }
    let best = candidates.iter().map(|c| c.distance).fold(f64::INFINITY, f64::min);
    let ceiling = (1.0 + margin) * best + EPS;
    let band: Vec<&Candidate> = match quality {
        SeedQuality::Best => candidates.iter().filter(|c| c.distance <= ceiling).collect(),
        SeedQuality::Poor => candidates
            .iter()
            .filter(|c| c.distance > best + EPS && c.distance <= ceiling)
            .collect(),
    };
    let mut shortfall = None;
    let band = if band.is_empty() {
        shortfall = Some("no solution strictly worse than the best lies within the margin".to_string());
        candidates.iter().filter(|c| c.distance <= best + EPS).collect()
    } else {
        band
    };
    let objectives: Vec<f64> = band.iter().map(|c| c.distance).collect();
    let matrix: Vec<Vec<f64>> = band
        .iter()
        .map(|a| band.iter().map(|b| arc_diversity(&a.arcs, &b.arcs)).collect())
        .collect();
    let first = match quality {
        SeedQuality::Best => first_pick(&objectives),
        // the worst in the band, so that re-optimisation has room to improve
        SeedQuality::Poor => {
            let negated: Vec<f64> = objectives.iter().map(|o| -o).collect();
            first_pick(&negated)
        }
    };
    let picked = greedy_from(first, &objectives, &matrix, k);
    if picked.len() < k && shortfall.is_none() {
        shortfall = Some(format!(
            "only {} distinct solution(s) within the margin, {k} requested",
            picked.len()
        ));
    }
    Ok(DiverseOutcome {
        solutions: picked
            .iter()
            .map(|&i| Solution::from_partition(instance, band[i].routes.clone(), constraints))
            .collect(),
        best_objective: best,
        pool_size: candidates.len(),
        shortfall,
    })
}

fn first_pick(objectives: &[f64]) -> usize {
    let mut first = 0;
    for (i, &o) in objectives.iter().enumerate() {
        if o < objectives[first] {
            first = i;
        }
    }
    first
}

/// Greedy max-min selection. The first pick has the lowest objective (lowest
/// index on ties); each later pick maximises its smallest diversity to the
/// picks so far, ties going to the lower objective, then the lower index.
pub fn select_max_min(objectives: &[f64], diversity: &[Vec<f64>], k: usize) -> Vec<usize> {
    if objectives.is_empty() || k == 0 {
        return Vec::new();
    }
    greedy_from(first_pick(objectives), objectives, diversity, k)
}

fn greedy_from(first: usize, objectives: &[f64], diversity: &[Vec<f64>], k: usize) -> Vec<usize> {
    let n = objectives.len();
    let mut picked = vec![first];
    let mut closest: Vec<f64> = (0..n).map(|i| diversity[first][i]).collect();
    while picked.len() < k.min(n) {
        let mut choice: Option<usize> = None;
        for i in 0..n {
            if picked.contains(&i) {
                continue;
            }
            let better = match choice {
                None => true,
                Some(j) => {
                    closest[i] > closest[j] || (closest[i] == closest[j] && objectives[i] < objectives[j])
                }
            };
            if better {
                choice = Some(i);
            }
        }
        let Some(i) = choice else { break };
        picked.push(i);
        for (j, d) in closest.iter_mut().enumerate() {
            *d = d.min(diversity[i][j]);
        }
    }
    picked
}
