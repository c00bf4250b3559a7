//! User-imposed side constraints: customer→vehicle locks and same-vehicle
//! precedence (order) pairs.
//!
//! The store keeps four invariants at all times:
//! every lock names an in-range vehicle, no pair is reflexive, the order
//! relation is acyclic, and no pair joins customers locked to different
//! vehicles. Mutations that would break one are refused and leave the store
//! untouched.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;

/// Why a constraint edit was refused.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Conflict {
    /// The pair `(before, after)` would join customers locked to different
    /// vehicles.
    LockClash {
        before: usize,
        after: usize,
        before_vehicle: usize,
        after_vehicle: usize,
    },
    /// Adding the pair would close this cycle (first element repeated last).
    Cycle { path: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConstraintError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("conflict: {message}")]
    Conflict { conflict: Conflict, message: String },
}

impl ConstraintError {
    fn conflict(conflict: Conflict, instance: &ProblemInstance) -> Self {
        let message = match &conflict {
            Conflict::LockClash {
                before,
                after,
                before_vehicle,
                after_vehicle,
            } => format!(
                "order ({}, {}) joins customers locked to different vehicles ({} and {})",
                instance.label(*before),
                instance.label(*after),
                before_vehicle,
                after_vehicle
            ),
            Conflict::Cycle { path } => {
                let names: Vec<&str> = path.iter().map(|&c| instance.label(c)).collect();
                format!("cycle {}", names.join("→"))
            }
        };
        ConstraintError::Conflict { conflict, message }
    }
}

impl From<ConstraintError> for Error {
    fn from(e: ConstraintError) -> Self {
        match e {
            ConstraintError::Usage(m) => Error::Usage(m),
            ConstraintError::Conflict { message, .. } => Error::State(message),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct SideConstraints {
    locks: BTreeMap<usize, usize>,
    orders: BTreeSet<(usize, usize)>,
}

impl SideConstraints {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.locks.is_empty() && self.orders.is_empty()
    }

    pub fn locks(&self) -> &BTreeMap<usize, usize> {
        &self.locks
    }

    pub fn orders(&self) -> &BTreeSet<(usize, usize)> {
        &self.orders
    }

    pub fn lock_of(&self, customer: usize) -> Option<usize> {
        self.locks.get(&customer).copied()
    }

    /// Locks `customer` to `vehicle`, replacing any previous lock.
    pub fn add_lock(
        &mut self,
        instance: &ProblemInstance,
        customer: usize,
        vehicle: usize,
    ) -> Result<(), ConstraintError> {
        check_customer(instance, customer)?;
        if vehicle >= instance.vehicle_count() {
            return Err(ConstraintError::Usage(format!(
                "vehicle {vehicle} does not exist (fleet has {})",
                instance.vehicle_count()
            )));
        }
        for &(before, after) in &self.orders {
            let partner = if before == customer {
                after
            } else if after == customer {
                before
            } else {
                continue;
            };
            if let Some(w) = self.lock_of(partner) {
                if w != vehicle {
                    let (before_vehicle, after_vehicle) =
                        if before == customer { (vehicle, w) } else { (w, vehicle) };
                    return Err(ConstraintError::conflict(
                        Conflict::LockClash {
                            before,
                            after,
                            before_vehicle,
                            after_vehicle,
                        },
                        instance,
                    ));
                }
            }
        }
        self.locks.insert(customer, vehicle);
        Ok(())
    }

    /// Requires `before` to be served ahead of `after` on the same vehicle.
    pub fn add_order(
        &mut self,
        instance: &ProblemInstance,
        before: usize,
        after: usize,
    ) -> Result<(), ConstraintError> {
        check_customer(instance, before)?;
        check_customer(instance, after)?;
        if before == after {
            return Err(ConstraintError::Usage(format!(
                "order pair ({0}, {0}) relates a customer to itself",
                instance.label(before)
            )));
        }
        if let (Some(vb), Some(va)) = (self.lock_of(before), self.lock_of(after)) {
            if vb != va {
                return Err(ConstraintError::conflict(
                    Conflict::LockClash {
                        before,
                        after,
                        before_vehicle: vb,
                        after_vehicle: va,
                    },
                    instance,
                ));
            }
        }
        if let Some(mut path) = self.order_path(after, before) {
            path.push(after);
            return Err(ConstraintError::conflict(Conflict::Cycle { path }, instance));
        }
        self.orders.insert((before, after));
        Ok(())
    }

    pub fn remove_lock(&mut self, customer: usize) -> Result<(), ConstraintError> {
        self.locks
            .remove(&customer)
            .map(|_| ())
            .ok_or_else(|| ConstraintError::Usage(format!("customer #{customer} has no lock")))
    }

    pub fn remove_order(&mut self, before: usize, after: usize) -> Result<(), ConstraintError> {
        if self.orders.remove(&(before, after)) {
            Ok(())
        } else {
            Err(ConstraintError::Usage(format!(
                "no order pair (#{before}, #{after})"
            )))
        }
    }

    /// Shortest path `from → … → to` along order pairs, if any.
    fn order_path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let mut prev: BTreeMap<usize, usize> = BTreeMap::new();
        let mut queue = VecDeque::from([from]);
        let mut seen = BTreeSet::from([from]);
        while let Some(u) = queue.pop_front() {
            if u == to {
                let mut path = vec![to];
                let mut cur = to;
                while cur != from {
                    cur = prev[&cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            for &(_, v) in self.orders.range((u, 0)..=(u, usize::MAX)) {
                if seen.insert(v) {
                    prev.insert(v, u);
                    queue.push_back(v);
                }
            }
        }
        None
    }

    /// Verifies the four store invariants.
    pub fn check_invariants(&self, instance: &ProblemInstance) -> Result<()> {
        for (&c, &v) in &self.locks {
            if c >= instance.customer_count() || v >= instance.vehicle_count() {
                return Err(Error::validation(format!("lock #{c}→{v} is out of range")));
            }
        }
        for &(a, b) in &self.orders {
            if a == b {
                return Err(Error::validation("reflexive order pair"));
            }
            if a >= instance.customer_count() || b >= instance.customer_count() {
                return Err(Error::validation("order pair names an unknown customer"));
            }
            if let (Some(x), Some(y)) = (self.lock_of(a), self.lock_of(b)) {
                if x != y {
                    return Err(Error::validation("order pair spans two locked vehicles"));
                }
            }
        }
        // Kahn's algorithm
        let mut indegree: BTreeMap<usize, usize> = BTreeMap::new();
        for &(a, b) in &self.orders {
            indegree.entry(a).or_insert(0);
            *indegree.entry(b).or_insert(0) += 1;
        }
        let mut ready: Vec<usize> = indegree.iter().filter(|(_, &d)| d == 0).map(|(&c, _)| c).collect();
        let mut removed = 0;
        while let Some(u) = ready.pop() {
            removed += 1;
            for &(_, v) in self.orders.range((u, 0)..=(u, usize::MAX)) {
                let d = indegree.get_mut(&v).expect("present");
                *d -= 1;
                if *d == 0 {
                    ready.push(v);
                }
            }
        }
        if removed != indegree.len() {
            return Err(Error::validation("order relation contains a cycle"));
        }
        Ok(())
    }

    pub fn to_document(&self, instance: &ProblemInstance) -> ConstraintsDocument {
        ConstraintsDocument {
            locks: self
                .locks
                .iter()
                .map(|(&c, &v)| LockEntry {
                    customer: instance.label(c).to_string(),
                    vehicle: v,
                })
                .collect(),
            orders: self
                .orders
                .iter()
                .map(|&(a, b)| OrderEntry {
                    before: instance.label(a).to_string(),
                    after: instance.label(b).to_string(),
                })
                .collect(),
        }
    }

    /// Rebuilds a store by replaying the document through the checked
    /// mutators, so an inconsistent document is refused.
    pub fn from_document(doc: &ConstraintsDocument, instance: &ProblemInstance) -> Result<Self> {
        let mut store = Self::new();
        for lock in &doc.locks {
            let c = resolve(instance, &lock.customer)?;
            if store.lock_of(c).is_some() {
                return Err(Error::Document(format!("customer {} locked twice", lock.customer)));
            }
            store.add_lock(instance, c, lock.vehicle)?;
        }
        for order in &doc.orders {
            let a = resolve(instance, &order.before)?;
            let b = resolve(instance, &order.after)?;
            store.add_order(instance, a, b)?;
        }
        Ok(store)
    }
}

fn resolve(instance: &ProblemInstance, label: &str) -> Result<usize> {
    instance
        .customer_by_label(label)
        .ok_or_else(|| Error::Usage(format!("unknown customer '{label}'")))
}

fn check_customer(instance: &ProblemInstance, customer: usize) -> Result<(), ConstraintError> {
    if customer >= instance.customer_count() {
        return Err(ConstraintError::Usage(format!(
            "customer #{customer} does not exist"
        )));
    }
    Ok(())
}

impl fmt::Display for SideConstraints {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} locks, {} orders", self.locks.len(), self.orders.len())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintsDocument {
    #[serde(default)]
    pub locks: Vec<LockEntry>,
    #[serde(default)]
    pub orders: Vec<OrderEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LockEntry {
    pub customer: String,
    pub vehicle: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderEntry {
    pub before: String,
    pub after: String,
}
