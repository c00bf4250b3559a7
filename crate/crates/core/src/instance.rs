//! Problem instances: depot, customers with time windows and service
//! periods, fleet size, and the travel distance / time matrices.
//!
//! Matrix rows and columns are indexed by node: node 0 is the depot and
//! customer `i` (0-based position in [`ProblemInstance::customers`]) is node
//! `i + 1`.

use std::collections::HashSet;
use std::hash::{DefaultHasher, Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used for every feasibility comparison on times and
/// distances.
pub const EPS: f64 = 1e-9;

/// Node index of the depot in both matrices.
pub const DEPOT: usize = 0;

/// Matrix node of the customer at position `customer`.
#[inline]
pub fn node(customer: usize) -> usize {
    customer + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub x: f64,
    pub y: f64,
}

impl Location {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn euclidean(&self, other: &Location) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Customer {
    /// Display label, unique within an instance ("A".."Z", "AA", ...).
    pub label: String,
    /// Numeric key from the source document (Solomon customer number, or
    /// 1-based position for native documents).
    pub key: u32,
    pub location: Location,
    pub window_open: f64,
    pub window_close: f64,
    pub service_period: f64,
}

impl Customer {
    /// Latest time at which service may start and still finish inside the
    /// window.
    pub fn latest_start(&self) -> f64 {
        self.window_close - self.service_period
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Depot {
    pub location: Location,
    pub horizon_open: f64,
    pub horizon_close: f64,
}

/// Dense square matrix of travel quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    size: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(size: usize) -> Self {
        Self {
            size,
            data: vec![0.0; size * size],
        }
    }

    /// Builds a matrix from rows; rows must be square.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let size = rows.len();
        let mut data = Vec::with_capacity(size * size);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != size {
                return Err(Error::validation(format!(
                    "matrix is not square: row {i} has {} entries, expected {size}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { size, data })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.data[from * self.size + to]
    }

    pub fn set(&mut self, from: usize, to: usize, value: f64) {
        self.data[from * self.size + to] = value;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.size.max(1)).take(self.size).map(<[f64]>::to_vec).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.size).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// True when `m[i][k] <= m[i][j] + m[j][k] + EPS` for every triple.
    pub fn satisfies_triangle_inequality(&self) -> bool {
        let n = self.size;
        (0..n).all(|i| {
            (0..n).all(|j| (0..n).all(|k| self.get(i, k) <= self.get(i, j) + self.get(j, k) + EPS))
        })
    }

    fn validate(&self, what: &str, expected: usize) -> Result<()> {
        if self.size != expected {
            return Err(Error::validation(format!(
                "{what} has dimension {}, expected {expected} (customers + depot)",
                self.size
            )));
        }
        for i in 0..self.size {
            for j in 0..self.size {
                let v = self.get(i, j);
                if !v.is_finite() {
                    return Err(Error::validation(format!("{what}[{i}][{j}] is not finite")));
                }
                if v < 0.0 {
                    return Err(Error::validation(format!(
                        "negative travel quantity {v} in {what}[{i}][{j}]"
                    )));
                }
            }
            if self.get(i, i) != 0.0 {
                return Err(Error::validation(format!("{what}[{i}][{i}] must be zero")));
            }
        }
        Ok(())
    }
}

/// Source of travel distances and times between locations.
pub trait DistanceProvider {
    fn tag(&self) -> &'static str;

    /// Returns `(distance, travel_time)` over `locations`, depot first.
    fn matrices(&self, locations: &[Location]) -> (Matrix, Matrix);
}

/// Straight-line distances in the plane, travelled at unit speed.
#[derive(Debug, Clone, Copy, Default)]
pub struct PlanarProvider;

impl DistanceProvider for PlanarProvider {
    fn tag(&self) -> &'static str {
        "planar"
    }

    fn matrices(&self, locations: &[Location]) -> (Matrix, Matrix) {
        let n = locations.len();
        let mut distance = Matrix::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                let d = locations[i].euclidean(&locations[j]);
                distance.set(i, j, d);
                distance.set(j, i, d);
            }
        }
        let travel_time = distance.clone();
        (distance, travel_time)
    }
}

/// Resolves a provider tag. Only the planar provider is built in.
pub fn provider(tag: &str) -> Result<Box<dyn DistanceProvider + Send + Sync>> {
    match tag {
        "planar" | "euclidean" => Ok(Box::new(PlanarProvider)),
        other => Err(Error::Config(format!("unknown distance provider '{other}'"))),
    }
}

/// Builds `(distance, travel_time)` for `locations` (depot first) with the
/// provider named by `tag`.
pub fn build_matrices(locations: &[Location], tag: &str) -> Result<(Matrix, Matrix)> {
    let provider = provider(tag)?;
    if locations.is_empty() {
        return Err(Error::usage("at least the depot location is required"));
    }
    Ok(provider.matrices(locations))
}

/// Where an instance's matrices came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatrixSource {
    /// Generated by the named provider; triangle inequality checked.
    Generated(String),
    /// Supplied by the document and accepted as-is.
    Supplied { triangle_inequality: bool },
}

/// Spreadsheet-style label for the customer at `position`: A..Z, AA..AZ, ...
pub fn default_label(position: usize) -> String {
    let mut n = position + 1;
    let mut out = Vec::new();
    while n > 0 {
        let rem = (n - 1) % 26;
        out.push(b'A' + rem as u8);
        n = (n - 1) / 26;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

/// An immutable routing problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    name: String,
    depot: Depot,
    customers: Vec<Customer>,
    vehicle_count: usize,
    distance: Matrix,
    travel_time: Matrix,
    source: MatrixSource,
    fingerprint: u64,
}

impl ProblemInstance {
    /// Builds an instance with matrices generated by `provider_tag`.
    pub fn with_provider(
        name: impl Into<String>,
        depot: Depot,
        customers: Vec<Customer>,
        vehicle_count: usize,
        provider_tag: &str,
    ) -> Result<Self> {
        let locations: Vec<Location> = std::iter::once(depot.location)
            .chain(customers.iter().map(|c| c.location))
            .collect();
        let (distance, travel_time) = build_matrices(&locations, provider_tag)?;
        let tag = provider(provider_tag)?.tag().to_string();
        Self::build(
            name.into(),
            depot,
            customers,
            vehicle_count,
            distance,
            travel_time,
            MatrixSource::Generated(tag),
        )
    }

    /// Builds an instance from externally supplied matrices.
    pub fn with_matrices(
        name: impl Into<String>,
        depot: Depot,
        customers: Vec<Customer>,
        vehicle_count: usize,
        distance: Matrix,
        travel_time: Matrix,
    ) -> Result<Self> {
        let triangle_inequality = travel_time.satisfies_triangle_inequality();
        Self::build(
            name.into(),
            depot,
            customers,
            vehicle_count,
            distance,
            travel_time,
            MatrixSource::Supplied {
                triangle_inequality,
            },
        )
    }

    fn build(
        name: String,
        depot: Depot,
        customers: Vec<Customer>,
        vehicle_count: usize,
        distance: Matrix,
        travel_time: Matrix,
        source: MatrixSource,
    ) -> Result<Self> {
        if vehicle_count == 0 {
            return Err(Error::validation("vehicle_count must be positive"));
        }
        validate_depot(&depot)?;
        let mut labels = HashSet::new();
        for c in &customers {
            validate_customer(c)?;
            if !labels.insert(c.label.as_str()) {
                return Err(Error::validation(format!("duplicate customer id '{}'", c.label)));
            }
        }
        let n = customers.len() + 1;
        distance.validate("distance_matrix", n)?;
        travel_time.validate("time_matrix", n)?;
        if let MatrixSource::Generated(tag) = &source {
            if !travel_time.satisfies_triangle_inequality() {
                return Err(Error::validation(format!(
                    "provider '{tag}' produced a travel-time matrix violating the triangle inequality"
                )));
            }
        }
        let mut instance = Self {
            name,
            depot,
            customers,
            vehicle_count,
            distance,
            travel_time,
            source,
            fingerprint: 0,
        };
        instance.fingerprint = instance.compute_fingerprint();
        Ok(instance)
    }

    fn compute_fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.vehicle_count.hash(&mut h);
        self.depot.location.x.to_bits().hash(&mut h);
        self.depot.location.y.to_bits().hash(&mut h);
        self.depot.horizon_open.to_bits().hash(&mut h);
        self.depot.horizon_close.to_bits().hash(&mut h);
        for c in &self.customers {
            c.label.hash(&mut h);
            c.window_open.to_bits().hash(&mut h);
            c.window_close.to_bits().hash(&mut h);
            c.service_period.to_bits().hash(&mut h);
        }
        for v in self.distance.data.iter().chain(&self.travel_time.data) {
            v.to_bits().hash(&mut h);
        }
        h.finish()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn depot(&self) -> &Depot {
        &self.depot
    }

    pub fn customers(&self) -> &[Customer] {
        &self.customers
    }

    pub fn customer(&self, customer: usize) -> &Customer {
        &self.customers[customer]
    }

    pub fn customer_count(&self) -> usize {
        self.customers.len()
    }

    pub fn vehicle_count(&self) -> usize {
        self.vehicle_count
    }

    pub fn distance_matrix(&self) -> &Matrix {
        &self.distance
    }

    pub fn time_matrix(&self) -> &Matrix {
        &self.travel_time
    }

    pub fn matrix_source(&self) -> &MatrixSource {
        &self.source
    }

    /// Identity of the instance content; solutions carry it so that
    /// cross-instance comparisons are caught.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    #[inline]
    pub fn distance(&self, from: usize, to: usize) -> f64 {
        self.distance.get(from, to)
    }

    #[inline]
    pub fn travel_time(&self, from: usize, to: usize) -> f64 {
        self.travel_time.get(from, to)
    }

    /// Position of the customer with display label `label`.
    pub fn customer_by_label(&self, label: &str) -> Option<usize> {
        self.customers.iter().position(|c| c.label == label)
    }

    pub fn label(&self, customer: usize) -> &str {
        &self.customers[customer].label
    }

    /// Same instance with a different fleet size.
    pub fn with_vehicle_count(&self, vehicle_count: usize) -> Result<Self> {
        Self::build(
            self.name.clone(),
            self.depot,
            self.customers.clone(),
            vehicle_count,
            self.distance.clone(),
            self.travel_time.clone(),
            self.source.clone(),
        )
    }
}

fn validate_depot(depot: &Depot) -> Result<()> {
    let Depot {
        location,
        horizon_open,
        horizon_close,
    } = depot;
    if !(location.x.is_finite() && location.y.is_finite()) {
        return Err(Error::validation("depot coordinates must be finite"));
    }
    if !(horizon_open.is_finite() && horizon_close.is_finite()) || *horizon_open < 0.0 {
        return Err(Error::validation("depot horizon must be finite and non-negative"));
    }
    if horizon_open > horizon_close {
        return Err(Error::validation("depot horizon opens after it closes"));
    }
    Ok(())
}

fn validate_customer(c: &Customer) -> Result<()> {
    let name = &c.label;
    if c.label.is_empty() {
        return Err(Error::validation("customer id must not be empty"));
    }
    if !(c.location.x.is_finite() && c.location.y.is_finite()) {
        return Err(Error::validation(format!("customer {name}: coordinates must be finite")));
    }
    let times = [c.window_open, c.window_close, c.service_period];
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::validation(format!(
            "customer {name}: window and service period must be finite and non-negative"
        )));
    }
    if c.window_open > c.window_close {
        return Err(Error::validation(format!(
            "customer {name}: window opens at {} after it closes at {}",
            c.window_open, c.window_close
        )));
    }
    if c.service_period > c.window_close - c.window_open + EPS {
        return Err(Error::validation(format!(
            "customer {name} is unserviceable: service period {} exceeds window [{}, {}]",
            c.service_period, c.window_open, c.window_close
        )));
    }
    Ok(())
}
