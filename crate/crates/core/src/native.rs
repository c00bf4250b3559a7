//! The self-describing JSON instance document.
//!
//! ```json
//! {
//!   "name": "toy3",
//!   "vehicle_count": 2,
//!   "depot": { "x": 0, "y": 0, "open": 0, "close": 1000 },
//!   "customers": [ { "id": "A", "x": 0, "y": 10, "open": 0, "close": 1000, "service": 0 } ],
//!   "distance_matrix": [[0, 10], [10, 0]],
//!   "time_matrix": [[0, 10], [10, 0]]
//! }
//! ```
//!
//! Both matrices are optional. When only one is given it is used for both
//! quantities; when neither is given the planar provider generates them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Customer, Depot, Location, Matrix, MatrixSource, ProblemInstance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDocument {
    pub name: String,
    pub vehicle_count: usize,
    pub depot: DepotEntry,
    pub customers: Vec<CustomerEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepotEntry {
    pub x: f64,
    pub y: f64,
    pub open: f64,
    pub close: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomerEntry {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub open: f64,
    pub close: f64,
    pub service: f64,
}

impl InstanceDocument {
    pub fn from_instance(instance: &ProblemInstance) -> Self {
        let depot = instance.depot();
        let supplied = matches!(instance.matrix_source(), MatrixSource::Supplied { .. });
        Self {
            name: instance.name().to_string(),
            vehicle_count: instance.vehicle_count(),
            depot: DepotEntry {
                x: depot.location.x,
                y: depot.location.y,
                open: depot.horizon_open,
                close: depot.horizon_close,
            },
            customers: instance
                .customers()
                .iter()
                .map(|c| CustomerEntry {
                    id: c.label.clone(),
                    x: c.location.x,
                    y: c.location.y,
                    open: c.window_open,
                    close: c.window_close,
                    service: c.service_period,
                })
                .collect(),
            distance_matrix: supplied.then(|| instance.distance_matrix().rows()),
            time_matrix: supplied.then(|| instance.time_matrix().rows()),
        }
    }

    pub fn into_instance(self) -> Result<ProblemInstance> {
        let depot = Depot {
            location: Location::new(self.depot.x, self.depot.y),
            horizon_open: self.depot.open,
            horizon_close: self.depot.close,
        };
        let customers: Vec<Customer> = self
            .customers
            .into_iter()
            .enumerate()
            .map(|(i, c)| Customer {
                label: c.id,
                key: u32::try_from(i + 1).unwrap_or(u32::MAX),
                location: Location::new(c.x, c.y),
                window_open: c.open,
                window_close: c.close,
                service_period: c.service,
            })
            .collect();
        match (self.distance_matrix, self.time_matrix) {
            (None, None) => {
                ProblemInstance::with_provider(self.name, depot, customers, self.vehicle_count, "planar")
            }
            (distance, time) => {
                let distance = distance.as_deref().map(Matrix::from_rows).transpose()?;
                let time = time.as_deref().map(Matrix::from_rows).transpose()?;
                let (distance, time) = match (distance, time) {
                    (Some(d), Some(t)) => (d, t),
                    (Some(d), None) => (d.clone(), d),
                    (None, Some(t)) => (t.clone(), t),
                    (None, None) => unreachable!(),
                };
                ProblemInstance::with_matrices(self.name, depot, customers, self.vehicle_count, distance, time)
            }
        }
    }
}

/// Parses a native instance document.
pub fn parse_native(text: &str) -> Result<ProblemInstance> {
    let doc: InstanceDocument =
        serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e.to_string()))?;
    doc.into_instance()
}

/// Serialises an instance as a native document. Generated matrices are
/// omitted so that re-parsing regenerates them.
pub fn write_native(instance: &ProblemInstance) -> String {
    serde_json::to_string_pretty(&InstanceDocument::from_instance(instance)).expect("serialisable")
}
