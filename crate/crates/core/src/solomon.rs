//! Reader for the classic Solomon VRPTW text layout:
//!
//! ```text
//! C101
//!
//! VEHICLE
//! NUMBER     CAPACITY
//!   25         200
//!
//! CUSTOMER
//! CUST NO.  XCOORD.   YCOORD.    DEMAND   READY TIME  DUE DATE   SERVICE   TIME
//!     0      40         50          0          0       1236          0
//!     1      45         68         10        912        967         90
//! ```
//!
//! The first table row is the depot. Demand and capacity are read and
//! discarded; distances are Euclidean and travel time equals distance.

use crate::error::{Error, Result};
use crate::instance::{default_label, Customer, Depot, Location, ProblemInstance};

#[derive(PartialEq)]
enum Section {
    Name,
    Vehicle,
    Customer,
}

/// Parses a Solomon instance.
pub fn parse_solomon(text: &str) -> Result<ProblemInstance> {
    let mut section = Section::Name;
    let mut name = None;
    let mut vehicles: Option<usize> = None;
    let mut rows: Vec<(usize, [f64; 7])> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let upper = line.to_ascii_uppercase();
        match section {
            Section::Name => {
                if upper == "VEHICLE" {
                    section = Section::Vehicle;
                } else if name.is_none() {
                    name = Some(line.to_string());
                } else {
                    return Err(Error::parse(line_no, "expected VEHICLE section"));
                }
            }
            Section::Vehicle => {
                if upper == "CUSTOMER" {
                    if vehicles.is_none() {
                        return Err(Error::parse(line_no, "VEHICLE section has no NUMBER/CAPACITY row"));
                    }
                    section = Section::Customer;
                } else if starts_numeric(line) {
                    if vehicles.is_some() {
                        return Err(Error::parse(line_no, "duplicate vehicle row"));
                    }
                    let fields = numeric_fields(line, line_no)?;
                    if fields.len() != 2 {
                        return Err(Error::parse(
                            line_no,
                            format!("vehicle row needs NUMBER and CAPACITY, found {} fields", fields.len()),
                        ));
                    }
                    vehicles = Some(as_count(fields[0], line_no, "vehicle number")?);
                } else if vehicles.is_some() {
                    return Err(Error::parse(line_no, "expected CUSTOMER section"));
                }
                // otherwise a header line such as "NUMBER CAPACITY"
            }
            Section::Customer => {
                if !starts_numeric(line) {
                    if rows.is_empty() {
                        continue; // column header
                    }
                    return Err(Error::parse(line_no, format!("unexpected text in customer table: '{line}'")));
                }
                let fields = numeric_fields(line, line_no)?;
                if fields.len() != 7 {
                    return Err(Error::parse(
                        line_no,
                        format!("customer row needs 7 fields, found {}", fields.len()),
                    ));
                }
                let mut row = [0.0; 7];
                row.copy_from_slice(&fields);
                rows.push((line_no, row));
            }
        }
    }

    if section != Section::Customer {
        let line = text.lines().count().max(1);
        return Err(Error::parse(line, "missing CUSTOMER section"));
    }
    let vehicle_count = vehicles.unwrap_or(0);
    let Some(((depot_line, depot_row), customer_rows)) = rows.split_first() else {
        return Err(Error::parse(text.lines().count().max(1), "customer table has no depot row"));
    };
    let depot = Depot {
        location: Location::new(depot_row[1], depot_row[2]),
        horizon_open: depot_row[4],
        horizon_close: depot_row[5],
    };
    if depot.horizon_open > depot.horizon_close {
        return Err(Error::parse(*depot_line, "depot ready time is after its due date"));
    }

    let mut customers = Vec::with_capacity(customer_rows.len());
    for (position, (line_no, row)) in customer_rows.iter().enumerate() {
        let key = as_count(row[0], *line_no, "customer number")?;
        customers.push(Customer {
            label: default_label(position),
            key: u32::try_from(key).map_err(|_| Error::parse(*line_no, "customer number too large"))?,
            location: Location::new(row[1], row[2]),
            window_open: row[4],
            window_close: row[5],
            service_period: row[6],
        });
    }

    ProblemInstance::with_provider(
        name.unwrap_or_default(),
        depot,
        customers,
        vehicle_count,
        "planar",
    )
}

fn starts_numeric(line: &str) -> bool {
    line.chars()
        .next()
        .is_some_and(|c| c.is_ascii_digit() || c == '-' || c == '+' || c == '.')
}

fn numeric_fields(line: &str, line_no: usize) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(line_no, format!("'{tok}' is not a number")))
        })
        .collect()
}

fn as_count(v: f64, line_no: usize, what: &str) -> Result<usize> {
    if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
        return Err(Error::parse(line_no, format!("{what} must be a non-negative integer, got {v}")));
    }
    Ok(v as usize)
}
