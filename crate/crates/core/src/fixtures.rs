//! Named instances bundled with the engine, with their scenario metadata.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::native::InstanceDocument;
pub use crate::solver::SeedQuality;

/// How a session on this fixture is seeded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeding {
    pub count: usize,
    pub margin: f64,
    pub quality: SeedQuality,
}

impl Default for Seeding {
    fn default() -> Self {
        Self {
            count: 3,
            margin: 0.30,
            quality: SeedQuality::Best,
        }
    }
}

/// A customer request from a scenario brief.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Request {
    Lock { customer: String, vehicle: usize, text: String },
    Order { before: String, after: String, text: String },
    /// "Customer X does not want truck V": not directly expressible; users
    /// lock the customer to another vehicle.
    AvoidVehicle { customer: String, vehicle: usize, text: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reassignment {
    pub customer: String,
    pub vehicle: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Breakdown {
    pub vehicle: usize,
    pub time: f64,
    /// Where the scripted operator moves the broken truck's outstanding
    /// customers.
    pub reassign: Vec<Reassignment>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureMetadata {
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub seeding: Seeding,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub requests: Vec<Request>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_routes: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breakdown: Option<Breakdown>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureDocument {
    pub instance: InstanceDocument,
    #[serde(default)]
    pub metadata: FixtureMetadata,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: String,
    pub instance: ProblemInstance,
    pub metadata: FixtureMetadata,
}

impl Fixture {
    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let doc: FixtureDocument =
            serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e.to_string()))?;
        Ok(Self {
            name: name.to_string(),
            instance: doc.instance.into_instance()?,
            metadata: doc.metadata,
        })
    }
}

const BUNDLED: &[(&str, &str)] = &[
    ("toy3", include_str!("../fixtures/toy3.json")),
    ("study12", include_str!("../fixtures/study12.json")),
    ("scenario1", include_str!("../fixtures/scenario1.json")),
    ("scenario2", include_str!("../fixtures/scenario2.json")),
    ("scenario3", include_str!("../fixtures/scenario3.json")),
    ("scenario4", include_str!("../fixtures/scenario4.json")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

/// Looks up a bundled fixture by name.
pub fn bundled(name: &str) -> Option<Fixture> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(n, text)| Fixture::parse(n, text).expect("bundled fixture is valid"))
}

/// Depot at the origin and customers A(0,10), B(10,10), C(10,0), all with
/// window [0, 1000] and no service time; two vehicles.
pub fn toy3() -> ProblemInstance {
    bundled("toy3").expect("toy3").instance
}

/// Three trucks, twelve customers.
pub fn study12() -> ProblemInstance {
    bundled("study12").expect("study12").instance
}
