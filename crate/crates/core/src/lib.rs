//! Engine for interactive vehicle routing with time windows.
//!
//! Instances come from Solomon text files or the native JSON document.
//! Solutions are per-vehicle visit lists evaluated against windows, the
//! depot horizon and the user's locks and order pairs. The solver builds,
//! improves and re-optimises them; the provenance store keeps every
//! snapshot together with how it was derived.

pub mod constraints;
pub mod error;
pub mod fixtures;
pub mod instance;
pub mod native;
pub mod provenance;
pub mod solomon;
pub mod solution;
pub mod solver;

pub use constraints::{Conflict, ConstraintError, ConstraintsDocument, SideConstraints};
pub use error::{Error, Result};
pub use instance::{Customer, Depot, Location, Matrix, ProblemInstance};
pub use native::{parse_native, write_native, InstanceDocument};
pub use provenance::{HistoryGraph, Origin, RecordId, SolutionRecord};
pub use solomon::parse_solomon;
pub use solution::{diversity, Solution, SolutionDocument, Violation, ViolationKind};
pub use solver::{SolveBudget, SolveOutcome, SolveStatus};
