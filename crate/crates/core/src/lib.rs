//! Expressibility, trainability and resource-cost analysis of layered
//! parametrized quantum circuits, with Pareto and design-space tooling.

pub mod analysis;
pub mod catalog;
pub mod dse;
pub mod error;
pub mod expressibility;
pub mod observables;
pub mod pareto;
pub mod pipeline;
pub mod records;
pub mod seed;
pub mod statevector;
#[cfg(test)]
mod statistical;
pub mod trainability;

pub use catalog::{default_catalog, load_catalog, load_catalog_file, Circuit, CircuitTemplate, Connectivity, ResourceCounts};
pub use dse::{AxisMap, DesignPoint, DesignSpace, ScoreRegressor, SurfaceFit};
pub use error::{Error, Result};
pub use expressibility::{expressibility, ExpressibilityResult};
pub use observables::{HamiltonianId, Observable, Pauli, PauliTerm};
pub use pareto::{CostWeights, Direction, NormalizationContext, Objective};
pub use pipeline::{Manifest, RunConfig};
pub use records::{Field, MetricRecord};
pub use statevector::{Gate, GateKind, StateVector};
pub use trainability::{trainability, TrainabilityResult};
