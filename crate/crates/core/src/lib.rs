//! Open-system dynamics of a three-spin Ising chain driven by selective RF
//! pulses, with Markovian and quasi-non-Markovian thermal dissipation.

pub mod algebra;
pub mod config;
pub mod diagnostics;
pub mod dissipator;
pub mod eigen;
pub mod error;
pub mod export;
pub mod integrator;
pub mod model;
pub mod oracle;
pub mod pulse;
pub mod state;

pub use algebra::{ComplexMatrix, C64};
pub use config::{Scenario, ScenarioConfig};
pub use dissipator::{DissipatorMode, MasterEquation};
pub use error::{Error, Result};
pub use integrator::{IntegratorConfig, TrajectoryRecord};
pub use model::{BathParams, RateTable, SystemParams};
pub use pulse::{Pulse, Sequence};
