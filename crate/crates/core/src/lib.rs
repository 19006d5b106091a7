//! Deterministic discrete-event simulator for mobile ad hoc networks.

pub mod energy;
pub mod error;
pub mod kernel;
pub mod mac;
pub mod metrics;
pub mod mobility;
pub mod packet;
pub mod radio;
pub mod routing;
pub mod scenario;
pub mod sim;
pub mod stats;
pub mod sweep;
pub mod traffic;

pub use error::{Result, SimError};
pub use scenario::ScenarioConfig;
pub use sim::{run_scenario, Network, RunOutput};
