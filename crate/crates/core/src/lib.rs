//! Deterministic desk-scale simulator for agile Earth-observation
//! constellations.
//!
//! The crate couples five pieces behind one scenario configuration:
//!
//! - [`orbit`]: circular two-body propagation, field-of-regard visibility,
//!   contact-plan generation and bundle recipient priorities
//! - [`acs`]: slew angles and the cubic maneuver-time model
//! - [`value`]: ground-truth value grids (nature runs), synthetic generation
//!   and the statistical value re-computation applied to seen ground points
//! - [`dtn`]: a store-and-forward bundle-layer simulation with contact-graph
//!   earliest-arrival routing, priority queues and TTL expiry
//! - [`sched`]: the dynamic-programming imaging scheduler and the three run
//!   modes (decentralized, centralized, non-agile baseline)
//!
//! Everything is deterministic per (scenario, seed): reruns reproduce metric
//! files byte for byte.

pub mod acs;
pub mod config;
pub mod geom;
pub mod harness;
pub mod dtn;
pub mod metrics;
pub mod orbit;
pub mod scenario;
pub mod sched;
pub mod value;

pub use acs::SlewModel;
pub use config::ScenarioConfig;
pub use metrics::RunMetrics;
pub use scenario::Scenario;
pub use orbit::{Contact, GroundPoint, GroundStation, NodeId, OrbitalElements, SatelliteState};
pub use value::{KnowledgeState, NatureRun, ObservationLog};
