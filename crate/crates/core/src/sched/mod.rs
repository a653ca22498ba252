//! Dynamic-programming imaging scheduler and the three run modes.
//!
//! The DP core ([`dp`]) searches a (ground point, time step) lattice: paths
//! extend through a slew-time predecessor band, one retained path per node,
//! candidates visited in descending value with the first slew-feasible one
//! committed. [`env`] wires the core to orbit/attitude/value state for a real
//! satellite; [`toy`] drives it standalone for oracles and scaling checks;
//! [`modes`] runs the decentralized, centralized and non-agile scenarios.

pub mod dp;
pub mod env;
pub mod modes;
pub mod toy;

use crate::orbit::{GpId, SatId};

/// One committed observation: ground point at a discretized time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathNode {
    /// Dense index into the scenario's ground-point arena.
    pub gp: u32,
    pub gp_id: GpId,
    pub t: f64,
}

/// Ordered observation commitments for one satellite.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SchedulePath {
    pub sat: SatId,
    pub nodes: Vec<PathNode>,
    /// Cumulative value of this path under the owner's knowledge state.
    pub cumulative_value: f64,
}

/// Planning clock: when the scheduler runs and how far it looks ahead.
#[derive(Debug, Clone, Copy)]
pub struct ScenarioClock {
    pub t_plan: f64,
    /// Per-call planning window, s.
    pub planning_horizon_s: f64,
    pub dt_step_s: f64,
    pub reschedule_period_s: f64,
}

impl ScenarioClock {
    pub fn horiz_t_steps(&self) -> usize {
        (self.planning_horizon_s / self.dt_step_s).round() as usize
    }
}
