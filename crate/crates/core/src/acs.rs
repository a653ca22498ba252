//! Attitude maneuver timing: slew angles between pointing targets and the
//! cubic polynomial surrogate for the attitude-control simulator.

use thiserror::Error;

use crate::orbit::{GroundPoint, SatelliteState};

#[derive(Debug, Error, PartialEq)]
pub enum AcsError {
    #[error("slew angle {0} deg is negative")]
    NegativeAngle(f64),
    #[error("alpha_max must lie in (0, 180], got {0}")]
    BadAlphaMax(f64),
    #[error("ground point coincides with the satellite position")]
    DegenerateGeometry,
}

/// Cubic maneuver-time model: t = c3 a^3 + c2 a^2 + c1 a + c0, plus a
/// configurable multiple of the fit standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlewModel {
    pub c3: f64,
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
    pub sigma_s: f64,
}

impl Default for SlewModel {
    fn default() -> Self {
        Self { c3: 6.1974e-6, c2: 1.3904e-3, c1: 1.4165e-1, c0: 4.6231, sigma_s: 0.2116 }
    }
}

impl SlewModel {
    /// Maneuver time for a slew through `alpha_deg`, padded by
    /// `k_sigma` standard deviations of the fit.
    pub fn slew_time_s(&self, alpha_deg: f64, k_sigma: f64) -> Result<f64, AcsError> {
        if alpha_deg < 0.0 {
            return Err(AcsError::NegativeAngle(alpha_deg));
        }
        let a = alpha_deg;
        Ok(self.c3 * a * a * a + self.c2 * a * a + self.c1 * a + self.c0 + k_sigma * self.sigma_s)
    }

    /// Predecessor band for the scheduler, in whole time steps: the slew-time
    /// range [slew(0), slew(alpha_max)] expressed as step counts.
    pub fn slew_band(
        &self,
        dt_step_s: f64,
        alpha_max_deg: f64,
        k_sigma: f64,
    ) -> Result<(usize, usize), AcsError> {
        if !(alpha_max_deg > 0.0 && alpha_max_deg <= 180.0) {
            return Err(AcsError::BadAlphaMax(alpha_max_deg));
        }
        let n_min = (self.slew_time_s(0.0, k_sigma)? / dt_step_s).ceil() as usize;
        let n_max = (self.slew_time_s(alpha_max_deg, k_sigma)? / dt_step_s).ceil() as usize;
        Ok((n_min.max(1), n_max.max(1)))
    }
}

/// Planar angle between the pointing vectors to two ground points, degrees.
pub fn slew_angle_deg(
    state: &SatelliteState,
    gp_from: &GroundPoint,
    gp_to: &GroundPoint,
) -> Result<f64, AcsError> {
    let u = gp_from.position_ecef() - state.position_ecef;
    let v = gp_to.position_ecef() - state.position_ecef;
    if u.norm() < 1e-9 || v.norm() < 1e-9 {
        return Err(AcsError::DegenerateGeometry);
    }
    Ok(u.angle_deg(v))
}
