//! Orbit propagation, ground-point visibility, contact-plan construction and
//! bundle recipient priorities.
//!
//! Propagation is two-body circular Keplerian with a rotating-Earth frame
//! conversion (optional linear J2 RAAN drift). Coverage and contact topology,
//! not ephemeris accuracy, drive everything downstream.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geom::{
    segment_min_distance_to_origin, surface_point_ecef, Vec3, EARTH_RADIUS_KM,
    EARTH_ROTATION_RATE, J2, LIGHT_SPEED_KM_S, MU_EARTH,
};

/// Highest bundle priority level; recipient lists are truncated here.
pub const MAX_PRIORITY: u8 = 15;

pub type SatId = u16;
pub type RegionId = u16;
pub type GpId = u32;

#[derive(Debug, Error, PartialEq)]
pub enum OrbitError {
    #[error("semimajor axis {0} km must exceed the Earth radius")]
    SemimajorAxisTooSmall(f64),
    #[error("inclination {0} deg outside [0, 180]")]
    InclinationOutOfRange(f64),
    #[error("non-circular orbits (e = {0}) are unsupported")]
    NonCircular(f64),
    #[error("contact sampling step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("horizon must be positive, got {0}")]
    NonPositiveHorizon(f64),
    #[error("malformed contact plan line {line}: {reason}")]
    MalformedContactLine { line: usize, reason: String },
}

/// Classical elements restricted to the circular case used throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitalElements {
    pub semimajor_axis_km: f64,
    pub eccentricity: f64,
    pub inclination_deg: f64,
    pub raan_deg: f64,
    pub arg_perigee_deg: f64,
    pub true_anomaly_epoch_deg: f64,
    pub epoch_s: f64,
    /// Linear RAAN drift, deg/s. Zero unless J2 correction is enabled.
    pub raan_rate_deg_s: f64,
}

impl OrbitalElements {
    pub fn circular(
        semimajor_axis_km: f64,
        inclination_deg: f64,
        raan_deg: f64,
        anomaly_deg: f64,
    ) -> Result<Self, OrbitError> {
        let el = Self {
            semimajor_axis_km,
            eccentricity: 0.0,
            inclination_deg,
            raan_deg,
            arg_perigee_deg: 0.0,
            true_anomaly_epoch_deg: anomaly_deg,
            epoch_s: 0.0,
            raan_rate_deg_s: 0.0,
        };
        el.validate()?;
        Ok(el)
    }

    pub fn validate(&self) -> Result<(), OrbitError> {
        if self.semimajor_axis_km <= EARTH_RADIUS_KM {
            return Err(OrbitError::SemimajorAxisTooSmall(self.semimajor_axis_km));
        }
        if !(0.0..=180.0).contains(&self.inclination_deg) {
            return Err(OrbitError::InclinationOutOfRange(self.inclination_deg));
        }
        if self.eccentricity != 0.0 {
            return Err(OrbitError::NonCircular(self.eccentricity));
        }
        Ok(())
    }

    /// Mean motion, rad/s.
    pub fn mean_motion(&self) -> f64 {
        (MU_EARTH / self.semimajor_axis_km.powi(3)).sqrt()
    }

    /// Orbital period, s.
    pub fn period_s(&self) -> f64 {
        std::f64::consts::TAU / self.mean_motion()
    }

    /// Enable secular J2 RAAN drift for this (circular) orbit.
    pub fn with_j2_raan_drift(mut self) -> Self {
        let n = self.mean_motion();
        let ratio = EARTH_RADIUS_KM / self.semimajor_axis_km;
        let rate = -1.5 * n * J2 * ratio * ratio * self.inclination_deg.to_radians().cos();
        self.raan_rate_deg_s = rate.to_degrees();
        self
    }
}

/// Propagated satellite state at a simulation instant.
#[derive(Debug, Clone, Copy)]
pub struct SatelliteState {
    pub sat_id: SatId,
    pub t: f64,
    pub position_eci: Vec3,
    pub velocity_eci: Vec3,
    pub position_ecef: Vec3,
}

/// Discretized cell of a region of interest.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundPoint {
    pub gp_id: GpId,
    pub region_id: RegionId,
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub cell_size_km: f64,
}

impl GroundPoint {
    pub fn position_ecef(&self) -> Vec3 {
        surface_point_ecef(self.lat_deg, self.lon_deg)
    }
}

/// Ground station with a minimum-elevation visibility mask.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundStation {
    pub station_id: u16,
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub min_elevation_deg: f64,
    pub data_rate_bps: f64,
}

/// Network node: satellite or ground station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeId {
    Sat(SatId),
    Ground(u16),
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Sat(i) => write!(f, "sat{i}"),
            NodeId::Ground(i) => write!(f, "gs{i}"),
        }
    }
}

impl FromStr for NodeId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(rest) = s.strip_prefix("sat") {
            rest.parse().map(NodeId::Sat).map_err(|e| e.to_string())
        } else if let Some(rest) = s.strip_prefix("gs") {
            rest.parse().map(NodeId::Ground).map_err(|e| e.to_string())
        } else {
            Err(format!("unknown node id {s:?}"))
        }
    }
}

/// Connectivity window between two nodes: the six-element contact tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct Contact {
    pub t_start: f64,
    pub t_end: f64,
    pub origin: NodeId,
    pub destination: NodeId,
    pub data_rate_bps: f64,
    /// Worst-case one-way light time over the window, s.
    pub range_light_s: f64,
}

/// Propagate a circular orbit to simulation time `t`.
pub fn propagate_state(sat_id: SatId, el: &OrbitalElements, t: f64) -> Result<SatelliteState, OrbitError> {
    el.validate()?;
    let n = el.mean_motion();
    let dt = t - el.epoch_s;
    // argument of latitude for the circular case
    let u = (el.arg_perigee_deg + el.true_anomaly_epoch_deg).to_radians() + n * dt;
    let raan = (el.raan_deg + el.raan_rate_deg_s * dt).to_radians();
    let inc = el.inclination_deg.to_radians();

    let (sin_u, cos_u) = u.sin_cos();
    let (sin_raan, cos_raan) = raan.sin_cos();
    let (sin_i, cos_i) = inc.sin_cos();

    let a = el.semimajor_axis_km;
    let position_eci = Vec3::new(
        a * (cos_raan * cos_u - sin_raan * sin_u * cos_i),
        a * (sin_raan * cos_u + cos_raan * sin_u * cos_i),
        a * (sin_u * sin_i),
    );
    let v = a * n;
    let velocity_eci = Vec3::new(
        v * (-cos_raan * sin_u - sin_raan * cos_u * cos_i),
        v * (-sin_raan * sin_u + cos_raan * cos_u * cos_i),
        v * (cos_u * sin_i),
    );
    let position_ecef = position_eci.rotated_z(-EARTH_ROTATION_RATE * t);

    Ok(SatelliteState { sat_id, t, position_eci, velocity_eci, position_ecef })
}

/// Angle between the nadir direction and the satellite-to-ground-point
/// direction, degrees in [0, 180].
pub fn off_nadir_angle_deg(state: &SatelliteState, gp: &GroundPoint) -> f64 {
    let to_center = -state.position_ecef;
    let to_gp = gp.position_ecef() - state.position_ecef;
    to_center.angle_deg(to_gp)
}

/// Elevation of the satellite above the local horizon of a surface point, deg.
pub fn elevation_deg(surface: Vec3, sat_ecef: Vec3) -> f64 {
    let up = surface.normalized();
    let to_sat = sat_ecef - surface;
    (up.dot(to_sat) / to_sat.norm()).clamp(-1.0, 1.0).asin().to_degrees()
}

/// Ground points observable within the field of regard: off-nadir angle within
/// the half-cone and the satellite above the point's horizon.
pub fn ground_points_in_for<'a>(
    state: &SatelliteState,
    gps: &'a [GroundPoint],
    for_half_angle_deg: f64,
) -> Vec<&'a GroundPoint> {
    gps.iter()
        .filter(|gp| gp_in_for(state, gp, for_half_angle_deg))
        .collect()
}

pub fn gp_in_for(state: &SatelliteState, gp: &GroundPoint, for_half_angle_deg: f64) -> bool {
    in_for_vec(state.position_ecef, gp.position_ecef(), for_half_angle_deg)
}

/// FOR membership from raw ECEF vectors; the cached-ephemeris path and the
/// `GroundPoint` path share this test.
pub fn in_for_vec(sat_ecef: Vec3, gp_ecef: Vec3, for_half_angle_deg: f64) -> bool {
    let to_gp = gp_ecef - sat_ecef;
    (-sat_ecef).angle_deg(to_gp) <= for_half_angle_deg
        && elevation_deg(gp_ecef, sat_ecef) > 0.0
}

/// Parameters for contact-plan generation.
#[derive(Debug, Clone)]
pub struct ContactPlanParams {
    pub horizon_s: f64,
    pub step_s: f64,
    pub grazing_margin_km: f64,
    pub isl_data_rate_bps: f64,
}

impl Default for ContactPlanParams {
    fn default() -> Self {
        Self { horizon_s: 21_600.0, step_s: 10.0, grazing_margin_km: 100.0, isl_data_rate_bps: 1000.0 }
    }
}

/// Geometric LOS between two satellites: the connecting segment stays above
/// the grazing shell.
fn sats_have_los(a: Vec3, b: Vec3, margin_km: f64) -> bool {
    segment_min_distance_to_origin(a, b) > EARTH_RADIUS_KM + margin_km
}

/// Build the full contact plan: every ordered satellite pair plus
/// satellite-station links, with windows merged from step sampling and edges
/// refined by bisection.
pub fn build_contact_plan(
    constellation: &[OrbitalElements],
    stations: &[GroundStation],
    params: &ContactPlanParams,
) -> Result<Vec<Contact>, OrbitError> {
    if params.step_s <= 0.0 {
        return Err(OrbitError::NonPositiveStep(params.step_s));
    }
    if params.horizon_s <= 0.0 {
        return Err(OrbitError::NonPositiveHorizon(params.horizon_s));
    }
    for el in constellation {
        el.validate()?;
    }

    let mut contacts = Vec::new();
    let n_sats = constellation.len();

    for i in 0..n_sats {
        for j in (i + 1)..n_sats {
            let visible = |t: f64| {
                let a = propagate_state(i as SatId, &constellation[i], t).unwrap();
                let b = propagate_state(j as SatId, &constellation[j], t).unwrap();
                sats_have_los(a.position_eci, b.position_eci, params.grazing_margin_km)
            };
            let range = |t: f64| {
                let a = propagate_state(i as SatId, &constellation[i], t).unwrap();
                let b = propagate_state(j as SatId, &constellation[j], t).unwrap();
                (a.position_eci - b.position_eci).norm()
            };
            for (t0, t1) in scan_windows(&visible, params.horizon_s, params.step_s) {
                let max_range = max_over_window(&range, t0, t1, params.step_s);
                push_pair(
                    &mut contacts,
                    NodeId::Sat(i as SatId),
                    NodeId::Sat(j as SatId),
                    t0,
                    t1,
                    params.isl_data_rate_bps,
                    max_range / LIGHT_SPEED_KM_S,
                );
            }
        }
        for (k, st) in stations.iter().enumerate() {
            let surface = surface_point_ecef(st.lat_deg, st.lon_deg);
            let visible = |t: f64| {
                let s = propagate_state(i as SatId, &constellation[i], t).unwrap();
                elevation_deg(surface, s.position_ecef) > st.min_elevation_deg
            };
            let range = |t: f64| {
                let s = propagate_state(i as SatId, &constellation[i], t).unwrap();
                (s.position_ecef - surface).norm()
            };
            for (t0, t1) in scan_windows(&visible, params.horizon_s, params.step_s) {
                let max_range = max_over_window(&range, t0, t1, params.step_s);
                push_pair(
                    &mut contacts,
                    NodeId::Sat(i as SatId),
                    NodeId::Ground(k as u16),
                    t0,
                    t1,
                    st.data_rate_bps,
                    max_range / LIGHT_SPEED_KM_S,
                );
            }
        }
    }

    contacts.sort_by(|a, b| {
        a.t_start
            .total_cmp(&b.t_start)
            .then(a.origin.cmp(&b.origin))
            .then(a.destination.cmp(&b.destination))
    });
    Ok(contacts)
}

fn push_pair(
    out: &mut Vec<Contact>,
    a: NodeId,
    b: NodeId,
    t_start: f64,
    t_end: f64,
    rate: f64,
    range_light_s: f64,
) {
    out.push(Contact { t_start, t_end, origin: a, destination: b, data_rate_bps: rate, range_light_s });
    out.push(Contact { t_start, t_end, origin: b, destination: a, data_rate_bps: rate, range_light_s });
}

/// Sample a predicate over [0, horizon] and merge true runs into windows,
/// refining each boundary by bisection to ~1 ms.
fn scan_windows(visible: &dyn Fn(f64) -> bool, horizon_s: f64, step_s: f64) -> Vec<(f64, f64)> {
    let n_steps = (horizon_s / step_s).ceil() as usize;
    let mut windows = Vec::new();
    let mut open: Option<f64> = None;
    let mut prev_t = 0.0;
    let mut prev_vis = visible(0.0);
    if prev_vis {
        open = Some(0.0);
    }
    for k in 1..=n_steps {
        let t = (k as f64 * step_s).min(horizon_s);
        let vis = visible(t);
        if vis && !prev_vis {
            open = Some(refine_boundary(visible, prev_t, t));
        } else if !vis && prev_vis {
            let t0 = open.take().expect("window open");
            windows.push((t0, refine_boundary(visible, t, prev_t)));
        }
        prev_t = t;
        prev_vis = vis;
    }
    if let Some(t0) = open {
        windows.push((t0, horizon_s));
    }
    windows
}

/// Bisect between a non-visible and a visible instant; returns a time at
/// which the predicate holds, within 1 ms of the transition.
fn refine_boundary(visible: &dyn Fn(f64) -> bool, t_false: f64, t_true: f64) -> f64 {
    let mut lo = t_false;
    let mut hi = t_true;
    while (hi - lo).abs() > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if visible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Max of `f` over [t0, t1] sampled at `step` plus both endpoints.
fn max_over_window(f: &dyn Fn(f64) -> f64, t0: f64, t1: f64, step: f64) -> f64 {
    let mut m = f(t0).max(f(t1));
    let mut t = (t0 / step).ceil() * step;
    while t < t1 {
        if t > t0 {
            m = m.max(f(t));
        }
        t += step;
    }
    m
}

/// Future access intervals per satellite per region; drives bundle priorities.
#[derive(Debug, Clone, Default)]
pub struct AccessTable {
    /// windows[sat][region] = sorted (t_start, t_end) access intervals.
    pub windows: Vec<Vec<Vec<(f64, f64)>>>,
}

impl AccessTable {
    /// Earliest instant at or after `t` at which `sat` can access `region`.
    pub fn next_access(&self, sat: SatId, region: RegionId, t: f64) -> Option<f64> {
        self.windows
            .get(sat as usize)?
            .get(region as usize)?
            .iter()
            .find(|&&(_, end)| end >= t)
            .map(|&(start, _)| start.max(t))
    }
}

/// Recipients of an observation bundle over `region`, highest priority first.
///
/// Satellites are ranked by earliest next access after `t_gen`; rank k gets
/// priority k. The generating satellite and satellites that never revisit the
/// region are excluded; the list is truncated at [`MAX_PRIORITY`].
pub fn bundle_recipients(
    access: &AccessTable,
    region: RegionId,
    source: SatId,
    t_gen: f64,
) -> Vec<(SatId, u8)> {
    let mut ranked: Vec<(f64, SatId)> = (0..access.windows.len() as SatId)
        .filter(|&s| s != source)
        .filter_map(|s| access.next_access(s, region, t_gen).map(|t| (t, s)))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    ranked
        .into_iter()
        .take(MAX_PRIORITY as usize)
        .enumerate()
        .map(|(k, (_, s))| (s, k as u8 + 1))
        .collect()
}

/// Walker constellation: `planes` planes spread over `raan_spread_deg` of
/// RAAN, `sats_per_plane` satellites evenly spaced in anomaly, with an
/// inter-plane phase offset.
#[allow(clippy::too_many_arguments)]
pub fn walker_constellation(
    planes: u16,
    sats_per_plane: u16,
    altitude_km: f64,
    inclination_deg: f64,
    raan_spread_deg: f64,
    phase_offset_deg: f64,
    epoch_anomaly_deg: f64,
    j2_drift: bool,
) -> Result<Vec<OrbitalElements>, OrbitError> {
    let a = EARTH_RADIUS_KM + altitude_km;
    let mut out = Vec::with_capacity(planes as usize * sats_per_plane as usize);
    for p in 0..planes {
        let raan = p as f64 * raan_spread_deg / planes as f64;
        for s in 0..sats_per_plane {
            let anomaly = epoch_anomaly_deg
                + s as f64 * 360.0 / sats_per_plane as f64
                + p as f64 * phase_offset_deg;
            let mut el = OrbitalElements::circular(a, inclination_deg, raan, anomaly)?;
            if j2_drift {
                el = el.with_j2_raan_drift();
            }
            out.push(el);
        }
    }
    Ok(out)
}

/// Serialize a contact plan as delimited text, one contact per line:
/// t_start, t_end, origin, destination, data_rate_bps, range_light_seconds.
pub fn contact_plan_to_text(plan: &[Contact]) -> String {
    let mut s = String::new();
    for c in plan {
        s.push_str(&format!(
            "{}, {}, {}, {}, {}, {}\n",
            c.t_start, c.t_end, c.origin, c.destination, c.data_rate_bps, c.range_light_s
        ));
    }
    s
}

/// Parse a contact plan from the delimited text format.
pub fn contact_plan_from_text(text: &str) -> Result<Vec<Contact>, OrbitError> {
    let mut plan = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 6 {
            return Err(OrbitError::MalformedContactLine {
                line: idx + 1,
                reason: format!("expected 6 fields, got {}", fields.len()),
            });
        }
        let bad = |reason: String| OrbitError::MalformedContactLine { line: idx + 1, reason };
        let t_start: f64 = fields[0].parse().map_err(|e| bad(format!("t_start: {e}")))?;
        let t_end: f64 = fields[1].parse().map_err(|e| bad(format!("t_end: {e}")))?;
        let origin: NodeId = fields[2].parse().map_err(|e| bad(format!("origin: {e}")))?;
        let destination: NodeId = fields[3].parse().map_err(|e| bad(format!("destination: {e}")))?;
        let data_rate_bps: f64 = fields[4].parse().map_err(|e| bad(format!("data_rate: {e}")))?;
        let range_light_s: f64 = fields[5].parse().map_err(|e| bad(format!("range: {e}")))?;
        if t_start >= t_end {
            return Err(bad("t_start must precede t_end".into()));
        }
        if origin == destination {
            return Err(bad("origin equals destination".into()));
        }
        if data_rate_bps <= 0.0 {
            return Err(bad("data rate must be positive".into()));
        }
        plan.push(Contact { t_start, t_end, origin, destination, data_rate_bps, range_light_s });
    }
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_orbit(anomaly_deg: f64) -> OrbitalElements {
        OrbitalElements::circular(7088.137, 98.5, 0.0, anomaly_deg).unwrap()
    }

    #[test]
    fn epoch_identity_radius() {
        let el = paper_orbit(0.0);
        let st = propagate_state(0, &el, 0.0).unwrap();
        assert!((st.position_eci.norm() - 7088.137).abs() < 1e-9);
        // epoch anomaly 0, RAAN 0: on the x axis
        assert!((st.position_eci.x - 7088.137).abs() < 1e-9);
    }

    #[test]
    fn orbital_period_matches_hand_calculation() {
        // T = 2*pi*sqrt(a^3/mu) = 5939.4 s for a = 7088.137 km
        let el = paper_orbit(0.0);
        assert!((el.period_s() - 5939.0).abs() < 1.0, "T = {}", el.period_s());
        let s0 = propagate_state(0, &el, 0.0).unwrap();
        let s1 = propagate_state(0, &el, el.period_s()).unwrap();
        assert!((s0.position_eci - s1.position_eci).norm() < 1e-6);
    }

    #[test]
    fn antipodal_at_half_period() {
        let el = paper_orbit(30.0);
        let s0 = propagate_state(0, &el, 0.0).unwrap();
        let s1 = propagate_state(0, &el, el.period_s() / 2.0).unwrap();
        assert!((s0.position_eci + s1.position_eci).norm() < 1e-6);
    }

    #[test]
    fn radius_conserved_along_orbit() {
        let el = paper_orbit(123.0).with_j2_raan_drift();
        for k in 0..200 {
            let st = propagate_state(0, &el, k as f64 * 37.0).unwrap();
            assert!(
                (st.position_eci.norm() - 7088.137).abs() < 1e-6,
                "radius drifted at step {k}"
            );
        }
    }

    #[test]
    fn velocity_is_tangential_with_orbital_speed() {
        let el = paper_orbit(77.0);
        let st = propagate_state(0, &el, 500.0).unwrap();
        assert!(st.position_eci.dot(st.velocity_eci).abs() < 1e-6);
        let v_circ = (MU_EARTH / 7088.137f64).sqrt();
        assert!((st.velocity_eci.norm() - v_circ).abs() < 1e-9);
    }

    #[test]
    fn ecef_is_rotated_eci() {
        let el = paper_orbit(0.0);
        let t = 1234.0;
        let st = propagate_state(0, &el, t).unwrap();
        let expected = st.position_eci.rotated_z(-EARTH_ROTATION_RATE * t);
        assert!((st.position_ecef - expected).norm() < 1e-12);
    }

    #[test]
    fn non_circular_rejected() {
        let mut el = paper_orbit(0.0);
        el.eccentricity = 0.01;
        assert_eq!(propagate_state(0, &el, 0.0).unwrap_err(), OrbitError::NonCircular(0.01));
        assert!(OrbitalElements::circular(6000.0, 98.5, 0.0, 0.0).is_err());
    }

    fn gp_at(lat: f64, lon: f64) -> GroundPoint {
        GroundPoint { gp_id: 0, region_id: 0, lat_deg: lat, lon_deg: lon, cell_size_km: 4.0 }
    }

    /// Satellite over (0, 0) at the paper altitude, at t = 0 (ECEF = ECI).
    fn sat_over_origin() -> SatelliteState {
        SatelliteState {
            sat_id: 0,
            t: 0.0,
            position_eci: Vec3::new(7088.137, 0.0, 0.0),
            velocity_eci: Vec3::ZERO,
            position_ecef: Vec3::new(7088.137, 0.0, 0.0),
        }
    }

    #[test]
    fn off_nadir_zero_below_satellite() {
        let st = sat_over_origin();
        assert!(off_nadir_angle_deg(&st, &gp_at(0.0, 0.0)) < 1e-9);
    }

    #[test]
    fn off_nadir_matches_spherical_oracle_at_55deg() {
        // ground range 1174 km -> central angle lambda; spherical oracle:
        // tan(eta) = Re sin(lambda) / (r - Re cos(lambda))
        let st = sat_over_origin();
        let lambda_deg = (1174.0 / EARTH_RADIUS_KM).to_degrees();
        let gp = gp_at(0.0, lambda_deg);
        let got = off_nadir_angle_deg(&st, &gp);
        let lam = lambda_deg.to_radians();
        let oracle = (EARTH_RADIUS_KM * lam.sin())
            .atan2(7088.137 - EARTH_RADIUS_KM * lam.cos())
            .to_degrees();
        assert!((got - oracle).abs() < 1e-9);
        assert!((got - 55.0).abs() < 0.5, "got {got}");
    }

    #[test]
    fn antipodal_gp_never_observable() {
        // the satellite-to-gp direction points through the Earth: the vector
        // off-nadir angle collapses toward zero past the limb, so the
        // observability cut is the elevation condition, not the cone angle
        let st = sat_over_origin();
        let gp = gp_at(0.0, 180.0);
        assert!(elevation_deg(gp.position_ecef(), st.position_ecef) < -80.0);
        assert!(!gp_in_for(&st, &gp, 55.0));
        // max off-nadir over the visible cap is the limb angle asin(Re/r)
        let limb = (EARTH_RADIUS_KM / 7088.137f64).asin().to_degrees();
        let near_limb = gp_at(0.0, (EARTH_RADIUS_KM / 7088.137f64).acos().to_degrees());
        assert!((off_nadir_angle_deg(&st, &near_limb) - limb).abs() < 0.1);
    }

    #[test]
    fn for_filter_empty_and_nadir_degenerate() {
        let st = sat_over_origin();
        assert!(ground_points_in_for(&st, &[], 55.0).is_empty());
        // half-angle ~0: only the subsatellite point itself survives
        let gps = vec![gp_at(0.0, 0.0), gp_at(0.0, 0.3), gp_at(1.0, 0.0)];
        let close = ground_points_in_for(&st, &gps, 1e-6);
        assert_eq!(close.len(), 1);
        assert_eq!(close[0].gp_id, gps[0].gp_id);
    }

    #[test]
    fn for_filter_matches_cone_oracle() {
        // brute-force oracle via the spherical relation: a gp at central angle
        // lambda is inside the cone iff its off-nadir angle (from the oracle
        // formula) is within the half-angle and the horizon is not crossed.
        let st = sat_over_origin();
        let r = 7088.137;
        let mut gps = Vec::new();
        for k in 0..160 {
            let lam = k as f64 * 0.15; // up to 24 degrees of arc
            gps.push(gp_at(0.0, lam));
        }
        let selected = ground_points_in_for(&st, &gps, 55.0);
        for gp in &gps {
            let lam = gp.lon_deg.to_radians();
            let eta = (EARTH_RADIUS_KM * lam.sin())
                .atan2(r - EARTH_RADIUS_KM * lam.cos())
                .to_degrees();
            let elev = 90.0 - eta - gp.lon_deg;
            let oracle_in = eta <= 55.0 && elev > 0.0;
            // gp_id is 0 for all of these; membership compared on longitude
            let member = selected.iter().any(|g| (g.lon_deg - gp.lon_deg).abs() < 1e-12);
            assert_eq!(member, oracle_in, "lambda = {} deg", gp.lon_deg);
        }
    }

    #[test]
    fn colocated_satellites_continuous_contact() {
        let el = paper_orbit(0.0);
        let plan = build_contact_plan(
            &[el, el],
            &[],
            &ContactPlanParams { horizon_s: 6000.0, ..Default::default() },
        )
        .unwrap();
        assert_eq!(plan.len(), 2); // both directions
        let c = &plan[0];
        assert!(c.t_start == 0.0 && (c.t_end - 6000.0).abs() < 1e-9);
        assert!(c.range_light_s < 1e-12);
    }

    #[test]
    fn grazing_pair_max_range_matches_hand_calculation() {
        // separation chosen so the LOS chord bottoms out just above the
        // 100 km grazing shell: max chord = 2*sqrt(r^2 - (Re+100)^2) = 5753 km
        let r: f64 = 7088.137;
        let graze: f64 = EARTH_RADIUS_KM + 100.0;
        let half = (graze / r).acos().to_degrees();
        let sep = 2.0 * half - 0.05; // a hair inside tangency: LOS persists
        let a = paper_orbit(0.0);
        let b = paper_orbit(sep);
        let plan = build_contact_plan(
            &[a, b],
            &[],
            &ContactPlanParams { horizon_s: 6000.0, ..Default::default() },
        )
        .unwrap();
        assert!(!plan.is_empty());
        let max_range = plan
            .iter()
            .map(|c| c.range_light_s * LIGHT_SPEED_KM_S)
            .fold(0.0f64, f64::max);
        let expected = 2.0 * (r * r - graze * graze).sqrt();
        assert!(
            (max_range - expected).abs() < 50.0,
            "max range {max_range}, expected {expected}"
        );
        assert!((expected - 5753.0).abs() < 50.0);
    }

    #[test]
    fn earth_blocks_orthogonal_pair() {
        // two satellites placed on opposite sides of the Earth at t = 0
        let a = OrbitalElements::circular(7088.137, 0.0, 0.0, 0.0).unwrap();
        let b = OrbitalElements::circular(7088.137, 90.0, 90.0, 90.0).unwrap();
        // verify geometry: oracle on the segment at t = 0
        let sa = propagate_state(0, &a, 0.0).unwrap().position_eci;
        let sb = propagate_state(1, &b, 0.0).unwrap().position_eci;
        assert!(segment_min_distance_to_origin(sa, sb) < EARTH_RADIUS_KM);
        let plan = build_contact_plan(
            &[a, b],
            &[],
            &ContactPlanParams { horizon_s: 600.0, ..Default::default() },
        )
        .unwrap();
        // no window contains t = 0
        assert!(!plan.iter().any(|c| c.t_start <= 0.0 && 0.0 < c.t_end));
    }

    #[test]
    fn contact_symmetry_and_completeness() {
        let els = walker_constellation(2, 3, 710.0, 98.5, 180.0, 30.0, 0.0, false).unwrap();
        let params = ContactPlanParams { horizon_s: 3000.0, ..Default::default() };
        let plan = build_contact_plan(&els, &[], &params).unwrap();
        // symmetry: A->B window exists iff B->A window exists
        for c in &plan {
            assert!(
                plan.iter().any(|d| d.origin == c.destination
                    && d.destination == c.origin
                    && (d.t_start - c.t_start).abs() < 1e-9
                    && (d.t_end - c.t_end).abs() < 1e-9),
                "missing mirror of {c:?}"
            );
        }
        // completeness: half-step offset sampling finds no LOS outside windows
        for i in 0..els.len() {
            for j in (i + 1)..els.len() {
                let mut t = params.step_s / 2.0;
                while t < params.horizon_s {
                    let a = propagate_state(i as SatId, &els[i], t).unwrap();
                    let b = propagate_state(j as SatId, &els[j], t).unwrap();
                    if sats_have_los(a.position_eci, b.position_eci, params.grazing_margin_km) {
                        let covered = plan.iter().any(|c| {
                            c.origin == NodeId::Sat(i as SatId)
                                && c.destination == NodeId::Sat(j as SatId)
                                && c.t_start <= t
                                && t <= c.t_end
                        });
                        assert!(covered, "LOS at t={t} for pair ({i},{j}) outside all windows");
                    }
                    t += params.step_s;
                }
            }
        }
    }

    #[test]
    fn station_contact_needs_elevation() {
        let el = paper_orbit(0.0);
        let station = GroundStation {
            station_id: 0,
            lat_deg: 0.0,
            lon_deg: 0.0,
            min_elevation_deg: 10.0,
            data_rate_bps: 1e6,
        };
        let plan = build_contact_plan(
            &[el],
            &[station],
            &ContactPlanParams { horizon_s: 2000.0, ..Default::default() },
        )
        .unwrap();
        // satellite starts directly overhead: a window must contain t = 0
        assert!(plan.iter().any(|c| c.t_start <= 0.0 && c.t_end > 0.0));
        for c in &plan {
            assert!((c.data_rate_bps - 1e6).abs() < 1e-9);
        }
    }

    fn synthetic_access(n_sats: usize, next: &[(SatId, f64)]) -> AccessTable {
        let mut windows = vec![vec![Vec::new()]; n_sats];
        for &(s, t) in next {
            windows[s as usize][0].push((t, t + 100.0));
        }
        AccessTable { windows }
    }

    #[test]
    fn recipients_ordered_by_next_access() {
        // sat 12 next over the region, then sat 13
        let access = synthetic_access(14, &[(12, 1000.0), (13, 2500.0)]);
        let got = bundle_recipients(&access, 0, 11, 500.0);
        assert_eq!(got, vec![(12, 1), (13, 2)]);
    }

    #[test]
    fn recipients_skip_source_and_never_visiting() {
        let access = synthetic_access(4, &[(0, 900.0), (2, 1200.0)]);
        // source 0 is next over the region but is skipped
        let got = bundle_recipients(&access, 0, 0, 500.0);
        assert_eq!(got, vec![(2, 1)]);
        // nobody ever revisits: empty
        let empty = AccessTable { windows: vec![vec![Vec::new()]; 3] };
        assert!(bundle_recipients(&empty, 0, 0, 0.0).is_empty());
    }

    #[test]
    fn recipients_truncated_at_max_priority() {
        let entries: Vec<(SatId, f64)> = (0..20).map(|s| (s as SatId, 1000.0 + s as f64)).collect();
        let access = synthetic_access(21, &entries);
        let got = bundle_recipients(&access, 0, 20, 0.0);
        assert_eq!(got.len(), MAX_PRIORITY as usize);
        // priorities are exactly 1..=15 with no gaps or duplicates
        let prios: Vec<u8> = got.iter().map(|&(_, p)| p).collect();
        assert_eq!(prios, (1..=MAX_PRIORITY).collect::<Vec<_>>());
    }

    #[test]
    fn recipients_priorities_are_permutation_prefix() {
        // property over synthetic tables
        for seed in 0..30u64 {
            let n = 3 + (seed % 12) as usize;
            let entries: Vec<(SatId, f64)> = (0..n)
                .filter(|&s| crate::geom::keyed_u64(&[seed, s as u64]) % 3 != 0)
                .map(|s| (s as SatId, crate::geom::keyed_unit(&[seed, s as u64, 9]) * 5000.0))
                .collect();
            let access = synthetic_access(n, &entries);
            let got = bundle_recipients(&access, 0, 0, 100.0);
            let prios: Vec<u8> = got.iter().map(|&(_, p)| p).collect();
            assert_eq!(prios, (1..=got.len() as u8).collect::<Vec<_>>());
            // sorted by next access
            let times: Vec<f64> = got
                .iter()
                .map(|&(s, _)| access.next_access(s, 0, 100.0).unwrap())
                .collect();
            assert!(times.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn walker_star_layout() {
        let els = walker_constellation(3, 8, 710.0, 98.5, 180.0, 15.0, 0.0, false).unwrap();
        assert_eq!(els.len(), 24);
        assert!((els[0].raan_deg - 0.0).abs() < 1e-12);
        assert!((els[8].raan_deg - 60.0).abs() < 1e-12);
        assert!((els[16].raan_deg - 120.0).abs() < 1e-12);
        // in-plane spacing 45 deg, inter-plane phase 15 deg
        assert!((els[1].true_anomaly_epoch_deg - 45.0).abs() < 1e-12);
        assert!((els[9].true_anomaly_epoch_deg - 60.0).abs() < 1e-12);
        for el in &els {
            assert!((el.semimajor_axis_km - 7088.137).abs() < 1e-12);
        }
    }

    #[test]
    fn contact_plan_text_round_trip() {
        let els = walker_constellation(1, 8, 710.0, 98.5, 180.0, 0.0, 0.0, false).unwrap();
        let plan = build_contact_plan(
            &els,
            &[],
            &ContactPlanParams { horizon_s: 1500.0, ..Default::default() },
        )
        .unwrap();
        assert!(!plan.is_empty());
        let text = contact_plan_to_text(&plan);
        let parsed = contact_plan_from_text(&text).unwrap();
        assert_eq!(plan, parsed);
    }

    #[test]
    fn contact_plan_parse_errors() {
        assert!(matches!(
            contact_plan_from_text("1.0, 2.0, sat0, sat1, 1000"),
            Err(OrbitError::MalformedContactLine { line: 1, .. })
        ));
        assert!(contact_plan_from_text("5.0, 2.0, sat0, sat1, 1000, 0.01").is_err());
        assert!(contact_plan_from_text("1.0, 2.0, sat0, sat0, 1000, 0.01").is_err());
        assert!(contact_plan_from_text("1.0, 2.0, bogus, sat1, 1000, 0.01").is_err());
    }
}
