//! Scenario configuration: a single TOML file with explicit units in key
//! names. An empty file reproduces the default 24-satellite flood-monitoring
//! scenario; every field can be overridden.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::value::{CountRule, DecayMode};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config field {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, reason: reason.into() }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub master_seed: u64,
    pub horizon_s: f64,
    pub dt_step_s: f64,
    pub reschedule_period_s: f64,
    /// Per-call DP planning window.
    pub planning_window_s: f64,
    pub constellation: ConstellationConfig,
    pub payload: PayloadConfig,
    pub slew: SlewConfig,
    pub isl: IslConfig,
    pub value: ValueConfig,
    pub regions: Vec<RegionConfig>,
    pub ground_stations: Vec<StationConfig>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            master_seed: 42,
            horizon_s: 21_600.0,
            dt_step_s: 5.0,
            reschedule_period_s: 600.0,
            planning_window_s: 900.0,
            constellation: ConstellationConfig::default(),
            payload: PayloadConfig::default(),
            slew: SlewConfig::default(),
            isl: IslConfig::default(),
            value: ValueConfig::default(),
            regions: default_regions(),
            ground_stations: default_stations(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ConstellationConfig {
    pub planes: u16,
    pub sats_per_plane: u16,
    pub altitude_km: f64,
    pub inclination_deg: f64,
    /// RAAN spread across planes: 180 for a Star pattern, 360 for a Delta.
    pub raan_spread_deg: f64,
    pub phase_offset_deg: f64,
    pub epoch_anomaly_deg: f64,
    pub j2_raan_drift: bool,
}

impl Default for ConstellationConfig {
    fn default() -> Self {
        Self {
            planes: 3,
            sats_per_plane: 8,
            altitude_km: 710.0,
            inclination_deg: 98.5,
            raan_spread_deg: 180.0,
            phase_offset_deg: 15.0,
            epoch_anomaly_deg: 0.0,
            j2_raan_drift: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct PayloadConfig {
    pub for_half_angle_deg: f64,
    pub footprint_km: f64,
}

impl Default for PayloadConfig {
    fn default() -> Self {
        Self { for_half_angle_deg: 55.0, footprint_km: 8.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SlewConfig {
    pub c3: f64,
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
    pub sigma_s: f64,
    /// Slew-time percentile padding used in feasibility checks.
    pub k_sigma: f64,
    /// Band limit; defaults to twice the FOR half-angle when absent.
    pub alpha_max_deg: Option<f64>,
}

impl Default for SlewConfig {
    fn default() -> Self {
        Self {
            c3: 6.1974e-6,
            c2: 1.3904e-3,
            c1: 1.4165e-1,
            c0: 4.6231,
            sigma_s: 0.2116,
            k_sigma: 2.0,
            alpha_max_deg: None,
        }
    }
}

impl SlewConfig {
    pub fn model(&self) -> crate::acs::SlewModel {
        crate::acs::SlewModel {
            c3: self.c3,
            c2: self.c2,
            c1: self.c1,
            c0: self.c0,
            sigma_s: self.sigma_s,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct IslConfig {
    pub data_rate_bps: f64,
    pub grazing_margin_km: f64,
    pub contact_step_s: f64,
    pub bundle_size_bits: f64,
    pub bundle_payload_bits: f64,
}

impl Default for IslConfig {
    fn default() -> Self {
        Self {
            data_rate_bps: 1000.0,
            grazing_margin_km: 100.0,
            contact_step_s: 10.0,
            bundle_size_bits: 2000.0,
            bundle_payload_bits: 1645.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ValueConfig {
    pub count_rule: CountRule,
    pub mode: DecayMode,
    pub distance_ref_km: f64,
}

impl Default for ValueConfig {
    fn default() -> Self {
        Self { count_rule: CountRule::NSeen, mode: DecayMode::Count, distance_ref_km: 16.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RegionConfig {
    pub name: String,
    pub center_lat_deg: f64,
    pub center_lon_deg: f64,
    pub extent_km: f64,
    pub cell_size_km: f64,
    /// "synthetic" or a nature-run grid file path.
    pub source: String,
    /// Synthetic-run seed; derived from the master seed when absent.
    pub seed: Option<u64>,
    pub timestep_s: f64,
    pub blobs: usize,
    pub evolution: f64,
    pub period_frames: f64,
}

impl Default for RegionConfig {
    fn default() -> Self {
        Self {
            name: String::from("region"),
            center_lat_deg: 0.0,
            center_lon_deg: 0.0,
            extent_km: 80.0,
            cell_size_km: 4.0,
            source: String::from("synthetic"),
            seed: None,
            timestep_s: 900.0,
            blobs: 6,
            evolution: 0.25,
            period_frames: 8.0,
        }
    }
}

fn city(name: &str, lat: f64, lon: f64) -> RegionConfig {
    RegionConfig {
        name: name.to_string(),
        center_lat_deg: lat,
        center_lon_deg: lon,
        ..RegionConfig::default()
    }
}

fn default_regions() -> Vec<RegionConfig> {
    vec![
        city("dhaka", 23.8, 90.4),
        city("sydney", -33.9, 151.2),
        city("dallas", 32.8, -96.8),
        city("london", 51.5, -0.13),
        city("rio", -22.9, -43.2),
    ]
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct StationConfig {
    pub name: String,
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub min_elevation_deg: f64,
    pub data_rate_bps: f64,
}

impl Default for StationConfig {
    fn default() -> Self {
        Self {
            name: String::from("gs"),
            lat_deg: 0.0,
            lon_deg: 0.0,
            min_elevation_deg: 10.0,
            data_rate_bps: 1.0e6,
        }
    }
}

fn default_stations() -> Vec<StationConfig> {
    vec![
        StationConfig { name: "gs-north".into(), lat_deg: 85.0, ..StationConfig::default() },
        StationConfig { name: "gs-south".into(), lat_deg: -85.0, ..StationConfig::default() },
    ]
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Fully resolved config as TOML; reloading the echo reproduces the run.
    pub fn echo_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// FNV-1a digest over the canonical echo; identifies scenario + seed.
    pub fn digest(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.echo_toml().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }

    pub fn n_sats(&self) -> u16 {
        self.constellation.planes * self.constellation.sats_per_plane
    }

    pub fn alpha_max_deg(&self) -> f64 {
        self.slew.alpha_max_deg.unwrap_or(2.0 * self.payload.for_half_angle_deg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.horizon_s <= 0.0 {
            return Err(invalid("horizon_s", "must be positive"));
        }
        if self.dt_step_s <= 0.0 {
            return Err(invalid("dt_step_s", "must be positive"));
        }
        if self.reschedule_period_s <= 0.0 {
            return Err(invalid("reschedule_period_s", "must be positive"));
        }
        let ratio = self.reschedule_period_s / self.dt_step_s;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return Err(invalid("dt_step_s", "must divide reschedule_period_s"));
        }
        if self.planning_window_s < self.reschedule_period_s {
            return Err(invalid("planning_window_s", "must cover reschedule_period_s"));
        }
        let c = &self.constellation;
        if c.planes == 0 || c.sats_per_plane == 0 {
            return Err(invalid("constellation", "needs at least one satellite"));
        }
        if c.altitude_km <= 0.0 {
            return Err(invalid("constellation.altitude_km", "must be positive"));
        }
        if !(0.0..=180.0).contains(&c.inclination_deg) {
            return Err(invalid("constellation.inclination_deg", "outside [0, 180]"));
        }
        let p = &self.payload;
        if !(p.for_half_angle_deg > 0.0 && p.for_half_angle_deg < 90.0) {
            return Err(invalid("payload.for_half_angle_deg", "outside (0, 90)"));
        }
        if p.footprint_km <= 0.0 {
            return Err(invalid("payload.footprint_km", "must be positive"));
        }
        if self.slew.k_sigma < 0.0 {
            return Err(invalid("slew.k_sigma", "must be non-negative"));
        }
        if self.isl.data_rate_bps <= 0.0 {
            return Err(invalid("isl.data_rate_bps", "must be positive"));
        }
        if self.isl.bundle_size_bits <= 0.0 {
            return Err(invalid("isl.bundle_size_bits", "must be positive"));
        }
        if self.regions.is_empty() {
            return Err(invalid("regions", "at least one region required"));
        }
        for r in &self.regions {
            if r.cell_size_km <= 0.0 || r.extent_km < r.cell_size_km {
                return Err(invalid("regions.cell_size_km", format!("bad grid for {}", r.name)));
            }
            if r.cell_size_km > p.footprint_km / 2.0 + 1e-9 {
                return Err(invalid(
                    "regions.cell_size_km",
                    format!("{} undersamples the footprint (needs <= footprint/2)", r.name),
                ));
            }
            if r.timestep_s <= 0.0 {
                return Err(invalid("regions.timestep_s", "must be positive"));
            }
            if !(-90.0..=90.0).contains(&r.center_lat_deg) {
                return Err(invalid("regions.center_lat_deg", "outside [-90, 90]"));
            }
        }
        for s in &self.ground_stations {
            if !(0.0..90.0).contains(&s.min_elevation_deg) {
                return Err(invalid("ground_stations.min_elevation_deg", "outside [0, 90)"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_paper_scenario() {
        let cfg = ScenarioConfig::from_toml("").unwrap();
        assert_eq!(cfg.n_sats(), 24);
        assert_eq!(cfg.constellation.planes, 3);
        assert_eq!(cfg.constellation.altitude_km, 710.0);
        assert_eq!(cfg.constellation.inclination_deg, 98.5);
        assert_eq!(cfg.payload.for_half_angle_deg, 55.0);
        assert_eq!(cfg.payload.footprint_km, 8.0);
        assert_eq!(cfg.horizon_s, 21_600.0);
        assert_eq!(cfg.isl.data_rate_bps, 1000.0);
        assert_eq!(cfg.isl.bundle_payload_bits, 1645.0);
        assert_eq!(cfg.regions.len(), 5);
        assert_eq!(cfg.ground_stations.len(), 2);
        assert_eq!(cfg.alpha_max_deg(), 110.0);
        // bundle size covers payload plus 20% protocol overhead
        assert!(cfg.isl.bundle_size_bits >= cfg.isl.bundle_payload_bits * 1.2);
    }

    #[test]
    fn echo_round_trips() {
        let mut cfg = ScenarioConfig::default();
        cfg.master_seed = 7;
        cfg.regions[0].blobs = 9;
        let echoed = ScenarioConfig::from_toml(&cfg.echo_toml()).unwrap();
        assert_eq!(cfg, echoed);
        assert_eq!(cfg.digest(), echoed.digest());
    }

    #[test]
    fn digest_tracks_seed_and_fields() {
        let a = ScenarioConfig::default();
        let mut b = ScenarioConfig::default();
        b.master_seed = 43;
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn field_level_validation_errors() {
        let mut cfg = ScenarioConfig::default();
        cfg.dt_step_s = 7.0; // does not divide 600
        let err = cfg.validate().unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { field: "dt_step_s", .. }));

        let mut cfg = ScenarioConfig::default();
        cfg.regions[2].cell_size_km = 10.0; // > footprint/2
        assert!(matches!(
            cfg.validate().unwrap_err(),
            ConfigError::Invalid { field: "regions.cell_size_km", .. }
        ));

        assert!(ScenarioConfig::from_toml("no_such_key = 1").is_err());
    }

    #[test]
    fn overrides_apply() {
        let cfg = ScenarioConfig::from_toml(
            "master_seed = 9\n[constellation]\nplanes = 2\nsats_per_plane = 4\n",
        )
        .unwrap();
        assert_eq!(cfg.master_seed, 9);
        assert_eq!(cfg.n_sats(), 8);
        // untouched sections keep paper defaults
        assert_eq!(cfg.slew.c0, 4.6231);
        assert_eq!(cfg.slew.k_sigma, 2.0);
    }
}
