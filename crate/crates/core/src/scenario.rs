//! Scenario assembly: constellation, regions and nature runs, ground
//! stations, cached ephemerides, the contact plan and the access table.
//! Everything downstream (scheduler, DTN, metrics) reads from here.

use std::path::Path;

use thiserror::Error;

use crate::config::{ConfigError, ScenarioConfig};
use crate::geom::{keyed_u64, surface_point_ecef, Vec3, MU_EARTH};
use crate::orbit::{
    build_contact_plan, in_for_vec, propagate_state, walker_constellation, AccessTable, Contact,
    ContactPlanParams, GroundPoint, GroundStation, NodeId, OrbitalElements, OrbitError, SatId,
};
use crate::value::{assign_satellite_noise, load_nature_run, synth_nature_run, NatureRun,
    SynthParams, ValueError};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error("region {region}: {source}")]
    NatureRun { region: String, source: ValueError },
    #[error("duplicate ground point id {0} across regions")]
    DuplicateGpId(u32),
}

/// One region's ground truth plus its slice of the dense gp arena.
#[derive(Debug, Clone)]
pub struct RegionData {
    pub name: String,
    pub nature: NatureRun,
    pub gp_start: usize,
    pub center_ecef: Vec3,
}

/// Fully assembled, immutable simulation world.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub slew: crate::acs::SlewModel,
    pub constellation: Vec<OrbitalElements>,
    pub stations: Vec<GroundStation>,
    pub regions: Vec<RegionData>,
    /// Dense ground-point arena, all regions concatenated.
    pub gps: Vec<GroundPoint>,
    pub gp_ecef: Vec<Vec3>,
    pub region_of: Vec<u16>,
    /// Full contact plan (inter-satellite and satellite-ground).
    pub contact_plan: Vec<Contact>,
    /// Inter-satellite contacts only; the traffic the bundle layer carries.
    pub isl_plan: Vec<Contact>,
    pub access: AccessTable,
    /// Cached ECEF positions, [sat][k] at k * dt for k in 0..=n_steps.
    pub ephem: Vec<Vec<Vec3>>,
    pub n_steps: usize,
    /// Per-satellite inference-noise sigma.
    pub sigma: Vec<f64>,
    /// DP predecessor band in steps.
    pub band: (usize, usize),
}

impl Scenario {
    pub fn build(config: ScenarioConfig) -> Result<Self, ScenarioError> {
        Self::build_with_base(config, Path::new("."))
    }

    /// Build with region file paths resolved against `base_dir`.
    pub fn build_with_base(config: ScenarioConfig, base_dir: &Path) -> Result<Self, ScenarioError> {
        config.validate()?;
        let c = &config.constellation;
        let constellation = walker_constellation(
            c.planes,
            c.sats_per_plane,
            c.altitude_km,
            c.inclination_deg,
            c.raan_spread_deg,
            c.phase_offset_deg,
            c.epoch_anomaly_deg,
            c.j2_raan_drift,
        )?;

        let stations: Vec<GroundStation> = config
            .ground_stations
            .iter()
            .enumerate()
            .map(|(i, s)| GroundStation {
                station_id: i as u16,
                lat_deg: s.lat_deg,
                lon_deg: s.lon_deg,
                min_elevation_deg: s.min_elevation_deg,
                data_rate_bps: s.data_rate_bps,
            })
            .collect();

        // regions and nature runs
        let mut regions = Vec::new();
        let mut gps: Vec<GroundPoint> = Vec::new();
        let mut region_of = Vec::new();
        for (ri, rc) in config.regions.iter().enumerate() {
            let nature = if rc.source == "synthetic" {
                let seed = rc
                    .seed
                    .unwrap_or_else(|| keyed_u64(&[config.master_seed, 0x5eed, ri as u64]));
                synth_nature_run(
                    seed,
                    &SynthParams {
                        region_id: ri as u16,
                        gp_id_base: ri as u32 * 1_000_000,
                        center_lat_deg: rc.center_lat_deg,
                        center_lon_deg: rc.center_lon_deg,
                        extent_km: rc.extent_km,
                        cell_size_km: rc.cell_size_km,
                        horizon_s: config.horizon_s,
                        timestep_s: rc.timestep_s,
                        blobs: rc.blobs,
                        evolution: rc.evolution,
                        period_frames: rc.period_frames,
                    },
                )
            } else {
                load_nature_run(&base_dir.join(&rc.source))
                    .map_err(|source| ScenarioError::NatureRun { region: rc.name.clone(), source })?
            };
            let gp_start = gps.len();
            for gp in &nature.grid {
                gps.push(gp.clone());
                region_of.push(ri as u16);
            }
            regions.push(RegionData {
                name: rc.name.clone(),
                nature,
                gp_start,
                center_ecef: surface_point_ecef(rc.center_lat_deg, rc.center_lon_deg),
            });
        }
        {
            let mut seen = std::collections::HashSet::new();
            for gp in &gps {
                if !seen.insert(gp.gp_id) {
                    return Err(ScenarioError::DuplicateGpId(gp.gp_id));
                }
            }
        }
        let gp_ecef: Vec<Vec3> = gps.iter().map(GroundPoint::position_ecef).collect();

        // cached ephemerides on the scheduler's dt grid
        let n_steps = (config.horizon_s / config.dt_step_s).round() as usize;
        let mut ephem = Vec::with_capacity(constellation.len());
        for (s, el) in constellation.iter().enumerate() {
            let mut row = Vec::with_capacity(n_steps + 1);
            for k in 0..=n_steps {
                row.push(propagate_state(s as SatId, el, k as f64 * config.dt_step_s)?.position_ecef);
            }
            ephem.push(row);
        }

        let contact_plan = build_contact_plan(
            &constellation,
            &stations,
            &ContactPlanParams {
                horizon_s: config.horizon_s,
                step_s: config.isl.contact_step_s,
                grazing_margin_km: config.isl.grazing_margin_km,
                isl_data_rate_bps: config.isl.data_rate_bps,
            },
        )?;
        let isl_plan: Vec<Contact> = contact_plan
            .iter()
            .filter(|c| matches!((c.origin, c.destination), (NodeId::Sat(_), NodeId::Sat(_))))
            .cloned()
            .collect();

        let access = build_access_table(
            &constellation,
            &regions,
            config.payload.for_half_angle_deg,
            config.horizon_s,
            config.isl.contact_step_s,
        )?;

        let sigma: Vec<f64> = (0..constellation.len() as SatId)
            .map(|s| assign_satellite_noise(s, config.master_seed))
            .collect();

        let band = config
            .slew
            .model()
            .slew_band(config.dt_step_s, config.alpha_max_deg(), config.slew.k_sigma)
            .expect("validated config");

        Ok(Self {
            slew: config.slew.model(),
            constellation,
            stations,
            regions,
            gps,
            gp_ecef,
            region_of,
            contact_plan,
            isl_plan,
            access,
            ephem,
            n_steps,
            sigma,
            band,
            config,
        })
    }

    /// Same geometry under a different master seed: noise draws and
    /// synthetic nature runs are regenerated, orbits, contact plan and
    /// access windows are untouched.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut scn = self.clone();
        scn.config.master_seed = seed;
        for (ri, rc) in scn.config.regions.iter().enumerate() {
            if rc.source != "synthetic" || rc.seed.is_some() {
                continue;
            }
            let region_seed = keyed_u64(&[seed, 0x5eed, ri as u64]);
            scn.regions[ri].nature = synth_nature_run(
                region_seed,
                &SynthParams {
                    region_id: ri as u16,
                    gp_id_base: ri as u32 * 1_000_000,
                    center_lat_deg: rc.center_lat_deg,
                    center_lon_deg: rc.center_lon_deg,
                    extent_km: rc.extent_km,
                    cell_size_km: rc.cell_size_km,
                    horizon_s: scn.config.horizon_s,
                    timestep_s: rc.timestep_s,
                    blobs: rc.blobs,
                    evolution: rc.evolution,
                    period_frames: rc.period_frames,
                },
            );
        }
        scn.sigma = (0..scn.constellation.len() as SatId)
            .map(|s| assign_satellite_noise(s, seed))
            .collect();
        scn
    }

    pub fn n_sats(&self) -> usize {
        self.constellation.len()
    }

    pub fn dt(&self) -> f64 {
        self.config.dt_step_s
    }

    pub fn step_time(&self, k: usize) -> f64 {
        k as f64 * self.config.dt_step_s
    }

    /// Ground-truth value of a dense gp index at time `t`.
    pub fn absval(&self, gp: usize, t: f64) -> u16 {
        let r = &self.regions[self.region_of[gp] as usize];
        r.nature.absval(gp - r.gp_start, t)
    }

    /// Zero-value window for a gp: its region's nature-run resolution.
    pub fn zero_window(&self, gp: usize) -> f64 {
        self.regions[self.region_of[gp] as usize].nature.timestep_s
    }

    pub fn gp_in_for_at_step(&self, sat: SatId, k: usize, gp: usize) -> bool {
        in_for_vec(
            self.ephem[sat as usize][k],
            self.gp_ecef[gp],
            self.config.payload.for_half_angle_deg,
        )
    }

    /// Other satellites whose FOR also contains `gp` at step `k`.
    pub fn sats_with_overlapping_for(&self, sat: SatId, gp: usize, k: usize) -> Vec<SatId> {
        (0..self.n_sats() as SatId)
            .filter(|&s| s != sat && self.gp_in_for_at_step(s, k, gp))
            .collect()
    }

    /// Subsatellite-point ground speed, km/s.
    pub fn ground_speed_km_s(&self) -> f64 {
        let a = self.constellation[0].semimajor_axis_km;
        (MU_EARTH / a.powi(3)).sqrt() * crate::geom::EARTH_RADIUS_KM
    }
}

/// Region-center access windows per satellite, sampled at `step_s` and
/// merged. Window bounds are the first and last visible samples.
fn build_access_table(
    constellation: &[OrbitalElements],
    regions: &[RegionData],
    for_half_angle_deg: f64,
    horizon_s: f64,
    step_s: f64,
) -> Result<AccessTable, OrbitError> {
    let n_samples = (horizon_s / step_s).ceil() as usize;
    let mut windows = Vec::with_capacity(constellation.len());
    for (s, el) in constellation.iter().enumerate() {
        let mut per_region: Vec<Vec<(f64, f64)>> = vec![Vec::new(); regions.len()];
        let mut open: Vec<Option<f64>> = vec![None; regions.len()];
        for k in 0..=n_samples {
            let t = (k as f64 * step_s).min(horizon_s);
            let pos = propagate_state(s as SatId, el, t)?.position_ecef;
            for (ri, region) in regions.iter().enumerate() {
                let vis = in_for_vec(pos, region.center_ecef, for_half_angle_deg);
                match (vis, open[ri]) {
                    (true, None) => open[ri] = Some(t),
                    (false, Some(t0)) => {
                        per_region[ri].push((t0, t - step_s));
                        open[ri] = None;
                    }
                    _ => {}
                }
            }
        }
        for (ri, o) in open.iter().enumerate() {
            if let Some(t0) = o {
                per_region[ri].push((*t0, horizon_s));
            }
        }
        windows.push(per_region);
    }
    Ok(AccessTable { windows })
}
