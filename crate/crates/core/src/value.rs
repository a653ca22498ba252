//! Observation-value modeling: the ground-truth value grid ("nature run"),
//! a synthetic watershed-style generator, per-satellite inference noise, and
//! the statistical re-computation applied to already-observed ground points.
//!
//! Values are 8-bit log-scale integers in [1, 256]. A ground point observed
//! within one nature-run timestep of a prior observation is worth zero; later
//! re-observations are worth a 1/n fraction of the ground-truth value with
//! multiplicative noise.

use std::collections::HashMap;
use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_pcg::Pcg64;
use thiserror::Error;

use crate::geom::{keyed_standard_normal, keyed_unit, EARTH_RADIUS_KM};
use crate::orbit::{GpId, GroundPoint, RegionId, SatId};

#[derive(Debug, Error)]
pub enum ValueError {
    #[error("failed to read nature run: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed nature-run header: {0}")]
    MalformedHeader(String),
    #[error("malformed ground-point line {line}: {reason}")]
    MalformedGpLine { line: usize, reason: String },
    #[error("value {value} on line {line} outside [1, 256]")]
    ValueOutOfRange { line: usize, value: i64 },
    #[error("line {line} carries {got} frames, expected {expected}")]
    FrameCountMismatch { line: usize, expected: usize, got: usize },
    #[error("expected {expected} ground points, found {got}")]
    GpCountMismatch { expected: usize, got: usize },
    #[error("duplicate ground point id {0}")]
    DuplicateGpId(GpId),
}

/// Ground-truth value grid for one region over the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct NatureRun {
    pub region_id: RegionId,
    pub grid: Vec<GroundPoint>,
    pub timestep_s: f64,
    /// frames[frame][gp index] in [1, 256].
    pub frames: Vec<Vec<u16>>,
}

impl NatureRun {
    /// Frame index holding the value at simulation time `t`.
    pub fn frame_index(&self, t: f64) -> usize {
        if t <= 0.0 {
            return 0;
        }
        ((t / self.timestep_s) as usize).min(self.frames.len() - 1)
    }

    /// Ground-truth value of `gp_idx` (index into `grid`) at time `t`.
    pub fn absval(&self, gp_idx: usize, t: f64) -> u16 {
        self.frames[self.frame_index(t)][gp_idx]
    }

    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    fn validate(&self) -> Result<(), ValueError> {
        let mut seen = HashMap::new();
        for gp in &self.grid {
            if seen.insert(gp.gp_id, ()).is_some() {
                return Err(ValueError::DuplicateGpId(gp.gp_id));
            }
        }
        for frame in &self.frames {
            for &v in frame {
                if !(1..=256).contains(&v) {
                    return Err(ValueError::ValueOutOfRange { line: 0, value: v as i64 });
                }
            }
        }
        Ok(())
    }
}

/// Parse the nature-run grid text format.
///
/// Header line: `region_id n_gp n_frames timestep_s cell_size_km`, then one
/// line per ground point: `gp_id lat lon v1 .. v_nframes`, whitespace
/// delimited. The writer round-trips this format bit-exactly.
pub fn parse_nature_run(text: &str) -> Result<NatureRun, ValueError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| ValueError::MalformedHeader("empty file".into()))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 5 {
        return Err(ValueError::MalformedHeader(format!(
            "expected 5 header fields, got {}",
            tokens.len()
        )));
    }
    let bad_header = |what: &str| ValueError::MalformedHeader(what.to_string());
    let region_id: RegionId =
        tokens[0].parse().map_err(|e| bad_header(&format!("region_id: {e}")))?;
    let n_gp: usize = tokens[1].parse().map_err(|e| bad_header(&format!("n_gp: {e}")))?;
    let n_frames: usize =
        tokens[2].parse().map_err(|e| bad_header(&format!("n_frames: {e}")))?;
    let timestep_s: f64 =
        tokens[3].parse().map_err(|e| bad_header(&format!("timestep_s: {e}")))?;
    let cell_size_km: f64 =
        tokens[4].parse().map_err(|e| bad_header(&format!("cell_size_km: {e}")))?;
    if n_gp == 0 || n_frames == 0 || timestep_s <= 0.0 {
        return Err(bad_header("n_gp, n_frames and timestep_s must be positive"));
    }

    let mut grid = Vec::with_capacity(n_gp);
    let mut per_gp_values: Vec<Vec<u16>> = Vec::with_capacity(n_gp);
    for (line_no, line) in lines {
        let line_no = line_no + 1; // 1-based for messages
        let toks: Vec<&str> = line.split_whitespace().collect();
        let bad = |reason: String| ValueError::MalformedGpLine { line: line_no, reason };
        if toks.len() < 3 {
            return Err(bad("expected gp_id, lat, lon and frame values".into()));
        }
        let gp_id: GpId = toks[0].parse().map_err(|e| bad(format!("gp_id: {e}")))?;
        let lat_deg: f64 = toks[1].parse().map_err(|e| bad(format!("lat: {e}")))?;
        let lon_deg: f64 = toks[2].parse().map_err(|e| bad(format!("lon: {e}")))?;
        let values = &toks[3..];
        if values.len() != n_frames {
            return Err(ValueError::FrameCountMismatch {
                line: line_no,
                expected: n_frames,
                got: values.len(),
            });
        }
        let mut vs = Vec::with_capacity(n_frames);
        for v in values {
            let v: i64 = v
                .parse()
                .map_err(|e| ValueError::MalformedGpLine { line: line_no, reason: format!("value: {e}") })?;
            if !(1..=256).contains(&v) {
                return Err(ValueError::ValueOutOfRange { line: line_no, value: v });
            }
            vs.push(v as u16);
        }
        grid.push(GroundPoint { gp_id, region_id, lat_deg, lon_deg, cell_size_km });
        per_gp_values.push(vs);
    }
    if grid.len() != n_gp {
        return Err(ValueError::GpCountMismatch { expected: n_gp, got: grid.len() });
    }

    // transpose to frame-major
    let frames: Vec<Vec<u16>> = (0..n_frames)
        .map(|f| per_gp_values.iter().map(|vs| vs[f]).collect())
        .collect();
    let run = NatureRun { region_id, grid, timestep_s, frames };
    run.validate()?;
    Ok(run)
}

pub fn load_nature_run(path: &Path) -> Result<NatureRun, ValueError> {
    parse_nature_run(&std::fs::read_to_string(path)?)
}

pub fn nature_run_to_text(run: &NatureRun) -> String {
    let cell = run.grid.first().map_or(0.0, |gp| gp.cell_size_km);
    let mut out = format!(
        "{} {} {} {} {}\n",
        run.region_id,
        run.grid.len(),
        run.frames.len(),
        run.timestep_s,
        cell
    );
    for (i, gp) in run.grid.iter().enumerate() {
        out.push_str(&format!("{} {} {}", gp.gp_id, gp.lat_deg, gp.lon_deg));
        for frame in &run.frames {
            out.push_str(&format!(" {}", frame[i]));
        }
        out.push('\n');
    }
    out
}

pub fn save_nature_run(path: &Path, run: &NatureRun) -> Result<(), ValueError> {
    Ok(std::fs::write(path, nature_run_to_text(run))?)
}

/// Parameters for the synthetic watershed-style nature run.
#[derive(Debug, Clone)]
pub struct SynthParams {
    pub region_id: RegionId,
    pub gp_id_base: GpId,
    pub center_lat_deg: f64,
    pub center_lon_deg: f64,
    pub extent_km: f64,
    pub cell_size_km: f64,
    pub horizon_s: f64,
    pub timestep_s: f64,
    /// Number of constant-value watershed patches.
    pub blobs: usize,
    /// Temporal evolution amplitude on the log scale, in [0, 1].
    pub evolution: f64,
    /// Oscillation period of patch values, in frames.
    pub period_frames: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            region_id: 0,
            gp_id_base: 0,
            center_lat_deg: 0.0,
            center_lon_deg: 0.0,
            extent_km: 80.0,
            cell_size_km: 4.0,
            horizon_s: 21_600.0,
            timestep_s: 900.0,
            blobs: 6,
            evolution: 0.25,
            period_frames: 8.0,
        }
    }
}

/// Deterministic synthetic nature run: contiguous constant-value watershed
/// patches (nearest-site cells) whose log-scale levels evolve sinusoidally.
///
/// With two or more patches the lowest and highest patches are pinned near
/// the ends of the [1, 256] scale, so every frame spans most of the range.
pub fn synth_nature_run(seed: u64, params: &SynthParams) -> NatureRun {
    let mut rng = Pcg64::seed_from_u64(seed);
    let n_side = (params.extent_km / params.cell_size_km).round().max(1.0) as usize;
    let n_frames = (params.horizon_s / params.timestep_s).ceil().max(1.0) as usize;
    let k = params.blobs.max(1);

    // patch sites in cell coordinates
    let sites: Vec<(f64, f64)> = (0..k)
        .map(|_| (rng.random::<f64>() * n_side as f64, rng.random::<f64>() * n_side as f64))
        .collect();

    // stratified base levels; edges pinned and static when k >= 2
    let mut levels = Vec::with_capacity(k);
    for b in 0..k {
        let (base, amp) = if k == 1 {
            (0.5, params.evolution)
        } else if b == 0 {
            (0.02, 0.0)
        } else if b == k - 1 {
            (0.98, 0.0)
        } else {
            let base = (b as f64 + 0.5) / k as f64;
            let amp = params.evolution * (0.5 + 0.5 * rng.random::<f64>());
            (base, amp)
        };
        let phase = rng.random::<f64>();
        levels.push((base, amp, phase));
    }

    // grid of cell centers around the region center
    let lat0 = params.center_lat_deg.to_radians();
    let mut grid = Vec::with_capacity(n_side * n_side);
    let mut patch_of = Vec::with_capacity(n_side * n_side);
    for row in 0..n_side {
        for col in 0..n_side {
            let dy = (row as f64 + 0.5 - n_side as f64 / 2.0) * params.cell_size_km;
            let dx = (col as f64 + 0.5 - n_side as f64 / 2.0) * params.cell_size_km;
            let lat = params.center_lat_deg + (dy / EARTH_RADIUS_KM).to_degrees();
            let lon = params.center_lon_deg + (dx / (EARTH_RADIUS_KM * lat0.cos())).to_degrees();
            grid.push(GroundPoint {
                gp_id: params.gp_id_base + (row * n_side + col) as GpId,
                region_id: params.region_id,
                lat_deg: lat,
                lon_deg: lon,
                cell_size_km: params.cell_size_km,
            });
            // nearest site wins; ties resolved by site index
            let (cx, cy) = (col as f64 + 0.5, row as f64 + 0.5);
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (s, &(sx, sy)) in sites.iter().enumerate() {
                let d = (sx - cx) * (sx - cx) + (sy - cy) * (sy - cy);
                if d < best_d {
                    best_d = d;
                    best = s;
                }
            }
            patch_of.push(best);
        }
    }

    let frames: Vec<Vec<u16>> = (0..n_frames)
        .map(|f| {
            let patch_values: Vec<u16> = levels
                .iter()
                .map(|&(base, amp, phase)| {
                    let level = base
                        + amp
                            * (std::f64::consts::TAU
                                * (f as f64 / params.period_frames + phase))
                                .sin();
                    let level = level.clamp(0.0, 1.0);
                    (2f64.powf(8.0 * level)).round().clamp(1.0, 256.0) as u16
                })
                .collect();
            patch_of.iter().map(|&p| patch_values[p]).collect()
        })
        .collect();

    NatureRun { region_id: params.region_id, grid, timestep_s: params.timestep_s, frames }
}

/// Record of who observed a ground point and when.
#[derive(Debug, Clone, Default)]
pub struct ObservationLog {
    /// Per gp: (t, sat) tuples sorted by (t, sat), deduplicated.
    entries: HashMap<GpId, Vec<(f64, SatId)>>,
}

impl ObservationLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record an observation; idempotent on exact (gp, t, sat) duplicates.
    pub fn record(&mut self, gp: GpId, sat: SatId, t: f64) {
        let v = self.entries.entry(gp).or_default();
        let key = (t, sat);
        let idx = v.partition_point(|&(vt, vs)| (vt, vs) < key);
        if v.get(idx).is_none_or(|&e| e != key) {
            v.insert(idx, key);
        }
    }

    pub fn merge(&mut self, other: &ObservationLog) {
        for (&gp, obs) in &other.entries {
            for &(t, sat) in obs {
                self.record(gp, sat, t);
            }
        }
    }

    /// Number of observations of `gp` strictly before `t`.
    pub fn n_seen_before(&self, gp: GpId, t: f64) -> u32 {
        self.entries
            .get(&gp)
            .map_or(0, |v| v.partition_point(|&(vt, _)| vt < t) as u32)
    }

    /// Most recent observation time of `gp` strictly before `t`.
    pub fn last_seen_before(&self, gp: GpId, t: f64) -> Option<f64> {
        let v = self.entries.get(&gp)?;
        let idx = v.partition_point(|&(vt, _)| vt < t);
        (idx > 0).then(|| v[idx - 1].0)
    }

    pub fn n_seen_total(&self, gp: GpId) -> u32 {
        self.entries.get(&gp).map_or(0, |v| v.len() as u32)
    }

    /// Informative observations of `gp` strictly before `t`: the first
    /// observation is informative, and each later one is informative iff it
    /// falls at least `window_s` after the previous informative one.
    /// Returns their count and the time of the latest.
    pub fn informative_before(&self, gp: GpId, window_s: f64, t: f64) -> (u32, Option<f64>) {
        let Some(v) = self.entries.get(&gp) else { return (0, None) };
        let mut n = 0u32;
        let mut last: Option<f64> = None;
        for &(t_obs, _) in v.iter().take_while(|&&(vt, _)| vt < t) {
            if last.is_none_or(|l| t_obs - l >= window_s) {
                n += 1;
                last = Some(t_obs);
            }
        }
        (n, last)
    }

    pub fn observed_gps(&self) -> impl Iterator<Item = GpId> + '_ {
        self.entries.keys().copied()
    }

    pub fn observers(&self, gp: GpId) -> &[(f64, SatId)] {
        self.entries.get(&gp).map_or(&[], |v| v.as_slice())
    }
}

/// Which observation count divides the re-computed value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountRule {
    /// Divide by observations strictly before the evaluation time (default).
    NSeen,
    /// Divide by that count plus one (the prospective observation itself).
    NSeenPlusOne,
}

/// Value re-computation mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayMode {
    /// 1/n count decay with the zero-value window (default).
    Count,
    /// Decay linear in distance to the nearest observed ground point.
    Distance,
}

#[derive(Debug, Clone, Copy)]
pub struct ValueParams {
    pub count_rule: CountRule,
    pub mode: DecayMode,
    pub distance_ref_km: f64,
}

impl Default for ValueParams {
    fn default() -> Self {
        Self { count_rule: CountRule::NSeen, mode: DecayMode::Count, distance_ref_km: 16.0 }
    }
}

/// One satellite's view of the world: merged observation log, per-region
/// knowledge timestamps, and its private inference-noise level.
#[derive(Debug, Clone)]
pub struct KnowledgeState {
    pub owner: SatId,
    pub log: ObservationLog,
    /// Latest time at which each region's value state is known (tSrc).
    pub region_src_t: Vec<f64>,
    pub sigma: f64,
    pub run_seed: u64,
}

impl KnowledgeState {
    pub fn new(owner: SatId, n_regions: usize, sigma: f64, run_seed: u64) -> Self {
        Self { owner, log: ObservationLog::new(), region_src_t: vec![0.0; n_regions], sigma, run_seed }
    }

    /// Multiplicative inference noise for (owner, gp, t).
    pub fn noise_factor(&self, gp: GpId, t: f64) -> f64 {
        noise_factor(self.run_seed, self.owner, self.sigma, gp, t)
    }

    pub fn note_region_source(&mut self, region: RegionId, t_src: f64) {
        let slot = &mut self.region_src_t[region as usize];
        if t_src > *slot {
            *slot = t_src;
        }
    }
}

/// Per-satellite noise standard deviation: deterministic uniform draw in
/// [0.02, 0.08] keyed on (sat, run seed).
pub fn assign_satellite_noise(sat: SatId, run_seed: u64) -> f64 {
    0.02 + 0.06 * keyed_unit(&[run_seed, 0x51f3, sat as u64])
}

/// Multiplicative inference noise: 1 + eps with eps ~ N(0, sigma^2), drawn
/// from a counter-keyed stream on (seed, owner, gp, t). Order-independent
/// and reproducible.
pub fn noise_factor(run_seed: u64, owner: SatId, sigma: f64, gp: GpId, t: f64) -> f64 {
    if sigma == 0.0 {
        return 1.0;
    }
    1.0 + sigma * keyed_standard_normal(&[run_seed, 0x4e01, owner as u64, gp as u64, t.to_bits()])
}

/// Count/zero-window decay applied to a raw value. `zero_window_s` is the
/// nature run's time resolution; the window is measured from the latest
/// informative observation, and n counts informative observations, so a
/// zero-valued duplicate neither extends the window nor deepens the decay.
pub fn decayed_value(
    raw: f64,
    gp: GpId,
    t: f64,
    log: &ObservationLog,
    zero_window_s: f64,
    count_rule: CountRule,
) -> f64 {
    let (n, last) = log.informative_before(gp, zero_window_s, t);
    decay_from_history(raw, t, n, last, zero_window_s, count_rule)
}

/// The decay rule applied to a precomputed informative history.
pub fn decay_from_history(
    raw: f64,
    t: f64,
    n_informative: u32,
    last_informative: Option<f64>,
    zero_window_s: f64,
    count_rule: CountRule,
) -> f64 {
    if let Some(last) = last_informative {
        if t - last < zero_window_s {
            return 0.0;
        }
    }
    let divisor = match count_rule {
        CountRule::NSeen => n_informative.max(1),
        CountRule::NSeenPlusOne => n_informative + 1,
    };
    raw / divisor as f64
}

/// Statistical value re-computation for observing `gp_idx` at `t` given the
/// observation history and the owner's inference noise. Clamped to >= 0.
pub fn recompute_value(
    gp_idx: usize,
    t: f64,
    nature: &NatureRun,
    log: &ObservationLog,
    know: &KnowledgeState,
    params: &ValueParams,
) -> f64 {
    let gp = nature.grid[gp_idx].gp_id;
    let raw = nature.absval(gp_idx, t) as f64;
    let base = decayed_value(raw, gp, t, log, nature.timestep_s, params.count_rule);
    (base * know.noise_factor(gp, t)).max(0.0)
}

/// Distance-decay alternative: absval scaled by min(1, d_nearest / d_ref)
/// where d_nearest is the ground distance to the closest observed gp.
pub fn distance_decay_value(
    gp_idx: usize,
    t: f64,
    nature: &NatureRun,
    log: &ObservationLog,
    distance_ref_km: f64,
) -> f64 {
    let raw = nature.absval(gp_idx, t) as f64;
    let here = &nature.grid[gp_idx];
    let mut d_nearest = f64::INFINITY;
    for (idx, gp) in nature.grid.iter().enumerate() {
        if log.n_seen_before(gp.gp_id, t) > 0 {
            let d = crate::geom::ground_distance_km(
                here.lat_deg,
                here.lon_deg,
                nature.grid[idx].lat_deg,
                nature.grid[idx].lon_deg,
            );
            d_nearest = d_nearest.min(d);
        }
    }
    if d_nearest.is_infinite() {
        return raw;
    }
    raw * (d_nearest / distance_ref_km).min(1.0)
}
