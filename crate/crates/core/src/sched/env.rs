//! Scenario-backed DP environment: turns one satellite's access intervals,
//! knowledge state and the slew model into sweep instances, and assembles the
//! per-call schedule.
//!
//! One sweep runs per merged access interval; the band rule cannot link nodes
//! across gaps longer than the worst-case slew, and access gaps are minutes,
//! so intervals decompose cleanly. Fragments are concatenated with explicit
//! cross-interval feasibility checks and shared in-call observation history.

use std::collections::HashMap;

use super::dp::{sweep, DpEnv, DpStats};
use super::{PathNode, SchedulePath};
use crate::orbit::SatId;
use crate::scenario::Scenario;
use crate::value::{decay_from_history, noise_factor, CountRule, DecayMode, ObservationLog};

/// A satellite-independent view of what the planner knows at tPlan.
#[derive(Debug, Clone, Copy)]
pub struct KnowledgeView<'a> {
    pub log: &'a ObservationLog,
    /// Latest time each region's value state is known (tSrc per region).
    pub region_src_t: &'a [f64],
    pub sigma: f64,
    pub owner: SatId,
    pub run_seed: u64,
}

impl<'a> KnowledgeView<'a> {
    pub fn of(know: &'a crate::value::KnowledgeState) -> Self {
        Self {
            log: &know.log,
            region_src_t: &know.region_src_t,
            sigma: know.sigma,
            owner: know.owner,
            run_seed: know.run_seed,
        }
    }
}

/// Outcome of one dp_schedule call.
#[derive(Debug, Clone, Default)]
pub struct DpOutcome {
    pub path: SchedulePath,
    /// Assumed (planning-time) value of each path node, undiscounted.
    pub node_values: Vec<f64>,
    pub stats: DpStats,
    /// Access intervals swept.
    pub windows: usize,
    /// Overlap sets truncated to the two earliest-access satellites.
    pub overlap_truncations: u64,
}

/// Access interval in global step indices with the regions it covers.
#[derive(Debug, Clone, PartialEq)]
struct WindowSpec {
    k0: usize,
    k1: usize,
    regions: Vec<usize>,
}

/// Intersect each region's access windows with [t_start, t_end), pad by the
/// region-crossing time, convert to step indices and merge overlaps.
fn plan_windows(scn: &Scenario, sat: SatId, t_start: f64, t_end: f64) -> Vec<WindowSpec> {
    let dt = scn.dt();
    let speed = scn.ground_speed_km_s();
    let mut raw: Vec<WindowSpec> = Vec::new();
    for (ri, rc) in scn.config.regions.iter().enumerate() {
        let pad = 0.75 * rc.extent_km / speed + dt;
        for &(w0, w1) in &scn.access.windows[sat as usize][ri] {
            let lo = (w0 - pad).max(t_start);
            let hi = (w1 + pad).min(t_end - 1e-9);
            if lo > hi {
                continue;
            }
            let k0 = (lo / dt).ceil() as usize;
            let k1 = ((hi / dt).floor() as usize).min(scn.n_steps);
            if k0 > k1 {
                continue;
            }
            raw.push(WindowSpec { k0, k1, regions: vec![ri] });
        }
    }
    raw.sort_by(|a, b| a.k0.cmp(&b.k0).then(a.k1.cmp(&b.k1)));
    let mut merged: Vec<WindowSpec> = Vec::new();
    for w in raw {
        match merged.last_mut() {
            Some(last) if w.k0 <= last.k1 + 1 => {
                last.k1 = last.k1.max(w.k1);
                for r in w.regions {
                    if !last.regions.contains(&r) {
                        last.regions.push(r);
                    }
                }
            }
            _ => merged.push(w),
        }
    }
    for w in &mut merged {
        w.regions.sort_unstable();
    }
    merged
}

struct WindowEnv<'a> {
    scn: &'a Scenario,
    sat: SatId,
    k0: usize,
    nodes: Vec<Vec<u32>>,
    /// Search values (overlap-discounted raw), parallel to `nodes`.
    raw_search: Vec<Vec<f64>>,
    /// Reporting values (undiscounted raw), parallel to `nodes`.
    raw_report: Vec<Vec<f64>>,
    /// In distance mode: min(1, d_nearest / d_ref) per node, else 1.
    dist_factor: Vec<Vec<f64>>,
    /// Informative history of the merged (knowledge + in-call) log per gp.
    know_hist: HashMap<u32, (u32, Option<f64>)>,
    band: (usize, usize),
    anchor: Option<(u32, f64)>,
    k_sigma: f64,
    count_rule: CountRule,
    mode: DecayMode,
    /// Any slew completes within this gap regardless of angle.
    auto_feasible_gap: f64,
}

impl WindowEnv<'_> {
    fn pos_of(&self, k: usize, gp: u32) -> usize {
        self.nodes[k].binary_search(&gp).expect("gp observable at step")
    }

    fn slew_angle(&self, sat_k: usize, gp_a: u32, gp_b: u32) -> f64 {
        let sat_pos = self.scn.ephem[self.sat as usize][sat_k];
        let u = self.scn.gp_ecef[gp_a as usize] - sat_pos;
        let v = self.scn.gp_ecef[gp_b as usize] - sat_pos;
        u.angle_deg(v)
    }

    fn value_from(&self, raw: f64, gp: u32, k: usize, path_obs: &[f64]) -> f64 {
        let t = self.step_time(k);
        match self.mode {
            DecayMode::Distance => {
                // a repeated in-path observation sits at distance zero
                if !path_obs.is_empty() {
                    return 0.0;
                }
                raw * self.dist_factor[k][self.pos_of(k, gp)]
            }
            DecayMode::Count => {
                let (mut n, mut last) = *self.know_hist.get(&gp).unwrap_or(&(0, None));
                let w = self.scn.zero_window(gp as usize);
                for &t_obs in path_obs {
                    if last.is_none_or(|l| t_obs - l >= w) {
                        n += 1;
                        last = Some(t_obs);
                    }
                }
                decay_from_history(raw, t, n, last, w, self.count_rule)
            }
        }
    }

    /// Reporting-semantics value of a node given prior in-path observations.
    fn report_value(&self, gp: u32, k: usize, path_obs: &[f64]) -> f64 {
        self.value_from(self.raw_report[k][self.pos_of(k, gp)], gp, k, path_obs)
    }
}

impl DpEnv for WindowEnv<'_> {
    fn n_steps(&self) -> usize {
        self.nodes.len()
    }

    fn step_time(&self, k: usize) -> f64 {
        self.scn.step_time(self.k0 + k)
    }

    fn nodes_at(&self, k: usize) -> &[u32] {
        &self.nodes[k]
    }

    fn node_value(&self, gp: u32, k: usize, path_obs: &[f64]) -> f64 {
        self.value_from(self.raw_search[k][self.pos_of(k, gp)], gp, k, path_obs)
    }

    fn slew_feasible(&self, gp_from: u32, k_from: usize, gp_to: u32, k_to: usize) -> bool {
        let gap = (k_to - k_from) as f64 * self.scn.dt();
        if gap >= self.auto_feasible_gap {
            return true;
        }
        // angle evaluated at the predecessor's time
        let alpha = self.slew_angle(self.k0 + k_from, gp_from, gp_to);
        self.scn.slew.slew_time_s(alpha, self.k_sigma).expect("angle in [0,180]") <= gap + 1e-9
    }

    fn start_feasible(&self, gp: u32, k: usize) -> bool {
        let Some((anchor_gp, anchor_t)) = self.anchor else { return true };
        let gap = self.step_time(k) - anchor_t;
        if gap >= self.auto_feasible_gap {
            return true;
        }
        if gap <= 0.0 {
            return false;
        }
        let anchor_k = (anchor_t / self.scn.dt()).round() as usize;
        let anchor_k = anchor_k.min(self.scn.n_steps);
        let alpha = self.slew_angle(anchor_k, anchor_gp, gp);
        self.scn.slew.slew_time_s(alpha, self.k_sigma).expect("angle in [0,180]") <= gap + 1e-9
    }

    fn band(&self) -> (usize, usize) {
        self.band
    }
}

/// Merge-scan the informative history of `gp` over the knowledge log plus the
/// in-call extra log.
fn merged_informative(
    log: &ObservationLog,
    extra: &ObservationLog,
    gp_id: crate::orbit::GpId,
    window: f64,
) -> (u32, Option<f64>) {
    let a = log.observers(gp_id);
    let b = extra.observers(gp_id);
    let (mut i, mut j) = (0, 0);
    let mut n = 0u32;
    let mut last: Option<f64> = None;
    while i < a.len() || j < b.len() {
        let t = if j >= b.len() || (i < a.len() && a[i].0 <= b[j].0) {
            let t = a[i].0;
            i += 1;
            t
        } else {
            let t = b[j].0;
            j += 1;
            t
        };
        if last.is_none_or(|l| t - l >= window) {
            n += 1;
            last = Some(t);
        }
    }
    (n, last)
}

fn build_window_env<'a>(
    scn: &'a Scenario,
    sat: SatId,
    view: &KnowledgeView<'_>,
    extra: &ObservationLog,
    spec: &WindowSpec,
    anchor: Option<(u32, f64)>,
    truncations: &mut u64,
) -> WindowEnv<'a> {
    let n = spec.k1 - spec.k0 + 1;
    let half_angle = scn.config.payload.for_half_angle_deg;
    let mut nodes: Vec<Vec<u32>> = Vec::with_capacity(n);
    let mut raw_report: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut raw_search: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut dist_factor: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut know_hist: HashMap<u32, (u32, Option<f64>)> = HashMap::new();

    // observed gp positions for distance decay, fixed over the window
    let observed_ecef: Vec<crate::geom::Vec3> = if scn.config.value.mode == DecayMode::Distance {
        scn.gps
            .iter()
            .enumerate()
            .filter(|(_, gp)| {
                view.log.n_seen_total(gp.gp_id) > 0 || extra.n_seen_total(gp.gp_id) > 0
            })
            .map(|(i, _)| scn.gp_ecef[i])
            .collect()
    } else {
        Vec::new()
    };

    for k in 0..n {
        let gk = spec.k0 + k;
        let t = scn.step_time(gk);
        let sat_pos = scn.ephem[sat as usize][gk];

        let mut step_nodes: Vec<u32> = Vec::new();
        for &ri in &spec.regions {
            let region = &scn.regions[ri];
            let end = region.gp_start + region.nature.grid.len();
            for gp in region.gp_start..end {
                if crate::orbit::in_for_vec(sat_pos, scn.gp_ecef[gp], half_angle) {
                    step_nodes.push(gp as u32);
                }
            }
        }

        let mut rep = Vec::with_capacity(step_nodes.len());
        let mut dist = Vec::with_capacity(step_nodes.len());
        for &gp in &step_nodes {
            let gpi = gp as usize;
            let ri = scn.region_of[gpi] as usize;
            let region = &scn.regions[ri];
            let t_eff = view.region_src_t[ri].min(t);
            let absval_est = region.nature.absval(gpi - region.gp_start, t_eff) as f64;
            let noise = noise_factor(view.run_seed, view.owner, view.sigma, scn.gps[gpi].gp_id, t);
            rep.push((absval_est * noise).max(0.0));
            know_hist.entry(gp).or_insert_with(|| {
                merged_informative(view.log, extra, scn.gps[gpi].gp_id, scn.zero_window(gpi))
            });
            if scn.config.value.mode == DecayMode::Distance {
                let here = scn.gp_ecef[gpi];
                let d = observed_ecef
                    .iter()
                    .map(|&o| crate::geom::EARTH_RADIUS_KM * here.angle_deg(o).to_radians())
                    .fold(f64::INFINITY, f64::min);
                dist.push(if d.is_finite() {
                    (d / scn.config.value.distance_ref_km).min(1.0)
                } else {
                    1.0
                });
            } else {
                dist.push(1.0);
            }
        }

        nodes.push(step_nodes);
        raw_report.push(rep);
        dist_factor.push(dist);
    }

    // overlapping-FOR joint evaluation: discount nodes another satellite is
    // better placed to take (sum aggregation over the 2-permutations)
    for k in 0..n {
        let gk = spec.k0 + k;
        let t = scn.step_time(gk);
        let mut search = raw_report[k].clone();
        if scn.config.value.mode == DecayMode::Count && !nodes[k].is_empty() {
            // candidate overlapping satellites: access to a window region now
            let mut others: Vec<(f64, SatId)> = (0..scn.n_sats() as SatId)
                .filter(|&s| s != sat)
                .filter_map(|s| {
                    spec.regions
                        .iter()
                        .filter_map(|&ri| scn.access.next_access(s, ri as u16, t))
                        .find(|&na| na <= t)
                        .map(|na| (na, s))
                })
                .collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if others.len() > 2 {
                *truncations += 1;
                others.truncate(2);
            }
            for &(_, other) in &others {
                apply_overlap_discount(
                    scn,
                    other,
                    view,
                    &nodes[k],
                    &raw_report[k],
                    &know_hist,
                    gk,
                    t,
                    &mut search,
                );
            }
        }
        raw_search.push(search);
    }

    let auto_feasible_gap =
        scn.slew.slew_time_s(180.0, scn.config.slew.k_sigma).expect("valid model");

    WindowEnv {
        scn,
        sat,
        k0: spec.k0,
        nodes,
        raw_search,
        raw_report,
        dist_factor,
        know_hist,
        band: scn.band,
        anchor,
        k_sigma: scn.config.slew.k_sigma,
        count_rule: scn.config.value.count_rule,
        mode: scn.config.value.mode,
        auto_feasible_gap,
    }
}

/// Zero out this satellite's search value wherever the other-first
/// permutation carries more joint value.
#[allow(clippy::too_many_arguments)]
fn apply_overlap_discount(
    scn: &Scenario,
    other: SatId,
    view: &KnowledgeView<'_>,
    step_nodes: &[u32],
    raw_report: &[f64],
    know_hist: &HashMap<u32, (u32, Option<f64>)>,
    gk: usize,
    t: f64,
    search: &mut [f64],
) {
    // decayed solo values for both satellites over this step's nodes
    let decayed = |raw: f64, gp: u32| {
        let (n, last) = *know_hist.get(&gp).unwrap_or(&(0, None));
        decay_from_history(
            raw,
            t,
            n,
            last,
            scn.zero_window(gp as usize),
            scn.config.value.count_rule,
        )
    };
    let mut self_val = Vec::with_capacity(step_nodes.len());
    let mut other_val = Vec::with_capacity(step_nodes.len());
    let mut any_shared = false;
    for (i, &gp) in step_nodes.iter().enumerate() {
        self_val.push(decayed(raw_report[i], gp));
        if scn.gp_in_for_at_step(other, gk, gp as usize) {
            any_shared = true;
            let gpi = gp as usize;
            let ri = scn.region_of[gpi] as usize;
            let region = &scn.regions[ri];
            let t_eff = view.region_src_t[ri].min(t);
            // the other's inference is unknowable onboard: noiseless estimate
            let raw_other = region.nature.absval(gpi - region.gp_start, t_eff) as f64;
            other_val.push(decayed(raw_other, gp));
        } else {
            other_val.push(f64::NEG_INFINITY);
        }
    }
    if !any_shared {
        return;
    }
    // top-2 per side for the exclude-this-gp alternative maxima
    let top2 = |vals: &[f64]| {
        let (mut b1, mut i1, mut b2) = (f64::NEG_INFINITY, usize::MAX, f64::NEG_INFINITY);
        for (i, &v) in vals.iter().enumerate() {
            if v > b1 {
                b2 = b1;
                b1 = v;
                i1 = i;
            } else if v > b2 {
                b2 = v;
            }
        }
        (b1, i1, b2)
    };
    let (s1, si, s2) = top2(&self_val);
    let (o1, oi, o2) = top2(&other_val);
    for i in 0..step_nodes.len() {
        if other_val[i] == f64::NEG_INFINITY {
            continue;
        }
        let alt_self = (if i == si { s2 } else { s1 }).max(0.0);
        let alt_other = (if i == oi { o2 } else { o1 }).max(0.0);
        let joint_self_first = self_val[i] + alt_other;
        let joint_other_first = other_val[i] + alt_self;
        if joint_other_first > joint_self_first {
            search[i] = 0.0;
        }
    }
}

/// Plan one satellite over [t_start, t_end): one sweep per merged access
/// interval, fragments concatenated in time order.
pub fn dp_schedule(
    scn: &Scenario,
    sat: SatId,
    view: &KnowledgeView<'_>,
    t_start: f64,
    t_end: f64,
    anchor: Option<(u32, f64)>,
) -> DpOutcome {
    let mut out =
        DpOutcome { path: SchedulePath { sat, ..Default::default() }, ..Default::default() };
    let mut extra = ObservationLog::new();
    let mut anchor = anchor;
    for spec in plan_windows(scn, sat, t_start, t_end) {
        let env =
            build_window_env(scn, sat, view, &extra, &spec, anchor, &mut out.overlap_truncations);
        let result = sweep(&env);
        out.stats.nodes_expanded += result.stats.nodes_expanded;
        out.stats.candidates_popped += result.stats.candidates_popped;
        out.windows += 1;

        // reporting values per node, honoring in-fragment repeat history
        let mut frag_obs: HashMap<u32, Vec<f64>> = HashMap::new();
        for &(gp, k) in &result.path {
            let t = env.step_time(k);
            let obs = frag_obs.entry(gp).or_default();
            let v = env.report_value(gp, k, obs);
            obs.push(t);
            out.node_values.push(v);
            out.path.nodes.push(PathNode { gp, gp_id: scn.gps[gp as usize].gp_id, t });
            extra.record(scn.gps[gp as usize].gp_id, sat, t);
        }
        if let Some(last) = out.path.nodes.last() {
            anchor = Some((last.gp, last.t));
        }
    }
    out.path.cumulative_value = out.node_values.iter().sum();
    out
}

/// Re-verify an emitted schedule against the slew model: strictly increasing
/// times and every consecutive pair reachable within its gap. Independent of
/// the sweep's own bookkeeping.
pub fn verify_schedule_feasible(
    scn: &Scenario,
    sat: SatId,
    nodes: &[PathNode],
) -> Result<(), String> {
    for w in nodes.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if b.t <= a.t {
            return Err(format!("non-increasing times {} -> {}", a.t, b.t));
        }
        let gap = b.t - a.t;
        let k_a = ((a.t / scn.dt()).round() as usize).min(scn.n_steps);
        let sat_pos = scn.ephem[sat as usize][k_a];
        let u = scn.gp_ecef[a.gp as usize] - sat_pos;
        let v = scn.gp_ecef[b.gp as usize] - sat_pos;
        let alpha = u.angle_deg(v);
        let need =
            scn.slew.slew_time_s(alpha, scn.config.slew.k_sigma).map_err(|e| e.to_string())?;
        if need > gap + 1e-6 {
            return Err(format!(
                "slew of {alpha:.2} deg needs {need:.3} s but gap is {gap:.3} s at t={}",
                a.t
            ));
        }
    }
    Ok(())
}

/// Spec-level wrapper: other satellites whose FOR contains `gp` at time `t`.
pub fn sats_with_overlapping_for(scn: &Scenario, sat: SatId, gp: usize, t: f64) -> Vec<SatId> {
    let k = ((t / scn.dt()).round() as usize).min(scn.n_steps);
    scn.sats_with_overlapping_for(sat, gp, k)
}
