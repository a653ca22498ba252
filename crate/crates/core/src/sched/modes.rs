//! The three run modes.
//!
//! Decentralized: every satellite replans onboard each reschedule period
//! using knowledge merged from its own observations and DTN-delivered
//! bundles; executing an observation broadcasts one bundle per prioritized
//! recipient.
//!
//! Centralized: a single ground knowledge state syncs with each satellite
//! only at station contacts. At a contact the satellite's executed
//! observations are downlinked, the satellite is rescheduled with full
//! knowledge of every uplinked schedule, and the new plan takes effect
//! immediately (zero ground processing time). Value knowledge lags by the
//! collection-uplink-reschedule-downlink cycle.
//!
//! Non-agile baseline: nadir push-broom only; a cell is observed when it
//! enters the footprint disc under the ground track. No slewing, no
//! scheduler, no bundles.
//!
//! Recorded value is always scored against the ground-truth nature run and
//! the global executed-observation history; assumed value is whatever the
//! planner believed at scheduling time. Their divergence is a run metric.

use std::time::Instant;

use super::env::{dp_schedule, KnowledgeView};
use super::PathNode;
use crate::dtn::{latency_stats, Bundle, BundlePayload, DeliveryOutcome, DeliveryRecord, DtnSim};
use crate::geom::Vec3;
use crate::metrics::{RunMetrics, RunTiming};
use crate::orbit::{bundle_recipients, propagate_state, NodeId, SatId, MAX_PRIORITY};
use crate::scenario::Scenario;
use crate::value::{decay_from_history, DecayMode, KnowledgeState, ObservationLog};

/// One executed observation with its planning-time and ground-truth values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExecutedObs {
    pub sat: SatId,
    pub gp: u32,
    pub t: f64,
    pub assumed: f64,
    pub recorded: f64,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub metrics: RunMetrics,
    pub timing: RunTiming,
    pub executed: Vec<ExecutedObs>,
    /// Executed observation nodes per satellite, in time order.
    pub schedules: Vec<Vec<PathNode>>,
    pub delivery: Vec<DeliveryRecord>,
}

/// Ground-truth scorer: recorded value of each observation against the
/// global executed history, noiseless.
struct TruthScorer {
    log: ObservationLog,
    /// Dense gp indices observed at least once (distance mode).
    observed: Vec<bool>,
}

impl TruthScorer {
    fn new(scn: &Scenario) -> Self {
        Self { log: ObservationLog::new(), observed: vec![false; scn.gps.len()] }
    }

    fn score(&self, scn: &Scenario, gp: u32, t: f64) -> f64 {
        let gpi = gp as usize;
        let raw = scn.absval(gpi, t) as f64;
        match scn.config.value.mode {
            DecayMode::Count => {
                let w = scn.zero_window(gpi);
                let (n, last) = self.log.informative_before(scn.gps[gpi].gp_id, w, t);
                decay_from_history(raw, t, n, last, w, scn.config.value.count_rule)
            }
            DecayMode::Distance => {
                let here = scn.gp_ecef[gpi];
                let d = self
                    .observed
                    .iter()
                    .enumerate()
                    .filter(|&(_, &o)| o)
                    .map(|(i, _)| {
                        crate::geom::EARTH_RADIUS_KM
                            * here.angle_deg(scn.gp_ecef[i]).to_radians()
                    })
                    .fold(f64::INFINITY, f64::min);
                if d.is_finite() {
                    raw * (d / scn.config.value.distance_ref_km).min(1.0)
                } else {
                    raw
                }
            }
        }
    }

    fn record(&mut self, scn: &Scenario, gp: u32, sat: SatId, t: f64) {
        self.log.record(scn.gps[gp as usize].gp_id, sat, t);
        self.observed[gp as usize] = true;
    }

    fn distinct_observed(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }
}

#[allow(clippy::too_many_arguments)]
fn assemble_metrics(
    mode: &str,
    scn: &Scenario,
    truth: &TruthScorer,
    executed: &[ExecutedObs],
    records: &[DeliveryRecord],
    bundles_created: u64,
    scheduler_calls: u64,
    dp_nodes_expanded: u64,
) -> RunMetrics {
    let cumulative: f64 = executed.iter().map(|e| e.recorded).sum();
    let gap: f64 = executed.iter().map(|e| (e.assumed - e.recorded).abs()).sum();
    let divergence_pct = if cumulative > 0.0 { 100.0 * gap / cumulative } else { 0.0 };
    let delivered = records.iter().filter(|r| r.outcome == DeliveryOutcome::Delivered).count();
    let dropped = records.iter().filter(|r| r.outcome == DeliveryOutcome::DroppedTtl).count();
    let unroutable = records.iter().filter(|r| r.outcome == DeliveryOutcome::Unroutable).count();
    let mut latency = latency_stats(records);
    latency.resize(MAX_PRIORITY as usize, Default::default());
    RunMetrics {
        mode: mode.to_string(),
        seed: scn.config.master_seed,
        config_digest: scn.config.digest(),
        cumulative_recorded_value: cumulative,
        pct_gp_observed: 100.0 * truth.distinct_observed() as f64 / scn.gps.len() as f64,
        divergence_pct,
        observations: executed.len() as u64,
        scheduler_calls,
        dp_nodes_expanded,
        bundles_created,
        bundles_delivered: delivered as u64,
        bundles_dropped_ttl: dropped as u64,
        bundles_unroutable: unroutable as u64,
        latency,
    }
}

/// Execute one observation: score it, log it everywhere, remember it.
#[allow(clippy::too_many_arguments)]
fn execute_obs(
    scn: &Scenario,
    truth: &mut TruthScorer,
    executed: &mut Vec<ExecutedObs>,
    schedules: &mut [Vec<PathNode>],
    sat: SatId,
    gp: u32,
    t: f64,
    assumed: f64,
) {
    let recorded = truth.score(scn, gp, t);
    truth.record(scn, gp, sat, t);
    executed.push(ExecutedObs { sat, gp, t, assumed, recorded });
    schedules[sat as usize].push(PathNode { gp, gp_id: scn.gps[gp as usize].gp_id, t });
}

/// Onboard scheduling with DTN-shared knowledge, rescheduled every period.
pub fn run_decentralized(scn: &Scenario) -> RunResult {
    run_decentralized_inner(scn, true)
}

/// Ablation: same loop with the inter-satellite network disabled.
pub fn run_decentralized_no_isl(scn: &Scenario) -> RunResult {
    run_decentralized_inner(scn, false)
}

fn run_decentralized_inner(scn: &Scenario, isl_enabled: bool) -> RunResult {
    let n_sats = scn.n_sats();
    let n_regions = scn.regions.len();
    let seed = scn.config.master_seed;
    let empty_plan: Vec<crate::orbit::Contact> = Vec::new();
    let plan: &[crate::orbit::Contact] = if isl_enabled { &scn.isl_plan } else { &empty_plan };
    let mut dtn = DtnSim::new(plan).expect("generated contact plan is valid");
    let mut know: Vec<KnowledgeState> = (0..n_sats)
        .map(|s| KnowledgeState::new(s as SatId, n_regions, scn.sigma[s], seed))
        .collect();
    let mut truth = TruthScorer::new(scn);
    let mut executed = Vec::new();
    let mut schedules = vec![Vec::new(); n_sats];
    let mut anchors: Vec<Option<(u32, f64)>> = vec![None; n_sats];
    let mut timing = RunTiming { per_sat_wall_s: vec![0.0; n_sats], ..Default::default() };
    let mut dp_nodes_expanded = 0u64;
    let mut bundle_id = 0u64;

    let horizon = scn.config.horizon_s;
    let period = scn.config.reschedule_period_s;
    let n_rounds = (horizon / period).ceil() as usize;
    let total_start = Instant::now();

    for round in 0..n_rounds {
        let t_plan = round as f64 * period;
        let t_next = (t_plan + period).min(horizon);

        // ingest bundles delivered by now
        dtn.advance_to(t_plan);
        for d in dtn.drain_delivered() {
            if let NodeId::Sat(s) = d.bundle.destination {
                let k = &mut know[s as usize];
                for &(gp_id, obs_sat, t_obs) in &d.bundle.payload.observations {
                    k.log.record(gp_id, obs_sat, t_obs);
                }
                k.note_region_source(d.bundle.payload.region, d.bundle.payload.model_src_t);
            }
        }

        // replan every satellite on its own knowledge
        let mut round_events: Vec<(f64, SatId, u32, f64)> = Vec::new();
        for s in 0..n_sats {
            let started = Instant::now();
            let out = dp_schedule(
                scn,
                s as SatId,
                &KnowledgeView::of(&know[s]),
                t_plan,
                (t_plan + scn.config.planning_window_s).min(horizon),
                anchors[s],
            );
            timing.per_sat_wall_s[s] += started.elapsed().as_secs_f64();
            timing.scheduler_calls += 1;
            dp_nodes_expanded += out.stats.nodes_expanded;
            for (node, &val) in out.path.nodes.iter().zip(&out.node_values) {
                if node.t < t_next - 1e-9 {
                    round_events.push((node.t, s as SatId, node.gp, val));
                }
            }
        }

        // execute this round chronologically and broadcast bundles
        round_events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (t, s, gp, assumed) in round_events {
            execute_obs(scn, &mut truth, &mut executed, &mut schedules, s, gp, t, assumed);
            anchors[s as usize] = Some((gp, t));
            let region = scn.region_of[gp as usize];
            let gp_id = scn.gps[gp as usize].gp_id;
            let k = &mut know[s as usize];
            k.log.record(gp_id, s, t);
            k.note_region_source(region, t);
            if isl_enabled {
                for (recipient, priority) in bundle_recipients(&scn.access, region, s, t) {
                    let bundle = Bundle::new(
                        bundle_id,
                        NodeId::Sat(s),
                        NodeId::Sat(recipient),
                        scn.config.isl.bundle_size_bits,
                        priority,
                        t,
                        BundlePayload {
                            region,
                            observations: vec![(gp_id, s, t)],
                            model_src_t: t,
                        },
                    )
                    .expect("recipient priorities are in range");
                    bundle_id += 1;
                    dtn.inject(bundle);
                }
            }
        }
    }

    let records = dtn.finish();
    timing.total_wall_s = total_start.elapsed().as_secs_f64();
    let metrics = assemble_metrics(
        if isl_enabled { "decentralized" } else { "decentralized_no_isl" },
        scn,
        &truth,
        &executed,
        &records,
        bundle_id,
        timing.scheduler_calls,
        dp_nodes_expanded,
    );
    RunResult { metrics, timing, executed, schedules, delivery: records }
}

/// Ground scheduling synced only at station contacts.
pub fn run_centralized(scn: &Scenario) -> RunResult {
    let n_sats = scn.n_sats();
    let n_regions = scn.regions.len();
    let seed = scn.config.master_seed;
    let horizon = scn.config.horizon_s;

    // satellite-to-ground contact window starts, chronological
    let mut syncs: Vec<(f64, SatId)> = scn
        .contact_plan
        .iter()
        .filter_map(|c| match (c.origin, c.destination) {
            (NodeId::Sat(s), NodeId::Ground(_)) => Some((c.t_start, s)),
            _ => None,
        })
        .filter(|&(t, _)| t < horizon)
        .collect();
    syncs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    syncs.dedup();
    let next_sync_of = |sat: SatId, t: f64| -> f64 {
        syncs
            .iter()
            .find(|&&(ts, s)| s == sat && ts > t)
            .map_or(horizon, |&(ts, _)| ts)
    };

    let mut ground_log = ObservationLog::new();
    let mut ground_src = vec![0.0f64; n_regions];
    // uplinked plans: (node, assumed value); executed prefix tracked by cursor
    let mut planned: Vec<Vec<(PathNode, f64)>> = vec![Vec::new(); n_sats];
    let mut cursor = vec![0usize; n_sats];
    // latest own observation per (sat, region): the model source downlinked
    let mut own_src = vec![vec![0.0f64; n_regions]; n_sats];

    let mut truth = TruthScorer::new(scn);
    let mut executed = Vec::new();
    let mut schedules = vec![Vec::new(); n_sats];
    let mut timing = RunTiming { per_sat_wall_s: vec![0.0; n_sats], ..Default::default() };
    let mut dp_nodes_expanded = 0u64;
    let total_start = Instant::now();

    let plan_sat = |sat: SatId,
                        t_from: f64,
                        t_to: f64,
                        ground_log: &ObservationLog,
                        ground_src: &[f64],
                        planned: &mut Vec<Vec<(PathNode, f64)>>,
                        cursor: &[usize],
                        timing: &mut RunTiming,
                        dp_nodes_expanded: &mut u64| {
        // overlay: ground history plus every other satellite's uplinked plan
        let mut overlay = ground_log.clone();
        for (other, plan) in planned.iter().enumerate() {
            if other == sat as usize {
                continue;
            }
            for (node, _) in plan {
                overlay.record(node.gp_id, other as SatId, node.t);
            }
        }
        let anchor = planned[sat as usize]
            .get(cursor[sat as usize].wrapping_sub(1))
            .filter(|_| cursor[sat as usize] > 0)
            .map(|(n, _)| (n.gp, n.t));
        let view = KnowledgeView {
            log: &overlay,
            region_src_t: ground_src,
            sigma: scn.sigma[sat as usize],
            owner: sat,
            run_seed: seed,
        };
        let started = Instant::now();
        let out = dp_schedule(scn, sat, &view, t_from, t_to, anchor);
        timing.per_sat_wall_s[sat as usize] += started.elapsed().as_secs_f64();
        timing.scheduler_calls += 1;
        *dp_nodes_expanded += out.stats.nodes_expanded;
        // replace the not-yet-executed tail with the new plan
        planned[sat as usize].truncate(cursor[sat as usize]);
        planned[sat as usize].extend(
            out.path.nodes.iter().zip(&out.node_values).map(|(n, &v)| (*n, v)),
        );
    };

    // initial uplink for every satellite before epoch
    for s in 0..n_sats {
        let until = next_sync_of(s as SatId, 0.0);
        plan_sat(
            s as SatId,
            0.0,
            until,
            &ground_log,
            &ground_src,
            &mut planned,
            &cursor,
            &mut timing,
            &mut dp_nodes_expanded,
        );
    }

    // execute planned nodes chronologically up to `t_limit`
    let execute_until = |t_limit: f64,
                         planned: &Vec<Vec<(PathNode, f64)>>,
                         cursor: &mut Vec<usize>,
                         truth: &mut TruthScorer,
                         executed: &mut Vec<ExecutedObs>,
                         schedules: &mut Vec<Vec<PathNode>>,
                         own_src: &mut Vec<Vec<f64>>| {
        loop {
            let mut next: Option<(f64, usize)> = None;
            for s in 0..planned.len() {
                if let Some((node, _)) = planned[s].get(cursor[s]) {
                    if node.t < t_limit && next.is_none_or(|(bt, bs)| {
                        node.t < bt || (node.t == bt && s < bs)
                    }) {
                        next = Some((node.t, s));
                    }
                }
            }
            let Some((_, s)) = next else { break };
            let (node, assumed) = planned[s][cursor[s]];
            cursor[s] += 1;
            execute_obs(scn, truth, executed, schedules, s as SatId, node.gp, node.t, assumed);
            let region = scn.region_of[node.gp as usize] as usize;
            own_src[s][region] = own_src[s][region].max(node.t);
        }
    };

    for i in 0..syncs.len() {
        let (t_sync, sat) = syncs[i];
        execute_until(
            t_sync,
            &planned,
            &mut cursor,
            &mut truth,
            &mut executed,
            &mut schedules,
            &mut own_src,
        );
        // downlink: executed observations and region knowledge of this sat
        for (k, (node, _)) in planned[sat as usize].iter().enumerate() {
            if k < cursor[sat as usize] {
                ground_log.record(node.gp_id, sat, node.t);
            }
        }
        for r in 0..n_regions {
            ground_src[r] = ground_src[r].max(own_src[sat as usize][r]);
        }
        // reschedule this sat with ground knowledge; new plan takes effect now
        let until = next_sync_of(sat, t_sync);
        plan_sat(
            sat,
            t_sync,
            until,
            &ground_log,
            &ground_src,
            &mut planned,
            &cursor,
            &mut timing,
            &mut dp_nodes_expanded,
        );
    }
    execute_until(
        horizon,
        &planned,
        &mut cursor,
        &mut truth,
        &mut executed,
        &mut schedules,
        &mut own_src,
    );

    timing.total_wall_s = total_start.elapsed().as_secs_f64();
    let metrics = assemble_metrics(
        "centralized",
        scn,
        &truth,
        &executed,
        &[],
        0,
        timing.scheduler_calls,
        dp_nodes_expanded,
    );
    RunResult { metrics, timing, executed, schedules, delivery: Vec::new() }
}

/// Nadir push-broom baseline: a cell is observed when it enters the
/// footprint disc under the ground track. No slewing, no scheduler.
pub fn run_nonagile(scn: &Scenario) -> RunResult {
    let horizon = scn.config.horizon_s;
    let footprint_r = scn.config.payload.footprint_km / 2.0;
    let min_cell = scn
        .config
        .regions
        .iter()
        .map(|r| r.cell_size_km)
        .fold(f64::INFINITY, f64::min);
    let fine_step = (0.8 * min_cell / scn.ground_speed_km_s()).max(0.05);

    let mut events: Vec<(f64, SatId, u32)> = Vec::new();
    for s in 0..scn.n_sats() {
        let el = &scn.constellation[s];
        for (ri, region) in scn.regions.iter().enumerate() {
            let gp_lo = region.gp_start;
            let gp_hi = region.gp_start + region.nature.grid.len();
            for &(w0, w1) in &scn.access.windows[s][ri] {
                let w1 = w1.min(horizon);
                let mut prev_in = vec![false; gp_hi - gp_lo];
                let mut t = w0;
                while t <= w1 {
                    let pos = propagate_state(s as SatId, el, t).expect("valid elements");
                    let subsat: Vec3 =
                        pos.position_ecef * (crate::geom::EARTH_RADIUS_KM / pos.position_ecef.norm());
                    for gp in gp_lo..gp_hi {
                        let d = crate::geom::EARTH_RADIUS_KM
                            * subsat.angle_deg(scn.gp_ecef[gp]).to_radians();
                        let inside = d <= footprint_r;
                        if inside && !prev_in[gp - gp_lo] {
                            events.push((t, s as SatId, gp as u32));
                        }
                        prev_in[gp - gp_lo] = inside;
                    }
                    t += fine_step;
                }
            }
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut truth = TruthScorer::new(scn);
    let mut executed = Vec::new();
    let mut schedules = vec![Vec::new(); scn.n_sats()];
    let total_start = Instant::now();
    for (t, s, gp) in events {
        let recorded = truth.score(scn, gp, t);
        truth.record(scn, gp, s, t);
        executed.push(ExecutedObs { sat: s, gp, t, assumed: recorded, recorded });
        schedules[s as usize].push(PathNode { gp, gp_id: scn.gps[gp as usize].gp_id, t });
    }
    let timing = RunTiming {
        per_sat_wall_s: vec![0.0; scn.n_sats()],
        scheduler_calls: 0,
        total_wall_s: total_start.elapsed().as_secs_f64(),
    };
    let metrics = assemble_metrics("nonagile", scn, &truth, &executed, &[], 0, 0, 0);
    RunResult { metrics, timing, executed, schedules, delivery: Vec::new() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{RegionConfig, ScenarioConfig};

    fn tiny_config() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::default();
        cfg.horizon_s = 3600.0;
        cfg.constellation.planes = 1;
        cfg.constellation.sats_per_plane = 4;
        cfg.regions = vec![RegionConfig {
            name: "eq".into(),
            center_lat_deg: 0.0,
            center_lon_deg: 0.0,
            extent_km: 80.0,
            cell_size_km: 4.0,
            ..RegionConfig::default()
        }];
        cfg.ground_stations.truncate(2);
        cfg
    }

    #[test]
    fn single_satellite_matches_chained_dp() {
        // a constellation of one: the decentralized run is dp_schedule chained
        // over reschedule periods with its own knowledge
        let mut cfg = tiny_config();
        cfg.constellation.sats_per_plane = 1;
        let scn = Scenario::build(cfg).unwrap();
        let run = run_decentralized(&scn);

        let mut know = KnowledgeState::new(0, 1, scn.sigma[0], scn.config.master_seed);
        let mut anchor = None;
        let mut expect: Vec<PathNode> = Vec::new();
        let period = scn.config.reschedule_period_s;
        let rounds = (scn.config.horizon_s / period).ceil() as usize;
        for round in 0..rounds {
            let t_plan = round as f64 * period;
            let out = dp_schedule(
                &scn,
                0,
                &KnowledgeView::of(&know),
                t_plan,
                (t_plan + scn.config.planning_window_s).min(scn.config.horizon_s),
                anchor,
            );
            for node in &out.path.nodes {
                if node.t < (t_plan + period).min(scn.config.horizon_s) - 1e-9 {
                    expect.push(*node);
                    know.log.record(node.gp_id, 0, node.t);
                    know.note_region_source(0, node.t);
                    anchor = Some((node.gp, node.t));
                }
            }
        }
        assert_eq!(run.schedules[0], expect);
        assert!(run.metrics.observations > 0);
    }

    #[test]
    fn ablation_without_isl_covers_no_more() {
        let scn = Scenario::build(tiny_config()).unwrap();
        let with = run_decentralized(&scn);
        let without = run_decentralized_no_isl(&scn);
        assert!(without.metrics.pct_gp_observed <= with.metrics.pct_gp_observed + 1e-9);
        assert_eq!(without.metrics.bundles_created, 0);
    }

    #[test]
    fn centralized_without_stations_freezes_initial_plans() {
        let mut cfg = tiny_config();
        cfg.ground_stations.clear();
        let scn = Scenario::build(cfg).unwrap();
        let run = run_centralized(&scn);
        // exactly one scheduler call per satellite: the initial uplink
        assert_eq!(run.metrics.scheduler_calls, scn.n_sats() as u64);
    }

    #[test]
    fn runs_are_deterministic_and_feasible() {
        let scn = Scenario::build(tiny_config()).unwrap();
        let a = run_decentralized(&scn);
        let b = run_decentralized(&scn);
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.executed, b.executed);
        for s in 0..scn.n_sats() {
            super::super::env::verify_schedule_feasible(&scn, s as SatId, &a.schedules[s])
                .unwrap();
        }
        let c = run_centralized(&scn);
        let d = run_centralized(&scn);
        assert_eq!(c.metrics, d.metrics);
        for s in 0..scn.n_sats() {
            super::super::env::verify_schedule_feasible(&scn, s as SatId, &c.schedules[s])
                .unwrap();
        }
        let e = run_nonagile(&scn);
        let f = run_nonagile(&scn);
        assert_eq!(e.metrics, f.metrics);
    }

    #[test]
    fn nonagile_region_off_track_sees_nothing() {
        let mut cfg = tiny_config();
        // a region the equatorial-crossing ground track never overflies at
        // nadir within the hour
        cfg.regions[0].center_lon_deg = 90.0;
        let scn = Scenario::build(cfg).unwrap();
        let run = run_nonagile(&scn);
        assert_eq!(run.metrics.pct_gp_observed, 0.0);
    }

    #[test]
    fn nonagile_wide_footprint_approaches_agile_coverage() {
        let mut cfg = tiny_config();
        cfg.payload.footprint_km = 200.0; // wider than the region
        cfg.regions[0].cell_size_km = 8.0;
        cfg.regions[0].extent_km = 80.0;
        let scn = Scenario::build(cfg).unwrap();
        let nonagile = run_nonagile(&scn);
        let agile = run_decentralized(&scn);
        assert!(
            nonagile.metrics.pct_gp_observed >= 0.9 * agile.metrics.pct_gp_observed,
            "nonagile {} vs agile {}",
            nonagile.metrics.pct_gp_observed,
            agile.metrics.pct_gp_observed
        );
    }

    #[test]
    fn divergence_zero_with_zero_noise_and_fresh_knowledge() {
        // single satellite, sigma forced to zero: assumed == recorded while
        // knowledge is its own fresh history
        let mut cfg = tiny_config();
        cfg.constellation.sats_per_plane = 1;
        let mut scn = Scenario::build(cfg).unwrap();
        scn.sigma = vec![0.0];
        let run = run_decentralized(&scn);
        assert!(run.metrics.observations > 0);
        assert!(
            run.metrics.divergence_pct < 1e-6,
            "divergence {}",
            run.metrics.divergence_pct
        );
    }
}
