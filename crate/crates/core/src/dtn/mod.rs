//! Bundle-layer simulation: contact-plan routing, priority queuing, TTL
//! expiry, duplicate discard and per-bundle latency accounting.
//!
//! Only the parts of the bundle protocol needed to move observation data
//! through a constellation are modeled: store-and-forward custody at each
//! node, schedule-aware earliest-arrival routing, per-priority TTLs, and the
//! next-hop extension tag that lets inadvertent receivers discard copies.

mod route;
mod sim;

pub use route::{compute_route, Route};
pub use sim::{audit_link_capacity, simulate, validate_plan, Delivered, DtnSim};

use thiserror::Error;

use crate::orbit::{GpId, NodeId, RegionId, SatId, MAX_PRIORITY};

#[derive(Debug, Error, PartialEq)]
pub enum DtnError {
    #[error("priority {0} outside [1, {MAX_PRIORITY}]")]
    PriorityOutOfRange(u8),
    #[error("contacts {0} and {1} overlap on the same directed link")]
    OverlappingContacts(usize, usize),
    #[error("malformed traffic line {line}: {reason}")]
    MalformedTrafficLine { line: usize, reason: String },
}

/// TTL assigned to each priority level: 15 min for priority 1, 30 min for
/// 2-3, 50 min for 4-15.
pub fn ttl_for_priority(priority: u8) -> Result<f64, DtnError> {
    match priority {
        1 => Ok(900.0),
        2 | 3 => Ok(1800.0),
        4..=MAX_PRIORITY => Ok(3000.0),
        _ => Err(DtnError::PriorityOutOfRange(priority)),
    }
}

/// Observation tuples and model-parameter timestamps carried by a bundle.
/// Opaque to routing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BundlePayload {
    pub region: RegionId,
    /// Executed observations: (gp, observer, time).
    pub observations: Vec<(GpId, SatId, f64)>,
    /// Source timestamp of the carried model-parameter update.
    pub model_src_t: f64,
}

/// DTN data unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub bundle_id: u64,
    pub source: NodeId,
    pub destination: NodeId,
    pub size_bits: f64,
    pub priority: u8,
    pub t_created: f64,
    pub ttl_s: f64,
    pub payload: BundlePayload,
    /// Identifier of the intended next hop, rewritten at every routing
    /// decision; receivers discard copies not tagged for them.
    pub next_hop_tag: Option<NodeId>,
}

impl Bundle {
    pub fn new(
        bundle_id: u64,
        source: NodeId,
        destination: NodeId,
        size_bits: f64,
        priority: u8,
        t_created: f64,
        payload: BundlePayload,
    ) -> Result<Self, DtnError> {
        let ttl_s = ttl_for_priority(priority)?;
        Ok(Self {
            bundle_id,
            source,
            destination,
            size_bits,
            priority,
            t_created,
            ttl_s,
            payload,
            next_hop_tag: None,
        })
    }
}

/// One transmission leg a bundle completed.
#[derive(Debug, Clone, PartialEq)]
pub struct Hop {
    pub from: NodeId,
    pub to: NodeId,
    pub t_tx_start: f64,
    pub t_tx_end: f64,
    pub t_arrival: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeliveryOutcome {
    Delivered,
    DroppedTtl,
    Unroutable,
}

/// Terminal record for one injected bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct DeliveryRecord {
    pub bundle_id: u64,
    pub priority: u8,
    pub outcome: DeliveryOutcome,
    pub t_delivered: Option<f64>,
    pub latency_s: Option<f64>,
    pub hops: Vec<Hop>,
}

/// Latency summary for one priority level.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PriorityStats {
    pub delivered: usize,
    pub dropped_ttl: usize,
    pub unroutable: usize,
    pub min: Option<f64>,
    pub q25: Option<f64>,
    pub median: Option<f64>,
    pub q75: Option<f64>,
    pub max: Option<f64>,
}

/// Linear-interpolation (type 7) quantile of a sorted sample.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.len() == 1 {
        return sorted[0];
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 < sorted.len() {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[lo]
    }
}

/// Per-priority latency quartiles and drop counts over a set of records.
/// Index 0 holds priority 1.
pub fn latency_stats(records: &[DeliveryRecord]) -> Vec<PriorityStats> {
    let mut out = vec![PriorityStats::default(); MAX_PRIORITY as usize];
    let mut latencies: Vec<Vec<f64>> = vec![Vec::new(); MAX_PRIORITY as usize];
    for r in records {
        let slot = (r.priority - 1) as usize;
        match r.outcome {
            DeliveryOutcome::Delivered => {
                out[slot].delivered += 1;
                latencies[slot].push(r.latency_s.expect("delivered record has latency"));
            }
            DeliveryOutcome::DroppedTtl => out[slot].dropped_ttl += 1,
            DeliveryOutcome::Unroutable => out[slot].unroutable += 1,
        }
    }
    for (slot, lats) in latencies.iter_mut().enumerate() {
        if lats.is_empty() {
            continue;
        }
        lats.sort_by(f64::total_cmp);
        out[slot].min = Some(lats[0]);
        out[slot].q25 = Some(quantile(lats, 0.25));
        out[slot].median = Some(quantile(lats, 0.5));
        out[slot].q75 = Some(quantile(lats, 0.75));
        out[slot].max = Some(*lats.last().unwrap());
    }
    out
}

/// Parse standalone traffic from delimited text, one bundle per line:
/// bundle_id, source, destination, size_bits, priority, t_created.
pub fn traffic_from_text(text: &str) -> Result<Vec<Bundle>, DtnError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |reason: String| DtnError::MalformedTrafficLine { line: idx + 1, reason };
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 6 {
            return Err(bad(format!("expected 6 fields, got {}", f.len())));
        }
        let bundle_id: u64 = f[0].parse().map_err(|e| bad(format!("bundle_id: {e}")))?;
        let source: NodeId = f[1].parse().map_err(|e| bad(format!("source: {e}")))?;
        let destination: NodeId = f[2].parse().map_err(|e| bad(format!("destination: {e}")))?;
        let size_bits: f64 = f[3].parse().map_err(|e| bad(format!("size_bits: {e}")))?;
        let priority: u8 = f[4].parse().map_err(|e| bad(format!("priority: {e}")))?;
        let t_created: f64 = f[5].parse().map_err(|e| bad(format!("t_created: {e}")))?;
        out.push(Bundle::new(
            bundle_id,
            source,
            destination,
            size_bits,
            priority,
            t_created,
            BundlePayload::default(),
        )?);
    }
    Ok(out)
}

/// Delivery records as delimited text, one per line.
pub fn records_to_text(records: &[DeliveryRecord]) -> String {
    let mut s = String::from("# bundle_id, priority, outcome, t_delivered, latency_s, hops\n");
    for r in records {
        let outcome = match r.outcome {
            DeliveryOutcome::Delivered => "delivered",
            DeliveryOutcome::DroppedTtl => "dropped_ttl",
            DeliveryOutcome::Unroutable => "unroutable",
        };
        let t = r.t_delivered.map_or(String::from("-"), |v| v.to_string());
        let l = r.latency_s.map_or(String::from("-"), |v| v.to_string());
        let hops: Vec<String> = r.hops.iter().map(|h| format!("{}>{}", h.from, h.to)).collect();
        s.push_str(&format!(
            "{}, {}, {}, {}, {}, {}\n",
            r.bundle_id,
            r.priority,
            outcome,
            t,
            l,
            hops.join(" ")
        ));
    }
    s
}

/// Per-priority latency table as structured text.
pub fn stats_to_text(stats: &[PriorityStats]) -> String {
    let mut s = String::from(
        "# priority, delivered, dropped_ttl, unroutable, min_s, q25_s, median_s, q75_s, max_s\n",
    );
    let fmt = |v: Option<f64>| v.map_or(String::from("-"), |x| format!("{x:.6}"));
    for (i, st) in stats.iter().enumerate() {
        s.push_str(&format!(
            "{}, {}, {}, {}, {}, {}, {}, {}, {}\n",
            i + 1,
            st.delivered,
            st.dropped_ttl,
            st.unroutable,
            fmt(st.min),
            fmt(st.q25),
            fmt(st.median),
            fmt(st.q75),
            fmt(st.max),
        ));
    }
    s
}
