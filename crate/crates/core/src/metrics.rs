//! Run metrics: the deterministic summary document a run emits, its text
//! round-trip, and mode-vs-mode comparison reports.
//!
//! Wall-clock figures live in a separate timing artifact so metric files are
//! byte-identical across reruns of the same (config, seed).

use std::collections::BTreeMap;

use thiserror::Error;

use crate::dtn::PriorityStats;
use crate::orbit::MAX_PRIORITY;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("malformed metrics line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("missing metrics field {0}")]
    MissingField(&'static str),
    #[error("comparison requires matching scenarios: {0}")]
    ScenarioMismatch(String),
}

/// Summary of one run mode.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub mode: String,
    pub seed: u64,
    pub config_digest: String,
    pub cumulative_recorded_value: f64,
    pub pct_gp_observed: f64,
    /// Mean absolute gap between assumed and recorded value, as a percentage
    /// of total recorded value.
    pub divergence_pct: f64,
    pub observations: u64,
    pub scheduler_calls: u64,
    pub dp_nodes_expanded: u64,
    pub bundles_created: u64,
    pub bundles_delivered: u64,
    pub bundles_dropped_ttl: u64,
    pub bundles_unroutable: u64,
    /// Per-priority latency stats, index 0 = priority 1.
    pub latency: Vec<PriorityStats>,
}

impl RunMetrics {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("mode = {}\n", self.mode));
        s.push_str(&format!("seed = {}\n", self.seed));
        s.push_str(&format!("config_digest = {}\n", self.config_digest));
        s.push_str(&format!(
            "cumulative_recorded_value = {:.6}\n",
            self.cumulative_recorded_value
        ));
        s.push_str(&format!("pct_gp_observed = {:.6}\n", self.pct_gp_observed));
        s.push_str(&format!("divergence_pct = {:.6}\n", self.divergence_pct));
        s.push_str(&format!("observations = {}\n", self.observations));
        s.push_str(&format!("scheduler_calls = {}\n", self.scheduler_calls));
        s.push_str(&format!("dp_nodes_expanded = {}\n", self.dp_nodes_expanded));
        s.push_str(&format!("bundles_created = {}\n", self.bundles_created));
        s.push_str(&format!("bundles_delivered = {}\n", self.bundles_delivered));
        s.push_str(&format!("bundles_dropped_ttl = {}\n", self.bundles_dropped_ttl));
        s.push_str(&format!("bundles_unroutable = {}\n", self.bundles_unroutable));
        let fmt = |v: Option<f64>| v.map_or(String::from("-"), |x| format!("{x:.6}"));
        for (i, st) in self.latency.iter().enumerate() {
            s.push_str(&format!(
                "latency_p{} = {} {} {} {} {} {} {} {}\n",
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

    pub fn from_text(text: &str) -> Result<Self, MetricsError> {
        let mut fields: BTreeMap<String, String> = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(MetricsError::Malformed {
                line: idx + 1,
                reason: "expected key = value".into(),
            })?;
            fields.insert(k.trim().to_string(), v.trim().to_string());
        }
        fn take<T: std::str::FromStr>(
            fields: &BTreeMap<String, String>,
            key: &'static str,
        ) -> Result<T, MetricsError> {
            fields
                .get(key)
                .ok_or(MetricsError::MissingField(key))?
                .parse()
                .map_err(|_| MetricsError::Malformed { line: 0, reason: format!("field {key}") })
        }
        let mut latency = Vec::with_capacity(MAX_PRIORITY as usize);
        for p in 1..=MAX_PRIORITY {
            let key = format!("latency_p{p}");
            let raw = fields
                .get(&key)
                .ok_or(MetricsError::MissingField("latency_p*"))?;
            let toks: Vec<&str> = raw.split_whitespace().collect();
            if toks.len() != 8 {
                return Err(MetricsError::Malformed {
                    line: 0,
                    reason: format!("{key}: expected 8 fields"),
                });
            }
            let opt = |s: &str| -> Option<f64> {
                if s == "-" {
                    None
                } else {
                    s.parse().ok()
                }
            };
            latency.push(PriorityStats {
                delivered: toks[0].parse().unwrap_or(0),
                dropped_ttl: toks[1].parse().unwrap_or(0),
                unroutable: toks[2].parse().unwrap_or(0),
                min: opt(toks[3]),
                q25: opt(toks[4]),
                median: opt(toks[5]),
                q75: opt(toks[6]),
                max: opt(toks[7]),
            });
        }
        Ok(RunMetrics {
            mode: take(&fields, "mode")?,
            seed: take(&fields, "seed")?,
            config_digest: take(&fields, "config_digest")?,
            cumulative_recorded_value: take(&fields, "cumulative_recorded_value")?,
            pct_gp_observed: take(&fields, "pct_gp_observed")?,
            divergence_pct: take(&fields, "divergence_pct")?,
            observations: take(&fields, "observations")?,
            scheduler_calls: take(&fields, "scheduler_calls")?,
            dp_nodes_expanded: take(&fields, "dp_nodes_expanded")?,
            bundles_created: take(&fields, "bundles_created")?,
            bundles_delivered: take(&fields, "bundles_delivered")?,
            bundles_dropped_ttl: take(&fields, "bundles_dropped_ttl")?,
            bundles_unroutable: take(&fields, "bundles_unroutable")?,
            latency,
        })
    }
}

/// Wall-clock accounting, kept out of the deterministic metrics file.
#[derive(Debug, Clone, Default)]
pub struct RunTiming {
    pub per_sat_wall_s: Vec<f64>,
    pub scheduler_calls: u64,
    pub total_wall_s: f64,
}

impl RunTiming {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "# wall-clock accounting (non-deterministic)\nscheduler_calls = {}\ntotal_wall_s = {:.6}\n",
            self.scheduler_calls, self.total_wall_s
        );
        for (i, w) in self.per_sat_wall_s.iter().enumerate() {
            s.push_str(&format!("sat{}_scheduler_wall_s = {w:.6}\n", i));
        }
        s
    }
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        if a == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        a / b
    }
}

fn dominant(a: f64, b: f64) -> &'static str {
    if a > b {
        "a"
    } else if b > a {
        "b"
    } else {
        "tie"
    }
}

/// Side-by-side comparison of two runs of the same scenario and seed.
pub fn compare(a: &RunMetrics, b: &RunMetrics) -> Result<String, MetricsError> {
    if a.config_digest != b.config_digest {
        return Err(MetricsError::ScenarioMismatch(format!(
            "config digests differ: {} vs {}",
            a.config_digest, b.config_digest
        )));
    }
    if a.seed != b.seed {
        return Err(MetricsError::ScenarioMismatch(format!(
            "seeds differ: {} vs {}",
            a.seed, b.seed
        )));
    }
    let mut s = String::new();
    s.push_str("# run comparison (a vs b)\n");
    s.push_str(&format!("mode_a = {}\n", a.mode));
    s.push_str(&format!("mode_b = {}\n", b.mode));
    s.push_str(&format!("seed = {}\n", a.seed));
    s.push_str(&format!("value_a = {:.6}\n", a.cumulative_recorded_value));
    s.push_str(&format!("value_b = {:.6}\n", b.cumulative_recorded_value));
    s.push_str(&format!(
        "value_ratio = {:.6}\n",
        ratio(a.cumulative_recorded_value, b.cumulative_recorded_value)
    ));
    s.push_str(&format!(
        "value_diff = {:.6}\n",
        a.cumulative_recorded_value - b.cumulative_recorded_value
    ));
    s.push_str(&format!("coverage_a_pct = {:.6}\n", a.pct_gp_observed));
    s.push_str(&format!("coverage_b_pct = {:.6}\n", b.pct_gp_observed));
    s.push_str(&format!(
        "coverage_ratio = {:.6}\n",
        ratio(a.pct_gp_observed, b.pct_gp_observed)
    ));
    s.push_str(&format!("divergence_a_pct = {:.6}\n", a.divergence_pct));
    s.push_str(&format!("divergence_b_pct = {:.6}\n", b.divergence_pct));
    for p in [1usize, 3, 9] {
        let (la, lb) = (&a.latency[p - 1], &b.latency[p - 1]);
        if let (Some(ma), Some(mb)) = (la.median, lb.median) {
            s.push_str(&format!("latency_p{p}_median_ratio = {:.6}\n", ratio(ma, mb)));
        }
    }
    s.push_str(&format!(
        "dominant_value = {}\n",
        dominant(a.cumulative_recorded_value, b.cumulative_recorded_value)
    ));
    s.push_str(&format!(
        "dominant_coverage = {}\n",
        dominant(a.pct_gp_observed, b.pct_gp_observed)
    ));
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunMetrics {
        let mut latency = vec![PriorityStats::default(); MAX_PRIORITY as usize];
        latency[0] = PriorityStats {
            delivered: 4,
            dropped_ttl: 1,
            unroutable: 0,
            min: Some(1.0),
            q25: Some(1.75),
            median: Some(2.5),
            q75: Some(3.25),
            max: Some(4.0),
        };
        RunMetrics {
            mode: "decentralized".into(),
            seed: 42,
            config_digest: "abc123".into(),
            cumulative_recorded_value: 12_345.5,
            pct_gp_observed: 91.25,
            divergence_pct: 4.5,
            observations: 3000,
            scheduler_calls: 864,
            dp_nodes_expanded: 1_000_000,
            bundles_created: 16_000,
            bundles_delivered: 15_000,
            bundles_dropped_ttl: 800,
            bundles_unroutable: 200,
            latency,
        }
    }

    #[test]
    fn text_round_trip() {
        let m = sample();
        let parsed = RunMetrics::from_text(&m.to_text()).unwrap();
        assert_eq!(m, parsed);
        // byte-stable
        assert_eq!(m.to_text(), parsed.to_text());
    }

    #[test]
    fn self_comparison_is_all_ones() {
        let m = sample();
        let report = compare(&m, &m).unwrap();
        assert!(report.contains("value_ratio = 1.000000"));
        assert!(report.contains("coverage_ratio = 1.000000"));
        assert!(report.contains("latency_p1_median_ratio = 1.000000"));
        assert!(report.contains("dominant_value = tie"));
    }

    #[test]
    fn mismatched_runs_rejected() {
        let a = sample();
        let mut b = sample();
        b.seed = 43;
        assert!(matches!(compare(&a, &b), Err(MetricsError::ScenarioMismatch(_))));
        let mut c = sample();
        c.config_digest = "zzz".into();
        assert!(matches!(compare(&a, &c), Err(MetricsError::ScenarioMismatch(_))));
    }

    #[test]
    fn comparison_flags_dominance() {
        let a = sample();
        let mut b = sample();
        b.mode = "centralized".into();
        b.cumulative_recorded_value = 10_000.0;
        b.pct_gp_observed = 99.0;
        let report = compare(&a, &b).unwrap();
        assert!(report.contains("dominant_value = a"));
        assert!(report.contains("dominant_coverage = b"));
    }
}
