//! Run orchestration: assemble a scenario, execute the requested modes,
//! write the output artifacts, and build comparison reports.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::config::ScenarioConfig;
use crate::metrics::{self, MetricsError, RunMetrics};
use crate::orbit::contact_plan_to_text;
use crate::scenario::{Scenario, ScenarioError};
use crate::sched::modes::{run_centralized, run_decentralized, run_nonagile, RunResult};
use crate::sched::PathNode;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("failed to write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("failed to read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("unknown mode {0:?} (expected decentralized, centralized or nonagile)")]
    UnknownMode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Decentralized,
    Centralized,
    Nonagile,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Decentralized, Mode::Centralized, Mode::Nonagile];
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Decentralized => "decentralized",
            Mode::Centralized => "centralized",
            Mode::Nonagile => "nonagile",
        })
    }
}

impl FromStr for Mode {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "decentralized" => Ok(Mode::Decentralized),
            "centralized" => Ok(Mode::Centralized),
            "nonagile" => Ok(Mode::Nonagile),
            other => Err(HarnessError::UnknownMode(other.to_string())),
        }
    }
}

/// Execute one mode against an assembled scenario.
pub fn run_mode(scn: &Scenario, mode: Mode) -> RunResult {
    match mode {
        Mode::Decentralized => run_decentralized(scn),
        Mode::Centralized => run_centralized(scn),
        Mode::Nonagile => run_nonagile(scn),
    }
}

/// Executed schedules as delimited text:
/// sat_id, t, gp_id, slew_angle_deg, slew_time_s.
pub fn schedule_to_text(scn: &Scenario, schedules: &[Vec<PathNode>]) -> String {
    let mut s = String::from("# sat_id, t, gp_id, slew_angle_deg, slew_time_s\n");
    for (sat, nodes) in schedules.iter().enumerate() {
        let mut prev: Option<&PathNode> = None;
        for node in nodes {
            let (alpha, slew) = match prev {
                None => (0.0, 0.0),
                Some(p) => {
                    let k = ((p.t / scn.dt()).round() as usize).min(scn.n_steps);
                    let sat_pos = scn.ephem[sat][k];
                    let u = scn.gp_ecef[p.gp as usize] - sat_pos;
                    let v = scn.gp_ecef[node.gp as usize] - sat_pos;
                    let alpha = u.angle_deg(v);
                    let t = scn
                        .slew
                        .slew_time_s(alpha, scn.config.slew.k_sigma)
                        .expect("angle in range");
                    (alpha, t)
                }
            };
            s.push_str(&format!(
                "sat{sat}, {:.3}, {}, {alpha:.4}, {slew:.4}\n",
                node.t, node.gp_id
            ));
            prev = Some(node);
        }
    }
    s
}

fn write(path: &Path, content: &str) -> Result<(), HarnessError> {
    std::fs::write(path, content)
        .map_err(|source| HarnessError::Write { path: path.to_path_buf(), source })
}

/// A run request: which scenario, which modes, where outputs go.
#[derive(Debug, Clone)]
pub struct RunRequest {
    pub config: ScenarioConfig,
    pub config_base_dir: PathBuf,
    pub modes: Vec<Mode>,
    pub out_dir: PathBuf,
    pub export_contact_plan: bool,
}

/// Build the scenario once, run every requested mode, and write artifacts:
/// metrics_<mode>.txt, schedule_<mode>.txt, delivery_<mode>.txt,
/// latency_<mode>.txt, timing_<mode>.txt, config_echo.toml and optionally
/// contact_plan.txt. Nothing is written until the scenario builds cleanly.
pub fn run(req: &RunRequest) -> Result<Vec<RunMetrics>, HarnessError> {
    let scn = Scenario::build_with_base(req.config.clone(), &req.config_base_dir)?;
    std::fs::create_dir_all(&req.out_dir)
        .map_err(|source| HarnessError::Write { path: req.out_dir.clone(), source })?;
    write(&req.out_dir.join("config_echo.toml"), &scn.config.echo_toml())?;
    if req.export_contact_plan {
        write(&req.out_dir.join("contact_plan.txt"), &contact_plan_to_text(&scn.contact_plan))?;
    }
    let mut out = Vec::new();
    for &mode in &req.modes {
        let result = run_mode(&scn, mode);
        write(
            &req.out_dir.join(format!("metrics_{mode}.txt")),
            &result.metrics.to_text(),
        )?;
        write(
            &req.out_dir.join(format!("schedule_{mode}.txt")),
            &schedule_to_text(&scn, &result.schedules),
        )?;
        write(
            &req.out_dir.join(format!("delivery_{mode}.txt")),
            &crate::dtn::records_to_text(&result.delivery),
        )?;
        write(
            &req.out_dir.join(format!("latency_{mode}.txt")),
            &crate::dtn::stats_to_text(&result.metrics.latency),
        )?;
        write(
            &req.out_dir.join(format!("timing_{mode}.txt")),
            &result.timing.to_text(),
        )?;
        out.push(result.metrics);
    }
    Ok(out)
}

/// Compare two previously written metrics files.
pub fn compare_files(a: &Path, b: &Path) -> Result<String, HarnessError> {
    let read = |p: &Path| {
        std::fs::read_to_string(p)
            .map_err(|source| HarnessError::Read { path: p.to_path_buf(), source })
    };
    let ma = RunMetrics::from_text(&read(a)?)?;
    let mb = RunMetrics::from_text(&read(b)?)?;
    Ok(metrics::compare(&ma, &mb)?)
}
