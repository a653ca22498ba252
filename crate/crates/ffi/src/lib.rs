//! C ABI for the constellation simulator.
//!
//! Scenarios are opaque handles created from the built-in defaults, a TOML
//! string, or a file; runs fill a plain `AgilesimMetrics` struct. Every
//! fallible call returns an [`AgilesimStatus`]; the most recent failure
//! message is available via [`agilesim_last_error_message`]. Strings returned
//! by this library must be released with [`agilesim_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use agilesim::config::ScenarioConfig;
use agilesim::harness::{run_mode, Mode};
use agilesim::scenario::Scenario;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<Vec<u8>>) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Status codes returned by fallible calls.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgilesimStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ConfigError = 3,
    RunError = 4,
}

/// Scheduling mode to execute.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgilesimMode {
    Decentralized = 0,
    Centralized = 1,
    Nonagile = 2,
}

impl From<AgilesimMode> for Mode {
    fn from(m: AgilesimMode) -> Mode {
        match m {
            AgilesimMode::Decentralized => Mode::Decentralized,
            AgilesimMode::Centralized => Mode::Centralized,
            AgilesimMode::Nonagile => Mode::Nonagile,
        }
    }
}

/// Opaque scenario handle.
pub struct AgilesimScenario {
    config: ScenarioConfig,
    base_dir: std::path::PathBuf,
}

/// Flat run summary filled by [`agilesim_run`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct AgilesimMetrics {
    pub seed: u64,
    pub cumulative_recorded_value: f64,
    pub pct_gp_observed: f64,
    pub divergence_pct: f64,
    pub observations: u64,
    pub scheduler_calls: u64,
    pub bundles_created: u64,
    pub bundles_delivered: u64,
    pub bundles_dropped_ttl: u64,
    pub bundles_unroutable: u64,
}

/// Library version as a static NUL-terminated string; do not free.
#[no_mangle]
pub extern "C" fn agilesim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Most recent error message for this thread, or NULL when none.
/// Free with [`agilesim_string_free`].
#[no_mangle]
pub extern "C" fn agilesim_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => ptr::null_mut(),
        Some(c) => c.clone().into_raw(),
    })
}

/// Release a string allocated by this library.
///
/// # Safety
/// `s` must be NULL or a pointer previously returned by an agilesim function
/// that allocates a string, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn agilesim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Scenario with the built-in defaults (24-satellite flood monitoring).
#[no_mangle]
pub extern "C" fn agilesim_scenario_default() -> *mut AgilesimScenario {
    Box::into_raw(Box::new(AgilesimScenario {
        config: ScenarioConfig::default(),
        base_dir: ".".into(),
    }))
}

unsafe fn cstr_arg<'a>(s: *const c_char) -> Result<&'a str, AgilesimStatus> {
    if s.is_null() {
        set_error("null string argument");
        return Err(AgilesimStatus::NullArgument);
    }
    unsafe { CStr::from_ptr(s) }.to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        AgilesimStatus::InvalidUtf8
    })
}

/// Scenario parsed from TOML text.
///
/// # Safety
/// `toml_text` must be a valid NUL-terminated string; `out` must be a valid
/// pointer to receive the handle.
#[no_mangle]
pub unsafe extern "C" fn agilesim_scenario_from_toml(
    toml_text: *const c_char,
    out: *mut *mut AgilesimScenario,
) -> AgilesimStatus {
    if out.is_null() {
        set_error("null output pointer");
        return AgilesimStatus::NullArgument;
    }
    let text = match unsafe { cstr_arg(toml_text) } {
        Ok(t) => t,
        Err(status) => return status,
    };
    match ScenarioConfig::from_toml(text) {
        Ok(config) => {
            unsafe {
                *out = Box::into_raw(Box::new(AgilesimScenario { config, base_dir: ".".into() }));
            }
            AgilesimStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            AgilesimStatus::ConfigError
        }
    }
}

/// Scenario loaded from a TOML file; relative nature-run paths resolve
/// against the file's directory.
///
/// # Safety
/// `path` must be a valid NUL-terminated string; `out` must be a valid
/// pointer to receive the handle.
#[no_mangle]
pub unsafe extern "C" fn agilesim_scenario_from_file(
    path: *const c_char,
    out: *mut *mut AgilesimScenario,
) -> AgilesimStatus {
    if out.is_null() {
        set_error("null output pointer");
        return AgilesimStatus::NullArgument;
    }
    let path = match unsafe { cstr_arg(path) } {
        Ok(p) => p,
        Err(status) => return status,
    };
    match ScenarioConfig::load(Path::new(path)) {
        Ok(config) => {
            let base_dir = Path::new(path).parent().unwrap_or(Path::new(".")).to_path_buf();
            unsafe {
                *out = Box::into_raw(Box::new(AgilesimScenario { config, base_dir }));
            }
            AgilesimStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            AgilesimStatus::ConfigError
        }
    }
}

/// Override the master seed.
///
/// # Safety
/// `scenario` must be a live handle from an agilesim constructor.
#[no_mangle]
pub unsafe extern "C" fn agilesim_scenario_set_seed(
    scenario: *mut AgilesimScenario,
    seed: u64,
) -> AgilesimStatus {
    let Some(s) = (unsafe { scenario.as_mut() }) else {
        set_error("null scenario handle");
        return AgilesimStatus::NullArgument;
    };
    s.config.master_seed = seed;
    AgilesimStatus::Ok
}

/// Fully resolved configuration as TOML. Free with [`agilesim_string_free`].
///
/// # Safety
/// `scenario` must be a live handle from an agilesim constructor.
#[no_mangle]
pub unsafe extern "C" fn agilesim_scenario_echo_toml(
    scenario: *const AgilesimScenario,
) -> *mut c_char {
    match unsafe { scenario.as_ref() } {
        None => {
            set_error("null scenario handle");
            ptr::null_mut()
        }
        Some(s) => CString::new(s.config.echo_toml())
            .map_or(ptr::null_mut(), CString::into_raw),
    }
}

/// Release a scenario handle.
///
/// # Safety
/// `scenario` must be NULL or a live handle from an agilesim constructor,
/// not yet freed.
#[no_mangle]
pub unsafe extern "C" fn agilesim_scenario_free(scenario: *mut AgilesimScenario) {
    if !scenario.is_null() {
        drop(unsafe { Box::from_raw(scenario) });
    }
}

fn execute(
    scenario: &AgilesimScenario,
    mode: AgilesimMode,
) -> Result<(AgilesimMetrics, String), String> {
    let scn = Scenario::build_with_base(scenario.config.clone(), &scenario.base_dir)
        .map_err(|e| e.to_string())?;
    let result = run_mode(&scn, mode.into());
    let m = &result.metrics;
    Ok((
        AgilesimMetrics {
            seed: m.seed,
            cumulative_recorded_value: m.cumulative_recorded_value,
            pct_gp_observed: m.pct_gp_observed,
            divergence_pct: m.divergence_pct,
            observations: m.observations,
            scheduler_calls: m.scheduler_calls,
            bundles_created: m.bundles_created,
            bundles_delivered: m.bundles_delivered,
            bundles_dropped_ttl: m.bundles_dropped_ttl,
            bundles_unroutable: m.bundles_unroutable,
        },
        m.to_text(),
    ))
}

/// Run one mode and fill `out_metrics`.
///
/// # Safety
/// `scenario` must be a live handle; `out_metrics` must point to writable
/// memory for one `AgilesimMetrics`.
#[no_mangle]
pub unsafe extern "C" fn agilesim_run(
    scenario: *const AgilesimScenario,
    mode: AgilesimMode,
    out_metrics: *mut AgilesimMetrics,
) -> AgilesimStatus {
    let Some(s) = (unsafe { scenario.as_ref() }) else {
        set_error("null scenario handle");
        return AgilesimStatus::NullArgument;
    };
    if out_metrics.is_null() {
        set_error("null metrics pointer");
        return AgilesimStatus::NullArgument;
    }
    match execute(s, mode) {
        Ok((m, _)) => {
            unsafe { *out_metrics = m };
            AgilesimStatus::Ok
        }
        Err(e) => {
            set_error(e);
            AgilesimStatus::RunError
        }
    }
}

/// Run one mode and return the full metrics document as text.
/// Free with [`agilesim_string_free`].
///
/// # Safety
/// `scenario` must be a live handle; `out_text` must be a valid pointer to
/// receive the string.
#[no_mangle]
pub unsafe extern "C" fn agilesim_run_to_text(
    scenario: *const AgilesimScenario,
    mode: AgilesimMode,
    out_text: *mut *mut c_char,
) -> AgilesimStatus {
    let Some(s) = (unsafe { scenario.as_ref() }) else {
        set_error("null scenario handle");
        return AgilesimStatus::NullArgument;
    };
    if out_text.is_null() {
        set_error("null output pointer");
        return AgilesimStatus::NullArgument;
    }
    match execute(s, mode) {
        Ok((_, text)) => {
            unsafe {
                *out_text = CString::new(text).map_or(ptr::null_mut(), CString::into_raw);
            }
            AgilesimStatus::Ok
        }
        Err(e) => {
            set_error(e);
            AgilesimStatus::RunError
        }
    }
}

/// Maneuver time of the default slew model, seconds; NaN for invalid input.
#[no_mangle]
pub extern "C" fn agilesim_slew_time_s(alpha_deg: f64, k_sigma: f64) -> f64 {
    agilesim::SlewModel::default()
        .slew_time_s(alpha_deg, k_sigma)
        .unwrap_or(f64::NAN)
}

/// TTL for a bundle priority level, seconds; negative for invalid priority.
#[no_mangle]
pub extern "C" fn agilesim_ttl_for_priority_s(priority: u8) -> f64 {
    agilesim::dtn::ttl_for_priority(priority).unwrap_or(-1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn version_is_static_and_non_null() {
        let v = agilesim_version();
        assert!(!v.is_null());
        let s = unsafe { CStr::from_ptr(v) }.to_str().unwrap();
        assert!(!s.is_empty());
    }

    #[test]
    fn slew_and_ttl_helpers() {
        assert!((agilesim_slew_time_s(30.0, 0.0) - 10.2913).abs() < 1e-3);
        assert!(agilesim_slew_time_s(-5.0, 0.0).is_nan());
        assert_eq!(agilesim_ttl_for_priority_s(1), 900.0);
        assert_eq!(agilesim_ttl_for_priority_s(16), -1.0);
    }

    #[test]
    fn null_arguments_are_rejected() {
        unsafe {
            assert_eq!(
                agilesim_scenario_set_seed(ptr::null_mut(), 1),
                AgilesimStatus::NullArgument
            );
            let mut out = ptr::null_mut();
            assert_eq!(
                agilesim_scenario_from_toml(ptr::null(), &mut out),
                AgilesimStatus::NullArgument
            );
            let msg = agilesim_last_error_message();
            assert!(!msg.is_null());
            agilesim_string_free(msg);
        }
    }

    #[test]
    fn bad_toml_reports_config_error() {
        unsafe {
            let text = CString::new("horizon_s = -5").unwrap();
            let mut out = ptr::null_mut();
            let status = agilesim_scenario_from_toml(text.as_ptr(), &mut out);
            assert_eq!(status, AgilesimStatus::ConfigError);
            let msg = agilesim_last_error_message();
            assert!(!msg.is_null());
            let s = CStr::from_ptr(msg).to_str().unwrap().to_string();
            assert!(s.contains("horizon_s"), "{s}");
            agilesim_string_free(msg);
        }
    }

    #[test]
    fn tiny_scenario_runs_end_to_end() {
        let toml = "
            horizon_s = 1200.0
            [constellation]
            planes = 1
            sats_per_plane = 2
            [[regions]]
            name = \"eq\"
            center_lat_deg = 0.0
            center_lon_deg = 0.0
        ";
        unsafe {
            let text = CString::new(toml).unwrap();
            let mut scenario = ptr::null_mut();
            assert_eq!(
                agilesim_scenario_from_toml(text.as_ptr(), &mut scenario),
                AgilesimStatus::Ok
            );
            assert_eq!(agilesim_scenario_set_seed(scenario, 7), AgilesimStatus::Ok);

            let echo = agilesim_scenario_echo_toml(scenario);
            assert!(!echo.is_null());
            let echo_str = CStr::from_ptr(echo).to_str().unwrap();
            assert!(echo_str.contains("master_seed = 7"));
            agilesim_string_free(echo);

            let mut metrics = AgilesimMetrics::default();
            assert_eq!(
                agilesim_run(scenario, AgilesimMode::Decentralized, &mut metrics),
                AgilesimStatus::Ok
            );
            assert_eq!(metrics.seed, 7);
            assert!(metrics.observations > 0);
            assert!(metrics.pct_gp_observed > 0.0);

            let mut text_out = ptr::null_mut();
            assert_eq!(
                agilesim_run_to_text(scenario, AgilesimMode::Nonagile, &mut text_out),
                AgilesimStatus::Ok
            );
            assert!(!text_out.is_null());
            let doc = CStr::from_ptr(text_out).to_str().unwrap();
            assert!(doc.contains("mode = nonagile"));
            agilesim_string_free(text_out);

            agilesim_scenario_free(scenario);
        }
    }
}
