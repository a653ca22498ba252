//! Compile and run a small C program against the generated header and the
//! static library. Skips quietly when no C compiler is on the path.

use std::path::PathBuf;
use std::process::Command;

fn find_cc() -> Option<&'static str> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc).arg("--version").output().is_ok_and(|o| o.status.success()) {
            return Some(cc);
        }
    }
    None
}

/// target/<profile> directory holding libagilesim_ffi.a for this test build.
fn lib_dir() -> Option<PathBuf> {
    // integration tests live in target/<profile>/deps
    let exe = std::env::current_exe().ok()?;
    let deps = exe.parent()?;
    let profile = deps.parent()?;
    let lib = profile.join("libagilesim_ffi.a");
    lib.exists().then(|| profile.to_path_buf())
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <math.h>
#include "agilesim.h"

int main(void) {
    if (fabs(agilesim_slew_time_s(30.0, 0.0) - 10.2913) > 1e-3) return 1;
    if (agilesim_ttl_for_priority_s(1) != 900.0) return 2;

    AgilesimScenario *scenario = NULL;
    const char *toml =
        "horizon_s = 1200.0\n"
        "[constellation]\n"
        "planes = 1\n"
        "sats_per_plane = 2\n"
        "[[regions]]\n"
        "name = \"eq\"\n"
        "center_lat_deg = 0.0\n"
        "center_lon_deg = 0.0\n";
    if (agilesim_scenario_from_toml(toml, &scenario) != AgilesimStatus_Ok) return 3;
    if (agilesim_scenario_set_seed(scenario, 11) != AgilesimStatus_Ok) return 4;

    AgilesimMetrics metrics;
    if (agilesim_run(scenario, AgilesimMode_Decentralized, &metrics) != AgilesimStatus_Ok)
        return 5;
    if (metrics.seed != 11 || metrics.observations == 0) return 6;

    agilesim_scenario_free(scenario);
    printf("ok %llu\n", (unsigned long long)metrics.observations);
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let Some(cc) = find_cc() else {
        eprintln!("skipping: no C compiler available");
        return;
    };
    let Some(libs) = lib_dir() else {
        eprintln!("skipping: libagilesim_ffi.a not found next to the test binary");
        return;
    };
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = std::env::temp_dir().join(format!("agilesim-cffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("smoke.c");
    let bin = dir.join("smoke");
    std::fs::write(&src, C_PROGRAM).unwrap();

    let compile = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg("-L")
        .arg(&libs)
        .args(["-lagilesim_ffi", "-lm", "-lpthread", "-ldl"])
        .arg("-o")
        .arg(&bin)
        .output()
        .expect("compiler invocation");
    assert!(
        compile.status.success(),
        "C compile failed:\n{}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&bin).output().expect("run C smoke test");
    assert!(
        run.status.success(),
        "C smoke test exited {:?}: {}",
        run.status.code(),
        String::from_utf8_lossy(&run.stdout)
    );
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
    let _ = std::fs::remove_dir_all(&dir);
}
