//! The C ABI exercised from Rust and from a C program built against the
//! generated header.

use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use maglev_core::harness::{simulate, Record, ScenarioConfig, TrajectoryLog};
use maglev_ffi::*;

fn last_error() -> String {
    let p = maglev_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn short_scenario(sensorless: bool) -> *mut MaglevScenario {
    let s = maglev_scenario_default(sensorless);
    assert_eq!(unsafe { maglev_scenario_set_duration(s, 0.1) }, MaglevStatus::Ok);
    s
}

#[test]
fn simulation_matches_the_library() {
    let s = short_scenario(false);
    unsafe {
        assert_eq!(maglev_scenario_set_seed(s, 11), MaglevStatus::Ok);
        let mut log = ptr::null_mut();
        assert_eq!(maglev_simulate(s, &mut log), MaglevStatus::Ok);
        let mut cfg = ScenarioConfig::simulation();
        cfg.sim.duration = 0.1;
        cfg.noise.seed = 11;
        let expected = simulate(&cfg).unwrap();
        assert_eq!(maglev_log_len(log), expected.len());
        assert_eq!(maglev_log_field_count(), Record::FIELDS.len());
        for (i, name) in Record::FIELDS.iter().enumerate() {
            assert_eq!(CStr::from_ptr(maglev_log_field_name(i)).to_str().unwrap(), *name);
        }
        assert!(maglev_log_field_name(Record::FIELDS.len()).is_null());

        let mut index = 0;
        let name = CString::new("r_hat").unwrap();
        assert_eq!(maglev_log_field_index(name.as_ptr(), &mut index), MaglevStatus::Ok);
        let mut column = vec![0.0; expected.len()];
        assert_eq!(
            maglev_log_column(log, index, column.as_mut_ptr(), column.len()),
            MaglevStatus::Ok
        );
        assert_eq!(Some(column), expected.column("r_hat"));
        let mut value = 0.0;
        assert_eq!(maglev_log_value(log, 3, index, &mut value), MaglevStatus::Ok);
        assert_eq!(value, expected.records[3].r_hat);

        let mut metrics = MaglevMetrics::default();
        assert_eq!(maglev_log_metrics(log, s, &mut metrics), MaglevStatus::Ok);
        maglev_log_free(log);
        maglev_scenario_free(s);
    }
}

#[test]
fn setters_validate_their_arguments() {
    let s = short_scenario(false);
    unsafe {
        assert_eq!(maglev_scenario_set_epsilon(s, 0.0), MaglevStatus::InvalidArgument);
        assert!(last_error().contains("epsilon"));
        assert_eq!(maglev_scenario_set_epsilon(s, f64::NAN), MaglevStatus::InvalidArgument);
        assert_eq!(maglev_scenario_set_duration(s, -1.0), MaglevStatus::InvalidArgument);
        assert_eq!(
            maglev_scenario_set_noise_amplitude(s, -0.1),
            MaglevStatus::InvalidArgument
        );
        assert_eq!(
            maglev_scenario_set_steps_per_period(s, 30),
            MaglevStatus::InvalidArgument
        );
        assert_eq!(maglev_scenario_set_steps_per_period(s, 400), MaglevStatus::Ok);
        assert_eq!(maglev_scenario_set_epsilon(s, 1.0 / 600.0), MaglevStatus::Ok);
        assert_eq!(
            maglev_scenario_set_controller(s, MaglevController::Backstepping),
            MaglevStatus::Ok
        );
        assert_eq!(
            maglev_scenario_set_observer(s, MaglevObserver::Luenberger),
            MaglevStatus::Ok
        );

        let mut text = ptr::null_mut();
        assert_eq!(maglev_scenario_to_toml(s, &mut text), MaglevStatus::Ok);
        let cfg = ScenarioConfig::from_toml_str(CStr::from_ptr(text).to_str().unwrap()).unwrap();
        maglev_string_free(text);
        assert_eq!(cfg.sim.steps_per_period, 400);
        assert_eq!(cfg.injection.epsilon, 1.0 / 600.0);
        assert_eq!(cfg.controller.kind, maglev_core::harness::ControllerKind::Backstepping);
        assert_eq!(cfg.observer.momenta, maglev_core::observer::MomentaVariant::Luenberger);
        maglev_scenario_free(s);
    }
}

#[test]
fn toml_round_trip_and_rejection() {
    let text = CString::new(ScenarioConfig::sensorless().to_toml_string()).unwrap();
    let bad = CString::new("[plant]\nm = 1\n").unwrap();
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(maglev_scenario_from_toml(text.as_ptr(), &mut s), MaglevStatus::Ok);
        assert!(!s.is_null());
        maglev_scenario_free(s);
        assert_eq!(
            maglev_scenario_from_toml(bad.as_ptr(), &mut s),
            MaglevStatus::InvalidConfig
        );
        assert!(s.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(
            maglev_scenario_from_toml(ptr::null(), &mut s),
            MaglevStatus::NullPointer
        );
    }
}

#[test]
fn crash_still_returns_the_partial_log() {
    let mut cfg = ScenarioConfig::simulation();
    cfg.sim.initial_state = Some([cfg.plant.equilibrium_flux(), -0.002, 1.0]);
    let text = CString::new(cfg.to_toml_string()).unwrap();
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(maglev_scenario_from_toml(text.as_ptr(), &mut s), MaglevStatus::Ok);
        let mut log = ptr::null_mut();
        assert_eq!(maglev_simulate(s, &mut log), MaglevStatus::Crash);
        assert!(last_error().contains("magnet"));
        assert!(maglev_log_len(log) > 0);
        maglev_log_free(log);
        maglev_scenario_free(s);
    }
}

#[test]
fn null_handles_and_bad_indices_are_reported() {
    unsafe {
        let mut log = ptr::null_mut();
        assert_eq!(maglev_simulate(ptr::null(), &mut log), MaglevStatus::NullPointer);
        assert!(log.is_null());
        assert_eq!(maglev_scenario_set_seed(ptr::null_mut(), 1), MaglevStatus::NullPointer);
        assert_eq!(maglev_log_len(ptr::null()), 0);
        let mut v = 0.0;
        assert_eq!(maglev_log_value(ptr::null(), 0, 0, &mut v), MaglevStatus::NullPointer);
        maglev_log_free(ptr::null_mut());
        maglev_scenario_free(ptr::null_mut());
        maglev_string_free(ptr::null_mut());

        let s = short_scenario(false);
        assert_eq!(maglev_simulate(s, &mut log), MaglevStatus::Ok);
        let n = maglev_log_len(log);
        assert_eq!(maglev_log_value(log, n, 0, &mut v), MaglevStatus::OutOfRange);
        assert_eq!(maglev_log_value(log, 0, 99, &mut v), MaglevStatus::OutOfRange);
        let mut small = vec![0.0; n - 1];
        assert_eq!(
            maglev_log_column(log, 0, small.as_mut_ptr(), small.len()),
            MaglevStatus::OutOfRange
        );
        let unknown = CString::new("nope").unwrap();
        let mut index = 0;
        assert_eq!(
            maglev_log_field_index(unknown.as_ptr(), &mut index),
            MaglevStatus::OutOfRange
        );
        let dir = CString::new("/nonexistent-dir/x/log.csv").unwrap();
        assert_eq!(maglev_log_write_csv(log, dir.as_ptr()), MaglevStatus::Io);
        maglev_log_free(log);
        maglev_scenario_free(s);
    }
}

/// `target/<profile>` holding the static library built alongside this test.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(|deps| deps.parent()).unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_header_and_static_library() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let lib = artifact_dir().join("libmaglev_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c11")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("a C compiler is available");
    assert!(status.success());
    let csv = dir.path().join("log.csv");
    let out = Command::new(&exe).arg(&csv).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let log = TrajectoryLog::import_csv(&csv).unwrap();
    assert_eq!(stdout.split_whitespace().next().unwrap(), log.len().to_string());
    assert!(stdout.trim_end().ends_with("x1"));
}
