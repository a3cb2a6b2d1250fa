use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use spinchain_ffi::*;

fn last_error() -> String {
    let p = spinchain_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn scenario() -> *mut SpinchainScenario {
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { spinchain_scenario_new(&mut s) },
        SpinchainStatus::Ok
    );
    assert!(!s.is_null());
    s
}

#[test]
fn short_closed_run() {
    let s = scenario();
    unsafe {
        assert_eq!(
            spinchain_scenario_set_gamma_mhz(s, 0.0),
            SpinchainStatus::Ok
        );
        assert_eq!(spinchain_scenario_set_horizon(s, 2.5), SpinchainStatus::Ok);
        assert_eq!(
            spinchain_scenario_set_mode(s, SpinchainMode::Markovian),
            SpinchainStatus::Ok
        );
        assert_eq!(
            spinchain_scenario_set_integrator(s, 0.0, 10_000),
            SpinchainStatus::Ok
        );

        let mut t = ptr::null_mut();
        assert_eq!(spinchain_scenario_run(s, &mut t), SpinchainStatus::Ok);
        assert_eq!(spinchain_trajectory_dim(t), 8);
        let n = spinchain_trajectory_len(t);
        assert!(n >= 2);

        let mut sample = SpinchainSample::default();
        assert_eq!(
            spinchain_trajectory_sample(t, n - 1, &mut sample),
            SpinchainStatus::Ok
        );
        assert!((sample.t - 2.5).abs() < 1e-12);
        assert!((sample.purity - 1.0).abs() < 1e-9);

        // the pi/2 pulse splits |000> evenly with |010>
        let mut pops = [0.0; 8];
        assert_eq!(
            spinchain_trajectory_populations(t, n - 1, pops.as_mut_ptr(), 8),
            SpinchainStatus::Ok
        );
        assert!(
            (pops[0] - 0.5).abs() < 1e-3 && (pops[2] - 0.5).abs() < 1e-3,
            "{pops:?}"
        );

        let (mut re, mut im) = ([0.0; 64], [0.0; 64]);
        assert_eq!(
            spinchain_trajectory_final_state(t, re.as_mut_ptr(), im.as_mut_ptr(), 64),
            SpinchainStatus::Ok
        );
        let trace: f64 = (0..8).map(|i| re[i * 9]).sum();
        assert!((trace - 1.0).abs() < 1e-10);
        assert!((re[2 * 8] - re[2]).abs() < 1e-14 && (im[2 * 8] + im[2]).abs() < 1e-14);

        let mut peak = SpinchainPeak::default();
        assert_eq!(spinchain_trajectory_peak(t, &mut peak), SpinchainStatus::Ok);
        assert!(peak.trace_dev < 1e-10);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.csv");
        let cpath = CString::new(path.to_str().unwrap()).unwrap();
        assert_eq!(
            spinchain_trajectory_write_csv(t, cpath.as_ptr()),
            SpinchainStatus::Ok
        );
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t_us,rho_11"));
        assert_eq!(text.lines().count(), n + 1);

        assert_eq!(
            spinchain_trajectory_sample(t, n, &mut sample),
            SpinchainStatus::OutOfRange
        );
        assert_eq!(
            spinchain_trajectory_populations(t, 0, pops.as_mut_ptr(), 4),
            SpinchainStatus::OutOfRange
        );

        spinchain_trajectory_free(t);
        spinchain_scenario_free(s);
    }
}

#[test]
fn toml_scenarios() {
    let good = CString::new("[bath]\ntemperature_k = 300.0\npreset = \"lo\"\n").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { spinchain_scenario_from_toml(good.as_ptr(), &mut s) },
        SpinchainStatus::Ok
    );
    unsafe { spinchain_scenario_free(s) };

    let bad = CString::new("[bath]\nwarmth = 3\n").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { spinchain_scenario_from_toml(bad.as_ptr(), &mut s) },
        SpinchainStatus::Config
    );
    assert!(s.is_null());
    assert!(last_error().contains("warmth"), "{}", last_error());
}

#[test]
fn errors_are_reported() {
    let s = scenario();
    unsafe {
        assert_eq!(
            spinchain_scenario_set_temperature(s, f64::NAN),
            SpinchainStatus::InvalidArgument
        );
        assert_eq!(spinchain_scenario_set_horizon(s, -1.0), SpinchainStatus::Ok);
        let mut t = ptr::null_mut();
        assert_eq!(spinchain_scenario_run(s, &mut t), SpinchainStatus::Config);
        assert!(t.is_null());
        assert!(last_error().contains("horizon"));

        assert_eq!(
            spinchain_scenario_run(ptr::null(), &mut t),
            SpinchainStatus::NullPointer
        );
        assert_eq!(
            spinchain_scenario_set_rabi_mhz(ptr::null_mut(), 0.1),
            SpinchainStatus::NullPointer
        );
        assert_eq!(
            spinchain_scenario_new(ptr::null_mut()),
            SpinchainStatus::NullPointer
        );
        assert_eq!(spinchain_trajectory_len(ptr::null()), 0);
        spinchain_trajectory_free(ptr::null_mut());
        spinchain_scenario_free(s);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(spinchain_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/spinchain.h");
    let text = std::fs::read_to_string(header).unwrap();
    for sym in [
        "spinchain_scenario_new",
        "spinchain_scenario_run",
        "spinchain_trajectory_final_state",
        "spinchain_last_error",
        "SPINCHAIN_STATUS_INTEGRITY",
    ] {
        assert!(text.contains(sym), "header lacks {sym}");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"spinchain.h\"\nint main(void) { SpinchainScenario *s = 0; \
         return spinchain_scenario_new(&s) == SPINCHAIN_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let status = match Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&src)
        .status()
    {
        Ok(s) => s,
        Err(e) => {
            eprintln!("no C compiler available ({e}), syntax check skipped");
            return;
        }
    };
    assert!(status.success());
}
