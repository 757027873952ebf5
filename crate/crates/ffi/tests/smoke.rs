//! Exercises the C surface end to end through the extern functions.

use std::ffi::{CStr, CString};
use std::ptr;

use dfrc_beam_ffi::*;

fn json(gamma_db: f64) -> CString {
    CString::new(format!(
        r#"{{
            "schema_version": 1,
            "n_antennas": 4,
            "theta0_deg": 20.0,
            "n_users": 1,
            "gamma_db": {gamma_db},
            "outage_p": 0.1,
            "sigma_delta": 0.1,
            "seed": 3,
            "mc_trials": 50
        }}"#
    ))
    .unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(dfrc_last_error_message()).to_string_lossy().into_owned() }
}

#[test]
fn version_is_a_static_string() {
    let v = unsafe { CStr::from_ptr(dfrc_version()) };
    assert!(!v.to_str().unwrap().is_empty());
}

#[test]
fn solve_round_trip_reads_back_metrics_and_beams() {
    unsafe {
        let scenario = dfrc_scenario_from_json(json(0.0).as_ptr());
        assert!(!scenario.is_null(), "{}", last_error());
        assert_eq!(dfrc_scenario_n_antennas(scenario), 4);
        assert_eq!(dfrc_scenario_n_users(scenario), 1);

        let mut solution: *mut DfrcSolution = ptr::null_mut();
        let code = dfrc_solve(scenario, &mut solution);
        assert_eq!(code, DFRC_OK, "{}", last_error());
        assert_eq!(dfrc_solution_status(solution), DFRC_OK);
        assert!(dfrc_solution_feasible(solution));

        let objective = dfrc_solution_objective(solution);
        assert!(objective.is_finite() && objective > 0.0);
        assert!(dfrc_solution_sum_rate(solution) > 0.0);
        assert!(dfrc_solution_user_rate(solution, 0) > 0.0);
        assert!(dfrc_solution_p_detect(solution) > 0.0);
        assert!(dfrc_solution_ismr_inv_db(solution).is_finite());
        let outage = dfrc_solution_empirical_outage(solution, 0);
        assert!((0.0..=1.0).contains(&outage));

        assert_eq!(dfrc_solution_n_users(solution), 1);
        let n = dfrc_solution_n_antennas(solution);
        assert_eq!(n, 4);
        let mut re = vec![0.0f64; n];
        let mut im = vec![0.0f64; n];
        assert_eq!(
            dfrc_solution_beam(solution, 0, re.as_mut_ptr(), im.as_mut_ptr(), n),
            DFRC_OK
        );
        let power: f64 = re.iter().zip(&im).map(|(a, b)| a * a + b * b).sum();
        assert!(power > 0.0 && power <= 1.0 + 1e-9);

        dfrc_solution_free(solution);
        dfrc_scenario_free(scenario);
    }
}

#[test]
fn infeasible_scenario_returns_the_infeasible_code_with_a_handle() {
    unsafe {
        let scenario = dfrc_scenario_from_json(json(30.0).as_ptr());
        assert!(!scenario.is_null(), "{}", last_error());
        let mut solution: *mut DfrcSolution = ptr::null_mut();
        let code = dfrc_solve(scenario, &mut solution);
        assert_eq!(code, DFRC_ERR_INFEASIBLE);
        assert!(!solution.is_null());
        assert_eq!(dfrc_solution_status(solution), DFRC_ERR_INFEASIBLE);
        assert!(!dfrc_solution_feasible(solution));
        assert!(dfrc_solution_objective(solution).is_nan());
        dfrc_solution_free(solution);
        dfrc_scenario_free(scenario);
    }
}

#[test]
fn malformed_and_invalid_json_set_the_config_code() {
    unsafe {
        let garbled = CString::new("{not json").unwrap();
        assert!(dfrc_scenario_from_json(garbled.as_ptr()).is_null());
        assert!(!last_error().is_empty());

        let bad_field = CString::new(
            r#"{"schema_version": 1, "n_antennas": 4, "theta0_deg": 20.0,
                "n_users": 1, "gamma_db": 0.0, "outage_p": 1.5, "sigma_delta": 0.1}"#,
        )
        .unwrap();
        assert!(dfrc_scenario_from_json(bad_field.as_ptr()).is_null());
        assert!(last_error().contains("outage"));
    }
}

#[test]
fn null_and_bad_index_paths_are_safe() {
    unsafe {
        assert!(dfrc_scenario_from_json(ptr::null()).is_null());
        assert_eq!(dfrc_scenario_n_antennas(ptr::null()), 0);
        assert_eq!(dfrc_solution_status(ptr::null()), DFRC_ERR_INTERNAL);
        assert!(dfrc_solution_objective(ptr::null()).is_nan());
        assert_eq!(dfrc_solve(ptr::null(), ptr::null_mut()), DFRC_ERR_INTERNAL);

        let scenario = dfrc_scenario_from_json(json(0.0).as_ptr());
        let mut solution: *mut DfrcSolution = ptr::null_mut();
        assert_eq!(dfrc_solve(scenario, &mut solution), DFRC_OK);
        assert!(dfrc_solution_user_rate(solution, 9).is_nan());
        let mut buf = [0.0f64; 2];
        assert_eq!(
            dfrc_solution_beam(solution, 0, buf.as_mut_ptr(), buf.as_mut_ptr(), 2),
            DFRC_ERR_CONFIG
        );
        dfrc_solution_free(solution);
        dfrc_scenario_free(scenario);
        dfrc_solution_free(ptr::null_mut());
        dfrc_scenario_free(ptr::null_mut());
    }
}

#[test]
fn generated_header_declares_the_surface() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("include")
        .join("dfrc_beam.h");
    let text = std::fs::read_to_string(header).expect("header generated at build time");
    for symbol in [
        "dfrc_scenario_from_json",
        "dfrc_solve",
        "dfrc_solution_beam",
        "dfrc_last_error_message",
        "DFRC_ERR_INFEASIBLE",
        "typedef struct DfrcScenario DfrcScenario;",
    ] {
        assert!(text.contains(symbol), "header is missing {symbol}");
    }
}
