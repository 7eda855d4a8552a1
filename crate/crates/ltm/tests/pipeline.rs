//! Tests over the shipped configs and example data files.

use std::fs;
use std::path::{Path, PathBuf};

use ltm::calibration::{fit_mecsel_params, fit_singlet_coupling};
use ltm::config::load_config;
use ltm::io::{parse_odmr_csv, parse_power_curve_csv, parse_sensor_registry_csv};
use ltm::laser::extract_threshold;
use ltm::odmr::{contrast_report, detect_peaks, fit_lorentzians};
use ltm::params::{photon_energy, ModelParams};
use ltm::sensitivity::analyze_report;

fn workspace_file(relative: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(relative)
}

#[test]
fn canonical_config_matches_the_builtin_defaults() {
    let params = load_config(workspace_file("configs/table_s1.cfg")).unwrap();
    assert_eq!(params, ModelParams::default());
}

#[test]
fn second_dataset_config_loads() {
    let params = load_config(workspace_file("configs/fig2b.cfg")).unwrap();
    assert_eq!(params.mecsel.l_eg, 5.1e6);
    assert_eq!(params.mecsel.g_eg, 354e6);
    assert_eq!(params.nv.delta, 0.87e9);
}

#[test]
fn shipped_gray_data_calibrates_to_the_reference_parameters() {
    let text = fs::read_to_string(workspace_file("data/fig2a_gray.csv")).unwrap();
    let curve = parse_power_curve_csv(&text).unwrap();
    let result = fit_mecsel_params(&curve, &ModelParams::default()).unwrap();
    let l_eg = result.fitted["mecsel.L_eg"].value;
    let g_eg = result.fitted["mecsel.G_eg"].value;
    assert!((l_eg - 1.26e6).abs() / 1.26e6 < 0.05);
    assert!((g_eg - 188.3e6).abs() / 188.3e6 < 0.05);
}

#[test]
fn shipped_green_data_recovers_the_singlet_coupling() {
    let text = fs::read_to_string(workspace_file("data/fig2a_green.csv")).unwrap();
    let curve = parse_power_curve_csv(&text).unwrap();
    let mut start = ModelParams::default();
    start.nv.delta = 0.87e9;
    let result = fit_singlet_coupling(&curve, &start).unwrap();
    let g_s = result.fitted["nv.G_S"].value;
    assert!((g_s - 463e6).abs() / 463e6 < 0.05, "G_S {g_s}");
}

#[test]
fn shipped_nv_sweeps_turn_off_in_order() {
    let green = parse_power_curve_csv(
        &fs::read_to_string(workspace_file("data/fig2b_green.csv")).unwrap(),
    )
    .unwrap();
    let blue = parse_power_curve_csv(
        &fs::read_to_string(workspace_file("data/fig2b_blue.csv")).unwrap(),
    )
    .unwrap();
    let off = extract_threshold(&green, 10).unwrap().threshold;
    let resonant = extract_threshold(&blue, 10).unwrap().threshold;
    assert!((off - 4.3).abs() / 4.3 < 0.15, "turn-off {off}");
    assert!(resonant < off);
}

#[test]
fn shipped_odmr_trace_fits_to_the_published_contrast() {
    let text = fs::read_to_string(workspace_file("data/fig3a_red.csv")).unwrap();
    let spectrum = parse_odmr_csv(&text).unwrap();
    let guesses = detect_peaks(&spectrum, 0.05).unwrap();
    assert_eq!(guesses.len(), 2);

    let fit = fit_lorentzians(&spectrum, 2, None, 1042e-9).unwrap();
    let report = contrast_report(&fit);
    // deeper resonance carries 97 % contrast on a 16 mW baseline
    assert!((report[0].1 - 0.97).abs() < 0.005, "contrast {}", report[0].1);
    let expected_baseline = 16e-3 / photon_energy(1042e-9).unwrap();
    assert!((fit.baseline - expected_baseline).abs() / expected_baseline < 0.01);
    // the noise floor shows up as a non-vanishing reported residual
    assert!(fit.residual_rms > 0.0);

    let sensitivity = analyze_report(&fit, &Default::default()).unwrap();
    assert!(
        sensitivity.eta_general > 2e-13 && sensitivity.eta_general < 1.5e-12,
        "eta {}",
        sensitivity.eta_general
    );
    assert!((sensitivity.dynamic_range - 280e-6).abs() / 280e-6 < 0.05);
}

#[test]
fn shipped_registry_parses_with_reference_row() {
    let text = fs::read_to_string(workspace_file("data/sensor_registry.csv")).unwrap();
    let registry = parse_sensor_registry_csv(&text).unwrap();
    assert!(registry.iter().any(|p| p.name == "ltm"));
    assert!(registry.iter().any(|p| p.flux_concentrator));
    assert!(registry.iter().any(|p| p.closed_loop));
}
