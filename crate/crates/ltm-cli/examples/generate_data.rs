//! Regenerates the example datasets under `data/` deterministically.
//!
//! Run from anywhere in the workspace:
//! `cargo run -p ltm-cli --example generate_data`

use std::fs;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use ltm::io::{write_odmr_csv, write_power_curve_csv, write_sensor_registry_csv};
use ltm::laser::{sweep_mecsel_pump, sweep_nv_pump, uniform_grid};
use ltm::odmr::{LorentzianFit, OdmrSpectrum, Resonance};
use ltm::params::{photon_energy, ModelParams};
use ltm::sensitivity::SensorPoint;

fn add_noise(points: &mut [(f64, f64)], sigma: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).unwrap();
    for p in points.iter_mut() {
        p.1 = (p.1 * (1.0 + normal.sample(&mut rng))).max(0.0);
    }
}

fn main() {
    let data_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data");
    fs::create_dir_all(&data_dir).unwrap();

    // MECSEL-pump sweeps: NV unpumped / off-resonant drive / resonant drive
    let grid = uniform_grid(0.0, 2.5, 101);
    let mut gray = ModelParams::default();
    gray.nv.lambda_nv = 0.0;
    let mut green = ModelParams::default();
    green.nv.delta = 0.87e9;
    let mut blue = ModelParams::default();
    blue.nv.delta = 0.0;
    let cases = [
        ("fig2a_gray.csv", gray, 1u64, "mecsel sweep, NV unpumped"),
        ("fig2a_green.csv", green, 2, "mecsel sweep, off-resonant drive"),
        ("fig2a_blue.csv", blue, 3, "mecsel sweep, resonant drive"),
    ];
    for (name, params, seed, label) in cases {
        let mut curve = sweep_mecsel_pump(&params, &grid).unwrap();
        curve.label = label.to_string();
        add_noise(&mut curve.points, 0.01, seed);
        fs::write(data_dir.join(name), write_power_curve_csv(&curve, true)).unwrap();
    }

    // NV-pump sweeps at fixed 1.3 W MECSEL pump (second dataset's MECSEL pair)
    let nv_grid = uniform_grid(0.0, 6.0, 121);
    let mut nv_base = ModelParams::default();
    nv_base.mecsel.l_eg = 5.1e6;
    nv_base.mecsel.g_eg = 354e6;
    nv_base.mecsel.lambda_ge = 13.52e6;
    nv_base.nv.delta = 0.87e9;
    let mut nv_green = sweep_nv_pump(&nv_base, &nv_grid).unwrap();
    nv_green.label = "nv sweep, off-resonant drive".to_string();
    add_noise(&mut nv_green.points, 0.01, 4);
    fs::write(
        data_dir.join("fig2b_green.csv"),
        write_power_curve_csv(&nv_green, true),
    )
    .unwrap();
    nv_base.nv.delta = 0.0;
    let mut nv_blue = sweep_nv_pump(&nv_base, &nv_grid).unwrap();
    nv_blue.label = "nv sweep, resonant drive".to_string();
    add_noise(&mut nv_blue.points, 0.01, 5);
    fs::write(
        data_dir.join("fig2b_blue.csv"),
        write_power_curve_csv(&nv_blue, true),
    )
    .unwrap();

    // two-dip ODMR trace: 16 mW baseline, deeper resonance at 97 % contrast
    let truth = LorentzianFit::from_parts(
        16e-3 / photon_energy(1042e-9).unwrap(),
        vec![
            Resonance {
                center: 2.82e9,
                fwhm: 7.85e6,
                contrast: 0.97,
            },
            Resonance {
                center: 2.92e9,
                fwhm: 9.4e6,
                contrast: 0.90,
            },
        ],
    );
    let e_ph = photon_energy(1042e-9).unwrap();
    let mut spectrum = OdmrSpectrum {
        points: (0..361)
            .map(|i| {
                let f = 2.78e9 + (2.96e9 - 2.78e9) * i as f64 / 360.0;
                (f, truth.value(f) * e_ph)
            })
            .collect(),
        params_snapshot: None,
        label: "two-dip odmr, 16 mW baseline".to_string(),
    };
    add_noise(&mut spectrum.points, 0.005, 6);
    fs::write(
        data_dir.join("fig3a_red.csv"),
        write_odmr_csv(&spectrum, true),
    )
    .unwrap();

    // illustrative sensor registry for the trade-off analysis
    let sensor = |name: &str, eta: f64, dr: f64, fc: bool, cl: bool| SensorPoint {
        name: name.to_string(),
        sensitivity: eta,
        dynamic_range: dr,
        flux_concentrator: fc,
        closed_loop: cl,
    };
    let registry = vec![
        sensor("nv-fluorescence-a", 4.6e-13, 2.6e-6, false, false),
        sensor("nv-fluorescence-b", 1.5e-12, 4.4e-6, false, false),
        sensor("nv-fluorescence-c", 2.1e-11, 1.8e-7, false, false),
        sensor("nv-wide-range", 2.0e-11, 2.5e-6, false, false),
        sensor("nv-closed-loop", 2.0e-11, 1.0e-3, false, true),
        sensor("nv-flux-concentrator", 9.0e-15, 1.5e-6, true, false),
        sensor("vapor-cell-a", 1.0e-14, 5.0e-9, false, false),
        sensor("vapor-cell-b", 6.0e-15, 1.0e-8, false, false),
        sensor("vapor-cell-closed-loop", 8.0e-15, 7.5e-8, false, true),
        sensor("ltm", 6.7e-13, 2.8e-4, false, false),
    ];
    fs::write(
        data_dir.join("sensor_registry.csv"),
        write_sensor_registry_csv(&registry),
    )
    .unwrap();

    println!("example data written to {}", data_dir.display());
}
