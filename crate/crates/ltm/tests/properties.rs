//! Property tests for the structural invariants.

use ltm::config::{emit_config, parse_config};
use ltm::odmr::{LorentzianFit, Resonance};
use ltm::params::{pump_power_to_rate, ModelParams};
use ltm::sensitivity::{optimal_operating_point, psnl_general, psnl_pointwise};
use ltm::steady::{mecsel_steady_state, nv_steady_state, solve_photon_number};
use proptest::prelude::*;

fn valid_params() -> impl Strategy<Value = ModelParams> {
    (
        (1e6..1e9f64, 1e6..1e9f64, 1e5..5e8f64, 1e5..5e8f64),
        (1e8..5e10f64, 1e5..5e7f64, 1e5..5e7f64, 1e4..5e7f64),
        (0.0..5e6f64, 1e3..5e6f64, -1e9..1e9f64, 0.0..1e9f64),
        (1e10..1e14f64, 1e10..1e14f64),
        (1e5..1e7f64, 1.6e8..9e8f64, 0.0..5e7f64),
        (1e7..1.5e8f64, 0.1..1.0f64),
    )
        .prop_map(
            |(
                (l21, l43, l25, l45),
                (l56, l61, l63, gamma13),
                (lambda_nv, omega, delta, g_s),
                (n_nv, n_2m),
                (l_eg, g_eg, lambda_ge),
                (kappa, mirror_fraction),
            )| {
                let mut p = ModelParams::default();
                p.nv.l21 = l21;
                p.nv.l43 = l43;
                p.nv.l25 = l25;
                p.nv.l45 = l45;
                p.nv.l56 = l56;
                p.nv.l61 = l61;
                p.nv.l63 = l63;
                p.nv.gamma13 = gamma13;
                p.nv.lambda_nv = lambda_nv;
                p.nv.omega = omega;
                p.nv.delta = delta;
                p.nv.g_s = g_s;
                p.nv.n_nv = n_nv;
                p.mecsel.n_2m = n_2m;
                p.mecsel.l_eg = l_eg;
                p.mecsel.g_eg = g_eg;
                p.mecsel.lambda_ge = lambda_ge;
                p.cavity.kappa = kappa;
                p.cavity.kappa_mirror = kappa * mirror_fraction;
                p
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trip_is_bit_exact(params in valid_params()) {
        let reloaded = parse_config(&emit_config(&params)).unwrap();
        prop_assert_eq!(params, reloaded);
    }

    #[test]
    fn pump_rate_is_linear(power in 0.0..100.0f64, scale in 0.0..50.0f64, rate in 1e3..1e8f64) {
        let direct = pump_power_to_rate(scale * power, rate).unwrap();
        let scaled = scale * pump_power_to_rate(power, rate).unwrap();
        let magnitude = direct.abs().max(scaled.abs()).max(1e-300);
        prop_assert!((direct - scaled).abs() / magnitude < 1e-12);
    }

    #[test]
    fn traces_are_preserved(params in valid_params(), n_exp in 0.0..12.0f64) {
        let n = 10f64.powf(n_exp) - 1.0;
        let nv = nv_steady_state(&params, n).unwrap();
        prop_assert!((nv.trace() - 1.0).abs() < 1e-10);
        let mecsel = mecsel_steady_state(&params, n).unwrap();
        prop_assert!((mecsel.rho_gg + mecsel.rho_ee - 1.0).abs() < 1e-10);
    }

    #[test]
    fn solved_states_keep_their_traces(params in valid_params()) {
        match solve_photon_number(&params) {
            Ok(solution) => {
                prop_assert!((solution.nv.trace() - 1.0).abs() < 1e-10);
                prop_assert!((solution.mecsel.rho_gg + solution.mecsel.rho_ee - 1.0).abs() < 1e-10);
                if solution.lasing {
                    prop_assert!(solution.stability_derivative < 0.0);
                }
            }
            // extreme corners where the absorber bleaches before the gain
            // saturates are reported, not resolved
            Err(ltm::Error::NonMonotoneGain { .. }) => {}
            Err(other) => prop_assert!(false, "unexpected error {other}"),
        }
    }

    #[test]
    fn general_form_tracks_the_pointwise_minimum(
        fwhm in 1e5..1e8f64,
        contrast in 0.01..0.999f64,
        baseline_exp in 12.0..18.0f64,
    ) {
        let baseline = 10f64.powf(baseline_exp);
        let fit = LorentzianFit::from_parts(
            baseline,
            vec![Resonance { center: 0.0, fwhm, contrast }],
        );
        let constants = Default::default();
        let mut best = f64::INFINITY;
        let mut best_nu = 0.0;
        for i in 1..=4000 {
            let nu = fwhm * i as f64 / 4000.0;
            let eta = psnl_pointwise(&fit, nu, &constants);
            if eta < best {
                best = eta;
                best_nu = nu;
            }
        }
        let general = psnl_general(fwhm, contrast, baseline, &constants).unwrap();
        prop_assert!((best - general).abs() / general < 0.01);
        let nu_opt = optimal_operating_point(fwhm, contrast).unwrap();
        prop_assert!((best_nu - nu_opt).abs() / fwhm < 1e-3);
    }
}
