//! Checks the linear-algebra steady-state solver against direct time
//! integration of the equations of motion.

mod common;

use ltm::params::ModelParams;
use ltm::steady::{nv_steady_state, solve_photon_number};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{integrate_nv_block, integrate_to, log_uniform};

#[test]
fn nv_block_matches_long_time_integration() {
    // Table rates, Λ_NV = 0.52 MHz, Ω = 0, N = 0
    let mut p = ModelParams::default();
    p.nv.omega = 0.0;
    p.nv.lambda_nv = 0.52e6;

    let solved = nv_steady_state(&p, 0.0).unwrap();
    // t ≫ 1/L61 and ≫ 1/Λ_NV: integrate to 60 pump times
    let ode = integrate_nv_block(&p, 0.0, 60.0 / p.nv.lambda_nv);

    assert!((solved.rho66 - ode[7]).abs() < 1e-7, "rho66 {} vs ode {}", solved.rho66, ode[7]);
    assert!((solved.rho11 - ode[2]).abs() < 1e-6);
    assert!((solved.rho33 - ode[4]).abs() < 1e-6);
    assert!((solved.rho22 - ode[3]).abs() < 1e-7);
    assert!((solved.rho44 - ode[5]).abs() < 1e-7);
    assert!((solved.rho55 - ode[6]).abs() < 1e-7);
}

#[test]
fn nv_block_matches_integration_with_drive_and_photons() {
    let mut p = ModelParams::default();
    p.nv.delta = 3e6;
    let solved = nv_steady_state(&p, 5e9).unwrap();
    let ode = integrate_nv_block(&p, 5e9, 60.0 / p.nv.lambda_nv);
    for (i, &value) in [
        solved.rho13_re,
        solved.rho13_im,
        solved.rho11,
        solved.rho22,
        solved.rho33,
        solved.rho44,
        solved.rho55,
        solved.rho66,
    ]
    .iter()
    .enumerate()
    {
        assert!(
            (value - ode[i]).abs() < 1e-6,
            "component {i}: solver {value} vs ode {}",
            ode[i]
        );
    }
}

#[test]
fn joint_system_converges_to_the_solver_solution() {
    // ten randomized valid parameter sets, integrated jointly (including Ṅ,
    // photon seed N(0) = 1); the long-time photon number must match the
    // root-finding solver within 0.1 %
    let mut rng = ChaCha8Rng::seed_from_u64(0x0DE0);
    let mut lasing_seen = 0;
    let mut off_seen = 0;
    for case in 0..10 {
        let mut p = ModelParams::default();
        // keep the stiffest rate moderate so the explicit integrator stays fast
        p.nv.l56 = log_uniform(&mut rng, 5e8, 2e9);
        p.nv.lambda_nv = log_uniform(&mut rng, 0.2e6, 1.2e6);
        p.nv.omega = log_uniform(&mut rng, 0.3e6, 2e6);
        p.nv.delta = if rng.gen_bool(0.5) { 0.0 } else { log_uniform(&mut rng, 1e6, 3e7) };
        p.nv.g_s = log_uniform(&mut rng, 1e8, 8e8);
        p.mecsel.l_eg = log_uniform(&mut rng, 0.8e6, 6e6);
        p.mecsel.g_eg = log_uniform(&mut rng, 1.7e8, 4e8);
        p.mecsel.lambda_ge = log_uniform(&mut rng, 8e6, 4e7);
        p.validate().unwrap();

        let solution = solve_photon_number(&p).unwrap();
        let state = integrate_to(&p, 2e-4, 1.0);
        let n_ode = state[10];
        if solution.lasing {
            lasing_seen += 1;
            let rel = (n_ode - solution.n_photons).abs() / solution.n_photons;
            assert!(
                rel < 1e-3,
                "case {case}: ode N {n_ode:.6e} vs solver {:.6e} (rel {rel:.2e})",
                solution.n_photons
            );
        } else {
            off_seen += 1;
            assert!(
                n_ode < 1.0,
                "case {case}: solver says no lasing but ode grew to {n_ode:.3e}"
            );
        }
    }
    assert!(lasing_seen >= 3, "want several lasing draws, got {lasing_seen}");
    assert!(lasing_seen + off_seen == 10);
}
