//! Shared test support: an independent fixed-step RK4 integration of the
//! full equations of motion (the oracle the steady-state solver is checked
//! against) and deterministic noise helpers.
//!
//! The integrator deliberately shares no code with the solver under test: it
//! implements the balance equations directly as time derivatives.

use ltm::params::ModelParams;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// State layout: [Re ρ13, Im ρ13, ρ11, ρ22, ρ33, ρ44, ρ55, ρ66, ρgg, ρee, N]
pub type FullState = [f64; 11];

pub fn equations_of_motion(p: &ModelParams, s: &FullState, out: &mut FullState) {
    let nv = &p.nv;
    let m = &p.mecsel;
    let gamma = nv.gamma13 + nv.lambda_nv;
    let (re, im) = (s[0], s[1]);
    let (r11, r22, r33, r44, r55, r66) = (s[2], s[3], s[4], s[5], s[6], s[7]);
    let (rgg, ree) = (s[8], s[9]);
    let n = s[10];
    let absorb = nv.g_s * r66 * n / nv.n_nv;
    let stim = m.g_eg * n / m.n_2m;

    out[0] = -gamma * re - nv.delta * im;
    out[1] = nv.delta * re - gamma * im + nv.omega * (r11 - r33);
    out[2] = -2.0 * nv.omega * im - nv.lambda_nv * r11 + nv.l21 * r22 + nv.l61 * r66;
    out[3] = nv.lambda_nv * r11 - (nv.l21 + nv.l25) * r22;
    out[4] = 2.0 * nv.omega * im - nv.lambda_nv * r33 + nv.l43 * r44 + nv.l63 * r66;
    out[5] = nv.lambda_nv * r33 - (nv.l43 + nv.l45) * r44;
    out[6] = nv.l25 * r22 + nv.l45 * r44 - nv.l56 * r55 + absorb;
    out[7] = nv.l56 * r55 - absorb - (nv.l61 + nv.l63) * r66;
    out[8] = -(m.lambda_ge + stim) * rgg + (m.l_eg + stim) * ree;
    out[9] = (m.lambda_ge + stim) * rgg - (m.l_eg + stim) * ree;
    out[10] = -nv.g_s * n * r66 + m.g_eg * n * (ree - rgg) - p.cavity.kappa * n;
}

fn rk4_step(p: &ModelParams, state: &mut FullState, dt: f64) {
    let mut k1 = [0.0; 11];
    let mut k2 = [0.0; 11];
    let mut k3 = [0.0; 11];
    let mut k4 = [0.0; 11];
    let mut tmp = [0.0; 11];
    equations_of_motion(p, state, &mut k1);
    for i in 0..11 {
        tmp[i] = state[i] + 0.5 * dt * k1[i];
    }
    equations_of_motion(p, &tmp, &mut k2);
    for i in 0..11 {
        tmp[i] = state[i] + 0.5 * dt * k2[i];
    }
    equations_of_motion(p, &tmp, &mut k3);
    for i in 0..11 {
        tmp[i] = state[i] + dt * k3[i];
    }
    equations_of_motion(p, &tmp, &mut k4);
    for i in 0..11 {
        state[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

fn fastest_rate(p: &ModelParams) -> f64 {
    [
        p.nv.l21,
        p.nv.l43,
        p.nv.l25,
        p.nv.l45,
        p.nv.l56,
        p.nv.l61,
        p.nv.l63,
        p.nv.gamma13 + p.nv.lambda_nv,
        p.nv.delta.abs(),
        p.nv.omega,
        p.mecsel.lambda_ge + p.mecsel.l_eg,
        p.mecsel.g_eg,
        p.cavity.kappa,
    ]
    .into_iter()
    .fold(1e6, f64::max)
}

/// Integrates the full system from unit photon seed and a ground-state NV /
/// MECSEL start until `t_end`, returning the final state.
pub fn integrate_to(p: &ModelParams, t_end: f64, n_seed: f64) -> FullState {
    let mut state: FullState = [0.0; 11];
    state[2] = 0.5; // split the NV ground state evenly
    state[4] = 0.5;
    state[8] = 1.0; // MECSEL in its ground state
    state[10] = n_seed;
    let dt = 0.2 / fastest_rate(p);
    let steps = (t_end / dt).ceil() as u64;
    for _ in 0..steps {
        rk4_step(p, &mut state, dt);
    }
    state
}

fn nv_block_rhs(p: &ModelParams, n_photons: f64, s: &[f64; 8], out: &mut [f64; 8]) {
    let nv = &p.nv;
    let gamma = nv.gamma13 + nv.lambda_nv;
    let (re, im) = (s[0], s[1]);
    let (r11, r22, r33, r44, r55, r66) = (s[2], s[3], s[4], s[5], s[6], s[7]);
    let absorb = nv.g_s * r66 * n_photons / nv.n_nv;
    out[0] = -gamma * re - nv.delta * im;
    out[1] = nv.delta * re - gamma * im + nv.omega * (r11 - r33);
    out[2] = -2.0 * nv.omega * im - nv.lambda_nv * r11 + nv.l21 * r22 + nv.l61 * r66;
    out[3] = nv.lambda_nv * r11 - (nv.l21 + nv.l25) * r22;
    out[4] = 2.0 * nv.omega * im - nv.lambda_nv * r33 + nv.l43 * r44 + nv.l63 * r66;
    out[5] = nv.lambda_nv * r33 - (nv.l43 + nv.l45) * r44;
    out[6] = nv.l25 * r22 + nv.l45 * r44 - nv.l56 * r55 + absorb;
    out[7] = nv.l56 * r55 - absorb - (nv.l61 + nv.l63) * r66;
}

/// Long-time limit of the NV block alone at fixed photon number.
pub fn integrate_nv_block(p: &ModelParams, n_photons: f64, t_end: f64) -> [f64; 8] {
    let mut state = [0.0_f64; 8];
    state[2] = 0.5;
    state[4] = 0.5;
    let dt = 0.2 / fastest_rate(p);
    let steps = (t_end / dt).ceil() as u64;
    let mut k1 = [0.0; 8];
    let mut k2 = [0.0; 8];
    let mut k3 = [0.0; 8];
    let mut k4 = [0.0; 8];
    let mut tmp = [0.0; 8];
    for _ in 0..steps {
        nv_block_rhs(p, n_photons, &state, &mut k1);
        for i in 0..8 {
            tmp[i] = state[i] + 0.5 * dt * k1[i];
        }
        nv_block_rhs(p, n_photons, &tmp, &mut k2);
        for i in 0..8 {
            tmp[i] = state[i] + 0.5 * dt * k2[i];
        }
        nv_block_rhs(p, n_photons, &tmp, &mut k3);
        for i in 0..8 {
            tmp[i] = state[i] + dt * k3[i];
        }
        nv_block_rhs(p, n_photons, &tmp, &mut k4);
        for i in 0..8 {
            state[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    state
}

/// Multiplicative Gaussian noise on curve outputs, deterministic per seed.
pub fn noisy_outputs(points: &[(f64, f64)], relative_sigma: f64, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let normal = Normal::new(0.0, relative_sigma).unwrap();
    points
        .iter()
        .map(|&(x, y)| (x, (y * (1.0 + normal.sample(rng))).max(0.0)))
        .collect()
}

/// Log-uniform draw.
pub fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let u: f64 = rng.gen();
    (lo.ln() + u * (hi.ln() - lo.ln())).exp()
}
