//! Steady state of the coupled NV + MECSEL + cavity system.
//!
//! The NV block is six populations plus the driven ground-state coherence,
//! solved as an 8×8 real linear system at fixed photon number N (one
//! redundant balance row is replaced by the trace constraint). The MECSEL
//! block has a detailed-balance closed form. The self-consistent photon
//! number is the root of the net gain per photon,
//! g(N) = −G_S·ρ66(N) + G_eg·(ρ_ee(N) − ρ_gg(N)) − κ.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::brent_root;
use crate::params::ModelParams;

/// Photon-number ceiling for the bracket expansion.
const N_PHOTON_MAX: f64 = 1e16;

/// |g(N*)| must end up below this fraction of κ.
const GAIN_TOL_KAPPA: f64 = 1e-6;

/// NV density-matrix elements in steady state. Populations are dimensionless
/// and sum to one; only ρ13 is stored (ρ31 is its conjugate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NVState {
    pub rho11: f64,
    pub rho22: f64,
    pub rho33: f64,
    pub rho44: f64,
    pub rho55: f64,
    pub rho66: f64,
    pub rho13_re: f64,
    pub rho13_im: f64,
}

impl NVState {
    /// Sum of the six populations (1 up to solver tolerance).
    pub fn trace(&self) -> f64 {
        self.rho11 + self.rho22 + self.rho33 + self.rho44 + self.rho55 + self.rho66
    }
}

/// MECSEL two-level populations in steady state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MecselState {
    pub rho_gg: f64,
    pub rho_ee: f64,
}

impl MecselState {
    /// Population inversion ρ_ee − ρ_gg.
    pub fn inversion(&self) -> f64 {
        self.rho_ee - self.rho_gg
    }
}

/// Self-consistent operating point of the whole laser system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonSolution {
    /// Intracavity photon number (0 below threshold).
    pub n_photons: f64,
    pub lasing: bool,
    /// NV block at the solution (weight-averaged over families for
    /// [`multi_family_steady_state`]).
    pub nv: NVState,
    pub mecsel: MecselState,
    /// d(dN/dt)/dN at the solution, Hz. Negative for a stable lasing point.
    pub stability_derivative: f64,
}

/// One NV sub-ensemble: a statistical weight and its own microwave detuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Family {
    /// Fraction of the NV ensemble, ≥ 0; weights sum to 1.
    pub weight: f64,
    /// Microwave detuning of this family, Hz.
    pub delta: f64,
}

/// Solves the NV block at fixed photon number with the detuning taken from
/// `params.nv.delta`.
pub fn nv_steady_state(params: &ModelParams, n_photons: f64) -> Result<NVState> {
    nv_steady_state_with_delta(params, params.nv.delta, n_photons)
}

/// NV block at fixed photon number and explicit detuning (used per family).
///
/// Unknown ordering: [Re ρ13, Im ρ13, ρ11, ρ22, ρ33, ρ44, ρ55, ρ66].
pub fn nv_steady_state_with_delta(
    params: &ModelParams,
    delta: f64,
    n_photons: f64,
) -> Result<NVState> {
    assert!(n_photons >= 0.0, "photon number must be non-negative");
    let nv = &params.nv;
    if nv.lambda_nv == 0.0 && nv.omega == 0.0 {
        return Err(Error::DegenerateSteadyState {
            detail: "with Lambda_NV = 0 and Omega = 0 the ground states |1> and |3> decouple; \
                     any split of population between them is stationary"
                .to_string(),
        });
    }

    let gamma = nv.gamma13 + nv.lambda_nv;
    let absorb = nv.g_s * n_photons / nv.n_nv;

    let mut a = SMatrix::<f64, 8, 8>::zeros();
    let mut b = SVector::<f64, 8>::zeros();

    // Re ρ̇13 = −Γ'·re − Δ·im
    a[(0, 0)] = -gamma;
    a[(0, 1)] = -delta;
    // Im ρ̇13 = Δ·re − Γ'·im + Ω(ρ11 − ρ33)
    a[(1, 0)] = delta;
    a[(1, 1)] = -gamma;
    a[(1, 2)] = nv.omega;
    a[(1, 4)] = -nv.omega;
    // trace constraint replaces the (redundant) ρ̇11 balance
    for col in 2..8 {
        a[(2, col)] = 1.0;
    }
    b[2] = 1.0;
    // ρ̇22 = Λ·ρ11 − (L21 + L25)·ρ22
    a[(3, 2)] = nv.lambda_nv;
    a[(3, 3)] = -(nv.l21 + nv.l25);
    // ρ̇33 = 2Ω·im − Λ·ρ33 + L43·ρ44 + L63·ρ66
    a[(4, 1)] = 2.0 * nv.omega;
    a[(4, 4)] = -nv.lambda_nv;
    a[(4, 5)] = nv.l43;
    a[(4, 7)] = nv.l63;
    // ρ̇44 = Λ·ρ33 − (L43 + L45)·ρ44
    a[(5, 4)] = nv.lambda_nv;
    a[(5, 5)] = -(nv.l43 + nv.l45);
    // ρ̇55 = L25·ρ22 + L45·ρ44 − L56·ρ55 + G_S·N/N_NV·ρ66
    a[(6, 3)] = nv.l25;
    a[(6, 5)] = nv.l45;
    a[(6, 6)] = -nv.l56;
    a[(6, 7)] = absorb;
    // ρ̇66 = L56·ρ55 − (G_S·N/N_NV + L61 + L63)·ρ66
    a[(7, 6)] = nv.l56;
    a[(7, 7)] = -(absorb + nv.l61 + nv.l63);

    // equilibrate rows (rates span many decades), then one step of
    // iterative refinement on top of the LU solve
    let mut scaled = a;
    let mut scaled_b = b;
    for row in 0..8 {
        let max = (0..8).map(|col| a[(row, col)].abs()).fold(0.0_f64, f64::max);
        if max > 0.0 {
            for col in 0..8 {
                scaled[(row, col)] /= max;
            }
            scaled_b[row] /= max;
        }
    }
    let lu = scaled.lu();
    let mut x = lu.solve(&scaled_b).ok_or(Error::SingularAssembly)?;
    let defect = scaled_b - scaled * x;
    if let Some(correction) = lu.solve(&defect) {
        x += correction;
    }

    let state = NVState {
        rho13_re: x[0],
        rho13_im: x[1],
        rho11: x[2],
        rho22: x[3],
        rho33: x[4],
        rho44: x[5],
        rho55: x[6],
        rho66: x[7],
    };

    // residuals of all eight original balance equations, including the one
    // replaced by the trace row
    let terms: [&[f64]; 8] = [
        &[-gamma * state.rho13_re, -delta * state.rho13_im],
        &[
            delta * state.rho13_re,
            -gamma * state.rho13_im,
            nv.omega * state.rho11,
            -nv.omega * state.rho33,
        ],
        &[
            -2.0 * nv.omega * state.rho13_im,
            -nv.lambda_nv * state.rho11,
            nv.l21 * state.rho22,
            nv.l61 * state.rho66,
        ],
        &[
            nv.lambda_nv * state.rho11,
            -(nv.l21 + nv.l25) * state.rho22,
        ],
        &[
            2.0 * nv.omega * state.rho13_im,
            -nv.lambda_nv * state.rho33,
            nv.l43 * state.rho44,
            nv.l63 * state.rho66,
        ],
        &[
            nv.lambda_nv * state.rho33,
            -(nv.l43 + nv.l45) * state.rho44,
        ],
        &[
            nv.l25 * state.rho22,
            nv.l45 * state.rho44,
            -nv.l56 * state.rho55,
            absorb * state.rho66,
        ],
        &[
            nv.l56 * state.rho55,
            -(absorb + nv.l61 + nv.l63) * state.rho66,
        ],
    ];
    for eq in terms {
        let residual: f64 = eq.iter().sum();
        let scale: f64 = eq.iter().map(|t| t.abs()).sum();
        if residual.abs() > 1e-9 * scale.max(1e-300) && scale > 0.0 {
            return Err(Error::ResidualTooLarge {
                residual: residual.abs() / scale,
            });
        }
    }

    Ok(state)
}

/// MECSEL populations at fixed photon number (detailed balance):
/// ρ_ee = (Λ_ge + G_eg·N/N_2M) / (Λ_ge + L_eg + 2·G_eg·N/N_2M).
pub fn mecsel_steady_state(params: &ModelParams, n_photons: f64) -> Result<MecselState> {
    assert!(n_photons >= 0.0, "photon number must be non-negative");
    let m = &params.mecsel;
    let stim = m.g_eg * n_photons / m.n_2m;
    let denom = m.lambda_ge + m.l_eg + 2.0 * stim;
    if denom == 0.0 {
        return Err(Error::UndefinedMecselState);
    }
    let rho_ee = (m.lambda_ge + stim) / denom;
    Ok(MecselState {
        rho_ee,
        rho_gg: 1.0 - rho_ee,
    })
}

/// Net cavity gain per photon, g(N) = Ṅ/N, for a single NV family.
pub fn net_gain(params: &ModelParams, n_photons: f64) -> Result<f64> {
    let nv = nv_steady_state(params, n_photons)?;
    let mecsel = mecsel_steady_state(params, n_photons)?;
    Ok(gain_from_states(params, nv.rho66, &mecsel))
}

fn gain_from_states(params: &ModelParams, rho66: f64, mecsel: &MecselState) -> f64 {
    -params.nv.g_s * rho66 + params.mecsel.g_eg * mecsel.inversion() - params.cavity.kappa
}

/// Weight-averaged NV absorption and state for a set of families at common N.
fn families_block(
    params: &ModelParams,
    families: &[Family],
    n_photons: f64,
) -> Result<(NVState, f64)> {
    let mut avg = NVState {
        rho11: 0.0,
        rho22: 0.0,
        rho33: 0.0,
        rho44: 0.0,
        rho55: 0.0,
        rho66: 0.0,
        rho13_re: 0.0,
        rho13_im: 0.0,
    };
    for family in families {
        let state = nv_steady_state_with_delta(params, family.delta, n_photons)?;
        avg.rho11 += family.weight * state.rho11;
        avg.rho22 += family.weight * state.rho22;
        avg.rho33 += family.weight * state.rho33;
        avg.rho44 += family.weight * state.rho44;
        avg.rho55 += family.weight * state.rho55;
        avg.rho66 += family.weight * state.rho66;
        avg.rho13_re += family.weight * state.rho13_re;
        avg.rho13_im += family.weight * state.rho13_im;
    }
    Ok((avg, avg.rho66))
}

fn family_net_gain(params: &ModelParams, families: &[Family], n_photons: f64) -> Result<f64> {
    let (_, rho66) = families_block(params, families, n_photons)?;
    let mecsel = mecsel_steady_state(params, n_photons)?;
    Ok(gain_from_states(params, rho66, &mecsel))
}

/// Finds the self-consistent photon number for a single NV family (the
/// detuning in `params.nv.delta`).
pub fn solve_photon_number(params: &ModelParams) -> Result<PhotonSolution> {
    let families = [Family {
        weight: 1.0,
        delta: params.nv.delta,
    }];
    multi_family_steady_state(params, &families)
}

/// Finds the self-consistent photon number with the NV absorption averaged
/// over `families` (Σ_f w_f·G_S·ρ66^(f)); each family's block is solved
/// independently at the common photon number.
pub fn multi_family_steady_state(
    params: &ModelParams,
    families: &[Family],
) -> Result<PhotonSolution> {
    params.validate()?;
    if families.is_empty() {
        return Err(Error::EmptyFamilyList);
    }
    let weight_sum: f64 = families.iter().map(|f| f.weight).sum();
    if (weight_sum - 1.0).abs() > 1e-9 || families.iter().any(|f| f.weight < 0.0) {
        return Err(Error::InvalidFamilyWeights { sum: weight_sum });
    }

    let g = |n: f64| family_net_gain(params, families, n);

    let g0 = g(0.0)?;
    if g0 <= 0.0 {
        let (nv, _) = families_block(params, families, 0.0)?;
        let mecsel = mecsel_steady_state(params, 0.0)?;
        return Ok(PhotonSolution {
            n_photons: 0.0,
            lasing: false,
            nv,
            mecsel,
            // d(N·g)/dN at N = 0 is just g(0)
            stability_derivative: g0,
        });
    }

    // expand the bracket until the gain turns negative
    let mut lo = 0.0;
    let mut g_lo = g0;
    let mut hi = params.mecsel.n_2m;
    let mut g_hi = g(hi)?;
    while g_hi > 0.0 {
        lo = hi;
        g_lo = g_hi;
        hi *= 10.0;
        if hi > N_PHOTON_MAX {
            return Err(Error::RunawayGain { limit: N_PHOTON_MAX });
        }
        g_hi = g(hi)?;
    }

    let mut g_err: Option<Error> = None;
    let root = brent_root(
        |n| match g(n) {
            Ok(v) => v,
            Err(e) => {
                g_err = Some(e);
                f64::NAN
            }
        },
        lo,
        hi,
        g_lo,
        g_hi,
        1e-6,
        300,
    )?;
    if let Some(e) = g_err {
        return Err(e);
    }

    let g_root = g(root)?;
    if g_root.abs() > GAIN_TOL_KAPPA * params.cavity.kappa {
        return Err(Error::ResidualTooLarge {
            residual: g_root.abs() / params.cavity.kappa,
        });
    }

    // probe for a second zero crossing above the root; the gain should be
    // monotone non-increasing for physical parameters
    let saturation_scale = params.nv.n_nv * params.nv.l56 / params.nv.g_s.max(1.0);
    for probe in [3.0 * root, 10.0 * root, saturation_scale] {
        if probe <= root || probe > N_PHOTON_MAX {
            continue;
        }
        let g_probe = g(probe)?;
        if g_probe > 0.0 {
            let second = brent_root(
                |n| g(n).unwrap_or(f64::NAN),
                root * 1.000001,
                probe,
                g_root.min(-f64::MIN_POSITIVE),
                g_probe,
                1e-6,
                300,
            )
            .unwrap_or(probe);
            return Err(Error::NonMonotoneGain {
                first: root,
                second,
            });
        }
    }

    // d(N·g(N))/dN by central difference
    let h = (1e-6 * root).max(1.0);
    let f_plus = (root + h) * g(root + h)?;
    let f_minus = (root - h).max(0.0) * g((root - h).max(0.0))?;
    let stability = (f_plus - f_minus) / (root + h - (root - h).max(0.0));

    let (nv, _) = families_block(params, families, root)?;
    let mecsel = mecsel_steady_state(params, root)?;
    Ok(PhotonSolution {
        n_photons: root,
        lasing: true,
        nv,
        mecsel,
        stability_derivative: stability,
    })
}

/// Converts a photon number to emitted power, P = E_ph·κ_mirror·N.
pub fn output_power(n_photons: f64, params: &ModelParams) -> Result<f64> {
    assert!(n_photons >= 0.0, "photon number must be non-negative");
    Ok(params.photon_energy()? * params.cavity.kappa_mirror * n_photons)
}
