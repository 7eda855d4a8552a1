//! Staged recovery of model parameters from measured power curves.
//!
//! Stage 1 fits the MECSEL pair (L_eg, G_eg) on an NV-unpumped sweep, seeded
//! by a linear regression through the closed-form photon line. Stage 2 fits
//! the singlet coupling G_S on an off-resonant NV-pumped sweep. Stage 3 fits
//! the Rabi frequency Ω on a resonant sweep. Each stage freezes everything
//! fitted before it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laser::{
    extract_threshold, sweep_mecsel_pump, sweep_nv_pump, PowerCurve, SweptAxis, OUTPUT_FLOOR_W,
};
use crate::numeric::{fit_line, golden_section, nelder_mead};
use crate::params::{pump_power_to_rate, ModelParams};
use crate::steady::{output_power, solve_photon_number};

/// Which parameters a calibration stage fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Mecsel,
    Singlet,
    Rabi,
}

/// A fitted value and its standard error from the local curvature of the
/// objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedParam {
    pub value: f64,
    pub std_error: f64,
}

/// Outcome of one calibration stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub stage: Stage,
    pub fitted: BTreeMap<String, FittedParam>,
    /// Sum of squared output residuals over the scored points, W².
    pub sse: f64,
    /// Objective evaluations spent.
    pub iterations: usize,
    /// Degenerate-outcome notes ("no NV absorption detected", ...).
    pub flags: Vec<String>,
}

/// Model output at each measured pump point. Residuals are scored on points
/// where either the model or the data lases; the below-threshold flat region
/// only contributes when the model wrongly lases there.
fn sweep_sse(curve: &PowerCurve, params: &ModelParams) -> Result<(f64, usize)> {
    let mut local = *params;
    let mut sse = 0.0;
    let mut scored = 0;
    for &(pump, measured) in &curve.points {
        match curve.swept_axis {
            SweptAxis::MecselPump => {
                local.mecsel.lambda_ge = pump_power_to_rate(pump, params.mecsel.pump_rate_per_watt)?
            }
            SweptAxis::NvPump => {
                local.nv.lambda_nv = pump_power_to_rate(pump, params.nv.pump_rate_per_watt)?
            }
        }
        let solution = solve_photon_number(&local)?;
        let model = output_power(solution.n_photons, &local)?;
        if model > OUTPUT_FLOOR_W || measured > OUTPUT_FLOOR_W {
            let r = model - measured;
            sse += r * r;
            scored += 1;
        }
    }
    Ok((sse, scored))
}

/// Standard error from a quadratic fit of the SSE objective around the
/// optimum: var ≈ 2·s²/(d²SSE/dθ²).
fn std_error_from_curvature<F: FnMut(f64) -> Result<f64>>(
    mut objective: F,
    optimum: f64,
    sse_min: f64,
    n_points: usize,
    n_params: usize,
) -> f64 {
    let h = 1e-3 * optimum.abs().max(1e-6);
    let left = objective((optimum - h).max(0.0)).unwrap_or(f64::NAN);
    let right = objective(optimum + h).unwrap_or(f64::NAN);
    let curvature = (right - 2.0 * sse_min + left) / (h * h);
    if !curvature.is_finite() || curvature <= 0.0 || n_points <= n_params {
        return f64::NAN;
    }
    let s2 = sse_min / (n_points - n_params) as f64;
    (2.0 * s2 / curvature).sqrt()
}

/// Seeds (L_eg, G_eg) from a linear regression of the measured lasing points
/// against the NV-unpumped closed-form line.
fn seed_mecsel_from_line(curve: &PowerCurve, params: &ModelParams) -> Option<(f64, f64)> {
    let lasing = curve.lasing_points();
    let (slope, intercept, _) = fit_line(&lasing).ok()?;
    if slope <= 0.0 {
        return None;
    }
    let threshold = -intercept / slope;
    if !(threshold > 0.0) {
        return None;
    }
    let e_ph = params.photon_energy().ok()?;
    let photons_per_watt = e_ph * params.cavity.kappa_mirror;
    let c_pump = params.mecsel.pump_rate_per_watt;
    let kappa = params.cavity.kappa;
    let n_2m = params.mecsel.n_2m;
    // slope of N versus Λ_ge is a = (G−κ)·N_2M/(2κG)
    let a = slope / (photons_per_watt * c_pump);
    let denom = n_2m - 2.0 * a * kappa;
    if denom <= 0.0 {
        return None;
    }
    let g_eg = kappa * n_2m / denom;
    let b = (g_eg + kappa) * n_2m / (2.0 * kappa * g_eg);
    let l_eg = threshold * c_pump * a / b;
    if !(g_eg > kappa && l_eg > 0.0) {
        return None;
    }
    Some((l_eg, g_eg))
}

/// Fits the MECSEL pair (L_eg, G_eg) on an NV-unpumped MECSEL-pump sweep.
pub fn fit_mecsel_params(curve: &PowerCurve, params: &ModelParams) -> Result<CalibrationResult> {
    curve.validate()?;
    if curve.swept_axis != SweptAxis::MecselPump {
        return Err(Error::WrongSweepAxis {
            expected: "MECSEL-pump",
        });
    }
    let lasing = curve.lasing_points();
    if lasing.len() < 5 {
        return Err(Error::TooFewLasingPoints {
            needed: 5,
            found: lasing.len(),
        });
    }
    let mut base = *params;
    base.nv.lambda_nv = 0.0; // the gray curve is taken without NV pumping

    let (seed_l, seed_g) =
        seed_mecsel_from_line(curve, &base).unwrap_or((base.mecsel.l_eg, base.mecsel.g_eg));

    let mut objective = |theta: &[f64]| -> f64 {
        let mut candidate = base;
        candidate.mecsel.l_eg = theta[0].exp();
        candidate.mecsel.g_eg = theta[1].exp();
        match sweep_sse(curve, &candidate) {
            Ok((sse, _)) => sse,
            Err(_) => f64::INFINITY,
        }
    };
    let start = [seed_l.ln(), seed_g.ln()];
    let (best, sse, evals) = nelder_mead(&mut objective, &start, &[0.05, 0.05], 1e-7, 600)?;
    let (l_eg, g_eg) = (best[0].exp(), best[1].exp());
    if g_eg <= base.cavity.kappa {
        return Err(Error::GainBelowLoss {
            g_eg,
            kappa: base.cavity.kappa,
        });
    }

    let mut fitted_params = base;
    fitted_params.mecsel.l_eg = l_eg;
    fitted_params.mecsel.g_eg = g_eg;
    let (sse_check, scored) = sweep_sse(curve, &fitted_params)?;

    let mut fitted = BTreeMap::new();
    let se_l = std_error_from_curvature(
        |v| {
            let mut c = fitted_params;
            c.mecsel.l_eg = v;
            sweep_sse(curve, &c).map(|r| r.0)
        },
        l_eg,
        sse_check,
        scored,
        2,
    );
    let se_g = std_error_from_curvature(
        |v| {
            let mut c = fitted_params;
            c.mecsel.g_eg = v;
            sweep_sse(curve, &c).map(|r| r.0)
        },
        g_eg,
        sse_check,
        scored,
        2,
    );
    fitted.insert(
        "mecsel.L_eg".to_string(),
        FittedParam {
            value: l_eg,
            std_error: se_l,
        },
    );
    fitted.insert(
        "mecsel.G_eg".to_string(),
        FittedParam {
            value: g_eg,
            std_error: se_g,
        },
    );
    Ok(CalibrationResult {
        stage: Stage::Mecsel,
        fitted,
        sse,
        iterations: evals,
        flags: Vec::new(),
    })
}

/// Shared 1-D golden-section stage over a single parameter in [0, hi].
fn fit_scalar<F>(
    curve: &PowerCurve,
    params: &ModelParams,
    hi: f64,
    stage: Stage,
    key: &str,
    degenerate_flag: &str,
    mut apply: F,
) -> Result<CalibrationResult>
where
    F: FnMut(&mut ModelParams, f64) + Copy,
{
    curve.validate()?;
    let mut evals = 0usize;
    let mut objective = |value: f64, evals: &mut usize| -> f64 {
        *evals += 1;
        let mut candidate = *params;
        apply(&mut candidate, value);
        match sweep_sse(curve, &candidate) {
            Ok((sse, _)) => sse,
            Err(_) => f64::INFINITY,
        }
    };
    let (mut best, mut sse) = golden_section(|v| objective(v, &mut evals), 0.0, hi, 1e-6 * hi, 300);

    // when switching the parameter off entirely fits just as well, the curve
    // carries no information about it: collapse to zero and flag
    let mut flags = Vec::new();
    let sse_at_zero = objective(0.0, &mut evals);
    if sse_at_zero <= sse * (1.0 + 1e-9) + 1e-300 {
        best = 0.0;
        sse = sse_at_zero;
        flags.push(degenerate_flag.to_string());
    }

    let mut fitted_params = *params;
    apply(&mut fitted_params, best);
    let (sse_check, scored) = sweep_sse(curve, &fitted_params)?;

    let se = std_error_from_curvature(
        |v| {
            let mut c = *params;
            apply(&mut c, v);
            sweep_sse(curve, &c).map(|r| r.0)
        },
        best,
        sse_check,
        scored,
        1,
    );
    let mut fitted = BTreeMap::new();
    fitted.insert(
        key.to_string(),
        FittedParam {
            value: best,
            std_error: se,
        },
    );
    Ok(CalibrationResult {
        stage,
        fitted,
        sse,
        iterations: evals,
        flags,
    })
}

/// Fits the singlet absorption coupling G_S on an off-resonant NV-pumped
/// sweep; L_eg and G_eg come frozen in `params` from the previous stage.
pub fn fit_singlet_coupling(curve: &PowerCurve, params: &ModelParams) -> Result<CalibrationResult> {
    fit_scalar(
        curve,
        params,
        2e9,
        Stage::Singlet,
        "nv.G_S",
        "no NV absorption detected",
        |p, v| p.nv.g_s = v,
    )
}

/// Fits the Rabi frequency Ω on a resonant sweep (Δ = 0 in `params`); all
/// other parameters frozen.
pub fn fit_rabi(curve: &PowerCurve, params: &ModelParams) -> Result<CalibrationResult> {
    fit_scalar(
        curve,
        params,
        1e8,
        Stage::Rabi,
        "nv.Omega",
        "resonance has no effect",
        |p, v| p.nv.omega = v,
    )
}

/// Off-resonant and resonant thresholds predicted by the (calibrated) model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdShift {
    /// Threshold with the microwave far detuned (Δ = 0.87 GHz), W.
    pub off_resonant: f64,
    /// Threshold with the microwave on resonance (Δ = 0), W.
    pub resonant: f64,
}

/// Detuning the experiments used for the off-resonant reference curves, Hz.
pub const OFF_RESONANT_DELTA: f64 = 0.87e9;

/// Synthesizes the off-resonant and resonant curves along `axis` and extracts
/// both thresholds with the standard 10-point line fit. On the NV-pump axis
/// the numbers are turn-off pump powers.
pub fn predict_threshold_shift(params: &ModelParams, axis: SweptAxis) -> Result<ThresholdShift> {
    let mut off_params = *params;
    off_params.nv.delta = OFF_RESONANT_DELTA;
    let mut res_params = *params;
    res_params.nv.delta = 0.0;

    let threshold_of = |p: &ModelParams| -> Result<f64> {
        let curve = match axis {
            SweptAxis::MecselPump => {
                // range from the NV-free closed-form threshold estimate
                let gray_threshold = p.mecsel.l_eg * (p.mecsel.g_eg + p.cavity.kappa)
                    / ((p.mecsel.g_eg - p.cavity.kappa).max(1.0) * p.mecsel.pump_rate_per_watt);
                let hi = (3.0 * gray_threshold).max(0.1);
                let grid: Vec<f64> = (0..121).map(|i| hi * i as f64 / 120.0).collect();
                sweep_mecsel_pump(p, &grid)?
            }
            SweptAxis::NvPump => {
                // grow the range until the laser is off at the top end
                let mut hi = 2.0;
                loop {
                    let mut probe = *p;
                    probe.nv.lambda_nv = pump_power_to_rate(hi, p.nv.pump_rate_per_watt)?;
                    let solution = solve_photon_number(&probe)?;
                    if !solution.lasing || hi > 128.0 {
                        break;
                    }
                    hi *= 2.0;
                }
                let grid: Vec<f64> = (0..121).map(|i| hi * i as f64 / 120.0).collect();
                sweep_nv_pump(p, &grid)?
            }
        };
        Ok(extract_threshold(&curve, 10)?.threshold)
    };

    Ok(ThresholdShift {
        off_resonant: threshold_of(&off_params)?,
        resonant: threshold_of(&res_params)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laser::uniform_grid;

    fn table_s2_green() -> ModelParams {
        let mut p = ModelParams::default();
        p.nv.delta = OFF_RESONANT_DELTA;
        p
    }

    #[test]
    fn noiseless_gray_curve_recovers_the_mecsel_pair_exactly() {
        let mut truth = ModelParams::default();
        truth.nv.lambda_nv = 0.0;
        let curve = sweep_mecsel_pump(&truth, &uniform_grid(0.0, 2.5, 51)).unwrap();
        let result = fit_mecsel_params(&curve, &ModelParams::default()).unwrap();
        let l = result.fitted["mecsel.L_eg"].value;
        let g = result.fitted["mecsel.G_eg"].value;
        // the regression seed already equals the optimum on noiseless data
        assert!((l - 1.26e6).abs() / 1.26e6 < 2e-3);
        assert!((g - 188.3e6).abs() / 188.3e6 < 2e-3);
    }

    #[test]
    fn regression_seed_matches_the_full_solver_optimum() {
        let mut truth = ModelParams::default();
        truth.nv.lambda_nv = 0.0;
        let curve = sweep_mecsel_pump(&truth, &uniform_grid(0.0, 2.5, 51)).unwrap();
        let (seed_l, seed_g) = seed_mecsel_from_line(&curve, &truth).unwrap();
        assert!((seed_l - truth.mecsel.l_eg).abs() / truth.mecsel.l_eg < 2e-3);
        assert!((seed_g - truth.mecsel.g_eg).abs() / truth.mecsel.g_eg < 2e-3);
    }

    #[test]
    fn noiseless_green_curve_recovers_g_s() {
        let truth = table_s2_green();
        let curve = sweep_mecsel_pump(&truth, &uniform_grid(0.0, 2.5, 51)).unwrap();
        let mut start = truth;
        start.nv.g_s = 0.0;
        let result = fit_singlet_coupling(&curve, &start).unwrap();
        let g_s = result.fitted["nv.G_S"].value;
        assert!((g_s - 463e6).abs() / 463e6 < 5e-3);
        assert!(result.flags.is_empty());
    }

    #[test]
    fn absorption_free_curve_flags_the_degenerate_fit() {
        let mut truth = table_s2_green();
        truth.nv.g_s = 0.0;
        let curve = sweep_mecsel_pump(&truth, &uniform_grid(0.0, 2.5, 51)).unwrap();
        let result = fit_singlet_coupling(&curve, &truth).unwrap();
        assert!(result.fitted["nv.G_S"].value < 1e-5 * 2e9);
        assert_eq!(result.flags, vec!["no NV absorption detected".to_string()]);
    }

    #[test]
    fn noiseless_blue_curve_recovers_omega() {
        let mut truth = ModelParams::default();
        truth.nv.delta = 0.0;
        let curve = sweep_mecsel_pump(&truth, &uniform_grid(0.0, 2.5, 51)).unwrap();
        let mut start = truth;
        start.nv.omega = 0.0;
        let result = fit_rabi(&curve, &start).unwrap();
        let omega = result.fitted["nv.Omega"].value;
        assert!((omega - 0.83e6).abs() / 0.83e6 < 1e-2);
    }

    #[test]
    fn rabi_free_curve_flags_the_degenerate_fit() {
        // a curve indistinguishable from the green curve (Ω → 0 in the data,
        // microwave far detuned): the fit collapses to 0 and flags it
        let mut truth = table_s2_green();
        truth.nv.omega = 0.0;
        truth.nv.lambda_nv = 0.52e6;
        let curve = sweep_mecsel_pump(&truth, &uniform_grid(0.0, 2.5, 51)).unwrap();
        let result = fit_rabi(&curve, &truth).unwrap();
        assert_eq!(result.fitted["nv.Omega"].value, 0.0);
        assert_eq!(result.flags, vec!["resonance has no effect".to_string()]);
    }

    #[test]
    fn threshold_shift_prediction_matches_the_reported_values() {
        let shift = predict_threshold_shift(&ModelParams::default(), SweptAxis::MecselPump).unwrap();
        assert!((shift.off_resonant - 1.53).abs() / 1.53 < 0.10);
        assert!((shift.resonant - 1.82).abs() / 1.82 < 0.10);
        assert!(shift.resonant > shift.off_resonant);
    }

    #[test]
    fn zero_singlet_coupling_collapses_the_shift() {
        let mut p = ModelParams::default();
        p.nv.g_s = 0.0;
        let shift = predict_threshold_shift(&p, SweptAxis::MecselPump).unwrap();
        assert!((shift.off_resonant - shift.resonant).abs() / shift.off_resonant < 1e-6);
    }

    #[test]
    fn transplanted_couplings_predict_the_nv_pump_turn_offs() {
        // MECSEL pair re-fitted for the second dataset, G_S and Ω carried over
        let mut p = ModelParams::default();
        p.mecsel.l_eg = 5.1e6;
        p.mecsel.g_eg = 354e6;
        p.mecsel.lambda_ge = 1.3 * p.mecsel.pump_rate_per_watt;
        let shift = predict_threshold_shift(&p, SweptAxis::NvPump).unwrap();
        assert!(shift.resonant < shift.off_resonant);
        assert!((shift.off_resonant - 4.3).abs() / 4.3 < 0.15);
    }

    #[test]
    fn stage_objectives_have_a_single_minimum_in_the_search_range() {
        // coarse scans of each stage's objective around the truth
        let truth = table_s2_green();
        let grid = uniform_grid(0.0, 2.5, 41);
        let green = sweep_mecsel_pump(&truth, &grid).unwrap();
        let sse_at = |g_s: f64| {
            let mut c = truth;
            c.nv.g_s = g_s;
            sweep_sse(&green, &c).unwrap().0
        };
        let scan: Vec<f64> = (0..=20).map(|i| sse_at(i as f64 * 100e6)).collect();
        let min_idx = scan
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        // single descent towards the minimum, single ascent after it
        for i in 1..=min_idx {
            assert!(scan[i] <= scan[i - 1]);
        }
        for i in min_idx + 1..scan.len() {
            assert!(scan[i] >= scan[i - 1]);
        }
        assert!((min_idx as f64 * 100e6 - 463e6).abs() <= 100e6);
    }

    #[test]
    fn mecsel_stage_objective_has_its_minimum_at_the_truth() {
        // coarse 2-D scan of the stage-1 objective around the truth: the
        // central cell must beat its whole neighborhood
        let mut truth = ModelParams::default();
        truth.nv.lambda_nv = 0.0;
        let curve = sweep_mecsel_pump(&truth, &uniform_grid(0.0, 2.5, 41)).unwrap();
        let sse_at = |l_eg: f64, g_eg: f64| {
            let mut c = truth;
            c.mecsel.l_eg = l_eg;
            c.mecsel.g_eg = g_eg;
            sweep_sse(&curve, &c).unwrap().0
        };
        let center = sse_at(1.26e6, 188.3e6);
        for i in -3i32..=3 {
            for j in -3i32..=3 {
                if i == 0 && j == 0 {
                    continue;
                }
                let l = 1.26e6 * (1.0 + 0.08 * i as f64);
                let g = 188.3e6 * (1.0 + 0.04 * j as f64);
                assert!(
                    sse_at(l, g) > center,
                    "objective at ({l:.3e}, {g:.3e}) does not exceed the truth"
                );
            }
        }
    }

    #[test]
    fn increasing_singlet_coupling_raises_the_threshold() {
        let mut previous = 0.0;
        for g_s in [100e6, 300e6, 463e6, 700e6] {
            let mut p = table_s2_green();
            p.nv.g_s = g_s;
            let curve = sweep_mecsel_pump(&p, &uniform_grid(0.0, 3.0, 121)).unwrap();
            let threshold = extract_threshold(&curve, 10).unwrap().threshold;
            assert!(threshold > previous);
            previous = threshold;
        }
    }

    #[test]
    fn wrong_axis_is_rejected() {
        let mut p = ModelParams::default();
        p.mecsel.lambda_ge = 1.3 * p.mecsel.pump_rate_per_watt;
        let curve = sweep_nv_pump(&p, &uniform_grid(0.0, 6.0, 31)).unwrap();
        assert!(matches!(
            fit_mecsel_params(&curve, &p).unwrap_err(),
            Error::WrongSweepAxis { .. }
        ));
    }
}
