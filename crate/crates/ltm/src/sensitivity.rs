//! Photon-shot-noise-limited (PSNL) sensitivity, dynamic range, and the
//! dynamic-range/sensitivity trade-off comparison across sensors.
//!
//! Pointwise: η(ν) = (h/(g_e·μ_B)) · |∂I/∂ν|⁻¹ · √I(ν) with I in photons/s.
//! The closed forms for a single Lorentzian dip are the weak-contrast
//! approximation and the general expression with the operating-point shift
//! factor S_C = √(C − 1 + √(C² − 5C + 4)).

use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::numeric::golden_section;
use crate::odmr::LorentzianFit;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// 4/(3√3), the prefactor shared by both closed forms.
const PREFACTOR: f64 = 4.0 / (3.0 * SQRT_3);

/// Full sensitivity summary for one ODMR fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    /// Numeric minimum of the pointwise sensitivity over the dip, T/√Hz.
    pub eta_pointwise_min: f64,
    /// General closed form, T/√Hz.
    pub eta_general: f64,
    /// Weak-contrast approximation, T/√Hz.
    pub eta_approx: f64,
    /// Optimal operating-point offset from the dip center, Hz.
    pub nu_opt: f64,
    /// Shift factor S_C, dimensionless.
    pub s_c: f64,
    /// ± field range over which the response stays usable, T.
    pub dynamic_range: f64,
    pub inputs: SensitivityInputs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityInputs {
    /// FWHM linewidth, Hz
    pub fwhm: f64,
    /// Contrast of the analyzed resonance
    pub contrast: f64,
    /// Baseline photon rate, photons/s
    pub baseline: f64,
}

/// One sensor in the dynamic-range/sensitivity comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorPoint {
    pub name: String,
    /// T/√Hz
    pub sensitivity: f64,
    /// T (± half-range as published)
    pub dynamic_range: f64,
    /// Sensitivity boosted by magnetic flux concentrators.
    pub flux_concentrator: bool,
    /// Dynamic range extended by closed-loop feedback.
    pub closed_loop: bool,
}

impl SensorPoint {
    fn validate(&self) -> Result<()> {
        if !(self.sensitivity > 0.0) {
            return Err(Error::NonPositive {
                name: "sensitivity",
                value: self.sensitivity,
            });
        }
        if !(self.dynamic_range > 0.0) {
            return Err(Error::NonPositive {
                name: "dynamic_range",
                value: self.dynamic_range,
            });
        }
        Ok(())
    }

    fn boosted(&self) -> bool {
        self.flux_concentrator || self.closed_loop
    }
}

/// Result of the slope −1 trend fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffAnalysis {
    /// Intercept c of log10(DR) = −log10(η) + c over the unflagged points.
    pub intercept_log10: f64,
    /// (name, ratio of the sensor's DR·η product to the trend line's).
    pub deviation_factors: Vec<(String, f64)>,
}

/// Pointwise PSNL sensitivity of a fitted spectrum at absolute frequency
/// `nu`. Returns +∞ where the model slope vanishes (dip centers, far tails).
pub fn psnl_pointwise(fit: &LorentzianFit, nu: f64, constants: &PhysicalConstants) -> f64 {
    let intensity = fit.value(nu).max(0.0);
    let slope = fit.derivative(nu).abs();
    if slope == 0.0 {
        return f64::INFINITY;
    }
    constants.field_per_hz() * intensity.sqrt() / slope
}

/// Shift factor S_C of the optimal operating point; S_C → 1 for vanishing
/// contrast (inflection point), S_C = 0 at full contrast (dip minimum).
pub fn shift_factor(contrast: f64) -> Result<f64> {
    if !(contrast > 0.0 && contrast <= 1.0) {
        return Err(Error::ContrastOutOfRange { contrast });
    }
    let inner = (contrast * contrast - 5.0 * contrast + 4.0).max(0.0).sqrt();
    Ok((contrast - 1.0 + inner).max(0.0).sqrt())
}

fn check_sensitivity_domain(fwhm: f64, contrast: f64, baseline: f64) -> Result<()> {
    if !(fwhm > 0.0) {
        return Err(Error::NonPositive {
            name: "fwhm",
            value: fwhm,
        });
    }
    if !(baseline > 0.0) {
        return Err(Error::NonPositive {
            name: "baseline",
            value: baseline,
        });
    }
    if !(contrast > 0.0 && contrast <= 1.0) {
        return Err(Error::ContrastOutOfRange { contrast });
    }
    Ok(())
}

/// Weak-contrast closed form: (4/(3√3))·(h/(g_e·μ_B))·Δν/(C·√I0).
pub fn psnl_approx(
    fwhm: f64,
    contrast: f64,
    baseline: f64,
    constants: &PhysicalConstants,
) -> Result<f64> {
    check_sensitivity_domain(fwhm, contrast, baseline)?;
    Ok(PREFACTOR * constants.field_per_hz() * fwhm / (contrast * baseline.sqrt()))
}

/// Contrast-dependent correction factor between the general form and the
/// weak-contrast approximation: √((3+S²)³·(3+S²−3C)) / (16·S) ≤ 1.
/// At C = 1 both radicands vanish with S and the limit is 3√3/16.
pub fn psnl_correction_factor(contrast: f64) -> Result<f64> {
    let s = shift_factor(contrast)?;
    if s == 0.0 {
        return Ok(3.0 * SQRT_3 / 16.0);
    }
    let s2 = s * s;
    let radicand = (3.0 + s2).powi(3) * (3.0 + s2 - 3.0 * contrast);
    Ok(radicand.max(0.0).sqrt() / (16.0 * s))
}

/// General PSNL closed form, valid for any contrast.
pub fn psnl_general(
    fwhm: f64,
    contrast: f64,
    baseline: f64,
    constants: &PhysicalConstants,
) -> Result<f64> {
    let approx = psnl_approx(fwhm, contrast, baseline, constants)?;
    Ok(approx * psnl_correction_factor(contrast)?)
}

/// Offset of the optimal operating point from the dip center,
/// ν_oop = Δν/(2√3) · S_C.
pub fn optimal_operating_point(fwhm: f64, contrast: f64) -> Result<f64> {
    if !(fwhm > 0.0) {
        return Err(Error::NonPositive {
            name: "fwhm",
            value: fwhm,
        });
    }
    Ok(fwhm / (2.0 * SQRT_3) * shift_factor(contrast)?)
}

/// Dynamic range ±Δν/γ_e in T.
pub fn dynamic_range(fwhm: f64, constants: &PhysicalConstants) -> Result<f64> {
    if fwhm < 0.0 {
        return Err(Error::NonPositive {
            name: "fwhm",
            value: fwhm,
        });
    }
    Ok(fwhm / constants.gyromagnetic_ratio())
}

/// Builds the full report from a fit, analyzing its deepest resonance.
pub fn analyze_report(fit: &LorentzianFit, constants: &PhysicalConstants) -> Result<SensitivityReport> {
    analyze_resonance(fit, None, constants)
}

/// Like [`analyze_report`] but for an explicitly chosen resonance index
/// (resonances are in ascending center order).
pub fn analyze_resonance(
    fit: &LorentzianFit,
    resonance_index: Option<usize>,
    constants: &PhysicalConstants,
) -> Result<SensitivityReport> {
    if fit.resonances.is_empty() {
        return Err(Error::EmptyFit);
    }
    let index = match resonance_index {
        Some(i) if i < fit.resonances.len() => i,
        Some(_) => return Err(Error::EmptyFit),
        None => {
            let mut deepest = 0;
            for (i, r) in fit.resonances.iter().enumerate() {
                if r.contrast > fit.resonances[deepest].contrast {
                    deepest = i;
                }
            }
            deepest
        }
    };
    let resonance = fit.resonances[index];
    let (fwhm, contrast) = (resonance.fwhm, resonance.contrast);
    let baseline = fit.baseline;
    check_sensitivity_domain(fwhm, contrast, baseline)?;

    let s_c = shift_factor(contrast)?;
    let eta_general = psnl_general(fwhm, contrast, baseline, constants)?;
    let eta_approx = psnl_approx(fwhm, contrast, baseline, constants)?;
    let nu_opt = optimal_operating_point(fwhm, contrast)?;

    // numeric minimum over one linewidth to the right of the center, seeded
    // by a scan around ν_oop (the curve diverges at the center when C < 1)
    let center = resonance.center;
    let eta_at = |offset: f64| psnl_pointwise(fit, center + offset, constants);
    let scan_n: usize = 256;
    let lo = fwhm * 1e-6;
    let mut best_i = 0;
    let mut best = f64::INFINITY;
    for i in 0..=scan_n {
        let offset = lo + (fwhm - lo) * i as f64 / scan_n as f64;
        let value = eta_at(offset);
        if value < best {
            best = value;
            best_i = i;
        }
    }
    let step = (fwhm - lo) / scan_n as f64;
    let bracket_lo = lo + step * best_i.saturating_sub(1) as f64;
    let bracket_hi = (lo + step * (best_i + 1) as f64).min(fwhm);
    let (_, eta_pointwise_min) =
        golden_section(eta_at, bracket_lo, bracket_hi, 1e-6 * fwhm, 200);
    // at full contrast the pointwise expression degenerates to 0/0 at the
    // minimum; the closed form is the defined value there
    let eta_pointwise_min = if contrast >= 1.0 {
        eta_general
    } else {
        eta_pointwise_min.min(best)
    };

    Ok(SensitivityReport {
        eta_pointwise_min,
        eta_general,
        eta_approx,
        nu_opt,
        s_c,
        dynamic_range: dynamic_range(fwhm, constants)?,
        inputs: SensitivityInputs {
            fwhm,
            contrast,
            baseline,
        },
    })
}

/// Fits the slope −1 trend log10(DR) = −log10(η) + c over the sensors that
/// were not boosted by flux concentrators or closed-loop feedback, then
/// reports every sensor's (and the reference's) deviation from the trend.
pub fn sensor_tradeoff_analysis(
    points: &[SensorPoint],
    reference: &SensorPoint,
) -> Result<TradeoffAnalysis> {
    for p in points.iter().chain(std::iter::once(reference)) {
        p.validate()?;
    }
    let trend: Vec<&SensorPoint> = points.iter().filter(|p| !p.boosted()).collect();
    if trend.is_empty() {
        return Err(Error::AllSensorsFlagged);
    }
    if trend.len() < 2 {
        return Err(Error::TooFewSensors { found: trend.len() });
    }
    let intercept = trend
        .iter()
        .map(|p| p.dynamic_range.log10() + p.sensitivity.log10())
        .sum::<f64>()
        / trend.len() as f64;
    let factor = |p: &SensorPoint| {
        10f64.powf(p.dynamic_range.log10() + p.sensitivity.log10() - intercept)
    };
    let mut deviation_factors: Vec<(String, f64)> = points
        .iter()
        .map(|p| (p.name.clone(), factor(p)))
        .collect();
    deviation_factors.push((reference.name.clone(), factor(reference)));
    Ok(TradeoffAnalysis {
        intercept_log10: intercept,
        deviation_factors,
    })
}
