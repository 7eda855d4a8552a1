//! Laser power curves: pump sweeps, threshold and slope-efficiency
//! extraction, and the NV-unpumped closed form used as a reference.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::fit_line;
use crate::params::{pump_power_to_rate, ModelParams};
use crate::steady::{output_power, solve_photon_number};

/// Outputs below this are treated as "not lasing". The solver returns an
/// exact zero below threshold; the floor guards float noise in measured CSVs.
pub const OUTPUT_FLOOR_W: f64 = 1e-9;

/// Which pump the curve sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweptAxis {
    MecselPump,
    NvPump,
}

impl std::fmt::Display for SweptAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SweptAxis::MecselPump => write!(f, "mecsel_pump"),
            SweptAxis::NvPump => write!(f, "nv_pump"),
        }
    }
}

/// Sampled output power versus pump power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    pub swept_axis: SweptAxis,
    /// (pump W, output W), strictly ascending in pump.
    pub points: Vec<(f64, f64)>,
    /// Parameters the sweep was run with (pump of the swept axis as in the
    /// last grid point). `None` for ingested measurement data.
    pub fixed_params: Option<ModelParams>,
    pub label: String,
}

impl PowerCurve {
    /// Validates ordering and non-negativity (used on CSV ingest).
    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty()
            || self.points.windows(2).any(|w| w[1].0 <= w[0].0)
            || self.points.iter().any(|p| p.1 < 0.0 || p.0 < 0.0)
        {
            return Err(Error::InvalidPumpGrid);
        }
        Ok(())
    }

    /// Points with output above the lasing floor, in pump order.
    pub fn lasing_points(&self) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .copied()
            .filter(|p| p.1 > OUTPUT_FLOOR_W)
            .collect()
    }
}

/// Threshold and slope efficiency from a linear fit near threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFit {
    /// Pump power at the fitted line's zero crossing, W.
    pub threshold: f64,
    /// |d output / d pump| of the fitted line, W/W.
    pub slope_efficiency: f64,
    pub n_points_used: usize,
    /// RMS deviation of the fitted points from the line, W.
    pub fit_rms: f64,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|&p| p < 0.0) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidPumpGrid);
    }
    Ok(())
}

fn sweep(params: &ModelParams, grid: &[f64], axis: SweptAxis, label: &str) -> Result<PowerCurve> {
    check_grid(grid)?;
    params.validate()?;
    let mut points = Vec::with_capacity(grid.len());
    let mut local = *params;
    for &pump in grid {
        match axis {
            SweptAxis::MecselPump => {
                local.mecsel.lambda_ge = pump_power_to_rate(pump, params.mecsel.pump_rate_per_watt)?
            }
            SweptAxis::NvPump => {
                local.nv.lambda_nv = pump_power_to_rate(pump, params.nv.pump_rate_per_watt)?
            }
        }
        let solution = solve_photon_number(&local).map_err(|e| Error::SweepPoint {
            pump_w: pump,
            source: Box::new(e),
        })?;
        let output = output_power(solution.n_photons, &local)?;
        points.push((pump, output));
    }
    Ok(PowerCurve {
        swept_axis: axis,
        points,
        fixed_params: Some(local),
        label: label.to_string(),
    })
}

/// Output power versus MECSEL pump power at fixed NV pump.
pub fn sweep_mecsel_pump(params: &ModelParams, grid: &[f64]) -> Result<PowerCurve> {
    sweep(params, grid, SweptAxis::MecselPump, "mecsel-pump sweep")
}

/// Output power versus NV pump power at fixed MECSEL pump. Output decreases
/// with NV pump; the curve reaches zero at the turn-off point.
pub fn sweep_nv_pump(params: &ModelParams, grid: &[f64]) -> Result<PowerCurve> {
    sweep(params, grid, SweptAxis::NvPump, "nv-pump sweep")
}

/// Fits a line through the first `n_points` lasing points and reports its
/// zero crossing as the threshold (the turn-off point for curves that fall
/// with pump). This is the extraction used to match data at the threshold.
pub fn extract_threshold(curve: &PowerCurve, n_points: usize) -> Result<ThresholdFit> {
    curve.validate()?;
    let lasing = curve.lasing_points();
    if lasing.len() < n_points || n_points < 2 {
        return Err(Error::TooFewLasingPoints {
            needed: n_points.max(2),
            found: lasing.len(),
        });
    }
    let window = &lasing[..n_points];
    let (slope, intercept, rms) = fit_line(window)?;
    if slope == 0.0 {
        return Err(Error::DegenerateThresholdFit);
    }
    // a negative slope is only meaningful when the curve lases from its very
    // first point (an NV-pump style turn-off curve)
    let first_point_lases = curve.points[0].1 > OUTPUT_FLOOR_W;
    if slope < 0.0 && first_point_lases == false {
        return Err(Error::NegativeSlope);
    }
    let slope_efficiency = slope.abs();
    if slope_efficiency > 1.0 {
        return Err(Error::NonPhysicalSlope {
            slope: slope_efficiency,
        });
    }
    let threshold = -intercept / slope;
    if !threshold.is_finite() || threshold < 0.0 {
        return Err(Error::DegenerateThresholdFit);
    }
    Ok(ThresholdFit {
        threshold,
        slope_efficiency,
        n_points_used: n_points,
        fit_rms: rms,
    })
}

/// Closed-form cavity photon number for an NV-unpumped system,
/// N = a·Λ_ge − b·L_eg with a = (G_eg−κ)N_2M/(2κG_eg), b = (G_eg+κ)N_2M/(2κG_eg).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormPhotons {
    /// max(0, a·Λ_ge − b·L_eg)
    pub n_photons: f64,
    /// Set when G_eg ≤ κ: gain can never overcome the loss, N is pinned to 0.
    pub gain_below_loss: bool,
}

/// Evaluates the NV-unpumped closed form at pump rate `lambda_ge`. The caller
/// is responsible for only using this in a Λ_NV = 0 context.
pub fn closed_form_photon_number(params: &ModelParams, lambda_ge: f64) -> ClosedFormPhotons {
    let (g_eg, kappa, n_2m) = (params.mecsel.g_eg, params.cavity.kappa, params.mecsel.n_2m);
    if g_eg <= kappa {
        return ClosedFormPhotons {
            n_photons: 0.0,
            gain_below_loss: true,
        };
    }
    let a = (g_eg - kappa) * n_2m / (2.0 * kappa * g_eg);
    let b = (g_eg + kappa) * n_2m / (2.0 * kappa * g_eg);
    ClosedFormPhotons {
        n_photons: (a * lambda_ge - b * params.mecsel.l_eg).max(0.0),
        gain_below_loss: false,
    }
}

/// Uniform sweep grid helper: `n` points from `lo` to `hi` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && hi > lo);
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}
