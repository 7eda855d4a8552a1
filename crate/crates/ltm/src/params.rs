//! Model parameters for the coupled NV-diamond + MECSEL + cavity system.
//!
//! All values are strict SI: rates in Hz, powers in W, lengths in m. The
//! config loader in [`crate::config`] is the single point where external
//! values enter; nothing in here converts units.

use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};

/// NV-center parameters: six-level rate model plus the coherently driven
/// ground-state spin transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NVParams {
    /// Spontaneous decay |2⟩→|1⟩ (excited → ground, m_S=0), Hz
    pub l21: f64,
    /// Spontaneous decay |4⟩→|3⟩ (excited → ground, m_S=±1), Hz
    pub l43: f64,
    /// Intersystem crossing |2⟩→|5⟩, Hz
    pub l25: f64,
    /// Intersystem crossing |4⟩→|5⟩, Hz
    pub l45: f64,
    /// Upper → lower singlet decay |5⟩→|6⟩, Hz
    pub l56: f64,
    /// Lower singlet → ground m_S=0 decay |6⟩→|1⟩, Hz
    pub l61: f64,
    /// Lower singlet → ground m_S=±1 decay |6⟩→|3⟩, Hz
    pub l63: f64,
    /// Ground-state spin dephasing rate 1/T2*, Hz
    pub gamma13: f64,
    /// Optical pump rate Λ_NV, Hz
    pub lambda_nv: f64,
    /// Microwave Rabi frequency Ω, Hz
    pub omega: f64,
    /// Microwave detuning Δ from the spin resonance, Hz
    pub delta: f64,
    /// Absorptive cavity coupling of the lower singlet G_S, Hz
    pub g_s: f64,
    /// Number of NV centers contributing to the cavity mode
    pub n_nv: f64,
    /// Pump-rate coefficient Λ_NV per watt of 532 nm pump, Hz/W
    pub pump_rate_per_watt: f64,
}

impl Default for NVParams {
    fn default() -> Self {
        Self {
            l21: 66.16e6,
            l43: 66.16e6,
            l25: 11.1e6,
            l45: 91.8e6,
            l56: 10e9,
            l61: 4.87e6,
            l63: 2.04e6,
            gamma13: 5e6,
            lambda_nv: 0.52e6,
            omega: 0.83e6,
            delta: 0.0,
            g_s: 463e6,
            n_nv: 3.2e12,
            pump_rate_per_watt: 0.104e6,
        }
    }
}

/// MECSEL gain medium, modeled as a pumped two-level emitter ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MecselParams {
    /// Spontaneous decay rate L_eg, Hz
    pub l_eg: f64,
    /// Gain cavity coupling G_eg, Hz
    pub g_eg: f64,
    /// Pump rate Λ_ge, Hz
    pub lambda_ge: f64,
    /// Number of emitters coupled to the cavity mode
    pub n_2m: f64,
    /// Pump-rate coefficient Λ_ge per watt of 808 nm pump, Hz/W
    pub pump_rate_per_watt: f64,
}

impl Default for MecselParams {
    fn default() -> Self {
        Self {
            l_eg: 1.26e6,
            g_eg: 188.3e6,
            // 1.5 W of MECSEL pump: inside the resonant-switch-off window of
            // the default NV parameters.
            lambda_ge: 15.6e6,
            n_2m: 3.2e12,
            pump_rate_per_watt: 10.4e6,
        }
    }
}

/// Optical cavity parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    /// Total cavity loss rate κ, Hz
    pub kappa: f64,
    /// Loss rate through the outcoupling mirror κ_mirror, Hz
    pub kappa_mirror: f64,
    /// Lasing wavelength, m
    pub wavelength: f64,
}

impl Default for CavityParams {
    fn default() -> Self {
        Self {
            kappa: 154e6,
            kappa_mirror: 75e6,
            wavelength: 1042e-9,
        }
    }
}

/// Complete, immutable parameter set for one operating point of the model.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ModelParams {
    pub nv: NVParams,
    pub mecsel: MecselParams,
    pub cavity: CavityParams,
    pub constants: PhysicalConstants,
}

impl ModelParams {
    /// Checks every type invariant and returns the collected violations, not
    /// just the first one.
    pub fn validate(&self) -> Result<()> {
        let mut violations = Vec::new();

        let nv_rates = [
            ("nv.L21", self.nv.l21),
            ("nv.L43", self.nv.l43),
            ("nv.L25", self.nv.l25),
            ("nv.L45", self.nv.l45),
            ("nv.L56", self.nv.l56),
            ("nv.L61", self.nv.l61),
            ("nv.L63", self.nv.l63),
            ("nv.Gamma13", self.nv.gamma13),
            ("nv.Lambda_NV", self.nv.lambda_nv),
            ("nv.Omega", self.nv.omega),
            ("nv.G_S", self.nv.g_s),
            ("nv.pump_rate_per_watt", self.nv.pump_rate_per_watt),
        ];
        for (name, value) in nv_rates {
            if !(value >= 0.0) {
                violations.push(format!("negative rate {name} = {value}"));
            }
        }
        if !(self.nv.n_nv > 0.0) {
            violations.push(format!(
                "ensemble size must be positive: nv.N_NV = {}",
                self.nv.n_nv
            ));
        }
        if !self.nv.delta.is_finite() {
            violations.push(format!("nv.Delta must be finite, got {}", self.nv.delta));
        }

        let mecsel_rates = [
            ("mecsel.L_eg", self.mecsel.l_eg),
            ("mecsel.G_eg", self.mecsel.g_eg),
            ("mecsel.Lambda_ge", self.mecsel.lambda_ge),
            ("mecsel.pump_rate_per_watt", self.mecsel.pump_rate_per_watt),
        ];
        for (name, value) in mecsel_rates {
            if !(value >= 0.0) {
                violations.push(format!("negative rate {name} = {value}"));
            }
        }
        if !(self.mecsel.n_2m > 0.0) {
            violations.push(format!(
                "ensemble size must be positive: mecsel.N_2M = {}",
                self.mecsel.n_2m
            ));
        }

        if !(self.cavity.kappa_mirror > 0.0) {
            violations.push(format!(
                "cavity.kappa_mirror must be positive, got {}",
                self.cavity.kappa_mirror
            ));
        } else if self.cavity.kappa_mirror > self.cavity.kappa {
            violations.push(format!(
                "mirror loss exceeds total loss: cavity.kappa_mirror = {} > cavity.kappa = {}",
                self.cavity.kappa_mirror, self.cavity.kappa
            ));
        }
        if !(self.cavity.wavelength > 0.0) {
            violations.push(format!(
                "cavity.wavelength must be positive, got {}",
                self.cavity.wavelength
            ));
        }

        for (name, value) in [
            ("constants.planck_h", self.constants.planck_h),
            ("constants.electron_g", self.constants.electron_g),
            ("constants.bohr_magneton", self.constants.bohr_magneton),
            ("constants.speed_of_light", self.constants.speed_of_light),
        ] {
            if !(value > 0.0) {
                violations.push(format!("{name} must be positive, got {value}"));
            }
        }

        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams { violations })
        }
    }

    /// Validating constructor form of [`ModelParams::validate`].
    pub fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    /// Energy of one cavity photon in J.
    pub fn photon_energy(&self) -> Result<f64> {
        photon_energy_with(self.cavity.wavelength, &self.constants)
    }
}

/// Converts a pump power to the corresponding pump rate, `power × rate_per_watt`.
pub fn pump_power_to_rate(power_w: f64, rate_per_watt: f64) -> Result<f64> {
    if !(power_w >= 0.0) {
        return Err(Error::NegativePower { power: power_w });
    }
    Ok(power_w * rate_per_watt)
}

/// Photon energy h·c/λ in J for CODATA constants.
pub fn photon_energy(wavelength_m: f64) -> Result<f64> {
    photon_energy_with(wavelength_m, &PhysicalConstants::default())
}

/// Photon energy h·c/λ in J for explicit constants.
pub fn photon_energy_with(wavelength_m: f64, constants: &PhysicalConstants) -> Result<f64> {
    if !(wavelength_m > 0.0) {
        return Err(Error::NonPositiveWavelength {
            wavelength: wavelength_m,
        });
    }
    Ok(constants.planck_h * constants.speed_of_light / wavelength_m)
}
