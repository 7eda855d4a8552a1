//! Fundamental constants used to convert between frequency and magnetic-field units.

use serde::{Deserialize, Serialize};

/// Planck constant in J·s (exact, 2019 SI).
pub const PLANCK_H: f64 = 6.62607015e-34;

/// Electron g-factor (CODATA 2018), dimensionless.
pub const ELECTRON_G: f64 = 2.00231930436256;

/// Bohr magneton in J/T (CODATA 2018).
pub const BOHR_MAGNETON: f64 = 9.2740100783e-24;

/// Speed of light in m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Fundamental constants bundle. Kept on [`crate::params::ModelParams`] so a
/// loaded configuration pins every number that enters the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Planck constant, J·s
    pub planck_h: f64,
    /// Electron g-factor, dimensionless
    pub electron_g: f64,
    /// Bohr magneton, J/T
    pub bohr_magneton: f64,
    /// Speed of light, m/s
    pub speed_of_light: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            planck_h: PLANCK_H,
            electron_g: ELECTRON_G,
            bohr_magneton: BOHR_MAGNETON,
            speed_of_light: SPEED_OF_LIGHT,
        }
    }
}

impl PhysicalConstants {
    /// Electron gyromagnetic ratio γ_e = g_e·μ_B/h in Hz/T (≈ 28.02 GHz/T).
    pub fn gyromagnetic_ratio(&self) -> f64 {
        self.electron_g * self.bohr_magneton / self.planck_h
    }

    /// Field-per-frequency factor h/(g_e·μ_B) = 1/γ_e in T/Hz.
    pub fn field_per_hz(&self) -> f64 {
        self.planck_h / (self.electron_g * self.bohr_magneton)
    }
}
