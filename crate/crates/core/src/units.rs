//! Unit conventions and physical constants.
//!
//! Energies are in cm⁻¹, lengths in Å and masses in unified atomic mass
//! units. The only conversion coefficient the solvers need is ħ²/2μ in
//! cm⁻¹·Å², derived here once from CODATA 2018 exact/recommended values.

use serde::Serialize;

use crate::error::{Error, Result};

/// Planck constant h (J·s), exact in the 2019 SI.
pub const PLANCK_H: f64 = 6.626_070_15e-34;

/// Speed of light in vacuum c (m/s), exact.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Atomic mass constant m_u (kg), CODATA 2018.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// ħ²/(2·1 u·1 Å²) expressed in cm⁻¹.
///
/// Equal to h / (8π² · c · m_u) with h in J·s, c in cm/s and 1 Å² = 10⁻²⁰ m².
/// Evaluates to 16.857629191640…; the value is pinned in the tests.
pub const HBAR2_OVER_2M: f64 =
    PLANCK_H / (8.0 * std::f64::consts::PI * std::f64::consts::PI * SPEED_OF_LIGHT * 100.0 * ATOMIC_MASS_UNIT * 1.0e-20);

/// Joules per cm⁻¹ (h·c with c in cm/s).
pub const JOULE_PER_WAVENUMBER: f64 = PLANCK_H * SPEED_OF_LIGHT * 100.0;

/// The fixed unit system every module works in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnitSystem {
    pub energy_unit: &'static str,
    pub length_unit: &'static str,
    pub mass_unit: &'static str,
    pub hbar2_over_2m: f64,
}

pub const UNITS: UnitSystem = UnitSystem {
    energy_unit: "cm^-1",
    length_unit: "angstrom",
    mass_unit: "amu",
    hbar2_over_2m: HBAR2_OVER_2M,
};

impl UnitSystem {
    /// Header lines (without comment prefix) describing the unit system.
    pub fn header_lines(&self) -> Vec<String> {
        vec![
            format!("energy_unit = {}", self.energy_unit),
            format!("length_unit = {}", self.length_unit),
            format!("mass_unit = {}", self.mass_unit),
            format!("hbar2_over_2m = {:.15e}", self.hbar2_over_2m),
            "constants = CODATA 2018".to_string(),
        ]
    }
}

/// ħ²/2μ in cm⁻¹·Å² for a reduced mass `mu` in amu.
pub fn kinetic_coefficient(mu: f64) -> Result<f64> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::domain(format!("reduced mass must be positive, got {mu}")));
    }
    Ok(HBAR2_OVER_2M / mu)
}

pub fn wavenumber_to_joule(e: f64) -> f64 {
    e * JOULE_PER_WAVENUMBER
}

pub fn joule_to_wavenumber(e: f64) -> f64 {
    e / JOULE_PER_WAVENUMBER
}
