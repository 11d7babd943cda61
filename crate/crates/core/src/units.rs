//! Physical constants and the fixed unit system.
//!
//! Lengths are nanometres, velocities metres per second, masses atomic mass
//! units, energies milli-electronvolts, `C3` is meV·nm³ and angles are radians
//! (degrees and milliradians appear only at file boundaries).
//!
//! All values from CODATA 2018.

use crate::error::{Error, Result};

/// Planck constant (J·s), exact.
pub const PLANCK_J_S: f64 = 6.626_070_15e-34;

/// Reduced Planck constant (J·s).
pub const HBAR_J_S: f64 = 1.054_571_817e-34;

/// Atomic mass constant (kg).
pub const AMU_KG: f64 = 1.660_539_066_60e-27;

/// Elementary charge (C), exact. One meV is `1e-3` of this in joules.
pub const ELEMENTARY_CHARGE_C: f64 = 1.602_176_634e-19;

/// Boltzmann constant (J/K), exact.
pub const BOLTZMANN_J_K: f64 = 1.380_649e-23;

const MEV_J: f64 = ELEMENTARY_CHARGE_C * 1e-3;
const NM_PER_M: f64 = 1e9;

/// `1 / (ħ · 1 m/s)` in `1 / (meV·nm)`.
///
/// An eikonal phase `C3 · t / (ħ v ζ³)` with `C3` in meV·nm³, `t` and `ζ` in
/// nm and `v` in m/s is `KAPPA_PHASE · C3 · t / (v · ζ³)`, dimensionless.
pub const KAPPA_PHASE: f64 = MEV_J / (HBAR_J_S * NM_PER_M);

/// `h / (1 amu · 1 m/s)` in nm; `λ = LAMBDA_CONST / (m · v)`.
pub const LAMBDA_CONST: f64 = PLANCK_J_S / AMU_KG * NM_PER_M;

/// De Broglie wavelength in nm for a mass in amu and a velocity in m/s.
pub fn de_broglie_wavelength(mass_amu: f64, velocity_mps: f64) -> Result<f64> {
    if !(mass_amu > 0.0) || !mass_amu.is_finite() {
        return Err(Error::Domain(format!("mass must be positive, got {mass_amu}")));
    }
    if !(velocity_mps > 0.0) || !velocity_mps.is_finite() {
        return Err(Error::Domain(format!("velocity must be positive, got {velocity_mps}")));
    }
    Ok(LAMBDA_CONST / (mass_amu * velocity_mps))
}

/// Wavenumber `k = 2π/λ` in 1/nm.
pub fn wavenumber(wavelength_nm: f64) -> f64 {
    2.0 * std::f64::consts::PI / wavelength_nm
}

/// Terminal velocity of an ideal supersonic free-jet expansion,
/// `sqrt(2 cp T0 / m)` with `cp = (f+2)/2 · k_B` for `f` degrees of freedom
/// (`f = 3` for atoms, `f = 5` for diatomic molecules).
pub fn supersonic_velocity(mass_amu: f64, nozzle_temperature_k: f64, degrees_of_freedom: u32) -> f64 {
    let cp_over_kb = (degrees_of_freedom as f64 + 2.0) / 2.0;
    (2.0 * cp_over_kb * BOLTZMANN_J_K * nozzle_temperature_k / (mass_amu * AMU_KG)).sqrt()
}

#[inline]
pub fn deg_to_rad(deg: f64) -> f64 {
    deg.to_radians()
}

#[inline]
pub fn rad_to_deg(rad: f64) -> f64 {
    rad.to_degrees()
}
