use num_complex::Complex64;

use crate::error::Result;
use crate::physics::quadrature::{integrate_oscillatory, OscillatoryOptions, Phase};
use crate::physics::transmission::{GratingGeometry, Transmission};

/// The three slit parameters that enter the order-intensity ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveSlit {
    pub s_eff_nm: f64,
    pub delta_nm: f64,
    /// `σ² = σ0² + Re R2`; may be negative when the wall term dominates.
    pub sigma_sq_nm2: f64,
}

impl EffectiveSlit {
    /// Plain Kirchhoff slit of width `s`.
    pub fn kirchhoff(s_nm: f64) -> Self {
        Self {
            s_eff_nm: s_nm,
            delta_nm: 0.0,
            sigma_sq_nm2: 0.0,
        }
    }
}

/// First two cumulants of the slit edge distribution and the derived
/// effective slit parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulantSet {
    pub r1: Complex64,
    pub r2: Complex64,
    /// `s0 − 2 Re R1`
    pub s_eff_nm: f64,
    /// `2 Im R1`
    pub delta_nm: f64,
    /// `σ0² + Re R2`
    pub sigma_sq_eff_nm2: f64,
    /// `τ(s0/2)`, the transmission at the slit centre.
    pub tau_center: Complex64,
    /// Achieved relative quadrature error.
    pub quad_rel_error: f64,
    /// Requested relative quadrature error.
    pub quad_tolerance: f64,
    /// Below this distance from the wall the integrand was not sampled, nm.
    pub tail_cutoff_nm: f64,
}

impl CumulantSet {
    pub fn effective(&self) -> EffectiveSlit {
        EffectiveSlit {
            s_eff_nm: self.s_eff_nm,
            delta_nm: self.delta_nm,
            sigma_sq_nm2: self.sigma_sq_eff_nm2,
        }
    }

    fn from_moments(m1: Complex64, m2: Complex64, geometry: &GratingGeometry) -> Self {
        let r2 = m2 - m1 * m1;
        Self {
            r1: m1,
            r2,
            s_eff_nm: geometry.slit_width_nm - 2.0 * m1.re,
            delta_nm: 2.0 * m1.im,
            sigma_sq_eff_nm2: geometry.roughness_variance_nm2 + r2.re,
            tau_center: Complex64::new(1.0, 0.0),
            quad_rel_error: 0.0,
            quad_tolerance: 0.0,
            tail_cutoff_nm: 0.0,
        }
    }
}

/// Cumulants `R1`, `R2` for the `-C3/l³` wall potential, computed from the
/// partially integrated moments
///
/// ```text
/// M1 = s0/2   − ∫₀^{s0/2} τ(ζ)/τ(s0/2) dζ
/// M2 = (s0/2)² − 2∫₀^{s0/2} ζ τ(ζ)/τ(s0/2) dζ
/// R1 = M1,  R2 = M2 − M1².
/// ```
pub fn cumulants(c3_mev_nm3: f64, geometry: &GratingGeometry, velocity_mps: f64) -> Result<CumulantSet> {
    cumulants_with(c3_mev_nm3, geometry, velocity_mps, &OscillatoryOptions::default())
}

pub fn cumulants_with(
    c3_mev_nm3: f64,
    geometry: &GratingGeometry,
    velocity_mps: f64,
    opts: &OscillatoryOptions,
) -> Result<CumulantSet> {
    geometry.validate()?;
    let transmission = Transmission::new(c3_mev_nm3, geometry, velocity_mps)?;
    let h = geometry.half_slit_nm();
    if transmission.is_free() {
        let mut set = CumulantSet::from_moments(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), geometry);
        set.quad_tolerance = opts.rel_tol;
        return Ok(set);
    }
    let integral = integrate_oscillatory(&transmission, |z| [1.0, z], 0.0, h, opts)?;
    let tau_center = Complex64::from_polar(1.0, transmission.phase(h));
    let norm = tau_center.conj();
    let m1 = h - integral.values[0] * norm;
    let m2 = h * h - 2.0 * integral.values[1] * norm;
    let mut set = CumulantSet::from_moments(m1, m2, geometry);
    set.tau_center = tau_center;
    set.quad_rel_error = integral.relative_error();
    set.quad_tolerance = opts.rel_tol;
    set.tail_cutoff_nm = integral.cutoff;
    Ok(set)
}
