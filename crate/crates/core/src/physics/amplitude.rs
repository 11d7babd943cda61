//! Single-slit amplitudes, order intensities and the N-slit pattern.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::physics::cumulants::{CumulantSet, EffectiveSlit};
use crate::physics::quadrature::{integrate_oscillatory, OscillatoryOptions};
use crate::physics::transmission::{GratingGeometry, Transmission};

/// Below this `|κa|` the `sin(κa)/κ` forms use their Taylor branch.
const SMALL_ARGUMENT: f64 = 1e-6;

/// `f_slit` at one diffraction angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitAmplitude {
    /// Amplitude in nm^½.
    pub value: Complex64,
    pub theta_rad: f64,
    /// Wavenumber transfer `κ = k sinθ`, 1/nm.
    pub kappa_per_nm: f64,
}

impl SlitAmplitude {
    pub fn intensity(&self) -> f64 {
        self.value.norm_sqr()
    }
}

fn check_angle(theta: f64) -> Result<()> {
    if !(theta.abs() < 0.5 * PI) {
        return Err(Error::Domain(format!("|θ| must be below π/2, got {theta}")));
    }
    Ok(())
}

fn check_wavelength(wavelength_nm: f64) -> Result<()> {
    if !(wavelength_nm > 0.0 && wavelength_nm.is_finite()) {
        return Err(Error::Domain(format!(
            "wavelength must be positive, got {wavelength_nm}"
        )));
    }
    Ok(())
}

fn kappa(theta: f64, wavelength_nm: f64) -> f64 {
    2.0 * PI * theta.sin() / wavelength_nm
}

/// `sin(κa)/κ` for complex `a`, continuous through `κ = 0`.
fn sin_over_kappa(kappa: f64, a: Complex64) -> Complex64 {
    let x = a * kappa;
    if x.norm() < SMALL_ARGUMENT {
        a * (1.0 - x * x / 6.0)
    } else {
        x.sin() / kappa
    }
}

/// Brute-force single-slit amplitude
/// `f(θ) = (cosθ/√λ) · 2∫₀^{s0/2} cos[κ(s0/2 − ζ)] τ(ζ) dζ`.
pub fn slit_amplitude_direct(theta_rad: f64, transmission: &Transmission, wavelength_nm: f64) -> Result<SlitAmplitude> {
    slit_amplitude_direct_with(theta_rad, transmission, wavelength_nm, &OscillatoryOptions::default())
}

pub fn slit_amplitude_direct_with(
    theta_rad: f64,
    transmission: &Transmission,
    wavelength_nm: f64,
    opts: &OscillatoryOptions,
) -> Result<SlitAmplitude> {
    check_angle(theta_rad)?;
    check_wavelength(wavelength_nm)?;
    let k = kappa(theta_rad, wavelength_nm);
    let h = transmission.half_slit_nm();
    let integral = integrate_oscillatory(transmission, |z| [(k * (h - z)).cos()], k.abs(), h, opts)?;
    let prefactor = theta_rad.cos() / wavelength_nm.sqrt();
    Ok(SlitAmplitude {
        value: integral.values[0] * (2.0 * prefactor),
        theta_rad,
        kappa_per_nm: k,
    })
}

/// Second-order cumulant amplitude
/// `f(θ) = 2(cosθ/√λ) τ(s0/2) e^{−κ²R2/2} sin[κ(s0/2 − R1)]/κ`.
pub fn slit_amplitude_cumulant(
    theta_rad: f64,
    cumulants: &CumulantSet,
    geometry: &GratingGeometry,
    wavelength_nm: f64,
) -> Result<SlitAmplitude> {
    check_angle(theta_rad)?;
    check_wavelength(wavelength_nm)?;
    let k = kappa(theta_rad, wavelength_nm);
    let a = geometry.half_slit_nm() - cumulants.r1;
    let damping = (-0.5 * k * k * cumulants.r2).exp();
    let prefactor = 2.0 * theta_rad.cos() / wavelength_nm.sqrt();
    Ok(SlitAmplitude {
        value: cumulants.tau_center * damping * sin_over_kappa(k, a) * prefactor,
        theta_rad,
        kappa_per_nm: k,
    })
}

/// Principal-maximum angle `θ_n = asin(nλ/d)`.
pub fn diffraction_angle(order: i32, wavelength_nm: f64, period_nm: f64) -> Result<f64> {
    check_wavelength(wavelength_nm)?;
    let ratio = order as f64 * wavelength_nm / period_nm;
    if ratio.abs() > 1.0 {
        return Err(Error::Evanescent {
            order,
            ratio: ratio.abs(),
        });
    }
    Ok(ratio.asin())
}

/// `I_n / I_0` of the principal maxima for an effective slit, including the
/// Debye–Waller roughness damping:
///
/// ```text
/// I_n/I_0 = e^{−(2πnσ/d)²} [sin²(πn s/d) + sinh²(πn δ/d)] / (πn √(s²+δ²)/d)²
/// ```
pub fn intensity_ratio(order: i32, slit: &EffectiveSlit, period_nm: f64) -> f64 {
    intensity_ratio_continuous(order as f64, slit, period_nm)
}

/// [`intensity_ratio`] for a continuous order, used for plotting envelopes.
pub fn intensity_ratio_continuous(order: f64, slit: &EffectiveSlit, period_nm: f64) -> f64 {
    if order == 0.0 {
        return 1.0;
    }
    let x = PI * order / period_nm;
    let (s, delta) = (slit.s_eff_nm, slit.delta_nm);
    let debye_waller = (-4.0 * x * x * slit.sigma_sq_nm2).exp();
    let bracket = (x * s).sin().powi(2) + (x * delta).sinh().powi(2);
    debye_waller * bracket / (x * x * (s * s + delta * delta))
}

/// `[sin(N x) / sin(x)]²` with the principal-maximum limit `N²`.
pub fn grating_factor(slits: u32, x: f64) -> f64 {
    let n = slits as f64;
    if slits == 1 {
        return 1.0;
    }
    let y = x - PI * (x / PI).round();
    if (n * y).abs() < 1e-4 {
        n * n * (1.0 - (n * n - 1.0) * y * y / 3.0)
    } else {
        ((n * y).sin() / y.sin()).powi(2)
    }
}

/// N-slit intensity `[sin(½Nkd sinθ)/sin(½kd sinθ)]² |f_slit(θ)|²` on a grid
/// of angles, using the cumulant amplitude.
pub fn full_pattern(
    theta_grid: &[f64],
    slits: u32,
    cumulants: &CumulantSet,
    geometry: &GratingGeometry,
    wavelength_nm: f64,
) -> Result<Vec<f64>> {
    if slits == 0 {
        return Err(Error::Domain("slit count must be at least 1".into()));
    }
    let k = crate::units::wavenumber(wavelength_nm);
    theta_grid
        .iter()
        .map(|&theta| {
            let amp = slit_amplitude_cumulant(theta, cumulants, geometry, wavelength_nm)?;
            let x = 0.5 * k * geometry.period_nm * theta.sin();
            Ok(grating_factor(slits, x) * amp.intensity())
        })
        .collect()
}
