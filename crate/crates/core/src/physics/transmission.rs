use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::physics::quadrature::Phase;
use crate::units::KAPPA_PHASE;

/// Cross-section of a transmission grating with trapezoidal bars.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GratingGeometry {
    pub period_nm: f64,
    /// Geometric slit width `s0`.
    pub slit_width_nm: f64,
    /// Bar thickness along the beam, `t`.
    pub thickness_nm: f64,
    /// Wedge angle of the bar walls, `β`.
    pub wedge_angle_rad: f64,
    /// Variance of the geometric slit width from wall roughness, `σ0²`.
    pub roughness_variance_nm2: f64,
}

impl GratingGeometry {
    pub fn validate(&self) -> Result<()> {
        let g = self;
        if !(g.period_nm > 0.0 && g.period_nm.is_finite()) {
            return Err(Error::Validation(format!(
                "period must be positive, got {}",
                g.period_nm
            )));
        }
        if !(g.slit_width_nm > 0.0 && g.slit_width_nm < g.period_nm) {
            return Err(Error::Validation(format!(
                "slit width must lie in (0, d = {}), got {}",
                g.period_nm, g.slit_width_nm
            )));
        }
        if !(g.thickness_nm > 0.0 && g.thickness_nm.is_finite()) {
            return Err(Error::Validation(format!(
                "bar thickness must be positive, got {}",
                g.thickness_nm
            )));
        }
        if !(g.wedge_angle_rad >= 0.0 && g.wedge_angle_rad < std::f64::consts::FRAC_PI_2) {
            return Err(Error::Validation(format!(
                "wedge angle must lie in [0, π/2), got {} rad",
                g.wedge_angle_rad
            )));
        }
        if !(g.roughness_variance_nm2 >= 0.0 && g.roughness_variance_nm2.is_finite()) {
            return Err(Error::Validation(format!(
                "roughness variance must be non-negative, got {}",
                g.roughness_variance_nm2
            )));
        }
        Ok(())
    }

    pub fn half_slit_nm(&self) -> f64 {
        0.5 * self.slit_width_nm
    }

    /// Copy with the wedge angle replaced.
    pub fn with_wedge_angle(&self, wedge_angle_rad: f64) -> Self {
        Self {
            wedge_angle_rad,
            ..*self
        }
    }

    pub fn with_slit_width(&self, slit_width_nm: f64) -> Self {
        Self { slit_width_nm, ..*self }
    }
}

/// A molecular beam.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamSpec {
    pub species: String,
    pub mass_amu: f64,
    pub velocity_mps: f64,
    /// Relative velocity spread (FWHM).
    pub dv_over_v: f64,
    /// Static dipole polarizability in Å³, used only for the C3–α fit.
    pub polarizability_a3: Option<f64>,
}

impl BeamSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass_amu > 0.0 && self.mass_amu.is_finite()) {
            return Err(Error::Validation(format!(
                "mass must be positive, got {}",
                self.mass_amu
            )));
        }
        if !(self.velocity_mps > 0.0 && self.velocity_mps.is_finite()) {
            return Err(Error::Validation(format!(
                "velocity must be positive, got {}",
                self.velocity_mps
            )));
        }
        if !(self.dv_over_v >= 0.0 && self.dv_over_v < 1.0) {
            return Err(Error::Validation(format!(
                "dv/v must lie in [0, 1), got {}",
                self.dv_over_v
            )));
        }
        Ok(())
    }

    pub fn wavelength_nm(&self) -> Result<f64> {
        crate::units::de_broglie_wavelength(self.mass_amu, self.velocity_mps)
    }
}

/// Eikonal transmission through one slit, `τ(ζ) = exp(iφ(ζ))`, with `ζ` the
/// distance from the nearer bar wall.
///
/// For a trapezoidal bar of thickness `t` and wedge angle `β`,
///
/// ```text
/// φ(ζ) = (t cosβ / ħv) · (C3/ζ³) · (1 + t tanβ / 2ζ) / (1 + t tanβ / ζ)²
///      = A (ζ + b/2) / (ζ² (ζ + b)²),   A = t cosβ C3 / ħv,  b = t tanβ.
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transmission {
    strength: f64,
    wedge_length: f64,
    half_slit: f64,
}

impl Transmission {
    pub fn new(c3_mev_nm3: f64, geometry: &GratingGeometry, velocity_mps: f64) -> Result<Self> {
        if !(velocity_mps > 0.0 && velocity_mps.is_finite()) {
            return Err(Error::Domain(format!("velocity must be positive, got {velocity_mps}")));
        }
        if !(c3_mev_nm3 >= 0.0 && c3_mev_nm3.is_finite()) {
            return Err(Error::Domain(format!("C3 must be non-negative, got {c3_mev_nm3}")));
        }
        let beta = geometry.wedge_angle_rad;
        Ok(Self {
            strength: KAPPA_PHASE * geometry.thickness_nm * beta.cos() * c3_mev_nm3 / velocity_mps,
            wedge_length: geometry.thickness_nm * beta.tan(),
            half_slit: geometry.half_slit_nm(),
        })
    }

    pub fn is_free(&self) -> bool {
        self.strength == 0.0
    }

    pub fn half_slit_nm(&self) -> f64 {
        self.half_slit
    }

    /// `τ(ζ)`. Fails for `ζ ≤ 0` where the potential diverges.
    pub fn tau(&self, zeta_nm: f64) -> Result<Complex64> {
        if !(zeta_nm > 0.0) {
            return Err(Error::Domain(format!("ζ must be positive, got {zeta_nm}")));
        }
        Ok(Complex64::from_polar(1.0, self.phase(zeta_nm)))
    }
}

impl Phase for Transmission {
    fn phase(&self, zeta: f64) -> f64 {
        if self.strength == 0.0 {
            return 0.0;
        }
        let b = self.wedge_length;
        let zb = zeta + b;
        self.strength * (zeta + 0.5 * b) / (zeta * zeta * zb * zb)
    }

    fn phase_derivative(&self, zeta: f64) -> f64 {
        if self.strength == 0.0 {
            return 0.0;
        }
        let b = self.wedge_length;
        let zb = zeta + b;
        -self.strength * (3.0 * zeta * zeta + 3.0 * b * zeta + b * b) / (zeta.powi(3) * zb.powi(3))
    }
}

/// `τ(ζ)` for the given interaction; see [`Transmission`].
pub fn transmission_function(
    zeta_nm: f64,
    c3_mev_nm3: f64,
    geometry: &GratingGeometry,
    velocity_mps: f64,
) -> Result<Complex64> {
    Transmission::new(c3_mev_nm3, geometry, velocity_mps)?.tau(zeta_nm)
}

/// Atom–surface van der Waals potential `V(l) = -C3 / l³` in meV.
pub fn vdw_potential(c3_mev_nm3: f64, distance_nm: f64) -> Result<f64> {
    if !(distance_nm > 0.0) {
        return Err(Error::Domain(format!(
            "distance from the wall must be positive, got {distance_nm}"
        )));
    }
    Ok(-c3_mev_nm3 / distance_nm.powi(3))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grating() -> GratingGeometry {
        GratingGeometry {
            period_nm: 100.0,
            slit_width_nm: 50.0,
            thickness_nm: 120.0,
            wedge_angle_rad: 7.5f64.to_radians(),
            roughness_variance_nm2: 0.0,
        }
    }

    #[test]
    fn potential_cube_law() {
        assert_eq!(vdw_potential(1.0, 1.0).unwrap(), -1.0);
        assert_eq!(vdw_potential(1.0, 2.0).unwrap(), -0.125);
        assert_eq!(vdw_potential(0.0, 3.7).unwrap(), 0.0);
        assert!(vdw_potential(1.0, 0.0).is_err());
        assert!(vdw_potential(1.0, -1.0).is_err());
    }

    #[test]
    fn zero_coupling_is_identity() {
        for z in [0.01, 1.0, 25.0] {
            assert_eq!(
                transmission_function(z, 0.0, &grating(), 1000.0).unwrap(),
                Complex64::new(1.0, 0.0)
            );
        }
    }

    #[test]
    fn straight_walls_reduce_to_cube_law_phase() {
        let g = GratingGeometry {
            wedge_angle_rad: 0.0,
            ..grating()
        };
        let (z, c3, v) = (2.3, 0.17, 850.0);
        let expected = KAPPA_PHASE * g.thickness_nm * c3 / (v * z * z * z);
        let tau = transmission_function(z, c3, &g, v).unwrap();
        assert!((tau - Complex64::from_polar(1.0, expected)).norm() < 1e-12);
    }

    #[test]
    fn closed_form_matches_literal_expression() {
        let g = grating();
        let (c3, v) = (0.3, 500.0);
        let tr = Transmission::new(c3, &g, v).unwrap();
        let (t, beta) = (g.thickness_nm, g.wedge_angle_rad);
        for z in [0.05f64, 0.7, 3.0, 11.0, 24.9] {
            let literal = KAPPA_PHASE * t * beta.cos() / v * c3 / z.powi(3) * (1.0 + t / (2.0 * z) * beta.tan())
                / (1.0 + t / z * beta.tan()).powi(2);
            assert!((tr.phase(z) - literal).abs() <= 1e-13 * literal.abs());
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let tr = Transmission::new(0.2, &grating(), 700.0).unwrap();
        for z in [0.1, 1.0, 5.0, 20.0] {
            let h = z * 1e-6;
            let fd = (tr.phase(z + h) - tr.phase(z - h)) / (2.0 * h);
            let an = tr.phase_derivative(z);
            assert!((fd - an).abs() < 1e-7 * an.abs(), "{z}: {fd} vs {an}");
        }
    }

    #[test]
    fn non_positive_zeta_rejected() {
        assert!(transmission_function(0.0, 0.1, &grating(), 1000.0).is_err());
        assert!(transmission_function(-1.0, 0.1, &grating(), 1000.0).is_err());
    }

    #[test]
    fn geometry_validation() {
        assert!(grating().validate().is_ok());
        assert!(grating().with_slit_width(100.0).validate().is_err());
        assert!(grating()
            .with_wedge_angle(std::f64::consts::FRAC_PI_2)
            .validate()
            .is_err());
        let mut g = grating();
        g.roughness_variance_nm2 = -1.0;
        assert!(g.validate().is_err());
    }

    proptest::proptest! {
        #[test]
        fn unit_modulus(z in 1e-3f64..50.0, c3 in 0.0f64..2.0, v in 100.0f64..5000.0,
                        beta in 0.0f64..1.2, t in 10.0f64..300.0) {
            let g = GratingGeometry { thickness_nm: t, wedge_angle_rad: beta, ..grating() };
            let tau = transmission_function(z, c3, &g, v).unwrap();
            proptest::prop_assert!((tau.norm() - 1.0).abs() < 1e-12);
        }
    }
}
