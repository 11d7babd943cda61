use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fitting::minimizer::{minimize, Bounds, MinimizerOptions};
use crate::fitting::{summarize, FitResult, Weighting};
use crate::physics::{cumulants, GratingGeometry};

/// Effective slit width measured at one beam velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct SeffPoint {
    pub velocity_mps: f64,
    pub s_eff_nm: f64,
    pub uncertainty_nm: f64,
    pub grating: String,
    pub species: String,
}

impl SeffPoint {
    pub fn validate(&self) -> Result<()> {
        if !(self.velocity_mps > 0.0 && self.velocity_mps.is_finite()) {
            return Err(Error::Validation(format!(
                "velocity must be positive, got {}",
                self.velocity_mps
            )));
        }
        if !(self.uncertainty_nm >= 0.0) {
            return Err(Error::Validation(format!(
                "negative uncertainty {}",
                self.uncertainty_nm
            )));
        }
        if !self.s_eff_nm.is_finite() {
            return Err(Error::Validation("s_eff is not finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C3S0Params {
    pub c3_mev_nm3: f64,
    pub s0_nm: f64,
}

/// `s0 − 2 Re R1(C3, v)` for a grating of nominal width `s0`.
pub fn seff_model(c3_mev_nm3: f64, s0_nm: f64, geometry: &GratingGeometry, velocity_mps: f64) -> Result<f64> {
    let g = geometry.with_slit_width(s0_nm);
    Ok(cumulants(c3_mev_nm3, &g, velocity_mps)?.s_eff_nm)
}

const C3_SCALE: f64 = 0.1;
const C3_START: f64 = 0.05;
const NARROW_VELOCITY_RATIO: f64 = 1.5;

fn c3_minimizer_options() -> MinimizerOptions {
    // each objective evaluation costs one cumulant quadrature per point
    MinimizerOptions {
        simplex_iterations: 30,
        ..MinimizerOptions::default()
    }
}

fn check_points(points: &[SeffPoint], min: usize) -> Result<()> {
    if points.len() < min {
        return Err(Error::UnderDetermined(format!(
            "need at least {min} effective-width points, got {}",
            points.len()
        )));
    }
    points.iter().try_for_each(SeffPoint::validate)
}

fn weights(points: &[SeffPoint]) -> (Weighting, Vec<f64>) {
    let u: Vec<f64> = points.iter().map(|p| p.uncertainty_nm).collect();
    let w = Weighting::from_uncertainties(&u);
    let weights = match w {
        Weighting::Absolute => u.iter().map(|x| 1.0 / x).collect(),
        Weighting::Uniform => vec![1.0; u.len()],
    };
    (w, weights)
}

fn seff_residuals(
    points: &[SeffPoint],
    weights: &[f64],
    geometry: &GratingGeometry,
    c3: f64,
    s0: f64,
) -> Result<Vec<f64>> {
    points
        .par_iter()
        .zip(weights)
        .map(|(p, w)| Ok(w * (p.s_eff_nm - seff_model(c3, s0, geometry, p.velocity_mps)?)))
        .collect()
}

/// Joint fit of `(C3, s0)` to effective widths measured at several
/// velocities, with `C3 ≥ 0` and `0 < s0 < d`.
pub fn fit_c3_s0(points: &[SeffPoint], geometry: &GratingGeometry) -> Result<FitResult<C3S0Params>> {
    geometry.validate()?;
    check_points(points, 3)?;
    let (weighting, w) = weights(points);
    let d = geometry.period_nm;

    let mut warnings = Vec::new();
    let vmin = points.iter().map(|p| p.velocity_mps).fold(f64::INFINITY, f64::min);
    let vmax = points.iter().map(|p| p.velocity_mps).fold(0.0, f64::max);
    if vmax == vmin {
        warnings.push("all points share one velocity: C3 and s0 are not separately identifiable".into());
    } else if vmax / vmin < NARROW_VELOCITY_RATIO {
        warnings.push(format!(
            "velocity range max/min = {:.3} is below {NARROW_VELOCITY_RATIO}: C3 and s0 are poorly separated",
            vmax / vmin
        ));
    }

    let s_start = points.iter().map(|p| p.s_eff_nm).fold(f64::NEG_INFINITY, f64::max) + 1.0;
    let x0 = [C3_START / C3_SCALE, s_start.clamp(0.01 * d, 0.99 * d) / d];
    let bounds = Bounds {
        lower: vec![0.0, 1e-6],
        upper: vec![f64::INFINITY, 1.0 - 1e-6],
    };
    let residuals = |x: &[f64]| seff_residuals(points, &w, geometry, x[0] * C3_SCALE, x[1] * d);
    let minimum = minimize(residuals, &x0, &bounds, &c3_minimizer_options())?;
    let summary = summarize(
        &minimum,
        &[("C3", "meV nm^3"), ("s0", "nm")],
        &[C3_SCALE, d],
        weighting,
        warnings,
    );
    let params = C3S0Params {
        c3_mev_nm3: summary.parameters[0].value,
        s0_nm: summary.parameters[1].value,
    };
    Ok(FitResult { params, summary })
}

/// One-parameter fit of `C3 ≥ 0` with the nominal width frozen at `s0`.
pub fn fit_c3_fixed_s0(points: &[SeffPoint], geometry: &GratingGeometry, s0_nm: f64) -> Result<FitResult<f64>> {
    let g = geometry.with_slit_width(s0_nm);
    g.validate()?;
    check_points(points, 1)?;
    let (weighting, w) = weights(points);
    let bounds = Bounds {
        lower: vec![0.0],
        upper: vec![f64::INFINITY],
    };
    let residuals = |x: &[f64]| seff_residuals(points, &w, &g, x[0] * C3_SCALE, s0_nm);
    let minimum = minimize(residuals, &[C3_START / C3_SCALE], &bounds, &c3_minimizer_options())?;
    let summary = summarize(&minimum, &[("C3", "meV nm^3")], &[C3_SCALE], weighting, Vec::new());
    Ok(FitResult {
        params: summary.parameters[0].value,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaSensitivity {
    pub delta_beta_rad: f64,
    pub c3_minus: f64,
    pub c3_central: f64,
    pub c3_plus: f64,
}

impl BetaSensitivity {
    /// Half the spread of the three fits, taken as the systematic error.
    pub fn half_spread(&self) -> f64 {
        let hi = self.c3_minus.max(self.c3_central).max(self.c3_plus);
        let lo = self.c3_minus.min(self.c3_central).min(self.c3_plus);
        0.5 * (hi - lo)
    }

    pub fn relative_half_spread(&self) -> f64 {
        self.half_spread() / self.c3_central
    }
}

/// Repeats the fixed-`s0` fit with the wedge angle moved by `±Δβ`.
pub fn beta_sensitivity(
    points: &[SeffPoint],
    geometry: &GratingGeometry,
    s0_nm: f64,
    delta_beta_rad: f64,
) -> Result<BetaSensitivity> {
    if !(delta_beta_rad >= 0.0 && delta_beta_rad.is_finite()) {
        return Err(Error::Validation(format!(
            "delta beta must be non-negative, got {delta_beta_rad}"
        )));
    }
    let beta = geometry.wedge_angle_rad;
    if beta - delta_beta_rad < 0.0 {
        return Err(Error::Validation(format!(
            "beta - delta beta = {:.4} rad is negative",
            beta - delta_beta_rad
        )));
    }
    let fit_at = |b: f64| fit_c3_fixed_s0(points, &geometry.with_wedge_angle(b), s0_nm).map(|f| f.params);
    Ok(BetaSensitivity {
        delta_beta_rad,
        c3_minus: fit_at(beta - delta_beta_rad)?,
        c3_central: fit_at(beta)?,
        c3_plus: fit_at(beta + delta_beta_rad)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grating_i() -> GratingGeometry {
        GratingGeometry {
            period_nm: 100.0,
            slit_width_nm: 50.0,
            thickness_nm: 120.0,
            wedge_angle_rad: 7.5f64.to_radians(),
            roughness_variance_nm2: 0.0,
        }
    }

    fn points(c3: f64, s0: f64, velocities: &[f64]) -> Vec<SeffPoint> {
        velocities
            .iter()
            .map(|&v| SeffPoint {
                velocity_mps: v,
                s_eff_nm: seff_model(c3, s0, &grating_i(), v).unwrap(),
                uncertainty_nm: 0.1,
                grating: "I".into(),
                species: "He".into(),
            })
            .collect()
    }

    #[test]
    fn joint_round_trip() {
        let fit = fit_c3_s0(&points(0.1, 50.0, &[500.0, 1000.0, 2000.0]), &grating_i()).unwrap();
        assert!((fit.params.c3_mev_nm3 - 0.1).abs() < 1e-5, "{:?}", fit.params);
        assert!((fit.params.s0_nm - 50.0).abs() < 50.0 * 1e-4, "{:?}", fit.params);
        assert!(fit.summary.warnings.is_empty(), "{:?}", fit.summary.warnings);
    }

    #[test]
    fn single_velocity_is_flagged() {
        let fit = fit_c3_s0(&points(0.1, 50.0, &[1000.0, 1000.0, 1000.0]), &grating_i()).unwrap();
        assert!(!fit.summary.warnings.is_empty());
    }

    #[test]
    fn fixed_s0_single_point() {
        let fit = fit_c3_fixed_s0(&points(0.2, 50.0, &[800.0]), &grating_i(), 50.0).unwrap();
        assert!((fit.params - 0.2).abs() < 1e-6, "{}", fit.params);
    }

    #[test]
    fn free_data_hits_the_bound() {
        let pts: Vec<SeffPoint> = points(0.0, 50.0, &[700.0, 1400.0]);
        let fit = fit_c3_fixed_s0(&pts, &grating_i(), 50.0).unwrap();
        assert_eq!(fit.params, 0.0);
        assert!(fit.summary.parameters[0].at_bound);
    }

    #[test]
    fn zero_delta_beta_gives_identical_fits() {
        let s = beta_sensitivity(&points(0.1, 50.0, &[1000.0]), &grating_i(), 50.0, 0.0).unwrap();
        assert_eq!(s.c3_minus, s.c3_central);
        assert_eq!(s.c3_plus, s.c3_central);
        assert_eq!(s.half_spread(), 0.0);
    }

    #[test]
    fn too_few_points() {
        let err = fit_c3_s0(&points(0.1, 50.0, &[500.0, 1000.0]), &grating_i()).unwrap_err();
        assert!(matches!(err, Error::UnderDetermined(_)));
    }
}
