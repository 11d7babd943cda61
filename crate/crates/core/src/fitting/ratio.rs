use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::fitting::minimizer::{minimize, Bounds, MinimizerOptions};
use crate::fitting::{summarize, FitResult, Weighting};
use crate::io::peaks::PeakTable;
use crate::physics::{intensity_ratio, EffectiveSlit, GratingGeometry};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioFitParams {
    pub s_eff_nm: f64,
    /// `|2 Im R1|`; only its square enters the intensities.
    pub delta_nm: f64,
    /// Square root of the Debye-Waller variance.
    pub sigma_nm: f64,
}

impl RatioFitParams {
    pub fn effective(&self) -> EffectiveSlit {
        EffectiveSlit {
            s_eff_nm: self.s_eff_nm,
            delta_nm: self.delta_nm,
            sigma_sq_nm2: self.sigma_nm * self.sigma_nm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioFitOptions {
    pub minimizer: MinimizerOptions,
    pub initial_delta_nm: f64,
    pub initial_sigma_nm: f64,
}

impl Default for RatioFitOptions {
    fn default() -> Self {
        Self {
            minimizer: MinimizerOptions::default(),
            initial_delta_nm: 0.1,
            initial_sigma_nm: 1.0,
        }
    }
}

/// `I_n / I_1` predicted by the effective-slit model.
pub fn ratio_model(order: i32, params: &RatioFitParams, period_nm: f64) -> f64 {
    let slit = params.effective();
    intensity_ratio(order, &slit, period_nm) / intensity_ratio(1, &slit, period_nm)
}

/// A measured `I_n/I_1` with its propagated uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredRatio {
    pub order: i32,
    pub ratio: f64,
    pub uncertainty: f64,
}

/// The `|n| ≥ 2` ratios a ratio fit is run against.
pub fn measured_ratios(peaks: &PeakTable) -> Result<Vec<MeasuredRatio>> {
    peaks.validate()?;
    let distinct: BTreeSet<i32> = peaks
        .entries
        .iter()
        .filter(|e| e.order != 0)
        .map(|e| e.order.abs())
        .collect();
    if distinct.len() < 4 {
        return Err(Error::UnderDetermined(format!(
            "ratio fit needs at least 4 distinct |n| >= 1, found {}",
            distinct.len()
        )));
    }
    let first: Vec<_> = peaks.entries.iter().filter(|e| e.order.abs() == 1).collect();
    if first.is_empty() {
        return Err(Error::UnderDetermined("no first-order peak to normalize to".into()));
    }
    let k = first.len() as f64;
    let i1 = first.iter().map(|e| e.area).sum::<f64>() / k;
    let u1 = first.iter().map(|e| e.area_uncertainty.powi(2)).sum::<f64>().sqrt() / k;
    if !(i1 > 0.0) {
        return Err(Error::Validation("first-order area is zero".into()));
    }
    Ok(peaks
        .entries
        .iter()
        .filter(|e| e.order.abs() >= 2)
        .map(|e| {
            let ratio = e.area / i1;
            let uncertainty = ((e.area_uncertainty / i1).powi(2) + (ratio * u1 / i1).powi(2)).sqrt();
            MeasuredRatio {
                order: e.order,
                ratio,
                uncertainty,
            }
        })
        .collect())
}

/// Kirchhoff inversion of `I2/I1 = cos²(π s/d)`, on the branch nearest `s0`.
fn kirchhoff_width(data: &[MeasuredRatio], geometry: &GratingGeometry) -> f64 {
    let d = geometry.period_nm;
    let s0 = geometry.slit_width_nm;
    let second: Vec<f64> = data.iter().filter(|r| r.order.abs() == 2).map(|r| r.ratio).collect();
    if second.is_empty() {
        return s0;
    }
    let r = (second.iter().sum::<f64>() / second.len() as f64).clamp(0.0, 1.0);
    let x = r.sqrt().acos() / std::f64::consts::PI * d;
    if (x - s0).abs() <= (d - x - s0).abs() {
        x
    } else {
        d - x
    }
}

/// Fits `(s_eff, δ, σ)` to the measured `I_n/I_1`, `|n| ≥ 2`.
///
/// `I_1` is the mean of the `±1` areas when both are present. Points are
/// weighted by inverse variance when every area carries a positive
/// uncertainty, uniformly otherwise. The ratios are symmetric under
/// `s_eff → d − s_eff`, so `s_eff` is confined to the half of `(0, d)` that
/// contains the nominal `s0`.
pub fn fit_ratio_params(peaks: &PeakTable, geometry: &GratingGeometry) -> Result<FitResult<RatioFitParams>> {
    fit_ratio_params_with(peaks, geometry, &RatioFitOptions::default())
}

pub fn fit_ratio_params_with(
    peaks: &PeakTable,
    geometry: &GratingGeometry,
    opts: &RatioFitOptions,
) -> Result<FitResult<RatioFitParams>> {
    geometry.validate()?;
    let data = measured_ratios(peaks)?;
    let d = geometry.period_nm;
    let uncertainties: Vec<f64> = data.iter().map(|r| r.uncertainty).collect();
    let weighting = Weighting::from_uncertainties(&uncertainties);
    let weights: Vec<f64> = match weighting {
        Weighting::Absolute => uncertainties.iter().map(|u| 1.0 / u).collect(),
        Weighting::Uniform => vec![1.0; data.len()],
    };

    let scales = [d, 1.0, 1.0];
    let tiny = 1e-9;
    let (s_lo, s_hi) = if geometry.slit_width_nm <= 0.5 * d {
        (tiny, 0.5)
    } else {
        (0.5, 1.0 - tiny)
    };
    let bounds = Bounds {
        lower: vec![s_lo, 0.0, 0.0],
        upper: vec![s_hi, f64::INFINITY, f64::INFINITY],
    };
    let x0 = [
        (kirchhoff_width(&data, geometry) / d).clamp(s_lo + 1e-3, s_hi - 1e-3),
        opts.initial_delta_nm,
        opts.initial_sigma_nm,
    ];

    let residuals = |x: &[f64]| -> Result<Vec<f64>> {
        let params = RatioFitParams {
            s_eff_nm: x[0] * d,
            delta_nm: x[1],
            sigma_nm: x[2],
        };
        Ok(data
            .iter()
            .zip(&weights)
            .map(|(datum, w)| w * (datum.ratio - ratio_model(datum.order, &params, d)))
            .collect())
    };
    let minimum = minimize(residuals, &x0, &bounds, &opts.minimizer)?;
    let summary = summarize(
        &minimum,
        &[("s_eff", "nm"), ("delta", "nm"), ("sigma", "nm")],
        &scales,
        weighting,
        Vec::new(),
    );
    let params = RatioFitParams {
        s_eff_nm: summary.parameters[0].value,
        delta_nm: summary.parameters[1].value,
        sigma_nm: summary.parameters[2].value,
    };
    Ok(FitResult { params, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::peaks::PeakEntry;

    fn grating_i() -> GratingGeometry {
        GratingGeometry {
            period_nm: 100.0,
            slit_width_nm: 50.0,
            thickness_nm: 120.0,
            wedge_angle_rad: 7.5f64.to_radians(),
            roughness_variance_nm2: 0.0,
        }
    }

    fn exact_table(p: &RatioFitParams, orders: impl Iterator<Item = i32>) -> PeakTable {
        let slit = p.effective();
        PeakTable::new(
            orders
                .map(|n| PeakEntry {
                    order: n,
                    area: 1e4 * intensity_ratio(n, &slit, 100.0),
                    area_uncertainty: 0.0,
                    center_rad: 0.0,
                })
                .collect(),
        )
    }

    #[test]
    fn noiseless_round_trip() {
        let truth = RatioFitParams {
            s_eff_nm: 49.0,
            delta_nm: 0.5,
            sigma_nm: 1.2,
        };
        let fit = fit_ratio_params(&exact_table(&truth, 1..=8), &grating_i()).unwrap();
        let p = fit.params;
        assert!((p.s_eff_nm - 49.0).abs() < 49.0 * 1e-6, "{p:?}");
        assert!((p.delta_nm - 0.5).abs() < 0.5 * 1e-6, "{p:?}");
        assert!((p.sigma_nm - 1.2).abs() < 1.2 * 1e-6, "{p:?}");
        assert!(fit.summary.converged, "{:?}", fit.summary);
    }

    #[test]
    fn kirchhoff_data_pins_delta_and_sigma_at_zero() {
        let truth = RatioFitParams {
            s_eff_nm: 46.0,
            delta_nm: 0.0,
            sigma_nm: 0.0,
        };
        let fit = fit_ratio_params(&exact_table(&truth, 1..=8), &grating_i().with_slit_width(46.0)).unwrap();
        assert!((fit.params.s_eff_nm - 46.0).abs() < 1e-6);
        assert!(fit.params.delta_nm < 1e-4, "{:?}", fit.params);
        assert!(fit.params.sigma_nm < 1e-4, "{:?}", fit.params);
    }

    #[test]
    fn too_few_orders_is_under_determined() {
        let truth = RatioFitParams {
            s_eff_nm: 48.0,
            delta_nm: 0.3,
            sigma_nm: 1.0,
        };
        let err = fit_ratio_params(&exact_table(&truth, 0..=3), &grating_i()).unwrap_err();
        assert!(matches!(err, Error::UnderDetermined(_)));
    }

    #[test]
    fn symmetric_orders_share_first_order_normalization() {
        let truth = RatioFitParams {
            s_eff_nm: 47.5,
            delta_nm: 0.8,
            sigma_nm: 0.9,
        };
        let fit = fit_ratio_params(&exact_table(&truth, -6..=6), &grating_i()).unwrap();
        assert!((fit.params.s_eff_nm - 47.5).abs() < 1e-5);
    }

    #[test]
    fn upper_half_geometry_stays_on_its_branch() {
        let truth = RatioFitParams {
            s_eff_nm: 66.0,
            delta_nm: 0.6,
            sigma_nm: 1.1,
        };
        let g = grating_i().with_slit_width(67.5);
        let fit = fit_ratio_params(&exact_table(&truth, 1..=8), &g).unwrap();
        assert!((fit.params.s_eff_nm - 66.0).abs() < 1e-5, "{:?}", fit.params);
    }
}
