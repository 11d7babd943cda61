use crate::error::{Error, Result};

/// A fitted `C3` for one species, with its polarizability.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaPoint {
    pub species: String,
    pub alpha_a3: f64,
    pub c3_mev_nm3: f64,
    pub uncertainty: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_uncertainty: f64,
    pub intercept_uncertainty: f64,
    /// `C3 − (a α + b)` per point, unweighted.
    pub residuals: Vec<f64>,
    pub chi_square: f64,
}

/// Weighted straight line `C3 = a α + b`.
///
/// Weights are `1/u²` when every uncertainty is positive, otherwise uniform
/// with parameter errors scaled by the reduced chi-square.
pub fn fit_c3_vs_alpha(points: &[AlphaPoint]) -> Result<LinearFit> {
    if points.len() < 2 {
        return Err(Error::UnderDetermined(format!(
            "line fit needs 2 points, got {}",
            points.len()
        )));
    }
    for p in points {
        if !(p.alpha_a3.is_finite() && p.c3_mev_nm3.is_finite()) || p.uncertainty < 0.0 {
            return Err(Error::Validation(format!("invalid C3/alpha pair for {}", p.species)));
        }
    }
    let absolute = points.iter().all(|p| p.uncertainty > 0.0);
    let w: Vec<f64> = points
        .iter()
        .map(|p| if absolute { p.uncertainty.powi(-2) } else { 1.0 })
        .collect();

    let sw: f64 = w.iter().sum();
    let xm = points.iter().zip(&w).map(|(p, w)| w * p.alpha_a3).sum::<f64>() / sw;
    let ym = points.iter().zip(&w).map(|(p, w)| w * p.c3_mev_nm3).sum::<f64>() / sw;
    let sxx: f64 = points.iter().zip(&w).map(|(p, w)| w * (p.alpha_a3 - xm).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::UnderDetermined("all polarizabilities are equal".into()));
    }
    let sxy: f64 = points
        .iter()
        .zip(&w)
        .map(|(p, w)| w * (p.alpha_a3 - xm) * (p.c3_mev_nm3 - ym))
        .sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let residuals: Vec<f64> = points
        .iter()
        .map(|p| p.c3_mev_nm3 - (slope * p.alpha_a3 + intercept))
        .collect();
    let chi_square: f64 = residuals.iter().zip(&w).map(|(r, w)| w * r * r).sum();

    let dof = points.len() - 2;
    let factor = match (absolute, dof) {
        (true, _) => 1.0,
        (false, 0) => 0.0,
        (false, k) => chi_square / k as f64,
    };
    let var_slope = factor / sxx;
    let var_intercept = factor * (1.0 / sw + xm * xm / sxx);
    Ok(LinearFit {
        slope,
        intercept,
        slope_uncertainty: var_slope.sqrt(),
        intercept_uncertainty: var_intercept.sqrt(),
        residuals,
        chi_square,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(alpha: f64, c3: f64, u: f64) -> AlphaPoint {
        AlphaPoint {
            species: "X".into(),
            alpha_a3: alpha,
            c3_mev_nm3: c3,
            uncertainty: u,
        }
    }

    #[test]
    fn two_collinear_points_fit_exactly() {
        let fit = fit_c3_vs_alpha(&[point(1.0, 0.3, 0.0), point(3.0, 0.7, 0.0)]).unwrap();
        assert!((fit.slope - 0.2).abs() < 1e-14);
        assert!((fit.intercept - 0.1).abs() < 1e-14);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-15));
    }

    #[test]
    fn proportional_data_has_zero_intercept() {
        let pts: Vec<_> = [0.205, 0.396, 1.641, 2.484, 0.795]
            .iter()
            .map(|&a| point(a, 0.25 * a, 0.02 * a))
            .collect();
        let fit = fit_c3_vs_alpha(&pts).unwrap();
        assert!(fit.intercept.abs() < 1e-14, "{}", fit.intercept);
        assert!((fit.slope - 0.25).abs() < 1e-14);
    }

    #[test]
    fn uncertainty_matches_textbook_formula() {
        // unit weights, absolute: var(a) = 1/Sxx, var(b) = Σx²/(n Sxx)
        let pts = [point(0.0, 1.0, 1.0), point(1.0, 2.0, 1.0), point(2.0, 2.5, 1.0)];
        let fit = fit_c3_vs_alpha(&pts).unwrap();
        assert!((fit.slope_uncertainty - (0.5f64).sqrt()).abs() < 1e-14);
        assert!((fit.intercept_uncertainty - (5.0 / 6.0f64).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn rejects_short_input() {
        assert!(matches!(fit_c3_vs_alpha(&[]), Err(Error::UnderDetermined(_))));
        assert!(matches!(
            fit_c3_vs_alpha(&[point(1.0, 1.0, 0.1)]),
            Err(Error::UnderDetermined(_))
        ));
    }
}
