//! Inverse problems: order-intensity ratios → effective slit, effective slit
//! widths versus velocity → `C3` and `s0`, and `C3` versus polarizability.

pub mod alpha;
pub mod c3;
pub mod minimizer;
pub mod ratio;

pub use alpha::{fit_c3_vs_alpha, AlphaPoint, LinearFit};
pub use c3::{beta_sensitivity, fit_c3_fixed_s0, fit_c3_s0, seff_model, BetaSensitivity, C3S0Params, SeffPoint};
pub use minimizer::{minimize, Bounds, MinimizerOptions, Minimum};
pub use ratio::{
    fit_ratio_params, fit_ratio_params_with, measured_ratios, ratio_model, MeasuredRatio, RatioFitOptions,
    RatioFitParams,
};

/// One fitted parameter, in physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct FitParameter {
    pub name: String,
    pub unit: String,
    pub value: f64,
    /// One-sigma; `NaN` on a bound or when the curvature is singular.
    pub uncertainty: f64,
    pub at_bound: bool,
}

/// Everything about a fit except the typed parameter struct.
#[derive(Debug, Clone, PartialEq)]
pub struct FitSummary {
    pub parameters: Vec<FitParameter>,
    /// Weighted residual sum of squares at the optimum.
    pub rss: f64,
    pub data_points: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Largest cosine between the residual vector and a free Jacobian column.
    pub gradient_cosine: f64,
    pub warnings: Vec<String>,
}

impl FitSummary {
    pub fn parameter(&self, name: &str) -> Option<&FitParameter> {
        self.parameters.iter().find(|p| p.name == name)
    }

    pub fn degrees_of_freedom(&self) -> usize {
        self.data_points.saturating_sub(self.parameters.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<P> {
    pub params: P,
    pub summary: FitSummary,
}

/// How per-point uncertainties turn into weights and covariances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Weighting {
    /// Inverse-variance weights; covariance taken as is.
    Absolute,
    /// Unit weights; covariance scaled by the reduced chi-square.
    Uniform,
}

impl Weighting {
    pub(crate) fn from_uncertainties(u: &[f64]) -> Self {
        if !u.is_empty() && u.iter().all(|&x| x > 0.0 && x.is_finite()) {
            Weighting::Absolute
        } else {
            Weighting::Uniform
        }
    }
}

/// Converts a minimizer result in scaled coordinates into physical values
/// and one-sigma uncertainties.
pub(crate) fn summarize(
    minimum: &Minimum,
    names: &[(&str, &str)],
    scales: &[f64],
    weighting: Weighting,
    mut warnings: Vec<String>,
) -> FitSummary {
    let m = minimum.residuals.len();
    let p = names.len();
    let dof = m.saturating_sub(p);
    let variance_factor = match weighting {
        Weighting::Absolute => 1.0,
        Weighting::Uniform if dof > 0 => minimum.objective / dof as f64,
        Weighting::Uniform => {
            warnings.push("no uncertainties and no spare degrees of freedom: parameter errors unscaled".into());
            1.0
        }
    };
    if minimum.covariance.is_none() {
        warnings.push(format!(
            "ill-conditioned curvature (reciprocal condition {:.2e}): parameters not separately identifiable",
            minimum.rcond
        ));
    }
    let parameters = names
        .iter()
        .enumerate()
        .map(|(j, (name, unit))| {
            let uncertainty = match &minimum.covariance {
                _ if minimum.at_bound[j] => f64::NAN,
                Some(cov) => (cov[(j, j)] * variance_factor).sqrt() * scales[j],
                None => f64::NAN,
            };
            FitParameter {
                name: name.to_string(),
                unit: unit.to_string(),
                value: minimum.x[j] * scales[j],
                uncertainty,
                at_bound: minimum.at_bound[j],
            }
        })
        .collect();
    FitSummary {
        parameters,
        rss: minimum.objective,
        data_points: m,
        iterations: minimum.iterations,
        converged: minimum.converged,
        gradient_cosine: minimum.gradient_cosine,
        warnings,
    }
}
