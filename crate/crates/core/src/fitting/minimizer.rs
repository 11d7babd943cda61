//! Bounded nonlinear least squares: a projected Nelder–Mead stage followed by
//! projected, damped Gauss–Newton with a central-difference Jacobian.
//!
//! All work happens in scaled coordinates supplied by the caller. Bounds are
//! enforced by projection; parameters that end on a bound are flagged and
//! excluded from the covariance.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizerOptions {
    /// Total iteration budget (simplex + Gauss–Newton).
    pub max_iterations: usize,
    /// Simplex iterations spent before switching to Gauss–Newton.
    pub simplex_iterations: usize,
    /// Initial simplex edge in scaled units.
    pub simplex_step: f64,
    /// Stop when the relative objective change falls below this ...
    pub objective_tol: f64,
    /// ... and the scaled step norm falls below this.
    pub step_tol: f64,
    /// Largest accepted cosine between the residual vector and any free
    /// Jacobian column at convergence.
    pub gradient_tol: f64,
    /// Central-difference step in scaled units.
    pub diff_step: f64,
}

impl Default for MinimizerOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            simplex_iterations: 200,
            simplex_step: 0.1,
            objective_tol: 1e-10,
            step_tol: 1e-8,
            gradient_tol: 1e-6,
            diff_step: 1e-6,
        }
    }
}

/// Box constraints in scaled coordinates; infinite entries are open.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn unbounded(n: usize) -> Self {
        Self {
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    fn project(&self, x: &mut [f64]) {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = xi.clamp(self.lower[i], self.upper[i]);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    /// Best parameters, scaled.
    pub x: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `Σ r²`
    pub objective: f64,
    pub initial_objective: f64,
    /// Largest residual–column cosine over free parameters.
    pub gradient_cosine: f64,
    pub iterations: usize,
    pub converged: bool,
    pub at_bound: Vec<bool>,
    /// `(JᵀJ)⁻¹` over free parameters in scaled coordinates (zero rows and
    /// columns for parameters on a bound); `None` when singular.
    pub covariance: Option<DMatrix<f64>>,
    /// Reciprocal condition number of `JᵀJ` over free parameters.
    pub rcond: f64,
}

struct Problem<'a, F> {
    residuals: &'a F,
    bounds: &'a Bounds,
    evaluations: usize,
}

impl<F> Problem<'_, F>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    fn residuals(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        self.evaluations += 1;
        (self.residuals)(x)
    }

    fn objective(&mut self, x: &[f64]) -> Result<f64> {
        let r = self.residuals(x)?;
        let s: f64 = r.iter().map(|v| v * v).sum();
        Ok(if s.is_finite() { s } else { f64::INFINITY })
    }

    /// Central differences, one-sided against active bounds.
    fn jacobian(&mut self, x: &[f64], r0: &[f64], h: f64) -> Result<DMatrix<f64>> {
        let (m, n) = (r0.len(), x.len());
        let mut jac = DMatrix::zeros(m, n);
        let mut probe = x.to_vec();
        for j in 0..n {
            let step = h * x[j].abs().max(1.0);
            let can_up = x[j] + step <= self.bounds.upper[j];
            let can_down = x[j] - step >= self.bounds.lower[j];
            let (plus, minus, width) = match (can_up, can_down) {
                (true, true) => {
                    probe[j] = x[j] + step;
                    let p = self.residuals(&probe)?;
                    probe[j] = x[j] - step;
                    let q = self.residuals(&probe)?;
                    (p, q, 2.0 * step)
                }
                (true, false) => {
                    probe[j] = x[j] + step;
                    (self.residuals(&probe)?, r0.to_vec(), step)
                }
                (false, true) => {
                    probe[j] = x[j] - step;
                    (r0.to_vec(), self.residuals(&probe)?, step)
                }
                (false, false) => (r0.to_vec(), r0.to_vec(), 1.0),
            };
            probe[j] = x[j];
            for i in 0..m {
                jac[(i, j)] = (plus[i] - minus[i]) / width;
            }
        }
        Ok(jac)
    }
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Parameters sitting on a bound with the descent direction pointing outward.
fn active_set(x: &[f64], grad: &DVector<f64>, bounds: &Bounds) -> Vec<bool> {
    x.iter()
        .enumerate()
        .map(|(i, &xi)| (xi <= bounds.lower[i] && grad[i] >= 0.0) || (xi >= bounds.upper[i] && grad[i] <= 0.0))
        .collect()
}

fn gradient_cosine(jac: &DMatrix<f64>, r: &[f64], active: &[bool]) -> f64 {
    let rn = sum_sq(r).sqrt();
    if rn == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for j in 0..jac.ncols() {
        if active[j] {
            continue;
        }
        let col = jac.column(j);
        let cn = col.norm();
        if cn == 0.0 {
            continue;
        }
        let dot: f64 = col.iter().zip(r).map(|(a, b)| a * b).sum();
        worst = worst.max(dot.abs() / (cn * rn));
    }
    worst
}

fn nelder_mead<F>(
    problem: &mut Problem<'_, F>,
    x0: &[f64],
    f0: f64,
    opts: &MinimizerOptions,
) -> Result<(Vec<f64>, f64, usize)>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = x0.len();
    let bounds = problem.bounds;
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.to_vec(), f0)];
    for j in 0..n {
        let mut v = x0.to_vec();
        v[j] += opts.simplex_step;
        problem.bounds.project(&mut v);
        if v[j] == x0[j] {
            v[j] -= opts.simplex_step;
            problem.bounds.project(&mut v);
        }
        let f = problem.objective(&v)?;
        simplex.push((v, f));
    }
    let mut iterations = 0;
    while iterations < opts.simplex_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[n].1);
        if (worst - best).abs() <= 1e-12 * (best.abs() + 1e-300) || worst - best <= f64::MIN_POSITIVE {
            break;
        }
        iterations += 1;
        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for j in 0..n {
                centroid[j] += v[j] / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = (0..n)
                .map(|j| centroid[j] + t * (simplex[n].0[j] - centroid[j]))
                .collect();
            bounds.project(&mut p);
            p
        };
        let reflected = along(-1.0);
        let fr = problem.objective(&reflected)?;
        if fr < simplex[0].1 {
            let expanded = along(-2.0);
            let fe = problem.objective(&expanded)?;
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let contracted = if fr < simplex[n].1 { along(-0.5) } else { along(0.5) };
            let fc = problem.objective(&contracted)?;
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (contracted, fc);
            } else {
                let anchor = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    for j in 0..n {
                        vertex.0[j] = anchor[j] + 0.5 * (vertex.0[j] - anchor[j]);
                    }
                    vertex.1 = problem.objective(&vertex.0)?;
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    Ok((x, f, iterations))
}

/// Minimizes `Σ r(x)²` over the box `bounds`, starting at `x0`.
///
/// Returns [`Error::NonConvergence`] with the best point found when the
/// iteration budget runs out before the stopping rules are met.
pub fn minimize<F>(residuals: F, x0: &[f64], bounds: &Bounds, opts: &MinimizerOptions) -> Result<Minimum>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = x0.len();
    if bounds.lower.len() != n || bounds.upper.len() != n {
        return Err(Error::Config("bounds do not match parameter count".into()));
    }
    let mut problem = Problem {
        residuals: &residuals,
        bounds,
        evaluations: 0,
    };
    let mut x = x0.to_vec();
    bounds.project(&mut x);
    let initial_objective = problem.objective(&x)?;
    if !initial_objective.is_finite() {
        return Err(Error::Domain("objective is not finite at the initial guess".into()));
    }

    let (mut x, _, mut iterations) = if opts.simplex_iterations > 0 {
        nelder_mead(&mut problem, &x, initial_objective, opts)?
    } else {
        (x, initial_objective, 0)
    };

    let mut r = problem.residuals(&x)?;
    let mut f = sum_sq(&r);
    let mut mu = 1e-3;
    let mut converged = false;
    let mut jac = problem.jacobian(&x, &r, opts.diff_step)?;

    while iterations < opts.max_iterations {
        iterations += 1;
        let rv = DVector::from_column_slice(&r);
        let grad = jac.transpose() * &rv;
        let active = active_set(&x, &grad, bounds);
        if f == 0.0 || gradient_cosine(&jac, &r, &active) <= opts.gradient_tol * 1e-3 {
            converged = true;
            break;
        }
        let jtj = jac.transpose() * &jac;
        let mut accepted = None;
        for _ in 0..30 {
            let mut a = jtj.clone();
            let mut b = -grad.clone();
            for j in 0..n {
                if active[j] {
                    // freeze: identity row, zero rhs
                    for k in 0..n {
                        a[(j, k)] = 0.0;
                        a[(k, j)] = 0.0;
                    }
                    a[(j, j)] = 1.0;
                    b[j] = 0.0;
                } else {
                    a[(j, j)] += mu * jtj[(j, j)].max(1e-12);
                }
            }
            let Some(step) = a.lu().solve(&b) else {
                mu *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = x.iter().zip(step.iter()).map(|(xi, si)| xi + si).collect();
            bounds.project(&mut trial);
            let rt = problem.residuals(&trial)?;
            let ft = sum_sq(&rt);
            if ft.is_finite() && ft <= f {
                let step_norm = x.iter().zip(&trial).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                accepted = Some((trial, rt, ft, step_norm));
                mu = (mu * 0.3).max(1e-12);
                break;
            }
            mu *= 10.0;
        }
        let Some((trial, rt, ft, step_norm)) = accepted else {
            // no descent direction left at this damping: stationary up to round-off
            converged = true;
            break;
        };
        let rel_change = (f - ft) / f.max(f64::MIN_POSITIVE);
        x = trial;
        r = rt;
        f = ft;
        jac = problem.jacobian(&x, &r, opts.diff_step)?;
        if rel_change < opts.objective_tol && step_norm < opts.step_tol {
            converged = true;
            break;
        }
    }

    // Snap parameters that crept up to a bound onto it when that does not
    // raise the objective.
    for j in 0..n {
        for bound in [bounds.lower[j], bounds.upper[j]] {
            if bound.is_finite() && x[j] != bound && (x[j] - bound).abs() < 1e-6 * bound.abs().max(1.0) {
                let mut trial = x.clone();
                trial[j] = bound;
                let rt = problem.residuals(&trial)?;
                let ft = sum_sq(&rt);
                if ft <= f * (1.0 + 1e-12) + 1e-300 {
                    x = trial;
                    r = rt;
                    f = ft.min(f);
                }
            }
        }
    }
    if f > initial_objective {
        // never hand back something worse than the starting point
        x = x0.to_vec();
        bounds.project(&mut x);
        r = problem.residuals(&x)?;
        f = sum_sq(&r);
    }
    jac = problem.jacobian(&x, &r, opts.diff_step)?;

    let rv = DVector::from_column_slice(&r);
    let grad = jac.transpose() * &rv;
    let on_bound: Vec<bool> = (0..n)
        .map(|j| x[j] <= bounds.lower[j] || x[j] >= bounds.upper[j])
        .collect();
    let active = active_set(&x, &grad, bounds);
    let cosine = gradient_cosine(&jac, &r, &active);
    // an exact fit leaves only round-off in r, whose direction is meaningless
    let exact_fit = f <= 1e-24 * initial_objective;
    converged = converged && f.is_finite() && (cosine <= opts.gradient_tol || exact_fit);

    let free: Vec<usize> = (0..n).filter(|&j| !on_bound[j]).collect();
    let (covariance, rcond) = free_covariance(&jac, &free, n);

    if !converged && iterations >= opts.max_iterations {
        return Err(Error::NonConvergence {
            iterations,
            objective: f,
            best: x,
        });
    }
    Ok(Minimum {
        x,
        residuals: r,
        objective: f,
        initial_objective,
        gradient_cosine: cosine,
        iterations,
        converged,
        at_bound: on_bound,
        covariance,
        rcond,
    })
}

fn free_covariance(jac: &DMatrix<f64>, free: &[usize], n: usize) -> (Option<DMatrix<f64>>, f64) {
    if free.is_empty() {
        return (Some(DMatrix::zeros(n, n)), 1.0);
    }
    let sub = jac.select_columns(free);
    let jtj = sub.transpose() * &sub;
    let eig = jtj.clone().symmetric_eigenvalues();
    let max = eig.iter().cloned().fold(0.0f64, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let rcond = if max > 0.0 { (min / max).max(0.0) } else { 0.0 };
    if rcond < 1e-14 {
        return (None, rcond);
    }
    let Some(inv) = jtj.try_inverse() else {
        return (None, rcond);
    };
    let mut full = DMatrix::zeros(n, n);
    for (a, &i) in free.iter().enumerate() {
        for (b, &j) in free.iter().enumerate() {
            full[(i, j)] = inv[(a, b)];
        }
    }
    (Some(full), rcond)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock_as_least_squares() {
        let res = |x: &[f64]| Ok(vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]]);
        let m = minimize(res, &[-1.2, 1.0], &Bounds::unbounded(2), &MinimizerOptions::default()).unwrap();
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-8 && (m.x[1] - 1.0).abs() < 1e-8, "{:?}", m.x);
        assert!(m.objective <= m.initial_objective);
    }

    #[test]
    fn linear_fit_covariance() {
        // y = 2 + 3 t, exact
        let ts = [0.0, 1.0, 2.0, 3.0];
        let res = move |x: &[f64]| Ok(ts.iter().map(|t| x[0] + x[1] * t - (2.0 + 3.0 * t)).collect());
        let m = minimize(res, &[0.0, 0.0], &Bounds::unbounded(2), &MinimizerOptions::default()).unwrap();
        assert!((m.x[0] - 2.0).abs() < 1e-9 && (m.x[1] - 3.0).abs() < 1e-9);
        let cov = m.covariance.unwrap();
        // (XᵀX)⁻¹ for t = 0..3: [[0.7, -0.3], [-0.3, 0.2]]
        assert!((cov[(0, 0)] - 0.7).abs() < 1e-6);
        assert!((cov[(1, 1)] - 0.2).abs() < 1e-6);
        assert!((cov[(0, 1)] + 0.3).abs() < 1e-6);
    }

    #[test]
    fn lower_bound_is_respected_and_flagged() {
        // minimum of (x + 1)² lies outside x ≥ 0
        let res = |x: &[f64]| Ok(vec![x[0] + 1.0, x[1] - 2.0]);
        let bounds = Bounds {
            lower: vec![0.0, f64::NEG_INFINITY],
            upper: vec![f64::INFINITY; 2],
        };
        let m = minimize(res, &[3.0, 0.0], &bounds, &MinimizerOptions::default()).unwrap();
        assert_eq!(m.x[0], 0.0);
        assert!(m.at_bound[0] && !m.at_bound[1]);
        assert!(m.converged);
        let cov = m.covariance.unwrap();
        assert_eq!(cov[(0, 0)], 0.0);
        assert!((cov[(1, 1)] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn degenerate_direction_reports_singular_covariance() {
        let res = |x: &[f64]| Ok(vec![x[0] + x[1] - 1.0, 2.0 * (x[0] + x[1]) - 2.0]);
        let m = minimize(res, &[0.0, 0.0], &Bounds::unbounded(2), &MinimizerOptions::default()).unwrap();
        assert!(m.objective < 1e-20);
        assert!(m.covariance.is_none());
        assert!(m.rcond < 1e-10);
    }
}
