//! Cumulants checked against finite differences of `log Φ(κ)`, where
//!
//! Φ(κ) = ∫₀ʰ e^{iκζ} τ'(ζ)/τ(h) dζ = e^{iκh} − iκ ∫₀ʰ e^{iκζ} τ(ζ)/τ(h) dζ
//!
//! and `log Φ(κ) = iκ R1 − κ² R2 / 2 + O(κ³)`.

use num_complex::Complex64;
use vdw_core::physics::quadrature::integrate_oscillatory;
use vdw_core::{cumulants, GratingGeometry, OscillatoryOptions, Phase, Transmission};

fn log_phi(t: &Transmission, kappa: f64, opts: &OscillatoryOptions) -> Complex64 {
    let h = t.half_slit_nm();
    let integral = integrate_oscillatory(t, |z| [(kappa * z).cos(), (kappa * z).sin()], kappa.abs(), h, opts).unwrap();
    let i = Complex64::new(0.0, 1.0);
    let fourier = integral.values[0] + i * integral.values[1];
    let tau_h = Complex64::from_polar(1.0, t.phase(h));
    let phi = (i * kappa * h).exp() - i * kappa * fourier / tau_h;
    phi.ln()
}

/// Richardson-extrapolated `(R1, R2)` from symmetric differences at `κ` and `κ/2`.
fn finite_difference_cumulants(t: &Transmission, kappa: f64) -> (Complex64, Complex64) {
    let opts = OscillatoryOptions {
        rel_tol: 1e-12,
        accept_rel_tol: 1e-9,
        max_phase: 1e5,
        ..OscillatoryOptions::default()
    };
    let i = Complex64::new(0.0, 1.0);
    let estimate = |k: f64| {
        let (plus, minus) = (log_phi(t, k, &opts), log_phi(t, -k, &opts));
        ((plus - minus) / (2.0 * i * k), -(plus + minus) / (k * k))
    };
    let (r1a, r2a) = estimate(kappa);
    let (r1b, r2b) = estimate(0.5 * kappa);
    ((4.0 * r1b - r1a) / 3.0, (4.0 * r2b - r2a) / 3.0)
}

#[test]
fn cumulants_match_log_phi_derivatives() {
    let cases = [
        (0.05, 500.0, 7.5, 50.0),
        (0.05, 2000.0, 7.5, 50.0),
        (0.1, 1765.0, 7.5, 50.0),
        (0.15, 1000.0, 8.7, 67.5),
        (0.3, 500.0, 12.7, 71.2),
        (0.3, 2000.0, 12.7, 71.2),
        (0.6, 386.0, 7.5, 50.0),
        (0.2, 800.0, 0.0, 50.0),
        (0.02, 3000.0, 10.0, 40.0),
        (0.4, 700.0, 8.7, 67.5),
        (1.0, 600.0, 5.0, 60.0),
    ];
    for (c3, v, beta_deg, s0) in cases {
        let g = GratingGeometry {
            period_nm: 100.0,
            slit_width_nm: s0,
            thickness_nm: 120.0,
            wedge_angle_rad: f64::to_radians(beta_deg),
            roughness_variance_nm2: 0.0,
        };
        let t = Transmission::new(c3, &g, v).unwrap();
        let c = cumulants(c3, &g, v).unwrap();
        let (r1, r2) = finite_difference_cumulants(&t, 0.02 / (0.5 * s0));
        let e1 = (r1 - c.r1).norm() / c.r1.norm();
        let e2 = (r2 - c.r2).norm() / c.r2.norm();
        assert!(e1 < 1e-7, "C3={c3} v={v}: R1 {} vs {} ({e1:.2e})", c.r1, r1);
        assert!(e2 < 1e-6, "C3={c3} v={v}: R2 {} vs {} ({e2:.2e})", c.r2, r2);
    }
}
