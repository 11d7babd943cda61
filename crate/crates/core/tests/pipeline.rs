//! Closed-loop checks: forward model → synthetic data → extraction → fits.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use vdw_core::fitting::{
    fit_c3_fixed_s0, fit_c3_s0, fit_c3_vs_alpha, fit_ratio_params, seff_model, AlphaPoint, SeffPoint,
};
use vdw_core::io::{beam_preset, extract_peak_areas, ExtractionOptions};
use vdw_core::synthetic::{generate_scan, poisson_peak_table, SynthConfig};
use vdw_core::{cumulants, intensity_ratio, BeamSpec, GratingGeometry};

fn grating_i() -> GratingGeometry {
    GratingGeometry {
        period_nm: 100.0,
        slit_width_nm: 50.0,
        thickness_nm: 120.0,
        wedge_angle_rad: 7.5f64.to_radians(),
        roughness_variance_nm2: 0.0,
    }
}

fn he_scan_config(velocity: f64, slits: u32) -> SynthConfig {
    let beam = BeamSpec {
        velocity_mps: velocity,
        ..beam_preset("He").unwrap()
    };
    let lambda = beam.wavelength_nm().unwrap();
    SynthConfig {
        geometry: grating_i(),
        beam,
        c3_mev_nm3: 0.1,
        slits,
        angle_min_rad: -0.5e-3,
        angle_max_rad: 9.5 * lambda / 100.0,
        angle_step_rad: 10e-6,
        resolution_fwhm_rad: 70e-6,
        peak_counts: 1e5,
        background_counts: 20.0,
        seed: 3,
        poisson_noise: false,
        grating_label: Some("I".into()),
    }
}

#[test]
fn noiseless_scan_reproduces_model_ratios() {
    for v in [1000.0, 1765.0] {
        let cfg = he_scan_config(v, 1000);
        let lambda = cfg.beam.wavelength_nm().unwrap();
        let scan = generate_scan(&cfg).unwrap();
        let opts = ExtractionOptions {
            dv_over_v: cfg.beam.dv_over_v,
            ..ExtractionOptions::default_for(lambda, 100.0)
        };
        let table = extract_peak_areas(&scan, &cfg.geometry, lambda, &opts).unwrap();
        let slit = cumulants(cfg.c3_mev_nm3, &cfg.geometry, v).unwrap().effective();
        let i1 = table.get(1).unwrap().area;
        for n in 2..=8 {
            let measured = table.get(n).unwrap().area / i1;
            let model = intensity_ratio(n, &slit, 100.0) / intensity_ratio(1, &slit, 100.0);
            let rel = (measured / model - 1.0).abs();
            assert!(rel < 5e-3, "v={v} n={n}: {measured} vs {model} ({rel:.2e})");
        }
    }
}

#[test]
fn noiseless_scan_fit_recovers_effective_width() {
    let v = 1765.0;
    let cfg = he_scan_config(v, 1000);
    let lambda = cfg.beam.wavelength_nm().unwrap();
    let scan = generate_scan(&cfg).unwrap();
    let opts = ExtractionOptions {
        dv_over_v: cfg.beam.dv_over_v,
        ..ExtractionOptions::default_for(lambda, 100.0)
    };
    let table = extract_peak_areas(&scan, &cfg.geometry, lambda, &opts).unwrap();
    let fit = fit_ratio_params(&table, &cfg.geometry).unwrap();
    let truth = cumulants(cfg.c3_mev_nm3, &cfg.geometry, v).unwrap();
    assert!(
        (fit.params.s_eff_nm - truth.s_eff_nm).abs() < 0.1,
        "{} vs {}",
        fit.params.s_eff_nm,
        truth.s_eff_nm
    );
}

#[test]
fn kr_like_ratio_fit_monte_carlo() {
    // Kr at its 300 K beam velocity with C3 from the polarizability-scaled He value
    let g = grating_i();
    let slit = cumulants(0.596, &g, 385.79).unwrap().effective();
    let hits = (0..100u64)
        .filter(|&seed| {
            let table = poisson_peak_table(&slit, 100.0, 0..=8, 1e5, seed).unwrap();
            let fit = fit_ratio_params(&table, &g).unwrap();
            (fit.params.s_eff_nm - slit.s_eff_nm).abs() <= 0.3
        })
        .count();
    assert!(hits >= 95, "{hits}/100 seeds within 0.3 nm");
}

#[test]
fn ar_like_single_velocity_fit_is_calibrated() {
    // peak-level noise → ratio fit → fixed-s0 C3 fit; the reported C3
    // uncertainty must match the seed-to-seed scatter
    let g = grating_i();
    let (c3, v) = (0.4, 558.0);
    let slit = cumulants(c3, &g, v).unwrap().effective();
    let mut estimates = Vec::new();
    let mut reported = Vec::new();
    for seed in 0..40u64 {
        let table = poisson_peak_table(&slit, 100.0, 0..=8, 1e5, 1000 + seed).unwrap();
        let ratio = fit_ratio_params(&table, &g).unwrap();
        let point = SeffPoint {
            velocity_mps: v,
            s_eff_nm: ratio.params.s_eff_nm,
            uncertainty_nm: ratio.summary.parameters[0].uncertainty,
            grating: "I".into(),
            species: "Ar".into(),
        };
        let fit = fit_c3_fixed_s0(&[point], &g, 50.0).unwrap();
        estimates.push(fit.params);
        reported.push(fit.summary.parameters[0].uncertainty);
    }
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let scatter = (estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    reported.sort_by(f64::total_cmp);
    let median_reported = reported[reported.len() / 2];
    assert!(
        (median_reported / scatter - 1.0).abs() < 0.35,
        "reported {median_reported:.4} vs scatter {scatter:.4}"
    );
    assert!(
        (mean - c3).abs() < 3.0 * scatter / n.sqrt() + 0.01 * c3,
        "mean {mean} vs {c3}"
    );
}

#[test]
fn he_and_d2_agree_on_s0() {
    let g = grating_i();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let noise = Normal::new(0.0, 0.05).unwrap();
    let mut points = |species: &str, c3: f64, velocities: &[f64]| -> Vec<SeffPoint> {
        velocities
            .iter()
            .map(|&v| SeffPoint {
                velocity_mps: v,
                s_eff_nm: seff_model(c3, 50.0, &g, v).unwrap() + noise.sample(&mut rng),
                uncertainty_nm: 0.05,
                grating: "I".into(),
                species: species.into(),
            })
            .collect()
    };
    let he = points("He", 0.1, &[560.0, 1020.0, 1765.0]);
    let d2 = points("D2", 0.35, &[700.0, 1300.0, 2000.0]);
    let fit_he = fit_c3_s0(&he, &g).unwrap();
    let fit_d2 = fit_c3_s0(&d2, &g).unwrap();
    let u = fit_he.summary.parameters[1]
        .uncertainty
        .hypot(fit_d2.summary.parameters[1].uncertainty);
    let diff = (fit_he.params.s0_nm - fit_d2.params.s0_nm).abs();
    assert!(
        diff < 2.0 * u,
        "s0 {} vs {} (combined {u})",
        fit_he.params.s0_nm,
        fit_d2.params.s0_nm
    );
}

#[test]
fn c3_ordering_narrows_the_slit() {
    // He, Ne, Ar, Kr in increasing C3 at a fixed grating and velocity
    let g = grating_i();
    let widths: Vec<f64> = [0.05, 0.1, 0.3, 0.6]
        .iter()
        .map(|&c3| seff_model(c3, 50.0, &g, 800.0).unwrap())
        .collect();
    assert!(widths.windows(2).all(|w| w[1] < w[0]), "{widths:?}");
}

#[test]
fn alpha_slope_monte_carlo() {
    let alphas = [0.2050, 0.3956, 0.7950, 1.6411, 2.4844];
    let slope = 0.24;
    let mut within_one = 0;
    let mut within_1645 = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points: Vec<AlphaPoint> = alphas
            .iter()
            .map(|&a| {
                let truth = slope * a;
                let u = 0.2 * truth;
                AlphaPoint {
                    species: String::new(),
                    alpha_a3: a,
                    c3_mev_nm3: truth + Normal::new(0.0, u).unwrap().sample(&mut rng),
                    uncertainty: u,
                }
            })
            .collect();
        let fit = fit_c3_vs_alpha(&points).unwrap();
        let z = ((fit.slope - slope) / fit.slope_uncertainty).abs();
        within_one += (z <= 1.0) as u32;
        within_1645 += (z <= 1.645) as u32;
    }
    // Gaussian coverage: 68.3% inside 1σ, 90% inside 1.645σ; bands are ±3 binomial sd
    assert!((54..=82).contains(&within_one), "{within_one}/100 within 1σ");
    assert!(within_1645 >= 81, "{within_1645}/100 within 1.645σ");
}
