use num_complex::Complex64;
use proptest::prelude::*;
use vdw_core::fitting::{fit_ratio_params, seff_model};
use vdw_core::io::{PeakEntry, PeakTable};
use vdw_core::{intensity_ratio, EffectiveSlit, GratingGeometry, Phase, Transmission};

fn geometry(s0: f64, beta_deg: f64) -> GratingGeometry {
    GratingGeometry {
        period_nm: 100.0,
        slit_width_nm: s0,
        thickness_nm: 120.0,
        wedge_angle_rad: beta_deg.to_radians(),
        roughness_variance_nm2: 0.0,
    }
}

fn model_table(slit: &EffectiveSlit, scale: f64) -> PeakTable {
    let entries = (0..=8)
        .map(|n| {
            let area = scale * intensity_ratio(n, slit, 100.0);
            PeakEntry {
                order: n,
                area,
                area_uncertainty: 0.01 * area,
                center_rad: f64::NAN,
            }
        })
        .collect();
    PeakTable::new(entries)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn seff_decreases_with_c3(c3 in 0.01f64..0.8, v in 400.0f64..2500.0, s0 in 40.0f64..75.0, beta in 0.0f64..13.0) {
        let g = geometry(s0, beta);
        let lo = seff_model(c3, s0, &g, v).unwrap();
        let hi = seff_model(1.2 * c3, s0, &g, v).unwrap();
        prop_assert!(hi < lo && lo < s0, "{hi} {lo} {s0}");
    }

    #[test]
    fn transmission_is_a_pure_phase(c3 in 0.01f64..1.0, v in 300.0f64..3000.0, frac in 0.01f64..1.0) {
        let g = geometry(50.0, 7.5);
        let t = Transmission::new(c3, &g, v).unwrap();
        let tau = Complex64::from_polar(1.0, t.phase(frac * t.half_slit_nm()));
        prop_assert!((tau.norm() - 1.0).abs() < 1e-14);
        prop_assert!(t.phase(frac * t.half_slit_nm()) > 0.0);
    }

    #[test]
    fn ratios_have_order_parity(n in 1i32..12, s in 30.0f64..70.0, delta in 0.0f64..2.0, sigma in 0.0f64..3.0) {
        let slit = EffectiveSlit { s_eff_nm: s, delta_nm: delta, sigma_sq_nm2: sigma * sigma };
        let (p, m) = (intensity_ratio(n, &slit, 100.0), intensity_ratio(-n, &slit, 100.0));
        prop_assert!((p - m).abs() <= 1e-15 * p.abs().max(1e-300));
        prop_assert!(p >= 0.0);
    }

    #[test]
    fn ratio_fit_ignores_overall_scale(s in 42.0f64..49.0, delta in 0.2f64..1.5, sigma in 0.5f64..2.5, scale in 1e-3f64..1e6) {
        let slit = EffectiveSlit { s_eff_nm: s, delta_nm: delta, sigma_sq_nm2: sigma * sigma };
        let g = geometry(50.0, 7.5);
        let a = fit_ratio_params(&model_table(&slit, 1.0), &g).unwrap();
        let b = fit_ratio_params(&model_table(&slit, scale), &g).unwrap();
        let rel = (a.params.s_eff_nm - b.params.s_eff_nm).abs() / a.params.s_eff_nm;
        prop_assert!(rel < 1e-8, "{} vs {}", a.params.s_eff_nm, b.params.s_eff_nm);
    }
}

#[test]
fn heavier_polarizable_species_see_narrower_slits() {
    // He at its 300 K velocity against Kr at its own
    let g = geometry(50.0, 7.5);
    let he = seff_model(0.1, 50.0, &g, 1765.0).unwrap();
    let kr = seff_model(0.596, 50.0, &g, 385.79).unwrap();
    assert!(kr < he - 5.0, "He {he} Kr {kr}");
}
