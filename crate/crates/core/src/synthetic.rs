//! Synthetic angular scans from the forward model.
//!
//! The N-slit pattern is averaged over a Gaussian velocity distribution
//! (Gauss–Hermite nodes, cumulants recomputed per node), convolved with a
//! Gaussian detector response, scaled, offset by a flat background and
//! optionally Poisson-sampled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::io::peaks::{PeakEntry, PeakTable};
use crate::io::scan::{DiffractionScan, ScanMetadata, ScanSample};
use crate::physics::{
    cumulants, grating_factor, intensity_ratio, slit_amplitude_cumulant, BeamSpec, EffectiveSlit, GratingGeometry,
};
use crate::units::{de_broglie_wavelength, wavenumber};

/// Seven-point Gauss–Hermite rule for `∫ e^{−x²} f(x) dx`.
const HERMITE_NODES: [f64; 7] = [
    -2.651961356835233,
    -1.673551628767471,
    -0.816287882858965,
    0.0,
    0.816287882858965,
    1.673551628767471,
    2.651961356835233,
];
const HERMITE_WEIGHTS: [f64; 7] = [
    9.717812450995192e-4,
    5.451558281912703e-2,
    4.256072526101278e-1,
    8.102646175568073e-1,
    4.256072526101278e-1,
    5.451558281912703e-2,
    9.717812450995192e-4,
];

const FWHM_PER_SIGMA: f64 = 2.354820045030949;
/// Gaussian kernels are cut at this many standard deviations.
const KERNEL_REACH: f64 = 5.0;
/// Fine-grid points per principal-maximum width `λ/(N d)`.
const POINTS_PER_PEAK: f64 = 8.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub geometry: GratingGeometry,
    pub beam: BeamSpec,
    pub c3_mev_nm3: f64,
    pub slits: u32,
    pub angle_min_rad: f64,
    pub angle_max_rad: f64,
    pub angle_step_rad: f64,
    /// Detector response FWHM; zero disables the convolution.
    pub resolution_fwhm_rad: f64,
    /// Counts for unit normalized intensity, i.e. at the zeroth order of a
    /// free slit.
    pub peak_counts: f64,
    pub background_counts: f64,
    pub seed: u64,
    pub poisson_noise: bool,
    pub grating_label: Option<String>,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.beam.validate()?;
        if !(self.c3_mev_nm3 >= 0.0) {
            return Err(Error::Config(format!(
                "C3 must be non-negative, got {}",
                self.c3_mev_nm3
            )));
        }
        if self.slits == 0 {
            return Err(Error::Config("slit count must be at least 1".into()));
        }
        if !(self.angle_step_rad > 0.0) {
            return Err(Error::Config("angle step must be positive".into()));
        }
        if !(self.angle_max_rad > self.angle_min_rad) || self.angle_max_rad.abs().max(self.angle_min_rad.abs()) >= 1.5 {
            return Err(Error::Config(
                "angle range must be increasing and inside (-1.5, 1.5) rad".into(),
            ));
        }
        if !(self.resolution_fwhm_rad >= 0.0) {
            return Err(Error::Config("resolution must be non-negative".into()));
        }
        if self.resolution_fwhm_rad > 0.0 && self.angle_step_rad > self.resolution_fwhm_rad / 3.0 {
            return Err(Error::Config(format!(
                "angle step {:.3e} rad undersamples the {:.3e} rad resolution (limit FWHM/3)",
                self.angle_step_rad, self.resolution_fwhm_rad
            )));
        }
        if !(self.peak_counts > 0.0 && self.peak_counts.is_finite()) {
            return Err(Error::Config("peak count scale must be positive".into()));
        }
        if !(self.background_counts >= 0.0 && self.background_counts.is_finite()) {
            return Err(Error::Config("background must be non-negative".into()));
        }
        Ok(())
    }

    /// The output grid `min + i·step` up to `max`.
    pub fn angles(&self) -> Vec<f64> {
        let count = ((self.angle_max_rad - self.angle_min_rad) / self.angle_step_rad + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| self.angle_min_rad + i as f64 * self.angle_step_rad)
            .collect()
    }

    /// Intensity that maps to `peak_counts`: `N² s0²/λ`, the zeroth-order
    /// peak of a free grating at the mean velocity.
    pub fn normalization(&self) -> Result<f64> {
        let lambda = self.beam.wavelength_nm()?;
        let n = self.slits as f64;
        Ok(n * n * self.geometry.slit_width_nm * self.geometry.slit_width_nm / lambda)
    }
}

/// Velocities and weights of the Gaussian beam distribution.
pub fn velocity_nodes(velocity_mps: f64, dv_over_v: f64) -> Vec<(f64, f64)> {
    if dv_over_v == 0.0 {
        return vec![(velocity_mps, 1.0)];
    }
    let sigma = dv_over_v * velocity_mps / FWHM_PER_SIGMA;
    let norm = std::f64::consts::PI.sqrt();
    HERMITE_NODES
        .iter()
        .zip(HERMITE_WEIGHTS)
        .map(|(x, w)| (velocity_mps + std::f64::consts::SQRT_2 * sigma * x, w / norm))
        .collect()
}

/// Velocity-averaged N-slit intensity, unnormalized, on `grid`.
fn averaged_pattern(cfg: &SynthConfig, grid: &[f64]) -> Result<Vec<f64>> {
    let mut total = vec![0.0; grid.len()];
    for (v, weight) in velocity_nodes(cfg.beam.velocity_mps, cfg.beam.dv_over_v) {
        if v <= 0.0 {
            return Err(Error::Config("velocity spread reaches non-positive velocities".into()));
        }
        let lambda = de_broglie_wavelength(cfg.beam.mass_amu, v)?;
        let cum = cumulants(cfg.c3_mev_nm3, &cfg.geometry, v)?;
        let half_kd = 0.5 * wavenumber(lambda) * cfg.geometry.period_nm;
        for (t, &theta) in total.iter_mut().zip(grid) {
            let slit = slit_amplitude_cumulant(theta, &cum, &cfg.geometry, lambda)?.intensity();
            *t += weight * grating_factor(cfg.slits, half_kd * theta.sin()) * slit;
        }
    }
    Ok(total)
}

/// Gaussian smoothing from a uniform fine grid onto arbitrary output angles.
fn convolve(fine_start: f64, fine_step: f64, fine: &[f64], angles: &[f64], fwhm: f64) -> Vec<f64> {
    let sigma = fwhm / FWHM_PER_SIGMA;
    let reach = (KERNEL_REACH * sigma / fine_step).ceil() as isize;
    angles
        .iter()
        .map(|&a| {
            let centre = ((a - fine_start) / fine_step).round() as isize;
            let (mut acc, mut norm) = (0.0, 0.0);
            for i in (centre - reach).max(0)..=(centre + reach).min(fine.len() as isize - 1) {
                let x = fine_start + i as f64 * fine_step - a;
                let k = (-0.5 * (x / sigma).powi(2)).exp();
                acc += k * fine[i as usize];
                norm += k;
            }
            if norm > 0.0 {
                acc / norm
            } else {
                0.0
            }
        })
        .collect()
}

/// Expected counts before noise.
pub fn expected_counts(cfg: &SynthConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let angles = cfg.angles();
    let norm = cfg.normalization()?;
    let scale = cfg.peak_counts / norm;
    let intensity = if cfg.resolution_fwhm_rad == 0.0 {
        averaged_pattern(cfg, &angles)?
    } else {
        let lambda = cfg.beam.wavelength_nm()?;
        let peak_width = lambda / (cfg.slits as f64 * cfg.geometry.period_nm);
        let fine_step = (peak_width / POINTS_PER_PEAK).min(cfg.angle_step_rad);
        let pad = KERNEL_REACH * cfg.resolution_fwhm_rad / FWHM_PER_SIGMA + fine_step;
        let start = cfg.angle_min_rad - pad;
        let count = ((cfg.angle_max_rad + pad - start) / fine_step).ceil() as usize + 1;
        if count > 50_000_000 {
            return Err(Error::Config(format!(
                "{count} fine-grid points needed to resolve {} slits; reduce the slit count or the range",
                cfg.slits
            )));
        }
        let grid: Vec<f64> = (0..count).map(|i| start + i as f64 * fine_step).collect();
        let fine = averaged_pattern(cfg, &grid)?;
        convolve(start, fine_step, &fine, &angles, cfg.resolution_fwhm_rad)
    };
    Ok(intensity.iter().map(|i| scale * i + cfg.background_counts).collect())
}

/// A complete scan, Poisson-sampled with `cfg.seed` when requested.
pub fn generate_scan(cfg: &SynthConfig) -> Result<DiffractionScan> {
    let expected = expected_counts(cfg)?;
    let counts: Vec<f64> = if cfg.poisson_noise {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        expected
            .iter()
            .map(|&mu| {
                if mu > 0.0 {
                    Poisson::new(mu)
                        .map(|p| p.sample(&mut rng))
                        .map_err(|e| Error::Config(format!("Poisson mean {mu}: {e}")))
                } else {
                    Ok(0.0)
                }
            })
            .collect::<Result<_>>()?
    } else {
        expected
    };
    let samples = cfg
        .angles()
        .into_iter()
        .zip(counts)
        .map(|(angle_rad, counts)| ScanSample {
            angle_rad,
            counts,
            dwell_s: None,
        })
        .collect();
    let metadata = ScanMetadata {
        species: Some(cfg.beam.species.clone()),
        nozzle_temperature_k: None,
        grating: cfg.grating_label.clone(),
        velocity_mps: Some(cfg.beam.velocity_mps),
        dv_over_v: Some(cfg.beam.dv_over_v),
        extra: [
            ("c3_meV_nm3".to_string(), format!("{}", cfg.c3_mev_nm3)),
            ("mass_amu".to_string(), format!("{}", cfg.beam.mass_amu)),
            ("seed".to_string(), cfg.seed.to_string()),
            ("slits".to_string(), cfg.slits.to_string()),
        ]
        .into_iter()
        .collect(),
    };
    let scan = DiffractionScan { samples, metadata };
    scan.validate()?;
    Ok(scan)
}

/// Peak areas drawn directly from the effective-slit order intensities:
/// order `n` gets `Poisson(zero_order_counts · I_n/I_0)` with uncertainty
/// `√max(area, 1)`. Skips the angular scan entirely.
pub fn poisson_peak_table(
    slit: &EffectiveSlit,
    period_nm: f64,
    orders: std::ops::RangeInclusive<i32>,
    zero_order_counts: f64,
    seed: u64,
) -> Result<PeakTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = orders
        .map(|n| {
            let mu = zero_order_counts * intensity_ratio(n, slit, period_nm);
            let area = if mu > 0.0 {
                Poisson::new(mu)
                    .map_err(|e| Error::Config(format!("Poisson mean {mu}: {e}")))?
                    .sample(&mut rng)
            } else {
                0.0
            };
            Ok(PeakEntry {
                order: n,
                area,
                area_uncertainty: area.max(1.0).sqrt(),
                center_rad: f64::NAN,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PeakTable::new(entries))
}
