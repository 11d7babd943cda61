//! Per-order peak areas from an angular scan.

use crate::error::{Error, Result};
use crate::io::scan::DiffractionScan;
use crate::physics::diffraction_angle;
use crate::physics::GratingGeometry;

/// Default detector resolution, FWHM.
pub const DEFAULT_RESOLUTION_RAD: f64 = 70e-6;

/// How the background under a peak window was estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackgroundModel {
    /// Straight line between the medians at the two window edges.
    LinearEdges,
    /// A single median of both edge neighbourhoods.
    ConstantMedian,
}

impl BackgroundModel {
    pub fn as_str(&self) -> &'static str {
        match self {
            BackgroundModel::LinearEdges => "linear-edges",
            BackgroundModel::ConstantMedian => "constant-median",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakEntry {
    pub order: i32,
    /// Background-corrected area, counts·rad.
    pub area: f64,
    pub area_uncertainty: f64,
    pub center_rad: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeakTable {
    pub entries: Vec<PeakEntry>,
    pub background: BackgroundModel,
    /// Orders that were requested but not extracted, with the reason.
    pub skipped: Vec<(i32, String)>,
}

impl PeakTable {
    pub fn new(entries: Vec<PeakEntry>) -> Self {
        Self {
            entries,
            background: BackgroundModel::LinearEdges,
            skipped: Vec::new(),
        }
    }

    pub fn get(&self, order: i32) -> Option<&PeakEntry> {
        self.entries.iter().find(|e| e.order == order)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for e in &self.entries {
            if !seen.insert(e.order) {
                return Err(Error::Validation(format!("order {} appears twice", e.order)));
            }
            if !(e.area >= 0.0) {
                return Err(Error::Validation(format!(
                    "order {} has negative area {}",
                    e.order, e.area
                )));
            }
        }
        Ok(())
    }

    /// Copy with every area and uncertainty multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for e in &mut out.entries {
            e.area *= factor;
            e.area_uncertainty *= factor;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractionOptions {
    /// Half-width at the zeroth order.
    pub window_halfwidth_rad: f64,
    /// Beam velocity spread (FWHM/mean). Order `n` sits at `θ_n ≈ nλ/d`
    /// and is smeared by `θ_n Δv/v`, so its window grows to
    /// `√(w² + (2.5 θ_n Δv/v)²)`, capped below half the order spacing.
    pub dv_over_v: f64,
    /// Highest `|n|` to extract.
    pub max_order: i32,
    pub include_negative: bool,
    pub background: BackgroundModel,
    /// Added to every predicted peak centre (detector zero offset).
    pub angle_offset_rad: f64,
}

impl ExtractionOptions {
    /// 2.5 × the resolution FWHM, clipped below half the order spacing.
    pub fn default_for(wavelength_nm: f64, period_nm: f64) -> Self {
        let spacing = wavelength_nm / period_nm;
        let window = (2.5 * DEFAULT_RESOLUTION_RAD).min(0.49 * spacing);
        Self {
            window_halfwidth_rad: window,
            dv_over_v: 0.0,
            max_order: 8,
            include_negative: false,
            background: BackgroundModel::LinearEdges,
            angle_offset_rad: 0.0,
        }
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Linear interpolation of the counts at `theta`; `theta` must lie in range.
fn counts_at(angles: &[f64], counts: &[f64], theta: f64) -> f64 {
    let i = angles.partition_point(|&a| a < theta);
    if i == 0 {
        return counts[0];
    }
    if i >= angles.len() {
        return counts[angles.len() - 1];
    }
    let (a0, a1) = (angles[i - 1], angles[i]);
    let t = (theta - a0) / (a1 - a0);
    counts[i - 1] + t * (counts[i] - counts[i - 1])
}

/// Median of the samples nearest to `edge` (five, or all within one window
/// quarter when the grid is coarse).
fn edge_median(angles: &[f64], counts: &[f64], edge: f64, span: f64) -> f64 {
    let mut near: Vec<f64> = angles
        .iter()
        .zip(counts)
        .filter(|(a, _)| (**a - edge).abs() <= span)
        .map(|(_, c)| *c)
        .collect();
    if near.is_empty() {
        near.push(counts_at(angles, counts, edge));
    }
    median(&mut near)
}

/// Background-corrected area under each principal maximum.
///
/// For every order whose window `[θ_n − w, θ_n + w]` lies inside the scan,
/// the background is interpolated between the medians at the two window
/// edges, the area is the trapezoidal integral of counts minus background,
/// and the uncertainty is `√(Σ raw counts) · Δθ`.
pub fn extract_peak_areas(
    scan: &DiffractionScan,
    geometry: &GratingGeometry,
    wavelength_nm: f64,
    opts: &ExtractionOptions,
) -> Result<PeakTable> {
    let w = opts.window_halfwidth_rad;
    if !(w > 0.0) {
        return Err(Error::Config(format!("window half-width must be positive, got {w}")));
    }
    let angles: Vec<f64> = scan.samples.iter().map(|s| s.angle_rad).collect();
    let counts: Vec<f64> = scan.samples.iter().map(|s| s.counts).collect();
    if angles.len() < 2 {
        return Err(Error::Validation("scan needs at least two samples".into()));
    }
    let (first, last) = (angles[0], angles[angles.len() - 1]);
    let step = (last - first) / (angles.len() - 1) as f64;

    let orders: Vec<i32> = if opts.include_negative {
        (-opts.max_order..=opts.max_order).collect()
    } else {
        (0..=opts.max_order).collect()
    };

    // adjacent windows must not overlap
    let mut centers = Vec::with_capacity(orders.len());
    for &n in &orders {
        match diffraction_angle(n, wavelength_nm, geometry.period_nm) {
            Ok(theta) => centers.push((n, Some(theta + opts.angle_offset_rad))),
            Err(_) => centers.push((n, None)),
        }
    }
    for pair in centers.windows(2) {
        if let ((_, Some(a)), (_, Some(b))) = (pair[0], pair[1]) {
            if (b - a).abs() <= 2.0 * w {
                return Err(Error::Config(format!(
                    "window half-width {:.3e} rad overlaps adjacent orders {} and {} (spacing {:.3e} rad)",
                    w,
                    pair[0].0,
                    pair[1].0,
                    (b - a).abs()
                )));
            }
        }
    }

    let mut table = PeakTable {
        entries: Vec::new(),
        background: opts.background,
        skipped: Vec::new(),
    };
    let spacing = wavelength_nm / geometry.period_nm;
    for (n, center) in centers {
        let Some(theta) = center else {
            table.skipped.push((n, "evanescent order".into()));
            continue;
        };
        let smear = 2.5 * (theta - opts.angle_offset_rad).abs() * opts.dv_over_v;
        let wn = w.hypot(smear).min(w.max(0.49 * spacing));
        let span = (2.0 * step).max(0.1 * wn);
        let (lo, hi) = (theta - wn, theta + wn);
        if lo < first || hi > last {
            table.skipped.push((n, "window outside scan range".into()));
            continue;
        }
        let left = edge_median(&angles, &counts, lo, span);
        let right = edge_median(&angles, &counts, hi, span);
        let background = |a: f64| match opts.background {
            BackgroundModel::LinearEdges => left + (right - left) * (a - lo) / (hi - lo),
            BackgroundModel::ConstantMedian => 0.5 * (left + right),
        };

        let mut xs = vec![lo];
        let mut ys = vec![counts_at(&angles, &counts, lo)];
        let mut raw = 0.0;
        for (a, c) in angles.iter().zip(&counts) {
            if *a > lo && *a < hi {
                xs.push(*a);
                ys.push(*c);
                raw += c;
            }
        }
        xs.push(hi);
        ys.push(counts_at(&angles, &counts, hi));

        let mut area = 0.0;
        for i in 1..xs.len() {
            let y0 = ys[i - 1] - background(xs[i - 1]);
            let y1 = ys[i] - background(xs[i]);
            area += 0.5 * (y0 + y1) * (xs[i] - xs[i - 1]);
        }
        table.entries.push(PeakEntry {
            order: n,
            area: area.max(0.0),
            area_uncertainty: raw.max(0.0).sqrt() * step,
            center_rad: theta,
        });
    }
    Ok(table)
}
