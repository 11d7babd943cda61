//! `extract` and `fit-slit`: peak areas and effective-slit fits per scan.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use vdw_core::fitting::{fit_ratio_params, measured_ratios, ratio_model, FitResult, RatioFitParams};
use vdw_core::io::{extract_peak_areas, results_to_string, FitRecord, PeakTable};
use vdw_core::{intensity_ratio, intensity_ratio_continuous, GratingGeometry};

use crate::common::{load_scan, par_map, GeometryArgs, LoadedScan, OutArgs, WindowArgs};
use crate::files::{stem, Outputs, RunManifest, Table};

#[derive(Args, Debug)]
pub struct SlitArgs {
    /// Angular scan files
    #[arg(required = true)]
    pub scans: Vec<PathBuf>,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub window: WindowArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

/// Column layout of the effective-width table that `fit-c3` reads.
pub const SEFF_COLUMNS: [&str; 12] = [
    "velocity_mps",
    "s_eff_nm",
    "s_eff_unc_nm",
    "grating",
    "species",
    "delta_nm",
    "delta_unc_nm",
    "sigma_nm",
    "sigma_unc_nm",
    "rss",
    "converged",
    "source",
];

fn extract(scan: &LoadedScan, geometry: &GratingGeometry, args: &SlitArgs) -> anyhow::Result<PeakTable> {
    let opts = args.window.options(&scan.beam, geometry);
    extract_peak_areas(&scan.scan, geometry, scan.beam.wavelength_nm, &opts)
        .with_context(|| format!("extracting peaks from {}", scan.path.display()))
}

fn peak_table(peaks: &PeakTable) -> Table {
    let mut t = Table::new(&["order", "area", "area_unc", "center_mrad"]);
    t.comment(format!("background: {}", peaks.background.as_str()));
    for (n, reason) in &peaks.skipped {
        t.comment(format!("skipped order {n}: {reason}"));
    }
    for e in &peaks.entries {
        t.push(vec![
            e.order.to_string(),
            e.area.to_string(),
            e.area_uncertainty.to_string(),
            (e.center_rad * 1e3).to_string(),
        ]);
    }
    t
}

fn echo(args: &SlitArgs, subcommand: &str) -> anyhow::Result<(GratingGeometry, RunManifest)> {
    let (record, geometry) = args.geometry.resolve()?;
    let mut manifest = RunManifest::new(subcommand, &args.scans, &args.out.out);
    args.geometry.echo(&record, &mut manifest);
    args.window.echo(&mut manifest);
    Ok((geometry, manifest))
}

fn echo_scan(
    manifest: &mut RunManifest,
    i: usize,
    scan: &LoadedScan,
    peaks: &PeakTable,
    geometry: &GratingGeometry,
    args: &SlitArgs,
) {
    let b = &scan.beam;
    manifest.param(format!("scan.{i}.species"), &b.spec.species);
    manifest.param(format!("scan.{i}.mass_amu"), b.spec.mass_amu);
    manifest.param(format!("scan.{i}.velocity_mps"), b.spec.velocity_mps);
    manifest.param(format!("scan.{i}.dv_over_v"), b.spec.dv_over_v);
    manifest.param(format!("scan.{i}.wavelength_nm"), b.wavelength_nm);
    manifest.param(format!("scan.{i}.orders_used"), peaks.entries.len());
    let opts = args.window.options(b, geometry);
    manifest.param(format!("scan.{i}.window_urad"), opts.window_halfwidth_rad * 1e6);
}

pub fn run_extract(args: &SlitArgs) -> anyhow::Result<bool> {
    let (geometry, mut manifest) = echo(args, "extract")?;
    let results = par_map(&args.scans, |path| {
        let scan = load_scan(path)?;
        let peaks = extract(&scan, &geometry, args)?;
        Ok((scan, peaks))
    })?;
    let mut outputs = Outputs::default();
    for (i, (scan, peaks)) in results.iter().enumerate() {
        echo_scan(&mut manifest, i, scan, peaks, &geometry, args);
        let mut table = peak_table(peaks);
        table.comment(format!("source: {}", scan.path.display()));
        outputs.add(format!("{}.peaks", stem(&scan.path)), table.render());
    }
    outputs.commit(manifest)?;
    Ok(true)
}

struct SlitFit {
    scan: LoadedScan,
    peaks: PeakTable,
    fit: FitResult<RatioFitParams>,
}

fn fit_scan(path: &std::path::Path, geometry: &GratingGeometry, args: &SlitArgs) -> anyhow::Result<SlitFit> {
    let scan = load_scan(path)?;
    let peaks = extract(&scan, geometry, args)?;
    let fit = fit_ratio_params(&peaks, geometry).with_context(|| format!("ratio fit of {}", path.display()))?;
    Ok(SlitFit { scan, peaks, fit })
}

fn ratio_tables(f: &SlitFit, geometry: &GratingGeometry) -> anyhow::Result<(Table, Table)> {
    let d = geometry.period_nm;
    let slit = f.fit.params.effective();
    let mut data = Table::new(&["order", "ratio", "ratio_unc", "model", "normalized_residual"]);
    data.comment("I_n/I_1 measured against the fitted effective slit");
    for m in measured_ratios(&f.peaks)? {
        let model = ratio_model(m.order, &f.fit.params, d);
        let residual = if m.uncertainty > 0.0 {
            (m.ratio - model) / m.uncertainty
        } else {
            f64::NAN
        };
        data.push(vec![
            m.order.to_string(),
            m.ratio.to_string(),
            m.uncertainty.to_string(),
            model.to_string(),
            residual.to_string(),
        ]);
    }
    let max_order = f.peaks.entries.iter().map(|e| e.order.abs()).max().unwrap_or(1);
    let mut curve = Table::new(&["order", "ratio"]);
    let i1 = intensity_ratio(1, &slit, d);
    let steps = 20 * (max_order - 1).max(1);
    for k in 0..=steps {
        let n = 1.0 + (max_order - 1) as f64 * k as f64 / steps as f64;
        curve.push_numbers(&[n, intensity_ratio_continuous(n, &slit, d) / i1]);
    }
    Ok((data, curve))
}

pub fn run_fit(args: &SlitArgs) -> anyhow::Result<bool> {
    let (geometry, mut manifest) = echo(args, "fit-slit")?;
    let fits = par_map(&args.scans, |path| fit_scan(path, &geometry, args))?;

    let mut outputs = Outputs::default();
    let mut seff = Table::new(&SEFF_COLUMNS);
    seff.comment("effective slit parameters per scan; NaN uncertainty means the parameter sits on a bound");
    let mut all_converged = true;
    for (i, f) in fits.iter().enumerate() {
        echo_scan(&mut manifest, i, &f.scan, &f.peaks, &geometry, args);
        let name = stem(&f.scan.path);
        let s = &f.fit.summary;
        all_converged &= s.converged;
        for w in &s.warnings {
            eprintln!("warning: {}: {w}", f.scan.path.display());
        }
        if !s.converged {
            eprintln!("warning: {}: ratio fit did not converge", f.scan.path.display());
        }

        let mut provenance = BTreeMap::new();
        provenance.insert("source".to_string(), f.scan.path.display().to_string());
        provenance.insert("species".to_string(), f.scan.beam.spec.species.clone());
        provenance.insert("velocity_mps".to_string(), f.scan.beam.spec.velocity_mps.to_string());
        provenance.insert("wavelength_nm".to_string(), f.scan.beam.wavelength_nm.to_string());
        provenance.insert("period_nm".to_string(), geometry.period_nm.to_string());
        provenance.insert("s0_nm".to_string(), geometry.slit_width_nm.to_string());
        provenance.insert("orders".to_string(), args.window.orders.to_string());
        provenance.insert("background".to_string(), f.peaks.background.as_str().to_string());
        let record = FitRecord {
            kind: "ratio".into(),
            summary: s.clone(),
            provenance,
        };
        outputs.add(format!("{name}.ratio.results"), results_to_string(&record)?);
        let (data, curve) = ratio_tables(f, &geometry)?;
        outputs.add(format!("{name}.ratios.dat"), data.render());
        outputs.add(format!("{name}.ratio_model.dat"), curve.render());

        let p = |k: usize| &s.parameters[k];
        let grating = f
            .scan
            .scan
            .metadata
            .grating
            .clone()
            .unwrap_or_else(|| args.geometry.geometry.clone());
        seff.push(vec![
            f.scan.beam.spec.velocity_mps.to_string(),
            p(0).value.to_string(),
            p(0).uncertainty.to_string(),
            grating,
            f.scan.beam.spec.species.clone(),
            p(1).value.to_string(),
            p(1).uncertainty.to_string(),
            p(2).value.to_string(),
            p(2).uncertainty.to_string(),
            s.rss.to_string(),
            s.converged.to_string(),
            name,
        ]);
    }
    outputs.add("seff.tsv", seff.render());
    outputs.commit(manifest)?;
    Ok(all_converged)
}
