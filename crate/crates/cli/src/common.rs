//! Flags and loaders shared by several subcommands.

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, ValueEnum};
use vdw_core::io::{
    beam_preset, load_geometry, parse_scan_str, BackgroundModel, DiffractionScan, ExtractionOptions, GeometryRecord,
};
use vdw_core::{BeamSpec, Error, GratingGeometry};

use crate::files::{read_input, RunManifest};

pub const OUT_ENV: &str = "VDWGRATING_OUT";

#[derive(Args, Debug, Clone)]
pub struct OutArgs {
    /// Output directory
    #[arg(long, env = OUT_ENV, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct GeometryArgs {
    /// Grating preset (I, II, III) or geometry file
    #[arg(long, default_value = "I")]
    pub geometry: String,
    /// Bar thickness t in nm (presets do not carry one)
    #[arg(long)]
    pub thickness_nm: Option<f64>,
    /// Slit-edge roughness σ0 in nm (presets do not carry one)
    #[arg(long)]
    pub sigma0_nm: Option<f64>,
}

impl GeometryArgs {
    pub fn resolve(&self) -> anyhow::Result<(GeometryRecord, GratingGeometry)> {
        resolve_geometry(&self.geometry, self.thickness_nm, self.sigma0_nm, None)
    }

    pub fn echo(&self, record: &GeometryRecord, manifest: &mut RunManifest) {
        manifest.param("geometry", &self.geometry);
        echo_geometry(record, manifest);
    }
}

pub fn echo_geometry(record: &GeometryRecord, manifest: &mut RunManifest) {
    manifest.param("geometry.id", &record.id);
    manifest.param("geometry.d_nm", record.period_nm);
    manifest.param("geometry.s0_nm", record.s0_nm);
    manifest.param("geometry.beta_deg", record.beta_deg);
    manifest.param("geometry.t_nm", fmt_opt(record.thickness_nm));
    manifest.param("geometry.sigma0_nm", fmt_opt(record.sigma0_nm));
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_else(|| "unset".into())
}

/// Loads a preset or geometry file and applies thickness/roughness
/// overrides. A relative file path is tried against `base_dir` first.
pub fn resolve_geometry(
    source: &str,
    thickness_nm: Option<f64>,
    sigma0_nm: Option<f64>,
    base_dir: Option<&Path>,
) -> anyhow::Result<(GeometryRecord, GratingGeometry)> {
    let source = match base_dir {
        Some(dir) if Path::new(source).is_relative() && dir.join(source).exists() => {
            dir.join(source).to_string_lossy().into_owned()
        }
        _ => source.to_string(),
    };
    let mut record = load_geometry(&source).with_context(|| format!("loading geometry {source:?}"))?;
    if let Some(t) = thickness_nm {
        record = record.with_thickness(t);
    }
    if let Some(s) = sigma0_nm {
        record = record.with_sigma0(s);
    }
    let geometry = record.into_geometry().with_context(|| {
        format!(
            "geometry {:?}: bar thickness and roughness must be given (--thickness-nm, --sigma0-nm or t_nm/sigma0_nm in a geometry file)",
            record.id
        )
    })?;
    Ok((record, geometry))
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Background {
    /// Straight line between the window-edge medians
    Linear,
    /// Mean of the two edge medians
    Constant,
}

impl From<Background> for BackgroundModel {
    fn from(b: Background) -> Self {
        match b {
            Background::Linear => BackgroundModel::LinearEdges,
            Background::Constant => BackgroundModel::ConstantMedian,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct WindowArgs {
    /// Highest diffraction order to extract
    #[arg(long, default_value_t = 8)]
    pub orders: i32,
    /// Integration half-width at the zeroth order in µrad
    /// [default: 175, clipped below half the order spacing]
    #[arg(long)]
    pub window_urad: Option<f64>,
    /// Also extract the negative orders
    #[arg(long)]
    pub negative: bool,
    #[arg(long, value_enum, default_value_t = Background::Linear)]
    pub background: Background,
}

impl WindowArgs {
    pub fn options(&self, beam: &LoadedBeam, geometry: &GratingGeometry) -> ExtractionOptions {
        let mut opts = ExtractionOptions::default_for(beam.wavelength_nm, geometry.period_nm);
        opts.dv_over_v = beam.spec.dv_over_v;
        opts.max_order = self.orders;
        opts.include_negative = self.negative;
        opts.background = self.background.into();
        if let Some(w) = self.window_urad {
            opts.window_halfwidth_rad = w * 1e-6;
        }
        opts
    }

    pub fn echo(&self, manifest: &mut RunManifest) {
        manifest.param("orders", self.orders);
        manifest.param(
            "window_urad",
            self.window_urad
                .map(|w| w.to_string())
                .unwrap_or_else(|| "default (175, clipped below half the order spacing)".into()),
        );
        manifest.param("negative_orders", self.negative);
        manifest.param("background", BackgroundModel::from(self.background).as_str());
    }
}

/// Beam parameters recovered from a scan header.
#[derive(Debug, Clone)]
pub struct LoadedBeam {
    pub spec: BeamSpec,
    pub wavelength_nm: f64,
}

#[derive(Debug, Clone)]
pub struct LoadedScan {
    pub path: PathBuf,
    pub scan: DiffractionScan,
    pub beam: LoadedBeam,
}

/// Velocity comes from the `velocity_mps` header; the mass from a
/// `mass_amu` header or the species table; the spread from `dv_over_v`,
/// the species table, or zero.
pub fn scan_beam(scan: &DiffractionScan) -> vdw_core::Result<LoadedBeam> {
    let meta = &scan.metadata;
    let species = meta.species.clone().unwrap_or_else(|| "unknown".into());
    let preset = beam_preset(&species).ok();
    let mass = match meta.extra.get("mass_amu") {
        Some(m) => m
            .parse()
            .map_err(|_| Error::Validation(format!("mass_amu header is not a number: {m:?}")))?,
        None => preset
            .as_ref()
            .map(|b| b.mass_amu)
            .ok_or_else(|| Error::MissingField("mass_amu".into()))?,
    };
    let spec = BeamSpec {
        mass_amu: mass,
        velocity_mps: meta
            .velocity_mps
            .ok_or_else(|| Error::MissingField("velocity_mps".into()))?,
        dv_over_v: meta.dv_over_v.or(preset.as_ref().map(|b| b.dv_over_v)).unwrap_or(0.0),
        polarizability_a3: preset.as_ref().and_then(|b| b.polarizability_a3),
        species,
    };
    spec.validate()?;
    let wavelength_nm = spec.wavelength_nm()?;
    Ok(LoadedBeam { spec, wavelength_nm })
}

pub fn load_scan(path: &Path) -> anyhow::Result<LoadedScan> {
    let text = read_input(path)?;
    let scan = parse_scan_str(&text).with_context(|| format!("parsing scan {}", path.display()))?;
    let beam = scan_beam(&scan).with_context(|| format!("scan {}", path.display()))?;
    Ok(LoadedScan {
        path: path.to_path_buf(),
        scan,
        beam,
    })
}

/// Runs `f` over `items` in parallel and returns the results in input
/// order, or the first error in input order.
pub fn par_map<T: Sync, U: Send>(
    items: &[T],
    f: impl Fn(&T) -> anyhow::Result<U> + Sync + Send,
) -> anyhow::Result<Vec<U>> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect::<Vec<_>>().into_iter().collect()
}
