//! `simulate`: synthetic scans from `key = value` configuration files.
//!
//! ```text
//! geometry = I            # preset or geometry file
//! t_nm = 120
//! sigma0_nm = 0
//! species = He            # or mass_amu = ...
//! nozzle_temperature_K = 300
//! c3_meV_nm3 = 0.1
//! seed = 7
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use vdw_core::io::{beam_preset_at, parse_key_values, serialize_scan};
use vdw_core::synthetic::{generate_scan, SynthConfig};
use vdw_core::{BeamSpec, Error};

use crate::common::{par_map, resolve_geometry, OutArgs};
use crate::files::{read_input, stem, Outputs, RunManifest};

const KEYS: [&str; 19] = [
    "geometry",
    "t_nm",
    "sigma0_nm",
    "species",
    "mass_amu",
    "v_mps",
    "nozzle_temperature_K",
    "dv_over_v",
    "c3_meV_nm3",
    "slits",
    "angle_min_mrad",
    "angle_max_mrad",
    "angle_step_urad",
    "resolution_urad",
    "peak_counts",
    "background_counts",
    "seed",
    "noise",
    "label",
];

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Simulation configuration files
    #[arg(required = true)]
    pub configs: Vec<PathBuf>,
    /// Override the configured grating (preset or geometry file)
    #[arg(long)]
    pub geometry: Option<String>,
    /// Override the configured bar thickness t in nm
    #[arg(long)]
    pub thickness_nm: Option<f64>,
    /// Override the configured slit-edge roughness σ0 in nm
    #[arg(long)]
    pub sigma0_nm: Option<f64>,
    /// Override the configured noise seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Highest order covered by the default angular range
    #[arg(long, default_value_t = 8)]
    pub orders: i32,
    #[command(flatten)]
    pub out: OutArgs,
}

struct Resolved {
    config: SynthConfig,
    /// Every effective setting, keyed like the config file.
    echo: BTreeMap<String, String>,
}

fn number(map: &BTreeMap<String, String>, key: &str) -> vdw_core::Result<Option<f64>> {
    map.get(key)
        .map(|v| {
            v.parse()
                .map_err(|_| Error::Config(format!("{key}: not a number: {v:?}")))
        })
        .transpose()
}

fn resolve(path: &Path, args: &SimulateArgs) -> anyhow::Result<Resolved> {
    let map = parse_key_values(&read_input(path)?)?;
    if let Some(k) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(Error::Config(format!("unknown key {k:?}")).into());
    }
    let mut echo = BTreeMap::new();
    let mut set = |k: &str, v: String| {
        echo.insert(k.to_string(), v);
    };

    let source = args
        .geometry
        .clone()
        .or_else(|| map.get("geometry").cloned())
        .ok_or_else(|| Error::MissingField("geometry".into()))?;
    let (record, geometry) = resolve_geometry(
        &source,
        args.thickness_nm.or(number(&map, "t_nm")?),
        args.sigma0_nm.or(number(&map, "sigma0_nm")?),
        path.parent(),
    )?;
    set("geometry", source);
    set("geometry_id", record.id.clone());
    set("d_nm", record.period_nm.to_string());
    set("s0_nm", record.s0_nm.to_string());
    set("beta_deg", record.beta_deg.to_string());
    set("t_nm", geometry.thickness_nm.to_string());
    set("sigma0_nm", geometry.roughness_variance_nm2.sqrt().to_string());

    let temperature = number(&map, "nozzle_temperature_K")?.unwrap_or(300.0);
    let species = map.get("species").cloned();
    let preset = match &species {
        Some(s) => match beam_preset_at(s, temperature) {
            Ok(b) => Some(b),
            Err(Error::UnknownPreset(_)) => None,
            Err(e) => return Err(e.into()),
        },
        None => None,
    };
    let mass_amu = number(&map, "mass_amu")?
        .or(preset.as_ref().map(|b| b.mass_amu))
        .ok_or_else(|| Error::MissingField("mass_amu".into()))?;
    let velocity_mps = match number(&map, "v_mps")? {
        Some(v) => v,
        None => {
            set("nozzle_temperature_K", temperature.to_string());
            preset
                .as_ref()
                .map(|b| b.velocity_mps)
                .ok_or_else(|| Error::MissingField("v_mps".into()))?
        }
    };
    let beam = BeamSpec {
        species: species.unwrap_or_else(|| "custom".into()),
        mass_amu,
        velocity_mps,
        dv_over_v: number(&map, "dv_over_v")?
            .or(preset.as_ref().map(|b| b.dv_over_v))
            .unwrap_or(0.0),
        polarizability_a3: preset.as_ref().and_then(|b| b.polarizability_a3),
    };
    beam.validate()?;
    set("species", beam.species.clone());
    set("mass_amu", beam.mass_amu.to_string());
    set("v_mps", beam.velocity_mps.to_string());
    set("dv_over_v", beam.dv_over_v.to_string());

    let c3 = number(&map, "c3_meV_nm3")?.ok_or_else(|| Error::MissingField("c3_meV_nm3".into()))?;
    set("c3_meV_nm3", c3.to_string());

    let spacing_mrad = beam.wavelength_nm()? / geometry.period_nm * 1e3;
    let mut num = |key: &str, default: f64| -> vdw_core::Result<f64> {
        let v = number(&map, key)?.unwrap_or(default);
        set(key, v.to_string());
        Ok(v)
    };
    let angle_min = num("angle_min_mrad", -1.5 * spacing_mrad)?;
    let angle_max = num("angle_max_mrad", (args.orders as f64 + 1.5) * spacing_mrad)?;
    let step = num("angle_step_urad", 10.0)?;
    let resolution = num("resolution_urad", 70.0)?;
    let peak_counts = num("peak_counts", 1e5)?;
    let background = num("background_counts", 0.0)?;
    let slits = num("slits", 100.0)?;
    if !(slits >= 1.0 && slits.fract() == 0.0 && slits <= u32::MAX as f64) {
        return Err(Error::Config(format!("slits must be a positive integer, got {slits}")).into());
    }

    let seed = match args.seed {
        Some(s) => s,
        None => map
            .get("seed")
            .map(|s| {
                s.parse()
                    .map_err(|_| Error::Config(format!("seed: not an integer: {s:?}")))
            })
            .transpose()?
            .unwrap_or(0),
    };
    set("seed", seed.to_string());
    let noise = match map.get("noise").map(String::as_str) {
        None | Some("true") => true,
        Some("false") => false,
        Some(v) => return Err(Error::Config(format!("noise must be true or false, got {v:?}")).into()),
    };
    set("noise", noise.to_string());
    let label = map.get("label").cloned().unwrap_or_else(|| record.id.clone());
    set("label", label.clone());

    let config = SynthConfig {
        geometry,
        beam,
        c3_mev_nm3: c3,
        slits: slits as u32,
        angle_min_rad: angle_min * 1e-3,
        angle_max_rad: angle_max * 1e-3,
        angle_step_rad: step * 1e-6,
        resolution_fwhm_rad: resolution * 1e-6,
        peak_counts,
        background_counts: background,
        seed,
        poisson_noise: noise,
        grating_label: Some(label),
    };
    config.validate()?;
    Ok(Resolved { config, echo })
}

pub fn run(args: &SimulateArgs) -> anyhow::Result<bool> {
    let scans = par_map(&args.configs, |path| {
        let resolved = resolve(path, args).with_context(|| format!("config {}", path.display()))?;
        let scan = generate_scan(&resolved.config).with_context(|| format!("simulating {}", path.display()))?;
        Ok((resolved, serialize_scan(&scan)))
    })?;

    let mut manifest = RunManifest::new("simulate", &args.configs, &args.out.out);
    manifest.param("orders", args.orders);
    if let [(only, _)] = scans.as_slice() {
        manifest.seed = Some(only.config.seed.to_string());
    } else if let Some(s) = args.seed {
        manifest.seed = Some(s.to_string());
    }
    let mut outputs = Outputs::default();
    for (i, (path, (resolved, text))) in args.configs.iter().zip(scans).enumerate() {
        for (k, v) in &resolved.echo {
            manifest.param(format!("config.{i}.{k}"), v);
        }
        outputs.add(format!("{}.scan", stem(path)), text);
    }
    outputs.commit(manifest)?;
    Ok(true)
}
