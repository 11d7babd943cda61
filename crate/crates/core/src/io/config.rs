//! Grating and beam descriptions: built-in presets and `key = value` files.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::physics::{BeamSpec, GratingGeometry};
use crate::units::{deg_to_rad, supersonic_velocity};

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("expected `key = value`, got {line:?}"),
            });
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Parse {
                line: idx + 1,
                message: "empty key".into(),
            });
        }
        if map.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("duplicate key {key:?}"),
            });
        }
    }
    Ok(map)
}

fn number(map: &BTreeMap<String, String>, key: &str) -> Result<Option<f64>> {
    map.get(key)
        .map(|v| {
            v.parse::<f64>()
                .map_err(|_| Error::Config(format!("{key}: not a number: {v:?}")))
        })
        .transpose()
}

fn required(value: Option<f64>, key: &str) -> Result<f64> {
    value.ok_or_else(|| Error::MissingField(key.to_string()))
}

/// A grating description before the bar thickness and roughness are known.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryRecord {
    pub id: String,
    pub period_nm: f64,
    pub s0_nm: f64,
    pub beta_deg: f64,
    pub thickness_nm: Option<f64>,
    pub sigma0_nm: Option<f64>,
}

impl GeometryRecord {
    /// Fails with [`Error::MissingField`] unless `t_nm` and `sigma0_nm` are set.
    pub fn into_geometry(&self) -> Result<GratingGeometry> {
        let t = required(self.thickness_nm, "t_nm")?;
        let sigma0 = required(self.sigma0_nm, "sigma0_nm")?;
        let g = GratingGeometry {
            period_nm: self.period_nm,
            slit_width_nm: self.s0_nm,
            thickness_nm: t,
            wedge_angle_rad: deg_to_rad(self.beta_deg),
            roughness_variance_nm2: sigma0 * sigma0,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn with_thickness(mut self, t_nm: f64) -> Self {
        self.thickness_nm = Some(t_nm);
        self
    }

    pub fn with_sigma0(mut self, sigma0_nm: f64) -> Self {
        self.sigma0_nm = Some(sigma0_nm);
        self
    }
}

/// Gratings I–III: period 100 nm, wedge angle and nominal width as measured.
/// Thickness and roughness are left unset.
pub fn geometry_preset(id: &str) -> Result<GeometryRecord> {
    let (beta_deg, s0_nm) = match id {
        "I" => (7.5, 50.0),
        "II" => (8.7, 67.5),
        "III" => (12.7, 71.2),
        _ => return Err(Error::UnknownPreset(id.to_string())),
    };
    Ok(GeometryRecord {
        id: id.to_string(),
        period_nm: 100.0,
        s0_nm,
        beta_deg,
        thickness_nm: None,
        sigma0_nm: None,
    })
}

/// Geometry file: optional `preset`, then any of `d_nm`, `s0_nm`, `t_nm`,
/// `beta_deg`, `sigma0_nm` overriding it. Without a preset, `d_nm`, `s0_nm`
/// and `beta_deg` are mandatory.
pub fn parse_geometry(text: &str) -> Result<GeometryRecord> {
    let map = parse_key_values(text)?;
    let known = ["preset", "id", "d_nm", "s0_nm", "t_nm", "beta_deg", "sigma0_nm"];
    if let Some(k) = map.keys().find(|k| !known.contains(&k.as_str())) {
        return Err(Error::Config(format!("unknown geometry key {k:?}")));
    }
    let base = map.get("preset").map(|p| geometry_preset(p)).transpose()?;
    let pick = |key: &str, fallback: Option<f64>| -> Result<f64> { required(number(&map, key)?.or(fallback), key) };
    let record = GeometryRecord {
        id: map
            .get("id")
            .cloned()
            .or_else(|| base.as_ref().map(|b| b.id.clone()))
            .unwrap_or_else(|| "custom".into()),
        period_nm: pick("d_nm", base.as_ref().map(|b| b.period_nm))?,
        s0_nm: pick("s0_nm", base.as_ref().map(|b| b.s0_nm))?,
        beta_deg: pick("beta_deg", base.as_ref().map(|b| b.beta_deg))?,
        thickness_nm: number(&map, "t_nm")?,
        sigma0_nm: number(&map, "sigma0_nm")?,
    };
    Ok(record)
}

/// A preset id (`I`, `II`, `III`) or a path to a geometry file.
pub fn load_geometry(source: &str) -> Result<GeometryRecord> {
    match geometry_preset(source) {
        Ok(r) => Ok(r),
        Err(Error::UnknownPreset(_)) if Path::new(source).exists() => parse_geometry(&std::fs::read_to_string(source)?),
        Err(e) => Err(e),
    }
}

/// Mass, polarizability, velocity spread at 300 K, and internal degrees of
/// freedom used for the ideal supersonic velocity.
struct SpeciesData {
    mass_amu: f64,
    alpha_a3: f64,
    dv_over_v: f64,
    dof: u32,
}

fn species_data(species: &str) -> Option<SpeciesData> {
    let (mass_amu, alpha_a3, dv_over_v, dof) = match species {
        "He" => (4.002602, 0.2050, 0.021, 3),
        "Ne" => (20.1797, 0.3956, 0.05, 3),
        "D2" => (4.028204, 0.7950, 0.076, 5),
        "Ar" => (39.948, 1.6411, 0.077, 3),
        "Kr" => (83.798, 2.4844, 0.10, 3),
        _ => return None,
    };
    Some(SpeciesData {
        mass_amu,
        alpha_a3,
        dv_over_v,
        dof,
    })
}

/// He, Ne, D2, Ar, Kr from a 300 K nozzle.
pub fn beam_preset(species: &str) -> Result<BeamSpec> {
    beam_preset_at(species, 300.0)
}

pub fn beam_preset_at(species: &str, nozzle_temperature_k: f64) -> Result<BeamSpec> {
    let s = species_data(species).ok_or_else(|| Error::UnknownPreset(species.to_string()))?;
    let beam = BeamSpec {
        species: species.to_string(),
        mass_amu: s.mass_amu,
        velocity_mps: supersonic_velocity(s.mass_amu, nozzle_temperature_k, s.dof),
        dv_over_v: s.dv_over_v,
        polarizability_a3: Some(s.alpha_a3),
    };
    beam.validate()?;
    Ok(beam)
}

/// Beam file: `species`, `mass_amu`, `v_mps`, `dv_over_v`, `alpha_A3`.
/// A known species fills in any missing mass, spread and polarizability;
/// `v_mps` is always required.
pub fn parse_beam(text: &str) -> Result<BeamSpec> {
    let map = parse_key_values(text)?;
    let known = ["species", "mass_amu", "v_mps", "dv_over_v", "alpha_A3"];
    if let Some(k) = map.keys().find(|k| !known.contains(&k.as_str())) {
        return Err(Error::Config(format!("unknown beam key {k:?}")));
    }
    let species = map.get("species").cloned().unwrap_or_else(|| "custom".into());
    let base = species_data(&species);
    let beam = BeamSpec {
        mass_amu: required(
            number(&map, "mass_amu")?.or(base.as_ref().map(|b| b.mass_amu)),
            "mass_amu",
        )?,
        velocity_mps: required(number(&map, "v_mps")?, "v_mps")?,
        dv_over_v: number(&map, "dv_over_v")?
            .or(base.as_ref().map(|b| b.dv_over_v))
            .unwrap_or(0.0),
        polarizability_a3: number(&map, "alpha_A3")?.or(base.as_ref().map(|b| b.alpha_a3)),
        species,
    };
    beam.validate()?;
    Ok(beam)
}

pub fn load_beam(path: &Path) -> Result<BeamSpec> {
    parse_beam(&std::fs::read_to_string(path)?)
}
