//! `fit-c3`: C3 (and optionally s0) from an effective-width table, with the
//! wedge-angle systematic.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, ValueEnum};
use vdw_core::fitting::{beta_sensitivity, fit_c3_fixed_s0, fit_c3_s0, seff_model, FitSummary, SeffPoint};
use vdw_core::io::{beam_preset, results_to_string, FitRecord};
use vdw_core::units::deg_to_rad;
use vdw_core::{Error, GratingGeometry};

use crate::common::{par_map, GeometryArgs, OutArgs};
use crate::files::{read_input, Outputs, RunManifest, Table};

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Fit C3 and s0 together
    Joint,
    /// Fit C3 with s0 held fixed
    FixedS0,
}

impl Mode {
    fn as_str(self) -> &'static str {
        match self {
            Mode::Joint => "joint",
            Mode::FixedS0 => "fixed-s0",
        }
    }
}

#[derive(Args, Debug)]
pub struct C3Args {
    /// Effective-width table (as written by fit-slit)
    pub table: PathBuf,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[arg(long, value_enum, default_value_t = Mode::Joint)]
    pub mode: Mode,
    /// s0 for fixed-s0 mode [default: the geometry's nominal width]
    #[arg(long)]
    pub s0_nm: Option<f64>,
    /// Wedge-angle excursion for the systematic error
    #[arg(long, default_value_t = 2.0)]
    pub delta_beta_deg: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

/// Column layout of the table written by `fit-c3` and read by `alpha-fit`.
pub const C3_COLUMNS: [&str; 13] = [
    "species",
    "grating",
    "mode",
    "c3_meV_nm3",
    "c3_stat_meV_nm3",
    "c3_sys_meV_nm3",
    "c3_unc_meV_nm3",
    "s0_nm",
    "s0_unc_nm",
    "alpha_A3",
    "points",
    "rss",
    "converged",
];

/// Rows grouped by species, in table order within each group.
fn read_points(table: &Table, warnings: &mut Vec<String>) -> anyhow::Result<BTreeMap<String, Vec<SeffPoint>>> {
    let v = table.require("velocity_mps")?;
    let s = table.require("s_eff_nm")?;
    let species = table.require("species")?;
    let unc = table.index("s_eff_unc_nm");
    let grating = table.index("grating");
    let mut groups: BTreeMap<String, Vec<SeffPoint>> = BTreeMap::new();
    for row in 0..table.rows.len() {
        let mut u = match unc {
            Some(c) => table.number(row, c)?,
            None => 0.0,
        };
        let name = table.rows[row][species].clone();
        if !u.is_finite() {
            warnings.push(format!(
                "row {}: s_eff uncertainty is {u}; {name} falls back to uniform weights",
                row + 1
            ));
            u = 0.0;
        }
        let point = SeffPoint {
            velocity_mps: table.number(row, v)?,
            s_eff_nm: table.number(row, s)?,
            uncertainty_nm: u,
            grating: grating.map(|g| table.rows[row][g].clone()).unwrap_or_default(),
            species: name.clone(),
        };
        point.validate().with_context(|| format!("row {}", row + 1))?;
        groups.entry(name).or_default().push(point);
    }
    if groups.is_empty() {
        return Err(Error::UnderDetermined("table has no rows".into()).into());
    }
    let labels: std::collections::BTreeSet<&str> = groups.values().flatten().map(|p| p.grating.as_str()).collect();
    if labels.len() > 1 {
        return Err(Error::Validation(format!("table mixes gratings {labels:?}; fit each grating separately")).into());
    }
    Ok(groups)
}

struct SpeciesFit {
    c3: f64,
    c3_stat: f64,
    s0: f64,
    s0_unc: f64,
    sys: vdw_core::fitting::BetaSensitivity,
    summary: FitSummary,
}

fn fit_species(points: &[SeffPoint], geometry: &GratingGeometry, args: &C3Args) -> anyhow::Result<SpeciesFit> {
    let (c3, c3_stat, s0, s0_unc, summary) = match args.mode {
        Mode::Joint => {
            let f = fit_c3_s0(points, geometry)?;
            let s = f.summary;
            (
                f.params.c3_mev_nm3,
                s.parameters[0].uncertainty,
                f.params.s0_nm,
                s.parameters[1].uncertainty,
                s,
            )
        }
        Mode::FixedS0 => {
            let s0 = args.s0_nm.unwrap_or(geometry.slit_width_nm);
            let f = fit_c3_fixed_s0(points, geometry, s0)?;
            let s = f.summary;
            (f.params, s.parameters[0].uncertainty, s0, 0.0, s)
        }
    };
    let sys = beta_sensitivity(points, geometry, s0, deg_to_rad(args.delta_beta_deg))?;
    Ok(SpeciesFit {
        c3,
        c3_stat,
        s0,
        s0_unc,
        sys,
        summary,
    })
}

fn curves(points: &[SeffPoint], fit: &SpeciesFit, geometry: &GratingGeometry) -> anyhow::Result<(Table, Table)> {
    let mut data = Table::new(&["velocity_mps", "s_eff_nm", "s_eff_unc_nm"]);
    for p in points {
        data.push_numbers(&[p.velocity_mps, p.s_eff_nm, p.uncertainty_nm]);
    }
    let vmin = points.iter().map(|p| p.velocity_mps).fold(f64::INFINITY, f64::min);
    let vmax = points.iter().map(|p| p.velocity_mps).fold(0.0, f64::max);
    let (lo, hi) = (0.8 * vmin, 1.2 * vmax);
    let mut model = Table::new(&["velocity_mps", "s_eff_nm"]);
    model.comment(format!("C3 = {} meV nm^3, s0 = {} nm", fit.c3, fit.s0));
    for k in 0..=100 {
        let v = lo + (hi - lo) * k as f64 / 100.0;
        model.push_numbers(&[v, seff_model(fit.c3, fit.s0, geometry, v)?]);
    }
    Ok((data, model))
}

pub fn run(args: &C3Args) -> anyhow::Result<bool> {
    let (record, geometry) = args.geometry.resolve()?;
    let table = Table::parse(&read_input(&args.table)?).with_context(|| format!("parsing {}", args.table.display()))?;
    let mut warnings = Vec::new();
    let groups = read_points(&table, &mut warnings).with_context(|| format!("reading {}", args.table.display()))?;
    let label = groups
        .values()
        .flatten()
        .next()
        .map(|p| p.grating.clone())
        .unwrap_or_default();
    if !label.is_empty() && label != record.id {
        warnings.push(format!("table grating {label:?} differs from geometry {:?}", record.id));
    }

    let mut manifest = RunManifest::new("fit-c3", std::slice::from_ref(&args.table), &args.out.out);
    args.geometry.echo(&record, &mut manifest);
    manifest.param("mode", args.mode.as_str());
    manifest.param(
        "s0_nm",
        match args.mode {
            Mode::Joint => "fitted".to_string(),
            Mode::FixedS0 => args.s0_nm.unwrap_or(geometry.slit_width_nm).to_string(),
        },
    );
    manifest.param("delta_beta_deg", args.delta_beta_deg);

    let species: Vec<(&String, &Vec<SeffPoint>)> = groups.iter().collect();
    let fits = par_map(&species, |(name, points)| {
        fit_species(points, &geometry, args).with_context(|| format!("fitting C3 for {name}"))
    })?;

    let mut outputs = Outputs::default();
    let mut summary = Table::new(&C3_COLUMNS);
    summary.comment("c3_unc is the statistical and wedge-angle systematic errors in quadrature");
    let mut all_converged = true;
    for ((name, points), fit) in species.iter().zip(&fits) {
        let mut notes = warnings.clone();
        notes.extend(fit.summary.warnings.iter().cloned());
        for w in &notes {
            eprintln!("warning: {name}: {w}");
        }
        if !fit.summary.converged {
            eprintln!("warning: {name}: C3 fit did not converge");
        }
        all_converged &= fit.summary.converged;
        let sys = fit.sys.half_spread();
        let alpha = beam_preset(name)
            .ok()
            .and_then(|b| b.polarizability_a3)
            .unwrap_or(f64::NAN);

        let mut provenance = BTreeMap::new();
        provenance.insert("source".to_string(), args.table.display().to_string());
        provenance.insert("species".to_string(), name.to_string());
        provenance.insert("geometry".to_string(), record.id.clone());
        provenance.insert("s0_nm".to_string(), fit.s0.to_string());
        provenance.insert("beta.delta_deg".to_string(), args.delta_beta_deg.to_string());
        provenance.insert("beta.c3_minus".to_string(), fit.sys.c3_minus.to_string());
        provenance.insert("beta.c3_central".to_string(), fit.sys.c3_central.to_string());
        provenance.insert("beta.c3_plus".to_string(), fit.sys.c3_plus.to_string());
        provenance.insert("beta.c3_sys".to_string(), sys.to_string());
        let mut record_summary = fit.summary.clone();
        record_summary.warnings = notes;
        let fit_record = FitRecord {
            kind: format!("c3-{}", args.mode.as_str()),
            summary: record_summary,
            provenance,
        };
        outputs.add(format!("{name}.c3.results"), results_to_string(&fit_record)?);
        let (data, model) = curves(points, fit, &geometry)?;
        outputs.add(format!("{name}.seff_data.dat"), data.render());
        outputs.add(format!("{name}.seff_model.dat"), model.render());

        summary.push(vec![
            name.to_string(),
            if label.is_empty() {
                record.id.clone()
            } else {
                label.clone()
            },
            args.mode.as_str().into(),
            fit.c3.to_string(),
            fit.c3_stat.to_string(),
            sys.to_string(),
            fit.c3_stat.hypot(sys).to_string(),
            fit.s0.to_string(),
            fit.s0_unc.to_string(),
            alpha.to_string(),
            points.len().to_string(),
            fit.summary.rss.to_string(),
            fit.summary.converged.to_string(),
        ]);
    }
    outputs.add("c3.tsv", summary.render());
    outputs.commit(manifest)?;
    Ok(all_converged)
}
