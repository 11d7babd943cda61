//! `alpha-fit`: straight line through C3 against polarizability.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use vdw_core::fitting::{fit_c3_vs_alpha, AlphaPoint, FitParameter, FitSummary};
use vdw_core::io::{results_to_string, FitRecord};

use crate::common::OutArgs;
use crate::files::{read_input, Outputs, RunManifest, Table};

#[derive(Args, Debug)]
pub struct AlphaArgs {
    /// C3 table with alpha_A3, c3_meV_nm3 and optionally c3_unc_meV_nm3 and species columns
    pub table: PathBuf,
    #[command(flatten)]
    pub out: OutArgs,
}

fn read_points(table: &Table) -> anyhow::Result<Vec<AlphaPoint>> {
    let a = table.require("alpha_A3")?;
    let c = table.require("c3_meV_nm3")?;
    let u = table.index("c3_unc_meV_nm3");
    let s = table.index("species");
    (0..table.rows.len())
        .map(|row| {
            Ok(AlphaPoint {
                species: s
                    .map(|s| table.rows[row][s].clone())
                    .unwrap_or_else(|| format!("row{}", row + 1)),
                alpha_a3: table.number(row, a)?,
                c3_mev_nm3: table.number(row, c)?,
                uncertainty: match u {
                    Some(u) => table.number(row, u)?,
                    None => 0.0,
                },
            })
        })
        .collect()
}

pub fn run(args: &AlphaArgs) -> anyhow::Result<bool> {
    let context = || format!("reading {}", args.table.display());
    let table = Table::parse(&read_input(&args.table)?).with_context(context)?;
    let points = read_points(&table).with_context(context)?;
    let fit = fit_c3_vs_alpha(&points).with_context(|| format!("line fit of {}", args.table.display()))?;

    let weighted = points.iter().all(|p| p.uncertainty > 0.0);
    let mut manifest = RunManifest::new("alpha-fit", std::slice::from_ref(&args.table), &args.out.out);
    manifest.param("weighting", if weighted { "inverse-variance" } else { "uniform" });

    let parameter = |name: &str, unit: &str, value: f64, uncertainty: f64| FitParameter {
        name: name.into(),
        unit: unit.into(),
        value,
        uncertainty,
        at_bound: false,
    };
    let summary = FitSummary {
        parameters: vec![
            parameter("slope", "meV nm^3 / A^3", fit.slope, fit.slope_uncertainty),
            parameter("intercept", "meV nm^3", fit.intercept, fit.intercept_uncertainty),
        ],
        rss: fit.chi_square,
        data_points: points.len(),
        iterations: 0,
        converged: true,
        gradient_cosine: 0.0,
        warnings: Vec::new(),
    };
    let mut provenance = BTreeMap::new();
    provenance.insert("source".to_string(), args.table.display().to_string());
    let record = FitRecord {
        kind: "c3-vs-alpha".into(),
        summary,
        provenance,
    };

    let mut data = Table::new(&[
        "alpha_A3",
        "c3_meV_nm3",
        "c3_unc_meV_nm3",
        "residual_meV_nm3",
        "species",
    ]);
    for (p, r) in points.iter().zip(&fit.residuals) {
        data.push(vec![
            p.alpha_a3.to_string(),
            p.c3_mev_nm3.to_string(),
            p.uncertainty.to_string(),
            r.to_string(),
            p.species.clone(),
        ]);
    }
    let amax = points.iter().map(|p| p.alpha_a3).fold(0.0, f64::max);
    let mut line = Table::new(&["alpha_A3", "c3_meV_nm3"]);
    line.comment(format!("C3 = {} alpha + {}", fit.slope, fit.intercept));
    for k in 0..=50 {
        let x = 1.1 * amax * k as f64 / 50.0;
        line.push_numbers(&[x, fit.slope * x + fit.intercept]);
    }

    let mut outputs = Outputs::default();
    outputs.add("alpha_fit.results", results_to_string(&record)?);
    outputs.add("alpha_data.dat", data.render());
    outputs.add("alpha_fit_line.dat", line.render());
    outputs.commit(manifest)?;
    Ok(true)
}
