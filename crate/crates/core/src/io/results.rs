//! Fit results as versioned `key = value` text.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! save/load cycle reproduces every numeric field bit for bit, `NaN`
//! uncertainties included.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fitting::{FitParameter, FitSummary};

pub const RESULTS_SCHEMA: &str = "vdw-grating-results/1";

#[derive(Debug, Clone, PartialEq)]
pub struct FitRecord {
    /// What was fitted, e.g. `ratio`, `c3-joint`, `c3-fixed-s0`.
    pub kind: String,
    pub summary: FitSummary,
    /// Inputs, tolerances and versions, in key order.
    pub provenance: BTreeMap<String, String>,
}

fn check_text(field: &str, value: &str) -> Result<()> {
    if value.contains('\n') || value.contains('#') || value.trim() != value {
        return Err(Error::Validation(format!(
            "{field} {value:?} cannot be stored in a results file"
        )));
    }
    Ok(())
}

pub fn results_to_string(record: &FitRecord) -> Result<String> {
    let s = &record.summary;
    let mut out = String::new();
    let _ = writeln!(out, "schema = {RESULTS_SCHEMA}");
    check_text("kind", &record.kind)?;
    let _ = writeln!(out, "kind = {}", record.kind);
    let _ = writeln!(out, "converged = {}", s.converged);
    let _ = writeln!(out, "iterations = {}", s.iterations);
    let _ = writeln!(out, "data_points = {}", s.data_points);
    let _ = writeln!(out, "rss = {}", s.rss);
    let _ = writeln!(out, "gradient_cosine = {}", s.gradient_cosine);
    let _ = writeln!(out, "parameters = {}", s.parameters.len());
    for (i, p) in s.parameters.iter().enumerate() {
        check_text("parameter name", &p.name)?;
        check_text("unit", &p.unit)?;
        let _ = writeln!(out, "param.{i}.name = {}", p.name);
        let _ = writeln!(out, "param.{i}.unit = {}", p.unit);
        let _ = writeln!(out, "param.{i}.value = {}", p.value);
        let _ = writeln!(out, "param.{i}.uncertainty = {}", p.uncertainty);
        let _ = writeln!(out, "param.{i}.at_bound = {}", p.at_bound);
    }
    let _ = writeln!(out, "warnings = {}", s.warnings.len());
    for (i, w) in s.warnings.iter().enumerate() {
        check_text("warning", w)?;
        let _ = writeln!(out, "warning.{i} = {w}");
    }
    for (k, v) in &record.provenance {
        check_text("provenance key", k)?;
        check_text("provenance value", v)?;
        if k.contains('=') {
            return Err(Error::Validation(format!("provenance key {k:?} contains '='")));
        }
        let _ = writeln!(out, "provenance.{k} = {v}");
    }
    Ok(out)
}

struct Fields(BTreeMap<String, String>);

impl Fields {
    fn text(&self, key: &str) -> Result<&str> {
        self.0
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::MissingField(key.to_string()))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self.text(key)?;
        v.parse()
            .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
    }
}

pub fn results_from_str(text: &str) -> Result<FitRecord> {
    let mut map = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once(" = ").ok_or_else(|| Error::Parse {
            line: idx + 1,
            message: "expected `key = value`".into(),
        })?;
        map.insert(k.to_string(), v.to_string());
    }
    let f = Fields(map);
    let schema = f.text("schema")?;
    if schema != RESULTS_SCHEMA {
        return Err(Error::Config(format!("unsupported results schema {schema:?}")));
    }
    let n: usize = f.parse("parameters")?;
    let parameters = (0..n)
        .map(|i| {
            Ok(FitParameter {
                name: f.text(&format!("param.{i}.name"))?.to_string(),
                unit: f.text(&format!("param.{i}.unit"))?.to_string(),
                value: f.parse(&format!("param.{i}.value"))?,
                uncertainty: f.parse(&format!("param.{i}.uncertainty"))?,
                at_bound: f.parse(&format!("param.{i}.at_bound"))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let w: usize = f.parse("warnings")?;
    let warnings = (0..w)
        .map(|i| f.text(&format!("warning.{i}")).map(str::to_string))
        .collect::<Result<Vec<_>>>()?;
    let provenance =
        f.0.iter()
            .filter_map(|(k, v)| k.strip_prefix("provenance.").map(|k| (k.to_string(), v.clone())))
            .collect();
    Ok(FitRecord {
        kind: f.text("kind")?.to_string(),
        summary: FitSummary {
            parameters,
            rss: f.parse("rss")?,
            data_points: f.parse("data_points")?,
            iterations: f.parse("iterations")?,
            converged: f.parse("converged")?,
            gradient_cosine: f.parse("gradient_cosine")?,
            warnings,
        },
        provenance,
    })
}

pub fn save_results(record: &FitRecord, path: &Path) -> Result<()> {
    std::fs::write(path, results_to_string(record)?)?;
    Ok(())
}

pub fn load_results(path: &Path) -> Result<FitRecord> {
    results_from_str(&std::fs::read_to_string(path)?)
}
