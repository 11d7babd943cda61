//! Plain-text angular scans.
//!
//! ```text
//! # species: He
//! # nozzle_temperature_K: 300
//! # grating: I
//! # velocity_mps: 1765.2
//! # dv_over_v: 0.021
//! -0.500  12
//! -0.499  15
//! ```
//!
//! Header lines are `# key: value`; a `#` line without a colon is a comment.
//! Data rows carry the angle in mrad, the counts, and optionally the dwell
//! time in seconds. All rows must have the same number of columns.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufRead;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSample {
    pub angle_rad: f64,
    pub counts: f64,
    pub dwell_s: Option<f64>,
}

/// Scan header. Absent keys stay `None`; unrecognised keys go to `extra`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScanMetadata {
    pub species: Option<String>,
    pub nozzle_temperature_k: Option<f64>,
    pub grating: Option<String>,
    pub velocity_mps: Option<f64>,
    pub dv_over_v: Option<f64>,
    pub extra: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffractionScan {
    pub samples: Vec<ScanSample>,
    pub metadata: ScanMetadata,
}

impl DiffractionScan {
    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::Validation("scan has no samples".into()));
        }
        for (i, s) in self.samples.iter().enumerate() {
            if !s.angle_rad.is_finite() {
                return Err(Error::Validation(format!("sample {i}: angle is not finite")));
            }
            if !(s.counts >= 0.0 && s.counts.is_finite()) {
                return Err(Error::Validation(format!("sample {i}: counts must be finite and >= 0")));
            }
            if let Some(d) = s.dwell_s {
                if !(d > 0.0 && d.is_finite()) {
                    return Err(Error::Validation(format!("sample {i}: dwell must be positive")));
                }
            }
        }
        if let Some(i) = self.samples.windows(2).position(|w| w[1].angle_rad <= w[0].angle_rad) {
            return Err(Error::Validation(format!(
                "angles must be strictly increasing (sample {} -> {})",
                i,
                i + 1
            )));
        }
        let with_dwell = self.samples.iter().filter(|s| s.dwell_s.is_some()).count();
        if with_dwell != 0 && with_dwell != self.samples.len() {
            return Err(Error::Validation("dwell column present on some rows only".into()));
        }
        Ok(())
    }
}

fn parse_number(token: &str, line: usize, what: &str) -> Result<f64> {
    token.parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("invalid {what} {token:?}"),
    })
}

fn set_metadata(meta: &mut ScanMetadata, key: &str, value: &str, line: usize) -> Result<()> {
    match key {
        "species" => meta.species = Some(value.to_string()),
        "grating" => meta.grating = Some(value.to_string()),
        "nozzle_temperature_K" => meta.nozzle_temperature_k = Some(parse_number(value, line, key)?),
        "velocity_mps" => meta.velocity_mps = Some(parse_number(value, line, key)?),
        "dv_over_v" => meta.dv_over_v = Some(parse_number(value, line, key)?),
        _ => {
            meta.extra.insert(key.to_string(), value.to_string());
        }
    }
    Ok(())
}

pub fn parse_scan_str(text: &str) -> Result<DiffractionScan> {
    parse_scan(text.as_bytes())
}

/// Reads and validates a scan. Line numbers in errors are 1-based.
pub fn parse_scan<R: BufRead>(reader: R) -> Result<DiffractionScan> {
    let mut metadata = ScanMetadata::default();
    let mut samples = Vec::new();
    let mut columns = None;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            if let Some((key, value)) = rest.split_once(':') {
                let key = key.trim();
                if !key.is_empty() && !key.contains(char::is_whitespace) {
                    set_metadata(&mut metadata, key, value.trim(), lineno)?;
                }
            }
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if !(2..=3).contains(&tokens.len()) {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 2 or 3 columns, found {}", tokens.len()),
            });
        }
        match columns {
            None => columns = Some(tokens.len()),
            Some(c) if c != tokens.len() => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected {c} columns like the first data row, found {}", tokens.len()),
                })
            }
            _ => {}
        }
        let angle_rad = parse_mrad(tokens[0], lineno)?;
        let counts = parse_number(tokens[1], lineno, "counts")?;
        let dwell_s = tokens.get(2).map(|t| parse_number(t, lineno, "dwell")).transpose()?;
        if !(counts >= 0.0) {
            return Err(Error::Parse {
                line: lineno,
                message: format!("negative counts {counts}"),
            });
        }
        samples.push(ScanSample {
            angle_rad,
            counts,
            dwell_s,
        });
    }
    let scan = DiffractionScan { samples, metadata };
    scan.validate()?;
    Ok(scan)
}

/// Reads a decimal mrad token as radians without an intermediate rounding:
/// the exponent is shifted textually, so the parse rounds only once.
fn parse_mrad(token: &str, line: usize) -> Result<f64> {
    let shifted = match token.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = token[pos + 1..].parse().map_err(|_| Error::Parse {
                line,
                message: format!("invalid angle {token:?}"),
            })?;
            format!("{}e{}", &token[..pos], exp - 3)
        }
        None => format!("{token}e-3"),
    };
    if token.starts_with(['+', '-', '.']) || token.starts_with(|c: char| c.is_ascii_digit()) {
        parse_number(&shifted, line, "angle").map_err(|_| Error::Parse {
            line,
            message: format!("invalid angle {token:?}"),
        })
    } else {
        Err(Error::Parse {
            line,
            message: format!("invalid angle {token:?}"),
        })
    }
}

/// Shortest round-trip decimal of `angle_rad`, with the point moved three
/// places right.
fn format_mrad(angle_rad: f64) -> String {
    let text = format!("{angle_rad}");
    let (sign, digits) = match text.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", text.as_str()),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    let mut frac = frac.to_string();
    while frac.len() < 3 {
        frac.push('0');
    }
    let int = format!("{int}{}", &frac[..3]);
    let frac = frac[3..].trim_end_matches('0');
    let int = int.trim_start_matches('0');
    let int = if int.is_empty() { "0" } else { int };
    if frac.is_empty() {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

pub fn serialize_scan(scan: &DiffractionScan) -> String {
    let mut out = String::new();
    let m = &scan.metadata;
    if let Some(s) = &m.species {
        let _ = writeln!(out, "# species: {s}");
    }
    if let Some(t) = m.nozzle_temperature_k {
        let _ = writeln!(out, "# nozzle_temperature_K: {t}");
    }
    if let Some(g) = &m.grating {
        let _ = writeln!(out, "# grating: {g}");
    }
    if let Some(v) = m.velocity_mps {
        let _ = writeln!(out, "# velocity_mps: {v}");
    }
    if let Some(r) = m.dv_over_v {
        let _ = writeln!(out, "# dv_over_v: {r}");
    }
    for (k, v) in &m.extra {
        let _ = writeln!(out, "# {k}: {v}");
    }
    for s in &scan.samples {
        let _ = match s.dwell_s {
            Some(d) => writeln!(out, "{} {} {}", format_mrad(s.angle_rad), s.counts, d),
            None => writeln!(out, "{} {}", format_mrad(s.angle_rad), s.counts),
        };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_line_file() {
        let scan = parse_scan_str("0.0 10\n0.1 12\n").unwrap();
        assert_eq!(scan.samples.len(), 2);
        assert_eq!(scan.samples[1].angle_rad, 1e-4);
        assert_eq!(scan.metadata, ScanMetadata::default());
    }

    #[test]
    fn header_is_read() {
        let text = "# species: Kr\n# nozzle_temperature_K: 300\n# comment line\n# operator: ab\n0 1 0.5\n1 2 0.5\n";
        let scan = parse_scan_str(text).unwrap();
        assert_eq!(scan.metadata.species.as_deref(), Some("Kr"));
        assert_eq!(scan.metadata.nozzle_temperature_k, Some(300.0));
        assert_eq!(scan.metadata.extra.get("operator").map(String::as_str), Some("ab"));
        assert_eq!(scan.samples[0].dwell_s, Some(0.5));
    }

    #[test]
    fn descending_angles_rejected() {
        assert!(matches!(parse_scan_str("0.2 1\n0.1 1\n"), Err(Error::Validation(_))));
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse_scan_str("# species: He\n0.0 1\n0.1 x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse_scan_str("0.0 1\n0.1 2 3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match parse_scan_str("0.0 -1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_input_rejected() {
        assert!(parse_scan_str("# species: He\n").is_err());
    }

    #[test]
    fn round_trip_is_exact() {
        let text = "# species: He\n# velocity_mps: 1765.19\n# dv_over_v: 0.021\n# run: 7\n-0.3 4\n0.0007 5.5\n0.123456789 1e6\n";
        let a = parse_scan_str(text).unwrap();
        let b = parse_scan_str(&serialize_scan(&a)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mrad_text_shift() {
        assert_eq!(format_mrad(1.5e-3), "1.5");
        assert_eq!(format_mrad(-2.5e-7), "-0.00025");
        assert_eq!(format_mrad(0.0), "0");
        assert_eq!(format_mrad(12.0), "12000");
        assert_eq!(parse_mrad("1.5", 1).unwrap(), 1.5e-3);
        assert_eq!(parse_mrad("25E-2", 1).unwrap(), 2.5e-4);
        assert!(parse_mrad("nan", 1).is_err());
        assert!(parse_mrad("1e", 1).is_err());
    }

    #[test]
    fn arbitrary_radian_grid_round_trips() {
        let samples: Vec<_> = (0..2000)
            .map(|i| ScanSample {
                angle_rad: -1.3e-3 + i as f64 * 1.7e-6,
                counts: i as f64,
                dwell_s: None,
            })
            .collect();
        let scan = DiffractionScan {
            samples,
            metadata: ScanMetadata::default(),
        };
        let back = parse_scan_str(&serialize_scan(&scan)).unwrap();
        let misses = scan
            .samples
            .iter()
            .zip(&back.samples)
            .filter(|(a, b)| a.angle_rad != b.angle_rad)
            .count();
        assert_eq!(misses, 0);
    }
}
