//! Output plumbing: whitespace tables, run manifests and atomic writes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context};
use vdw_core::Error;

pub const MANIFEST_SCHEMA: &str = "vdwgrating-manifest/1";

/// Whitespace-separated columns under a `# columns: a b c` header.
/// Other `#` lines are comments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub comments: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn comment(&mut self, line: impl Into<String>) {
        self.comments.push(line.into());
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(
            row.into_iter()
                .map(|cell| cell.replace(char::is_whitespace, "_"))
                .collect(),
        );
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.push(row.iter().map(|x| x.to_string()).collect());
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            let _ = writeln!(out, "# {c}");
        }
        let _ = writeln!(out, "# columns: {}", self.columns.join(" "));
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }

    pub fn parse(text: &str) -> vdw_core::Result<Self> {
        let mut table = Table::default();
        let mut header = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                match rest.strip_prefix("columns:") {
                    Some(cols) if !header => {
                        table.columns = cols.split_whitespace().map(String::from).collect();
                        header = true;
                    }
                    Some(_) => {
                        return Err(Error::Parse {
                            line: idx + 1,
                            message: "second `# columns:` header".into(),
                        })
                    }
                    None => table.comments.push(rest.to_string()),
                }
                continue;
            }
            if !header {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: "data before the `# columns:` header".into(),
                });
            }
            let row: Vec<String> = line.split_whitespace().map(String::from).collect();
            if row.len() != table.columns.len() {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected {} columns, found {}", table.columns.len(), row.len()),
                });
            }
            table.rows.push(row);
        }
        if !header {
            return Err(Error::Parse {
                line: 0,
                message: "missing `# columns:` header".into(),
            });
        }
        Ok(table)
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn require(&self, name: &str) -> vdw_core::Result<usize> {
        self.index(name).ok_or_else(|| Error::MissingField(name.to_string()))
    }

    /// Numeric cell; `row` is 0-based among data rows.
    pub fn number(&self, row: usize, col: usize) -> vdw_core::Result<f64> {
        let cell = &self.rows[row][col];
        cell.parse().map_err(|_| {
            Error::Validation(format!(
                "row {}, column {}: not a number: {cell:?}",
                row + 1,
                self.columns[col]
            ))
        })
    }
}

/// Echo of one invocation, written next to its outputs.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub subcommand: String,
    pub inputs: Vec<PathBuf>,
    /// Every parameter that influenced the run, defaulted or not.
    pub parameters: BTreeMap<String, String>,
    pub out_dir: PathBuf,
    pub seed: Option<String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, inputs: &[PathBuf], out_dir: &Path) -> Self {
        Self {
            subcommand: subcommand.into(),
            inputs: inputs.to_vec(),
            parameters: BTreeMap::new(),
            out_dir: out_dir.to_path_buf(),
            seed: None,
            outputs: Vec::new(),
        }
    }

    pub fn param(&mut self, key: impl Into<String>, value: impl ToString) {
        self.parameters.insert(key.into(), value.to_string().replace('\n', " "));
    }

    pub fn render(&self) -> String {
        let created = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let mut out = String::new();
        let _ = writeln!(out, "schema = {MANIFEST_SCHEMA}");
        let _ = writeln!(out, "subcommand = {}", self.subcommand);
        let _ = writeln!(out, "version = {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "created_unix_s = {created}");
        let _ = writeln!(out, "out_dir = {}", self.out_dir.display());
        let _ = writeln!(out, "seed = {}", self.seed.as_deref().unwrap_or("none"));
        for (i, p) in self.inputs.iter().enumerate() {
            let _ = writeln!(out, "input.{i} = {}", p.display());
        }
        for (k, v) in &self.parameters {
            let _ = writeln!(out, "param.{k} = {v}");
        }
        for (i, o) in self.outputs.iter().enumerate() {
            let _ = writeln!(out, "output.{i} = {o}");
        }
        out
    }
}

/// Files of one run, held in memory until every input has succeeded.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, String)>,
}

impl Outputs {
    pub fn add(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    /// Writes every file and then the manifest, each via a temporary file
    /// renamed into place.
    pub fn commit(self, mut manifest: RunManifest) -> anyhow::Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for (name, _) in &self.files {
            if !seen.insert(name.as_str()) {
                bail!(Error::Validation(format!("two inputs would both write {name}")));
            }
        }
        let dir = &manifest.out_dir;
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        for (name, contents) in &self.files {
            write_atomic(&dir.join(name), contents.as_bytes())?;
        }
        manifest.outputs = self.files.into_iter().map(|(name, _)| name).collect();
        let path = dir.join(format!("{}.manifest", manifest.subcommand));
        write_atomic(&path, manifest.render().as_bytes())
    }
}

pub fn write_atomic(path: &Path, contents: &[u8]) -> anyhow::Result<()> {
    let name = path
        .file_name()
        .with_context(|| format!("{} is not a file path", path.display()))?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        anyhow::Error::new(e).context(format!("renaming into {}", path.display()))
    })
}

/// File name without directory and extension, for naming derived outputs.
pub fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".into())
}

pub fn read_input(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_round_trip() {
        let mut t = Table::new(&["v", "name"]);
        t.comment("made by a test");
        t.push(vec!["1.5".into(), "He 3".into()]);
        let back = Table::parse(&t.render()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.rows[0][1], "He_3");
        assert_eq!(back.number(0, 0).unwrap(), 1.5);
    }

    #[test]
    fn table_errors() {
        assert!(Table::parse("1 2\n").is_err());
        assert!(Table::parse("# columns: a b\n1\n").is_err());
        assert!(Table::parse("# nothing\n").is_err());
    }

    #[test]
    fn atomic_write_leaves_no_temporaries() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.dat");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
