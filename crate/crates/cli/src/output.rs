use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use mrhydro_core::params::{LineConfig, LoadImpedance};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl Cell {
    fn render(&self, out: &mut String) {
        match self {
            // 9 significant digits; Rust float formatting ignores locale
            Cell::Num(v) => {
                let _ = write!(out, "{v:.8e}");
            }
            Cell::Text(t) => out.push_str(t),
            Cell::Empty => {}
        }
    }
}

/// One CSV artifact. `name` is the file name used when writing into a directory.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub notes: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self { name: name.into(), notes: Vec::new(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn note(mut self, line: impl Into<String>) -> Self {
        self.notes.push(line.into());
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, header: &RunHeader, manifest: Option<&str>) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# mrhydro {TOOL_VERSION}");
        let _ = writeln!(out, "# run_id: {}", header.run_id);
        let _ = writeln!(out, "# command: {}", header.command);
        let _ = writeln!(out, "# config: {}", header.config_digest);
        if let Some(m) = manifest {
            let _ = writeln!(out, "# manifest: {m}");
        }
        for n in &self.notes {
            let _ = writeln!(out, "# {n}");
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                c.render(&mut out);
            }
            out.push('\n');
        }
        out
    }
}

/// Identity of a run, shared by every artifact it writes.
#[derive(Debug, Clone, Serialize)]
pub struct RunHeader {
    pub run_id: String,
    /// Subcommand and flags with output and config paths removed.
    pub command: String,
    /// `sha256:<hex>` of the config file, or `defaults`.
    pub config_digest: String,
}

impl RunHeader {
    pub fn new(command: String, config_digest: String) -> Self {
        let run_id = sha256_hex(format!("{command}\n{config_digest}").as_bytes())[..16].to_string();
        Self { run_id, command, config_digest }
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    #[serde(flatten)]
    pub header: &'a RunHeader,
    pub tool_version: &'static str,
    pub timestamp_unix: u64,
    pub config_source: String,
    pub resolved: &'a LineConfig,
    pub load: &'a LoadImpedance,
    pub summary: &'a str,
    pub outputs: Vec<String>,
}

/// Everything a command produced, rendered only after it fully succeeded.
#[derive(Debug)]
pub struct Report {
    pub summary: String,
    pub tables: Vec<Table>,
}

pub struct Sink<'a> {
    pub header: &'a RunHeader,
    pub config: &'a LineConfig,
    pub config_source: &'a str,
    pub load: &'a LoadImpedance,
}

impl Sink<'_> {
    /// Writes a single-table report to `out`, or to stdout when `out` is absent.
    pub fn emit_file(&self, report: &Report, out: Option<&Path>) -> Result<(), CliError> {
        let [table] = report.tables.as_slice() else {
            unreachable!("single-file commands produce exactly one table")
        };
        match out {
            None => {
                eprintln!("{}", report.summary);
                print!("{}", table.render(self.header, None));
            }
            Some(path) => {
                let manifest_path = sidecar(path);
                let manifest_name = file_name(&manifest_path);
                write(path, &table.render(self.header, Some(&manifest_name)))?;
                self.write_manifest(&manifest_path, report, vec![file_name(path)])?;
                println!("{}", report.summary);
            }
        }
        Ok(())
    }

    /// Writes every table into `dir`, or the first table to stdout when `dir` is absent.
    pub fn emit_dir(&self, report: &Report, dir: Option<&Path>) -> Result<(), CliError> {
        match dir {
            None => {
                eprintln!("{}", report.summary);
                print!("{}", report.tables[0].render(self.header, None));
            }
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
                let manifest = "manifest.json";
                for t in &report.tables {
                    write(&dir.join(&t.name), &t.render(self.header, Some(manifest)))?;
                }
                let names = report.tables.iter().map(|t| t.name.clone()).collect();
                self.write_manifest(&dir.join(manifest), report, names)?;
                println!("{}", report.summary);
            }
        }
        Ok(())
    }

    fn write_manifest(&self, path: &Path, report: &Report, outputs: Vec<String>) -> Result<(), CliError> {
        let timestamp_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let m = RunManifest {
            header: self.header,
            tool_version: TOOL_VERSION,
            timestamp_unix,
            config_source: self.config_source.to_string(),
            resolved: self.config,
            load: self.load,
            summary: &report.summary,
            outputs,
        };
        let text = serde_json::to_string_pretty(&m).map_err(|e| CliError::Runtime(e.to_string()))?;
        write(path, &(text + "\n"))
    }
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_have_nine_significant_digits() {
        let mut s = String::new();
        Cell::Num(1.0 / 3.0).render(&mut s);
        assert_eq!(s, "3.33333333e-1");
        let mut s = String::new();
        Cell::Num(-250.0).render(&mut s);
        assert_eq!(s, "-2.50000000e2");
    }

    #[test]
    fn run_id_depends_on_command_and_config() {
        let a = RunHeader::new("bode --tf hf".into(), "defaults".into());
        let b = RunHeader::new("bode --tf hp".into(), "defaults".into());
        let c = RunHeader::new("bode --tf hf".into(), "sha256:00".into());
        assert_eq!(a.run_id, RunHeader::new("bode --tf hf".into(), "defaults".into()).run_id);
        assert_ne!(a.run_id, b.run_id);
        assert_ne!(a.run_id, c.run_id);
        assert_eq!(a.run_id.len(), 16);
    }

    #[test]
    fn table_layout() {
        let mut t = Table::new("x.csv", &["a", "b"]).note("units: N");
        t.push(vec![Cell::Num(1.0), Cell::Empty]);
        let h = RunHeader::new("cmd".into(), "defaults".into());
        let text = t.render(&h, Some("x.csv.manifest.json"));
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[..6].iter().all(|l| l.starts_with('#')));
        assert_eq!(lines[6], "a,b");
        assert_eq!(lines[7], "1.00000000e0,");
    }
}
