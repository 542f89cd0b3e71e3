//! Result bundles on disk.
//!
//! A bundle directory holds `meta.json` plus one text file per time and
//! observable: `density_t<time>.csv`, `gamma_t<time>.csv`, `g_t<time>.csv`
//! and, for clean lattices, `bessel_t<time>.csv`. Numbers are written with 17
//! significant digits so every double survives a round trip. Vector files
//! start with a `#` header line (gnuplot skips it); matrix files are bare
//! comma-separated rows.

use std::fmt::Write as _;
use std::fs::{self, File, OpenOptions};
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::analysis::{DensityMetrics, PairMetrics};
use crate::config::{RunConfig, Variant};
use crate::error::{Error, Result};

pub const LOCK_FILE: &str = ".anderson-pairs.lock";
pub const META_FILE: &str = "meta.json";

/// Tolerances applied by [`validate_bundle`].
pub const TOTAL_TOLERANCE: f64 = 1e-9;
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;
pub const FERMION_DIAGONAL_TOLERANCE: f64 = 1e-16;

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Time as it appears in file names: shortest round-trip decimal.
pub fn time_tag(t: f64) -> String {
    format!("t{t}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Experiment definition as run, after command-line overrides.
    pub config: RunConfig,
    pub realizations: usize,
    pub files: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub density_metrics: Vec<DensityMetrics>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pair_metrics: Vec<PairMetrics>,
}

/// Writes into a directory it holds a lock file on; the lock is removed on
/// drop.
#[derive(Debug)]
pub struct BundleWriter {
    dir: PathBuf,
    files: Vec<String>,
}

impl BundleWriter {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        match OpenOptions::new().write(true).create_new(true).open(dir.join(LOCK_FILE)) {
            Ok(mut f) => writeln!(f, "{}", std::process::id())?,
            Err(e) if e.kind() == ErrorKind::AlreadyExists => {
                return Err(Error::Resource(format!(
                    "{} is in use by another run (remove {LOCK_FILE} if it is stale)",
                    dir.display()
                )))
            }
            Err(e) => return Err(e.into()),
        }
        Ok(BundleWriter {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let mut f = File::create(self.dir.join(name))?;
        f.write_all(text.as_bytes())?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Two columns `label,value` under a `#` header.
    pub fn write_vector<L: std::fmt::Display>(
        &mut self,
        name: &str,
        header: &str,
        rows: impl IntoIterator<Item = (L, f64)>,
    ) -> Result<()> {
        let mut text = format!("# {header}\n");
        for (label, v) in rows {
            writeln!(text, "{label},{}", format_float(v)).expect("write to string");
        }
        self.write_text(name, &text)
    }

    pub fn write_matrix(&mut self, name: &str, m: &DMatrix<f64>) -> Result<()> {
        let mut text = String::with_capacity(m.len() * 24);
        for row in m.row_iter() {
            let cells: Vec<String> = row.iter().map(|&v| format_float(v)).collect();
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        self.write_text(name, &text)
    }

    /// Writes `meta.json`; the file list it records is everything written so
    /// far.
    pub fn finish(mut self, mut meta: Meta) -> Result<Vec<String>> {
        meta.files = self.files.clone();
        let text = serde_json::to_string_pretty(&meta)? + "\n";
        self.write_text(META_FILE, &text)?;
        Ok(std::mem::take(&mut self.files))
    }
}

impl Drop for BundleWriter {
    fn drop(&mut self) {
        let _ = fs::remove_file(self.dir.join(LOCK_FILE));
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
}

fn parse_float(cell: &str, path: &Path) -> Result<f64> {
    cell.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{}: cannot parse {cell:?} as a number", path.display())))
}

pub fn load_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path)?;
    let rows: Vec<Vec<f64>> = data_lines(&text)
        .map(|l| l.split(',').map(|c| parse_float(c, path)).collect())
        .collect::<Result<_>>()?;
    let n = rows.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: bad.len(),
        });
    }
    Ok(DMatrix::from_fn(n, n, |q, r| rows[q][r]))
}

/// Second column of a vector file.
pub fn load_vector(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    data_lines(&text)
        .map(|l| {
            let cell = l
                .split(',')
                .nth(1)
                .ok_or_else(|| Error::Config(format!("{}: expected two columns", path.display())))?;
            parse_float(cell, path)
        })
        .collect()
}

pub fn load_meta(dir: &Path) -> Result<Meta> {
    Ok(serde_json::from_str(&fs::read_to_string(dir.join(META_FILE))?)?)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub files_checked: usize,
    pub failures: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Re-load every data file named in `meta.json` and check the sum rules,
/// symmetry, non-negativity and, for fermions, the empty diagonal.
pub fn validate_bundle(dir: &Path) -> Result<ValidationReport> {
    let meta = load_meta(dir)?;
    let fermion = meta.config.input.variant == Variant::SeparableFermion;
    let particles = if meta.config.input.variant == Variant::SingleParticle { 1.0 } else { 2.0 };
    let mut report = ValidationReport::default();
    for name in &meta.files {
        let path = dir.join(name);
        if name.starts_with("gamma_") {
            let g = load_matrix(&path)?;
            let total = g.sum();
            if (total - 2.0).abs() > TOTAL_TOLERANCE {
                report.failures.push(format!("{name}: total {total} differs from 2"));
            }
            let asym = (&g - g.transpose()).amax();
            if asym > SYMMETRY_TOLERANCE {
                report.failures.push(format!("{name}: asymmetry {asym:e}"));
            }
            if g.min() < 0.0 {
                report.failures.push(format!("{name}: negative entry {}", g.min()));
            }
            if fermion && g.diagonal().amax() >= FERMION_DIAGONAL_TOLERANCE {
                report.failures.push(format!("{name}: fermion diagonal {:e}", g.diagonal().amax()));
            }
        } else if name.starts_with("density_") {
            let n = load_vector(&path)?;
            let total: f64 = n.iter().sum();
            if (total - particles).abs() > TOTAL_TOLERANCE {
                report.failures.push(format!("{name}: total {total} differs from {particles}"));
            }
            if n.iter().any(|&v| v < 0.0) {
                report.failures.push(format!("{name}: negative density"));
            }
        } else {
            continue;
        }
        report.files_checked += 1;
    }
    Ok(report)
}
