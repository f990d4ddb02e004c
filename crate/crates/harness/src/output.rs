//! Figure-ready files: one table per curve, scaling and gap-ratio tables, the
//! GOE reference curve and a manifest binding everything to its config.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use scalinv_core::dynamics::{goe_sff_reference, CurveEnsemble};
use serde::{Deserialize, Serialize};

use crate::config::{OutputFormat, SweepConfig, Task};
use crate::error::{HarnessError, HarnessResult};
use crate::run::{PointResult, ResultSet};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Software {
    pub name: String,
    pub version: String,
}

impl Default for Software {
    fn default() -> Self {
        Software {
            name: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub software: Software,
    pub config_hash: String,
    pub config: SweepConfig,
    /// How realization seeds follow from the master seed.
    pub seed_scheme: String,
    /// Basis order behind site-localized and plane-wave initial states.
    pub basis_ordering: String,
    pub results: ResultSet,
    pub files: Vec<String>,
}

const SEED_SCHEME: &str = "point seed = mix(mix(master_seed, L), bits(scan value)); \
realization seed = mix(point seed, index); ChaCha8 stream per realization";

const BASIS_ORDERING: &str = "quadratic models: site index (Anderson: x + L (y + L z)); \
avalanche: computational basis in lexicographic tensor-product order, dot spins leftmost and most significant, binary digit 0 = spin up; \
plane wave k = 0..D-1 uses phases exp(-2 pi i k m / D) over that index m";

pub fn read_manifest(path: &Path) -> HarnessResult<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn fmt_value(v: f64) -> String {
    let s = format!("{v}");
    s.replace('-', "m")
}

/// File stem for one point, e.g. `L500_lambda2`.
pub fn point_label(p: &PointResult) -> String {
    match (&p.parameter, p.value) {
        (Some(name), Some(v)) => format!("L{}_{}{}", p.size, name, fmt_value(v)),
        _ => format!("L{}", p.size),
    }
}

fn curve_tsv(curve: &CurveEnsemble, point: &PointResult) -> String {
    let mut s = String::new();
    let kind = serde_json::to_string(&curve.kind).unwrap_or_default();
    let _ = writeln!(s, "# kind: {}", kind.trim_matches('"'));
    let _ = writeln!(s, "# L: {}", point.size);
    if let (Some(name), Some(v)) = (&point.parameter, point.value) {
        let _ = writeln!(s, "# {name}: {v}");
    }
    let _ = writeln!(s, "# D: {}", curve.constants.dim);
    if let Some(p) = curve.constants.p_bar {
        let _ = writeln!(s, "# P_bar: {p}");
    }
    if let Some(p) = curve.constants.p_inf {
        let _ = writeln!(s, "# P_inf: {p}");
    }
    if let Some(t) = curve.constants.t_h_typ {
        let _ = writeln!(s, "# t_H_typ: {t}");
    }
    let _ = writeln!(s, "# realizations: {}", curve.n_realizations);
    let _ = writeln!(s, "# initial states: {}", curve.n_initial_states);
    let _ = writeln!(s, "# tau\tmean\tstd_err");
    for ((t, m), e) in curve.grid.values.iter().zip(&curve.mean).zip(&curve.std_err) {
        let _ = writeln!(s, "{t}\t{m}\t{e}");
    }
    s
}

fn goe_reference_tsv(config: &SweepConfig) -> HarnessResult<String> {
    let grid = config.grid.scaled_grid()?;
    let mut s = String::from("# kind: goe-sff-reference\n# tau\tK_GOE\n");
    for &tau in &grid.values {
        let _ = writeln!(s, "{tau}\t{}", goe_sff_reference(tau)?);
    }
    Ok(s)
}

fn scan_column(config: &SweepConfig) -> Option<&str> {
    config.scan.as_ref().map(|s| s.parameter.as_str())
}

fn scaling_tsv(config: &SweepConfig, results: &ResultSet) -> String {
    let mut s = String::from("# scaling of P_bar and t_H_typ with D\n# ");
    if let Some(name) = scan_column(config) {
        let _ = write!(s, "{name}\t");
    }
    s.push_str("L\tD\tP_bar\tP_bar_err\tt_H_typ\tdelta_typ\trealizations\n");
    for p in &results.points {
        if let Some(v) = p.value {
            let _ = write!(s, "{v}\t");
        }
        let (pb, pe) = p.p_bar.map_or((f64::NAN, f64::NAN), |e| (e.mean, e.std_err));
        let _ = writeln!(
            s,
            "{}\t{}\t{pb}\t{pe}\t{}\t{}\t{}",
            p.size, p.dim, p.t_h_typ, p.delta_typ, p.n_realizations
        );
    }
    s
}

fn rstat_tsv(config: &SweepConfig, results: &ResultSet) -> String {
    let mut s = String::from("# mean gap ratio\n# ");
    if let Some(name) = scan_column(config) {
        let _ = write!(s, "{name}\t");
    }
    s.push_str("L\tD\tr_bar\tr_bar_err\trealizations\n");
    for p in &results.points {
        let Some(r) = p.r_bar else { continue };
        if let Some(v) = p.value {
            let _ = write!(s, "{v}\t");
        }
        let _ = writeln!(s, "{}\t{}\t{}\t{}\t{}", p.size, p.dim, r.mean, r.std_err, p.n_realizations);
    }
    s
}

/// Writes all outputs into `dir`. Existing files are only replaced when
/// `overwrite` is set. Returns the written paths, manifest last.
pub fn emit_outputs(
    results: &ResultSet,
    config: &SweepConfig,
    dir: &Path,
    format: OutputFormat,
    overwrite: bool,
) -> HarnessResult<Vec<PathBuf>> {
    let mut files: Vec<(String, String)> = Vec::new();
    for p in &results.points {
        let label = point_label(p);
        let curves = [("survival", &p.survival), ("survival_raw", &p.survival_raw), ("sff", &p.sff)];
        for (stem, curve) in curves {
            let Some(c) = curve else { continue };
            match format {
                OutputFormat::Tsv => files.push((format!("{stem}_{label}.tsv"), curve_tsv(c, p))),
                OutputFormat::Json => files.push((format!("{stem}_{label}.json"), serde_json::to_string_pretty(c)?)),
            }
        }
    }
    if config.has(Task::Sff) {
        files.push(("goe_sff_reference.tsv".into(), goe_reference_tsv(config)?));
    }
    files.push(("scaling.tsv".into(), scaling_tsv(config, results)));
    if config.has(Task::Rstat) {
        files.push(("rstat.tsv".into(), rstat_tsv(config, results)));
    }

    fs::create_dir_all(dir).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?;
    let names: Vec<String> = files.iter().map(|(n, _)| n.clone()).collect();
    if !overwrite {
        for name in names.iter().map(String::as_str).chain([MANIFEST_FILE]) {
            let path = dir.join(name);
            if path.exists() {
                return Err(HarnessError::Io(format!(
                    "{} exists; pass --force to overwrite",
                    path.display()
                )));
            }
        }
    }
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        written.push(path);
    }
    let manifest = Manifest {
        software: Software::default(),
        config_hash: results.config_hash.clone(),
        config: config.clone(),
        seed_scheme: SEED_SCHEME.to_string(),
        basis_ordering: BASIS_ORDERING.to_string(),
        results: results.clone(),
        files: names,
    };
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, serde_json::to_string_pretty(&manifest)?)
        .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    written.push(path);
    Ok(written)
}

/// Numeric table with named columns, as written by [`emit_outputs`]. The
/// last `#` line before the data names the columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// Column `k` by position.
    pub fn nth(&self, k: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[k]).collect()
    }
}

pub fn read_table(path: &Path) -> HarnessResult<Table> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    parse_table(&text).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
}

pub fn parse_table(text: &str) -> Result<Table, String> {
    let mut columns = Vec::new();
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            if rows.is_empty() {
                columns = header.split_whitespace().map(str::to_string).collect();
            }
            continue;
        }
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|f| f.parse::<f64>().map_err(|e| format!("line {}: {e}", n + 1)))
            .collect::<Result<_, _>>()?;
        rows.push(row);
    }
    Ok(Table { columns, rows })
}
