//! Sweep configuration: what to simulate, how many realizations, which
//! quantities to extract and where to put them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use scalinv_core::analysis::PinfMode;
use scalinv_core::dynamics::{TimeGrid, TimeScale, DEFAULT_SFF_WINDOW};
use scalinv_core::models::{ModelConfig, ModelKind};
use scalinv_core::quench::InitialFamily;
use scalinv_core::spectral::{LogAverage, MidSpectrum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, HarnessResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Survival,
    Sff,
    Rstat,
    Ipr,
    Heisenberg,
}

impl Task {
    pub const ALL: [Task; 5] = [Task::Survival, Task::Sff, Task::Rstat, Task::Ipr, Task::Heisenberg];
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Tsv,
    Json,
}

/// One scanned model parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scan {
    pub parameter: String,
    pub values: Vec<f64>,
}

/// Scaled-time grid `tau in [tau_min, tau_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_tau_min")]
    pub tau_min: f64,
    #[serde(default = "default_tau_max")]
    pub tau_max: f64,
    #[serde(default = "default_per_decade")]
    pub points_per_decade: usize,
}

fn default_tau_min() -> f64 {
    1e-4
}

fn default_tau_max() -> f64 {
    1e2
}

fn default_per_decade() -> usize {
    40
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            tau_min: default_tau_min(),
            tau_max: default_tau_max(),
            points_per_decade: default_per_decade(),
        }
    }
}

impl GridSpec {
    pub fn scaled_grid(&self) -> HarnessResult<TimeGrid> {
        Ok(TimeGrid::per_decade(
            self.tau_min,
            self.tau_max,
            self.points_per_decade,
            TimeScale::HeisenbergScaled,
        )?)
    }
}

/// Parameter window for the gap-ratio scaling collapse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseSpec {
    pub alpha_range: (f64, f64),
    pub mu_range: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSpec {
    /// `tau` window for the power-law fit of `p(tau)`; proposed from the
    /// data when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_law_window: Option<(f64, f64)>,
    /// Asymptote used for `P_bar(D)` fits and for scaling `p(tau)`.
    #[serde(default = "default_pinf")]
    pub pinf: PinfMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collapse: Option<CollapseSpec>,
}

fn default_pinf() -> PinfMode {
    PinfMode::Fixed(0.0)
}

impl Default for FitSpec {
    fn default() -> Self {
        FitSpec {
            power_law_window: None,
            pinf: default_pinf(),
            collapse: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: default_out_dir(),
            format: OutputFormat::default(),
        }
    }
}

/// Full description of a sweep. `sizes` and the optional `scan` span the
/// grid of points; every point is averaged over its own realizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub model: ModelConfig,
    pub sizes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<Scan>,
    #[serde(default = "default_realizations")]
    pub n_realizations: usize,
    /// Per-size realization counts, keyed by `L`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub realizations_per_size: BTreeMap<String, usize>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_tasks")]
    pub tasks: Vec<Task>,
    #[serde(default = "default_family")]
    pub initial_states: InitialFamily,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_sff_window")]
    pub sff_window: usize,
    /// Levels entering the gap ratio; model-dependent default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rstat_window: Option<MidSpectrum>,
    #[serde(default)]
    pub log_average: LogAverage,
    #[serde(default)]
    pub fits: FitSpec,
    #[serde(default = "default_budget")]
    pub memory_budget_mb: u64,
    /// Realizations between checkpoint writes.
    #[serde(default = "default_checkpoint_every")]
    pub checkpoint_every: usize,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_realizations() -> usize {
    500
}

fn default_tasks() -> Vec<Task> {
    Task::ALL.to_vec()
}

fn default_family() -> InitialFamily {
    InitialFamily::BasisLocalized
}

fn default_sff_window() -> usize {
    DEFAULT_SFF_WINDOW
}

fn default_budget() -> u64 {
    16384
}

fn default_checkpoint_every() -> usize {
    50
}

fn default_workers() -> usize {
    1
}

/// Everything that determines the numbers of a sweep, in canonical order.
#[derive(Serialize)]
struct HashedView<'a> {
    model: &'a ModelConfig,
    sizes: &'a [usize],
    scan: &'a Option<Scan>,
    n_realizations: usize,
    realizations_per_size: &'a BTreeMap<String, usize>,
    master_seed: u64,
    tasks: &'a [Task],
    initial_states: InitialFamily,
    grid: &'a GridSpec,
    sff_window: usize,
    rstat_window: Option<MidSpectrum>,
    log_average: LogAverage,
    fits: &'a FitSpec,
}

impl SweepConfig {
    pub fn new(model: ModelConfig, sizes: Vec<usize>) -> Self {
        SweepConfig {
            model,
            sizes,
            scan: None,
            n_realizations: default_realizations(),
            realizations_per_size: BTreeMap::new(),
            master_seed: 0,
            tasks: default_tasks(),
            initial_states: default_family(),
            grid: GridSpec::default(),
            sff_window: default_sff_window(),
            rstat_window: None,
            log_average: LogAverage::Pooled,
            fits: FitSpec::default(),
            memory_budget_mb: default_budget(),
            checkpoint_every: default_checkpoint_every(),
            workers: default_workers(),
            output: OutputSpec::default(),
        }
    }

    /// Reads TOML (`.toml`) or JSON (anything else).
    pub fn from_path(path: &Path) -> HarnessResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        let config: SweepConfig = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))?
        } else {
            serde_json::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn has(&self, task: Task) -> bool {
        self.tasks.contains(&task)
    }

    pub fn realizations_for(&self, size: usize) -> usize {
        self.realizations_per_size
            .get(&size.to_string())
            .copied()
            .unwrap_or(self.n_realizations)
    }

    pub fn rstat_window(&self) -> MidSpectrum {
        self.rstat_window.unwrap_or(match self.model.kind {
            ModelKind::Avalanche => MidSpectrum::Count(500),
            _ => MidSpectrum::Fraction(0.5),
        })
    }

    /// Scan values, or a single `None` when nothing is scanned.
    pub fn scan_values(&self) -> Vec<Option<f64>> {
        match &self.scan {
            Some(s) => s.values.iter().map(|&v| Some(v)).collect(),
            None => vec![None],
        }
    }

    /// Model for one `(size, scan value)` point.
    pub fn point_model(&self, size: usize, value: Option<f64>) -> HarnessResult<ModelConfig> {
        let base = self.model.with_size(size);
        Ok(match (&self.scan, value) {
            (Some(scan), Some(v)) => base.with_parameter(&scan.parameter, v)?,
            _ => base,
        })
    }

    /// Rough peak bytes for one worker at dimension `dim`: the Hamiltonian
    /// and a solver workspace, plus eigenvectors and the weight matrix when
    /// states are evolved.
    pub fn bytes_per_worker(&self, dim: usize) -> u64 {
        let matrices = if self.has(Task::Survival) || self.has(Task::Ipr) { 5 } else { 2 };
        matrices * (dim as u64).pow(2) * 8
    }

    pub fn validate(&self) -> HarnessResult<()> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.sizes.is_empty() {
            return bad("`sizes` must not be empty".into());
        }
        if self.n_realizations == 0 || self.realizations_per_size.values().any(|&n| n == 0) {
            return bad("realization counts must be >= 1".into());
        }
        for key in self.realizations_per_size.keys() {
            if key.parse::<usize>().map_or(true, |l| !self.sizes.contains(&l)) {
                return bad(format!("realizations_per_size key `{key}` is not a listed size"));
            }
        }
        if self.tasks.is_empty() {
            return bad("`tasks` must not be empty".into());
        }
        if let Some(scan) = &self.scan {
            if scan.values.is_empty() {
                return bad("scan values must not be empty".into());
            }
            if self.model.parameter(&scan.parameter).is_none() {
                return bad(format!(
                    "parameter `{}` does not exist on model {:?}",
                    scan.parameter, self.model.kind
                ));
            }
        }
        if self.sff_window % 2 == 0 {
            return bad("`sff_window` must be odd".into());
        }
        if self.workers == 0 || self.checkpoint_every == 0 {
            return bad("`workers` and `checkpoint_every` must be >= 1".into());
        }
        let g = &self.grid;
        if !(g.tau_min > 0.0 && g.tau_max > g.tau_min && g.points_per_decade > 0) {
            return bad("grid needs 0 < tau_min < tau_max and points_per_decade >= 1".into());
        }
        if let Some((lo, hi)) = self.fits.power_law_window {
            if !(lo > 0.0 && hi > lo) {
                return bad("power_law_window needs 0 < lo < hi".into());
            }
        }
        let budget = self.memory_budget_mb * 1024 * 1024;
        for &size in &self.sizes {
            for value in self.scan_values() {
                let model = self.point_model(size, value)?;
                let dim = model.dim()?;
                let need = self.bytes_per_worker(dim) * self.workers as u64;
                if need > budget {
                    return bad(format!(
                        "D = {dim} needs about {} MiB with {} workers; budget is {} MiB",
                        need >> 20,
                        self.workers,
                        self.memory_budget_mb
                    ));
                }
            }
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON of every field that affects results.
    /// Output location, worker count, memory budget and checkpoint spacing
    /// are excluded.
    pub fn hash(&self) -> String {
        let view = HashedView {
            model: &self.model,
            sizes: &self.sizes,
            scan: &self.scan,
            n_realizations: self.n_realizations,
            realizations_per_size: &self.realizations_per_size,
            master_seed: self.master_seed,
            tasks: &self.tasks,
            initial_states: self.initial_states,
            grid: &self.grid,
            sff_window: self.sff_window,
            rstat_window: self.rstat_window,
            log_average: self.log_average,
            fits: &self.fits,
        };
        let bytes = serde_json::to_vec(&view).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> SweepConfig {
        SweepConfig::new(ModelConfig::aubry_andre(8, 2.0), vec![8, 16])
    }

    #[test]
    fn toml_round_trip_with_defaults() {
        let text = r#"
            sizes = [250, 500]
            n_realizations = 10
            tasks = ["survival", "ipr"]
            [model]
            kind = "AubryAndre"
            L = 250
            lambda = 2.0
            [scan]
            parameter = "lambda"
            values = [1.0, 2.0]
            [fits]
            power_law_window = [3e-3, 3e-2]
            pinf = "free"
        "#;
        let c: SweepConfig = toml::from_str(text).unwrap();
        c.validate().unwrap();
        assert_eq!(c.grid, GridSpec::default());
        assert_eq!(c.fits.pinf, PinfMode::Free);
        assert_eq!(c.scan_values(), vec![Some(1.0), Some(2.0)]);
        let back: SweepConfig = toml::from_str(&toml::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn validation_errors() {
        let mut c = base();
        c.scan = Some(Scan { parameter: "W".into(), values: vec![1.0] });
        assert!(c.validate().is_err());
        let mut c = base();
        c.n_realizations = 0;
        assert!(c.validate().is_err());
        let mut c = base();
        c.realizations_per_size.insert("12".into(), 3);
        assert!(c.validate().is_err());
        let mut c = base();
        c.sizes = vec![40_000];
        c.memory_budget_mb = 1024;
        assert!(c.validate().is_err());
        base().validate().unwrap();
    }

    #[test]
    fn hash_ignores_plumbing_but_not_physics() {
        let a = base();
        let mut b = base();
        b.workers = 8;
        b.output.dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.master_seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn per_size_overrides() {
        let mut c = base();
        c.realizations_per_size.insert("16".into(), 15);
        assert_eq!(c.realizations_for(8), 500);
        assert_eq!(c.realizations_for(16), 15);
    }
}
