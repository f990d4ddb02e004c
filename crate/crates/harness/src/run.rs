//! Realization farming, index-ordered reduction, checkpointing and the
//! per-series fits.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use scalinv_core::analysis::{
    beta_prediction, fit_fractal_dimension, fit_heisenberg_exponent, fit_power_law, minimize_collapse,
    propose_power_law_window, CollapsePoint, CollapseResult, CollapseSearch, FitResult, PinfMode,
};
use scalinv_core::dynamics::{
    raw_sff_with_time, scaled_survival, survival_probability, CurveAccumulator, CurveConstants, CurveEnsemble,
    CurveKind,
};
use scalinv_core::models::{realization_seed, ModelConfig};
use scalinv_core::quench::{mean_ipr, overlaps, InitialFamily};
use scalinv_core::spectral::{
    combine_log_sums, eigendecompose, eigenvalues, gap_ratios, LogSpacingSum, MidSpectrum, Spectrum,
    DEGENERACY_FLOOR,
};
use serde::{Deserialize, Serialize};

use crate::config::{SweepConfig, Task};
use crate::error::{HarnessError, HarnessResult};

/// Fraction of failed realizations above which a point is invalid.
const MAX_FAILURE_FRACTION: f64 = 0.01;

pub const CHECKPOINT_FILE: &str = "checkpoint.json";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
}

impl Estimate {
    fn from_accumulator(acc: &CurveAccumulator) -> Option<Self> {
        (acc.count > 0).then(|| Estimate {
            mean: acc.mean[0],
            std_err: acc.std_err()[0],
        })
    }
}

/// Aggregated statistics of one `(size, scan value)` point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameter: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub dim: usize,
    pub seed: u64,
    pub n_requested: usize,
    pub n_realizations: usize,
    pub n_failed: usize,
    pub valid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_bar: Option<Estimate>,
    pub t_h_typ: f64,
    pub delta_typ: f64,
    pub n_spacings_discarded: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_bar: Option<Estimate>,
    /// Raw `P` at `tau * t_H^typ`, indexed by `tau`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub survival_raw: Option<CurveEnsemble>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub survival: Option<CurveEnsemble>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sff: Option<CurveEnsemble>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_fit: Option<FitResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Fits across sizes at one scan value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesFits {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub p_inf_used: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fractal_fixed: Option<FitResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fractal_free: Option<FitResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heisenberg: Option<FitResult>,
    /// `gamma / n` with `gamma` from the configured asymptote mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_prediction: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSet {
    pub config_hash: String,
    /// False while realizations are missing.
    pub complete: bool,
    pub points: Vec<PointResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<SeriesFits>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collapse: Option<CollapseResult>,
    /// Wall time per completed point, seconds. Not part of the payload.
    #[serde(default)]
    pub wall_seconds: Vec<f64>,
}

impl ResultSet {
    /// Canonical bytes of everything except timing; equal for equal inputs.
    pub fn payload_bytes(&self) -> Vec<u8> {
        let mut copy = self.clone();
        copy.wall_seconds.clear();
        serde_json::to_vec(&copy).expect("result set serializes")
    }

    pub fn point(&self, size: usize, value: Option<f64>) -> Option<&PointResult> {
        self.points.iter().find(|p| p.size == size && p.value == value)
    }
}

/// Running aggregates of the point being farmed. Spectra of all
/// realizations come first (phase one), fixing the ensemble Heisenberg time;
/// states are then evolved at `tau * t_H` (phase two).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointState {
    pub size: usize,
    pub value: Option<f64>,
    pub dim: usize,
    pub seed: u64,
    pub n_requested: usize,
    pub next_spectrum: usize,
    pub next_state: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_h_typ: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub survival: Option<CurveAccumulator>,
    pub ipr: CurveAccumulator,
    pub r_mean: CurveAccumulator,
    pub log_sums: Vec<LogSpacingSum>,
    /// Spectra kept for the form factor, in realization order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub energies: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<(usize, String)>,
}

impl PointState {
    fn failed(&self, index: usize) -> bool {
        self.failures.iter().any(|(i, _)| *i == index)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config_hash: String,
    pub config: SweepConfig,
    pub completed: Vec<PointResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub current: Option<PointState>,
    #[serde(default)]
    pub wall_seconds: Vec<f64>,
}

impl Checkpoint {
    pub fn load(dir: &Path) -> HarnessResult<Self> {
        let path = dir.join(CHECKPOINT_FILE);
        let text = fs::read_to_string(&path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Write-then-rename, so a crash never leaves a torn checkpoint.
    pub fn save(&self, dir: &Path) -> HarnessResult<()> {
        fs::create_dir_all(dir)?;
        let tmp = dir.join(format!("{CHECKPOINT_FILE}.tmp"));
        fs::write(&tmp, serde_json::to_vec(self)?)?;
        fs::rename(&tmp, dir.join(CHECKPOINT_FILE))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub checkpoint_dir: Option<PathBuf>,
    /// Stop, leaving an incomplete result, after this many realization jobs
    /// in this call. Spectrum and state passes count separately.
    pub stop_after: Option<usize>,
}

pub fn run_sweep(config: &SweepConfig) -> HarnessResult<ResultSet> {
    run_sweep_with(config, &RunOptions::default())
}

pub fn run_sweep_with(config: &SweepConfig, opts: &RunOptions) -> HarnessResult<ResultSet> {
    config.validate()?;
    let ckpt = Checkpoint {
        config_hash: config.hash(),
        config: config.clone(),
        completed: Vec::new(),
        current: None,
        wall_seconds: Vec::new(),
    };
    drive(config, ckpt, opts)
}

/// Continues from `opts.checkpoint_dir`. The checkpoint must have been
/// written for a configuration with the same hash as `config`.
pub fn resume_sweep(config: &SweepConfig, opts: &RunOptions) -> HarnessResult<ResultSet> {
    config.validate()?;
    let dir = opts
        .checkpoint_dir
        .as_deref()
        .ok_or_else(|| HarnessError::Config("resume needs a checkpoint directory".into()))?;
    let ckpt = Checkpoint::load(dir)?;
    if ckpt.config_hash != config.hash() {
        return Err(HarnessError::Config(format!(
            "checkpoint was written for config {} but this config hashes to {}",
            ckpt.config_hash,
            config.hash()
        )));
    }
    drive(config, ckpt, opts)
}

/// Scan-major list of `(size, value)` points.
pub fn sweep_points(config: &SweepConfig) -> Vec<(usize, Option<f64>)> {
    config
        .scan_values()
        .into_iter()
        .flat_map(|v| config.sizes.iter().map(move |&l| (l, v)))
        .collect()
}

fn point_seed(master: u64, size: usize, value: Option<f64>) -> u64 {
    realization_seed(realization_seed(master, size as u64), value.map_or(0, f64::to_bits))
}

fn needs_vectors(config: &SweepConfig) -> bool {
    config.has(Task::Survival) || config.has(Task::Ipr)
}

struct Plan<'a> {
    config: &'a SweepConfig,
    model: ModelConfig,
    seed: u64,
    rstat: Option<MidSpectrum>,
    times: Vec<f64>,
}

struct SpectrumSample {
    energies: Vec<f64>,
    r_mean: Option<f64>,
}

struct StateSample {
    survival: Option<Vec<f64>>,
    ipr: f64,
}

fn hamiltonian(plan: &Plan, index: usize) -> scalinv_core::Result<scalinv_core::models::SymmetricMatrix> {
    let realization = plan.model.sample(realization_seed(plan.seed, index as u64))?;
    plan.model.hamiltonian(&realization)
}

fn simulate_spectrum(plan: &Plan, index: usize) -> scalinv_core::Result<SpectrumSample> {
    spectrum_sample(plan, eigenvalues(&hamiltonian(plan, index)?)?)
}

fn spectrum_sample(plan: &Plan, energies: Vec<f64>) -> scalinv_core::Result<SpectrumSample> {
    let r_mean = match plan.rstat {
        Some(window) if energies.len() >= 3 => {
            let r = gap_ratios(&energies, window.window(energies.len()))?;
            (!r.ratios.is_empty()).then(|| r.ratios.iter().sum::<f64>() / r.ratios.len() as f64)
        }
        _ => None,
    };
    Ok(SpectrumSample { energies, r_mean })
}

fn simulate_states(plan: &Plan, index: usize) -> scalinv_core::Result<StateSample> {
    Ok(state_sample(plan, &eigendecompose(&hamiltonian(plan, index)?)?))
}

fn state_sample(plan: &Plan, spec: &Spectrum) -> StateSample {
    let w = overlaps(spec, plan.config.initial_states);
    let survival = plan
        .config
        .has(Task::Survival)
        .then(|| survival_probability(&spec.energies, &w, &plan.times));
    StateSample {
        survival,
        ipr: mean_ipr(&w),
    }
}

fn start_point(config: &SweepConfig, size: usize, value: Option<f64>) -> HarnessResult<PointState> {
    let model = config.point_model(size, value)?;
    let dim = model.dim()?;
    if config.has(Task::Survival) && dim < 2 {
        return Err(HarnessError::Config("time-domain tasks need D >= 2".into()));
    }
    let seed = point_seed(config.master_seed, size, value);
    Ok(PointState {
        size,
        value,
        dim,
        seed,
        n_requested: config.realizations_for(size),
        next_spectrum: 0,
        next_state: 0,
        t_h_typ: None,
        survival: None,
        ipr: CurveAccumulator::new(1),
        r_mean: CurveAccumulator::new(1),
        log_sums: Vec::new(),
        energies: Vec::new(),
        failures: Vec::new(),
    })
}

fn record_failure(state: &mut PointState, index: usize, e: scalinv_core::Error) {
    log::warn!("L = {}, realization {index}: {e}", state.size);
    state.failures.push((index, e.to_string()));
}

fn absorb_spectrum(config: &SweepConfig, state: &mut PointState, index: usize, s: scalinv_core::Result<SpectrumSample>) {
    match s {
        Ok(s) => {
            if let Some(r) = s.r_mean {
                state.r_mean.push(&[r]);
            }
            state.log_sums.push(LogSpacingSum::from_energies(&s.energies));
            if config.has(Task::Sff) {
                state.energies.push(s.energies);
            }
        }
        Err(e) => record_failure(state, index, e),
    }
}

fn absorb_states(state: &mut PointState, index: usize, s: scalinv_core::Result<StateSample>) {
    match s {
        Ok(s) => {
            if let Some(curve) = s.survival {
                state
                    .survival
                    .get_or_insert_with(|| CurveAccumulator::new(curve.len()))
                    .push(&curve);
            }
            state.ipr.push(&[s.ipr]);
        }
        Err(e) => record_failure(state, index, e),
    }
}

/// Ensemble Heisenberg time of the spectra gathered so far.
fn heisenberg_time(config: &SweepConfig, state: &PointState) -> HarnessResult<f64> {
    Ok(combine_log_sums(&state.log_sums, config.log_average, DEGENERACY_FLOOR)?.t_h_typ)
}

fn drive(config: &SweepConfig, mut ckpt: Checkpoint, opts: &RunOptions) -> HarnessResult<ResultSet> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let points = sweep_points(config);
    let scaled_grid = config.grid.scaled_grid()?;
    let mut budget = opts.stop_after.unwrap_or(usize::MAX);
    let save = |ckpt: &Checkpoint| -> HarnessResult<()> {
        match &opts.checkpoint_dir {
            Some(dir) => ckpt.save(dir),
            None => Ok(()),
        }
    };
    while ckpt.completed.len() < points.len() {
        let (size, value) = points[ckpt.completed.len()];
        let started = Instant::now();
        let mut state = match ckpt.current.take() {
            Some(s) => s,
            None => start_point(config, size, value)?,
        };
        let mut plan = Plan {
            config,
            model: config.point_model(state.size, state.value)?,
            seed: state.seed,
            rstat: config.has(Task::Rstat).then(|| config.rstat_window()),
            times: Vec::new(),
        };
        let n = state.n_requested;
        let evolve = needs_vectors(config);
        loop {
            let phase_one = state.next_spectrum < n;
            if !phase_one && (!evolve || state.next_state >= n) {
                break;
            }
            if budget == 0 {
                ckpt.current = Some(state);
                save(&ckpt)?;
                return Ok(partial(&ckpt));
            }
            let start = if phase_one { state.next_spectrum } else { state.next_state };
            let chunk = config.checkpoint_every.min(n - start).min(budget);
            if phase_one {
                let samples: Vec<_> = pool.install(|| {
                    (start..start + chunk)
                        .into_par_iter()
                        .map(|i| simulate_spectrum(&plan, i))
                        .collect()
                });
                for (offset, s) in samples.into_iter().enumerate() {
                    absorb_spectrum(config, &mut state, start + offset, s);
                }
                state.next_spectrum += chunk;
                if state.next_spectrum == n && !state.log_sums.is_empty() {
                    state.t_h_typ = Some(heisenberg_time(config, &state)?);
                }
            } else {
                let t_h = match state.t_h_typ {
                    Some(t) => t,
                    None => break,
                };
                if plan.times.is_empty() {
                    plan.times = scaled_grid.evaluation_times(t_h);
                }
                let todo: Vec<usize> = (start..start + chunk).filter(|&i| !state.failed(i)).collect();
                let samples: Vec<_> = pool.install(|| todo.par_iter().map(|&i| (i, simulate_states(&plan, i))).collect());
                for (i, s) in samples {
                    absorb_states(&mut state, i, s);
                }
                state.next_state += chunk;
            }
            budget -= chunk;
            ckpt.current = Some(state.clone());
            save(&ckpt)?;
            ckpt.current = None;
        }
        ckpt.completed.push(finish_point(config, &state)?);
        ckpt.wall_seconds.push(started.elapsed().as_secs_f64());
        save(&ckpt)?;
    }
    finalize(config, &ckpt)
}

fn partial(ckpt: &Checkpoint) -> ResultSet {
    ResultSet {
        config_hash: ckpt.config_hash.clone(),
        complete: false,
        points: ckpt.completed.clone(),
        series: Vec::new(),
        collapse: None,
        wall_seconds: ckpt.wall_seconds.clone(),
    }
}

fn finish_point(config: &SweepConfig, state: &PointState) -> HarnessResult<PointResult> {
    let n_ok = state.n_requested - state.failures.len();
    let n_failed = state.failures.len();
    let mut warnings = Vec::new();
    let valid = n_ok > 0 && (n_failed as f64) <= MAX_FAILURE_FRACTION * state.n_requested as f64;
    if !valid {
        warnings.push(format!("{n_failed} of {} realizations failed", state.n_requested));
    }
    if n_ok == 0 {
        return Err(HarnessError::Numerical(scalinv_core::Error::InsufficientData(format!(
            "every realization failed at L = {}",
            state.size
        ))));
    }
    let spacing = combine_log_sums(&state.log_sums, config.log_average, DEGENERACY_FLOOR)?;
    let t_h = spacing.t_h_typ;
    let scaled_grid = config.grid.scaled_grid()?;
    let survival_raw = state.survival.as_ref().map(|acc| CurveEnsemble {
        kind: CurveKind::SurvivalRaw,
        grid: scaled_grid.clone(),
        mean: acc.mean.clone(),
        std_err: acc.std_err(),
        n_realizations: acc.count,
        n_initial_states: initial_state_count(config.initial_states, state.dim),
        constants: CurveConstants {
            dim: state.dim,
            t_h_typ: Some(t_h),
            p_bar: Estimate::from_accumulator(&state.ipr).map(|e| e.mean),
            p_inf: None,
        },
    });
    let sff = if config.has(Task::Sff) {
        Some(raw_sff_with_time(&state.energies, &scaled_grid, config.sff_window, Some(t_h))?)
    } else {
        None
    };
    Ok(PointResult {
        size: state.size,
        parameter: config.scan.as_ref().map(|s| s.parameter.clone()),
        value: state.value,
        dim: state.dim,
        seed: state.seed,
        n_requested: state.n_requested,
        n_realizations: n_ok,
        n_failed,
        valid,
        p_bar: Estimate::from_accumulator(&state.ipr),
        t_h_typ: t_h,
        delta_typ: spacing.delta_typ,
        n_spacings_discarded: spacing.n_discarded,
        r_bar: Estimate::from_accumulator(&state.r_mean),
        survival_raw,
        survival: None,
        sff,
        power_fit: None,
        warnings,
    })
}

fn initial_state_count(family: InitialFamily, dim: usize) -> usize {
    match family {
        InitialFamily::InfiniteTemperature => 1,
        _ => dim,
    }
}

/// Series fits, scaled curves and the optional collapse, recomputed from the
/// completed points.
fn finalize(config: &SweepConfig, ckpt: &Checkpoint) -> HarnessResult<ResultSet> {
    let mut points = ckpt.completed.clone();
    let mut series = Vec::new();
    for value in config.scan_values() {
        let idx: Vec<usize> = (0..points.len()).filter(|&i| points[i].value == value).collect();
        let fits = series_fits(config, value, &idx.iter().map(|&i| &points[i]).collect::<Vec<_>>());
        for &i in &idx {
            scale_point(config, &mut points[i], fits.p_inf_used);
        }
        series.push(fits);
    }
    let collapse = match (&config.fits.collapse, config.has(Task::Rstat)) {
        (Some(spec), true) => {
            let data: Vec<CollapsePoint> = points
                .iter()
                .filter_map(|p| {
                    Some(CollapsePoint {
                        size: p.size as f64,
                        alpha: p.value?,
                        r: p.r_bar?.mean,
                    })
                })
                .collect();
            Some(minimize_collapse(&data, &CollapseSearch::new(spec.alpha_range, spec.mu_range))?)
        }
        _ => None,
    };
    Ok(ResultSet {
        config_hash: ckpt.config_hash.clone(),
        complete: true,
        points,
        series,
        collapse,
        wall_seconds: ckpt.wall_seconds.clone(),
    })
}

fn series_fits(config: &SweepConfig, value: Option<f64>, points: &[&PointResult]) -> SeriesFits {
    let mut warnings = Vec::new();
    let dims: Vec<f64> = points.iter().map(|p| p.dim as f64).collect();
    let p_bars: Option<Vec<f64>> = points.iter().map(|p| p.p_bar.map(|e| e.mean)).collect();
    let mut note = |what: &str, r: scalinv_core::Result<FitResult>| match r {
        Ok(f) => Some(f),
        Err(e) => {
            warnings.push(format!("{what}: {e}"));
            None
        }
    };
    let fixed_value = match config.fits.pinf {
        PinfMode::Fixed(v) => v,
        PinfMode::Free => 0.0,
    };
    let (fractal_fixed, fractal_free) = match (&p_bars, points.len() >= 2) {
        (Some(pb), true) if config.has(Task::Ipr) || config.has(Task::Survival) => (
            note("fixed-asymptote fit", fit_fractal_dimension(&dims, pb, PinfMode::Fixed(fixed_value))),
            if points.len() >= 3 {
                note("free-asymptote fit", fit_fractal_dimension(&dims, pb, PinfMode::Free))
            } else {
                None
            },
        ),
        _ => (None, None),
    };
    let heisenberg = if config.has(Task::Heisenberg) && points.len() >= 2 {
        let t_h: Vec<f64> = points.iter().map(|p| p.t_h_typ).collect();
        note("Heisenberg exponent", fit_heisenberg_exponent(&dims, &t_h))
    } else {
        None
    };
    let p_inf_used = match config.fits.pinf {
        PinfMode::Fixed(v) => v,
        PinfMode::Free => match &fractal_free {
            Some(f) => f.param("p_inf"),
            None => {
                warnings.push("free asymptote unavailable; scaling with P_inf = 0".into());
                0.0
            }
        },
    };
    let gamma_fit = match config.fits.pinf {
        PinfMode::Fixed(_) => fractal_fixed.as_ref(),
        PinfMode::Free => fractal_free.as_ref(),
    };
    let beta_prediction = match (gamma_fit, &heisenberg) {
        (Some(g), Some(h)) => beta_prediction(g.param("gamma"), h.param("n")).ok(),
        _ => None,
    };
    SeriesFits {
        value,
        p_inf_used,
        fractal_fixed,
        fractal_free,
        heisenberg,
        beta_prediction,
        warnings,
    }
}

fn scale_point(config: &SweepConfig, point: &mut PointResult, p_inf: f64) {
    let (Some(raw), Some(p_bar)) = (&point.survival_raw, point.p_bar) else {
        return;
    };
    let scaled = match scaled_survival(raw, p_bar.mean, p_inf, point.t_h_typ) {
        Ok(s) => s,
        Err(e) => {
            point.warnings.push(format!("scaled survival: {e}"));
            return;
        }
    };
    let window = config.fits.power_law_window.or_else(|| {
        let early: Vec<usize> = (0..scaled.grid.n_points()).filter(|&i| scaled.grid.values[i] < 1.0).collect();
        let x: Vec<f64> = early.iter().map(|&i| scaled.grid.values[i]).collect();
        let y: Vec<f64> = early.iter().map(|&i| scaled.mean[i]).collect();
        propose_power_law_window(&x, &y, 0.02, 5)
    });
    if let Some(w) = window {
        match fit_power_law(&scaled, w) {
            Ok(f) => point.power_fit = Some(f),
            Err(e) => point.warnings.push(format!("power-law fit: {e}")),
        }
    }
    point.survival = Some(scaled);
}
