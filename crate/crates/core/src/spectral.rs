//! Symmetric eigendecomposition and spectrum-only statistics.

use std::f64::consts::PI;
use std::ops::Range;

use faer::{Mat, MatRef, Side};
use serde::{Deserialize, Serialize};

use crate::models::SymmetricMatrix;
use crate::{Error, Result};

/// Spacings below this fraction of the spectral range are treated as exact
/// degeneracies and left out of the logarithmic average.
pub const DEGENERACY_FLOOR: f64 = 1e-12;

/// Ascending eigenvalues and the matching orthonormal eigenvectors (column
/// `nu` of `vectors` is `|nu>`).
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub energies: Vec<f64>,
    pub vectors: Mat<f64>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn vectors(&self) -> MatRef<'_, f64> {
        self.vectors.as_ref()
    }
}

fn check_input(h: &SymmetricMatrix) -> Result<()> {
    if h.dim() == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    if !h.is_finite() {
        return Err(Error::NonFinite("Hamiltonian entries"));
    }
    Ok(())
}

/// Full eigendecomposition. Runs single-threaded; parallelism belongs to the
/// caller, one realization per worker.
pub fn eigendecompose(h: &SymmetricMatrix) -> Result<Spectrum> {
    check_input(h)?;
    let evd = h
        .to_faer()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::NoConvergence { dim: h.dim() })?;
    let energies: Vec<f64> = evd.S().column_vector().iter().copied().collect();
    Ok(Spectrum {
        energies,
        vectors: evd.U().to_owned(),
    })
}

/// Eigenvalues only, ascending.
pub fn eigenvalues(h: &SymmetricMatrix) -> Result<Vec<f64>> {
    check_input(h)?;
    h.to_faer()
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::NoConvergence { dim: h.dim() })
}

/// Nearest-neighbour spacings `E_{nu+1} - E_nu` of an ascending spectrum.
pub fn level_spacings(energies: &[f64]) -> Vec<f64> {
    energies.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Absolute degeneracy floor for one spectrum: [`DEGENERACY_FLOOR`] times its
/// range.
pub fn degeneracy_floor(energies: &[f64]) -> f64 {
    match (energies.first(), energies.last()) {
        (Some(lo), Some(hi)) => DEGENERACY_FLOOR * (hi - lo),
        _ => 0.0,
    }
}

/// How the logarithmic spacing average combines realizations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogAverage {
    /// One mean of `ln dE` over all spacings of all realizations.
    #[default]
    Pooled,
    /// Mean within each realization, then mean over realizations.
    PerRealization,
}

/// Sufficient statistics of `ln dE` for one realization; pooling these in
/// realization order reproduces the pooled average exactly.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LogSpacingSum {
    pub sum_ln: f64,
    pub count: usize,
    pub discarded: usize,
}

impl LogSpacingSum {
    pub fn from_spacings(spacings: &[f64], floor: f64) -> Self {
        let mut out = LogSpacingSum::default();
        for &s in spacings {
            if s < floor || s <= 0.0 {
                out.discarded += 1;
            } else {
                out.sum_ln += s.ln();
                out.count += 1;
            }
        }
        out
    }

    /// Spacings of an ascending spectrum with its own relative floor.
    pub fn from_energies(energies: &[f64]) -> Self {
        Self::from_spacings(&level_spacings(energies), degeneracy_floor(energies))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacingStats {
    /// Typical spacing `exp <ln dE>`.
    pub delta_typ: f64,
    /// `2 pi / delta_typ` (units of 1/J, hbar = 1).
    pub t_h_typ: f64,
    pub n_retained: usize,
    pub n_discarded: usize,
}

/// Combines per-realization log sums into the typical Heisenberg time.
pub fn combine_log_sums(sums: &[LogSpacingSum], mode: LogAverage, floor: f64) -> Result<SpacingStats> {
    let n_retained: usize = sums.iter().map(|s| s.count).sum();
    let n_discarded: usize = sums.iter().map(|s| s.discarded).sum();
    if n_retained == 0 {
        return Err(Error::DegenerateSpectrum { floor });
    }
    let mean_ln = match mode {
        LogAverage::Pooled => sums.iter().map(|s| s.sum_ln).sum::<f64>() / n_retained as f64,
        LogAverage::PerRealization => {
            let used: Vec<f64> = sums
                .iter()
                .filter(|s| s.count > 0)
                .map(|s| s.sum_ln / s.count as f64)
                .collect();
            used.iter().sum::<f64>() / used.len() as f64
        }
    };
    let delta_typ = mean_ln.exp();
    Ok(SpacingStats {
        delta_typ,
        t_h_typ: 2.0 * PI / delta_typ,
        n_retained,
        n_discarded,
    })
}

/// Typical Heisenberg time from per-realization spacing sets, pooled over the
/// whole ensemble. Spacings below `floor` are dropped and counted.
pub fn typical_heisenberg_time(spacing_sets: &[Vec<f64>], floor: f64) -> Result<SpacingStats> {
    typical_heisenberg_time_with(spacing_sets, floor, LogAverage::Pooled)
}

pub fn typical_heisenberg_time_with(
    spacing_sets: &[Vec<f64>],
    floor: f64,
    mode: LogAverage,
) -> Result<SpacingStats> {
    let sums: Vec<LogSpacingSum> = spacing_sets
        .iter()
        .map(|s| LogSpacingSum::from_spacings(s, floor))
        .collect();
    combine_log_sums(&sums, mode, floor)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRatios {
    pub ratios: Vec<f64>,
    /// Pairs where both spacings vanish.
    pub n_dropped: usize,
}

/// Ratios `min(d_nu, d_{nu+1}) / max(d_nu, d_{nu+1})` for consecutive spacing
/// pairs among the levels selected by `window`.
pub fn gap_ratios(energies: &[f64], window: Range<usize>) -> Result<GapRatios> {
    if window.end > energies.len() || window.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "gap-ratio window {window:?} must select >= 3 of {} levels",
            energies.len()
        )));
    }
    let spacings = level_spacings(&energies[window]);
    let mut out = GapRatios {
        ratios: Vec::with_capacity(spacings.len() - 1),
        n_dropped: 0,
    };
    for pair in spacings.windows(2) {
        let (lo, hi) = if pair[0] <= pair[1] {
            (pair[0], pair[1])
        } else {
            (pair[1], pair[0])
        };
        if hi > 0.0 {
            out.ratios.push(lo / hi);
        } else {
            out.n_dropped += 1;
        }
    }
    Ok(out)
}

/// Mean of each realization's ratios, then mean over realizations.
pub fn mean_gap_ratio(ensemble: &[Vec<f64>]) -> Result<f64> {
    let means: Vec<f64> = ensemble
        .iter()
        .filter(|r| !r.is_empty())
        .map(|r| r.iter().sum::<f64>() / r.len() as f64)
        .collect();
    if means.is_empty() {
        return Err(Error::InsufficientData("no gap ratios".into()));
    }
    Ok(means.iter().sum::<f64>() / means.len() as f64)
}

/// Which levels enter the gap-ratio average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MidSpectrum {
    /// Central fraction of all levels.
    Fraction(f64),
    /// A fixed number of levels around the middle (clipped to the spectrum).
    Count(usize),
}

impl Default for MidSpectrum {
    fn default() -> Self {
        MidSpectrum::Fraction(0.5)
    }
}

impl MidSpectrum {
    pub fn window(self, dim: usize) -> Range<usize> {
        let count = match self {
            MidSpectrum::Fraction(f) => ((dim as f64) * f.clamp(0.0, 1.0)).round() as usize,
            MidSpectrum::Count(c) => c,
        }
        .min(dim);
        let start = (dim - count) / 2;
        start..start + count
    }
}
