//! Time-domain curves: survival probability, its scaled form and the raw
//! spectral form factor.
//!
//! Both `P(t)` and `K_R(t)` reduce to phase sums over the spectrum. For a
//! block of times the phases `cos(E t)` and `sin(E t)` form `D x B` matrices
//! and the survival amplitudes of all initial states follow from two matrix
//! products with the weight matrix, so no `D x D` evolution operator is ever
//! formed.

use faer::linalg::matmul::matmul;
use faer::prelude::ReborrowMut;
use faer::{Accum, Mat, Par};
use serde::{Deserialize, Serialize};

use crate::quench::OverlapWeights;
use crate::spectral::{combine_log_sums, LogAverage, LogSpacingSum};
use crate::{Error, Result};

/// Times per phase block in [`survival_probability`].
const TIME_BLOCK: usize = 32;

/// Default running-average width for the spectral form factor, in grid points.
pub const DEFAULT_SFF_WINDOW: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeScale {
    /// Values are times in units of `1/J`.
    Absolute,
    /// Values are `tau = t / t_H^typ`.
    HeisenbergScaled,
}

/// Logarithmically spaced, strictly increasing time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub values: Vec<f64>,
    pub scale: TimeScale,
}

impl TimeGrid {
    pub fn n_points(&self) -> usize {
        self.values.len()
    }

    pub fn t_min(&self) -> f64 {
        self.values[0]
    }

    pub fn t_max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Grid with a fixed number of points per decade (endpoints included).
    pub fn per_decade(t_min: f64, t_max: f64, per_decade: usize, scale: TimeScale) -> Result<Self> {
        if per_decade == 0 {
            return Err(Error::InvalidInput("points per decade must be >= 1".into()));
        }
        let decades = (t_max / t_min).log10();
        let n = (decades * per_decade as f64).round() as usize + 1;
        make_time_grid(t_min, t_max, n.max(2), scale)
    }

    /// Physical evaluation times; `t_h_typ` is only read for scaled grids.
    pub fn evaluation_times(&self, t_h_typ: f64) -> Vec<f64> {
        match self.scale {
            TimeScale::Absolute => self.values.clone(),
            TimeScale::HeisenbergScaled => self.values.iter().map(|tau| tau * t_h_typ).collect(),
        }
    }
}

pub fn make_time_grid(t_min: f64, t_max: f64, n_points: usize, scale: TimeScale) -> Result<TimeGrid> {
    if !(t_min.is_finite() && t_max.is_finite()) || t_min <= 0.0 || t_max <= t_min {
        return Err(Error::InvalidInput(format!(
            "time grid needs 0 < t_min < t_max, got [{t_min}, {t_max}]"
        )));
    }
    if n_points < 2 {
        return Err(Error::InvalidInput("time grid needs >= 2 points".into()));
    }
    let (lo, hi) = (t_min.ln(), t_max.ln());
    let step = (hi - lo) / (n_points - 1) as f64;
    let mut values: Vec<f64> = (0..n_points).map(|i| (lo + step * i as f64).exp()).collect();
    values[0] = t_min;
    values[n_points - 1] = t_max;
    Ok(TimeGrid { values, scale })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    SurvivalRaw,
    SurvivalScaled,
    SffRaw,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CurveConstants {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_bar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_inf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_h_typ: Option<f64>,
}

/// Disorder-averaged time series with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveEnsemble {
    pub kind: CurveKind,
    pub grid: TimeGrid,
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
    pub n_realizations: usize,
    pub n_initial_states: usize,
    pub constants: CurveConstants,
}

/// Running mean and variance over realizations (Welford), fed in
/// realization order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveAccumulator {
    pub count: usize,
    pub mean: Vec<f64>,
    pub m2: Vec<f64>,
}

impl CurveAccumulator {
    pub fn new(len: usize) -> Self {
        CurveAccumulator {
            count: 0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    pub fn push(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.mean.len(), "curve length mismatch");
        self.count += 1;
        let n = self.count as f64;
        for ((mean, m2), &x) in self.mean.iter_mut().zip(&mut self.m2).zip(values) {
            let delta = x - *mean;
            *mean += delta / n;
            *m2 += delta * (x - *mean);
        }
    }

    /// Sample variance divided by the count, square-rooted. Zero for fewer
    /// than two samples.
    pub fn std_err(&self) -> Vec<f64> {
        if self.count < 2 {
            return vec![0.0; self.mean.len()];
        }
        let n = self.count as f64;
        self.m2.iter().map(|m2| (m2 / (n - 1.0) / n).sqrt()).collect()
    }
}

/// `P(t) = <|sum_nu w_{nu m} e^{-i E_nu t}|^2>_m` for one realization.
pub fn survival_probability(energies: &[f64], weights: &OverlapWeights, times: &[f64]) -> Vec<f64> {
    let d = energies.len();
    assert_eq!(weights.dim(), d, "weights do not match the spectrum");
    let m = weights.n_states();
    let wt = weights.w.transpose();
    let mut out = Vec::with_capacity(times.len());
    let mut re = Mat::<f64>::zeros(m, TIME_BLOCK);
    let mut im = Mat::<f64>::zeros(m, TIME_BLOCK);
    for block in times.chunks(TIME_BLOCK) {
        let b = block.len();
        let mut cos = Mat::<f64>::zeros(d, b);
        let mut sin = Mat::<f64>::zeros(d, b);
        for (j, &t) in block.iter().enumerate() {
            for (nu, &e) in energies.iter().enumerate() {
                let (s, c) = (e * t).sin_cos();
                cos[(nu, j)] = c;
                sin[(nu, j)] = s;
            }
        }
        let mut re = re.as_mut().submatrix_mut(0, 0, m, b);
        let mut im = im.as_mut().submatrix_mut(0, 0, m, b);
        matmul(re.rb_mut(), Accum::Replace, wt, cos.as_ref(), 1.0, Par::Seq);
        matmul(im.rb_mut(), Accum::Replace, wt, sin.as_ref(), 1.0, Par::Seq);
        for j in 0..b {
            let total: f64 = (0..m)
                .map(|k| re[(k, j)] * re[(k, j)] + im[(k, j)] * im[(k, j)])
                .sum();
            out.push(total / m as f64);
        }
    }
    out
}

/// `|sum_nu e^{-i E_nu t}|^2 / D` for one spectrum.
pub fn sff_single(energies: &[f64], times: &[f64]) -> Vec<f64> {
    let d = energies.len() as f64;
    times
        .iter()
        .map(|&t| {
            let (mut c, mut s) = (0.0, 0.0);
            for &e in energies {
                let (sn, cs) = (e * t).sin_cos();
                c += cs;
                s += sn;
            }
            (c * c + s * s) / d
        })
        .collect()
}

/// Centered running mean over `window` points; near the edges the window
/// shrinks symmetrically so the first and last points stay untouched.
pub fn running_average(values: &[f64], window: usize) -> Vec<f64> {
    let n = values.len();
    let half = window / 2;
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            let slice = &values[i - h..=i + h];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect()
}

/// Realization-averaged raw form factor followed by a centered running
/// average. A scaled grid is evaluated at `tau * t_H^typ`, with the typical
/// Heisenberg time pooled over the same ensemble.
pub fn raw_sff(energies_ensemble: &[Vec<f64>], grid: &TimeGrid, running_window: usize) -> Result<CurveEnsemble> {
    let first = energies_ensemble
        .first()
        .ok_or_else(|| Error::InsufficientData("raw SFF needs >= 1 realization".into()))?;
    let t_h = if first.len() > 1 {
        let sums: Vec<LogSpacingSum> = energies_ensemble
            .iter()
            .map(|e| LogSpacingSum::from_energies(e))
            .collect();
        Some(combine_log_sums(&sums, LogAverage::Pooled, 0.0)?.t_h_typ)
    } else {
        None
    };
    raw_sff_with_time(energies_ensemble, grid, running_window, t_h)
}

/// [`raw_sff`] with the Heisenberg time supplied by the caller; `t_h_typ`
/// may only be `None` on an absolute grid.
pub fn raw_sff_with_time(
    energies_ensemble: &[Vec<f64>],
    grid: &TimeGrid,
    running_window: usize,
    t_h_typ: Option<f64>,
) -> Result<CurveEnsemble> {
    let first = energies_ensemble
        .first()
        .ok_or_else(|| Error::InsufficientData("raw SFF needs >= 1 realization".into()))?;
    let dim = first.len();
    if running_window % 2 == 0 {
        return Err(Error::InvalidInput("running-average window must be odd".into()));
    }
    if grid.scale == TimeScale::HeisenbergScaled && t_h_typ.is_none() {
        return Err(Error::InvalidInput("a scaled grid needs D >= 2".into()));
    }
    let times = grid.evaluation_times(t_h_typ.unwrap_or(1.0));
    let mut acc = CurveAccumulator::new(times.len());
    for e in energies_ensemble {
        if e.len() != dim {
            return Err(Error::InvalidInput("realizations differ in dimension".into()));
        }
        acc.push(&sff_single(e, &times));
    }
    let std_err = acc.std_err();
    Ok(CurveEnsemble {
        kind: CurveKind::SffRaw,
        grid: grid.clone(),
        mean: running_average(&acc.mean, running_window),
        std_err: running_average(&std_err, running_window),
        n_realizations: energies_ensemble.len(),
        n_initial_states: 1,
        constants: CurveConstants {
            dim,
            t_h_typ,
            ..Default::default()
        },
    })
}

/// `p = (P - P_inf) / (P_bar - P_inf)` against `tau = t / t_H^typ`.
pub fn scaled_survival(raw: &CurveEnsemble, p_bar: f64, p_inf: f64, t_h_typ: f64) -> Result<CurveEnsemble> {
    if !(p_bar.is_finite() && p_inf.is_finite() && t_h_typ.is_finite()) || t_h_typ <= 0.0 {
        return Err(Error::InvalidInput("scaling constants must be finite, t_H > 0".into()));
    }
    if p_inf < 0.0 {
        return Err(Error::InvalidInput(format!("P_inf = {p_inf} must be >= 0")));
    }
    let denom = p_bar - p_inf;
    if denom < 1e-14 {
        return Err(Error::DegenerateDenominator(denom));
    }
    let values = match raw.grid.scale {
        TimeScale::Absolute => raw.grid.values.iter().map(|t| t / t_h_typ).collect(),
        TimeScale::HeisenbergScaled => raw.grid.values.clone(),
    };
    Ok(CurveEnsemble {
        kind: CurveKind::SurvivalScaled,
        grid: TimeGrid {
            values,
            scale: TimeScale::HeisenbergScaled,
        },
        mean: raw.mean.iter().map(|p| (p - p_inf) / denom).collect(),
        std_err: raw.std_err.iter().map(|s| s / denom).collect(),
        n_realizations: raw.n_realizations,
        n_initial_states: raw.n_initial_states,
        constants: CurveConstants {
            dim: raw.constants.dim,
            p_bar: Some(p_bar),
            p_inf: Some(p_inf),
            t_h_typ: Some(t_h_typ),
        },
    })
}

/// GOE form factor in units of the Heisenberg time:
/// `2 tau - tau ln(1 + 2 tau)` for `tau <= 1`,
/// `2 - tau ln((2 tau + 1) / (2 tau - 1))` beyond.
pub fn goe_sff_reference(tau: f64) -> Result<f64> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidInput(format!("GOE reference needs tau > 0, got {tau}")));
    }
    Ok(if tau <= 1.0 {
        2.0 * tau - tau * (2.0 * tau).ln_1p()
    } else {
        2.0 - tau * ((2.0 * tau + 1.0) / (2.0 * tau - 1.0)).ln()
    })
}

/// Mean of `values` over grid points with `t >= t_from`.
pub fn tail_average(times: &[f64], values: &[f64], t_from: f64) -> Option<f64> {
    let tail: Vec<f64> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= t_from)
        .map(|(_, v)| *v)
        .collect();
    (!tail.is_empty()).then(|| tail.iter().sum::<f64>() / tail.len() as f64)
}
