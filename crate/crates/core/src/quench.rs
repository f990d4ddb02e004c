//! Initial-state families and overlap weights `w_{nu m} = |<nu|m>|^2`.

use faer::Mat;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::spectral::Spectrum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialFamily {
    /// Eigenstates of the on-site (quadratic) or diagonal (avalanche) part:
    /// the computational basis states.
    BasisLocalized,
    /// `|k> = D^{-1/2} sum_m e^{-i 2 pi k m / D} |m>`, `k = 0..D-1`.
    PlaneWave,
    /// The single state `D^{-1/2} sum_nu |nu>`.
    InfiniteTemperature,
}

/// `D x M` matrix of overlap weights; column `m` is one initial state.
#[derive(Debug, Clone)]
pub struct OverlapWeights {
    pub w: Mat<f64>,
    pub family: InitialFamily,
}

impl OverlapWeights {
    pub fn dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn n_states(&self) -> usize {
        self.w.ncols()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.n_states())
            .map(|m| self.w.col(m).iter().sum())
            .collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|nu| self.w.row(nu).iter().sum())
            .collect()
    }
}

pub fn overlaps(spec: &Spectrum, family: InitialFamily) -> OverlapWeights {
    match family {
        InitialFamily::BasisLocalized => overlaps_basis_localized(spec),
        InitialFamily::PlaneWave => overlaps_plane_wave(spec),
        InitialFamily::InfiniteTemperature => overlaps_infinite_temperature(spec),
    }
}

/// Squared eigenvector components: `w_{nu m} = vectors[m][nu]^2`.
pub fn overlaps_basis_localized(spec: &Spectrum) -> OverlapWeights {
    let v = spec.vectors();
    let d = spec.dim();
    OverlapWeights {
        w: Mat::from_fn(d, d, |nu, m| {
            let c = v[(m, nu)];
            c * c
        }),
        family: InitialFamily::BasisLocalized,
    }
}

/// Plane-wave weights from a forward DFT of every eigenvector.
pub fn overlaps_plane_wave(spec: &Spectrum) -> OverlapWeights {
    let d = spec.dim();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(d);
    let mut buf = vec![Complex64::new(0.0, 0.0); d];
    let mut w = Mat::<f64>::zeros(d, d);
    let v = spec.vectors();
    let norm = 1.0 / d as f64;
    for nu in 0..d {
        for (m, b) in buf.iter_mut().enumerate() {
            *b = Complex64::new(v[(m, nu)], 0.0);
        }
        fft.process(&mut buf);
        for (k, b) in buf.iter().enumerate() {
            w[(nu, k)] = b.norm_sqr() * norm;
        }
    }
    OverlapWeights {
        w,
        family: InitialFamily::PlaneWave,
    }
}

/// Equal weight `1/D` on every eigenstate.
pub fn overlaps_infinite_temperature(spec: &Spectrum) -> OverlapWeights {
    let d = spec.dim();
    OverlapWeights {
        w: Mat::from_fn(d, 1, |_, _| 1.0 / d as f64),
        family: InitialFamily::InfiniteTemperature,
    }
}

/// `<sum_nu w_{nu m}^2>_m` for one realization; the long-time value of the
/// survival probability for a non-degenerate spectrum.
pub fn mean_ipr(weights: &OverlapWeights) -> f64 {
    let m = weights.n_states();
    let total: f64 = (0..m)
        .map(|col| weights.w.col(col).iter().map(|x| x * x).sum::<f64>())
        .sum();
    total / m as f64
}
