//! Browser front end: small ensembles diagonalized client-side.
//!
//! The plain functions (`survival`, `form_factor`, `fit_window`) carry the
//! logic and are what the native tests call; the `#[wasm_bindgen]` wrappers
//! only translate errors.

use scalinv_core::analysis::{fit_power_law_xy, propose_power_law_window};
use scalinv_core::dynamics::{
    goe_sff_reference, raw_sff_with_time, scaled_survival, survival_probability, CurveAccumulator, CurveConstants,
    CurveEnsemble, CurveKind, TimeGrid, TimeScale, DEFAULT_SFF_WINDOW,
};
use scalinv_core::models::{realization_seed, ModelConfig};
use scalinv_core::quench::{mean_ipr, overlaps, InitialFamily};
use scalinv_core::spectral::{combine_log_sums, eigendecompose, LogAverage, LogSpacingSum, Spectrum};
use wasm_bindgen::prelude::*;

/// Largest Hilbert-space dimension the page will diagonalize.
pub const MAX_DIM: usize = 512;
pub const MAX_REALIZATIONS: usize = 200;

#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    tau: Vec<f64>,
    values: Vec<f64>,
    std_err: Vec<f64>,
    reference: Vec<f64>,
    dim: usize,
    t_h_typ: f64,
    p_bar: f64,
}

#[wasm_bindgen]
impl Curve {
    #[wasm_bindgen(getter)]
    pub fn tau(&self) -> Vec<f64> {
        self.tau.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    #[wasm_bindgen(getter, js_name = stdErr)]
    pub fn std_err(&self) -> Vec<f64> {
        self.std_err.clone()
    }

    /// GOE form factor on the same grid; empty for survival curves.
    #[wasm_bindgen(getter)]
    pub fn reference(&self) -> Vec<f64> {
        self.reference.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[wasm_bindgen(getter, js_name = tHTyp)]
    pub fn t_h_typ(&self) -> f64 {
        self.t_h_typ
    }

    /// Ensemble `P_bar`; NaN for form-factor curves.
    #[wasm_bindgen(getter, js_name = pBar)]
    pub fn p_bar(&self) -> f64 {
        self.p_bar
    }
}

/// Power-law fit of a curve on a window.
#[wasm_bindgen]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub a: f64,
    pub beta: f64,
    pub rms: f64,
    pub lo: f64,
    pub hi: f64,
}

fn model(kind: &str, size: usize, parameter: f64) -> Result<ModelConfig, String> {
    let m = match kind {
        "aubry-andre" => ModelConfig::aubry_andre(size, parameter),
        "anderson" => ModelConfig::anderson3d(size, parameter),
        "avalanche" => ModelConfig::avalanche(3, size, parameter),
        other => return Err(format!("unknown model `{other}`")),
    };
    let dim = m.dim().map_err(|e| e.to_string())?;
    if dim > MAX_DIM {
        return Err(format!("dimension {dim} exceeds the demo limit {MAX_DIM}"));
    }
    Ok(m)
}

fn family(name: &str) -> Result<InitialFamily, String> {
    match name {
        "site" => Ok(InitialFamily::BasisLocalized),
        "plane-wave" => Ok(InitialFamily::PlaneWave),
        other => Err(format!("unknown initial states `{other}`")),
    }
}

fn grid() -> TimeGrid {
    TimeGrid::per_decade(1e-3, 1e2, 20, TimeScale::HeisenbergScaled).expect("static grid")
}

struct Ensemble {
    spectra: Vec<Spectrum>,
    t_h_typ: f64,
}

fn ensemble(kind: &str, size: usize, parameter: f64, realizations: usize, seed: u64) -> Result<Ensemble, String> {
    if realizations == 0 || realizations > MAX_REALIZATIONS {
        return Err(format!("realizations must be in 1..={MAX_REALIZATIONS}"));
    }
    let m = model(kind, size, parameter)?;
    if m.dim().map_err(|e| e.to_string())? < 3 {
        return Err("need at least three levels".into());
    }
    let spectra = (0..realizations)
        .map(|i| {
            let r = m.sample(realization_seed(seed, i as u64))?;
            eigendecompose(&m.hamiltonian(&r)?)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let sums: Vec<LogSpacingSum> = spectra.iter().map(|s| LogSpacingSum::from_energies(&s.energies)).collect();
    let stats = combine_log_sums(&sums, LogAverage::Pooled, 0.0).map_err(|e| e.to_string())?;
    Ok(Ensemble {
        spectra,
        t_h_typ: stats.t_h_typ,
    })
}

/// Scaled survival probability `p(tau)` with `P_inf = 0`.
pub fn survival(
    kind: &str,
    size: usize,
    parameter: f64,
    initial: &str,
    realizations: usize,
    seed: u64,
) -> Result<Curve, String> {
    let fam = family(initial)?;
    let ens = ensemble(kind, size, parameter, realizations, seed)?;
    let grid = grid();
    let times = grid.evaluation_times(ens.t_h_typ);
    let mut acc = CurveAccumulator::new(times.len());
    let mut ipr = 0.0;
    for spec in &ens.spectra {
        let w = overlaps(spec, fam);
        ipr += mean_ipr(&w);
        acc.push(&survival_probability(&spec.energies, &w, &times));
    }
    let p_bar = ipr / realizations as f64;
    let dim = ens.spectra[0].dim();
    let raw = CurveEnsemble {
        kind: CurveKind::SurvivalRaw,
        grid: grid.clone(),
        std_err: acc.std_err(),
        mean: acc.mean,
        n_realizations: realizations,
        n_initial_states: dim,
        constants: CurveConstants {
            dim,
            ..Default::default()
        },
    };
    let p = scaled_survival(&raw, p_bar, 0.0, ens.t_h_typ).map_err(|e| e.to_string())?;
    Ok(Curve {
        tau: grid.values,
        values: p.mean,
        std_err: p.std_err,
        reference: Vec::new(),
        dim,
        t_h_typ: ens.t_h_typ,
        p_bar,
    })
}

/// Raw spectral form factor with the GOE curve alongside.
pub fn form_factor(kind: &str, size: usize, parameter: f64, realizations: usize, seed: u64) -> Result<Curve, String> {
    let ens = ensemble(kind, size, parameter, realizations, seed)?;
    let grid = grid();
    let energies: Vec<Vec<f64>> = ens.spectra.into_iter().map(|s| s.energies).collect();
    let k = raw_sff_with_time(&energies, &grid, DEFAULT_SFF_WINDOW, Some(ens.t_h_typ)).map_err(|e| e.to_string())?;
    let reference = grid
        .values
        .iter()
        .map(|&t| goe_sff_reference(t))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    Ok(Curve {
        tau: grid.values,
        values: k.mean,
        std_err: k.std_err,
        reference,
        dim: k.constants.dim,
        t_h_typ: ens.t_h_typ,
        p_bar: f64::NAN,
    })
}

/// Fits `a tau^-beta` on `[lo, hi]`; a non-positive `hi` asks for a
/// proposed window instead.
pub fn fit_window(tau: &[f64], values: &[f64], lo: f64, hi: f64) -> Result<PowerFit, String> {
    let window = if hi > 0.0 {
        (lo, hi)
    } else {
        let below: usize = tau.iter().take_while(|&&t| t < 1.0).count();
        propose_power_law_window(&tau[..below], &values[..below], 0.02, 5)
            .ok_or_else(|| "no window with a clean power law; set one by hand".to_string())?
    };
    let fit = fit_power_law_xy(tau, values, window).map_err(|e| e.to_string())?;
    Ok(PowerFit {
        a: fit.param("a"),
        beta: fit.param("beta"),
        rms: fit.residual,
        lo: window.0,
        hi: window.1,
    })
}

#[wasm_bindgen(js_name = survivalCurve)]
pub fn survival_js(
    kind: &str,
    size: usize,
    parameter: f64,
    initial: &str,
    realizations: usize,
    seed: u32,
) -> Result<Curve, JsError> {
    survival(kind, size, parameter, initial, realizations, seed as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = formFactor)]
pub fn form_factor_js(kind: &str, size: usize, parameter: f64, realizations: usize, seed: u32) -> Result<Curve, JsError> {
    form_factor(kind, size, parameter, realizations, seed as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = fitPowerLaw)]
pub fn fit_window_js(tau: &[f64], values: &[f64], lo: f64, hi: f64) -> Result<PowerFit, JsError> {
    fit_window(tau, values, lo, hi).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn late_mean(c: &Curve) -> f64 {
        let late: Vec<f64> = c.tau.iter().zip(&c.values).filter(|(t, _)| **t >= 10.0).map(|(_, v)| *v).collect();
        late.iter().sum::<f64>() / late.len() as f64
    }

    #[test]
    fn survival_is_bounded_and_saturates() {
        let c = survival("aubry-andre", 64, 2.0, "site", 4, 1).unwrap();
        assert_eq!(c.tau.len(), c.values.len());
        assert_eq!(c.dim, 64);
        for &v in &c.values {
            let raw = v * c.p_bar;
            assert!((-1e-12..=1.0 + 1e-12).contains(&raw), "{raw}");
        }
        assert!((late_mean(&c) - 1.0).abs() < 0.2, "{}", late_mean(&c));
    }

    #[test]
    fn same_seed_same_curve() {
        let a = survival("anderson", 4, 16.5, "plane-wave", 3, 9).unwrap();
        let b = survival("anderson", 4, 16.5, "plane-wave", 3, 9).unwrap();
        assert_eq!(a, b);
        let c = survival("anderson", 4, 16.5, "plane-wave", 3, 10).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn form_factor_starts_at_dimension() {
        let c = form_factor("avalanche", 3, 0.8, 5, 2).unwrap();
        assert_eq!(c.dim, 64);
        assert!(c.values.iter().all(|&k| (0.0..=64.0).contains(&k)));
        assert!(c.values[0] > 10.0);
        assert!((late_mean(&c) - 1.0).abs() < 0.3, "{}", late_mean(&c));
        assert_eq!(c.reference.len(), c.tau.len());
        assert!(c.p_bar.is_nan());
    }

    #[test]
    fn fit_recovers_a_power_law() {
        let tau: Vec<f64> = (0..40).map(|i| 1e-3 * 10f64.powf(i as f64 / 10.0)).collect();
        let p: Vec<f64> = tau.iter().map(|t| 0.4 * t.powf(-0.3)).collect();
        let f = fit_window(&tau, &p, 1e-3, 1e-1).unwrap();
        assert!((f.beta - 0.3).abs() < 1e-9 && (f.a - 0.4).abs() < 1e-9);
        let proposed = fit_window(&tau, &p, 0.0, 0.0).unwrap();
        assert!((proposed.beta - 0.3).abs() < 1e-9);
        assert!(proposed.hi < 1.0);
    }

    #[test]
    fn rejects_bad_requests() {
        assert!(survival("ising", 8, 1.0, "site", 2, 0).is_err());
        assert!(survival("aubry-andre", 1000, 2.0, "site", 2, 0).is_err());
        assert!(survival("aubry-andre", 32, 2.0, "neel", 2, 0).is_err());
        assert!(form_factor("aubry-andre", 32, 2.0, 0, 0).is_err());
        assert!(fit_window(&[1.0, 2.0], &[1.0, 0.5], 1.0, 2.0).is_err());
    }
}
