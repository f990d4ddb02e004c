//! Parameter extraction: power-law fits of `p(tau)`, the fractal dimension of
//! `P_bar(D)`, the Heisenberg-time exponent `n`, the prediction
//! `beta = gamma / n`, and the gap-ratio scaling collapse.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::dynamics::CurveEnsemble;
use crate::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Log-spaced trial gaps before refining a free asymptote.
const FREE_PINF_SCAN: usize = 400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance: Option<Vec<Vec<f64>>>,
    /// Root-mean-square residual in the fit coordinates.
    pub residual: f64,
    /// Data range actually used (inclusive).
    pub window: (f64, f64),
    pub n_points: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl FitResult {
    /// Named parameter; panics on an unknown name.
    pub fn param(&self, name: &str) -> f64 {
        *self
            .params
            .get(name)
            .unwrap_or_else(|| panic!("fit has no parameter `{name}`"))
    }
}

/// Ordinary least squares `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub rms: f64,
    /// Covariance of `(intercept, slope)`; `None` with two points.
    pub covariance: Option<[[f64; 2]; 2]>,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return Err(Error::InsufficientData(format!("line fit needs >= 2 points, got {n}")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|xi| (xi - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData("line fit needs distinct x values".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (yi - intercept - slope * xi).powi(2))
        .sum();
    let covariance = (n > 2).then(|| {
        let s2 = ssr / (nf - 2.0);
        let var_slope = s2 / sxx;
        let cov = -mx * var_slope;
        [[s2 / nf + mx * mx * var_slope, cov], [cov, var_slope]]
    });
    Ok(LineFit {
        intercept,
        slope,
        rms: (ssr / nf).sqrt(),
        covariance,
    })
}

fn cov_vec(c: Option<[[f64; 2]; 2]>) -> Option<Vec<Vec<f64>>> {
    c.map(|m| m.iter().map(|r| r.to_vec()).collect())
}

fn params<const N: usize>(pairs: [(&str, f64); N]) -> BTreeMap<String, f64> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Fits `p = a x^{-beta}` to points with `x` inside `window` (inclusive).
pub fn fit_power_law_xy(x: &[f64], p: &[f64], window: (f64, f64)) -> Result<FitResult> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidInput(format!("power-law window [{lo}, {hi}] is invalid")));
    }
    let mut lx = Vec::new();
    let mut lp = Vec::new();
    let mut used = (f64::INFINITY, f64::NEG_INFINITY);
    for (i, (&xi, &pi)) in x.iter().zip(p).enumerate() {
        if xi < lo || xi > hi {
            continue;
        }
        if !(pi > 0.0) {
            return Err(Error::NonPositive { index: i, x: xi, value: pi });
        }
        lx.push(xi.ln());
        lp.push(pi.ln());
        used = (used.0.min(xi), used.1.max(xi));
    }
    if lx.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "power-law fit needs >= 5 points in [{lo:e}, {hi:e}], found {}",
            lx.len()
        )));
    }
    let line = fit_line(&lx, &lp)?;
    Ok(FitResult {
        params: params([("a", line.intercept.exp()), ("beta", -line.slope)]),
        covariance: cov_vec(line.covariance),
        residual: line.rms,
        window: used,
        n_points: lx.len(),
        warnings: Vec::new(),
    })
}

/// Power-law fit of a scaled curve over a `tau` window.
pub fn fit_power_law(curve: &CurveEnsemble, window: (f64, f64)) -> Result<FitResult> {
    fit_power_law_xy(&curve.grid.values, &curve.mean, window)
}

/// Widest contiguous window of positive points whose log-log line fit keeps
/// the RMS residual below `max_rms`. Ties go to the earliest window.
pub fn propose_power_law_window(x: &[f64], p: &[f64], max_rms: f64, min_points: usize) -> Option<(f64, f64)> {
    let n = x.len().min(p.len());
    let min_points = min_points.max(3);
    let mut best: Option<(usize, usize)> = None;
    for start in 0..n {
        let mut lx = Vec::new();
        let mut lp = Vec::new();
        for end in start..n {
            if !(p[end] > 0.0 && x[end] > 0.0) {
                break;
            }
            lx.push(x[end].ln());
            lp.push(p[end].ln());
            if lx.len() < min_points {
                continue;
            }
            let len = end - start + 1;
            if best.is_some_and(|(s, e)| e - s + 1 >= len) {
                continue;
            }
            if fit_line(&lx, &lp).is_ok_and(|f| f.rms < max_rms) {
                best = Some((start, end));
            }
        }
    }
    best.map(|(s, e)| (x[s], x[e]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PinfMode {
    /// Asymptote held at the given value.
    Fixed(f64),
    /// Asymptote searched on `[0, min P_bar)`.
    Free,
}

fn fractal_fit_at(log_d: &[f64], p_bars: &[f64], dims: &[f64], p_inf: f64) -> Result<LineFit> {
    let mut y = Vec::with_capacity(p_bars.len());
    for (&p, &d) in p_bars.iter().zip(dims) {
        if !(p > p_inf) {
            return Err(Error::BelowAsymptote { dim: d, p_bar: p, p_inf });
        }
        y.push((p - p_inf).ln());
    }
    fit_line(log_d, &y)
}

/// Fits `P_bar = P_inf + c D^{-gamma}`.
pub fn fit_fractal_dimension(dims: &[f64], p_bars: &[f64], mode: PinfMode) -> Result<FitResult> {
    if dims.len() != p_bars.len() {
        return Err(Error::InvalidInput("dims and P_bar differ in length".into()));
    }
    if dims.iter().chain(p_bars).any(|v| !v.is_finite()) || dims.iter().any(|&d| d <= 0.0) {
        return Err(Error::InvalidInput("dims must be positive and values finite".into()));
    }
    let log_d: Vec<f64> = dims.iter().map(|d| d.ln()).collect();
    let mut warnings = Vec::new();
    let (p_inf, line) = match mode {
        PinfMode::Fixed(p_inf) => {
            if dims.len() < 2 {
                return Err(Error::InsufficientData("fractal fit needs >= 2 sizes".into()));
            }
            (p_inf, fractal_fit_at(&log_d, p_bars, dims, p_inf)?)
        }
        PinfMode::Free => {
            if dims.len() < 3 {
                return Err(Error::InsufficientData("free-asymptote fit needs >= 3 sizes".into()));
            }
            let mut order: Vec<usize> = (0..dims.len()).collect();
            order.sort_by(|&a, &b| dims[a].total_cmp(&dims[b]));
            if order.windows(2).any(|w| p_bars[w[1]] >= p_bars[w[0]]) {
                warnings.push("P_bar is not decreasing in D; best-effort fit".to_string());
            }
            let min_p = p_bars.iter().copied().fold(f64::INFINITY, f64::min);
            if !(min_p > 0.0) {
                return Err(Error::BelowAsymptote { dim: f64::NAN, p_bar: min_p, p_inf: 0.0 });
            }
            let rms = |p: f64| {
                fractal_fit_at(&log_d, p_bars, dims, p)
                    .map(|f| f.rms)
                    .unwrap_or(f64::INFINITY)
            };
            // The residual is not unimodal in P_inf, so scan the gap
            // `min P_bar - P_inf` on a log scale before refining.
            let gap = |u: f64| min_p - u.exp();
            let (u_lo, u_hi) = ((1e-12 * min_p).ln(), min_p.ln());
            let us: Vec<f64> = (0..=FREE_PINF_SCAN)
                .map(|i| u_lo + (u_hi - u_lo) * i as f64 / FREE_PINF_SCAN as f64)
                .collect();
            let k = (0..us.len())
                .min_by(|&a, &b| rms(gap(us[a]).max(0.0)).total_cmp(&rms(gap(us[b]).max(0.0))))
                .unwrap_or(0);
            let (a, b) = (us[k.saturating_sub(1)], us[(k + 1).min(us.len() - 1)]);
            let u = golden_section(|u| rms(gap(u).max(0.0)), a, b, 1e-10);
            let found = gap(u).max(0.0);
            let p_inf = if rms(0.0) <= rms(found) { 0.0 } else { found };
            (p_inf, fractal_fit_at(&log_d, p_bars, dims, p_inf)?)
        }
    };
    Ok(FitResult {
        params: params([("p_inf", p_inf), ("c", line.intercept.exp()), ("gamma", -line.slope)]),
        covariance: cov_vec(line.covariance),
        residual: line.rms,
        window: bounds(dims),
        n_points: dims.len(),
        warnings,
    })
}

/// Slope `n` of `ln t_H` against `ln D`.
pub fn fit_heisenberg_exponent(dims: &[f64], t_h: &[f64]) -> Result<FitResult> {
    if dims.len() != t_h.len() {
        return Err(Error::InvalidInput("dims and t_H differ in length".into()));
    }
    if dims.iter().chain(t_h).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput("dims and t_H must be positive and finite".into()));
    }
    let x: Vec<f64> = dims.iter().map(|d| d.ln()).collect();
    let y: Vec<f64> = t_h.iter().map(|t| t.ln()).collect();
    let line = fit_line(&x, &y)?;
    Ok(FitResult {
        params: params([("n", line.slope), ("prefactor", line.intercept.exp())]),
        covariance: cov_vec(line.covariance),
        residual: line.rms,
        window: bounds(dims),
        n_points: dims.len(),
        warnings: Vec::new(),
    })
}

/// `beta = gamma / n`.
pub fn beta_prediction(gamma: f64, n: f64) -> Result<f64> {
    if !(n > 0.0) {
        return Err(Error::InvalidInput(format!("Heisenberg exponent n = {n} must be > 0")));
    }
    Ok(gamma / n)
}

fn bounds(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// Golden-section search for a minimum of `f` on `[lo, hi]`.
fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    if fc <= fd {
        c
    } else {
        d
    }
}

/// Mean gap ratio of one ensemble at `(L, alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapsePoint {
    pub size: f64,
    pub alpha: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseCost {
    pub cost: f64,
    /// Points sitting exactly at `alpha_c`, where the length scale diverges.
    pub n_excluded: usize,
}

/// Position on the collapse axis: `+-L^{1/mu} ln(alpha/alpha_c)^2`, negative
/// on the `alpha < alpha_c` branch. `None` at `alpha = alpha_c`.
pub fn collapse_coordinate(size: f64, alpha: f64, alpha_c: f64, mu: f64) -> Option<f64> {
    if alpha == alpha_c {
        return None;
    }
    let inv_xi = (alpha / alpha_c).ln().powi(2);
    let sign = if alpha > alpha_c { 1.0 } else { -1.0 };
    Some(sign * size.powf(1.0 / mu) * inv_xi)
}

fn cost_unchecked(points: &[CollapsePoint], alpha_c: f64, mu: f64) -> CollapseCost {
    let mut mapped: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    let mut n_excluded = 0;
    for p in points {
        match collapse_coordinate(p.size, p.alpha, alpha_c, mu) {
            Some(x) => mapped.push((x, p.r)),
            None => n_excluded += 1,
        }
    }
    mapped.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let (lo, hi) = mapped
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, r)| (lo.min(r), hi.max(r)));
    let cost = if mapped.len() < 2 || hi <= lo {
        0.0
    } else {
        let variation: f64 = mapped.windows(2).map(|w| (w[1].1 - w[0].1).abs()).sum();
        variation / (hi - lo) - 1.0
    };
    CollapseCost { cost, n_excluded }
}

fn distinct_sizes(points: &[CollapsePoint]) -> usize {
    points.iter().map(|p| p.size.to_bits()).collect::<BTreeSet<_>>().len()
}

/// Normalized total variation of the collapsed data, minus one. Zero for a
/// perfectly monotone collapse.
pub fn collapse_cost(points: &[CollapsePoint], alpha_c: f64, mu: f64) -> Result<CollapseCost> {
    if distinct_sizes(points) < 2 {
        return Err(Error::InsufficientData("collapse needs >= 2 system sizes".into()));
    }
    if !(alpha_c > 0.0 && mu > 0.0) {
        return Err(Error::InvalidInput("alpha_c and mu must be > 0".into()));
    }
    if points.iter().any(|p| !(p.size > 0.0 && p.alpha > 0.0 && p.r.is_finite())) {
        return Err(Error::InvalidInput("collapse data must have positive L, alpha and finite r".into()));
    }
    Ok(cost_unchecked(points, alpha_c, mu))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseSearch {
    pub alpha_range: (f64, f64),
    pub mu_range: (f64, f64),
    pub grid: (usize, usize),
    pub rounds: usize,
}

impl CollapseSearch {
    pub fn new(alpha_range: (f64, f64), mu_range: (f64, f64)) -> Self {
        CollapseSearch {
            alpha_range,
            mu_range,
            grid: (50, 50),
            rounds: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseResult {
    pub alpha_c: f64,
    pub mu: f64,
    pub cost: f64,
    pub alpha_range: (f64, f64),
    pub mu_range: (f64, f64),
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

fn linspace(range: (f64, f64), n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![0.5 * (range.0 + range.1)];
    }
    (0..n)
        .map(|i| range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Coarse grid over `(alpha_c, mu)` followed by alternating golden-section
/// refinement inside one grid cell around the incumbent. Ties on the grid go
/// to the lower `alpha_c`, then the lower `mu`.
pub fn minimize_collapse(points: &[CollapsePoint], search: &CollapseSearch) -> Result<CollapseResult> {
    let (a_lo, a_hi) = search.alpha_range;
    let (m_lo, m_hi) = search.mu_range;
    if !(a_lo > 0.0 && a_hi > a_lo && m_lo > 0.0 && m_hi > m_lo) {
        return Err(Error::InvalidInput("collapse search ranges must be positive and nonempty".into()));
    }
    if points.is_empty() || points.iter().any(|p| !(p.size > 0.0 && p.alpha > 0.0 && p.r.is_finite())) {
        return Err(Error::InvalidInput("collapse data must be nonempty and finite".into()));
    }
    let cost = |a: f64, m: f64| cost_unchecked(points, a, m).cost;
    let alphas = linspace(search.alpha_range, search.grid.0);
    let mus = linspace(search.mu_range, search.grid.1);
    let mut best = (alphas[0], mus[0], f64::INFINITY);
    for &a in &alphas {
        for &m in &mus {
            let c = cost(a, m);
            if c < best.2 {
                best = (a, m, c);
            }
        }
    }
    let a_step = (a_hi - a_lo) / (search.grid.0.max(2) - 1) as f64;
    let m_step = (m_hi - m_lo) / (search.grid.1.max(2) - 1) as f64;
    for _ in 0..search.rounds {
        let (a0, m0, _) = best;
        let a = golden_section(|a| cost(a, m0), (a0 - a_step).max(a_lo), (a0 + a_step).min(a_hi), 1e-6 * a_step);
        let c = cost(a, m0);
        if c < best.2 {
            best = (a, m0, c);
        }
        let (a0, m0, _) = best;
        let m = golden_section(|m| cost(a0, m), (m0 - m_step).max(m_lo), (m0 + m_step).min(m_hi), 1e-6 * m_step);
        let c = cost(a0, m);
        if c < best.2 {
            best = (a0, m, c);
        }
    }
    let (alpha_c, mu, cost) = best;
    let mut flags = Vec::new();
    if distinct_sizes(points) < 2 {
        flags.push("degenerate: fewer than two system sizes".to_string());
    }
    if alpha_c - a_lo < 0.5 * a_step || a_hi - alpha_c < 0.5 * a_step {
        flags.push("alpha_c on the search boundary".to_string());
    }
    if mu - m_lo < 0.5 * m_step || m_hi - mu < 0.5 * m_step {
        flags.push("mu on the search boundary".to_string());
    }
    Ok(CollapseResult {
        alpha_c,
        mu,
        cost,
        alpha_range: search.alpha_range,
        mu_range: search.mu_range,
        converged: flags.is_empty(),
        flags,
    })
}
