//! Dense Hamiltonians for the three disordered models and their seeded
//! disorder realizations.
//!
//! All builders are pure functions of `(ModelConfig, Realization)`. Matrices
//! are stored row-major and every off-diagonal element is written to both
//! triangles at once, so symmetry is exact rather than restored afterwards.

use std::f64::consts::PI;

use rand::distr::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Inverse golden ratio used by the quasiperiodic potential.
pub const GOLDEN_Q: f64 = 0.618_033_988_749_894_9;

/// Largest number of spins accepted by the avalanche builder. A dense matrix
/// at this size already needs 32 GiB.
pub const MAX_SPINS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    AubryAndre,
    Anderson3D,
    Avalanche,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Boundary {
    Open,
    Periodic,
}

/// Full parameterization of one Hamiltonian ensemble.
///
/// Only the fields relevant to `kind` are read; the others keep their
/// defaults. `boundary = None` selects the model default (open chain for
/// Aubry-Andre, periodic cube for Anderson).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    /// Linear size (quadratic models) or number of spins outside the dot.
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "J", default = "one")]
    pub hopping: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(rename = "W", default)]
    pub disorder: f64,
    /// Number of dot spins.
    #[serde(rename = "N", default = "default_dot")]
    pub n_dot: usize,
    #[serde(default = "one")]
    pub g0: f64,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta_goe: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Boundary>,
}

fn one() -> f64 {
    1.0
}

fn default_dot() -> usize {
    5
}

fn default_beta() -> f64 {
    0.3
}

impl ModelConfig {
    fn base(kind: ModelKind, l: usize) -> Self {
        ModelConfig {
            kind,
            l,
            hopping: 1.0,
            lambda: 0.0,
            disorder: 0.0,
            n_dot: 5,
            g0: 1.0,
            alpha: 1.0,
            beta_goe: 0.3,
            boundary: None,
        }
    }

    pub fn aubry_andre(l: usize, lambda: f64) -> Self {
        ModelConfig {
            lambda,
            ..Self::base(ModelKind::AubryAndre, l)
        }
    }

    pub fn anderson3d(l: usize, disorder: f64) -> Self {
        ModelConfig {
            disorder,
            ..Self::base(ModelKind::Anderson3D, l)
        }
    }

    pub fn avalanche(n_dot: usize, l: usize, alpha: f64) -> Self {
        ModelConfig {
            n_dot,
            alpha,
            ..Self::base(ModelKind::Avalanche, l)
        }
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary.unwrap_or(match self.kind {
            ModelKind::AubryAndre => Boundary::Open,
            ModelKind::Anderson3D | ModelKind::Avalanche => Boundary::Periodic,
        })
    }

    /// Hilbert-space dimension: `L`, `L^3` or `2^(N+L)`.
    pub fn dim(&self) -> Result<usize> {
        let overflow = || Error::DimensionOverflow {
            what: format!("{:?} with L = {}, N = {}", self.kind, self.l, self.n_dot),
        };
        match self.kind {
            ModelKind::AubryAndre => Ok(self.l),
            ModelKind::Anderson3D => self.l.checked_pow(3).ok_or_else(overflow),
            ModelKind::Avalanche => {
                let spins = self.n_dot.checked_add(self.l).ok_or_else(overflow)?;
                if spins > MAX_SPINS {
                    return Err(overflow());
                }
                Ok(1usize << spins)
            }
        }
    }

    /// Bytes needed to hold one dense `D x D` matrix of `f64`.
    pub fn dense_bytes(&self) -> Result<usize> {
        let d = self.dim()?;
        d.checked_mul(d)
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| Error::DimensionOverflow {
                what: format!("dense storage at D = {d}"),
            })
    }

    /// Reads a scanned parameter by name.
    pub fn parameter(&self, name: &str) -> Option<f64> {
        match (self.kind, name) {
            (ModelKind::AubryAndre, "lambda") => Some(self.lambda),
            (ModelKind::Anderson3D, "W") => Some(self.disorder),
            (ModelKind::Avalanche, "alpha") => Some(self.alpha),
            (ModelKind::Avalanche, "g0") => Some(self.g0),
            (ModelKind::Avalanche, "beta_goe") => Some(self.beta_goe),
            (ModelKind::AubryAndre | ModelKind::Anderson3D, "J") => Some(self.hopping),
            _ => None,
        }
    }

    /// Returns a copy with a scanned parameter replaced.
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<Self> {
        if self.parameter(name).is_none() {
            return Err(Error::InvalidConfig(format!(
                "parameter `{name}` does not exist on {:?}",
                self.kind
            )));
        }
        let mut out = self.clone();
        match name {
            "lambda" => out.lambda = value,
            "W" => out.disorder = value,
            "alpha" => out.alpha = value,
            "g0" => out.g0 = value,
            "beta_goe" => out.beta_goe = value,
            "J" => out.hopping = value,
            _ => unreachable!(),
        }
        Ok(out)
    }

    pub fn with_size(&self, l: usize) -> Self {
        ModelConfig { l, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.hopping,
            self.lambda,
            self.disorder,
            self.g0,
            self.alpha,
            self.beta_goe,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model parameters"));
        }
        match self.kind {
            ModelKind::AubryAndre if self.l < 2 => {
                return Err(Error::InvalidConfig("Aubry-Andre needs L >= 2".into()))
            }
            ModelKind::Anderson3D if self.l < 2 => {
                return Err(Error::InvalidConfig("Anderson3D needs L >= 2".into()))
            }
            ModelKind::Anderson3D if self.disorder < 0.0 => {
                return Err(Error::InvalidConfig("disorder width W must be >= 0".into()))
            }
            ModelKind::AubryAndre if self.lambda < 0.0 => {
                return Err(Error::InvalidConfig("lambda must be >= 0".into()))
            }
            ModelKind::Avalanche => {
                if self.n_dot < 1 || self.l < 1 {
                    return Err(Error::InvalidConfig("avalanche needs N >= 1 and L >= 1".into()));
                }
                if self.alpha <= 0.0 {
                    return Err(Error::InvalidConfig("avalanche needs alpha > 0".into()));
                }
            }
            _ => {}
        }
        self.dim().map(|_| ())
    }

    /// Draws one disorder realization from `seed`.
    pub fn sample(&self, seed: u64) -> Result<Realization> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draws = match self.kind {
            ModelKind::AubryAndre => Draws::AubryAndre {
                phi: rng.random_range(0.0..2.0 * PI),
            },
            ModelKind::Anderson3D => {
                let n = self.dim()?;
                let half = self.disorder / 2.0;
                let eps = if half > 0.0 {
                    let box_ = Uniform::new_inclusive(-half, half)
                        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
                    box_.sample_iter(&mut rng).take(n).collect()
                } else {
                    vec![0.0; n]
                };
                Draws::Anderson3D { eps }
            }
            ModelKind::Avalanche => {
                let goe = sample_goe(1 << self.n_dot, self.beta_goe, &mut rng)?;
                let fields = (0..self.l).map(|_| rng.random_range(0.5..=1.5)).collect();
                let exponents = (0..self.l)
                    .map(|i| {
                        if i == 0 {
                            0.0
                        } else {
                            let c = i as f64;
                            rng.random_range(c - 0.2..=c + 0.2)
                        }
                    })
                    .collect();
                let dot_sites = (0..self.l).map(|_| rng.random_range(0..self.n_dot)).collect();
                Draws::Avalanche {
                    fields,
                    exponents,
                    dot_sites,
                    goe,
                }
            }
        };
        Ok(Realization { seed, draws })
    }

    /// Builds the Hamiltonian of one realization.
    pub fn hamiltonian(&self, realization: &Realization) -> Result<SymmetricMatrix> {
        match (&realization.draws, self.kind) {
            (Draws::AubryAndre { phi }, ModelKind::AubryAndre) => build_aubry_andre(self, *phi),
            (Draws::Anderson3D { eps }, ModelKind::Anderson3D) => build_anderson3d(self, eps),
            (Draws::Avalanche { .. }, ModelKind::Avalanche) => build_avalanche(self, realization),
            _ => Err(Error::InvalidInput(format!(
                "realization draws do not match model {:?}",
                self.kind
            ))),
        }
    }
}

/// Per-realization seed derived from a master seed and realization index
/// (SplitMix64 finalizer over both words).
pub fn realization_seed(master_seed: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(mix(master_seed.wrapping_add(0x9e37_79b9_7f4a_7c15)) ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// One disorder realization.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub seed: u64,
    pub draws: Draws,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Draws {
    AubryAndre {
        phi: f64,
    },
    Anderson3D {
        eps: Vec<f64>,
    },
    Avalanche {
        /// `h_i` in `[0.5, 1.5]`.
        fields: Vec<f64>,
        /// `u_i`, with `u_0 = 0` and `u_i` in `[i - 0.2, i + 0.2]`.
        exponents: Vec<f64>,
        /// Dot spin `n_i` each outside spin couples to.
        dot_sites: Vec<usize>,
        /// Symmetrized dot matrix `R`.
        goe: SymmetricMatrix,
    },
}

/// Dense, exactly symmetric matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymmetricMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    /// Builds from a function evaluated on the upper triangle only.
    pub fn from_upper(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Writes `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.dim + j] = value;
        self.data[j * self.dim + i] = value;
    }

    /// Adds to `(i, j)` and, when off-diagonal, `(j, i)`.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let v = self.get(i, j) + value;
        self.set(i, j, v);
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| self.get(i, j).to_bits() == self.get(j, i).to_bits()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn to_faer(&self) -> faer::Mat<f64> {
        faer::Mat::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }
}

/// Aubry-Andre chain: hopping `-J` between neighbours and on-site energies
/// `lambda * cos(2 pi q i + phi)` for sites `i = 1..=L`.
pub fn build_aubry_andre(config: &ModelConfig, phi: f64) -> Result<SymmetricMatrix> {
    if config.kind != ModelKind::AubryAndre {
        return Err(Error::InvalidInput("config is not an Aubry-Andre model".into()));
    }
    if !phi.is_finite() {
        return Err(Error::NonFinite("phase phi"));
    }
    config.validate()?;
    let l = config.l;
    let mut h = SymmetricMatrix::zeros(l);
    for i in 0..l {
        let site = (i + 1) as f64;
        h.set(i, i, config.lambda * (2.0 * PI * GOLDEN_Q * site + phi).cos());
    }
    for i in 0..l - 1 {
        h.set(i, i + 1, -config.hopping);
    }
    if config.boundary() == Boundary::Periodic {
        h.set(l - 1, 0, -config.hopping);
    }
    Ok(h)
}

/// Anderson model on an `L x L x L` cubic lattice. Site `(x, y, z)` maps to
/// `x + L (y + L z)`. With periodic wrap at `L = 2` the two directions along
/// an axis reach the same neighbour and share a single bond.
pub fn build_anderson3d(config: &ModelConfig, eps: &[f64]) -> Result<SymmetricMatrix> {
    if config.kind != ModelKind::Anderson3D {
        return Err(Error::InvalidInput("config is not an Anderson3D model".into()));
    }
    config.validate()?;
    let l = config.l;
    let d = config.dim()?;
    if eps.len() != d {
        return Err(Error::InvalidInput(format!(
            "expected {d} on-site energies, got {}",
            eps.len()
        )));
    }
    if eps.iter().any(|e| !e.is_finite()) {
        return Err(Error::NonFinite("on-site energies"));
    }
    let periodic = config.boundary() == Boundary::Periodic;
    let index = |x: usize, y: usize, z: usize| x + l * (y + l * z);
    let mut h = SymmetricMatrix::from_diagonal(eps);
    for z in 0..l {
        for y in 0..l {
            for x in 0..l {
                let site = index(x, y, z);
                let forward = [
                    (x + 1 < l || periodic).then(|| index((x + 1) % l, y, z)),
                    (y + 1 < l || periodic).then(|| index(x, (y + 1) % l, z)),
                    (z + 1 < l || periodic).then(|| index(x, y, (z + 1) % l)),
                ];
                for nb in forward.into_iter().flatten() {
                    h.set(site, nb, -config.hopping);
                }
            }
        }
    }
    Ok(h)
}

/// Avalanche model
/// `H = R (x) I + g0 sum_i alpha^{u_i} S^x_{n_i} S^x_i + sum_i h_i S^z_i`
/// with spin-1/2 operators `S = sigma / 2`.
///
/// Basis states are tensor products with the dot spins leftmost: a state
/// index is `(dot << L) | outside`, outside spin `i` is bit `L - 1 - i` and
/// dot spin `n` is bit `L + N - 1 - n`. A zero bit is spin up (`S^z = +1/2`).
pub fn build_avalanche(config: &ModelConfig, realization: &Realization) -> Result<SymmetricMatrix> {
    if config.kind != ModelKind::Avalanche {
        return Err(Error::InvalidInput("config is not an avalanche model".into()));
    }
    config.validate()?;
    let Draws::Avalanche {
        fields,
        exponents,
        dot_sites,
        goe,
    } = &realization.draws
    else {
        return Err(Error::InvalidInput("realization is not an avalanche draw".into()));
    };
    let (n, l) = (config.n_dot, config.l);
    let dot_dim = 1usize << n;
    if goe.dim() != dot_dim || fields.len() != l || exponents.len() != l || dot_sites.len() != l {
        return Err(Error::InvalidInput("avalanche draws do not match (N, L)".into()));
    }
    if dot_sites.iter().any(|&s| s >= n) {
        return Err(Error::InvalidInput("dot site index out of range".into()));
    }
    let d = config.dim()?;
    let out_dim = 1usize << l;
    let mut h = SymmetricMatrix::zeros(d);

    for a in 0..dot_dim {
        for b in a..dot_dim {
            let r = goe.get(a, b);
            for s in 0..out_dim {
                h.set((a << l) | s, (b << l) | s, r);
            }
        }
    }

    for state in 0..d {
        let field: f64 = fields
            .iter()
            .enumerate()
            .map(|(i, &hi)| {
                let up = state >> (l - 1 - i) & 1 == 0;
                if up {
                    0.5 * hi
                } else {
                    -0.5 * hi
                }
            })
            .sum();
        h.add(state, state, field);
    }

    for i in 0..l {
        let coupling = config.g0 * config.alpha.powf(exponents[i]) * 0.25;
        let flip = (1usize << (l - 1 - i)) | (1usize << (l + n - 1 - dot_sites[i]));
        for state in 0..d {
            let partner = state ^ flip;
            if state < partner {
                h.add(state, partner, coupling);
            }
        }
    }
    Ok(h)
}

/// Gaussian orthogonal ensemble sample `beta (A + A^T) / 2` with independent
/// standard-normal `A_ij`. Off-diagonal variance is `beta^2 / 2`, diagonal
/// variance `beta^2`.
pub fn sample_goe<R: Rng + ?Sized>(n: usize, beta: f64, rng: &mut R) -> Result<SymmetricMatrix> {
    if n == 0 {
        return Err(Error::InvalidInput("GOE size must be >= 1".into()));
    }
    if !beta.is_finite() {
        return Err(Error::NonFinite("GOE scale"));
    }
    let a: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
    Ok(SymmetricMatrix::from_upper(n, |i, j| {
        beta * (a[i * n + j] + a[j * n + i]) / 2.0
    }))
}

/// Seeded convenience wrapper around [`sample_goe`].
pub fn sample_goe_seeded(n: usize, beta: f64, seed: u64) -> Result<SymmetricMatrix> {
    sample_goe(n, beta, &mut ChaCha8Rng::seed_from_u64(seed))
}
