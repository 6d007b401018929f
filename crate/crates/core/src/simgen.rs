//! Synthetic grouped functional data.
//!
//! Curves follow a truncated Karhunen-Loève expansion
//!
//! ```text
//! X(s) = Σ_k √2 / ((k - ½)π) · Z_k · sin((k - ½)πs)
//! ```
//!
//! with Gaussian or t₂ coefficients, i.e. a Brownian-motion-like process or its
//! heavy-tailed analogue. Group 1 has no mean shift; every later group gets
//! `μ(s)` added. Measurement noise is white or stationary AR(1) with unit
//! variance.
//!
//! Random streams: every dataset is generated from one `ChaCha20Rng`, keyed
//! by a 64-bit seed and a stream number (the replicate index in Monte Carlo
//! runs), so parallel and serial runs draw identical data.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::curves::CurveSet;
use crate::error::{Error, Result};
use crate::special::CompensatedSum;

pub const DEFAULT_BASIS_SIZE: usize = 1000;
pub const DEFAULT_AR1_RHO: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoeffDist {
    #[default]
    Gaussian,
    #[serde(rename = "t2")]
    StudentT2,
}

impl CoeffDist {
    pub fn label(self) -> &'static str {
        match self {
            CoeffDist::Gaussian => "gaussian",
            CoeffDist::StudentT2 => "t2",
        }
    }

    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            CoeffDist::Gaussian => rng.sample(StandardNormal),
            // t₂ = N(0,1) / √(χ²₂ / 2), and χ²₂ / 2 is Exp(1)
            CoeffDist::StudentT2 => {
                let z: f64 = rng.sample(StandardNormal);
                let e: f64 = rng.sample(Exp1);
                z / e.sqrt()
            }
        }
    }
}

impl std::str::FromStr for CoeffDist {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "gaussian" | "normal" | "g" => Ok(CoeffDist::Gaussian),
            "t2" | "t" => Ok(CoeffDist::StudentT2),
            other => Err(format!("unknown coefficient distribution '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanFn {
    /// `ξ s`
    #[default]
    Mu1,
    /// `ξ 4s(1-s)`
    Mu2,
    /// Beta(2,6) density bump rescaled to peak at `ξ` (at `s = 1/6`).
    Mu3,
    None,
}

impl MeanFn {
    pub fn label(self) -> &'static str {
        match self {
            MeanFn::Mu1 => "mu1",
            MeanFn::Mu2 => "mu2",
            MeanFn::Mu3 => "mu3",
            MeanFn::None => "none",
        }
    }
}

impl std::str::FromStr for MeanFn {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "mu1" => Ok(MeanFn::Mu1),
            "mu2" => Ok(MeanFn::Mu2),
            "mu3" => Ok(MeanFn::Mu3),
            "none" => Ok(MeanFn::None),
            other => Err(format!("unknown mean function '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum NoiseModel {
    None,
    White,
    #[serde(rename = "ar1")]
    Ar1 {
        #[serde(default = "default_rho")]
        rho: f64,
    },
}

fn default_rho() -> f64 {
    DEFAULT_AR1_RHO
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::ar1()
    }
}

impl NoiseModel {
    pub fn ar1() -> Self {
        NoiseModel::Ar1 {
            rho: DEFAULT_AR1_RHO,
        }
    }

    pub fn label(&self) -> String {
        match self {
            NoiseModel::None => "none".into(),
            NoiseModel::White => "white".into(),
            NoiseModel::Ar1 { rho } => format!("ar1({rho})"),
        }
    }

    fn validate(&self) -> Result<()> {
        if let NoiseModel::Ar1 { rho } = self {
            // also rejects NaN
            if rho.is_nan() || rho.abs() >= 1.0 {
                return Err(Error::invalid(format!(
                    "AR(1) rho must lie in (-1, 1), got {rho}"
                )));
            }
        }
        Ok(())
    }
}

impl std::str::FromStr for NoiseModel {
    type Err = String;

    /// `none`, `white`, `ar1` or `ar1:<rho>`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "none" => Ok(NoiseModel::None),
            "white" => Ok(NoiseModel::White),
            "ar1" => Ok(NoiseModel::ar1()),
            other => match other.strip_prefix("ar1:") {
                Some(rho) => rho
                    .parse::<f64>()
                    .map(|rho| NoiseModel::Ar1 { rho })
                    .map_err(|e| format!("bad AR(1) rho '{rho}': {e}")),
                None => Err(format!("unknown noise model '{other}'")),
            },
        }
    }
}

/// One simulated design cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_per_group: Vec<usize>,
    pub grid_size: usize,
    #[serde(default = "default_basis_size")]
    pub basis_size: usize,
    #[serde(default)]
    pub coeff_dist: CoeffDist,
    #[serde(default)]
    pub mean_fn: MeanFn,
    #[serde(default)]
    pub xi: f64,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub seed: u64,
}

fn default_basis_size() -> usize {
    DEFAULT_BASIS_SIZE
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_per_group: vec![10, 10],
            grid_size: 40,
            basis_size: DEFAULT_BASIS_SIZE,
            coeff_dist: CoeffDist::Gaussian,
            mean_fn: MeanFn::Mu1,
            xi: 0.0,
            noise: NoiseModel::ar1(),
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_per_group.len() < 2 {
            return Err(Error::invalid("need at least 2 groups"));
        }
        if self.n_per_group.contains(&0) {
            return Err(Error::invalid("every group needs at least one curve"));
        }
        if self.grid_size == 0 {
            return Err(Error::invalid("grid size must be positive"));
        }
        if self.basis_size == 0 {
            return Err(Error::invalid("basis size must be positive"));
        }
        if !(self.xi >= 0.0 && self.xi.is_finite()) {
            return Err(Error::invalid(format!(
                "xi must be finite and ≥ 0, got {}",
                self.xi
            )));
        }
        self.noise.validate()
    }
}

/// Equally spaced grid `k/S`, `k = 1..=S`, on the unit interval.
pub fn unit_grid(len: usize) -> Vec<f64> {
    (1..=len).map(|k| k as f64 / len as f64).collect()
}

/// Frequency `(k - ½)π` of the k-th basis term (1-based).
fn frequency(k: usize) -> f64 {
    (k as f64 - 0.5) * std::f64::consts::PI
}

/// Karhunen-Loève sum at each grid point for the given coefficients.
pub fn eigen_curve(coeffs: &[f64], grid: &[f64]) -> Vec<f64> {
    grid.iter()
        .map(|&s| {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, &z)| {
                    let w = frequency(k + 1);
                    std::f64::consts::SQRT_2 / w * z * (w * s).sin()
                })
                .collect::<CompensatedSum>()
                .value()
        })
        .collect()
}

/// Basis functions tabulated on a fixed grid, `K × S`.
#[derive(Debug, Clone)]
pub struct KlBasis {
    table: DMatrix<f64>,
}

impl KlBasis {
    pub fn new(basis_size: usize, grid: &[f64]) -> Self {
        let table = DMatrix::from_fn(basis_size, grid.len(), |k, j| {
            let w = frequency(k + 1);
            std::f64::consts::SQRT_2 / w * (w * grid[j]).sin()
        });
        Self { table }
    }

    pub fn basis_size(&self) -> usize {
        self.table.nrows()
    }

    /// Same values as [`eigen_curve`], using the tabulated basis.
    pub fn curve_into(&self, coeffs: &[f64], out: &mut [f64]) {
        for (j, slot) in out.iter_mut().enumerate() {
            let col = self.table.column(j);
            *slot = coeffs
                .iter()
                .zip(col.iter())
                .map(|(z, b)| z * b)
                .collect::<CompensatedSum>()
                .value();
        }
    }
}

/// Normalizing constant `1 / ((1/6)(5/6)^5)` so that μ₃ peaks at ξ.
fn mu3_scale() -> f64 {
    1.0 / ((1.0 / 6.0) * (5.0f64 / 6.0).powi(5))
}

pub fn mean_fn(kind: MeanFn, s: f64, xi: f64) -> f64 {
    match kind {
        MeanFn::Mu1 => xi * s,
        MeanFn::Mu2 => xi * 4.0 * s * (1.0 - s),
        // B(2,6)⁻¹ s(1-s)⁵ divided by its maximum m
        MeanFn::Mu3 => xi * mu3_scale() * s * (1.0 - s).powi(5),
        MeanFn::None => 0.0,
    }
}

/// Measurement noise for one curve.
pub fn noise_vector<R: Rng + ?Sized>(model: &NoiseModel, len: usize, rng: &mut R) -> Vec<f64> {
    let mut out = vec![0.0; len];
    fill_noise(model, &mut out, rng);
    out
}

fn fill_noise<R: Rng + ?Sized>(model: &NoiseModel, out: &mut [f64], rng: &mut R) {
    match *model {
        NoiseModel::None => out.fill(0.0),
        NoiseModel::White => {
            for v in out.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
        }
        NoiseModel::Ar1 { rho } => {
            let innovation_sd = (1.0 - rho * rho).sqrt();
            let mut prev = 0.0;
            for (t, v) in out.iter_mut().enumerate() {
                let eta: f64 = rng.sample(StandardNormal);
                prev = if t == 0 {
                    eta
                } else {
                    rho * prev + innovation_sd * eta
                };
                *v = prev;
            }
        }
    }
}

/// RNG for stream `stream` of master seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generates a dataset from `config.seed`, stream 0.
pub fn generate_dataset(config: &SimConfig) -> Result<CurveSet> {
    config.validate()?;
    let grid = unit_grid(config.grid_size);
    let basis = KlBasis::new(config.basis_size, &grid);
    let mut rng = stream_rng(config.seed, 0);
    generate_with(config, &grid, &basis, &mut rng)
}

/// Generates a dataset with a caller-supplied grid, basis table and RNG.
///
/// Draw order: subjects in group order; per subject all `K` coefficients, then
/// `S` noise values.
pub fn generate_with<R: Rng + ?Sized>(
    config: &SimConfig,
    grid: &[f64],
    basis: &KlBasis,
    rng: &mut R,
) -> Result<CurveSet> {
    config.validate()?;
    if grid.len() != config.grid_size || basis.table.ncols() != grid.len() {
        return Err(Error::invalid(
            "grid and basis table disagree with the config",
        ));
    }
    let n: usize = config.n_per_group.iter().sum();
    let s = grid.len();
    let shift: Vec<f64> = grid
        .iter()
        .map(|&t| mean_fn(config.mean_fn, t, config.xi))
        .collect();

    let mut values = DMatrix::zeros(n, s);
    let mut groups = Vec::with_capacity(n);
    let mut coeffs = vec![0.0; basis.basis_size()];
    let mut curve = vec![0.0; s];
    let mut noise = vec![0.0; s];
    let mut row = 0;
    for (g, &size) in config.n_per_group.iter().enumerate() {
        for _ in 0..size {
            for c in coeffs.iter_mut() {
                *c = config.coeff_dist.sample(rng);
            }
            basis.curve_into(&coeffs, &mut curve);
            fill_noise(&config.noise, &mut noise, rng);
            for j in 0..s {
                let mu = if g == 0 { 0.0 } else { shift[j] };
                values[(row, j)] = curve[j] + mu + noise[j];
            }
            groups.push(g + 1);
            row += 1;
        }
    }
    CurveSet::new(values, grid.to_vec(), groups)
}
