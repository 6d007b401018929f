//! Monte Carlo type-I error and power experiments.
//!
//! A grid expands into cells (coefficient law × mean function × group sizes ×
//! grid size × ξ × summary). Replicate `r` of a cell draws its data from
//! stream `r` of a cell seed derived from the master seed and the
//! data-generating factors other than ξ and the mean function. Cells that
//! differ only in ξ therefore share random numbers, and the ξ = 0 power cell
//! reproduces the matching type-I cell exactly. Every configured summary is
//! evaluated on the same replicate datasets.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::CurveSet;
use crate::error::{Error, Result};
use crate::preprocess::fpca_smooth;
use crate::rank_tests::{test_scores, DoublyRankedConfig, Method};
use crate::ranking::rank_curves;
use crate::simgen::{
    generate_with, stream_rng, unit_grid, CoeffDist, KlBasis, MeanFn, NoiseModel, SimConfig,
};
use crate::summaries::{summarize, SummaryKind};

pub const DEFAULT_TYPE1_REPLICATES: usize = 2000;
pub const DEFAULT_POWER_REPLICATES: usize = 300;
pub const FULL_SCALE_TYPE1_REPLICATES: usize = 10_000;
pub const FULL_SCALE_POWER_REPLICATES: usize = 500;
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Version string written to every result record.
pub const SOFTWARE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// `0, 0.12, …, 3.0`.
pub fn default_xi_values() -> Vec<f64> {
    (0..=25)
        .map(|i| (i as f64 * 0.12 * 100.0).round() / 100.0)
        .collect()
}

pub fn default_mww_schemes() -> Vec<Vec<usize>> {
    vec![vec![10, 10], vec![25, 25], vec![50, 50]]
}

pub fn default_kw_schemes() -> Vec<Vec<usize>> {
    vec![vec![10, 10, 10], vec![25, 25, 25], vec![50, 50, 50]]
}

/// Factor levels and Monte Carlo settings for an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentGrid {
    /// Template for basis size, noise model and master seed.
    pub base: SimConfig,
    pub s_values: Vec<usize>,
    pub n_schemes: Vec<Vec<usize>>,
    pub coeff_dists: Vec<CoeffDist>,
    pub mean_fns: Vec<MeanFn>,
    pub xi_values: Vec<f64>,
    pub replicates: usize,
    pub alpha: f64,
    pub summaries: Vec<SummaryKind>,
    /// FPCA pve applied to every replicate before ranking.
    pub preprocess: Option<f64>,
    /// Worker count; `None` uses rayon's global default.
    pub threads: Option<usize>,
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        Self {
            base: SimConfig::default(),
            s_values: vec![40, 120, 360],
            n_schemes: default_mww_schemes(),
            coeff_dists: vec![CoeffDist::Gaussian],
            mean_fns: vec![MeanFn::Mu1],
            xi_values: default_xi_values(),
            replicates: DEFAULT_TYPE1_REPLICATES,
            alpha: DEFAULT_ALPHA,
            summaries: vec![SummaryKind::Sufficient, SummaryKind::AverageRank],
            preprocess: None,
            threads: None,
        }
    }
}

impl ExperimentGrid {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::invalid("replicates must be ≥ 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!(
                "alpha must be in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.s_values.is_empty()
            || self.n_schemes.is_empty()
            || self.coeff_dists.is_empty()
            || self.mean_fns.is_empty()
            || self.summaries.is_empty()
        {
            return Err(Error::invalid("every factor needs at least one level"));
        }
        if self.threads == Some(0) {
            return Err(Error::invalid("threads must be ≥ 1"));
        }
        if let Some(pve) = self.preprocess {
            if !(pve > 0.0 && pve <= 1.0) {
                return Err(Error::invalid(format!("pve must be in (0, 1], got {pve}")));
            }
        }
        for &s in &self.s_values {
            for n in &self.n_schemes {
                self.sim_config(s, n, CoeffDist::Gaussian, MeanFn::None, 0.0)
                    .validate()?;
            }
        }
        Ok(())
    }

    fn sim_config(
        &self,
        s: usize,
        n: &[usize],
        dist: CoeffDist,
        mean: MeanFn,
        xi: f64,
    ) -> SimConfig {
        SimConfig {
            n_per_group: n.to_vec(),
            grid_size: s,
            coeff_dist: dist,
            mean_fn: mean,
            xi,
            ..self.base.clone()
        }
    }

    /// Parses a TOML grid description; see [`GridFile`] for the keys.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        GridFile::from_toml_str(text)?.into_grid()
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        GridFile::from_toml_file(path)?.into_grid()
    }
}

/// On-disk grid description. Every key is optional.
///
/// ```toml
/// seed = 20240101
/// replicates = 2000
/// alpha = 0.05
/// basis_size = 1000
/// noise = "ar1"            # none | white | ar1 | ar1:<rho>
/// s_values = [40, 120, 360]
/// n_schemes = [[10, 10], [25, 25], [50, 50]]
/// coeff_dists = ["gaussian", "t2"]
/// mean_fns = ["mu1"]
/// xi_values = [0.0, 0.12, 0.24]
/// summaries = ["suff", "avg"]
/// preprocess = 0.99        # omit for raw curves
/// threads = 8
/// ```
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub seed: Option<u64>,
    pub replicates: Option<usize>,
    pub alpha: Option<f64>,
    pub basis_size: Option<usize>,
    pub noise: Option<String>,
    pub s_values: Option<Vec<usize>>,
    pub n_schemes: Option<Vec<Vec<usize>>>,
    pub coeff_dists: Option<Vec<String>>,
    pub mean_fns: Option<Vec<String>>,
    pub xi_values: Option<Vec<f64>>,
    pub summaries: Option<Vec<String>>,
    pub preprocess: Option<f64>,
    pub threads: Option<usize>,
}

fn parse_all<T: std::str::FromStr<Err = String>>(items: &[String]) -> Result<Vec<T>> {
    items
        .iter()
        .map(|s| s.parse::<T>().map_err(Error::InvalidInput))
        .collect()
}

impl GridFile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::invalid(format!("grid config: {e}")))
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| Error::Format {
            path: path.to_owned(),
            message: e.to_string(),
        })
    }

    /// Applies defaults for unset keys and validates.
    pub fn into_grid(self) -> Result<ExperimentGrid> {
        let mut grid = ExperimentGrid::default();
        if let Some(seed) = self.seed {
            grid.base.seed = seed;
        }
        if let Some(k) = self.basis_size {
            grid.base.basis_size = k;
        }
        if let Some(noise) = self.noise {
            grid.base.noise = noise.parse().map_err(Error::InvalidInput)?;
        }
        if let Some(r) = self.replicates {
            grid.replicates = r;
        }
        if let Some(a) = self.alpha {
            grid.alpha = a;
        }
        if let Some(v) = self.s_values {
            grid.s_values = v;
        }
        if let Some(v) = self.n_schemes {
            grid.n_schemes = v;
        }
        if let Some(v) = self.coeff_dists {
            grid.coeff_dists = parse_all(&v)?;
        }
        if let Some(v) = self.mean_fns {
            grid.mean_fns = parse_all(&v)?;
        }
        if let Some(v) = self.xi_values {
            grid.xi_values = v;
        }
        if let Some(v) = self.summaries {
            grid.summaries = parse_all(&v)?;
        }
        grid.preprocess = self.preprocess;
        grid.threads = self.threads;
        grid.validate()?;
        Ok(grid)
    }
}

/// Factor combination of one result cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub coeff_dist: CoeffDist,
    pub mean_fn: MeanFn,
    pub noise: NoiseModel,
    pub xi: f64,
    pub grid_size: usize,
    pub basis_size: usize,
    pub n_per_group: Vec<usize>,
    pub summary: SummaryKind,
    pub preprocess: Option<f64>,
    pub alpha: f64,
}

impl Cell {
    /// `"mww"` for two groups, `"kw"` otherwise.
    pub fn test_name(&self) -> &'static str {
        if self.n_per_group.len() == 2 {
            "mww"
        } else {
            "kw"
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: Cell,
    pub rejection_rate: f64,
    pub replicates_used: usize,
    pub mc_stderr: f64,
    /// Seed of the cell's replicate streams.
    pub seed: u64,
}

/// Binomial standard error `√(p(1-p)/R)`.
pub fn mc_stderr(rate: f64, replicates: usize) -> f64 {
    (rate * (1.0 - rate) / replicates as f64).sqrt()
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Stable seed for a data-generating cell.
fn cell_seed(master: u64, config: &SimConfig) -> u64 {
    let noise_word = match config.noise {
        NoiseModel::None => 0,
        NoiseModel::White => 1,
        NoiseModel::Ar1 { rho } => 2 ^ rho.to_bits().rotate_left(8),
    };
    let dist_word = match config.coeff_dist {
        CoeffDist::Gaussian => 0,
        CoeffDist::StudentT2 => 1,
    };
    let mut words = vec![
        dist_word,
        noise_word,
        config.grid_size as u64,
        config.basis_size as u64,
    ];
    words.push(config.n_per_group.len() as u64);
    words.extend(config.n_per_group.iter().map(|&n| n as u64));
    words
        .into_iter()
        .fold(splitmix64(master), |h, w| splitmix64(h ^ w))
}

/// Rejection decisions for one replicate, one per summary.
fn run_replicate(
    config: &SimConfig,
    grid: &[f64],
    basis: &KlBasis,
    seed: u64,
    replicate: usize,
    exp: &ExperimentGrid,
) -> Result<Vec<bool>> {
    let mut rng = stream_rng(seed, replicate as u64);
    let data = generate_with(config, grid, basis, &mut rng)?;
    let data: CurveSet = match exp.preprocess {
        Some(pve) => fpca_smooth(&data, pve)?.into_curves(&data)?,
        None => data,
    };
    let ranks = rank_curves(&data)?;
    exp.summaries
        .iter()
        .map(|&summary| {
            let scores = summarize(&ranks, summary).scores;
            let cfg = DoublyRankedConfig {
                summary,
                ..DoublyRankedConfig::default()
            };
            let result = test_scores(&data, &scores, &cfg)?;
            debug_assert!(matches!(
                result.method,
                Method::MwwExact | Method::MwwNormal | Method::KwChiSq
            ));
            Ok(result.p_value <= exp.alpha)
        })
        .collect()
}

fn run_cells(exp: &ExperimentGrid, xi_values: &[f64]) -> Result<Vec<CellResult>> {
    exp.validate()?;
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = exp.threads {
            b = b.num_threads(t);
        }
        b.build()
            .map_err(|e| Error::invalid(format!("cannot build worker pool: {e}")))?
    };

    let mut out = Vec::new();
    for &dist in &exp.coeff_dists {
        for &mean in &exp.mean_fns {
            for n in &exp.n_schemes {
                for &s in &exp.s_values {
                    let grid = unit_grid(s);
                    let basis = KlBasis::new(exp.base.basis_size, &grid);
                    let mut block: Vec<Vec<CellResult>> = vec![Vec::new(); exp.summaries.len()];
                    for &xi in xi_values {
                        let config = exp.sim_config(s, n, dist, mean, xi);
                        let seed = cell_seed(exp.base.seed, &config);
                        let decisions: Vec<Vec<bool>> = pool.install(|| {
                            (0..exp.replicates)
                                .into_par_iter()
                                .map(|r| {
                                    run_replicate(&config, &grid, &basis, seed, r, exp).map_err(|e| {
                                        Error::invalid(format!(
                                            "replicate {r} (seed {seed}, {} S={s} n={n:?} xi={xi}): {e}",
                                            dist.label()
                                        ))
                                    })
                                })
                                .collect::<Result<Vec<_>>>()
                        })?;
                        for (k, &summary) in exp.summaries.iter().enumerate() {
                            let rejections = decisions.iter().filter(|d| d[k]).count();
                            let rate = rejections as f64 / exp.replicates as f64;
                            block[k].push(CellResult {
                                cell: Cell {
                                    coeff_dist: dist,
                                    mean_fn: mean,
                                    noise: exp.base.noise,
                                    xi,
                                    grid_size: s,
                                    basis_size: exp.base.basis_size,
                                    n_per_group: n.clone(),
                                    summary,
                                    preprocess: exp.preprocess,
                                    alpha: exp.alpha,
                                },
                                rejection_rate: rate,
                                replicates_used: exp.replicates,
                                mc_stderr: mc_stderr(rate, exp.replicates),
                                seed,
                            });
                        }
                    }
                    out.extend(block.into_iter().flatten());
                }
            }
        }
    }
    Ok(out)
}

/// Type-I error at ξ = 0 for every cell of the grid (`xi_values` ignored).
pub fn run_type1(exp: &ExperimentGrid) -> Result<Vec<CellResult>> {
    run_cells(exp, &[0.0])
}

/// Rejection rates over `xi_values`; rows for one power curve are contiguous
/// and ordered by ξ.
pub fn run_power(exp: &ExperimentGrid) -> Result<Vec<CellResult>> {
    if exp.xi_values.is_empty() {
        return Err(Error::invalid("power runs need at least one xi value"));
    }
    if let Some(bad) = exp
        .xi_values
        .iter()
        .find(|x| !(**x >= 0.0 && x.is_finite()))
    {
        return Err(Error::invalid(format!(
            "xi values must be finite and ≥ 0, got {bad}"
        )));
    }
    run_cells(exp, &exp.xi_values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResultFormat {
    Csv,
    Jsonl,
}

impl std::str::FromStr for ResultFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ResultFormat::Csv),
            "jsonl" => Ok(ResultFormat::Jsonl),
            other => Err(format!(
                "unknown result format '{other}' (expected csv or jsonl)"
            )),
        }
    }
}

/// Flat row written by [`write_results`]. Column order is fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub test: String,
    pub coeff_dist: String,
    pub mean_fn: String,
    pub noise: String,
    pub rho: Option<f64>,
    pub xi: f64,
    pub grid_size: usize,
    pub basis_size: usize,
    /// Group sizes joined by `;`.
    pub n_per_group: String,
    pub summary: String,
    pub preprocess: Option<f64>,
    pub alpha: f64,
    pub replicates: usize,
    pub rejection_rate: f64,
    pub mc_stderr: f64,
    pub seed: u64,
    pub version: String,
}

impl From<&CellResult> for ResultRecord {
    fn from(r: &CellResult) -> Self {
        let c = &r.cell;
        let (noise, rho) = match c.noise {
            NoiseModel::None => ("none", None),
            NoiseModel::White => ("white", None),
            NoiseModel::Ar1 { rho } => ("ar1", Some(rho)),
        };
        ResultRecord {
            test: c.test_name().into(),
            coeff_dist: c.coeff_dist.label().into(),
            mean_fn: c.mean_fn.label().into(),
            noise: noise.into(),
            rho,
            xi: c.xi,
            grid_size: c.grid_size,
            basis_size: c.basis_size,
            n_per_group: c
                .n_per_group
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(";"),
            summary: c.summary.label().into(),
            preprocess: c.preprocess,
            alpha: c.alpha,
            replicates: r.replicates_used,
            rejection_rate: r.rejection_rate,
            mc_stderr: r.mc_stderr,
            seed: r.seed,
            version: SOFTWARE_VERSION.into(),
        }
    }
}

const CSV_HEADER: [&str; 17] = [
    "test",
    "coeff_dist",
    "mean_fn",
    "noise",
    "rho",
    "xi",
    "grid_size",
    "basis_size",
    "n_per_group",
    "summary",
    "preprocess",
    "alpha",
    "replicates",
    "rejection_rate",
    "mc_stderr",
    "seed",
    "version",
];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_owned(),
        source,
    }
}

fn fmt_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Format {
        path: path.to_owned(),
        message: e.to_string(),
    }
}

pub fn write_results(results: &[CellResult], path: &Path, format: ResultFormat) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    match format {
        ResultFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(&mut out);
            w.write_record(CSV_HEADER).map_err(|e| fmt_err(path, e))?;
            for r in results {
                w.serialize(ResultRecord::from(r))
                    .map_err(|e| fmt_err(path, e))?;
            }
            w.flush().map_err(io_err(path))?;
        }
        ResultFormat::Jsonl => {
            for r in results {
                serde_json::to_writer(&mut out, &ResultRecord::from(r))
                    .map_err(|e| fmt_err(path, e))?;
                out.write_all(b"\n").map_err(io_err(path))?;
            }
        }
    }
    out.flush().map_err(io_err(path))
}

pub fn read_results(path: &Path, format: ResultFormat) -> Result<Vec<ResultRecord>> {
    let file = File::open(path).map_err(io_err(path))?;
    match format {
        ResultFormat::Csv => {
            let mut r = csv::Reader::from_reader(file);
            r.deserialize()
                .collect::<std::result::Result<Vec<ResultRecord>, _>>()
                .map_err(|e| fmt_err(path, e))
        }
        ResultFormat::Jsonl => BufReader::new(file)
            .lines()
            .filter(|l| !matches!(l, Ok(s) if s.trim().is_empty()))
            .map(|line| {
                let line = line.map_err(io_err(path))?;
                serde_json::from_str(&line).map_err(|e| fmt_err(path, e))
            })
            .collect(),
    }
}
